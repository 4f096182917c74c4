//! Acceptance criteria 1-13. Runs sequentially with the solvers pinned to one thread and
//! prints one PASS/FAIL line per criterion.

use std::time::Instant;

use mixtype::cli::{self, RunConfig};
use mixtype::compat::{check_compatibility, Branches, CauchyTrace, CompatTolerance, MAX_EXTENSION_ORDER};
use mixtype::composite::{refinement_stable, solve_linear_mixed, verify_estimate, CompositeOptions};
use mixtype::expr::Expr;
use mixtype::fields::{manufacture_linear, CoefficientSet, ScalarField};
use mixtype::geometry::{build_region_map, orientation_check, spacelike_check, CornerCurve, DomainSpec, Grid2D};
use mixtype::hyperbolic::{loss_ratio, solve_degenerate, HyperbolicProblem};
use mixtype::nashmoser::{iterate, NashMoserConfig, NonlinearProblem};
use mixtype::verify;
use mixtype::Error;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn spec() -> DomainSpec {
    DomainSpec::diagonals(1.0, std::f64::consts::SQRT_2)
}

fn single(h: f64) -> CompositeOptions {
    CompositeOptions { h, threads: Some(1), ..Default::default() }
}

fn manufactured_error(h: f64) -> Result<(f64, f64), Error> {
    let u = Expr::parse("(x^2 - y^2) * exp(x*y)")?;
    let c = CoefficientSet::tricomi_cross();
    let m = manufacture_linear(&u, &c)?;
    let run = solve_linear_mixed(&spec(), &c.with_f(m.f), m.g.into(), &single(h))?;
    let e = run.report().elliptic;
    let psi0 = e.trace_upper.psi0.abs().max(e.trace_lower.psi0.abs()) / run.scale;
    Ok((verify::relative_l2_error(&run.u_global, &u, None), psi0))
}

fn c1() -> Outcome {
    let t = Instant::now();
    let (e64, _) = manufactured_error(1.0 / 64.0).map_err(|e| e.to_string())?;
    let (e128, _) = manufactured_error(1.0 / 128.0).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let order = (e64 / e128).log2();
    ensure(
        e128 <= 0.01 && order >= 1.5 && secs <= 120.0,
        format!("rel L2 error {e128:.3e} at h = 1/128, order {order:.2}, {secs:.1} s"),
    )
}

fn c2() -> Outcome {
    let run = solve_linear_mixed(&spec(), &CoefficientSet::tricomi_cross(), ScalarField::zero(), &single(1.0 / 64.0)).map_err(|e| e.to_string())?;
    let m = run.u_global.max_abs(None);
    ensure(m <= 1e-12, format!("max |u| = {m:e}"))
}

fn c3() -> Outcome {
    let h = 1.0 / 64.0;
    let n = 64;
    let coeffs = CoefficientSet::tricomi_cross();
    let mut worst: f64 = 0.0;
    for psi0 in [0.3, -1.7, 2.5e-3, 40.0] {
        // psi linear along each branch, with the prescribed corner value
        let right: Vec<f64> = (0..=n).map(|k| psi0 + 0.5 * k as f64 * h).collect();
        let left: Vec<f64> = (0..=n).map(|k| psi0 - 0.25 * k as f64 * h).collect();
        let trace = CauchyTrace::from_samples(
            CornerCurve::abs_slope(1.0),
            h,
            Branches::new(vec![0.0; n + 1], vec![0.0; n + 1]),
            Branches::new(right, left),
            4,
            None,
        );
        let r = check_compatibility(&trace, &coeffs, 1, &CompatTolerance::default()).map_err(|e| e.to_string())?;
        let expect = 2.0 * f64::abs(psi0);
        worst = worst.max((r.residuals[0] - expect).abs() / expect);
    }
    let (_, psi0) = manufactured_error(1.0 / 64.0).map_err(|e| e.to_string())?;
    ensure(
        worst <= 4.0 * f64::EPSILON && psi0 <= 1e-6,
        format!("|r1 - 2|psi(0)|| / 2|psi(0)| <= {worst:e}; extracted |psi(0)| / scale = {psi0:e}"),
    )
}

fn c4() -> Outcome {
    let h = 1.0 / 64.0;
    let reversed = solve_linear_mixed(&spec(), &CoefficientSet::reversed(), ScalarField::zero(), &single(h));
    let rev_rejected = matches!(reversed, Err(Error::OrientationFailure { .. }));
    let grid = Grid2D::covering(spec().radius_outer, h).map_err(|e| e.to_string())?;
    let cross = CoefficientSet::tricomi_cross();
    let cross_ok = orientation_check(&build_region_map(&spec(), grid, |x, y| cross.k.eval(x, y)).map_err(|e| e.to_string())?).pass;
    // K = -1, a = 1 and kappa = |x|: a K' kappa_x^2 = 1 on both branches
    let kappa = CornerCurve::abs_slope(1.0);
    let sl = spacelike_check(&kappa, |_, _| 1.0, |_, _| 1.0, 0.5, 1.0);
    let trace = CauchyTrace::zero(kappa, h, 64, MAX_EXTENSION_ORDER);
    let strict = check_compatibility(&trace, &CoefficientSet::principal(-1.0), 2, &CompatTolerance::default());
    let char_rejected = !sl.pass && matches!(strict, Err(Error::CharacteristicCorner { .. }));
    ensure(
        rev_rejected && cross_ok && char_rejected,
        format!("reversed rejected: {rev_rejected}; tricomi_cross oriented: {cross_ok}; a K' kappa_x^2 = {} rejected: {char_rejected}", sl.sup),
    )
}

fn c5() -> Outcome {
    let stable = verify::flat_wave_march(1.0 / 128.0, 0.8, 0.4).map_err(|e| e.to_string())?;
    let spread = stable.energy.spread();
    let unstable = verify::flat_wave_march(1.0 / 128.0, 1.2, 0.8);
    let fired = matches!(unstable, Err(Error::InstabilityDetected { .. }));
    ensure(spread <= 10.0 && fired, format!("E max/min = {spread:.4} at CFL 0.8; InstabilityDetected at CFL 1.2: {fired}"))
}

fn c6() -> Outcome {
    let s = spec();
    let mut worst: f64 = 0.0;
    for k in 1..=4 {
        let mut ratios = Vec::new();
        for h in [1.0 / 64.0, 1.0 / 128.0] {
            let f = Expr::parse(&format!("cos({k}*x) * (y^2 - x^2)^2")).map_err(|e| e.to_string())?;
            let coeffs = CoefficientSet::tricomi_cross().with_f(f);
            let grid = Grid2D::covering(s.radius_outer, h).map_err(|e| e.to_string())?;
            let kappa = s.kappa_upper();
            let n = (s.radius_outer / h).ceil() as usize + 2;
            let trace = CauchyTrace::zero(kappa.clone(), h, n, MAX_EXTENSION_ORDER);
            let mut p = HyperbolicProblem::new(grid, &coeffs, trace, 1.0, s.radius_outer);
            p.row_aligned = true;
            let sol = solve_degenerate(&p).map_err(|e| e.to_string())?;
            let region: Vec<bool> = (0..grid.len())
                .map(|q| {
                    let (x, y) = grid.xy(q);
                    x * x + y * y <= 1.0 && y > kappa.eval(x)
                })
                .collect();
            ratios.push(loss_ratio(&sol.u, &p, 1, &region).map_err(|e| e.to_string())?);
        }
        if !ratios.iter().all(|r| r.is_finite() && *r > 0.0) {
            return Err(format!("k = {k}: ratios {ratios:?}"));
        }
        worst = worst.max((ratios[0] - ratios[1]).abs() / ratios[0].max(ratios[1]));
    }
    ensure(worst < 0.2, format!("largest drift between h = 1/64 and 1/128: {:.2}%", 100.0 * worst))
}

fn c7() -> Outcome {
    let c = CoefficientSet::tricomi_cross();
    let mut worst: f64 = 0.0;
    for g in ["exp(x*y)", "cos(x + 2*y)", "exp(x) * (1 + y^2)", "sin(2*x) + cos(y)"] {
        let u = Expr::parse(&format!("(x^2 - y^2) * ({g})")).map_err(|e| e.to_string())?;
        let m = manufacture_linear(&u, &c).map_err(|e| e.to_string())?;
        let mut rows = Vec::new();
        for h in [1.0 / 64.0, 1.0 / 128.0] {
            let run = solve_linear_mixed(&spec(), &c.clone().with_f(m.f.clone()), m.g.clone().into(), &single(h)).map_err(|e| e.to_string())?;
            rows.push(verify_estimate(&run, 2).map_err(|e| e.to_string())?);
        }
        if !refinement_stable(&rows[0], &rows[1], 0.2).iter().all(|&b| b) {
            return Err(format!("u = (x^2 - y^2)({g}): {:?} vs {:?}", rows[0], rows[1]));
        }
        for (a, b) in rows[0].iter().zip(&rows[1]) {
            worst = worst.max((a.ratio - b.ratio).abs() / a.ratio.max(b.ratio));
        }
    }
    ensure(true, format!("s = 0, 1, 2 ratios finite; largest drift {:.2}%", 100.0 * worst))
}

fn c8() -> Outcome {
    let g = verify::gradient_check(2024, 5, 0.1, 1.0 / 32.0).map_err(|e| e.to_string())?;
    let ok = g.slopes.iter().all(|s| (s - 1.0).abs() <= 0.1);
    ensure(ok, format!("slopes {:?}", g.slopes.iter().map(|s| format!("{s:.4}")).collect::<Vec<_>>()))
}

fn c9() -> Outcome {
    let d = verify::det_identity_defect(0.1, 1.0 / 32.0).map_err(|e| e.to_string())?;
    ensure(d <= 1e-10, format!("max node defect {d:e}"))
}

fn c10() -> Outcome {
    let h = 1.0 / 64.0;
    let eps = [0.1, 0.05, 0.025];
    let zero = verify::transform_scaling(|_, _| 0.0, &eps, h).map_err(|e| e.to_string())?;
    let mixed = verify::transform_scaling(|x, y| x * y, &eps, h).map_err(|e| e.to_string())?;
    let curved = verify::transform_scaling(|x, y| 0.5 * x * x * y + x * y + 0.3 * x * x, &eps, h).map_err(|e| e.to_string())?;
    let exact = zero.shift.iter().all(|&s| s == 0.0);
    let ratios: Vec<f64> = mixed.ratios.iter().chain(&curved.ratios).copied().collect();
    let ratios_ok = ratios.iter().all(|r| (r - 2.0).abs() <= 0.3);
    let b12 = mixed.b12_max.iter().chain(&curved.b12_max).fold(0.0f64, |m, &v| m.max(v));
    ensure(
        exact && ratios_ok && b12 <= 5.0 * h * h,
        format!("w = 0 exact: {exact}; ratios {:?}; max b12 {b12:.2e}", ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()),
    )
}

fn c11() -> Outcome {
    let s = verify::smoothing_constants(1.0 / 256.0, &[8.0, 16.0, 32.0], &[2.0, 4.0, 8.0, 16.0, 32.0, 48.0]).map_err(|e| e.to_string())?;
    let (loss, gain) = s.spreads();
    ensure(loss < 2.0 && gain < 2.0, format!("max/min over theta: loss constant {loss:.3}, gain constant {gain:.3}"))
}

fn c12() -> Outcome {
    let t = Instant::now();
    let cfg = NashMoserConfig { eps: 0.05, h: 1.0 / 64.0, max_levels: 3, target: 0.0, ..Default::default() };
    let state = iterate(&NonlinearProblem::unit_cross(), &cfg).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let n = &state.residual_norms;
    let decay = n[3] / n[0];
    ensure(
        n.len() == 4 && decay <= 0.1 && secs <= 600.0,
        format!("||F(w3)|| / ||F(w0)|| = {decay:.3e} (norms {:?}), {secs:.1} s", n.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()),
    )
}

fn c13() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut reports = Vec::new();
    for k in 0..2 {
        let mut cfg = RunConfig::default();
        cfg.set("run", "scenario", "verification-suite").map_err(|e| e.to_string())?;
        cfg.out = dir.path().join(format!("run{k}"));
        let (_, err) = cli::run(&cfg).map_err(|e| e.to_string())?;
        if let Some(e) = err {
            return Err(e.to_string());
        }
        let text = std::fs::read_to_string(cfg.out.join("report.json")).map_err(|e| e.to_string())?;
        reports.push(serde_json::from_str::<serde_json::Value>(&text).map_err(|e| e.to_string())?);
    }
    ensure(reports[0] == reports[1], "two verification-suite runs give identical report.json".into())
}

fn main() {
    // single-threaded solvers, as the runtime bounds are stated for one thread
    std::env::set_var("MIXTYPE_THREADS", "1");
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("manufactured composite solve", c1),
        ("zero propagation", c2),
        ("compatibility identity", c3),
        ("orientation and space-like gates", c4),
        ("energy stability", c5),
        ("loss-of-derivatives ratio", c6),
        ("estimate table", c7),
        ("linearization gradient check", c8),
        ("determinant identity", c9),
        ("transform correctness", c10),
        ("smoothing inequalities", c11),
        ("Nash-Moser decay", c12),
        ("determinism", c13),
    ];
    let mut failed = 0;
    for (n, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d}", n + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d}", n + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
