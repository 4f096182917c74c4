//! The named scenarios. Each writes its CSV artifacts into the output directory and
//! fills in a [`Report`].

use std::path::Path;

use serde_json::json;

use super::config::{DataKind, RunConfig, Scenario};
use super::report::{to_value, Assertion, Report};
use crate::compat::{check_compatibility, Branches, CauchyTrace, CompatTolerance, MAX_EXTENSION_ORDER};
use crate::composite::{demonstrate_failure_mode, solve_linear_mixed, verify_estimate};
use crate::elliptic::{continue_to_degenerate, EllipticProblem};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::{manufacture_linear, CoefficientSet, ScalarField};
use crate::geometry::{build_region_map, orientation_check, spacelike_check, CornerCurve, DomainSpec, Grid2D, Label, RegionMap};
use crate::hyperbolic::{solve_degenerate, EnergyLedger, HyperbolicProblem};
use crate::nashmoser::{self, NashMoserConfig};
use crate::verify;

/// Runs the configured scenario. Scenario errors are recorded in the report and
/// returned alongside it; only failures to write the report itself are `Err`.
pub fn run(cfg: &RunConfig) -> Result<(Report, Option<Error>)> {
    std::fs::create_dir_all(&cfg.out)?;
    let mut report = Report::new(cfg.scenario.name(), cfg.echo.clone());
    let outcome = match cfg.scenario {
        Scenario::EllipticOnly => elliptic_only(cfg, &mut report),
        Scenario::HyperbolicOnly => hyperbolic_only(cfg, &mut report),
        Scenario::CompositeLinear => composite_linear(cfg, &mut report),
        Scenario::Counterexample => counterexample(cfg, &mut report),
        Scenario::NashMoser => nash_moser(cfg, &mut report),
        Scenario::VerificationSuite => verification_suite(cfg, &mut report),
    };
    let err = outcome.err();
    if let Some(e) = &err {
        report.error = Some(e.into());
    }
    report.status = if report.all_pass() { "pass" } else { "fail" }.into();
    report.artifacts.sort();
    report.write(&cfg.out.join("report.json"))?;
    Ok((report, err))
}

fn artifact(report: &mut Report, out: &Path, name: &str) -> std::path::PathBuf {
    report.artifacts.push(name.into());
    out.join(name)
}

fn region_summary(region: &RegionMap) -> serde_json::Value {
    let labels = [Label::EllipticPlus, Label::HyperbolicUp, Label::HyperbolicDown, Label::Degenerate, Label::Exterior];
    let counts: serde_json::Map<String, serde_json::Value> = labels.iter().map(|&l| (l.name().to_string(), json!(region.count(l)))).collect();
    json!({ "counts": counts, "components": to_value(&region.components) })
}

fn setup(cfg: &RunConfig) -> Result<(DomainSpec, CoefficientSet, ScalarField, Grid2D)> {
    let spec = cfg.domain()?;
    spec.validate()?;
    let (coeffs, dirichlet) = cfg.problem()?;
    let grid = Grid2D::covering(spec.radius_outer, cfg.h)?;
    Ok((spec, coeffs, dirichlet, grid))
}

fn elliptic_only(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let (spec, coeffs, dirichlet, grid) = setup(cfg)?;
    let region = build_region_map(&spec, grid, |x, y| coeffs.k.eval(x, y))?;
    region.write_csv(&artifact(report, &cfg.out, "region_map.csv"))?;
    let mut ep = EllipticProblem::new(&spec, &region, &coeffs);
    ep.dirichlet = dirichlet;
    ep.delta_schedule = cfg.delta_schedule.clone();
    let sol = continue_to_degenerate(&ep)?;
    sol.u.write_csv(&artifact(report, &cfg.out, "u.csv"))?;
    let mut diag = json!({ "region": region_summary(&region), "elliptic": to_value(&sol.report()) });
    report.assertions.push(Assertion::holds("finite", sol.u.all_finite()));
    if let Some(exact) = cfg.exact()? {
        let err = verify::relative_l2_error(&sol.u, &exact, None);
        diag["relative_l2_error"] = json!(err);
        report.assertions.push(Assertion::at_most("relative_l2_error", err, cfg.error_bound));
    }
    report.diagnostics = diag;
    Ok(())
}

/// Cauchy data on the upper curve: from the exact or Dirichlet formula, or zero.
fn upper_trace(cfg: &RunConfig, spec: &DomainSpec, coeffs: &CoefficientSet) -> Result<CauchyTrace> {
    let kappa = spec.kappa_upper();
    let n = (spec.radius_outer / cfg.h).ceil() as usize + 2;
    let u = match cfg.data {
        DataKind::Zero => return Ok(CauchyTrace::zero(kappa, cfg.h, n, MAX_EXTENSION_ORDER)),
        DataKind::Expression => Expr::parse(&cfg.dirichlet)?,
        DataKind::Manufactured => cfg.exact()?.expect("manufactured data"),
    };
    let m = manufacture_linear(&u, coeffs)?;
    Ok(CauchyTrace::from_exprs(kappa.clone(), m.phi(&kappa), m.psi(&kappa), cfg.h, n, MAX_EXTENSION_ORDER))
}

fn hyperbolic_only(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let (spec, coeffs, _, grid) = setup(cfg)?;
    let trace = upper_trace(cfg, &spec, &coeffs)?;
    let mut p = HyperbolicProblem::new(grid, &coeffs, trace, 1.0, spec.radius_outer);
    p.epsilon_schedule = cfg.epsilon_schedule.clone();
    p.cfl = cfg.cfl;
    p.row_aligned = true;
    let sol = solve_degenerate(&p)?;
    sol.u.write_csv(&artifact(report, &cfg.out, "u.csv"))?;
    sol.energy.write_csv(&artifact(report, &cfg.out, "energy.csv"))?;
    let mut diag = json!({ "hyperbolic": to_value(&sol.report(1.0, coeffs.bounds.d)) });
    report.assertions.push(Assertion::holds("energy_finite", sol.energy.all_finite()));
    if let Some(exact) = cfg.exact()? {
        // compare on the inner disk, above the curve
        let upper = spec.kappa_upper();
        let r2 = spec.radius_inner * spec.radius_inner;
        let inside: Vec<bool> = (0..grid.len())
            .map(|q| {
                let (x, y) = grid.xy(q);
                x * x + y * y <= r2 && y >= upper.eval(x)
            })
            .collect();
        let err = verify::relative_l2_error(&sol.u, &exact, Some(&inside));
        diag["relative_l2_error"] = json!(err);
        report.assertions.push(Assertion::at_most("relative_l2_error", err, cfg.error_bound));
    }
    report.diagnostics = diag;
    Ok(())
}

fn composite_linear(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let (spec, coeffs, dirichlet, _) = setup(cfg)?;
    let run = solve_linear_mixed(&spec, &coeffs, dirichlet, &cfg.composite_options())?;
    run.region.write_csv(&artifact(report, &cfg.out, "region_map.csv"))?;
    run.u_global.write_csv(&artifact(report, &cfg.out, "u.csv"))?;
    let both = EnergyLedger { mu: run.energy[0].mu, levels: run.energy.iter().flat_map(|e| e.levels.iter().copied()).collect() };
    both.write_csv(&artifact(report, &cfg.out, "energy.csv"))?;
    let mut diag = json!({
        "region": region_summary(&run.region),
        "composite": to_value(&run.report()),
        "estimate": to_value(&verify_estimate(&run, 2)?),
    });
    match cfg.data {
        DataKind::Manufactured => {
            let exact = cfg.exact()?.expect("manufactured data");
            let err = verify::relative_l2_error(&run.u_global, &exact, None);
            diag["relative_l2_error"] = json!(err);
            report.assertions.push(Assertion::at_most("relative_l2_error", err, cfg.error_bound));
        }
        DataKind::Zero => report.assertions.push(Assertion::at_most("zero_propagation", run.u_global.max_abs(None), 1e-12)),
        DataKind::Expression => report.assertions.push(Assertion::holds("finite", run.u_global.all_finite())),
    }
    report.diagnostics = diag;
    Ok(())
}

fn counterexample(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let (spec, coeffs, _, grid) = setup(cfg)?;
    let region = build_region_map(&spec, grid, |x, y| coeffs.k.eval(x, y))?;
    region.write_csv(&artifact(report, &cfg.out, "region_map.csv"))?;
    let f = demonstrate_failure_mode(&spec, &coeffs, cfg.h, true)?;
    report.failure_mode = Some(f.failure_mode.clone());
    report.diagnostics = json!({ "region": region_summary(&region), "failure": to_value(&f) });
    Ok(())
}

fn nash_moser(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let problem = cfg.nonlinear()?;
    problem.check_lower_bound(1.0, 7)?;
    let nm = NashMoserConfig { h: cfg.h, cfl: cfg.cfl, ..cfg.nm.clone() };
    let state = nashmoser::solve(&problem, &nm)?;
    state.w.write_csv(&artifact(report, &cfg.out, "w.csv"))?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(artifact(report, &cfg.out, "u.csv"))?);
    use std::io::Write;
    writeln!(f, "x,y,value")?;
    for (x, y, u) in state.unscaled() {
        writeln!(f, "{x:e},{y:e},{u:e}")?;
    }
    f.flush()?;
    let r = state.report();
    report.assertions.push(Assertion::at_most("residual_decay", r.decay, cfg.nm_decay_bound));
    report.diagnostics = json!({ "nash_moser": to_value(&r) });
    Ok(())
}

/// Compact run of the property checks at the configured resolution.
fn verification_suite(cfg: &RunConfig, report: &mut Report) -> Result<()> {
    let h = cfg.h;
    let mut diag = serde_json::Map::new();
    let mut check = |a: Assertion| report.assertions.push(a);

    // manufactured composite solve, and the corner gradient it extracts
    let spec = DomainSpec::diagonals(1.0, std::f64::consts::SQRT_2);
    let opts = crate::composite::CompositeOptions { h, ..Default::default() };
    let exact = Expr::parse(super::config::MANUFACTURED[0].1)?;
    let coeffs = CoefficientSet::tricomi_cross();
    let m = manufacture_linear(&exact, &coeffs)?;
    let run = solve_linear_mixed(&spec, &coeffs.clone().with_f(m.f.clone()), m.g.clone().into(), &opts)?;
    let err = verify::relative_l2_error(&run.u_global, &exact, None);
    check(Assertion::at_most("manufactured_relative_l2_error", err, 0.01));
    let el = run.report().elliptic;
    let psi0 = el.trace_upper.psi0.abs().max(el.trace_lower.psi0.abs());
    check(Assertion::at_most("corner_gradient_psi0", psi0, 1e-6 * run.scale));
    diag.insert("manufactured".into(), json!({ "relative_l2_error": err, "psi0": psi0, "scale": run.scale }));

    // zero data stays zero
    let zero = solve_linear_mixed(&spec, &coeffs, ScalarField::zero(), &opts)?;
    check(Assertion::at_most("zero_propagation", zero.u_global.max_abs(None), 1e-12));

    // first compatibility residual for kappa = |x|, phi = 0, psi = 0.3
    let n = (1.0 / h) as usize;
    let trace = CauchyTrace::from_samples(
        CornerCurve::abs_slope(1.0),
        h,
        Branches::new(vec![0.0; n + 1], vec![0.0; n + 1]),
        Branches::new(vec![0.3; n + 1], vec![0.3; n + 1]),
        4,
        None,
    );
    let c = check_compatibility(&trace, &coeffs, 1, &CompatTolerance::default())?;
    check(Assertion::at_most("compat_identity", (c.residuals[0] - 0.6).abs(), 1e-14));

    // orientation and space-like gates
    let grid = Grid2D::covering(spec.radius_outer, h)?;
    let reversed = CoefficientSet::reversed();
    let rev = orientation_check(&build_region_map(&spec, grid, |x, y| reversed.k.eval(x, y))?);
    let cross = orientation_check(&build_region_map(&spec, grid, |x, y| coeffs.k.eval(x, y))?);
    let sl = spacelike_check(&CornerCurve::abs_slope(1.0), |_, _| 1.0, |_, _| 1.0, 0.5, 1.0);
    check(Assertion::holds("reversed_rejected", !rev.pass));
    check(Assertion::holds("tricomi_cross_oriented", cross.pass));
    check(Assertion::holds("characteristic_rejected", !sl.pass));

    // energy
    let stable = verify::flat_wave_march(h, 0.8, 0.4)?;
    check(Assertion::at_most("energy_spread_cfl_0.8", stable.energy.spread(), 10.0));
    let unstable = verify::flat_wave_march(h.min(1.0 / 128.0), 1.2, 0.8);
    check(Assertion::holds("instability_flag_cfl_1.2", matches!(unstable, Err(Error::InstabilityDetected { .. }))));

    // linearization and transform
    let g = verify::gradient_check(cfg.seed, 5, 0.1, 1.0 / 32.0)?;
    let worst = g.slopes.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
    check(Assertion::at_most("gradient_slope_deviation", worst, 0.1));
    diag.insert("gradient".into(), to_value(&g));
    check(Assertion::at_most("det_identity", verify::det_identity_defect(0.1, 1.0 / 32.0)?, 1e-10));
    let t0 = verify::transform_scaling(|_, _| 0.0, &[0.1], h)?;
    check(Assertion::at_most("transform_identity", t0.shift[0], 0.0));
    let ts = verify::transform_scaling(|x, y| 0.5 * x * x * y + x * y, &[0.1, 0.05, 0.025], h)?;
    let dev = ts.ratios.iter().map(|r| (r - 2.0).abs()).fold(0.0, f64::max);
    check(Assertion::at_most("transform_ratio_deviation", dev, 0.3));
    check(Assertion::at_most("transform_b12", ts.b12_max.iter().cloned().fold(0.0, f64::max), 5.0 * h * h));
    diag.insert("transform".into(), to_value(&ts));

    // smoothing
    let sm = verify::smoothing_constants(1.0 / 128.0, &[4.0, 8.0, 16.0], &[1.0, 2.0, 4.0, 8.0, 16.0, 24.0])?;
    let (sl_loss, sl_gain) = sm.spreads();
    check(Assertion::at_most("smoothing_loss_spread", sl_loss, 2.0));
    check(Assertion::at_most("smoothing_gain_spread", sl_gain, 2.0));
    diag.insert("smoothing".into(), to_value(&sm));

    // Nash-Moser decay
    let nm = NashMoserConfig { h, ..cfg.nm.clone() };
    let state = nashmoser::iterate(&cfg.nonlinear()?, &nm)?;
    check(Assertion::at_most("nash_moser_decay", state.decay(), cfg.nm_decay_bound));
    diag.insert("nash_moser".into(), to_value(&state.report()));

    report.diagnostics = serde_json::Value::Object(diag);
    Ok(())
}
