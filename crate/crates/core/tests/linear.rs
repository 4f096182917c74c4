//! Elliptic, compatibility, hyperbolic and composite stages of the linear solver.

use mixtype::compat::{check_compatibility, Branches, CauchyTrace, CompatTolerance, MAX_EXTENSION_ORDER};
use mixtype::composite::{demonstrate_failure_mode, solve_linear_mixed, verify_estimate, CompositeOptions};
use mixtype::elliptic::*;
use mixtype::expr::Expr;
use mixtype::fields::{manufacture_linear, CoefficientSet, GridFunction, ScalarField};
use mixtype::geometry::{build_region_map, CornerCurve, DomainSpec, Grid2D, RegionMap};
use mixtype::hyperbolic::{march, solve_degenerate, HyperbolicProblem};
use mixtype::verify::relative_l2_error;
use mixtype::Error;
use proptest::prelude::*;

fn spec() -> DomainSpec {
    DomainSpec::diagonals(1.0, std::f64::consts::SQRT_2)
}

fn region(s: &DomainSpec, c: &CoefficientSet, h: f64) -> RegionMap {
    build_region_map(s, Grid2D::covering(s.radius_outer, h).unwrap(), |x, y| c.k.eval(x, y)).unwrap()
}

fn opts(h: f64) -> CompositeOptions {
    CompositeOptions { h, threads: Some(2), ..Default::default() }
}

// ---- elliptic

#[test]
fn elliptic_zero_in_zero_out() {
    let s = spec();
    let c = CoefficientSet::tricomi_cross();
    let r = region(&s, &c, 1.0 / 32.0);
    let sol = continue_to_degenerate(&EllipticProblem::new(&s, &r, &c)).unwrap();
    assert_eq!(sol.u.max_abs(None), 0.0);
}

#[test]
fn comparison_principle() {
    let s = spec();
    let c = CoefficientSet::tricomi_cross().with_f(-1.0);
    let r = region(&s, &c, 1.0 / 32.0);
    let p = EllipticProblem::new(&s, &r, &c);
    for delta in default_delta_schedule() {
        let u = solve_regularized(&p, delta).unwrap();
        comparison_check(&u, 1e-10).unwrap();
        assert!(u.max_abs(None) > 0.0);
    }
}

#[test]
fn continuation_gaps_shrink() {
    let s = spec();
    let c = CoefficientSet::tricomi_cross().with_f(Expr::parse("cos(x) * y^2").unwrap());
    let r = region(&s, &c, 1.0 / 32.0);
    let mut p = EllipticProblem::new(&s, &r, &c);
    p.delta_schedule = vec![1e-2, 1e-3, 1e-4];
    let sol = continue_to_degenerate(&p).unwrap();
    let g = &sol.continuation_gap;
    assert_eq!(g.len(), 2);
    assert!(g[1] < g[0], "gaps {g:?}");
}

#[test]
fn elliptic_manufactured_second_order() {
    let s = spec();
    let u = Expr::parse("(x^2 - y^2) * exp(x + y)").unwrap();
    let m = manufacture_linear(&u, &CoefficientSet::tricomi_cross()).unwrap();
    let c = CoefficientSet::tricomi_cross().with_f(m.f);
    let err = |h: f64| {
        let r = region(&s, &c, h);
        let mut p = EllipticProblem::new(&s, &r, &c);
        p.dirichlet = m.g.clone().into();
        relative_l2_error(&continue_to_degenerate(&p).unwrap().u, &u, None)
    };
    let (e32, e64) = (err(1.0 / 32.0), err(1.0 / 64.0));
    let order = (e32 / e64).log2();
    assert!(e64 < 1e-2 && order > 1.5, "errors {e32:e}, {e64:e}");
}

#[test]
fn taylor_base_case() {
    // with a = 0 the k = 2 equation reads -2 c0 = f(0)
    let mut c = CoefficientSet::principal(0.0);
    c.a = ScalarField::zero();
    let t = taylor_correction(&c, &[vec![3.0]], 2, 1.0).unwrap();
    assert_eq!(t.coefficients.len(), 1);
    assert!((t.coefficients[0][0] + 1.5).abs() < 1e-14);
}

#[test]
fn taylor_higher_orders_solve() {
    let mut c = CoefficientSet::principal(0.0);
    c.a = ScalarField::parse("0.3 + x").unwrap();
    c.b1 = ScalarField::parse("y").unwrap();
    let jets = vec![vec![1.0, -0.5, 2.0], vec![0.25, 1.0], vec![-1.0]];
    let t = taylor_correction(&c, &jets, 4, 0.8).unwrap();
    assert_eq!(t.coefficients.iter().map(Vec::len).collect::<Vec<_>>(), vec![1, 2, 3]);
    assert!(t.residual <= 1e-12);
    assert!(taylor_correction(&c, &jets, 1, 0.8).is_err());
}

// ---- compatibility

fn linear_trace(psi0: f64, h: f64, n: usize) -> CauchyTrace {
    let right: Vec<f64> = (0..=n).map(|k| psi0 + 0.5 * k as f64 * h).collect();
    let left: Vec<f64> = (0..=n).map(|k| psi0 - 0.25 * k as f64 * h).collect();
    CauchyTrace::from_samples(
        CornerCurve::abs_slope(1.0),
        h,
        Branches::new(vec![0.0; n + 1], vec![0.0; n + 1]),
        Branches::new(right, left),
        4,
        None,
    )
}

#[test]
fn first_residual_is_twice_psi0() {
    let c = CoefficientSet::tricomi_cross();
    for psi0 in [1.0, -0.3, 0.0] {
        let r = check_compatibility(&linear_trace(psi0, 1.0 / 32.0, 32), &c, 1, &CompatTolerance::default()).unwrap();
        assert_eq!(r.residuals[0], 2.0 * f64::abs(psi0));
        assert_eq!(r.pass[0], psi0 == 0.0);
    }
}

#[test]
fn smooth_solution_is_compatible() {
    let s = spec();
    let c = CoefficientSet::tricomi_cross();
    let u = Expr::parse("(x^2 - y^2)^2").unwrap();
    let m = manufacture_linear(&u, &c).unwrap();
    let c = c.with_f(m.f.clone());
    let kappa = s.kappa_upper();
    let trace = CauchyTrace::from_exprs(kappa.clone(), m.phi(&kappa), m.psi(&kappa), 1.0 / 64.0, 96, MAX_EXTENSION_ORDER);
    let r = check_compatibility(&trace, &c, 4, &CompatTolerance::default()).unwrap();
    assert!(r.residuals.iter().all(|&v| v <= 1e-8), "{:?}", r.residuals);
    r.require().unwrap();
}

#[test]
fn incompatible_data_rejected() {
    let r = check_compatibility(&linear_trace(0.5, 1.0 / 32.0, 32), &CoefficientSet::tricomi_cross(), 2, &CompatTolerance::default()).unwrap();
    assert!(matches!(r.require(), Err(Error::IncompatibleData { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reflection_preserves_residuals(phi in prop::array::uniform4(-1.0f64..1.0), psi in prop::array::uniform4(-1.0f64..1.0)) {
        let h = 1.0 / 32.0;
        let n = 40;
        let branch = |c: &[f64; 4], sgn: f64| -> Vec<f64> {
            (0..=n).map(|k| {
                let x = sgn * k as f64 * h;
                c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x
            }).collect()
        };
        let trace = CauchyTrace::from_samples(
            CornerCurve::abs_slope(1.0),
            h,
            Branches::new(branch(&phi, 1.0), branch(&phi, -1.0).iter().map(|v| v * 0.5).collect()),
            Branches::new(branch(&psi, 1.0), branch(&psi, -1.0)),
            4,
            None,
        );
        let c = CoefficientSet::tricomi_cross();
        let tol = CompatTolerance::default();
        let a = check_compatibility(&trace, &c, 3, &tol).unwrap();
        let b = check_compatibility(&trace.reflected(), &c, 3, &tol).unwrap();
        for (p, q) in a.residuals.iter().zip(&b.residuals) {
            prop_assert!((p - q).abs() <= 1e-9 * (1.0 + p.abs()));
        }
    }
}

// ---- hyperbolic

fn upper_problem<'a>(c: &'a CoefficientSet, h: f64, trace: Option<CauchyTrace>) -> HyperbolicProblem<'a> {
    let s = spec();
    let grid = Grid2D::covering(s.radius_outer, h).unwrap();
    let n = (s.radius_outer / h).ceil() as usize + 2;
    let trace = trace.unwrap_or_else(|| CauchyTrace::zero(s.kappa_upper(), h, n, MAX_EXTENSION_ORDER));
    let mut p = HyperbolicProblem::new(grid, c, trace, 1.0, s.radius_outer);
    p.row_aligned = true;
    p
}

fn above_curve(g: Grid2D) -> Vec<bool> {
    (0..g.len())
        .map(|q| {
            let (x, y) = g.xy(q);
            x * x + y * y <= 1.0 && y >= x.abs()
        })
        .collect()
}

#[test]
fn hyperbolic_zero_in_zero_out() {
    let c = CoefficientSet::tricomi_cross();
    let sol = solve_degenerate(&upper_problem(&c, 1.0 / 32.0, None)).unwrap();
    assert_eq!(sol.u.max_abs(None), 0.0);
    assert!(sol.energy.all_finite());
}

#[test]
fn cfl_guard() {
    let c = CoefficientSet::tricomi_cross().with_f(1.0);
    let mut p = upper_problem(&c, 1.0 / 32.0, None);
    p.cfl = 1.3;
    assert!(matches!(march(&p, 1e-3), Err(Error::CflViolation { .. })));
}

fn hyperbolic_error(u: &Expr, h: f64) -> f64 {
    let s = spec();
    let c0 = CoefficientSet::tricomi_cross();
    let m = manufacture_linear(u, &c0).unwrap();
    let c = c0.with_f(m.f.clone());
    let kappa = s.kappa_upper();
    let n = (s.radius_outer / h).ceil() as usize + 2;
    let trace = CauchyTrace::from_exprs(kappa.clone(), m.phi(&kappa), m.psi(&kappa), h, n, MAX_EXTENSION_ORDER);
    let p = upper_problem(&c, h, Some(trace));
    let sol = solve_degenerate(&p).unwrap();
    relative_l2_error(&sol.u, u, Some(&above_curve(p.grid)))
}

#[test]
fn hyperbolic_manufactured_second_order() {
    let u = Expr::parse("(y^2 - x^2)^2").unwrap();
    let (e64, e128) = (hyperbolic_error(&u, 1.0 / 64.0), hyperbolic_error(&u, 1.0 / 128.0));
    let order = (e64 / e128).log2();
    assert!(e128 < 1e-2 && order > 1.5, "errors {e64:e}, {e128:e}");
}

#[test]
fn epsilon_continuation_contracts() {
    // f vanishes to order 2 on the curves; the regularization error is first order in eps
    let c = CoefficientSet::tricomi_cross().with_f(Expr::parse("cos(x) * (y^2 - x^2)^2").unwrap());
    let mut p = upper_problem(&c, 1.0 / 64.0, None);
    p.epsilon_schedule = vec![1e-2, 1e-3, 1e-4];
    let coarse = solve_degenerate(&p).unwrap();
    let g = &coarse.continuation_gap;
    let rate = g[1] / g[0];
    assert!((rate - 0.1).abs() < 0.01, "gaps {g:?}");
    // frozen from this run
    assert!((g[1] - 6.082e-6).abs() < 0.02 * 6.082e-6, "gaps {g:?}");
    p.epsilon_schedule = mixtype::hyperbolic::default_epsilon_schedule();
    let fine = solve_degenerate(&p).unwrap();
    let last = *fine.continuation_gap.last().unwrap();
    assert!(last <= 1e-6, "gaps {:?}", fine.continuation_gap);
}

#[test]
fn mirror_data_gives_mirror_solution() {
    let h = 1.0 / 32.0;
    let s = spec();
    let c0 = CoefficientSet::tricomi_cross();
    let solve = |src: &str| -> GridFunction {
        let u = Expr::parse(src).unwrap();
        let m = manufacture_linear(&u, &c0).unwrap();
        let c = c0.clone().with_f(m.f.clone());
        let kappa = s.kappa_upper();
        let n = (s.radius_outer / h).ceil() as usize + 2;
        let trace = CauchyTrace::from_exprs(kappa.clone(), m.phi(&kappa), m.psi(&kappa), h, n, MAX_EXTENSION_ORDER);
        solve_degenerate(&upper_problem(&c, h, Some(trace))).unwrap().u
    };
    let a = solve("x^3 + y^2 + x*y");
    let b = solve("-x^3 + y^2 - x*y");
    let g = a.grid;
    let scale = a.max_abs(None);
    for p in 0..g.len() {
        let (i, j) = g.ij(p);
        let q = g.idx(g.nx - 1 - i, j);
        assert_eq!(a.mask[p], b.mask[q]);
        assert!((a.values[p] - b.values[q]).abs() <= 1e-10 * scale);
    }
}

#[test]
fn energy_csv_layout() {
    let c = CoefficientSet::tricomi_cross().with_f(1.0);
    let sol = solve_degenerate(&upper_problem(&c, 1.0 / 32.0, None)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("energy.csv");
    sol.energy.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("y,E"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (y, e) = l.split_once(',').unwrap();
            (y.parse().unwrap(), e.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), sol.energy.levels.len());
    assert!(rows.windows(2).all(|w| w[1].0 > w[0].0));
}

// ---- composite

#[test]
fn composite_frozen_error() {
    // relative L2 error against the closed-form solution, frozen from a verified run
    let u = Expr::parse("(x^2 - y^2) * exp(x*y)").unwrap();
    let c = CoefficientSet::tricomi_cross();
    let m = manufacture_linear(&u, &c).unwrap();
    let run = solve_linear_mixed(&spec(), &c.with_f(m.f), m.g.into(), &opts(1.0 / 32.0)).unwrap();
    let err = relative_l2_error(&run.u_global, &u, None);
    assert!((err - 3.118e-4).abs() <= 0.02 * 3.118e-4, "error {err:e}");
    assert!(run.glue_defect.value <= run.glue_defect.tol);
}

#[test]
fn composite_zero_data() {
    let run = solve_linear_mixed(&spec(), &CoefficientSet::tricomi_cross(), ScalarField::zero(), &opts(1.0 / 32.0)).unwrap();
    assert_eq!(run.u_global.max_abs(None), 0.0);
    assert_eq!(run.glue_defect.value, 0.0);
    assert!(verify_estimate(&run, 2).unwrap().iter().all(|r| r.ratio == 0.0));
}

#[test]
fn composite_is_linear() {
    let c = CoefficientSet::tricomi_cross();
    let data = |src: &str| manufacture_linear(&Expr::parse(src).unwrap(), &c).unwrap();
    let a = data("(x^2 - y^2) * exp(x*y)");
    let b = data("(x^2 - y^2) * cos(x + 2*y)");
    let solve = |f: Expr, g: Expr| solve_linear_mixed(&spec(), &c.clone().with_f(f), g.into(), &opts(1.0 / 32.0)).unwrap().u_global;
    let ua = solve(a.f.clone(), a.g.clone());
    let ub = solve(b.f.clone(), b.g.clone());
    let sum = solve(a.f + Expr::constant(2.0) * b.f, a.g + Expr::constant(2.0) * b.g);
    let expect = ua.add(&ub.scale(2.0)).unwrap();
    let diff = sum.sub(&expect).unwrap().max_abs(None);
    assert!(diff <= 1e-7 * expect.max_abs(None), "defect {diff:e}");
}

#[test]
fn reversed_type_fails_orientation() {
    let err = solve_linear_mixed(&spec(), &CoefficientSet::reversed(), ScalarField::zero(), &opts(1.0 / 32.0)).unwrap_err();
    assert!(matches!(err, Error::OrientationFailure { .. }));
    assert_eq!(err.exit_code(), 3);
    let r = demonstrate_failure_mode(&spec(), &CoefficientSet::reversed(), 1.0 / 32.0, true).unwrap();
    assert_eq!(r.failure_mode, "orientation");
    assert!(!r.orientation.pass);
    assert!(matches!(r.forced_march.as_deref(), Some(k) if k != "none"), "{:?}", r.forced_march);
    let ok = demonstrate_failure_mode(&spec(), &CoefficientSet::tricomi_cross(), 1.0 / 32.0, false).unwrap();
    assert_eq!(ok.failure_mode, "none");
}
