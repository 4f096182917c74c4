use mixtype::expr::Expr;
use mixtype::fields::GridFunction;
use mixtype::geometry::Grid2D;
use mixtype::nashmoser::*;
use mixtype::verify;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid(h: f64) -> Grid2D {
    Grid2D::covering(1.0, h).unwrap()
}

fn max_dev(v: &[f64], target: impl Fn(usize) -> f64) -> f64 {
    v.iter().enumerate().fold(0.0f64, |m, (p, a)| m.max((a - target(p)).abs()))
}

#[test]
fn residual_at_zero() {
    let g = grid(1.0 / 16.0);
    let eps = 0.1;
    let f = evaluate_f(&GridFunction::zeros(g, vec![true; g.len()]), eps, &NonlinearProblem::unit_cross()).unwrap();
    let dev = max_dev(&f.values, |p| {
        let (x, y) = g.xy(p);
        -eps.powi(3) * (x * x - y * y)
    });
    assert!(dev <= 1e-15, "{dev:e}");
}

#[test]
fn residual_of_quadratic_with_zero_k() {
    let g = grid(1.0 / 16.0);
    let problem = NonlinearProblem::new(Expr::zero(), Expr::one(), 1.0);
    let w = GridFunction::full(g, |_, y| 0.5 * y * y);
    let f = evaluate_f(&w, 0.2, &problem).unwrap();
    assert!(max_dev(&f.values, |_| 1.0) <= 1e-12);
}

#[test]
fn cofactors_at_zero() {
    let g = grid(1.0 / 16.0);
    let lin = linearize(&GridFunction::zeros(g, vec![true; g.len()]), 0.1, &NonlinearProblem::unit_cross()).unwrap();
    assert!(lin.phi11.iter().chain(&lin.phi12).all(|&v| v == 0.0));
    assert!(lin.phi22.iter().all(|&v| v == 1.0));
}

#[test]
fn determinant_identity_for_random_fields() {
    // det Phi - eps F - K psi, recomputed here from the raw differences
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = grid(1.0 / 32.0);
    let problem = verify::test_psi();
    for eps in [0.2, 0.05] {
        let w = verify::random_field(&mut rng, g, 4, 1.0);
        let lin = linearize(&w, eps, &problem).unwrap();
        let d = &lin.derivatives;
        let f = evaluate_f(&w, eps, &problem).unwrap();
        let worst = (0..g.len()).fold(0.0f64, |m, p| {
            let (w11, w12, w22) = (d.w11.values[p], d.w12.values[p], d.w22.values[p]);
            let det = eps * w22 * (1.0 + eps * w11) - eps * eps * w12 * w12;
            m.max((det - eps * f.values[p] - lin.scaled.k[p] * lin.scaled.psi[p]).abs())
        });
        assert!(worst <= 1e-12, "{worst:e}");
        assert!(lin.det_identity_defect <= 1e-12);
    }
}

#[test]
fn transform_and_canonical_form_at_zero() {
    let g = grid(1.0 / 32.0);
    let problem = NonlinearProblem::unit_cross();
    let lin = linearize(&GridFunction::zeros(g, vec![true; g.len()]), 0.1, &problem).unwrap();
    let tr = build_transform(&lin).unwrap();
    assert_eq!(tr.shift_max, 0.0);
    assert!(max_dev(&tr.y1.values, |p| g.xy(p).0) == 0.0);
    let op = canonical_operator(&lin, &tr, &problem).unwrap();
    let s = op.summary();
    assert!(s.max_a11_dev <= 1e-14 && s.max_a22_dev == 0.0);
}

#[test]
fn canonical_deviation_scales_with_eps() {
    let g = grid(1.0 / 32.0);
    let problem = NonlinearProblem::unit_cross();
    let w = GridFunction::full(g, |x, y| x * y + 0.5 * x * x);
    let dev = |eps: f64| {
        let lin = linearize(&w, eps, &problem).unwrap();
        let tr = build_transform(&lin).unwrap();
        let s = canonical_operator(&lin, &tr, &problem).unwrap().summary();
        s.max_a11_dev.max(s.max_a22_dev)
    };
    let (a, b) = (dev(0.1), dev(0.05));
    assert!(a > 0.0 && (a / b - 2.0).abs() < 0.3, "{a:e} {b:e}");
}

#[test]
fn push_and_pull_are_inverse() {
    let g = grid(1.0 / 64.0);
    let problem = NonlinearProblem::unit_cross();
    let w = GridFunction::full(g, |x, y| x * y);
    let tr = build_transform(&linearize(&w, 0.05, &problem).unwrap()).unwrap();
    let v: Vec<f64> = (0..g.len()).map(|p| {
        let (x, y) = g.xy(p);
        (x + 0.3 * y).sin()
    }).collect();
    let back = pull_back(&push_forward(&v, &tr), &tr);
    let inner: Vec<usize> = (0..g.len()).filter(|&p| {
        let (x, y) = g.xy(p);
        x * x + y * y < 0.5
    }).collect();
    let worst = inner.iter().fold(0.0f64, |m, &p| m.max((back[p] - v[p]).abs()));
    assert!(worst <= 1e-3, "{worst:e}");
}

#[test]
fn short_iteration_reduces_residual() {
    let cfg = NashMoserConfig { eps: 0.05, h: 1.0 / 32.0, max_levels: 1, target: 0.0, ..Default::default() };
    let s = iterate(&NonlinearProblem::unit_cross(), &cfg).unwrap();
    assert_eq!(s.residual_norms.len(), 2);
    assert!(s.residual_norms[1] < s.residual_norms[0]);
    assert_eq!(s.history.len(), 1);
    assert_eq!(s.history[0].theta, cfg.theta0);
    let bad = NashMoserConfig { eps: 0.7, ..cfg };
    assert_eq!(iterate(&NonlinearProblem::unit_cross(), &bad).unwrap_err().exit_code(), 2);
}

#[test]
fn taper_limits() {
    let g = grid(1.0 / 16.0);
    let one = GridFunction::full(g, |_, _| 1.0);
    let t = taper(&one, 0.5, 0.9);
    for p in 0..g.len() {
        let (x, y) = g.xy(p);
        let r = (x * x + y * y).sqrt();
        if r <= 0.5 {
            assert_eq!(t.values[p], 1.0);
        } else if r >= 0.9 {
            assert_eq!(t.values[p], 0.0);
        } else {
            assert!((0.0..=1.0).contains(&t.values[p]));
        }
    }
}

/// cos(pi k (x - x0) / L) in each direction: a single Fourier mode of the even
/// reflection, at ordinary frequency k / (2 L).
fn reflected_mode(g: Grid2D, kx: usize, ky: usize) -> (GridFunction, f64) {
    let l = (g.nx - 1) as f64 * g.h;
    let x0 = g.x(0);
    let y0 = g.y(0);
    let pi = std::f64::consts::PI;
    let u = GridFunction::full(g, |x, y| (pi * kx as f64 * (x - x0) / l).cos() * (pi * ky as f64 * (y - y0) / l).cos());
    let freq = ((kx * kx + ky * ky) as f64).sqrt() / (2.0 * l);
    (u, freq)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn smoothing_keeps_constants(c in -5.0f64..5.0, theta in 0.5f64..20.0) {
        let g = grid(1.0 / 16.0);
        let s = smoothing_apply(&GridFunction::full(g, |_, _| c), theta);
        prop_assert!(max_dev(&s.values, |_| c) <= 1e-12 * (1.0 + c.abs()));
    }

    #[test]
    fn smoothing_passes_low_modes(kx in 0usize..6, ky in 0usize..6) {
        let g = grid(1.0 / 16.0);
        let (u, freq) = reflected_mode(g, kx, ky);
        let theta = 8.0;
        prop_assert!(freq <= theta);
        let s = smoothing_apply(&u, theta);
        prop_assert!(max_dev(&s.values, |p| u.values[p]) <= 1e-12);
    }

    #[test]
    fn smoothing_removes_high_modes(kx in 20usize..30, ky in 20usize..30) {
        let g = grid(1.0 / 16.0);
        let (u, freq) = reflected_mode(g, kx, ky);
        let theta = 2.0;
        prop_assert!(freq >= 2.0 * theta);
        prop_assert!(smoothing_apply(&u, theta).max_abs(None) <= 1e-12);
    }

    #[test]
    fn smoothing_is_linear(seed in 0u64..1000, s in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid(1.0 / 16.0);
        let u = verify::random_field(&mut rng, g, 3, 1.0);
        let v = verify::random_field(&mut rng, g, 3, 1.0);
        let lhs = smoothing_apply(&u.add(&v.scale(s)).unwrap(), 3.0);
        let rhs = smoothing_apply(&u, 3.0).add(&smoothing_apply(&v, 3.0).scale(s)).unwrap();
        prop_assert!(max_dev(&lhs.values, |p| rhs.values[p]) <= 1e-12);
    }

    #[test]
    fn linearization_is_linear_in_direction(seed in 0u64..1000, s in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid(1.0 / 16.0);
        let w = verify::random_field(&mut rng, g, 3, 1.0);
        let a = verify::random_field(&mut rng, g, 3, 1.0);
        let b = verify::random_field(&mut rng, g, 3, 1.0);
        let lin = linearize(&w, 0.1, &verify::test_psi()).unwrap();
        let lhs = lin.apply(&a.add(&b.scale(s)).unwrap()).unwrap();
        let rhs = lin.apply(&a).unwrap().add(&lin.apply(&b).unwrap().scale(s)).unwrap();
        let scale = 1.0 + rhs.max_abs(None);
        prop_assert!(max_dev(&lhs.values, |p| rhs.values[p]) <= 1e-10 * scale);
    }
}
