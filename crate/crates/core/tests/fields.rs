use mixtype::expr::Expr;
use mixtype::fields::*;
use mixtype::geometry::Grid2D;
use proptest::prelude::*;

fn grid(h: f64) -> Grid2D {
    Grid2D::covering(1.0, h).unwrap()
}

fn node(g: Grid2D, x: f64, y: f64) -> usize {
    g.idx(g.column_of(x).unwrap(), g.row_of(y).unwrap())
}

#[test]
fn exact_differences_of_low_degree() {
    let g = grid(0.1);
    let d = diff(&GridFunction::full(g, |x, _| x * x), (2, 0)).unwrap();
    assert!(d.values.iter().all(|v| (v - 2.0).abs() < 1e-9));
    let d = diff(&GridFunction::full(g, |x, y| x * y), (1, 1)).unwrap();
    assert!(d.values.iter().all(|v| (v - 1.0).abs() < 1e-9));
}

#[test]
fn mixed_third_difference_second_order() {
    let g = grid(1.0 / 128.0);
    let u = GridFunction::full(g, |x, y| x.sin() * y.exp());
    let d = diff(&u, (2, 1)).unwrap();
    let p = node(g, 0.3125, 0.1875);
    let (x, y) = g.xy(p);
    let err = (d.values[p] + x.sin() * y.exp()).abs();
    assert!(err < 2.0 * g.h * g.h, "error {err}");
}

#[test]
fn sobolev_examples() {
    let g = grid(1.0 / 128.0);
    let all = vec![true; g.len()];
    assert_eq!(sobolev_norm(&GridFunction::zeros(g, all.clone()), 3, &all).unwrap().value, 0.0);
    let square: Vec<bool> = (0..g.len())
        .map(|p| {
            let (x, y) = g.xy(p);
            (0.0..1.0).contains(&x) && (0.0..1.0).contains(&y)
        })
        .collect();
    let one = GridFunction::full(g, |_, _| 1.0);
    let v = sobolev_norm(&one, 0, &square).unwrap().value;
    assert!((v - 1.0).abs() < 2.0 * g.h);
    // sqrt(1/4 + pi^2/4 + pi^2/4), from closed-form integrals
    let pi = std::f64::consts::PI;
    let s = GridFunction::full(g, |x, y| (pi * x).sin() * (pi * y).sin());
    let v = sobolev_norm(&s, 1, &square).unwrap().value;
    let exact = (0.25 + pi * pi / 2.0).sqrt();
    assert!((v - exact).abs() < 0.02 * exact, "{v} vs {exact}");
}

#[test]
fn manufactured_forcing() {
    let c = CoefficientSet::tricomi_cross();
    let m = manufacture_linear(&Expr::parse("x^2 - y^2").unwrap(), &c).unwrap();
    for (x, y) in [(0.3, -0.2), (0.0, 0.7), (-0.9, 0.1)] {
        let expect = -2.0 + 2.0 * (x * x - y * y);
        assert!((m.f.eval_xy(x, y) - expect).abs() < 1e-12);
    }
    let z = manufacture_linear(&Expr::zero(), &c).unwrap();
    assert_eq!(z.f.eval_xy(0.4, 0.3), 0.0);
}

#[test]
fn symbolic_forcing_matches_differences() {
    let u = Expr::parse("(x^2 - y^2) * exp(x + y)").unwrap();
    let c = CoefficientSet::tricomi_cross();
    let m = manufacture_linear(&u, &c).unwrap();
    let g = grid(1.0 / 256.0);
    let uf = GridFunction::full(g, |x, y| u.eval_xy(x, y));
    let uxx = diff(&uf, (2, 0)).unwrap();
    let uyy = diff(&uf, (0, 2)).unwrap();
    for (x, y) in [(0.25, 0.5), (-0.5, 0.125), (0.0, 0.0)] {
        let p = node(g, x, y);
        let fd = uyy.values[p] + (x * x - y * y) * uxx.values[p];
        assert!((fd - m.f.eval_xy(x, y)).abs() < 1e-4, "at ({x}, {y})");
    }
}

#[test]
fn levy_checker() {
    let g = grid(1.0 / 32.0);
    let k = ScalarField::from(Expr::x().powi(2) - Expr::y().powi(2));
    let near: Vec<bool> = (0..g.len())
        .map(|p| {
            let (x, y) = g.xy(p);
            x * x + y * y < 0.01 && x.abs() > y.abs()
        })
        .collect();
    assert!(!levy_check(&ScalarField::constant(0.5), &k, 1.0, g, &near).unwrap());
    let b1 = ScalarField::from(Expr::x());
    let sampled = (0..g.len()).filter(|&p| near[p]).all(|p| {
        let (x, y) = g.xy(p);
        x.abs() <= (x * x - y * y).abs().sqrt() + (2.0 * x).abs()
    });
    assert_eq!(levy_check(&b1, &k, 1.0, g, &near).unwrap(), sampled);
    assert!(sampled);
}

fn poly(c: [f64; 6]) -> impl Fn(f64, f64) -> f64 {
    move |x, y| c[0] + c[1] * x + c[2] * y + c[3] * x * y + c[4] * (2.0 * x).sin() + c[5] * (x + y).exp()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn diff_is_linear(a in prop::array::uniform6(-2.0f64..2.0), b in prop::array::uniform6(-2.0f64..2.0), s in -3.0f64..3.0) {
        let g = grid(0.1);
        let u = GridFunction::full(g, poly(a));
        let v = GridFunction::full(g, poly(b));
        let lhs = diff(&u.add(&v.scale(s)).unwrap(), (1, 2)).unwrap();
        let rhs = diff(&u, (1, 2)).unwrap().add(&diff(&v, (1, 2)).unwrap().scale(s)).unwrap();
        for (l, r) in lhs.values.iter().zip(&rhs.values) {
            prop_assert!((l - r).abs() <= 1e-9 * (1.0 + l.abs()));
        }
    }

    #[test]
    fn sobolev_triangle(a in prop::array::uniform6(-2.0f64..2.0), b in prop::array::uniform6(-2.0f64..2.0), s in 0usize..4) {
        let g = grid(0.1);
        let all = vec![true; g.len()];
        let u = GridFunction::full(g, poly(a));
        let v = GridFunction::full(g, poly(b));
        let n = |w: &GridFunction| sobolev_norm(w, s, &all).unwrap().value;
        prop_assert!(n(&u.add(&v).unwrap()) <= n(&u) + n(&v) + 1e-12);
    }

    #[test]
    fn differences_commute(a in prop::array::uniform6(-1.0f64..1.0)) {
        let g = grid(1.0 / 64.0);
        let u = GridFunction::full(g, poly(a));
        let nested = diff(&diff(&u, (1, 0)).unwrap(), (0, 1)).unwrap();
        let direct = diff(&u, (1, 1)).unwrap();
        let worst = nested.values.iter().zip(&direct.values).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        prop_assert!(worst <= 10.0 * g.h * g.h);
    }
}
