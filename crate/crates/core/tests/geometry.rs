use mixtype::expr::Expr;
use mixtype::geometry::*;
use proptest::prelude::*;

fn cross(x: f64, y: f64) -> f64 {
    x * x - y * y
}

fn map(h: f64, k: impl Fn(f64, f64) -> f64) -> RegionMap {
    let spec = DomainSpec::diagonals(1.0, std::f64::consts::SQRT_2);
    build_region_map(&spec, Grid2D::covering(spec.radius_outer, h).unwrap(), k).unwrap()
}

fn label_at(m: &RegionMap, x: f64, y: f64) -> Label {
    let g = m.grid;
    let near = |v: f64, o: usize| ((v / g.h).round() as i64 + o as i64) as usize;
    m.label(near(x, g.origin_index.0), near(y, g.origin_index.1))
}

#[test]
fn sample_labels() {
    let m = map(1.0 / 64.0, cross);
    assert_eq!(label_at(&m, 0.5, 0.1), Label::EllipticPlus);
    assert_eq!(label_at(&m, 0.1, 0.5), Label::HyperbolicUp);
    assert_eq!(label_at(&m, -0.1, -0.5), Label::HyperbolicDown);
    assert_eq!(label_at(&m, 0.25, 0.25), Label::Degenerate);
}

#[test]
fn four_connected_regions() {
    let m = map(1.0 / 32.0, cross);
    let count = |l: Label| m.components.iter().filter(|c| c.label == l).count();
    assert_eq!(count(Label::EllipticPlus), 2);
    assert_eq!(count(Label::HyperbolicUp), 1);
    assert_eq!(count(Label::HyperbolicDown), 1);
}

#[test]
fn degenerate_band_is_thin() {
    // bound: four times the number of nodes within h of |x| = |y|, counted directly
    let h = 1.0 / 64.0;
    let m = map(h, cross);
    let g = m.grid;
    let near = (0..g.len())
        .filter(|&p| {
            let (x, y) = g.xy(p);
            x * x + y * y <= 2.0 && (x.abs() - y.abs()).abs() <= h
        })
        .count();
    assert!(m.count(Label::Degenerate) <= 4 * near);
    assert!(m.count(Label::Degenerate) > 0);
}

#[test]
fn frame_nodes_are_exterior() {
    let m = map(1.0 / 16.0, |_, _| 1.0);
    let g = m.grid;
    for i in 0..g.nx {
        assert_eq!(m.label(i, 0), Label::Exterior);
        assert_eq!(m.label(i, g.ny - 1), Label::Exterior);
    }
}

#[test]
fn swapping_sign_swaps_types() {
    let a = map(1.0 / 32.0, cross);
    let b = map(1.0 / 32.0, |x, y| -cross(x, y));
    for p in 0..a.grid.len() {
        match a.labels[p] {
            Label::EllipticPlus => assert!(b.labels[p].is_hyperbolic()),
            l if l.is_hyperbolic() => assert_eq!(b.labels[p], Label::EllipticPlus),
            l => assert_eq!(b.labels[p], l),
        }
    }
}

#[test]
fn refinement_keeps_labels() {
    let coarse = map(1.0 / 32.0, cross);
    let fine = map(1.0 / 64.0, cross);
    let g = coarse.grid;
    for p in 0..g.len() {
        let l = coarse.labels[p];
        if matches!(l, Label::Degenerate | Label::Exterior) {
            continue;
        }
        let (x, y) = g.xy(p);
        let lf = label_at(&fine, x, y);
        if lf != Label::Degenerate {
            assert_eq!(l, lf, "at ({x}, {y})");
        }
    }
}

#[test]
fn spacelike_examples() {
    let abs = CornerCurve::abs_slope(1.0);
    // K' = x^2 - y^2 vanishes on y = |x|
    let r = spacelike_check(&abs, |_, _| 1.0, |x, y| x * x - y * y, 0.5, 1.0);
    assert!(r.pass && r.sup.abs() < 1e-12);
    let r = spacelike_check(&abs, |_, _| 1.0, |_, _| 1.0, 0.9, 1.0);
    assert!(!r.pass && (r.sup - 1.0).abs() < 1e-12);
    let r = spacelike_check(&CornerCurve::abs_slope(0.5), |_, _| 1.0, |_, _| 1.0, 0.5, 1.0);
    assert!(r.pass && (r.sup - 0.25).abs() < 1e-12);
}

#[test]
fn orientation_examples() {
    assert!(orientation_check(&map(1.0 / 32.0, cross)).pass);
    assert!(!orientation_check(&map(1.0 / 32.0, |x, y| y * y - x * x)).pass);
    assert!(orientation_check(&map(1.0 / 32.0, |_, _| 1.0)).pass);
}

#[test]
fn domain_validation() {
    let mut s = DomainSpec::diagonals(1.0, 1.5);
    assert!(s.validate().is_ok());
    s.gamma2 = -Expr::x() + Expr::constant(1e-3) * Expr::x().powi(2);
    assert!(matches!(s.validate(), Err(mixtype::Error::TransversalityViolation { .. })));
    let s = DomainSpec::diagonals(1.0, 0.5);
    assert_eq!(s.validate().unwrap_err().exit_code(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn labels_follow_sign(c in 0.3f64..3.0, n in 8usize..40) {
        let h = 1.0 / n as f64;
        let m = map(h, |x, y| x * x - c * y * y);
        let g = m.grid;
        for p in 0..g.len() {
            let (x, y) = g.xy(p);
            let k = x * x - c * y * y;
            match m.labels[p] {
                Label::EllipticPlus => prop_assert!(k > 0.0),
                l if l.is_hyperbolic() => prop_assert!(k < 0.0),
                _ => {}
            }
        }
    }

    #[test]
    fn origin_on_node(r in 0.1f64..3.0, n in 2usize..200) {
        let g = Grid2D::covering(r, 1.0 / n as f64).unwrap();
        prop_assert_eq!(g.x(g.origin_index.0), 0.0);
        prop_assert_eq!(g.y(g.origin_index.1), 0.0);
        prop_assert!(g.check_covers(r).is_ok());
    }
}
