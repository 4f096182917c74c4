//! Corner compatibility residuals for a smooth exact solution and for data with a
//! kink at the corner.

use mixtype::compat::{check_compatibility, Branches, CauchyTrace, CompatTolerance, MAX_EXTENSION_ORDER};
use mixtype::expr::Expr;
use mixtype::fields::{manufacture_linear, CoefficientSet};
use mixtype::geometry::{CornerCurve, DomainSpec};

fn main() -> mixtype::Result<()> {
    let spec = DomainSpec::diagonals(1.0, std::f64::consts::SQRT_2);
    let tol = CompatTolerance::default();
    let h = 1.0 / 64.0;

    let u = Expr::parse("(x^2 - y^2)^2 + x^3 * y")?;
    let m = manufacture_linear(&u, &CoefficientSet::tricomi_cross())?;
    let coeffs = CoefficientSet::tricomi_cross().with_f(m.f.clone());
    let kappa = spec.kappa_upper();
    let smooth = CauchyTrace::from_exprs(kappa.clone(), m.phi(&kappa), m.psi(&kappa), h, 96, MAX_EXTENSION_ORDER);
    let r = check_compatibility(&smooth, &coeffs, 4, &tol)?;
    println!("smooth data:   residuals {:?}", r.residuals.iter().map(|v| format!("{v:.1e}")).collect::<Vec<_>>());
    println!("               corner jet {:?}", r.corner_jet.iter().take(6).collect::<Vec<_>>());

    // phi = 0 with psi(0) = 0.3: the first residual is 2 |psi(0)|
    let n = 64;
    let kinked = CauchyTrace::from_samples(
        CornerCurve::abs_slope(1.0),
        h,
        Branches::new(vec![0.0; n + 1], vec![0.0; n + 1]),
        Branches::new(vec![0.3; n + 1], vec![0.3; n + 1]),
        4,
        None,
    );
    let r = check_compatibility(&kinked, &CoefficientSet::tricomi_cross(), 1, &tol)?;
    println!("psi(0) = 0.3:  r1 = {}  ({})", r.residuals[0], match r.require() {
        Ok(()) => "accepted".to_string(),
        Err(e) => e.to_string(),
    });
    Ok(())
}
