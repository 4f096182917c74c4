//! Polynomial corrections at the corner of the wedge |y| < kappa |x| that remove the
//! low-order Taylor terms of f before the elliptic solve.

use mixtype::elliptic::taylor_correction;
use mixtype::expr::Expr;
use mixtype::fields::{CoefficientSet, ScalarField};

fn main() -> mixtype::Result<()> {
    let f = Expr::parse("1 + 2*x - y + x*y + cos(x)")?;
    let m = 5;
    let jets: Vec<Vec<f64>> = (0..=m - 2).map(|i| (0..=m - 2 - i).map(|j| f.dxy(i, j).eval_xy(0.0, 0.0)).collect()).collect();

    let mut coeffs = CoefficientSet::tricomi_cross();
    // the operator seen in the wedge: small a(0), mild lower-order terms
    coeffs.a = ScalarField::parse("0.2 + 0.1*x")?;
    coeffs.b2 = ScalarField::parse("y")?;
    for kappa in [0.5, 1.0] {
        let t = taylor_correction(&coeffs, &jets, m, kappa)?;
        println!("kappa {kappa}: opening kappa^2 a(0) = {:.3}, residual {:.1e}", t.opening, t.residual);
        for (d, c) in t.coefficients.iter().enumerate() {
            println!("  degree {}: {:?}", d + 2, c.iter().map(|v| format!("{v:+.4}")).collect::<Vec<_>>());
        }
    }
    Ok(())
}
