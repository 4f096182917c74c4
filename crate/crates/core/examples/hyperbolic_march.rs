//! Marches the upper hyperbolic cone from exact Cauchy data and prints the energy
//! ledger and the error against the exact solution.

use mixtype::compat::{CauchyTrace, MAX_EXTENSION_ORDER};
use mixtype::expr::Expr;
use mixtype::fields::{manufacture_linear, CoefficientSet};
use mixtype::geometry::{DomainSpec, Grid2D};
use mixtype::hyperbolic::{solve_degenerate, HyperbolicProblem};
use mixtype::verify::relative_l2_error;

fn main() -> mixtype::Result<()> {
    let spec = DomainSpec::diagonals(1.0, std::f64::consts::SQRT_2);
    let exact = Expr::parse("(y^2 - x^2)^2 + y * cos(x)")?;
    let m = manufacture_linear(&exact, &CoefficientSet::tricomi_cross())?;
    let coeffs = CoefficientSet::tricomi_cross().with_f(m.f.clone());
    let kappa = spec.kappa_upper();

    for n in [32usize, 64, 128] {
        let h = 1.0 / n as f64;
        let grid = Grid2D::covering(spec.radius_outer, h)?;
        let samples = (spec.radius_outer / h).ceil() as usize + 2;
        let trace = CauchyTrace::from_exprs(kappa.clone(), m.phi(&kappa), m.psi(&kappa), h, samples, MAX_EXTENSION_ORDER);
        let mut p = HyperbolicProblem::new(grid, &coeffs, trace, 1.0, spec.radius_outer);
        p.row_aligned = true;
        let sol = solve_degenerate(&p)?;
        let cone: Vec<bool> = (0..grid.len())
            .map(|q| {
                let (x, y) = grid.xy(q);
                x * x + y * y <= 1.0 && y >= x.abs()
            })
            .collect();
        println!(
            "h = 1/{n:<3}  ds {:.4}  levels {:>4}  final energy {:.4e}  rel L2 error {:.3e}",
            sol.ds,
            sol.levels,
            sol.energy.levels.last().map_or(0.0, |l| l.1),
            relative_l2_error(&sol.u, &exact, Some(&cone)),
        );
    }
    Ok(())
}
