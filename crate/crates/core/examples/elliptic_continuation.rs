//! Solves the elliptic part for a manufactured solution while the regularization
//! delta is driven to zero, and prints the continuation gaps.

use mixtype::elliptic::{continue_to_degenerate, EllipticProblem};
use mixtype::expr::Expr;
use mixtype::fields::{manufacture_linear, CoefficientSet};
use mixtype::geometry::{build_region_map, DomainSpec, Grid2D};
use mixtype::verify::relative_l2_error;

fn main() -> mixtype::Result<()> {
    let spec = DomainSpec::diagonals(1.0, std::f64::consts::SQRT_2);
    let exact = Expr::parse("(x^2 - y^2) * exp(x + y)")?;
    let m = manufacture_linear(&exact, &CoefficientSet::tricomi_cross())?;
    let coeffs = CoefficientSet::tricomi_cross().with_f(m.f.clone());

    for n in [32, 64, 128] {
        let grid = Grid2D::covering(spec.radius_outer, 1.0 / n as f64)?;
        let region = build_region_map(&spec, grid, |x, y| coeffs.k.eval(x, y))?;
        let mut p = EllipticProblem::new(&spec, &region, &coeffs);
        p.dirichlet = m.g.clone().into();
        let sol = continue_to_degenerate(&p)?;
        let gaps: Vec<String> = sol.continuation_gap.iter().map(|g| format!("{g:.2e}")).collect();
        println!(
            "h = 1/{n:<3}  unknowns {:>6}  gaps [{}]  rel L2 error {:.3e}  psi(0) {:+.1e}",
            sol.unknowns,
            gaps.join(", "),
            relative_l2_error(&sol.u, &exact, None),
            sol.trace_diag.0.psi0,
        );
    }
    Ok(())
}
