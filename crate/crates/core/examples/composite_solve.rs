//! The full linear pipeline: elliptic solve, trace extraction, compatibility,
//! both hyperbolic marches and gluing. Writes u.csv and region_map.csv.
//!
//!     cargo run --release --example composite_solve -- /tmp/out

use std::path::PathBuf;

use mixtype::composite::{solve_linear_mixed, verify_estimate, CompositeOptions};
use mixtype::expr::Expr;
use mixtype::fields::{manufacture_linear, CoefficientSet};
use mixtype::geometry::DomainSpec;
use mixtype::verify::relative_l2_error;

fn main() -> mixtype::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let spec = DomainSpec::diagonals(1.0, std::f64::consts::SQRT_2);
    let exact = Expr::parse("(x^2 - y^2) * exp(x*y)")?;
    let m = manufacture_linear(&exact, &CoefficientSet::tricomi_cross())?;
    let coeffs = CoefficientSet::tricomi_cross().with_f(m.f.clone());

    let run = solve_linear_mixed(&spec, &coeffs, m.g.clone().into(), &CompositeOptions { h: 1.0 / 64.0, ..Default::default() })?;
    let rep = run.report();
    println!("relative L2 error  {:.3e}", relative_l2_error(&run.u_global, &exact, None));
    println!("glue defect        {:.3e} (tol {:.3e})", rep.glue_defect.value, rep.glue_defect.tol);
    println!("compat residuals   up {:?}", rep.compat_up.residuals);
    println!("                   down {:?}", rep.compat_down.residuals);
    println!("epsilon gaps       up {:?}", rep.hyperbolic_up.continuation_gap);
    for row in verify_estimate(&run, 2)? {
        println!("s = {}: ||u|| {:.3e}  data {:.3e}  ratio {:.4}", row.s, row.u_norm, row.f_norm, row.ratio);
    }

    run.u_global.write_csv(&out.join("u.csv"))?;
    run.region.write_csv(&out.join("region_map.csv"))?;
    println!("wrote u.csv and region_map.csv to {}", out.display());
    Ok(())
}
