//! With the type reversed (K = y^2 - x^2) the cones open sideways: the orientation
//! gate rejects the problem, and a march forced through anyway blows up.

use mixtype::composite::{demonstrate_failure_mode, solve_linear_mixed, CompositeOptions};
use mixtype::fields::{CoefficientSet, ScalarField};
use mixtype::geometry::DomainSpec;

fn main() -> mixtype::Result<()> {
    let spec = DomainSpec::diagonals(1.0, std::f64::consts::SQRT_2);
    let h = 1.0 / 64.0;
    for (name, coeffs) in [("tricomi_cross", CoefficientSet::tricomi_cross()), ("reversed", CoefficientSet::reversed())] {
        let f = demonstrate_failure_mode(&spec, &coeffs, h, true)?;
        println!("{name}:");
        println!("  failure mode    {}", f.failure_mode);
        println!("  orientation     {} ({} offending nodes)", f.orientation.pass, f.orientation.failures.len());
        println!("  forced march    {}", f.forced_march.as_deref().unwrap_or("-"));
        if let Some(d) = &f.forced_detail {
            println!("                  {d}");
        }
    }
    let err = solve_linear_mixed(&spec, &CoefficientSet::reversed(), ScalarField::zero(), &CompositeOptions { h, ..Default::default() })
        .err()
        .map(|e| format!("{e} (exit code {})", e.exit_code()));
    println!("composite solve on the reversed equation: {}", err.unwrap_or_else(|| "accepted".into()));
    Ok(())
}
