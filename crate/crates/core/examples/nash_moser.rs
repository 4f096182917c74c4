//! Three Nash-Moser levels for det D^2 u = (x^2 - y^2) near the origin, in the
//! scaled unknown w. Prints the per-level diagnostics.

use mixtype::nashmoser::{iterate, NashMoserConfig, NonlinearProblem};

fn main() -> mixtype::Result<()> {
    let cfg = NashMoserConfig { eps: 0.05, h: 1.0 / 64.0, max_levels: 3, target: 0.0, ..Default::default() };
    let state = iterate(&NonlinearProblem::unit_cross(), &cfg)?;
    for r in &state.history {
        println!(
            "level {}  theta {:>4}  ||F|| {:.3e}  ||step|| {:.3e}  det defect {:.1e}  max|b12| {:.1e}  max|a11 - 1| {:.1e}",
            r.level,
            r.theta,
            r.residual_norm,
            r.correction_norm,
            r.linearization.det_identity_defect,
            r.transform.b12_max,
            r.canonical.max_a11_dev,
        );
    }
    let rep = state.report();
    println!("final ||F|| {:.3e}, decay {:.3e}", state.residual_norms.last().copied().unwrap_or(f64::NAN), rep.decay);
    println!("unscaled residual of det D^2 u - K psi: {:.3e}", rep.unscaled_residual);
    Ok(())
}
