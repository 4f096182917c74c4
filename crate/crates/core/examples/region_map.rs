//! Labels the grid for K = x^2 - y^2 and runs the geometric gates.
//!
//!     cargo run --example region_map -- /tmp/out

use std::path::PathBuf;

use mixtype::geometry::{build_region_map, orientation_check, spacelike_check, DomainSpec, Grid2D, Label};

fn main() -> mixtype::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let spec = DomainSpec::diagonals(1.0, std::f64::consts::SQRT_2);
    spec.validate()?;
    let grid = Grid2D::covering(spec.radius_outer, 1.0 / 64.0)?;
    let map = build_region_map(&spec, grid, |x, y| x * x - y * y)?;

    for l in [Label::EllipticPlus, Label::HyperbolicUp, Label::HyperbolicDown, Label::Degenerate] {
        println!("{:>16}: {} nodes", l.name(), map.count(l));
    }
    for c in &map.components {
        println!("component {} ({}): {} nodes, mean y {:+.3}", c.id, c.label.name(), c.nodes, c.mean_y);
    }

    let o = orientation_check(&map);
    println!("orientation: {}", if o.pass { "ok" } else { "fails" });
    // K' = y^2 - x^2 in the upper cone, zero along y = |x|
    let s = spacelike_check(&spec.kappa_upper(), |_, _| 1.0, |x, y| y * y - x * x, 0.5, 1.0);
    println!("sup a K' kappa_x^2 = {:.3e} (pass: {})", s.sup, s.pass);

    let path = out.join("region_map.csv");
    map.write_csv(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}
