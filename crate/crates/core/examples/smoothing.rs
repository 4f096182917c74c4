//! The spectral low-pass filter: a mode below the cutoff passes unchanged, one above
//! twice the cutoff is removed, and the loss/gain constants stay flat in theta.

use mixtype::fields::GridFunction;
use mixtype::geometry::Grid2D;
use mixtype::nashmoser::smoothing_apply;
use mixtype::verify::smoothing_constants;

fn main() -> mixtype::Result<()> {
    let g = Grid2D::covering(1.0, 1.0 / 64.0)?;
    let l = (g.nx - 1) as f64 * g.h;
    let x0 = g.x(0);
    let mode = |k: f64| GridFunction::full(g, move |x, _| (std::f64::consts::PI * k * (x - x0) / l).cos());
    let theta = 4.0;
    for k in [4.0, 12.0, 40.0] {
        let u = mode(k);
        let s = smoothing_apply(&u, theta);
        let kept = s.l2(None) / u.l2(None);
        println!("frequency {:>5.2} (theta {theta}): kept fraction {kept:.6}", k / (2.0 * l));
    }

    let c = smoothing_constants(1.0 / 128.0, &[4.0, 8.0, 16.0], &[1.0, 2.0, 4.0, 8.0, 16.0, 24.0])?;
    for (t, (lo, ga)) in c.thetas.iter().zip(c.loss.iter().zip(&c.gain)) {
        println!("theta {t:>4}: loss constant {lo:.4}, gain constant {ga:.4}");
    }
    let (lo, ga) = c.spreads();
    println!("max/min over theta: {lo:.3}, {ga:.3}");
    Ok(())
}
