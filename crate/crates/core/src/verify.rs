//! Verification experiments shared by the command line suite, the tests and the examples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::compat::{CauchyTrace, MAX_EXTENSION_ORDER};
use crate::error::Result;
use crate::expr::Expr;
use crate::fields::{sobolev_norm, CoefficientSet, GridFunction};
use crate::geometry::{CornerCurve, Grid2D};
use crate::hyperbolic::{march, HyperbolicProblem, MarchOutput};
use crate::nashmoser::{build_transform, directional_defects, linearize, loglog_slope, smoothing_apply, NonlinearProblem};

/// ||u - exact|| / ||exact|| in discrete L2 over u's mask (or `region` within it).
pub fn relative_l2_error(u: &GridFunction, exact: &Expr, region: Option<&[bool]>) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for p in 0..u.grid.len() {
        if !u.mask[p] || region.is_some_and(|r| !r[p]) {
            continue;
        }
        let (x, y) = u.grid.xy(p);
        let e = exact.eval_xy(x, y);
        num += (u.values[p] - e).powi(2);
        den += e * e;
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Wave equation u_yy - u_xx = 0 above the flat curve y = 0 with u = exp(-50 x^2),
/// u_y = 0 there, marched to y = `y_top` inside the unit disk.
pub fn flat_wave_march(h: f64, cfl: f64, y_top: f64) -> Result<MarchOutput> {
    let coeffs = CoefficientSet::principal(-1.0);
    let grid = Grid2D::covering(1.0, h)?;
    let kappa = CornerCurve::smooth(Expr::zero());
    let phi = (Expr::constant(-50.0) * Expr::x().powi(2)).exp();
    let n = (1.0 / h).round() as usize;
    let trace = CauchyTrace::from_exprs(kappa, (phi.clone(), phi), (Expr::zero(), Expr::zero()), h, n, MAX_EXTENSION_ORDER);
    let mut p = HyperbolicProblem::new(grid, &coeffs, trace, 1.0, 1.0);
    p.s_top = y_top;
    p.cfl = cfl;
    p.allow_unstable = cfl > 1.0;
    p.mu = Some(0.0);
    march(&p, 0.0)
}

/// Smooth random field: a few low Fourier modes with standard-normal-ish amplitudes.
pub fn random_field(rng: &mut impl Rng, grid: Grid2D, modes: usize, amplitude: f64) -> GridFunction {
    let terms: Vec<(f64, f64, f64, f64)> = (0..modes)
        .map(|_| (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(0.0..6.3), amplitude * rng.gen_range(-1.0..1.0)))
        .collect();
    GridFunction::full(grid, |x, y| terms.iter().map(|(k1, k2, ph, a)| a * (k1 * x + k2 * y + ph).cos()).sum())
}

/// psi with nonzero partials in every argument, bounded below by 1/2 on moderate data.
pub fn test_psi() -> NonlinearProblem {
    let psi = Expr::parse("1 + 0.25*p1^2 + 0.25*p2^2 + 0.2*cos(x + u) + 0.1*sin(y)").expect("valid formula");
    NonlinearProblem::new(Expr::x().powi(2) - Expr::y().powi(2), psi, 0.5)
}

#[derive(Clone, Debug, Serialize)]
pub struct GradientCheck {
    pub ts: Vec<f64>,
    /// Defects per pair.
    pub defects: Vec<Vec<f64>>,
    pub slopes: Vec<f64>,
}

/// Log-log slopes of the directional finite-difference defect for `pairs` random (w, rho).
pub fn gradient_check(seed: u64, pairs: usize, eps: f64, h: f64) -> Result<GradientCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = Grid2D::covering(1.0, h)?;
    let problem = test_psi();
    let ts = vec![1e-2, 1e-3, 1e-4, 1e-5];
    let mut defects = Vec::new();
    let mut slopes = Vec::new();
    for _ in 0..pairs {
        let w = random_field(&mut rng, grid, 4, 1.0);
        let rho = random_field(&mut rng, grid, 4, 1.0);
        let d = directional_defects(&w, &rho, eps, &problem, &ts)?;
        slopes.push(loglog_slope(&ts, &d));
        defects.push(d);
    }
    Ok(GradientCheck { ts, defects, slopes })
}

/// Largest node defect of the cofactor identity for w = x1^2 x2 / 4 - x1 x2^2 / 8 + x2^2 / 2,
/// whose differences are exact on a dyadic grid.
pub fn det_identity_defect(eps: f64, h: f64) -> Result<f64> {
    let grid = Grid2D::covering(1.0, h)?;
    let w = GridFunction::full(grid, |x, y| 0.25 * x * x * y - 0.125 * x * y * y + 0.5 * y * y);
    Ok(linearize(&w, eps, &NonlinearProblem::unit_cross())?.det_identity_defect)
}

#[derive(Clone, Debug, Serialize)]
pub struct TransformScaling {
    pub eps: Vec<f64>,
    pub shift: Vec<f64>,
    /// shift(eps) / shift(eps / 2).
    pub ratios: Vec<f64>,
    pub b12_max: Vec<f64>,
}

/// max |y1 - x1| for w over a halving sequence of eps.
pub fn transform_scaling(w: impl Fn(f64, f64) -> f64, eps: &[f64], h: f64) -> Result<TransformScaling> {
    let grid = Grid2D::covering(1.0, h)?;
    let wf = GridFunction::full(grid, w);
    let problem = NonlinearProblem::unit_cross();
    let mut shift = Vec::new();
    let mut b12 = Vec::new();
    for &e in eps {
        let tr = build_transform(&linearize(&wf, e, &problem)?)?;
        shift.push(tr.shift_max);
        b12.push(tr.b12_max);
    }
    let ratios = shift.windows(2).map(|s| s[0] / s[1]).collect();
    Ok(TransformScaling { eps: eps.to_vec(), shift, ratios, b12_max: b12 })
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothingConstants {
    pub thetas: Vec<f64>,
    /// sup over the family of theta^2 ||(I - S) u||_{L2} / ||u||_{H2}.
    pub loss: Vec<f64>,
    /// sup over the family of ||S u||_{H2} / (theta ||u||_{H1}).
    pub gain: Vec<f64>,
}

impl SmoothingConstants {
    /// max / min of each constant across theta.
    pub fn spreads(&self) -> (f64, f64) {
        let spread = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min);
        (spread(&self.loss), spread(&self.gain))
    }
}

/// The family exp(-8 |x|^2) cos(2 pi k (x cos a + y sin a)) for frequencies k (cycles per
/// unit length) spread over the cutoff range.
pub fn modulated_bumps(grid: Grid2D, freqs: &[f64]) -> Vec<GridFunction> {
    let mut out = Vec::new();
    for (n, &k) in freqs.iter().enumerate() {
        let a = 0.4 + 0.7 * n as f64;
        let (c, s) = (a.cos(), a.sin());
        out.push(GridFunction::full(grid, |x, y| {
            (-8.0 * (x * x + y * y)).exp() * (2.0 * std::f64::consts::PI * k * (x * c + y * s)).cos()
        }));
    }
    out
}

/// Measures both smoothing constants on the interior of the grid, away from the
/// reflection seams.
pub fn smoothing_constants(h: f64, thetas: &[f64], family: &[f64]) -> Result<SmoothingConstants> {
    let grid = Grid2D::covering(1.0, h)?;
    let inner: Vec<bool> = (0..grid.len())
        .map(|p| {
            let (x, y) = grid.xy(p);
            x * x + y * y <= 0.81
        })
        .collect();
    let fam = modulated_bumps(grid, family);
    let mut loss = Vec::new();
    let mut gain = Vec::new();
    for &theta in thetas {
        let (mut l, mut g): (f64, f64) = (0.0, 0.0);
        for u in &fam {
            let su = smoothing_apply(u, theta);
            let rem = u.sub(&su)?;
            let u2 = sobolev_norm(u, 2, &inner)?.value;
            let u1 = sobolev_norm(u, 1, &inner)?.value;
            l = l.max(theta * theta * rem.l2(Some(&inner)) / u2);
            g = g.max(sobolev_norm(&su, 2, &inner)?.value / (theta * u1));
        }
        loss.push(l);
        gain.push(g);
    }
    Ok(SmoothingConstants { thetas: thetas.to_vec(), loss, gain })
}
