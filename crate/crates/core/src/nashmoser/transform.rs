//! Coordinates y1(x), y2 = x2 removing the mixed second-order term:
//! Phi^{12} d1 y1 + Phi^{22} d2 y1 = 0, y1(x1, 0) = x1.

use serde::Serialize;

use super::linearize::LinearizationState;
use crate::error::{Error, Result};
use crate::fields::stencil::{derivative_1d, WeightCache};
use crate::fields::{diff, GridFunction};
use crate::geometry::Grid2D;

#[derive(Clone, Debug)]
pub struct TransformField {
    pub y1: GridFunction,
    /// d1 y1.
    pub jacobian: GridFunction,
    pub dy1_dx2: GridFunction,
    /// Phi^{kl} d_k y_m d_l y_n for (m, n) = (1, 1), (2, 2); the (1, 2) entry is only measured.
    pub b11: Vec<f64>,
    pub b22: Vec<f64>,
    pub b12_max: f64,
    pub jacobian_min: f64,
    /// max |y1 - x1|.
    pub shift_max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransformSummary {
    pub b12_max: f64,
    pub jacobian_min: f64,
    pub shift_max: f64,
}

impl TransformField {
    pub fn summary(&self) -> TransformSummary {
        TransformSummary { b12_max: self.b12_max, jacobian_min: self.jacobian_min, shift_max: self.shift_max }
    }

    /// x1 with y1(x1, x2_j) = target on row j, by linear interpolation; clamped to the row.
    pub fn inverse_on_row(&self, j: usize, target: f64) -> f64 {
        let g = self.y1.grid;
        let row = |i: usize| self.y1.values[g.idx(i, j)];
        let n = g.nx;
        if target <= row(0) {
            return g.x(0);
        }
        if target >= row(n - 1) {
            return g.x(n - 1);
        }
        // y1 is increasing along rows (jacobian > 1/2)
        let (mut lo, mut hi) = (0, n - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if row(mid) <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = (target - row(lo)) / (row(hi) - row(lo));
        g.x(lo) + t * g.h
    }
}

fn rhs(y: &[f64], c: &[f64], h: f64, cache: &mut WeightCache) -> Vec<f64> {
    let d = derivative_1d(y, h, 1, cache).expect("rows have at least three nodes");
    d.iter().zip(c).map(|(dy, cc)| -cc * dy).collect()
}

/// Marches y1 away from the row x2 = 0 with classical RK4 in x2 and central
/// differences in x1 (coefficients at half steps by averaging rows).
pub fn build_transform(state: &LinearizationState) -> Result<TransformField> {
    let g: Grid2D = state.residual.grid;
    let (nx, ny) = (g.nx, g.ny);
    let h = g.h;
    let speed: Vec<f64> = (0..g.len()).map(|p| state.phi12[p] / state.phi22[p]).collect();
    let row_of = |v: &[f64], j: usize| -> Vec<f64> { (0..nx).map(|i| v[g.idx(i, j)]).collect() };
    let mut y1 = vec![0.0; g.len()];
    let j0 = g.origin_index.1;
    for i in 0..nx {
        y1[g.idx(i, j0)] = g.x(i);
    }
    let mut cache = WeightCache::default();
    for dir in [1isize, -1] {
        let step = dir as f64 * h;
        let mut j = j0;
        loop {
            let jn = j as isize + dir;
            if jn < 0 || jn >= ny as isize {
                break;
            }
            let jn = jn as usize;
            let y = row_of(&y1, j);
            let c0 = row_of(&speed, j);
            let c1 = row_of(&speed, jn);
            let cm: Vec<f64> = c0.iter().zip(&c1).map(|(a, b)| 0.5 * (a + b)).collect();
            let k1 = rhs(&y, &c0, h, &mut cache);
            let t: Vec<f64> = y.iter().zip(&k1).map(|(a, k)| a + 0.5 * step * k).collect();
            let k2 = rhs(&t, &cm, h, &mut cache);
            let t: Vec<f64> = y.iter().zip(&k2).map(|(a, k)| a + 0.5 * step * k).collect();
            let k3 = rhs(&t, &cm, h, &mut cache);
            let t: Vec<f64> = y.iter().zip(&k3).map(|(a, k)| a + step * k).collect();
            let k4 = rhs(&t, &c1, h, &mut cache);
            for i in 0..nx {
                y1[g.idx(i, jn)] = y[i] + step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            j = jn;
        }
    }
    let y1 = GridFunction::new(g, y1, vec![true; g.len()]);
    let jac = diff(&y1, (1, 0))?;
    let dy2 = diff(&y1, (0, 1))?;
    let n = g.len();
    let mut b11 = vec![0.0; n];
    let mut b22 = vec![0.0; n];
    let mut b12_max: f64 = 0.0;
    let mut jmin = f64::INFINITY;
    let mut shift: f64 = 0.0;
    for p in 0..n {
        let (jx, jy) = (jac.values[p], dy2.values[p]);
        let (f11, f12, f22) = (state.phi11[p], state.phi12[p], state.phi22[p]);
        b11[p] = f11 * jx * jx + 2.0 * f12 * jx * jy + f22 * jy * jy;
        b22[p] = f22;
        b12_max = b12_max.max((f12 * jx + f22 * jy).abs());
        jmin = jmin.min(jx);
        shift = shift.max((y1.values[p] - g.xy(p).0).abs());
    }
    if !(jmin > 0.5) {
        return Err(Error::TransformDegenerate { min: jmin });
    }
    Ok(TransformField { y1, jacobian: jac, dy1_dx2: dy2, b11, b22, b12_max, jacobian_min: jmin, shift_max: shift })
}
