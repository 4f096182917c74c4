//! Discrete partial derivatives on masked grids and discrete Sobolev norms.

use serde::Serialize;

use super::grid_function::GridFunction;
use super::stencil::{choose, WeightCache};
use crate::error::{Error, Result};

/// Largest total derivative order accepted by [`diff`].
pub const MAX_ORDER: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Axis {
    X,
    Y,
}

/// With `strict` false, nodes on runs too short for the stencil are dropped from the
/// output mask instead of raising an error.
fn diff_axis(u: &GridFunction, order: usize, axis: Axis, cache: &mut WeightCache, strict: bool) -> Result<GridFunction> {
    if order == 0 {
        return Ok(u.clone());
    }
    let g = u.grid;
    let h = g.h;
    let scale = h.powi(order as i32);
    let (n_lines, n_along) = match axis {
        Axis::X => (g.ny, g.nx),
        Axis::Y => (g.nx, g.ny),
    };
    let index = |line: usize, k: usize| match axis {
        Axis::X => g.idx(k, line),
        Axis::Y => g.idx(line, k),
    };
    let mut out = vec![0.0; g.len()];
    let mut mask = u.mask.clone();
    for line in 0..n_lines {
        let mut k = 0;
        while k < n_along {
            if !u.mask[index(line, k)] {
                k += 1;
                continue;
            }
            let a = k;
            while k + 1 < n_along && u.mask[index(line, k + 1)] {
                k += 1;
            }
            let b = k;
            for m in a..=b {
                let Some(c) = choose(order, m, a, b) else {
                    if strict {
                        let (i, j) = g.ij(index(line, m));
                        return Err(Error::MaskTooThin { i, j, needed: order + 1 });
                    }
                    mask[index(line, m)] = false;
                    continue;
                };
                let w = cache.weights(order, &c);
                let mut s = 0.0;
                for (t, wt) in w.iter().enumerate() {
                    let pos = (m as isize + c.start + t as isize) as usize;
                    s += wt * u.values[index(line, pos)];
                }
                out[index(line, m)] = s / scale;
            }
            k += 1;
        }
    }
    Ok(GridFunction::new(g, out, mask))
}

/// Discrete D_x^i D_y^j u: central differences inside the mask, one-sided of matching
/// order near its edges, second order on smooth fields.
pub fn diff(u: &GridFunction, multi_index: (usize, usize)) -> Result<GridFunction> {
    let mut cache = WeightCache::default();
    diff_cached(u, multi_index, &mut cache)
}

pub(crate) fn diff_cached(u: &GridFunction, (i, j): (usize, usize), cache: &mut WeightCache) -> Result<GridFunction> {
    if i + j > MAX_ORDER {
        return Err(Error::Config(format!("derivative order {} exceeds {MAX_ORDER}", i + j)));
    }
    let dx = diff_axis(u, i, Axis::X, cache, true)?;
    diff_axis(&dx, j, Axis::Y, cache, true)
}

#[derive(Clone, Debug, Serialize)]
pub struct NormReport {
    pub order: usize,
    pub value: f64,
    pub nodes: usize,
}

/// sqrt( sum_{|alpha| <= s} h^2 sum_region (D^alpha u)^2 ), derivatives taken on u's mask.
/// Nodes on mask runs too short for a stencil (isolated tips of a disk, say) are left
/// out of the sums for that derivative.
pub fn sobolev_norm(u: &GridFunction, s: usize, region: &[bool]) -> Result<NormReport> {
    let g = u.grid;
    let h2 = g.h * g.h;
    let sel: Vec<usize> = (0..g.len()).filter(|&p| region[p] && u.mask[p]).collect();
    if sel.is_empty() {
        return Ok(NormReport { order: s, value: 0.0, nodes: 0 });
    }
    let mut cache = WeightCache::default();
    let mut total = 0.0;
    // D_x^i first, reused across j
    for i in 0..=s {
        let dx = diff_axis(u, i, Axis::X, &mut cache, false)?;
        for j in 0..=(s - i) {
            let d = diff_axis(&dx, j, Axis::Y, &mut cache, false)?;
            total += h2 * sel.iter().filter(|&&p| d.mask[p]).map(|&p| d.values[p] * d.values[p]).sum::<f64>();
        }
    }
    Ok(NormReport { order: s, value: total.sqrt(), nodes: sel.len() })
}

/// Norm of equally spaced 1D samples: sqrt( sum_{k<=s} h sum (D^k v)^2 ).
pub fn sobolev_norm_1d(v: &[f64], h: f64, s: usize) -> Result<f64> {
    let mut cache = WeightCache::default();
    let mut total = 0.0;
    for k in 0..=s {
        let d = super::stencil::derivative_1d(v, h, k, &mut cache)
            .ok_or(Error::MaskTooThin { i: 0, j: 0, needed: k + 1 })?;
        total += h * d.iter().map(|x| x * x).sum::<f64>();
    }
    Ok(total.sqrt())
}
