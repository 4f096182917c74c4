//! Finite-difference weights on arbitrary 1D node sets (Fornberg's recursion).

use std::collections::HashMap;

/// Weights for the `order`-th derivative at `x0` from values at `nodes`.
pub fn fornberg(order: usize, x0: f64, nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    assert!(n > order, "need more nodes than the derivative order");
    // c[j][k]: weight of node j for derivative k
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Number of points of the symmetric second-order stencil for derivative `order`.
pub fn central_points(order: usize) -> usize {
    2 * ((order + 1) / 2) + 1
}

/// Number of points of a one-sided second-order stencil.
pub fn one_sided_points(order: usize) -> usize {
    order + 2
}

/// Chosen stencil for one node inside a run of valid nodes.
#[derive(Clone, Debug)]
pub struct Choice {
    /// First node offset relative to the evaluation node.
    pub start: isize,
    pub len: usize,
}

/// Picks a stencil for position `k` within a run `[a, b]` (inclusive, in run coordinates).
/// Returns `None` if the run is shorter than `order + 1` nodes.
pub fn choose(order: usize, k: usize, a: usize, b: usize) -> Option<Choice> {
    if order == 0 {
        return Some(Choice { start: 0, len: 1 });
    }
    let run = b - a + 1;
    if run < order + 1 {
        return None;
    }
    let cp = central_points(order);
    let half = cp / 2;
    if k >= a + half && k + half <= b {
        return Some(Choice { start: -(half as isize), len: cp });
    }
    let len = one_sided_points(order).min(run);
    // window as centred as the run allows
    let mut lo = k as isize - (len as isize) / 2;
    lo = lo.max(a as isize);
    let hi_max = b as isize - len as isize + 1;
    lo = lo.min(hi_max);
    Some(Choice { start: lo - k as isize, len })
}

/// Memo of integer-offset weights scaled to unit spacing.
#[derive(Default)]
pub struct WeightCache {
    map: HashMap<(usize, isize, usize), Vec<f64>>,
}

impl WeightCache {
    pub fn weights(&mut self, order: usize, choice: &Choice) -> &[f64] {
        self.map.entry((order, choice.start, choice.len)).or_insert_with(|| {
            let nodes: Vec<f64> = (0..choice.len).map(|m| (choice.start + m as isize) as f64).collect();
            fornberg(order, 0.0, &nodes)
        })
    }
}

/// Derivative of `order` of equally spaced samples `v` (spacing `h`) at every point,
/// using central stencils inside and one-sided ones near the ends.
pub fn derivative_1d(v: &[f64], h: f64, order: usize, cache: &mut WeightCache) -> Option<Vec<f64>> {
    if v.is_empty() {
        return Some(Vec::new());
    }
    let b = v.len() - 1;
    let scale = h.powi(order as i32);
    let mut out = Vec::with_capacity(v.len());
    for k in 0..v.len() {
        let c = choose(order, k, 0, b)?;
        let w = cache.weights(order, &c);
        let s: f64 = w.iter().enumerate().map(|(m, wm)| wm * v[(k as isize + c.start + m as isize) as usize]).sum();
        out.push(s / scale);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_weights() {
        let w = fornberg(2, 0.0, &[-1.0, 0.0, 1.0]);
        assert_eq!(w, vec![1.0, -2.0, 1.0]);
        let w = fornberg(1, 0.0, &[0.0, 1.0, 2.0]);
        assert!((w[0] + 1.5).abs() < 1e-14 && (w[1] - 2.0).abs() < 1e-14 && (w[2] + 0.5).abs() < 1e-14);
    }

    #[test]
    fn stencil_choice() {
        let c = choose(2, 5, 0, 10).unwrap();
        assert_eq!((c.start, c.len), (-1, 3));
        let c = choose(2, 0, 0, 10).unwrap();
        assert_eq!((c.start, c.len), (0, 4));
        assert!(choose(4, 0, 0, 3).is_none());
    }
}
