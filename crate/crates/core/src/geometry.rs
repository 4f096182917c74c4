//! Domain, degeneracy curves, the uniform grid and per-node region labels.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;

/// Uniform square-cell grid with the corner point (0,0) on a node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid2D {
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    /// Node indices (i, j) of the origin.
    pub origin_index: (usize, usize),
}

impl Grid2D {
    /// Symmetric grid whose half-width is the smallest multiple of `h` reaching `radius`.
    pub fn covering(radius: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Config(format!("grid spacing must be positive, got {h}")));
        }
        if !(radius > 0.0) {
            return Err(Error::Config(format!("radius must be positive, got {radius}")));
        }
        let half = (radius / h - 1e-9).ceil().max(1.0) as usize;
        let n = 2 * half + 1;
        Ok(Grid2D { h, nx: n, ny: n, origin_index: (half, half) })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - self.origin_index.0 as f64) * self.h
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        (j as f64 - self.origin_index.1 as f64) * self.h
    }

    pub fn xy(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.ij(k);
        (self.x(i), self.y(j))
    }

    /// Extent covered in every direction from the origin.
    pub fn half_width(&self) -> f64 {
        let (oi, oj) = self.origin_index;
        let m = oi.min(oj).min(self.nx - 1 - oi).min(self.ny - 1 - oj);
        m as f64 * self.h
    }

    pub fn check_covers(&self, radius: f64) -> Result<()> {
        let covered = self.half_width();
        if covered + 1e-12 * radius.max(1.0) < radius {
            return Err(Error::CoverageError { covered, required: radius });
        }
        Ok(())
    }

    /// Column index of abscissa `x` if it is (to rounding) a node.
    pub fn column_of(&self, x: f64) -> Option<usize> {
        let r = x / self.h + self.origin_index.0 as f64;
        let i = r.round();
        if (r - i).abs() < 1e-9 && i >= 0.0 && (i as usize) < self.nx {
            Some(i as usize)
        } else {
            None
        }
    }

    pub fn row_of(&self, y: f64) -> Option<usize> {
        let r = y / self.h + self.origin_index.1 as f64;
        let j = r.round();
        if (r - j).abs() < 1e-9 && j >= 0.0 && (j as usize) < self.ny {
            Some(j as usize)
        } else {
            None
        }
    }

    /// 4-neighbours inside the grid.
    pub fn neighbours(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> {
        let (nx, ny) = (self.nx, self.ny);
        let cand = [
            (i.wrapping_sub(1), j),
            (i + 1, j),
            (i, j.wrapping_sub(1)),
            (i, j + 1),
        ];
        cand.into_iter().filter(move |&(a, b)| a < nx && b < ny)
    }
}

/// A curve y = kappa(x) that may have a corner at x = 0.
#[derive(Clone, Debug)]
pub struct CornerCurve {
    /// Branch used for x >= 0.
    pub right: Expr,
    /// Branch used for x < 0.
    pub left: Expr,
}

impl CornerCurve {
    pub fn smooth(e: Expr) -> Self {
        CornerCurve { right: e.clone(), left: e }
    }

    pub fn abs_slope(s: f64) -> Self {
        CornerCurve {
            right: Expr::constant(s) * Expr::x(),
            left: Expr::constant(-s) * Expr::x(),
        }
    }

    fn branch(&self, x: f64) -> &Expr {
        if x >= 0.0 {
            &self.right
        } else {
            &self.left
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.branch(x).eval_xy(x, 0.0)
    }

    /// Slope; at x = 0 the right-hand slope.
    pub fn slope(&self, x: f64) -> f64 {
        self.branch(x).derivative(crate::expr::Var::X).eval_xy(x, 0.0)
    }

    /// One-sided derivatives at 0 up to `order`: (right, left).
    pub fn jets(&self, order: usize) -> (Vec<f64>, Vec<f64>) {
        let mut r = Vec::with_capacity(order + 1);
        let mut l = Vec::with_capacity(order + 1);
        let mut er = self.right.clone();
        let mut el = self.left.clone();
        for _ in 0..=order {
            r.push(er.eval_xy(0.0, 0.0));
            l.push(el.eval_xy(0.0, 0.0));
            er = er.derivative(crate::expr::Var::X);
            el = el.derivative(crate::expr::Var::X);
        }
        (r, l)
    }

    /// Negated curve y = -kappa(x).
    pub fn negated(&self) -> Self {
        CornerCurve { right: -self.right.clone(), left: -self.left.clone() }
    }
}

/// The computational disk and the two transversal degeneracy curves through the origin.
#[derive(Clone, Debug)]
pub struct DomainSpec {
    pub radius_inner: f64,
    pub radius_outer: f64,
    pub gamma1: Expr,
    pub gamma2: Expr,
    /// Order of the one-sided jets carried at the corner.
    pub jet_order: usize,
}

impl DomainSpec {
    /// The diagonals y = -x and y = x, the zero set of x^2 - y^2.
    pub fn diagonals(radius_inner: f64, radius_outer: f64) -> Self {
        DomainSpec {
            radius_inner,
            radius_outer,
            gamma1: -Expr::x(),
            gamma2: Expr::x(),
            jet_order: 8,
        }
    }

    /// Checks gamma_i(0) = 0, transversality and the sign of kappa_1, kappa_2.
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_outer > self.radius_inner && self.radius_inner > 0.0) {
            return Err(Error::Config(format!(
                "need 0 < radius_inner < radius_outer, got {} and {}",
                self.radius_inner, self.radius_outer
            )));
        }
        for g in [&self.gamma1, &self.gamma2] {
            let g0 = g.eval_xy(0.0, 0.0);
            if g0.abs() > 1e-12 {
                return Err(Error::Config(format!("degeneracy curve does not pass through the origin: gamma(0) = {g0}")));
            }
        }
        let t = 1e-6;
        let dq = |g: &Expr, s: f64| (g.eval_xy(s, 0.0) - g.eval_xy(0.0, 0.0)) / s;
        let gap_r = (dq(&self.gamma1, t) - dq(&self.gamma2, t)).abs();
        let gap_l = (dq(&self.gamma1, -t) - dq(&self.gamma2, -t)).abs();
        let gap = gap_r.min(gap_l);
        if gap < 1e-6 {
            return Err(Error::TransversalityViolation { gap });
        }
        let upper = self.kappa_upper();
        let lower = self.kappa_lower();
        let n = 200;
        for k in 1..=n {
            let x = self.radius_outer * k as f64 / n as f64;
            for s in [x, -x] {
                if !(upper.eval(s) > 0.0) || !(lower.eval(s) < 0.0) {
                    return Err(Error::Config(format!(
                        "kappa_1 > 0 > kappa_2 fails at x = {s}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn slopes_at_zero(&self) -> (f64, f64) {
        let d1 = self.gamma1.derivative(crate::expr::Var::X).eval_xy(0.0, 0.0);
        let d2 = self.gamma2.derivative(crate::expr::Var::X).eval_xy(0.0, 0.0);
        (d1, d2)
    }

    /// kappa_1 = max(gamma_1, gamma_2).
    pub fn kappa_upper(&self) -> CornerCurve {
        let (d1, d2) = self.slopes_at_zero();
        // for x > 0 the larger curve has the larger slope, for x < 0 the smaller slope
        let (right, left) = if d1 >= d2 {
            (self.gamma1.clone(), self.gamma2.clone())
        } else {
            (self.gamma2.clone(), self.gamma1.clone())
        };
        CornerCurve { right, left }
    }

    /// kappa_2 = min(gamma_1, gamma_2).
    pub fn kappa_lower(&self) -> CornerCurve {
        let (d1, d2) = self.slopes_at_zero();
        let (right, left) = if d1 >= d2 {
            (self.gamma2.clone(), self.gamma1.clone())
        } else {
            (self.gamma1.clone(), self.gamma2.clone())
        };
        CornerCurve { right, left }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    EllipticPlus,
    HyperbolicUp,
    HyperbolicDown,
    Degenerate,
    Exterior,
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Label::EllipticPlus => "elliptic_plus",
            Label::HyperbolicUp => "hyperbolic_up",
            Label::HyperbolicDown => "hyperbolic_down",
            Label::Degenerate => "degenerate",
            Label::Exterior => "exterior",
        }
    }

    pub fn is_hyperbolic(self) -> bool {
        matches!(self, Label::HyperbolicUp | Label::HyperbolicDown)
    }

    /// Marching direction in y for a hyperbolic label.
    pub fn direction(self) -> Option<f64> {
        match self {
            Label::HyperbolicUp => Some(1.0),
            Label::HyperbolicDown => Some(-1.0),
            _ => None,
        }
    }
}

/// A grid-connected open region.
#[derive(Clone, Debug, Serialize)]
pub struct Component {
    pub id: usize,
    pub label: Label,
    pub nodes: usize,
    pub mean_y: f64,
}

#[derive(Clone, Debug)]
pub struct RegionMap {
    pub grid: Grid2D,
    pub labels: Vec<Label>,
    /// Component id per node (`usize::MAX` for Degenerate and Exterior).
    pub component_of: Vec<usize>,
    pub components: Vec<Component>,
    pub radius_outer: f64,
}

/// Labels every node of `grid` by the sign of `k` inside the outer disk.
pub fn build_region_map(spec: &DomainSpec, grid: Grid2D, k: impl Fn(f64, f64) -> f64) -> Result<RegionMap> {
    spec.validate()?;
    grid.check_covers(spec.radius_outer)?;
    let n = grid.len();
    let kv: Vec<f64> = (0..n).map(|p| {
        let (x, y) = grid.xy(p);
        k(x, y)
    }).collect();
    let kscale = kv.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let zero_tol = 1e-13 * kscale;
    let r2 = spec.radius_outer * spec.radius_outer * (1.0 + 1e-12);
    // the outermost frame of nodes stays exterior so every labelled node has 4 neighbours
    let inside: Vec<bool> = (0..n).map(|p| {
        let (i, j) = grid.ij(p);
        let (x, y) = grid.xy(p);
        i > 0 && j > 0 && i + 1 < grid.nx && j + 1 < grid.ny && x * x + y * y <= r2
    }).collect();

    let mut labels = vec![Label::Exterior; n];
    for p in 0..n {
        if !inside[p] {
            continue;
        }
        let (i, j) = grid.ij(p);
        let v = kv[p];
        let flips = grid.neighbours(i, j).any(|(a, b)| kv[grid.idx(a, b)] * v < 0.0);
        labels[p] = if v.abs() <= zero_tol || flips {
            Label::Degenerate
        } else if v > 0.0 {
            Label::EllipticPlus
        } else {
            Label::HyperbolicUp
        };
    }

    // connected components of the open regions
    let mut component_of = vec![usize::MAX; n];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        let l = labels[start];
        if component_of[start] != usize::MAX || matches!(l, Label::Degenerate | Label::Exterior) {
            continue;
        }
        let elliptic = l == Label::EllipticPlus;
        let id = components.len();
        let mut members = Vec::new();
        component_of[start] = id;
        stack.push(start);
        while let Some(p) = stack.pop() {
            members.push(p);
            let (i, j) = grid.ij(p);
            for (a, b) in grid.neighbours(i, j) {
                let q = grid.idx(a, b);
                if component_of[q] == usize::MAX
                    && !matches!(labels[q], Label::Degenerate | Label::Exterior)
                    && (labels[q] == Label::EllipticPlus) == elliptic
                {
                    component_of[q] = id;
                    stack.push(q);
                }
            }
        }
        let mean_y = members.iter().map(|&p| grid.xy(p).1).sum::<f64>() / members.len() as f64;
        let label = if elliptic {
            Label::EllipticPlus
        } else if mean_y >= -1e-12 {
            Label::HyperbolicUp
        } else {
            Label::HyperbolicDown
        };
        for &p in &members {
            labels[p] = label;
        }
        components.push(Component { id, label, nodes: members.len(), mean_y });
    }

    Ok(RegionMap { grid, labels, component_of, components, radius_outer: spec.radius_outer })
}

impl RegionMap {
    pub fn label(&self, i: usize, j: usize) -> Label {
        self.labels[self.grid.idx(i, j)]
    }

    pub fn count(&self, l: Label) -> usize {
        self.labels.iter().filter(|&&x| x == l).count()
    }

    pub fn mask(&self, l: Label) -> Vec<bool> {
        self.labels.iter().map(|&x| x == l).collect()
    }

    /// Nodes inside the disk of the given radius.
    pub fn disk_mask(&self, radius: f64) -> Vec<bool> {
        let r2 = radius * radius * (1.0 + 1e-12);
        (0..self.grid.len())
            .map(|p| {
                let (x, y) = self.grid.xy(p);
                x * x + y * y <= r2
            })
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "x,y,label")?;
        for p in 0..self.grid.len() {
            let (x, y) = self.grid.xy(p);
            writeln!(f, "{x},{y},{}", self.labels[p].name())?;
        }
        Ok(())
    }
}

/// Result of the space-like test on an initial curve.
#[derive(Clone, Debug, Serialize)]
pub struct SpacelikeReport {
    pub sup: f64,
    pub eta0: f64,
    pub pass: bool,
}

/// Supremum of a K' kappa_x^2 along the curve, where `kprime` is the
/// coefficient of -u_xx in the hyperbolic form (positive in the hyperbolic region).
pub fn spacelike_check(
    kappa: &CornerCurve,
    a: impl Fn(f64, f64) -> f64,
    kprime: impl Fn(f64, f64) -> f64,
    eta0: f64,
    half_width: f64,
) -> SpacelikeReport {
    let n = 2000;
    let mut sup = f64::NEG_INFINITY;
    let mut visit = |x: f64, slope: f64| {
        let y = kappa.eval(x);
        let v = a(x, y) * kprime(x, y) * slope * slope;
        if v > sup {
            sup = v;
        }
    };
    let (jr, jl) = kappa.jets(1);
    visit(0.0, jr[1]);
    visit(0.0, jl[1]);
    for k in 1..=n {
        let x = half_width * k as f64 / n as f64;
        visit(x, kappa.slope(x));
        visit(-x, kappa.slope(-x));
    }
    SpacelikeReport { sup, eta0, pass: sup <= eta0 && eta0 < 1.0 }
}

#[derive(Clone, Debug, Serialize)]
pub struct OrientationReport {
    pub pass: bool,
    /// (component id, number of initial-curve nodes where marching does not enter it)
    pub failures: Vec<(usize, usize)>,
}

/// Checks that marching in y (+ for Up, - for Down) from the degeneracy band enters each
/// hyperbolic component. Passes vacuously when there is none.
pub fn orientation_check(region: &RegionMap) -> OrientationReport {
    let g = region.grid;
    let mut bad = vec![0usize; region.components.len()];
    for p in 0..g.len() {
        if region.labels[p] != Label::Degenerate {
            continue;
        }
        let (i, j) = g.ij(p);
        for (a, b) in g.neighbours(i, j) {
            let q = g.idx(a, b);
            let comp = region.component_of[q];
            if comp == usize::MAX {
                continue;
            }
            let Some(dir) = region.labels[q].direction() else { continue };
            // step in the marching direction, passing through the band
            let mut jj = j as isize;
            let mut entered = false;
            for _ in 0..4 {
                jj += dir as isize;
                if jj < 0 || jj >= g.ny as isize {
                    entered = true;
                    break;
                }
                let r = g.idx(i, jj as usize);
                match region.labels[r] {
                    Label::Degenerate => continue,
                    // leaving the disk says nothing about orientation
                    Label::Exterior => {
                        entered = true;
                        break;
                    }
                    _ => {
                        entered = region.component_of[r] == comp;
                        break;
                    }
                }
            }
            if !entered {
                bad[comp] += 1;
            }
        }
    }
    let failures: Vec<(usize, usize)> = bad.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| (i, c)).collect();
    OrientationReport { pass: failures.is_empty(), failures }
}

/// Circular cap removed at an outer corner where a degeneracy curve meets the outer circle.
#[derive(Clone, Debug, Serialize)]
pub struct CornerCap {
    pub corner: (f64, f64),
    pub center: (f64, f64),
    pub radius: f64,
    tangent_line: (f64, f64),
    tangent_circle: (f64, f64),
}

impl CornerCap {
    /// True if p lies in the cap between the corner and the rounding arc.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (cx, cy) = self.center;
        let (px, py) = (x - cx, y - cy);
        if px * px + py * py <= self.radius * self.radius * (1.0 + 1e-12) {
            return false;
        }
        let (u1x, u1y) = (self.tangent_line.0 - cx, self.tangent_line.1 - cy);
        let (u2x, u2y) = (self.tangent_circle.0 - cx, self.tangent_circle.1 - cy);
        let det = u1x * u2y - u1y * u2x;
        if det.abs() < 1e-300 {
            return false;
        }
        let alpha = (px * u2y - py * u2x) / det;
        let beta = (u1x * py - u1y * px) / det;
        alpha >= 0.0 && beta >= 0.0
    }
}

/// Rounding caps of radius `rho` at the four points where the degeneracy curves meet
/// the outer circle; `side` is a function positive on the side to be rounded.
pub fn outer_corner_caps(spec: &DomainSpec, rho: f64, side: impl Fn(f64, f64) -> f64) -> Vec<CornerCap> {
    let r = spec.radius_outer;
    let mut caps = Vec::new();
    for g in [&spec.gamma1, &spec.gamma2] {
        for sgn in [1.0, -1.0] {
            // bisection for |(x, g(x))| = r along x * sgn > 0
            let f = |t: f64| {
                let x = sgn * t;
                let y = g.eval_xy(x, 0.0);
                x * x + y * y - r * r
            };
            let (mut lo, mut hi) = (0.0, r);
            if f(hi) < 0.0 {
                continue;
            }
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if f(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let x = sgn * 0.5 * (lo + hi);
            let y = g.eval_xy(x, 0.0);
            let slope = g.derivative(crate::expr::Var::X).eval_xy(x, 0.0);
            let norm = (1.0 + slope * slope).sqrt();
            let d = (sgn / norm, sgn * slope / norm); // along the curve, outward
            for nsgn in [1.0, -1.0] {
                let nrm = (-d.1 * nsgn, d.0 * nsgn);
                let probe = (x - 2.0 * rho * d.0 + 2.0 * rho * nrm.0, y - 2.0 * rho * d.1 + 2.0 * rho * nrm.1);
                if side(probe.0, probe.1) <= 0.0 {
                    continue;
                }
                // centre c = C + rho n + s d with |c| = r - rho, choose the inward root
                let bx = x + rho * nrm.0;
                let by = y + rho * nrm.1;
                let bb = bx * d.0 + by * d.1;
                let cc = bx * bx + by * by - (r - rho) * (r - rho);
                let disc = bb * bb - cc;
                if disc < 0.0 {
                    continue;
                }
                let s = -bb - disc.sqrt();
                let c = (bx + s * d.0, by + s * d.1);
                let cn = (c.0 * c.0 + c.1 * c.1).sqrt();
                caps.push(CornerCap {
                    corner: (x, y),
                    center: c,
                    radius: rho,
                    tangent_line: (c.0 - rho * nrm.0, c.1 - rho * nrm.1),
                    tangent_circle: (c.0 * r / cn, c.1 * r / cn),
                });
            }
        }
    }
    caps
}
