//! Compatibility conditions at the corner of the initial curve and the extension
//! function that matches Cauchy data to high order.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::fields::stencil::{derivative_1d, fornberg, WeightCache};
use crate::fields::{CoefficientSet, GridFunction, ScalarField};
use crate::geometry::{CornerCurve, Grid2D};
use crate::linalg::dense_solve;
use crate::poly::{binomial, series_from_derivatives, Taylor2};

/// Values on the two branches x >= 0 and x <= 0. Index k is the point x = +k h
/// on the right branch and x = -k h on the left branch; index 0 is the corner.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Branches {
    pub right: Vec<f64>,
    pub left: Vec<f64>,
}

impl Branches {
    pub fn new(right: Vec<f64>, left: Vec<f64>) -> Self {
        Branches { right, left }
    }

    fn map(&self, f: impl Fn(&[f64], f64) -> Vec<f64>, h: f64) -> Branches {
        Branches { right: f(&self.right, h), left: f(&self.left, -h) }
    }

    pub fn max_abs(&self) -> f64 {
        self.right.iter().chain(&self.left).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Cauchy data (phi, psi) = (u, u_y) along y = kappa(x), sampled on grid columns,
/// with one-sided derivative jets at the corner.
#[derive(Clone, Debug)]
pub struct CauchyTrace {
    pub kappa: CornerCurve,
    pub h: f64,
    pub phi: Branches,
    pub psi: Branches,
    /// D^k phi(0+), D^k phi(0-).
    pub phi_jets: Branches,
    /// D^k psi(0+), D^k psi(0-).
    pub psi_jets: Branches,
}

fn expr_jets(e: &Expr, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut d = e.clone();
    for _ in 0..=order {
        out.push(d.eval_xy(0.0, 0.0));
        d = d.derivative(Var::X);
    }
    out
}

/// One-sided derivatives at index 0 of samples with spacing h (signed).
fn sample_jets(v: &[f64], h: f64, order: usize) -> Vec<f64> {
    let mut out = vec![v.first().copied().unwrap_or(0.0)];
    for k in 1..=order {
        let n = (k + 3).min(v.len());
        if n <= k {
            out.push(0.0);
            continue;
        }
        let nodes: Vec<f64> = (0..n).map(|m| m as f64).collect();
        let w = fornberg(k, 0.0, &nodes);
        let s: f64 = w.iter().zip(v).map(|(a, b)| a * b).sum();
        out.push(s / h.powi(k as i32));
    }
    out
}

impl CauchyTrace {
    /// Data given by formulas on each branch, sampled at n + 1 points per branch.
    pub fn from_exprs(kappa: CornerCurve, phi: (Expr, Expr), psi: (Expr, Expr), h: f64, n: usize, order: usize) -> Self {
        let samp = |e: &Expr, sgn: f64| (0..=n).map(|k| e.eval_xy(sgn * k as f64 * h, 0.0)).collect::<Vec<_>>();
        CauchyTrace {
            phi: Branches::new(samp(&phi.0, 1.0), samp(&phi.1, -1.0)),
            psi: Branches::new(samp(&psi.0, 1.0), samp(&psi.1, -1.0)),
            phi_jets: Branches::new(expr_jets(&phi.0, order), expr_jets(&phi.1, order)),
            psi_jets: Branches::new(expr_jets(&psi.0, order), expr_jets(&psi.1, order)),
            kappa,
            h,
        }
    }

    /// Data from samples; jets by one-sided differences. `phi_jets` may be supplied
    /// exactly (e.g. from the Dirichlet formula) to override the sampled ones.
    pub fn from_samples(kappa: CornerCurve, h: f64, phi: Branches, psi: Branches, order: usize, phi_jets: Option<Branches>) -> Self {
        let phi_jets = phi_jets.unwrap_or_else(|| phi.map(|v, hh| sample_jets(v, hh, order), h));
        let psi_jets = psi.map(|v, hh| sample_jets(v, hh, order), h);
        CauchyTrace { kappa, h, phi, psi, phi_jets, psi_jets }
    }

    pub fn zero(kappa: CornerCurve, h: f64, n: usize, order: usize) -> Self {
        let z = Branches::new(vec![0.0; n + 1], vec![0.0; n + 1]);
        let zj = Branches::new(vec![0.0; order + 1], vec![0.0; order + 1]);
        CauchyTrace { kappa, h, phi: z.clone(), psi: z, phi_jets: zj.clone(), psi_jets: zj }
    }

    /// Mirror image under x -> -x.
    pub fn reflected(&self) -> Self {
        let neg_x = -Expr::x();
        let kappa = CornerCurve {
            right: self.kappa.left.compose_xy(&neg_x, &Expr::y()),
            left: self.kappa.right.compose_xy(&neg_x, &Expr::y()),
        };
        let flip = |j: &[f64]| j.iter().enumerate().map(|(k, v)| if k % 2 == 1 { -v } else { *v }).collect::<Vec<_>>();
        CauchyTrace {
            kappa,
            h: self.h,
            phi: Branches::new(self.phi.left.clone(), self.phi.right.clone()),
            psi: Branches::new(self.psi.left.clone(), self.psi.right.clone()),
            phi_jets: Branches::new(flip(&self.phi_jets.left), flip(&self.phi_jets.right)),
            psi_jets: Branches::new(flip(&self.psi_jets.left), flip(&self.psi_jets.right)),
        }
    }

    /// Largest magnitude among samples and the jets of order <= 2 (higher jets of
    /// sampled data are noisy and would swamp the scale).
    pub fn scale(&self) -> f64 {
        let low = |b: &Branches| b.right.iter().take(3).chain(b.left.iter().take(3)).fold(0.0f64, |m, v| m.max(v.abs()));
        self.phi.max_abs().max(self.psi.max_abs()).max(low(&self.phi_jets)).max(low(&self.psi_jets))
    }

    pub fn samples_per_branch(&self) -> usize {
        self.phi.right.len().min(self.phi.left.len())
    }

    /// Sample on the grid column at x = i h (i signed).
    pub fn at_column(b: &Branches, i: isize) -> f64 {
        if i >= 0 {
            b.right[i as usize]
        } else {
            b.left[(-i) as usize]
        }
    }
}

/// Outcome of the corner compatibility check.
#[derive(Clone, Debug, Serialize)]
pub struct CompatReport {
    pub order: usize,
    /// r_1 .. r_m.
    pub residuals: Vec<f64>,
    pub tolerances: Vec<f64>,
    pub pass: Vec<bool>,
    /// Resolved corner derivatives D_x^k D_y^l u(0), k + l <= m, listed by total order
    /// then by l; averaged over the two sides.
    pub corner_jet: Vec<((usize, usize), f64)>,
    /// (1 + A kappa_x^2)^(n-1) per side and order, with A the u_xx coefficient at the corner.
    pub determinant_trail: Vec<(f64, f64)>,
    pub scale: f64,
}

impl CompatReport {
    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|&p| p)
    }

    /// First failing order, as an error.
    pub fn require(&self) -> Result<()> {
        for (n, ((&r, &t), &p)) in self.residuals.iter().zip(&self.tolerances).zip(&self.pass).enumerate() {
            if !p {
                return Err(Error::IncompatibleData { order: n + 1, residual: r, tol: t });
            }
        }
        Ok(())
    }
}

/// Tolerances for the check: rel * scale, plus `allowance(order)` * scale.
#[derive(Clone, Debug)]
pub struct CompatTolerance {
    pub rel: f64,
    /// Extra relative allowance per order (index 0 is order 1), for numerically extracted traces.
    pub allowance: Vec<f64>,
}

impl Default for CompatTolerance {
    fn default() -> Self {
        CompatTolerance { rel: 1e-6, allowance: Vec::new() }
    }
}

struct SideData<'a> {
    kappa: Vec<f64>,
    phi: &'a [f64],
    psi: &'a [f64],
}

/// Taylor polynomials at the corner of the operator coefficients.
struct CornerCoefficients {
    a_op: Taylor2,
    b1: Taylor2,
    b2: Taylor2,
    c: Taylor2,
    f: Taylor2,
}

fn corner_coefficients(coeffs: &CoefficientSet, degree: usize) -> Result<CornerCoefficients> {
    let a = coeffs.a.taylor(0.0, 0.0, degree)?;
    let k = coeffs.k.taylor(0.0, 0.0, degree)?;
    Ok(CornerCoefficients {
        a_op: a.mul(&k),
        b1: coeffs.b1.taylor(0.0, 0.0, degree)?,
        b2: coeffs.b2.taylor(0.0, 0.0, degree)?,
        c: coeffs.c.taylor(0.0, 0.0, degree)?,
        f: coeffs.f.taylor(0.0, 0.0, degree)?,
    })
}

/// Equations of order n evaluated at a candidate jet u: (n - 1) PDE rows, the phi row,
/// the psi row. Zero when u is consistent.
fn order_rows(u: &Taylor2, n: usize, cc: &CornerCoefficients, side: &SideData) -> Vec<f64> {
    let mut rows = Vec::with_capacity(n + 1);
    if n >= 2 {
        let p = u
            .diff(0, 2)
            .add(&cc.a_op.mul(&u.diff(2, 0)))
            .add(&cc.b1.mul(&u.diff(1, 0)))
            .add(&cc.b2.mul(&u.diff(0, 1)))
            .add(&cc.c.mul(u))
            .sub(&cc.f);
        for j in 0..=(n - 2) {
            rows.push(p.derivative_at_origin(n - 2 - j, j));
        }
    }
    let s = u.along_curve(&series_from_derivatives(&side.kappa));
    rows.push(s[n] * factorial(n) - side.phi.get(n).copied().unwrap_or(0.0));
    let sy = u.diff(0, 1).along_curve(&series_from_derivatives(&side.kappa));
    rows.push(sy.get(n - 1).copied().unwrap_or(0.0) * factorial(n - 1) - side.psi.get(n - 1).copied().unwrap_or(0.0));
    rows
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

/// Resolves the corner jet of one side up to order m.
fn resolve_side(cc: &CornerCoefficients, side: &SideData, m: usize) -> Result<(Taylor2, Vec<f64>)> {
    let mut u = Taylor2::zero(m);
    u.set_derivative(0, 0, side.phi.first().copied().unwrap_or(0.0));
    let k1 = side.kappa.get(1).copied().unwrap_or(0.0);
    let q = 1.0 + cc.a_op.coef(0, 0) * k1 * k1;
    if q.abs() < 1e-8 {
        return Err(Error::CharacteristicCorner { value: q.abs() });
    }
    let mut trail = Vec::new();
    for n in 1..=m {
        let unknown = |u: &Taylor2, k: usize, v: f64| {
            let mut w = u.clone();
            w.set_derivative(n - k, k, v);
            w
        };
        let r0 = order_rows(&u, n, cc, side);
        let mut mat = vec![vec![0.0; n + 1]; n + 1];
        for k in 0..=n {
            let rk = order_rows(&unknown(&u, k, 1.0), n, cc, side);
            for (row, (a, b)) in rk.iter().zip(&r0).enumerate() {
                mat[row][k] = a - b;
            }
        }
        let rhs: Vec<f64> = r0.iter().map(|v| -v).collect();
        let z = dense_solve(mat, rhs).map_err(|_| Error::CharacteristicCorner { value: q.abs().powi(n as i32 - 1) })?;
        for (k, v) in z.into_iter().enumerate() {
            u.set_derivative(n - k, k, v);
        }
        trail.push(q.powi(n as i32 - 1));
    }
    Ok((u, trail))
}

/// Size of the order-n data along the curve: sup |phi^(n)| and sup |psi^(n-1)| over the
/// sampled branches.
fn order_scale(trace: &CauchyTrace, n: usize) -> f64 {
    let mut cache = WeightCache::default();
    let mut s: f64 = 0.0;
    for (b, k) in [(&trace.phi, n), (&trace.psi, n - 1)] {
        for (v, h) in [(&b.right, trace.h), (&b.left, -trace.h)] {
            if let Some(d) = derivative_1d(v, h, k, &mut cache) {
                s = d.iter().fold(s, |m, x| m.max(x.abs()));
            }
        }
    }
    s
}

/// Checks the corner compatibility conditions of orders 1..=m for the operator
/// u_yy + a K u_xx + b1 u_x + b2 u_y + c u = f.
pub fn check_compatibility(trace: &CauchyTrace, coeffs: &CoefficientSet, m: usize, tol: &CompatTolerance) -> Result<CompatReport> {
    let m = m.max(1);
    let cc = corner_coefficients(coeffs, m)?;
    let (kr, kl) = trace.kappa.jets(m);
    let right = SideData { kappa: kr, phi: &trace.phi_jets.right, psi: &trace.psi_jets.right };
    let left = SideData { kappa: kl, phi: &trace.phi_jets.left, psi: &trace.psi_jets.left };
    let (ur, tr) = resolve_side(&cc, &right, m)?;
    let (ul, tl) = resolve_side(&cc, &left, m)?;

    let fscale = (0..=m.saturating_sub(2))
        .flat_map(|n| (0..=n).map(move |j| (n - j, j)))
        .map(|(i, j)| cc.f.derivative_at_origin(i, j).abs())
        .fold(0.0, f64::max);
    // corner jets can vanish to high order, so the trace samples enter the scale too
    let scale = trace
        .phi_jets
        .right
        .iter()
        .take(m + 1)
        .chain(trace.phi_jets.left.iter().take(m + 1))
        .chain(trace.psi_jets.right.iter().take(m))
        .chain(trace.psi_jets.left.iter().take(m))
        .fold(fscale.max(trace.phi.max_abs()).max(trace.psi.max_abs()), |acc, v| acc.max(v.abs()));

    let mut residuals = Vec::new();
    let mut tolerances = Vec::new();
    let mut pass = Vec::new();
    let mut corner_jet = vec![((0, 0), 0.5 * (ur.derivative_at_origin(0, 0) + ul.derivative_at_origin(0, 0)))];
    for n in 1..=m {
        let mut r: f64 = 0.0;
        for k in 0..=n {
            let a = ur.derivative_at_origin(n - k, k);
            let b = ul.derivative_at_origin(n - k, k);
            r = r.max((a - b).abs());
            corner_jet.push(((n - k, k), 0.5 * (a + b)));
        }
        let t = (tol.rel + tol.allowance.get(n - 1).copied().unwrap_or(0.0)) * scale.max(order_scale(trace, n));
        residuals.push(r);
        tolerances.push(t);
        pass.push(r <= t);
    }
    Ok(CompatReport {
        order: m,
        residuals,
        tolerances,
        pass,
        corner_jet,
        determinant_trail: tr.into_iter().zip(tl).collect(),
        scale,
    })
}

/// Smooth cutoff: 1 on (-inf, 1], 0 on [2, inf).
pub fn cutoff(r: f64) -> f64 {
    if r <= 1.0 {
        return 1.0;
    }
    if r >= 2.0 {
        return 0.0;
    }
    let g = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
    let a = g(2.0 - r);
    a / (a + g(r - 1.0))
}

/// Largest number of normal derivatives carried by the extension.
pub const MAX_EXTENSION_ORDER: usize = 8;

/// v(x, s) = sum_k U_k(x) t^k / k! * cutoff(t / tau) with t = s - sigma kappa(x), on grid columns.
#[derive(Clone, Debug)]
pub struct Extension {
    pub grid: Grid2D,
    /// +1 marching up, -1 marching down; s = sigma y.
    pub sigma: f64,
    pub tau: f64,
    /// U_k per grid column (index = column).
    pub normal_derivatives: Vec<Vec<f64>>,
    /// sigma kappa at each column.
    pub curve_s: Vec<f64>,
}

impl Extension {
    pub fn order(&self) -> usize {
        self.normal_derivatives.len().saturating_sub(1)
    }

    /// Value at column i and marching coordinate s.
    pub fn eval(&self, i: usize, s: f64) -> f64 {
        let t = s - self.curve_s[i];
        let w = cutoff(t / self.tau);
        if w == 0.0 {
            return 0.0;
        }
        let mut term = 1.0;
        let mut sum = 0.0;
        for (k, uk) in self.normal_derivatives.iter().enumerate() {
            if k > 0 {
                term *= t / k as f64;
            }
            sum += uk[i] * term;
        }
        sum * w
    }

    /// Samples v at the masked grid nodes (y = s / sigma).
    pub fn to_grid(&self, mask: Vec<bool>) -> GridFunction {
        let g = self.grid;
        let values = (0..g.len())
            .map(|p| {
                if !mask[p] {
                    return 0.0;
                }
                let (i, j) = g.ij(p);
                self.eval(i, self.sigma * g.y(j))
            })
            .collect();
        GridFunction::new(g, values, mask)
    }
}

/// The coefficient of u_xx, a (K - eps), as a field.
pub fn uxx_coefficient(coeffs: &CoefficientSet, eps: f64) -> ScalarField {
    match (&coeffs.a, &coeffs.k) {
        (ScalarField::Expr(a), ScalarField::Expr(k)) => {
            let kk = if eps == 0.0 { k.clone() } else { k.clone() - Expr::constant(eps) };
            ScalarField::Expr(a.clone() * kk)
        }
        (a, k) => {
            let grid = match (a, k) {
                (ScalarField::Sampled(g), _) | (_, ScalarField::Sampled(g)) => g.grid,
                _ => unreachable!(),
            };
            let ag = a.sample(grid);
            let kg = k.sample(grid);
            let v = ag.values.iter().zip(&kg.values).map(|(x, y)| x * (y - eps)).collect();
            ScalarField::sampled(GridFunction::new(grid, v, vec![true; grid.len()]))
        }
    }
}

/// Builds the extension of the Cauchy data with `order` + 1 normal derivatives, using
/// the operator u_ss + A u_xx + b1 u_x + sigma b2 u_s + c u = f in s = sigma y,
/// with A = a (K - eps).
pub fn extend_cauchy_data(
    trace: &CauchyTrace,
    coeffs: &CoefficientSet,
    eps: f64,
    order: usize,
    grid: Grid2D,
    sigma: f64,
    tau: f64,
) -> Result<Extension> {
    let order = order.clamp(1, MAX_EXTENSION_ORDER);
    let h = grid.h;
    let (oi, _) = grid.origin_index;
    let n_side = trace.samples_per_branch();
    if (trace.h - h).abs() > 1e-12 * h {
        return Err(Error::Config("trace spacing differs from the grid spacing".into()));
    }
    let a_op = uxx_coefficient(coeffs, eps);
    let fields = [&a_op, &coeffs.b1, &coeffs.b2, &coeffs.c, &coeffs.f];
    // s-derivatives of the fields: d_s^j = sigma^j d_y^j
    let mut dfields: Vec<Vec<ScalarField>> = Vec::new();
    for fld in fields {
        let mut v = Vec::new();
        for j in 0..=order {
            v.push(if fld.is_zero() { ScalarField::zero() } else { fld.dxy(0, j)? });
        }
        dfields.push(v);
    }
    let mut cache = WeightCache::default();
    let ncols = grid.nx;
    let mut us = vec![vec![0.0; ncols]; order + 1];
    let mut curve_s = vec![0.0; ncols];
    for i in 0..ncols {
        curve_s[i] = sigma * trace.kappa.eval(grid.x(i));
    }

    for (branch_sign, phi, psi) in [(1.0, &trace.phi.right, &trace.psi.right), (-1.0, &trace.phi.left, &trace.psi.left)] {
        let n = n_side;
        let hb = branch_sign * h;
        let xs: Vec<f64> = (0..n).map(|k| branch_sign * k as f64 * h).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| trace.kappa.eval(x)).collect();
        let kslope: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let e = if k == 0 {
                    if branch_sign > 0.0 { &trace.kappa.right } else { &trace.kappa.left }
                } else if x >= 0.0 {
                    &trace.kappa.right
                } else {
                    &trace.kappa.left
                };
                sigma * e.derivative(Var::X).eval_xy(x, 0.0)
            })
            .collect();
        let at = |fl: &ScalarField| -> Vec<f64> { xs.iter().zip(&ys).map(|(&x, &y)| fl.eval(x, y)).collect() };
        let dval: Vec<Vec<Vec<f64>>> = dfields
            .iter()
            .map(|v| v.iter().enumerate().map(|(j, fl)| at(fl).into_iter().map(|z| z * sigma.powi(j as i32)).collect()).collect())
            .collect();
        let (da, db1, db2, dc, df) = (&dval[0], &dval[1], &dval[2], &dval[3], &dval[4]);
        let deriv = |v: &[f64], cache: &mut WeightCache| -> Result<Vec<f64>> {
            derivative_1d(v, hb, 1, cache).ok_or(Error::MaskTooThin { i: 0, j: 0, needed: 2 })
        };
        let mut u: Vec<Vec<f64>> = vec![phi[..n].to_vec(), psi[..n].iter().map(|v| sigma * v).collect()];
        // D1_k = U_k' - kappa' U_{k+1}
        let d1 = |u: &Vec<Vec<f64>>, k: usize, cache: &mut WeightCache| -> Result<Vec<f64>> {
            let du = deriv(&u[k], cache)?;
            Ok((0..n).map(|p| du[p] - kslope[p] * u[k + 1][p]).collect())
        };
        for k in 0..=(order.saturating_sub(2)) {
            let d1k = d1(&u, k, &mut cache)?;
            let d1k_x = deriv(&d1k, &mut cache)?;
            let du_next = deriv(&u[k + 1], &mut cache)?;
            let mut rhs = vec![0.0; n];
            for p in 0..n {
                rhs[p] = df[k][p] - da[0][p] * (d1k_x[p] - kslope[p] * du_next[p]);
            }
            for j in 0..=k {
                let bin = binomial(k, j);
                let m = k - j;
                if j >= 1 {
                    // D2_m = D1_m' - kappa' D1_{m+1}, all known for m + 2 <= k + 1
                    let d1m = d1(&u, m, &mut cache)?;
                    let d1m_x = deriv(&d1m, &mut cache)?;
                    let d1m1 = d1(&u, m + 1, &mut cache)?;
                    for p in 0..n {
                        rhs[p] -= bin * da[j][p] * (d1m_x[p] - kslope[p] * d1m1[p]);
                    }
                }
                let d1m = d1(&u, m, &mut cache)?;
                for p in 0..n {
                    rhs[p] -= bin * (db1[j][p] * d1m[p] + db2[j][p] * sigma * u[m + 1][p] + dc[j][p] * u[m][p]);
                }
            }
            let mut next = vec![0.0; n];
            for p in 0..n {
                let q = 1.0 + da[0][p] * kslope[p] * kslope[p];
                if q.abs() < 1e-8 {
                    return Err(Error::CharacteristicCorner { value: q.abs() });
                }
                next[p] = rhs[p] / q;
            }
            u.push(next);
        }
        for (k, uk) in u.iter().enumerate().take(order + 1) {
            for p in 0..n {
                let col = oi as isize + (branch_sign as isize) * p as isize;
                if col < 0 || col as usize >= ncols {
                    continue;
                }
                let col = col as usize;
                if p == 0 {
                    us[k][col] += 0.5 * uk[p];
                } else {
                    us[k][col] = uk[p];
                }
            }
        }
    }
    Ok(Extension { grid, sigma, tau, normal_derivatives: us, curve_s })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_curve() -> CornerCurve {
        CornerCurve::abs_slope(1.0)
    }

    #[test]
    fn first_order_residual_is_twice_psi() {
        let c = CoefficientSet::principal(Expr::y().powi(2) - Expr::x().powi(2));
        for psi0 in [0.0, 1.0, -0.37] {
            let t = CauchyTrace::from_exprs(
                abs_curve(),
                (Expr::zero(), Expr::zero()),
                (Expr::constant(psi0), Expr::constant(psi0)),
                0.01,
                10,
                4,
            );
            let r = check_compatibility(&t, &c, 1, &CompatTolerance::default()).unwrap();
            assert_eq!(r.residuals[0], 2.0 * psi0.abs());
        }
    }

    #[test]
    fn cutoff_profile() {
        assert_eq!(cutoff(0.5), 1.0);
        assert_eq!(cutoff(2.5), 0.0);
        assert!((cutoff(1.5) - 0.5).abs() < 1e-12);
    }
}
