use serde::Serialize;

use super::ScalarField;
use crate::error::Result;
use crate::expr::Expr;
use crate::geometry::{CornerCurve, Grid2D, Label, RegionMap};

/// Declared structural constants of the operator.
#[derive(Clone, Debug, Serialize)]
pub struct Bounds {
    /// Lower bound for a.
    pub lambda: f64,
    /// Upper bound for a.
    pub big_lambda: f64,
    /// Levy constant.
    pub c_b: f64,
    /// Degeneracy constant.
    pub c_k: f64,
    /// Degeneracy order.
    pub d: usize,
    /// Space-like margin, in (0, 1).
    pub eta0: f64,
    /// Allowed positive part of c in the elliptic region.
    pub eps_c: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { lambda: 1.0, big_lambda: 1.0, c_b: 1.0, c_k: 2.0, d: 2, eta0: 0.5, eps_c: 1e-3 }
    }
}

/// Coefficients of u_yy + a K u_xx + b1 u_x + b2 u_y + c u = f.
#[derive(Clone, Debug)]
pub struct CoefficientSet {
    pub k: ScalarField,
    pub a: ScalarField,
    pub b1: ScalarField,
    pub b2: ScalarField,
    pub c: ScalarField,
    pub f: ScalarField,
    pub bounds: Bounds,
}

impl CoefficientSet {
    /// K = x^2 - y^2 with a = 1 and no lower-order terms.
    pub fn tricomi_cross() -> Self {
        let k = Expr::x().powi(2) - Expr::y().powi(2);
        Self::principal(k)
    }

    /// K = y^2 - x^2: the type-reversed counterpart.
    pub fn reversed() -> Self {
        let k = Expr::y().powi(2) - Expr::x().powi(2);
        Self::principal(k)
    }

    /// Given K, with a = 1, b1 = b2 = c = f = 0.
    pub fn principal(k: impl Into<ScalarField>) -> Self {
        CoefficientSet {
            k: k.into(),
            a: ScalarField::constant(1.0),
            b1: ScalarField::zero(),
            b2: ScalarField::zero(),
            c: ScalarField::zero(),
            f: ScalarField::zero(),
            bounds: Bounds::default(),
        }
    }

    pub fn with_f(mut self, f: impl Into<ScalarField>) -> Self {
        self.f = f.into();
        self
    }

    /// The operator applied to a formula, as a formula. `None` if any coefficient is sampled.
    pub fn apply_expr(&self, u: &Expr) -> Option<Expr> {
        let k = self.k.as_expr()?;
        let a = self.a.as_expr()?;
        let b1 = self.b1.as_expr()?;
        let b2 = self.b2.as_expr()?;
        let c = self.c.as_expr()?;
        Some(
            u.dxy(0, 2)
                + a.clone() * k.clone() * u.dxy(2, 0)
                + b1.clone() * u.dxy(1, 0)
                + b2.clone() * u.dxy(0, 1)
                + c.clone() * u.clone(),
        )
    }

    /// Samples the structural invariants on the labelled grid.
    pub fn check_invariants(&self, region: &RegionMap, upper: &CornerCurve, lower: &CornerCurve) -> Result<InvariantReport> {
        let g = region.grid;
        let b = &self.bounds;
        let kx = self.k.dxy(1, 0)?;
        let ky = self.k.dxy(0, 1)?;
        let mut rep = InvariantReport { a_bounds: true, levy: true, degeneracy: true, c_sign: true, violations: Vec::new() };
        let tol = 1e-12;
        for p in 0..g.len() {
            let l = region.labels[p];
            if l == Label::Exterior {
                continue;
            }
            let (x, y) = g.xy(p);
            let a = self.a.eval(x, y);
            if a < b.lambda - tol || a > b.big_lambda + tol {
                if rep.a_bounds {
                    rep.violations.push(format!("a = {a} outside [{}, {}] at ({x}, {y})", b.lambda, b.big_lambda));
                }
                rep.a_bounds = false;
            }
            let k = self.k.eval(x, y);
            let kxv = kx.eval(x, y);
            let b1 = self.b1.eval(x, y);
            if b1.abs() > b.c_b * (k.abs().sqrt() + kxv.abs()) + tol {
                if rep.levy {
                    rep.violations.push(format!("Levy condition fails at ({x}, {y}): |b1| = {}", b1.abs()));
                }
                rep.levy = false;
            }
            match l {
                Label::EllipticPlus => {
                    let c = self.c.eval(x, y);
                    if c > b.eps_c {
                        if rep.c_sign {
                            rep.violations.push(format!("c = {c} > eps_c at ({x}, {y})"));
                        }
                        rep.c_sign = false;
                    }
                }
                Label::HyperbolicUp | Label::HyperbolicDown => {
                    let kyv = ky.eval(x, y);
                    let curve = if l == Label::HyperbolicUp { upper } else { lower };
                    let dist = (y - curve.eval(x)).abs();
                    let ok1 = kxv * kxv <= b.c_k * b.c_k * kyv.abs() + tol;
                    let ok2 = dist.powi(b.d as i32) <= b.c_k * k.abs() + tol;
                    if !(ok1 && ok2) {
                        if rep.degeneracy {
                            rep.violations.push(format!("degeneracy condition fails at ({x}, {y})"));
                        }
                        rep.degeneracy = false;
                    }
                }
                _ => {}
            }
        }
        Ok(rep)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InvariantReport {
    pub a_bounds: bool,
    pub levy: bool,
    pub degeneracy: bool,
    pub c_sign: bool,
    /// First violation found for each failed check.
    pub violations: Vec<String>,
}

impl InvariantReport {
    pub fn all_pass(&self) -> bool {
        self.a_bounds && self.levy && self.degeneracy && self.c_sign
    }
}

/// |b1| <= c_b (sqrt|K| + |K_x|) at every masked node.
pub fn levy_check(b1: &ScalarField, k: &ScalarField, c_b: f64, grid: Grid2D, mask: &[bool]) -> Result<bool> {
    let kx = k.dxy(1, 0)?;
    Ok((0..grid.len()).filter(|&p| mask[p]).all(|p| {
        let (x, y) = grid.xy(p);
        b1.eval(x, y).abs() <= c_b * (k.eval(x, y).abs().sqrt() + kx.eval(x, y).abs()) + 1e-12
    }))
}
