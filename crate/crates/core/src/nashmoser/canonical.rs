//! The split operator in y coordinates:
//! a22 d_{y2 y2} + a11 K d_{y1 y1} + (b1 K + a11 d_{y1} K) d_{y1} + b2 d_{y2} + c,
//! obtained from F'(w) by replacing det Phi with K psi.

use serde::Serialize;

use super::linearize::LinearizationState;
use super::transform::TransformField;
use super::NonlinearProblem;
use crate::error::Result;
use crate::expr::Expr;
use crate::fields::{bilinear, diff, Bounds, CoefficientSet, GridFunction, ScalarField};

/// Coefficients sampled at the x nodes.
#[derive(Clone, Debug)]
pub struct CanonicalOperator {
    pub eps: f64,
    pub a11: Vec<f64>,
    pub a22: Vec<f64>,
    /// Part of the d_{y1} coefficient multiplying K.
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub c: Vec<f64>,
    /// K(eps^2 y) as a formula in y.
    pub k_scaled: Expr,
}

#[derive(Clone, Debug, Serialize)]
pub struct CanonicalSummary {
    pub max_a11_dev: f64,
    pub max_a22_dev: f64,
}

impl CanonicalOperator {
    pub fn summary(&self) -> CanonicalSummary {
        let dev = |v: &[f64]| v.iter().fold(0.0f64, |m, a| m.max((a - 1.0).abs()));
        CanonicalSummary { max_a11_dev: dev(&self.a11), max_a22_dev: dev(&self.a22) }
    }
}

/// K(eps^2 x) as a formula.
pub fn scaled_k(problem: &NonlinearProblem, eps: f64) -> Expr {
    let e2 = Expr::constant(eps * eps);
    problem.k.compose_xy(&(e2.clone() * Expr::x()), &(e2 * Expr::y()))
}

pub fn canonical_operator(state: &LinearizationState, tr: &TransformField, problem: &NonlinearProblem) -> Result<CanonicalOperator> {
    let g = state.residual.grid;
    let n = g.len();
    let eps = state.eps;
    let s = &state.scaled;
    let jac = &tr.jacobian.values;
    let a11: Vec<f64> = (0..n).map(|p| s.psi[p] * jac[p] * jac[p] / state.phi22[p]).collect();
    let q = GridFunction::new(g, (0..n).map(|p| s.psi[p] * jac[p] / state.phi22[p]).collect(), vec![true; n]);
    let dq = diff(&q, (1, 0))?;
    let e2 = eps * eps;
    let b1 = (0..n)
        .map(|p| dq.values[p] - e2 * (s.psi_p1[p] * jac[p] + s.psi_p2[p] * tr.dy1_dx2.values[p]))
        .collect();
    Ok(CanonicalOperator {
        eps,
        a11,
        a22: state.phi22.clone(),
        b1,
        b2: state.a2.clone(),
        c: state.a0.clone(),
        k_scaled: scaled_k(problem, eps),
    })
}

/// Values of an x-node field at the y nodes of the same grid.
pub fn push_forward(v: &[f64], tr: &TransformField) -> Vec<f64> {
    let g = tr.y1.grid;
    (0..g.len())
        .map(|p| {
            let (i, j) = g.ij(p);
            let x1 = tr.inverse_on_row(j, g.x(i));
            bilinear(&g, v, x1, g.y(j))
        })
        .collect()
}

/// Values of a y-node field at the x nodes.
pub fn pull_back(v: &[f64], tr: &TransformField) -> Vec<f64> {
    let g = tr.y1.grid;
    (0..g.len())
        .map(|p| {
            let (_, j) = g.ij(p);
            bilinear(&g, v, tr.y1.values[p], g.y(j))
        })
        .collect()
}

impl CanonicalOperator {
    /// Divided by a22 and moved to y coordinates, with right-hand side -F.
    pub fn to_coefficients(&self, tr: &TransformField, residual: &GridFunction) -> CoefficientSet {
        let g = residual.grid;
        let n = g.len();
        let dk = self.k_scaled.dxy(1, 0);
        let a22 = push_forward(&self.a22, tr);
        let a11 = push_forward(&self.a11, tr);
        let b1 = push_forward(&self.b1, tr);
        let b2 = push_forward(&self.b2, tr);
        let c = push_forward(&self.c, tr);
        let f = push_forward(&residual.values, tr);
        let field = |v: Vec<f64>| ScalarField::sampled(GridFunction::new(g, v, vec![true; n]));
        let mut a = vec![0.0; n];
        let mut bb1 = vec![0.0; n];
        let mut bb2 = vec![0.0; n];
        let mut cc = vec![0.0; n];
        let mut ff = vec![0.0; n];
        for p in 0..n {
            let (y1, y2) = g.xy(p);
            let k = self.k_scaled.eval_xy(y1, y2);
            let kx = dk.eval_xy(y1, y2);
            a[p] = a11[p] / a22[p];
            bb1[p] = (b1[p] * k + a11[p] * kx) / a22[p];
            bb2[p] = b2[p] / a22[p];
            cc[p] = c[p] / a22[p];
            ff[p] = -f[p] / a22[p];
        }
        CoefficientSet {
            k: ScalarField::Expr(self.k_scaled.clone()),
            a: field(a),
            b1: field(bb1),
            b2: field(bb2),
            c: field(cc),
            f: field(ff),
            bounds: Bounds::default(),
        }
    }
}
