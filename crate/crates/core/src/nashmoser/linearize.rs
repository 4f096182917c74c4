//! Linearization F'(w) rho = Phi^{ij} d_ij rho + a_i d_i rho + a rho.

use serde::Serialize;

use super::residual::{residual_from, Derivatives, ScaledFields};
use super::NonlinearProblem;
use crate::error::Result;
use crate::fields::GridFunction;

#[derive(Clone, Debug)]
pub struct LinearizationState {
    pub eps: f64,
    pub derivatives: Derivatives,
    pub scaled: ScaledFields,
    pub residual: GridFunction,
    /// Cofactors: eps w22, -eps w12, 1 + eps w11.
    pub phi11: Vec<f64>,
    pub phi12: Vec<f64>,
    pub phi22: Vec<f64>,
    /// -eps^2 K psi_{p_i}.
    pub a1: Vec<f64>,
    pub a2: Vec<f64>,
    /// -eps^4 K psi_u.
    pub a0: Vec<f64>,
    /// max |det Phi - (eps F + K psi)|.
    pub det_identity_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LinearizationSummary {
    pub det_identity_defect: f64,
    pub min_phi22: f64,
    pub max_phi22: f64,
}

impl LinearizationState {
    pub fn summary(&self) -> LinearizationSummary {
        LinearizationSummary {
            det_identity_defect: self.det_identity_defect,
            min_phi22: self.phi22.iter().cloned().fold(f64::INFINITY, f64::min),
            max_phi22: self.phi22.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// F'(w) rho with the same difference operators as F.
    pub fn apply(&self, rho: &GridFunction) -> Result<GridFunction> {
        let r = Derivatives::of(rho)?;
        let v = (0..rho.grid.len())
            .map(|p| {
                self.phi11[p] * r.w11.values[p]
                    + 2.0 * self.phi12[p] * r.w12.values[p]
                    + self.phi22[p] * r.w22.values[p]
                    + self.a1[p] * r.w1.values[p]
                    + self.a2[p] * r.w2.values[p]
                    + self.a0[p] * rho.values[p]
            })
            .collect();
        Ok(GridFunction::new(rho.grid, v, rho.mask.clone()))
    }
}

pub fn linearize(w: &GridFunction, eps: f64, problem: &NonlinearProblem) -> Result<LinearizationState> {
    let d = Derivatives::of(w)?;
    let s = ScaledFields::new(&d, eps, problem);
    let residual = residual_from(&d, &s, eps);
    let n = w.grid.len();
    let (e2, e4) = (eps * eps, eps.powi(4));
    let phi11: Vec<f64> = d.w22.values.iter().map(|v| eps * v).collect();
    let phi12: Vec<f64> = d.w12.values.iter().map(|v| -eps * v).collect();
    let phi22: Vec<f64> = d.w11.values.iter().map(|v| 1.0 + eps * v).collect();
    let a1 = (0..n).map(|p| -e2 * s.k[p] * s.psi_p1[p]).collect();
    let a2 = (0..n).map(|p| -e2 * s.k[p] * s.psi_p2[p]).collect();
    let a0 = (0..n).map(|p| -e4 * s.k[p] * s.psi_u[p]).collect();
    let mut defect: f64 = 0.0;
    for p in 0..n {
        let det = phi11[p] * phi22[p] - phi12[p] * phi12[p];
        defect = defect.max((det - (eps * residual.values[p] + s.k[p] * s.psi[p])).abs());
    }
    Ok(LinearizationState {
        eps,
        derivatives: d,
        scaled: s,
        residual,
        phi11,
        phi12,
        phi22,
        a1,
        a2,
        a0,
        det_identity_defect: defect,
    })
}

/// || (F(w + t rho) - F(w)) / t - F'(w) rho ||_{L2} for each t.
pub fn directional_defects(w: &GridFunction, rho: &GridFunction, eps: f64, problem: &NonlinearProblem, ts: &[f64]) -> Result<Vec<f64>> {
    let lin = linearize(w, eps, problem)?;
    let lrho = lin.apply(rho)?;
    let mut out = Vec::with_capacity(ts.len());
    for &t in ts {
        let wt = w.add(&rho.scale(t))?;
        let ft = super::residual::evaluate_f(&wt, eps, problem)?;
        let q = ft.sub(&lin.residual)?.scale(1.0 / t).sub(&lrho)?;
        out.push(q.l2(None));
    }
    Ok(out)
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
