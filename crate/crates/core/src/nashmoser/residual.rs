//! The scaled operator F(w; eps) for det D^2 u = K psi with u = x1^2/2 + eps^5 w(x/eps^2).

use super::NonlinearProblem;
use crate::error::Result;
use crate::expr::Var;
use crate::fields::{diff, GridFunction};

/// w and its first and second differences on w's mask.
#[derive(Clone, Debug)]
pub struct Derivatives {
    pub w: GridFunction,
    pub w1: GridFunction,
    pub w2: GridFunction,
    pub w11: GridFunction,
    pub w12: GridFunction,
    pub w22: GridFunction,
}

impl Derivatives {
    pub fn of(w: &GridFunction) -> Result<Self> {
        Ok(Derivatives {
            w: w.clone(),
            w1: diff(w, (1, 0))?,
            w2: diff(w, (0, 1))?,
            w11: diff(w, (2, 0))?,
            w12: diff(w, (1, 1))?,
            w22: diff(w, (0, 2))?,
        })
    }
}

/// psi and its u, p1, p2 partials at the scaled arguments
/// (eps^2 x, eps^4 x1^2 / 2 + eps^5 w, eps^2 x1 + eps^3 w1, eps^3 w2), with K(eps^2 x).
#[derive(Clone, Debug)]
pub struct ScaledFields {
    pub k: Vec<f64>,
    pub psi: Vec<f64>,
    pub psi_u: Vec<f64>,
    pub psi_p1: Vec<f64>,
    pub psi_p2: Vec<f64>,
}

impl ScaledFields {
    pub fn new(d: &Derivatives, eps: f64, problem: &NonlinearProblem) -> Self {
        let g = d.w.grid;
        let (e2, e3, e4, e5) = (eps * eps, eps.powi(3), eps.powi(4), eps.powi(5));
        let psi_u = problem.psi.derivative(Var::U);
        let psi_p1 = problem.psi.derivative(Var::P1);
        let psi_p2 = problem.psi.derivative(Var::P2);
        let n = g.len();
        let mut out = ScaledFields { k: vec![0.0; n], psi: vec![0.0; n], psi_u: vec![0.0; n], psi_p1: vec![0.0; n], psi_p2: vec![0.0; n] };
        for p in 0..n {
            let (x1, x2) = g.xy(p);
            let args = [
                e2 * x1,
                e2 * x2,
                0.5 * e4 * x1 * x1 + e5 * d.w.values[p],
                e2 * x1 + e3 * d.w1.values[p],
                e3 * d.w2.values[p],
            ];
            out.k[p] = problem.k.eval_xy(e2 * x1, e2 * x2);
            out.psi[p] = problem.psi.eval(&args);
            out.psi_u[p] = psi_u.eval(&args);
            out.psi_p1[p] = psi_p1.eval(&args);
            out.psi_p2[p] = psi_p2.eval(&args);
        }
        out
    }
}

/// F(w) = (1 + eps w11) w22 - eps w12^2 - K(eps^2 x) psi / eps.
pub fn evaluate_f(w: &GridFunction, eps: f64, problem: &NonlinearProblem) -> Result<GridFunction> {
    let d = Derivatives::of(w)?;
    let s = ScaledFields::new(&d, eps, problem);
    Ok(residual_from(&d, &s, eps))
}

pub(crate) fn residual_from(d: &Derivatives, s: &ScaledFields, eps: f64) -> GridFunction {
    let n = d.w.grid.len();
    let v = (0..n)
        .map(|p| {
            let (w11, w12, w22) = (d.w11.values[p], d.w12.values[p], d.w22.values[p]);
            (1.0 + eps * w11) * w22 - eps * w12 * w12 - s.k[p] * s.psi[p] / eps
        })
        .collect();
    GridFunction::new(d.w.grid, v, d.w.mask.clone())
}
