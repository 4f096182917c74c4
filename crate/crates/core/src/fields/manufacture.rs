use super::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{CornerCurve, DomainSpec};

/// Data generated from an exact solution of the linear operator.
#[derive(Clone, Debug)]
pub struct Manufactured {
    pub u: Expr,
    pub f: Expr,
    /// Dirichlet data (the exact solution itself).
    pub g: Expr,
}

impl Manufactured {
    /// phi = u(x, kappa(x)) per branch: (right, left).
    pub fn phi(&self, kappa: &CornerCurve) -> (Expr, Expr) {
        let x = Expr::x();
        (self.u.compose_xy(&x, &kappa.right), self.u.compose_xy(&x, &kappa.left))
    }

    /// psi = u_y(x, kappa(x)) per branch: (right, left).
    pub fn psi(&self, kappa: &CornerCurve) -> (Expr, Expr) {
        let x = Expr::x();
        let uy = self.u.dxy(0, 1);
        (uy.compose_xy(&x, &kappa.right), uy.compose_xy(&x, &kappa.left))
    }
}

/// f = L u for formula coefficients.
pub fn manufacture_linear(u: &Expr, coeffs: &CoefficientSet) -> Result<Manufactured> {
    let f = coeffs
        .apply_expr(u)
        .ok_or_else(|| Error::Config("manufactured data needs formula coefficients".into()))?;
    Ok(Manufactured { u: u.clone(), f, g: u.clone() })
}

#[derive(Clone, Debug)]
pub struct MongeAmpereData {
    pub u: Expr,
    /// det D^2 u, which equals K psi.
    pub det: Expr,
    pub psi: Expr,
}

/// psi := det D^2 u / K. Fails if det D^2 u does not vanish on the zero set of K.
pub fn manufacture_monge_ampere(u: &Expr, k: &Expr, spec: &DomainSpec) -> Result<MongeAmpereData> {
    let det = u.dxy(2, 0) * u.dxy(0, 2) - u.dxy(1, 1).powi(2);
    let n = 400;
    let r = spec.radius_outer;
    let mut scale: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for m in 0..=n {
        let x = -r + 2.0 * r * m as f64 / n as f64;
        scale = scale.max(det.eval_xy(x, 0.5 * x).abs());
        for g in [&spec.gamma1, &spec.gamma2] {
            let y = g.eval_xy(x, 0.0);
            if x * x + y * y > r * r {
                continue;
            }
            worst = worst.max(det.eval_xy(x, y).abs());
        }
    }
    if worst > 1e-10 * scale.max(1.0) {
        return Err(Error::DivisionByDegeneracy { value: worst });
    }
    let psi = det.clone() / k.clone();
    Ok(MongeAmpereData { u: u.clone(), det, psi })
}
