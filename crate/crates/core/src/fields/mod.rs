//! Coefficient fields, grid functions, discrete derivatives and norms, manufactured data.

mod coefficients;
mod grid_function;
mod manufacture;
mod norms;
pub mod stencil;

use std::sync::Arc;

pub use coefficients::{levy_check, Bounds, CoefficientSet, InvariantReport};
pub(crate) use grid_function::bilinear;
pub use grid_function::GridFunction;
pub use manufacture::{manufacture_linear, manufacture_monge_ampere, Manufactured, MongeAmpereData};
pub use norms::{diff, sobolev_norm, sobolev_norm_1d, NormReport, MAX_ORDER};

use crate::error::Result;
use crate::expr::Expr;
use crate::geometry::Grid2D;
use crate::poly::Taylor2;

/// A coefficient given either by a formula or by samples on a grid.
#[derive(Clone, Debug)]
pub enum ScalarField {
    Expr(Expr),
    Sampled(Arc<GridFunction>),
}

impl ScalarField {
    pub fn constant(c: f64) -> Self {
        ScalarField::Expr(Expr::constant(c))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn parse(src: &str) -> Result<Self> {
        Ok(ScalarField::Expr(Expr::parse(src)?))
    }

    pub fn sampled(u: GridFunction) -> Self {
        ScalarField::Sampled(Arc::new(u))
    }

    pub fn as_expr(&self) -> Option<&Expr> {
        match self {
            ScalarField::Expr(e) => Some(e),
            ScalarField::Sampled(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ScalarField::Expr(e) => e.is_zero(),
            ScalarField::Sampled(g) => g.values.iter().all(|&v| v == 0.0),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            ScalarField::Expr(e) => e.eval_xy(x, y),
            ScalarField::Sampled(g) => bilinear(&g.grid, &g.values, x, y),
        }
    }

    /// Samples on every node of `grid`.
    pub fn sample(&self, grid: Grid2D) -> GridFunction {
        match self {
            ScalarField::Sampled(g) if g.grid == grid => GridFunction::new(grid, g.values.clone(), vec![true; grid.len()]),
            _ => GridFunction::full(grid, |x, y| self.eval(x, y)),
        }
    }

    /// D_x^i D_y^j, symbolic for formulas and by finite differences for samples.
    pub fn dxy(&self, i: usize, j: usize) -> Result<ScalarField> {
        match self {
            ScalarField::Expr(e) => Ok(ScalarField::Expr(e.dxy(i, j))),
            ScalarField::Sampled(g) => {
                let full = g.with_mask(vec![true; g.grid.len()]);
                Ok(ScalarField::sampled(diff(&full, (i, j))?))
            }
        }
    }

    /// Taylor polynomial of the given degree at (x0, y0).
    pub fn taylor(&self, x0: f64, y0: f64, degree: usize) -> Result<Taylor2> {
        let mut d = vec![vec![0.0; degree + 1]; degree + 1];
        for (i, row) in d.iter_mut().enumerate() {
            for j in 0..=(degree - i) {
                row[j] = self.dxy(i, j)?.eval(x0, y0);
            }
        }
        Ok(Taylor2::from_derivatives(degree, |i, j| d[i][j]))
    }

    /// Largest absolute value over the masked nodes of `grid`.
    pub fn max_abs_on(&self, grid: Grid2D, mask: &[bool]) -> f64 {
        (0..grid.len())
            .filter(|&p| mask[p])
            .map(|p| {
                let (x, y) = grid.xy(p);
                self.eval(x, y).abs()
            })
            .fold(0.0, f64::max)
    }
}

impl From<Expr> for ScalarField {
    fn from(e: Expr) -> Self {
        ScalarField::Expr(e)
    }
}

impl From<f64> for ScalarField {
    fn from(c: f64) -> Self {
        ScalarField::constant(c)
    }
}
