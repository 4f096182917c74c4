use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Grid2D;

/// Scalar values on a grid, defined where `mask` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: Grid2D,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl GridFunction {
    pub fn new(grid: Grid2D, values: Vec<f64>, mask: Vec<bool>) -> Self {
        assert_eq!(values.len(), grid.len());
        assert_eq!(mask.len(), grid.len());
        GridFunction { grid, values, mask }
    }

    pub fn zeros(grid: Grid2D, mask: Vec<bool>) -> Self {
        Self::new(grid, vec![0.0; grid.len()], mask)
    }

    /// Samples `f` on every node of the grid.
    pub fn full(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|p| {
            let (x, y) = grid.xy(p);
            f(x, y)
        }).collect();
        Self::new(grid, values, vec![true; grid.len()])
    }

    /// Samples `f` on the masked nodes; zero elsewhere.
    pub fn from_fn(grid: Grid2D, mask: Vec<bool>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|p| {
                if mask[p] {
                    let (x, y) = grid.xy(p);
                    f(x, y)
                } else {
                    0.0
                }
            })
            .collect();
        Self::new(grid, values, mask)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    fn check_same(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Config("grid functions live on different grids".into()));
        }
        Ok(())
    }

    /// Pointwise combination on the common mask.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        self.check_same(other)?;
        let mask: Vec<bool> = self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect();
        let values = (0..self.grid.len())
            .map(|p| if mask[p] { f(self.values[p], other.values[p]) } else { 0.0 })
            .collect();
        Ok(GridFunction::new(self.grid, values, mask))
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> GridFunction {
        let values = self.values.iter().zip(&self.mask).map(|(v, &m)| if m { s * v } else { 0.0 }).collect();
        GridFunction::new(self.grid, values, self.mask.clone())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        let values = self.values.iter().zip(&self.mask).map(|(v, &m)| if m { f(*v) } else { 0.0 }).collect();
        GridFunction::new(self.grid, values, self.mask.clone())
    }

    /// Same values with a different mask (nodes newly included must already hold values).
    pub fn with_mask(&self, mask: Vec<bool>) -> GridFunction {
        GridFunction::new(self.grid, self.values.clone(), mask)
    }

    fn over<'a>(&'a self, region: Option<&'a [bool]>) -> impl Iterator<Item = f64> + 'a {
        (0..self.grid.len())
            .filter(move |&p| self.mask[p] && region.map_or(true, |r| r[p]))
            .map(move |p| self.values[p])
    }

    pub fn max_abs(&self, region: Option<&[bool]>) -> f64 {
        self.over(region).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete L2 norm: sqrt(h^2 sum v^2).
    pub fn l2(&self, region: Option<&[bool]>) -> f64 {
        let h = self.grid.h;
        (h * h * self.over(region).map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.over(None).all(f64::is_finite)
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Writes masked nodes as `x,y,value`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "x,y,value")?;
        for p in 0..self.grid.len() {
            if self.mask[p] {
                let (x, y) = self.grid.xy(p);
                writeln!(f, "{x},{y},{:e}", self.values[p])?;
            }
        }
        Ok(())
    }

    /// Bilinear interpolation of the full-grid values (clamped to the grid box).
    pub fn interpolate(&self, x: f64, y: f64) -> f64 {
        bilinear(&self.grid, &self.values, x, y)
    }
}

pub(crate) fn bilinear(grid: &Grid2D, values: &[f64], x: f64, y: f64) -> f64 {
    let fx = (x / grid.h + grid.origin_index.0 as f64).clamp(0.0, (grid.nx - 1) as f64);
    let fy = (y / grid.h + grid.origin_index.1 as f64).clamp(0.0, (grid.ny - 1) as f64);
    let i0 = (fx.floor() as usize).min(grid.nx - 2);
    let j0 = (fy.floor() as usize).min(grid.ny - 2);
    let tx = fx - i0 as f64;
    let ty = fy - j0 as f64;
    let v = |i: usize, j: usize| values[grid.idx(i, j)];
    (1.0 - tx) * (1.0 - ty) * v(i0, j0)
        + tx * (1.0 - ty) * v(i0 + 1, j0)
        + (1.0 - tx) * ty * v(i0, j0 + 1)
        + tx * ty * v(i0 + 1, j0 + 1)
}
