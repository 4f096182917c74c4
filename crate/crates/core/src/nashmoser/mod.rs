//! Nash-Moser iteration for det D^2 u = K psi(x, y, u, Du) near the origin, in the
//! scaling u = x1^2 / 2 + eps^5 w(x / eps^2).

mod canonical;
mod linearize;
mod residual;
mod smoothing;
mod transform;

pub use canonical::{canonical_operator, pull_back, push_forward, scaled_k, CanonicalOperator, CanonicalSummary};
pub use linearize::{directional_defects, linearize, loglog_slope, LinearizationState, LinearizationSummary};
pub use residual::{evaluate_f, Derivatives, ScaledFields};
pub use smoothing::smoothing_apply;
pub use transform::{build_transform, TransformField, TransformSummary};

use serde::Serialize;

use crate::composite::{numeric_trace_tolerance, solve_linear_mixed, CompositeOptions};
use crate::elliptic::default_delta_schedule;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::{sobolev_norm, GridFunction, ScalarField};
use crate::geometry::{DomainSpec, Grid2D};
use crate::hyperbolic::default_epsilon_schedule;

/// det D^2 u = K(x, y) psi(x, y, u, p1, p2).
#[derive(Clone, Debug)]
pub struct NonlinearProblem {
    pub k: Expr,
    pub psi: Expr,
    /// Lower bound psi >= lambda > 0.
    pub psi_lower: f64,
}

impl NonlinearProblem {
    pub fn new(k: Expr, psi: Expr, psi_lower: f64) -> Self {
        NonlinearProblem { k, psi, psi_lower }
    }

    /// psi = 1 with K = x^2 - y^2.
    pub fn unit_cross() -> Self {
        Self::new(Expr::x().powi(2) - Expr::y().powi(2), Expr::one(), 1.0)
    }

    /// Samples psi on a box of arguments and checks psi >= lambda.
    pub fn check_lower_bound(&self, box_half_width: f64, samples: usize) -> Result<()> {
        if !(self.psi_lower > 0.0) {
            return Err(Error::Config("psi lower bound must be positive".into()));
        }
        let n = samples.max(2);
        let t = |k: usize| -box_half_width + 2.0 * box_half_width * k as f64 / (n - 1) as f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let p = [t(a), t(b), t(c), t((a + b) % n), t((b + c) % n)];
                    let v = self.psi.eval(&p);
                    if !(v >= self.psi_lower) {
                        return Err(Error::Config(format!("psi = {v} below its lower bound {} at {p:?}", self.psi_lower)));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct NashMoserConfig {
    pub eps: f64,
    pub h: f64,
    /// Order of the residual norm.
    pub s0: usize,
    pub theta0: f64,
    pub theta_growth: f64,
    pub max_levels: usize,
    /// Stop once the residual falls below target times its initial value.
    pub target: f64,
    pub max_halvings: usize,
    /// The linear problems are solved on this disk (in y coordinates).
    pub solve_radius: f64,
    /// Residual norms are taken on this disk.
    pub norm_radius: f64,
    /// Corrections are cut off smoothly between this radius and the solve radius.
    pub taper_inner: f64,
    pub cfl: f64,
}

impl Default for NashMoserConfig {
    fn default() -> Self {
        NashMoserConfig {
            eps: 0.1,
            h: 1.0 / 64.0,
            s0: 2,
            theta0: 4.0,
            theta_growth: 2.0,
            max_levels: 3,
            target: 1e-3,
            max_halvings: 3,
            solve_radius: std::f64::consts::SQRT_2,
            norm_radius: 0.5,
            taper_inner: 0.8,
            cfl: 0.8,
        }
    }
}

/// One level of the iteration.
#[derive(Clone, Debug, Serialize)]
pub struct LevelRecord {
    pub level: usize,
    pub theta: f64,
    /// ||F(w_l)||_{H^s0} before the update.
    pub residual_norm: f64,
    pub w_norm: f64,
    pub correction_norm: f64,
    pub linearization: LinearizationSummary,
    pub transform: TransformSummary,
    pub canonical: CanonicalSummary,
    pub glue_defect: f64,
    pub compat_pass: bool,
    pub elliptic_unknowns: usize,
}

#[derive(Clone, Debug)]
pub struct NashMoserState {
    pub eps: f64,
    pub level: usize,
    pub w: GridFunction,
    pub residual: GridFunction,
    pub rho: Option<GridFunction>,
    pub theta: f64,
    pub history: Vec<LevelRecord>,
    /// ||F(w_l)||_{H^s0} for l = 0..=level.
    pub residual_norms: Vec<f64>,
    pub halvings: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct NashMoserReport {
    pub eps: f64,
    pub halvings: usize,
    pub levels: Vec<LevelRecord>,
    pub residual_norms: Vec<f64>,
    pub decay: f64,
    /// max |det D^2 u - K psi| on the disk of radius eps^2 / 2 (unscaled).
    pub unscaled_residual: f64,
}

impl NashMoserState {
    pub fn decay(&self) -> f64 {
        match (self.residual_norms.first(), self.residual_norms.last()) {
            (Some(&a), Some(&b)) if a > 0.0 => b / a,
            _ => 0.0,
        }
    }

    /// u(x~) = x~1^2 / 2 + eps^5 w(x~ / eps^2), sampled at x~ = eps^2 x on w's grid.
    pub fn unscaled(&self) -> Vec<(f64, f64, f64)> {
        let g = self.w.grid;
        let e2 = self.eps * self.eps;
        let e5 = self.eps.powi(5);
        (0..g.len())
            .map(|p| {
                let (x1, x2) = g.xy(p);
                let (t1, t2) = (e2 * x1, e2 * x2);
                (t1, t2, 0.5 * t1 * t1 + e5 * self.w.values[p])
            })
            .collect()
    }

    /// det D^2 u - K psi = eps F(w) in unscaled variables; max over |x| <= 1/2.
    pub fn unscaled_residual(&self) -> f64 {
        let g = self.residual.grid;
        (0..g.len())
            .filter(|&p| {
                let (x, y) = g.xy(p);
                x * x + y * y <= 0.25
            })
            .map(|p| (self.eps * self.residual.values[p]).abs())
            .fold(0.0, f64::max)
    }

    pub fn report(&self) -> NashMoserReport {
        NashMoserReport {
            eps: self.eps,
            halvings: self.halvings,
            levels: self.history.clone(),
            residual_norms: self.residual_norms.clone(),
            decay: self.decay(),
            unscaled_residual: self.unscaled_residual(),
        }
    }
}

fn disk(grid: Grid2D, r: f64) -> Vec<bool> {
    (0..grid.len())
        .map(|p| {
            let (x, y) = grid.xy(p);
            x * x + y * y <= r * r * (1.0 + 1e-12)
        })
        .collect()
}

/// rho times a smooth radial cutoff equal to 1 for r <= r0 and 0 for r >= r1, so the
/// correction has no jump where the solve disk ends.
pub fn taper(rho: &GridFunction, r0: f64, r1: f64) -> GridFunction {
    let g = rho.grid;
    let v = (0..g.len())
        .map(|p| {
            let (x, y) = g.xy(p);
            let r = (x * x + y * y).sqrt();
            rho.values[p] * crate::compat::cutoff(1.0 + (r - r0) / (r1 - r0))
        })
        .collect();
    GridFunction::new(g, v, rho.mask.clone())
}

/// Composite-solver settings for the scaled linear problems: regularization schedules
/// follow the size eps^4 of K(eps^2 x).
pub fn linear_options(eps: f64, cfg: &NashMoserConfig) -> CompositeOptions {
    let e4 = eps.powi(4);
    CompositeOptions {
        h: cfg.h,
        delta_schedule: default_delta_schedule().iter().map(|d| d * e4).collect(),
        epsilon_schedule: default_epsilon_schedule().iter().map(|d| d * e4).collect(),
        cfl: cfg.cfl,
        compat_m: 2,
        compat_tolerance: numeric_trace_tolerance(),
        enforce_compat: false,
        glue_constant: CompositeOptions::default().glue_constant,
        threads: None,
    }
}

/// Runs the iteration at fixed eps, starting from w = 0.
pub fn iterate(problem: &NonlinearProblem, cfg: &NashMoserConfig) -> Result<NashMoserState> {
    let eps = cfg.eps;
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::Config(format!("eps must lie in (0, 0.5], got {eps}")));
    }
    if !(cfg.theta0 > 0.0 && cfg.theta_growth > 1.0) {
        return Err(Error::Config("smoothing cutoffs must start positive and grow".into()));
    }
    let grid = Grid2D::covering(cfg.solve_radius, cfg.h)?;
    let spec = DomainSpec::diagonals(1.0f64.min(cfg.solve_radius), cfg.solve_radius);
    let inner = disk(grid, cfg.norm_radius);
    let norm = |u: &GridFunction| -> Result<f64> { Ok(sobolev_norm(u, cfg.s0, &inner)?.value) };
    let opts = linear_options(eps, cfg);

    let w0 = GridFunction::zeros(grid, vec![true; grid.len()]);
    let f0 = evaluate_f(&w0, eps, problem)?;
    let mut state = NashMoserState {
        eps,
        level: 0,
        residual_norms: vec![norm(&f0)?],
        w: w0,
        residual: f0,
        rho: None,
        theta: cfg.theta0,
        history: Vec::new(),
        halvings: 0,
    };
    let mut rising = 0;
    for level in 0..cfg.max_levels {
        let theta = cfg.theta0 * cfg.theta_growth.powi(level as i32);
        let lin = linearize(&state.w, eps, problem)?;
        let tr = build_transform(&lin)?;
        let op = canonical_operator(&lin, &tr, problem)?;
        let coeffs = op.to_coefficients(&tr, &lin.residual);
        let run = solve_linear_mixed(&spec, &coeffs, ScalarField::zero(), &opts)?;
        let rho = GridFunction::new(grid, pull_back(&run.u_global.values, &tr), vec![true; grid.len()]);
        let step = smoothing_apply(&taper(&rho, cfg.taper_inner, cfg.solve_radius * 0.95), theta);
        let w = state.w.add(&step)?;
        let f = evaluate_f(&w, eps, problem)?;
        let r = norm(&f)?;
        let prev = *state.residual_norms.last().expect("initial norm");
        state.history.push(LevelRecord {
            level,
            theta,
            residual_norm: prev,
            w_norm: norm(&state.w)?,
            correction_norm: norm(&step)?,
            linearization: lin.summary(),
            transform: tr.summary(),
            canonical: op.summary(),
            glue_defect: run.glue_defect.value,
            compat_pass: run.compat.iter().all(|c| c.all_pass()),
            elliptic_unknowns: run.elliptic.unknowns,
        });
        state.w = w;
        state.residual = f;
        state.rho = Some(rho);
        state.theta = theta;
        state.level = level + 1;
        state.residual_norms.push(r);
        rising = if r >= prev { rising + 1 } else { 0 };
        if rising >= 3 {
            return Err(Error::ResidualStagnation { level, history: state.residual_norms.clone() });
        }
        if !r.is_finite() {
            return Err(Error::ResidualStagnation { level, history: state.residual_norms.clone() });
        }
        if r <= cfg.target * state.residual_norms[0] {
            break;
        }
    }
    Ok(state)
}

/// [`iterate`], halving eps after each stagnation (at most `max_halvings` times).
pub fn solve(problem: &NonlinearProblem, cfg: &NashMoserConfig) -> Result<NashMoserState> {
    let mut c = cfg.clone();
    let mut halvings = 0;
    loop {
        match iterate(problem, &c) {
            Ok(mut s) => {
                s.halvings = halvings;
                return Ok(s);
            }
            Err(Error::ResidualStagnation { .. }) if halvings < cfg.max_halvings => {
                halvings += 1;
                c.eps *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
}
