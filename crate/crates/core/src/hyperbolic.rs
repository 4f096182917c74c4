//! Cauchy problem in a hyperbolic component, marched in y from a corner initial curve
//! with a leapfrog scheme; K' = -K is regularized to K' + eps.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::compat::{extend_cauchy_data, uxx_coefficient, CauchyTrace, Extension};
use crate::error::{Error, Result};
use crate::fields::{sobolev_norm, sobolev_norm_1d, CoefficientSet, GridFunction};
use crate::geometry::Grid2D;

/// Default regularization schedule for K'. The O(eps) regularization error has to stay
/// below the O(h^2) discretization error down to h = 1/128.
pub fn default_epsilon_schedule() -> Vec<f64> {
    (3..=6).map(|j| 10f64.powi(-j)).collect()
}

#[derive(Clone, Debug)]
pub struct HyperbolicProblem<'a> {
    pub grid: Grid2D,
    pub coeffs: &'a CoefficientSet,
    pub trace: CauchyTrace,
    /// +1 marches up (component above the curve), -1 marches down.
    pub sigma: f64,
    /// Disk radius bounding the component.
    pub radius: f64,
    /// Terminal level: march while sigma y <= s_top.
    pub s_top: f64,
    pub epsilon_schedule: Vec<f64>,
    pub cfl: f64,
    /// Allow cfl > 1 (used to exhibit instability).
    pub allow_unstable: bool,
    /// Number of normal derivatives in the extension, d + 1 by default.
    pub extension_order: usize,
    /// Width parameter of the extension cutoff.
    pub tau: f64,
    /// Energy weight; default 5 (1 + sup|b2| + sup|c|).
    pub mu: Option<f64>,
    /// Use the largest step h / m below the CFL step, so that grid rows are levels and
    /// need no interpolation in s.
    pub row_aligned: bool,
}

impl<'a> HyperbolicProblem<'a> {
    pub fn new(grid: Grid2D, coeffs: &'a CoefficientSet, trace: CauchyTrace, sigma: f64, radius: f64) -> Self {
        HyperbolicProblem {
            grid,
            coeffs,
            trace,
            sigma,
            radius,
            s_top: radius,
            epsilon_schedule: default_epsilon_schedule(),
            cfl: 0.8,
            allow_unstable: false,
            extension_order: coeffs.bounds.d + 1,
            tau: 0.25,
            mu: None,
            row_aligned: false,
        }
    }
}

/// Weighted energy per marching level.
#[derive(Clone, Debug, Default, Serialize)]
pub struct EnergyLedger {
    pub mu: f64,
    /// (y, E(y)).
    pub levels: Vec<(f64, f64)>,
}

impl EnergyLedger {
    /// max E / min E over levels with E > 0; 1 if fewer than two such levels.
    pub fn spread(&self) -> f64 {
        let pos: Vec<f64> = self.levels.iter().map(|l| l.1).filter(|&e| e > 0.0).collect();
        if pos.len() < 2 {
            return 1.0;
        }
        let max = pos.iter().fold(0.0f64, |m, &v| m.max(v));
        let min = pos.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        max / min
    }

    pub fn all_finite(&self) -> bool {
        self.levels.iter().all(|l| l.1.is_finite())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "y,E")?;
        for (y, e) in &self.levels {
            writeln!(f, "{y},{e:e}")?;
        }
        Ok(())
    }
}

/// Result of one march.
#[derive(Clone, Debug)]
pub struct MarchOutput {
    pub u: GridFunction,
    pub energy: EnergyLedger,
    pub ds: f64,
    pub levels: usize,
    pub max_abs: f64,
}

/// Coefficient samples on one level.
struct LevelCoefficients {
    a_op: Vec<f64>,
    b1: Vec<f64>,
    b2: Vec<f64>,
    c: Vec<f64>,
    f: Vec<f64>,
}

fn data_scale(problem: &HyperbolicProblem) -> f64 {
    let g = problem.grid;
    let mut s = problem.trace.scale();
    let r2 = problem.radius * problem.radius;
    for p in 0..g.len() {
        let (x, y) = g.xy(p);
        if x * x + y * y <= r2 {
            s = s.max(problem.coeffs.f.eval(x, y).abs());
        }
    }
    s
}

/// Marches the eps-regularized problem and samples it onto grid rows.
pub fn march(problem: &HyperbolicProblem, eps: f64) -> Result<MarchOutput> {
    let ext = extend_cauchy_data(
        &problem.trace,
        problem.coeffs,
        eps,
        problem.extension_order,
        problem.grid,
        problem.sigma,
        problem.tau,
    )?;
    march_with_extension(problem, eps, &ext)
}

pub fn march_with_extension(problem: &HyperbolicProblem, eps: f64, ext: &Extension) -> Result<MarchOutput> {
    let g = problem.grid;
    let h = g.h;
    let sigma = problem.sigma;
    let coeffs = problem.coeffs;
    let r2 = problem.radius * problem.radius;
    let a_op = uxx_coefficient(coeffs, eps);
    let nx = g.nx;
    let xs: Vec<f64> = (0..nx).map(|i| g.x(i)).collect();
    let curve_s = &ext.curve_s;

    // start where the curve is lowest inside the disk
    let s_start = (0..nx)
        .filter(|&i| xs[i] * xs[i] + curve_s[i] * curve_s[i] <= r2)
        .map(|i| curve_s[i])
        .fold(f64::INFINITY, f64::min);
    if !s_start.is_finite() || problem.s_top <= s_start {
        return Err(Error::Config("empty marching range".into()));
    }

    // characteristic speed over the region swept by the march
    let mut sup_a: f64 = 0.0;
    let mut sup_b2: f64 = 0.0;
    let mut sup_c: f64 = 0.0;
    for p in 0..g.len() {
        let (i, j) = g.ij(p);
        let (x, y) = (xs[i], g.y(j));
        let s = sigma * y;
        if s < curve_s[i] - h || s > problem.s_top + h {
            continue;
        }
        sup_a = sup_a.max(a_op.eval(x, y).abs());
        sup_b2 = sup_b2.max(coeffs.b2.eval(x, y).abs());
        sup_c = sup_c.max(coeffs.c.eval(x, y).abs());
    }
    let limit = if sup_a > 0.0 { h / sup_a.sqrt() } else { f64::INFINITY };
    // never longer than h: weakly hyperbolic problems would otherwise step past the
    // reach of the extension
    let mut ds = problem.cfl * limit.min(h);
    if problem.row_aligned && ds < h {
        ds = h / (h / ds).ceil();
    }
    if problem.cfl > 1.0 && !problem.allow_unstable {
        return Err(Error::CflViolation { dy: ds, limit });
    }
    let mu = problem.mu.unwrap_or(5.0 * (1.0 + sup_b2 + sup_c));
    let n_levels = ((problem.s_top - s_start) / ds).ceil() as usize + 2;

    let scale = data_scale(problem);
    let threshold = 1e6 * scale;

    let level_s = |n: usize| s_start + n as f64 * ds;
    // the cone is closed under backward characteristics, so march it whole; the disk
    // only bounds what is reported
    let active = |i: usize, s: f64| i > 0 && i + 1 < nx && s - curve_s[i] > 0.0;
    let coeff_level = |s: f64| {
        let y = sigma * s;
        LevelCoefficients {
            a_op: xs.iter().map(|&x| a_op.eval(x, y)).collect(),
            b1: xs.iter().map(|&x| coeffs.b1.eval(x, y)).collect(),
            b2: xs.iter().map(|&x| coeffs.b2.eval(x, y)).collect(),
            c: xs.iter().map(|&x| coeffs.c.eval(x, y)).collect(),
            f: xs.iter().map(|&x| coeffs.f.eval(x, y)).collect(),
        }
    };

    let mut levels: Vec<Vec<f64>> = Vec::with_capacity(n_levels + 1);
    for n in 0..2 {
        let s = level_s(n);
        levels.push((0..nx).map(|i| ext.eval(i, s)).collect());
    }
    let mut max_abs: f64 = 0.0;
    let h2 = h * h;
    for n in 1..n_levels {
        let s = level_s(n);
        let s_next = level_s(n + 1);
        let lc = coeff_level(s);
        let (prev, cur) = (&levels[n - 1], &levels[n]);
        let mut next = vec![0.0; nx];
        let mut level_max: f64 = 0.0;
        let mut bad = false;
        for i in 0..nx {
            if !active(i, s) {
                next[i] = ext.eval(i, s_next);
                continue;
            }
            let uxx = (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]) / h2;
            let ux = (cur[i + 1] - cur[i - 1]) / (2.0 * h);
            let beta = 0.5 * sigma * lc.b2[i] * ds;
            let rhs = lc.f[i] - lc.a_op[i] * uxx - lc.b1[i] * ux - lc.c[i] * cur[i];
            let v = (2.0 * cur[i] - (1.0 - beta) * prev[i] + ds * ds * rhs) / (1.0 + beta);
            next[i] = v;
            if !v.is_finite() {
                bad = true;
            }
            level_max = level_max.max(v.abs());
        }
        max_abs = max_abs.max(level_max);
        if bad || level_max > threshold {
            return Err(Error::InstabilityDetected { y: sigma * s_next, max: if bad { f64::INFINITY } else { level_max }, threshold });
        }
        levels.push(next);
    }

    // weighted energy on levels with a centred s-difference
    let mut energy = EnergyLedger { mu, levels: Vec::new() };
    for n in 1..(levels.len() - 1) {
        let s = level_s(n);
        if s > problem.s_top + 1e-12 {
            break;
        }
        let y = sigma * s;
        let w = (-mu * (s - s_start)).exp();
        let mut e = 0.0;
        for i in 1..(nx - 1) {
            if !(s - curve_s[i] >= 0.0 && xs[i] * xs[i] + s * s < r2) {
                continue;
            }
            let kp = (-coeffs.k.eval(xs[i], y) + eps).max(eps.max(1e-300));
            let a = coeffs.a.eval(xs[i], y);
            let u = levels[n][i];
            let us = (levels[n + 1][i] - levels[n - 1][i]) / (2.0 * ds);
            let ux = (levels[n][i + 1] - levels[n][i - 1]) / (2.0 * h);
            e += h * w * (u * u / kp + us * us / kp + a * ux * ux);
        }
        energy.levels.push((y, e));
    }

    // sample onto grid rows: quadratic interpolation between levels
    let ghost = 4.0 * h;
    let mut values = vec![0.0; g.len()];
    let mut mask = vec![false; g.len()];
    for p in 0..g.len() {
        let (i, j) = g.ij(p);
        let (x, y) = (xs[i], g.y(j));
        let s = sigma * y;
        let t = s - curve_s[i];
        if x * x + y * y > r2 || t < -ghost || s > problem.s_top + 1e-12 {
            continue;
        }
        mask[p] = true;
        if t <= 0.0 {
            values[p] = ext.eval(i, s);
            continue;
        }
        let pos = (s - s_start) / ds;
        let n0 = (pos.round() as usize).clamp(1, levels.len() - 2);
        let r = pos - n0 as f64;
        let (um, u0, up) = (levels[n0 - 1][i], levels[n0][i], levels[n0 + 1][i]);
        values[p] = u0 + 0.5 * r * (up - um) + 0.5 * r * r * (up - 2.0 * u0 + um);
    }
    Ok(MarchOutput { u: GridFunction::new(g, values, mask), energy, ds, levels: levels.len(), max_abs })
}

/// Result of the eps-continuation.
#[derive(Clone, Debug)]
pub struct HyperbolicSolution {
    pub u: GridFunction,
    pub energy: EnergyLedger,
    pub epsilons: Vec<f64>,
    pub continuation_gap: Vec<f64>,
    pub ds: f64,
    pub levels: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct HyperbolicReport {
    pub direction: f64,
    pub epsilons: Vec<f64>,
    pub continuation_gap: Vec<f64>,
    pub ds: f64,
    pub levels: usize,
    pub energy_mu: f64,
    pub energy_spread: f64,
    pub degeneracy_order: usize,
}

impl HyperbolicSolution {
    pub fn report(&self, sigma: f64, d: usize) -> HyperbolicReport {
        HyperbolicReport {
            direction: sigma,
            epsilons: self.epsilons.clone(),
            continuation_gap: self.continuation_gap.clone(),
            ds: self.ds,
            levels: self.levels,
            energy_mu: self.energy.mu,
            energy_spread: self.energy.spread(),
            degeneracy_order: d,
        }
    }
}

/// Marches for each eps of the schedule and checks that successive iterates contract.
pub fn solve_degenerate(problem: &HyperbolicProblem) -> Result<HyperbolicSolution> {
    let sched = &problem.epsilon_schedule;
    if sched.len() < 3 {
        return Err(Error::Config("epsilon schedule needs at least 3 entries".into()));
    }
    if sched.windows(2).any(|w| !(w[1] < w[0])) || sched.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::Config("epsilon schedule must be positive and decreasing".into()));
    }
    let mut outs: Vec<MarchOutput> = Vec::new();
    let mut gaps = Vec::new();
    for &e in sched {
        let o = march(problem, e)?;
        if let Some(last) = outs.last() {
            let common: Vec<bool> = o.u.mask.iter().zip(&last.u.mask).map(|(a, b)| *a && *b).collect();
            gaps.push(o.u.sub(&last.u)?.l2(Some(&common)));
        }
        outs.push(o);
    }
    let n = gaps.len();
    let last = outs.pop().expect("nonempty");
    let floor = 1e-13 * last.max_abs.max(1e-300);
    if n >= 2 && gaps[n - 1] > gaps[n - 2] && gaps[n - 1] > floor {
        return Err(Error::ContinuationStall { gaps });
    }
    Ok(HyperbolicSolution {
        u: last.u,
        energy: last.energy,
        epsilons: sched.clone(),
        continuation_gap: gaps,
        ds: last.ds,
        levels: last.levels,
    })
}

/// ||u||_{H^m} / (||phi||_{H^{m+d+1}} + ||psi||_{H^{m+d}} + ||f||_{H^{m+d}}) over `region`;
/// 0 for all-zero data.
pub fn loss_ratio(u: &GridFunction, problem: &HyperbolicProblem, m: usize, region: &[bool]) -> Result<f64> {
    let d = problem.coeffs.bounds.d;
    let h = problem.grid.h;
    let r = problem.radius;
    let tr = &problem.trace;
    // branch samples inside the disk
    let inside = |b: &[f64], sgn: f64| -> Vec<f64> {
        b.iter()
            .enumerate()
            .take_while(|(k, _)| {
                let x = sgn * *k as f64 * h;
                let y = tr.kappa.eval(x);
                x * x + y * y <= r * r
            })
            .map(|(_, v)| *v)
            .collect()
    };
    let n1 = |b: &crate::compat::Branches, s: usize| -> Result<f64> {
        let rr = sobolev_norm_1d(&inside(&b.right, 1.0), h, s)?;
        let ll = sobolev_norm_1d(&inside(&b.left, -1.0), h, s)?;
        Ok((rr * rr + ll * ll).sqrt())
    };
    let phi = n1(&tr.phi, m + d + 1)?;
    let psi = n1(&tr.psi, m + d)?;
    let f = problem.coeffs.f.sample(problem.grid);
    let nf = sobolev_norm(&f, m + d, region)?.value;
    let nu = sobolev_norm(u, m, region)?.value;
    let den = phi + psi + nf;
    if den == 0.0 {
        return Ok(if nu == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(nu / den)
}
