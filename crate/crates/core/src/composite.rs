//! Full linear solve on the disk: elliptic continuation in the elliptic region, trace
//! extraction on both curves, hyperbolic marches in the two cones, gluing.

use serde::Serialize;

use crate::compat::{check_compatibility, CauchyTrace, CompatReport, CompatTolerance};
use crate::elliptic::{continue_to_degenerate, default_delta_schedule, EllipticProblem, EllipticReport};
use crate::error::{Error, Result};
use crate::fields::{sobolev_norm, CoefficientSet, GridFunction, ScalarField};
use crate::geometry::{build_region_map, orientation_check, DomainSpec, Grid2D, Label, OrientationReport, RegionMap};
use crate::hyperbolic::{default_epsilon_schedule, march, solve_degenerate, EnergyLedger, HyperbolicProblem, HyperbolicReport, HyperbolicSolution};

/// Knobs for [`solve_linear_mixed`].
#[derive(Clone, Debug)]
pub struct CompositeOptions {
    pub h: f64,
    pub delta_schedule: Vec<f64>,
    pub epsilon_schedule: Vec<f64>,
    pub cfl: f64,
    /// Compatibility is checked to order `compat_m + d - 2`.
    pub compat_m: usize,
    pub compat_tolerance: CompatTolerance,
    /// Fail with IncompatibleData when a check fails; otherwise only report it.
    pub enforce_compat: bool,
    /// Glue defect must stay below `glue_constant * h^2 * scale`.
    pub glue_constant: f64,
    /// Worker threads for the two hyperbolic marches; `None` reads MIXTYPE_THREADS.
    pub threads: Option<usize>,
}

impl Default for CompositeOptions {
    fn default() -> Self {
        CompositeOptions {
            h: 1.0 / 64.0,
            delta_schedule: default_delta_schedule(),
            epsilon_schedule: default_epsilon_schedule(),
            cfl: 0.8,
            compat_m: 2,
            compat_tolerance: numeric_trace_tolerance(),
            enforce_compat: true,
            glue_constant: 50.0,
            threads: None,
        }
    }
}

/// Compatibility tolerance for traces extracted from a grid solution.
pub fn numeric_trace_tolerance() -> CompatTolerance {
    CompatTolerance { rel: 1e-6, allowance: vec![1e-2, 1e-1, 1.0, 10.0] }
}

/// Thread cap from MIXTYPE_THREADS (default: available parallelism).
pub fn thread_limit() -> usize {
    std::env::var("MIXTYPE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Jumps between the elliptic solution and the hyperbolic extensions on the overlap band.
#[derive(Clone, Debug, Default, Serialize)]
pub struct GlueDefect {
    pub value: f64,
    pub slope: f64,
    pub nodes: usize,
    pub tol: f64,
    /// Node of the largest value jump.
    pub at: (f64, f64),
}

#[derive(Clone, Debug)]
pub struct CompositeRun {
    pub spec: DomainSpec,
    pub coeffs: CoefficientSet,
    pub region: RegionMap,
    /// Solution on the outer disk.
    pub u_global: GridFunction,
    pub elliptic: EllipticReport,
    pub hyperbolic: [HyperbolicReport; 2],
    pub energy: [EnergyLedger; 2],
    pub compat: [CompatReport; 2],
    pub glue_defect: GlueDefect,
    pub scale: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompositeReport {
    pub h: f64,
    pub elliptic: EllipticReport,
    pub hyperbolic_up: HyperbolicReport,
    pub hyperbolic_down: HyperbolicReport,
    pub compat_up: CompatSummary,
    pub compat_down: CompatSummary,
    pub glue_defect: GlueDefect,
    pub max_abs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompatSummary {
    pub residuals: Vec<f64>,
    pub tolerances: Vec<f64>,
    pub pass: bool,
}

impl From<&CompatReport> for CompatSummary {
    fn from(c: &CompatReport) -> Self {
        CompatSummary { residuals: c.residuals.clone(), tolerances: c.tolerances.clone(), pass: c.all_pass() }
    }
}

impl CompositeRun {
    pub fn report(&self) -> CompositeReport {
        CompositeReport {
            h: self.region.grid.h,
            elliptic: self.elliptic.clone(),
            hyperbolic_up: self.hyperbolic[0].clone(),
            hyperbolic_down: self.hyperbolic[1].clone(),
            compat_up: (&self.compat[0]).into(),
            compat_down: (&self.compat[1]).into(),
            glue_defect: self.glue_defect.clone(),
            max_abs: self.u_global.max_abs(None),
        }
    }
}

fn hyperbolic_problem<'a>(grid: Grid2D, coeffs: &'a CoefficientSet, trace: CauchyTrace, sigma: f64, spec: &DomainSpec, opts: &CompositeOptions) -> HyperbolicProblem<'a> {
    let mut p = HyperbolicProblem::new(grid, coeffs, trace, sigma, spec.radius_outer);
    p.epsilon_schedule = opts.epsilon_schedule.clone();
    p.cfl = opts.cfl;
    p.row_aligned = true;
    p
}

/// Solves the mixed problem on the outer disk with Dirichlet data `dirichlet` on the
/// elliptic boundary (zero gives the normalized solution vanishing on the curves).
pub fn solve_linear_mixed(spec: &DomainSpec, coeffs: &CoefficientSet, dirichlet: ScalarField, opts: &CompositeOptions) -> Result<CompositeRun> {
    spec.validate()?;
    let grid = Grid2D::covering(spec.radius_outer, opts.h)?;
    let region = build_region_map(spec, grid, |x, y| coeffs.k.eval(x, y))?;
    let orient = orientation_check(&region);
    if !orient.pass {
        return Err(orientation_error(&orient));
    }

    let mut ep = EllipticProblem::new(spec, &region, coeffs);
    ep.dirichlet = dirichlet.clone();
    ep.delta_schedule = opts.delta_schedule.clone();
    let ell = continue_to_degenerate(&ep)?;

    let d = coeffs.bounds.d;
    let order = (opts.compat_m + d).saturating_sub(2).max(1);
    let cu = check_compatibility(&ell.trace_upper, coeffs, order, &opts.compat_tolerance)?;
    let cd = check_compatibility(&ell.trace_lower, coeffs, order, &opts.compat_tolerance)?;
    if opts.enforce_compat {
        cu.require()?;
        cd.require()?;
    }

    let up = hyperbolic_problem(grid, coeffs, ell.trace_upper.clone(), 1.0, spec, opts);
    let down = hyperbolic_problem(grid, coeffs, ell.trace_lower.clone(), -1.0, spec, opts);
    let threads = opts.threads.unwrap_or_else(thread_limit);
    let (hu, hd): (Result<HyperbolicSolution>, Result<HyperbolicSolution>) = if threads >= 2 {
        std::thread::scope(|sc| {
            let t = sc.spawn(|| solve_degenerate(&down));
            let a = solve_degenerate(&up);
            (a, t.join().unwrap_or_else(|_| Err(Error::Config("hyperbolic worker panicked".into()))))
        })
    } else {
        (solve_degenerate(&up), solve_degenerate(&down))
    };
    let (hu, hd) = (hu?, hd?);

    let (u_global, glue) = glue(&region, spec.radius_inner, &ell.u, [&hu.u, &hd.u], &dirichlet);
    let scale = u_global.max_abs(None).max(ell.trace_upper.scale()).max(ell.trace_lower.scale());
    let tol = opts.glue_constant * opts.h * opts.h * scale;
    let glue_defect = GlueDefect { tol, ..glue };
    if glue_defect.value > tol {
        return Err(Error::GlueDefectExceeded { defect: glue_defect.value, tol });
    }
    Ok(CompositeRun {
        spec: spec.clone(),
        coeffs: coeffs.clone(),
        hyperbolic: [hu.report(1.0, d), hd.report(-1.0, d)],
        energy: [hu.energy, hd.energy],
        compat: [cu, cd],
        elliptic: ell.report(),
        region,
        u_global,
        glue_defect,
        scale,
    })
}

fn orientation_error(o: &OrientationReport) -> Error {
    let component = match o.failures.first() {
        Some((id, n)) => format!("component {id} ({n} curve nodes)"),
        None => "unknown".into(),
    };
    Error::OrientationFailure { component }
}

/// Assembles the global solution and measures the jumps on the overlap inside the
/// disk of radius `measure_radius` (the outer corners carry cap and padding effects).
fn glue(region: &RegionMap, measure_radius: f64, ell: &GridFunction, hyp: [&GridFunction; 2], dirichlet: &ScalarField) -> (GridFunction, GlueDefect) {
    let g = region.grid;
    let disk = region.disk_mask(region.radius_outer);
    let mut values = vec![0.0; g.len()];
    for p in 0..g.len() {
        if !disk[p] {
            continue;
        }
        let (x, y) = g.xy(p);
        let side = if y >= 0.0 { 0 } else { 1 };
        values[p] = match region.labels[p] {
            Label::EllipticPlus if ell.mask[p] => ell.values[p],
            Label::EllipticPlus => dirichlet.eval(x, y),
            Label::HyperbolicUp if hyp[0].mask[p] => hyp[0].values[p],
            Label::HyperbolicDown if hyp[1].mask[p] => hyp[1].values[p],
            _ if hyp[side].mask[p] => hyp[side].values[p],
            _ if ell.mask[p] => ell.values[p],
            _ => dirichlet.eval(x, y),
        };
    }

    // value and vertical-slope jumps where both the elliptic solution and a ghost layer exist
    let mut defect = GlueDefect::default();
    let inner = region.disk_mask(measure_radius);
    for p in 0..g.len() {
        if !inner[p] || region.labels[p] != Label::EllipticPlus || !ell.mask[p] {
            continue;
        }
        let (i, j) = g.ij(p);
        for hf in hyp {
            if !hf.mask[p] {
                continue;
            }
            defect.nodes += 1;
            let jump = (ell.values[p] - hf.values[p]).abs();
            if jump > defect.value {
                defect.value = jump;
                defect.at = g.xy(p);
            }
            if j > 0 && j + 1 < g.ny {
                let (a, b) = (g.idx(i, j - 1), g.idx(i, j + 1));
                if ell.mask[a] && ell.mask[b] && hf.mask[a] && hf.mask[b] {
                    let se = ell.values[b] - ell.values[a];
                    let sh = hf.values[b] - hf.values[a];
                    defect.slope = defect.slope.max((se - sh).abs() / (2.0 * g.h));
                }
            }
        }
    }
    (GridFunction::new(g, values, disk), defect)
}

/// One row of the a priori estimate table.
#[derive(Clone, Debug, Serialize)]
pub struct EstimateRow {
    pub s: usize,
    pub u_norm: f64,
    pub f_norm: f64,
    pub ratio: f64,
}

/// ||u||_{H^s} / ||f||_{H^{s+d+3}} on the inner disk for s = 0..=s_max.
pub fn verify_estimate(run: &CompositeRun, s_max: usize) -> Result<Vec<EstimateRow>> {
    let d = run.coeffs.bounds.d;
    let inner = run.region.disk_mask(run.spec.radius_inner);
    let f = run.coeffs.f.sample(run.region.grid);
    let mut rows = Vec::new();
    for s in 0..=s_max {
        let un = sobolev_norm(&run.u_global, s, &inner)?.value;
        let fnorm = sobolev_norm(&f, s + d + 3, &inner)?.value;
        let ratio = if fnorm == 0.0 { if un == 0.0 { 0.0 } else { f64::INFINITY } } else { un / fnorm };
        rows.push(EstimateRow { s, u_norm: un, f_norm: fnorm, ratio });
    }
    Ok(rows)
}

/// Ratios agree between two refinements within `rel`.
pub fn refinement_stable(coarse: &[EstimateRow], fine: &[EstimateRow], rel: f64) -> Vec<bool> {
    coarse
        .iter()
        .zip(fine)
        .map(|(a, b)| {
            let m = a.ratio.abs().max(b.ratio.abs());
            a.ratio.is_finite() && b.ratio.is_finite() && (m == 0.0 || (a.ratio - b.ratio).abs() <= rel * m)
        })
        .collect()
}

/// Outcome of running the method on a type-reversed equation.
#[derive(Clone, Debug, Serialize)]
pub struct FailureReport {
    pub failure_mode: String,
    pub orientation: OrientationReport,
    /// Error kind raised by a march forced through the would-be cones with f = 1.
    pub forced_march: Option<String>,
    pub forced_detail: Option<String>,
}

/// Checks orientation for `coeffs`; if `force`, marches upward from y = |x| anyway.
pub fn demonstrate_failure_mode(spec: &DomainSpec, coeffs: &CoefficientSet, h: f64, force: bool) -> Result<FailureReport> {
    let grid = Grid2D::covering(spec.radius_outer, h)?;
    let region = build_region_map(spec, grid, |x, y| coeffs.k.eval(x, y))?;
    let orientation = orientation_check(&region);
    let failure_mode = if orientation.pass { "none" } else { "orientation" }.to_string();
    let (mut forced_march, mut forced_detail) = (None, None);
    if force {
        let forced = coeffs.clone().with_f(1.0);
        let kappa = spec.kappa_upper();
        let n = (spec.radius_outer / h).ceil() as usize;
        let trace = CauchyTrace::zero(kappa, grid.h, n, crate::compat::MAX_EXTENSION_ORDER);
        let mut p = HyperbolicProblem::new(grid, &forced, trace, 1.0, spec.radius_outer);
        p.allow_unstable = true;
        match march(&p, default_epsilon_schedule()[0]) {
            Ok(_) => forced_march = Some("none".into()),
            Err(e) => {
                forced_march = Some(e.kind().to_string());
                forced_detail = Some(e.to_string());
            }
        }
    }
    Ok(FailureReport { failure_mode, orientation, forced_march, forced_detail })
}
