//! Degenerate elliptic Dirichlet problem in the elliptic region, by regularizing
//! K to K + delta and continuing delta to zero.

use serde::Serialize;

use crate::compat::{Branches, CauchyTrace};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::{sobolev_norm, CoefficientSet, GridFunction, ScalarField};
use crate::geometry::{outer_corner_caps, CornerCurve, DomainSpec, Label, RegionMap};
use crate::linalg::{self, dense_solve, Csr, SolveStats};
use crate::poly::Taylor2;

/// Default regularization schedule 1e-2 * 10^-j, j = 0..=3.
pub fn default_delta_schedule() -> Vec<f64> {
    (0..=3).map(|j| 1e-2 * 10f64.powi(-j)).collect()
}

#[derive(Clone, Debug)]
pub struct EllipticProblem<'a> {
    pub spec: &'a DomainSpec,
    pub region: &'a RegionMap,
    pub coeffs: &'a CoefficientSet,
    /// Dirichlet data g on the boundary of the elliptic region.
    pub dirichlet: ScalarField,
    pub delta_schedule: Vec<f64>,
    /// Radius of the arcs rounding the outer corners, in cells (0 disables).
    pub corner_rounding_cells: f64,
    pub tol: f64,
}

impl<'a> EllipticProblem<'a> {
    pub fn new(spec: &'a DomainSpec, region: &'a RegionMap, coeffs: &'a CoefficientSet) -> Self {
        EllipticProblem {
            spec,
            region,
            coeffs,
            dirichlet: ScalarField::zero(),
            delta_schedule: default_delta_schedule(),
            corner_rounding_cells: 4.0,
            tol: 1e-10,
        }
    }
}

/// Node sets of the discrete problem.
#[derive(Clone, Debug)]
pub struct EllipticLayout {
    /// Unknown index per node (usize::MAX if not an unknown).
    pub unknown_of: Vec<usize>,
    /// Node of each unknown, column-major (y fastest).
    pub nodes: Vec<usize>,
    /// Unknowns plus the Dirichlet nodes they touch.
    pub mask: Vec<bool>,
    /// Nodes removed by corner rounding.
    pub caps: usize,
}

pub fn layout(problem: &EllipticProblem) -> EllipticLayout {
    let region = problem.region;
    let g = region.grid;
    let rho = problem.corner_rounding_cells * g.h;
    let k = &problem.coeffs.k;
    let caps = if rho > 0.0 { outer_corner_caps(problem.spec, rho, |x, y| k.eval(x, y)) } else { Vec::new() };
    let mut unknown_of = vec![usize::MAX; g.len()];
    let mut nodes = Vec::new();
    let mut removed = 0;
    for i in 0..g.nx {
        for j in 0..g.ny {
            let p = g.idx(i, j);
            if region.labels[p] != Label::EllipticPlus {
                continue;
            }
            let (x, y) = g.xy(p);
            if caps.iter().any(|c| c.contains(x, y)) {
                removed += 1;
                continue;
            }
            unknown_of[p] = nodes.len();
            nodes.push(p);
        }
    }
    let mut mask = vec![false; g.len()];
    for &p in &nodes {
        mask[p] = true;
        let (i, j) = g.ij(p);
        for (a, b) in g.neighbours(i, j) {
            mask[g.idx(a, b)] = true;
        }
    }
    EllipticLayout { unknown_of, nodes, mask, caps: removed }
}

fn assemble(problem: &EllipticProblem, lay: &EllipticLayout, delta: f64) -> (Csr, Vec<f64>) {
    let g = problem.region.grid;
    let c = problem.coeffs;
    let h2 = g.h * g.h;
    let mut rows = Vec::with_capacity(lay.nodes.len());
    let mut rhs = Vec::with_capacity(lay.nodes.len());
    for &p in &lay.nodes {
        let (i, j) = g.ij(p);
        let (x, y) = g.xy(p);
        let axx = c.a.eval(x, y) * (c.k.eval(x, y) + delta) / h2;
        let ayy = 1.0 / h2;
        let bx = c.b1.eval(x, y) / (2.0 * g.h);
        let by = c.b2.eval(x, y) / (2.0 * g.h);
        let mut row = vec![(lay.unknown_of[p], -2.0 * axx - 2.0 * ayy + c.c.eval(x, y))];
        let mut b = c.f.eval(x, y);
        for (di, dj, w) in [(1isize, 0isize, axx + bx), (-1, 0, axx - bx), (0, 1, ayy + by), (0, -1, ayy - by)] {
            let q = g.idx((i as isize + di) as usize, (j as isize + dj) as usize);
            let u = lay.unknown_of[q];
            if u != usize::MAX {
                row.push((u, w));
            } else {
                let (qx, qy) = g.xy(q);
                b -= w * problem.dirichlet.eval(qx, qy);
            }
        }
        rows.push(row);
        rhs.push(b);
    }
    (Csr::from_rows(rows), rhs)
}

fn scatter(problem: &EllipticProblem, lay: &EllipticLayout, x: &[f64]) -> GridFunction {
    let g = problem.region.grid;
    let mut values = vec![0.0; g.len()];
    for p in 0..g.len() {
        if lay.mask[p] {
            let u = lay.unknown_of[p];
            values[p] = if u != usize::MAX {
                x[u]
            } else {
                let (qx, qy) = g.xy(p);
                problem.dirichlet.eval(qx, qy)
            };
        }
    }
    GridFunction::new(g, values, lay.mask.clone())
}

fn solve_with(problem: &EllipticProblem, lay: &EllipticLayout, delta: f64, guess: Option<&[f64]>) -> Result<(Vec<f64>, SolveStats)> {
    if !(delta > 0.0) {
        return Err(Error::Config(format!("regularization must be positive, got {delta}")));
    }
    let (a, b) = assemble(problem, lay, delta);
    linalg::solve(&a, &b, guess, problem.tol)
}

/// Solution of u_yy + a (K + delta) u_xx + b1 u_x + b2 u_y + c u = f with Dirichlet data.
pub fn solve_regularized(problem: &EllipticProblem, delta: f64) -> Result<GridFunction> {
    let lay = layout(problem);
    let (x, _) = solve_with(problem, &lay, delta, None)?;
    Ok(scatter(problem, &lay, &x))
}

/// With c <= 0, f <= 0 and g = 0 the solution must be nonnegative.
pub fn comparison_check(u: &GridFunction, tol: f64) -> Result<()> {
    let min = (0..u.grid.len()).filter(|&p| u.mask[p]).map(|p| u.values[p]).fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(Error::MaximumPrincipleViolation { min });
    }
    Ok(())
}

/// Cauchy data read off the elliptic solution along one degeneracy curve.
#[derive(Clone, Debug, Serialize)]
pub struct TraceDiagnostics {
    /// psi(0) resolved from the tangential derivatives of phi along both curves.
    pub psi0: f64,
    /// psi(0) estimated by quadratic extrapolation of the neighbouring columns.
    pub psi0_extrapolated: f64,
    /// Columns per branch where the one-sided difference was available.
    pub columns: usize,
}

#[derive(Clone, Debug)]
pub struct EllipticSolution {
    pub u: GridFunction,
    pub deltas: Vec<f64>,
    pub iterates: Vec<GridFunction>,
    /// L2 distance between consecutive iterates.
    pub continuation_gap: Vec<f64>,
    pub sup_norms: Vec<f64>,
    pub solver: Vec<(usize, f64, bool)>,
    pub unknowns: usize,
    pub caps: usize,
    /// Trace on kappa_1 (hyperbolic side above).
    pub trace_upper: CauchyTrace,
    /// Trace on kappa_2 (hyperbolic side below).
    pub trace_lower: CauchyTrace,
    pub trace_diag: (TraceDiagnostics, TraceDiagnostics),
}

/// Serializable summary of the elliptic stage.
#[derive(Clone, Debug, Serialize)]
pub struct EllipticReport {
    pub deltas: Vec<f64>,
    pub continuation_gap: Vec<f64>,
    pub sup_norms: Vec<f64>,
    pub solver_iterations: Vec<usize>,
    pub solver_residuals: Vec<f64>,
    pub unknowns: usize,
    pub rounded_corner_nodes: usize,
    pub trace_upper: TraceDiagnostics,
    pub trace_lower: TraceDiagnostics,
}

impl EllipticSolution {
    pub fn report(&self) -> EllipticReport {
        EllipticReport {
            deltas: self.deltas.clone(),
            continuation_gap: self.continuation_gap.clone(),
            sup_norms: self.sup_norms.clone(),
            solver_iterations: self.solver.iter().map(|s| s.0).collect(),
            solver_residuals: self.solver.iter().map(|s| s.1).collect(),
            unknowns: self.unknowns,
            rounded_corner_nodes: self.caps,
            trace_upper: self.trace_diag.0.clone(),
            trace_lower: self.trace_diag.1.clone(),
        }
    }
}

/// Runs the delta schedule, checks the Cauchy property and extracts traces.
pub fn continue_to_degenerate(problem: &EllipticProblem) -> Result<EllipticSolution> {
    if problem.delta_schedule.len() < 3 {
        return Err(Error::Config("delta schedule needs at least 3 entries".into()));
    }
    if problem.delta_schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config("delta schedule must decrease".into()));
    }
    let lay = layout(problem);
    let g = problem.region.grid;
    let mut iterates: Vec<GridFunction> = Vec::new();
    let mut gaps = Vec::new();
    let mut sups = Vec::new();
    let mut solver = Vec::new();
    let mut prev: Option<Vec<f64>> = None;
    for &d in &problem.delta_schedule {
        let (x, st) = solve_with(problem, &lay, d, prev.as_deref())?;
        let u = scatter(problem, &lay, &x);
        if let Some(last) = iterates.last() {
            gaps.push(u.sub(last)?.l2(None));
        }
        sups.push(u.max_abs(None));
        solver.push((st.iterations, st.residual, st.direct));
        prev = Some(x);
        iterates.push(u);
    }
    let n = gaps.len();
    let floor = 1e-13 * sups.iter().fold(0.0f64, |m, v| m.max(*v)) * g.h;
    if n >= 2 && gaps[n - 1] > gaps[n - 2] && gaps[n - 1] > floor {
        return Err(Error::ContinuationStall { gaps });
    }
    let u = iterates.last().cloned().expect("nonempty schedule");
    let upper = problem.spec.kappa_upper();
    let lower = problem.spec.kappa_lower();
    let jet_order = problem.spec.jet_order;
    let psi0 = corner_gradient(problem, &upper, &lower)?.1;
    let (trace_upper, du) = extract_trace(problem, &u, &upper, -1.0, psi0, jet_order)?;
    let (trace_lower, dl) = extract_trace(problem, &u, &lower, 1.0, psi0, jet_order)?;
    Ok(EllipticSolution {
        u,
        deltas: problem.delta_schedule.clone(),
        iterates,
        continuation_gap: gaps,
        sup_norms: sups,
        solver,
        unknowns: lay.nodes.len(),
        caps: lay.caps,
        trace_upper,
        trace_lower,
        trace_diag: (du, dl),
    })
}

/// Gradient of u at the corner from the tangential derivatives of the Dirichlet data
/// along the two curves through it.
pub fn corner_gradient(problem: &EllipticProblem, upper: &CornerCurve, lower: &CornerCurve) -> Result<(f64, f64)> {
    // along the right branches of kappa_1 and kappa_2: d/dx g(x, k(x)) = g_x + k' g_y
    let (ku, _) = upper.jets(1);
    let (kl, _) = lower.jets(1);
    let (d1, d2) = match &problem.dirichlet {
        ScalarField::Expr(e) => {
            let x = Expr::x();
            let t1 = e.compose_xy(&x, &upper.right).dxy(1, 0).eval_xy(0.0, 0.0);
            let t2 = e.compose_xy(&x, &lower.right).dxy(1, 0).eval_xy(0.0, 0.0);
            (t1, t2)
        }
        other => {
            let s = 1e-4;
            let t = |k: &CornerCurve| (other.eval(s, k.eval(s)) - other.eval(0.0, 0.0)) / s;
            (t(upper), t(lower))
        }
    };
    let sol = dense_solve(vec![vec![1.0, ku[1]], vec![1.0, kl[1]]], vec![d1, d2])?;
    Ok((sol[0], sol[1]))
}

/// psi = u_y on the curve from the elliptic side (`side` = -1 below, +1 above), by the
/// derivative of the quadratic through the curve point and the two nearest nodes.
fn extract_trace(
    problem: &EllipticProblem,
    u: &GridFunction,
    curve: &CornerCurve,
    side: f64,
    psi0: f64,
    jet_order: usize,
) -> Result<(CauchyTrace, TraceDiagnostics)> {
    let g = u.grid;
    let h = g.h;
    let (oi, _) = g.origin_index;
    let n = oi.min(g.nx - 1 - oi);
    let mut psi = Branches::new(vec![f64::NAN; n + 1], vec![f64::NAN; n + 1]);
    let mut phi = Branches::new(vec![0.0; n + 1], vec![0.0; n + 1]);
    let mut columns = 0;
    for sgn in [1isize, -1] {
        for k in 0..=n {
            let col = (oi as isize + sgn * k as isize) as usize;
            let x = g.x(col);
            let yc = curve.eval(x);
            let gval = problem.dirichlet.eval(x, yc);
            let slot = |b: &mut Branches, v: f64| if sgn > 0 { b.right[k] = v } else { b.left[k] = v };
            slot(&mut phi, gval);
            if k == 0 {
                slot(&mut psi, psi0);
                continue;
            }
            // two nearest elliptic-side nodes at distance >= h/2
            let mut picks = Vec::new();
            let Some(jc) = g.row_of(yc).or_else(|| {
                let fj = yc / h + g.origin_index.1 as f64;
                if fj >= 0.0 && fj <= (g.ny - 1) as f64 { Some(fj.round() as usize) } else { None }
            }) else { continue };
            let mut j = jc as isize;
            for _ in 0..6 {
                if picks.len() == 2 || j < 0 || j >= g.ny as isize {
                    break;
                }
                let yj = g.y(j as usize);
                let t = side * (yj - yc);
                let p = g.idx(col, j as usize);
                if t >= 0.5 * h && u.mask[p] && problem.region.labels[p] != Label::Exterior {
                    picks.push((yj, u.values[p]));
                }
                j += side as isize;
            }
            if picks.len() < 2 {
                continue;
            }
            let (y1, u1) = picks[0];
            let (y2, u2) = picks[1];
            // derivative at yc of the quadratic through (yc, g), (y1, u1), (y2, u2)
            let d1 = y1 - yc;
            let d2 = y2 - yc;
            let w1 = d2 / (d1 * (d2 - d1));
            let w2 = -d1 / (d2 * (d2 - d1));
            let w0 = -(w1 + w2);
            slot(&mut psi, w0 * gval + w1 * u1 + w2 * u2);
            columns += 1;
        }
    }
    // pad columns without a one-sided stencil by the last available value
    for b in [&mut psi.right, &mut psi.left] {
        let mut last = psi0;
        for v in b.iter_mut() {
            if v.is_nan() {
                *v = last;
            } else {
                last = *v;
            }
        }
    }
    let extrap = |b: &[f64]| 3.0 * b[1] - 3.0 * b[2] + b[3];
    let psi0_extrapolated = if n >= 3 { 0.5 * (extrap(&psi.right) + extrap(&psi.left)) } else { psi0 };
    let phi_jets = match &problem.dirichlet {
        ScalarField::Expr(e) => {
            let x = Expr::x();
            let jets = |k: &Expr| {
                let mut d = e.compose_xy(&x, k);
                (0..=jet_order)
                    .map(|_| {
                        let v = d.eval_xy(0.0, 0.0);
                        d = d.dxy(1, 0);
                        v
                    })
                    .collect::<Vec<_>>()
            };
            Some(Branches::new(jets(&curve.right), jets(&curve.left)))
        }
        ScalarField::Sampled(_) => None,
    };
    let trace = CauchyTrace::from_samples(curve.clone(), h, phi, psi, jet_order, phi_jets);
    Ok((trace, TraceDiagnostics { psi0, psi0_extrapolated, columns }))
}

/// ||u||_{H^m} / ||f||_{H^{m+1}} over the elliptic region; 0 when both vanish.
pub fn estimate_ratio(sol: &EllipticSolution, f: &GridFunction, m: usize, region: &[bool]) -> Result<f64> {
    let nu = sobolev_norm(&sol.u, m, region)?.value;
    let nf = sobolev_norm(f, m + 1, region)?.value;
    if nf == 0.0 {
        return Ok(if nu == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(nu / nf)
}

/// Homogeneous corrections Q_k = (x^2 - y^2) sum_i c_{k-2,i} x^(k-2-i) y^i, k = 2..=m.
#[derive(Clone, Debug, Serialize)]
pub struct TaylorCorrection {
    /// coefficients[k - 2][i] = c_{k-2, i}.
    pub coefficients: Vec<Vec<f64>>,
    /// kappa^2 a(0), reported against the small-opening condition.
    pub opening: f64,
    /// Max residual of the solved systems.
    pub residual: f64,
}

fn stretch_x(p: &Taylor2, s: f64) -> Taylor2 {
    let d = p.degree();
    let mut q = p.clone();
    for i in 0..=d {
        for j in 0..=(d - i) {
            q.set_coef(i, j, p.coef(i, j) * s.powi(i as i32));
        }
    }
    q
}

/// Polynomial correction at the corner of the opening |y| < kappa |x| for
/// u_yy + a u_xx + b1 u_x + b2 u_y + c u = f with u = 0 on y = +-kappa x.
///
/// Works in x' = x / kappa, where the operator becomes u_yy + kappa^2 a u_x'x' + kappa b1 u_x' + ...
/// and the opening is |y| < |x'|. `f_jets[i][j]` = D_x^i D_y^j f(0) for i + j <= m - 2.
/// Returns the coefficients in the rescaled variables.
pub fn taylor_correction(coeffs: &CoefficientSet, f_jets: &[Vec<f64>], m: usize, kappa: f64) -> Result<TaylorCorrection> {
    if m < 2 {
        return Err(Error::Config("polynomial correction needs m >= 2".into()));
    }
    let deg = m;
    let a = stretch_x(&coeffs.a.taylor(0.0, 0.0, deg)?, kappa).scale(kappa * kappa);
    let b1 = stretch_x(&coeffs.b1.taylor(0.0, 0.0, deg)?, kappa).scale(kappa);
    let b2 = stretch_x(&coeffs.b2.taylor(0.0, 0.0, deg)?, kappa);
    let c = stretch_x(&coeffs.c.taylor(0.0, 0.0, deg)?, kappa);
    let f = stretch_x(
        &Taylor2::from_derivatives(deg, |i, j| f_jets.get(i).and_then(|r| r.get(j)).copied().unwrap_or(0.0)),
        kappa,
    );
    let a0 = a.coef(0, 0);
    let a_var = a.sub(&Taylor2::constant(deg, a0));
    let l0 = |q: &Taylor2| q.diff(0, 2).add(&q.diff(2, 0).scale(a0));
    let l_rest = |q: &Taylor2| {
        a_var
            .mul(&q.diff(2, 0))
            .add(&b1.mul(&q.diff(1, 0)))
            .add(&b2.mul(&q.diff(0, 1)))
            .add(&c.mul(q))
    };
    let basis = |k: usize, i: usize| {
        // (x^2 - y^2) x^(k-2-i) y^i
        let mut q = Taylor2::zero(deg);
        q.set_coef(k - i, i, 1.0);
        q.set_coef(k - 2 - i, i + 2, -1.0);
        q
    };
    let mut ftilde = f;
    let mut coefficients = Vec::new();
    let mut residual: f64 = 0.0;
    for k in 2..=m {
        let d = k - 2;
        let n = d + 1;
        let target: Vec<f64> = (0..n).map(|i| ftilde.coef(d - i, i)).collect();
        let mut mat = vec![vec![0.0; n]; n];
        for col in 0..n {
            let img = l0(&basis(k, col));
            for (row, r) in mat.iter_mut().enumerate() {
                r[col] = img.coef(d - row, row);
            }
        }
        let sol = dense_solve(mat.clone(), target.clone()).map_err(|e| match e {
            Error::SingularSystem { pivot, .. } => Error::SingularSystem { degree: k, pivot },
            other => other,
        })?;
        for (row, r) in mat.iter().enumerate() {
            let v: f64 = r.iter().zip(&sol).map(|(x, y)| x * y).sum::<f64>() - target[row];
            residual = residual.max(v.abs());
        }
        let mut qk = Taylor2::zero(deg);
        for (i, ci) in sol.iter().enumerate() {
            qk = qk.add(&basis(k, i).scale(*ci));
        }
        ftilde = ftilde.sub(&l_rest(&qk));
        coefficients.push(sol);
    }
    Ok(TaylorCorrection { coefficients, opening: a0, residual })
}
