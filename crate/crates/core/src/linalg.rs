//! Sparse and dense linear solvers for the stencil systems.

use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Clone, Debug)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds from per-row (column, value) lists; duplicates are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in r {
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        Csr { n, row_ptr, cols, vals }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    /// Lower and upper bandwidths.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut lo = 0;
        let mut up = 0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.cols[k];
                if c < i {
                    lo = lo.max(i - c);
                } else {
                    up = up.max(c - i);
                }
            }
        }
        (lo, up)
    }
}

/// Incomplete LU factorization with the sparsity of the matrix.
pub struct Ilu0 {
    a: Csr,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(m: &Csr) -> Result<Self> {
        let mut a = m.clone();
        let n = a.n;
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                if a.cols[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::SingularSystem { degree: i, pivot: 0.0 });
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (s, e) = (a.row_ptr[i], a.row_ptr[i + 1]);
            for k in s..e {
                pos[a.cols[k]] = k;
            }
            for k in s..e {
                let j = a.cols[k];
                if j >= i {
                    break;
                }
                let piv = a.vals[diag[j]];
                let lij = a.vals[k] / piv;
                a.vals[k] = lij;
                for kk in (diag[j] + 1)..a.row_ptr[j + 1] {
                    let c = a.cols[kk];
                    let p = pos[c];
                    if p != usize::MAX {
                        a.vals[p] -= lij * a.vals[kk];
                    }
                }
            }
            for k in s..e {
                pos[a.cols[k]] = usize::MAX;
            }
            let d = a.vals[diag[i]];
            if d.abs() < 1e-300 {
                return Err(Error::SingularSystem { degree: i, pivot: d });
            }
        }
        Ok(Ilu0 { a, diag })
    }

    pub fn solve(&self, r: &[f64], z: &mut [f64]) {
        let a = &self.a;
        for i in 0..a.n {
            let mut s = r[i];
            for k in a.row_ptr[i]..self.diag[i] {
                s -= a.vals[k] * z[a.cols[k]];
            }
            z[i] = s;
        }
        for i in (0..a.n).rev() {
            let mut s = z[i];
            for k in (self.diag[i] + 1)..a.row_ptr[i + 1] {
                s -= a.vals[k] * z[a.cols[k]];
            }
            z[i] = s / a.vals[self.diag[i]];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Outcome of an iterative solve.
#[derive(Clone, Copy, Debug)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
    pub direct: bool,
}

/// Right-preconditioned BiCGSTAB; `x` holds the initial guess on entry.
pub fn bicgstab(a: &Csr, pc: &Ilu0, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<SolveStats> {
    let n = a.n;
    let bn = norm(b);
    if bn == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(SolveStats { iterations: 0, residual: 0.0, direct: false });
    }
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut res = norm(&r) / bn;
    if res <= tol {
        return Ok(SolveStats { iterations: 0, residual: res, direct: false });
    }
    for it in 1..=max_iter {
        let rho_new = dot(&r0, &r);
        if rho_new.abs() < 1e-300 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        pc.solve(&p, &mut phat);
        a.matvec(&phat, &mut v);
        let den = dot(&r0, &v);
        if den.abs() < 1e-300 {
            break;
        }
        alpha = rho / den;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) / bn <= tol {
            for i in 0..n {
                x[i] += alpha * phat[i];
            }
            return Ok(SolveStats { iterations: it, residual: norm(&s) / bn, direct: false });
        }
        pc.solve(&s, &mut shat);
        a.matvec(&shat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            break;
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        res = norm(&r) / bn;
        if res <= tol {
            return Ok(SolveStats { iterations: it, residual: res, direct: false });
        }
        if !res.is_finite() || omega.abs() < 1e-300 {
            break;
        }
    }
    // recompute the true residual for the report
    a.matvec(x, &mut r);
    let true_res = r.iter().zip(b).map(|(ax, bi)| (bi - ax) * (bi - ax)).sum::<f64>().sqrt() / bn;
    Err(Error::SolverDivergence { iterations: max_iter, residual: true_res })
}

/// Banded LU with partial pivoting (LAPACK gbsv layout, row-major here).
pub fn banded_solve(a: &Csr, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n;
    let (kl, ku) = a.bandwidth();
    let w = 2 * kl + ku + 1;
    // band[i][j - i + kl] holds entry (i, j); room for kl extra superdiagonals from pivoting
    let mut band = vec![0.0; n * w];
    let at = |i: usize, j: usize| i * w + (j + kl - i);
    for i in 0..n {
        for k in a.row_ptr[i]..a.row_ptr[i + 1] {
            band[at(i, a.cols[k])] = a.vals[k];
        }
    }
    let mut x = b.to_vec();
    let umax = kl + ku;
    for col in 0..n {
        let last = (col + kl).min(n - 1);
        let mut piv = col;
        let mut best = band[at(col, col)].abs();
        for r in (col + 1)..=last {
            let v = band[at(r, col)].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-300 {
            return Err(Error::SingularSystem { degree: col, pivot: best });
        }
        let jend = (col + umax).min(n - 1);
        if piv != col {
            for j in col..=jend {
                band.swap(at(col, j), at(piv, j));
            }
            x.swap(col, piv);
        }
        let d = band[at(col, col)];
        for r in (col + 1)..=last {
            let m = band[at(r, col)] / d;
            if m == 0.0 {
                continue;
            }
            band[at(r, col)] = 0.0;
            for j in (col + 1)..=jend {
                band[at(r, j)] -= m * band[at(col, j)];
            }
            x[r] -= m * x[col];
        }
    }
    for i in (0..n).rev() {
        let jend = (i + umax).min(n - 1);
        let mut s = x[i];
        for j in (i + 1)..=jend {
            s -= band[at(i, j)] * x[j];
        }
        x[i] = s / band[at(i, i)];
    }
    Ok(x)
}

/// Solves A x = b with dense Gaussian elimination and partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        if a[piv][col].abs() < 1e-13 * scale {
            return Err(Error::SingularSystem { degree: col, pivot: a[piv][col] });
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let m = a[r][col] / a[col][col];
            if m == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= m * a[col][c];
            }
            b[r] -= m * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Ok(x)
}

/// Solves with BiCGSTAB + ILU(0), falling back to banded LU for small or stubborn systems.
pub fn solve(a: &Csr, b: &[f64], guess: Option<&[f64]>, tol: f64) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.n;
    if n == 0 {
        return Ok((Vec::new(), SolveStats { iterations: 0, residual: 0.0, direct: true }));
    }
    let direct = |a: &Csr| -> Result<(Vec<f64>, SolveStats)> {
        let x = banded_solve(a, b)?;
        let mut r = vec![0.0; n];
        a.matvec(&x, &mut r);
        let bn = norm(b).max(1e-300);
        let res = r.iter().zip(b).map(|(ax, bi)| (bi - ax) * (bi - ax)).sum::<f64>().sqrt() / bn;
        Ok((x, SolveStats { iterations: 0, residual: res, direct: true }))
    };
    if n <= 400 {
        return direct(a);
    }
    let mut x = guess.map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    let attempt = Ilu0::new(a).and_then(|pc| bicgstab(a, &pc, b, &mut x, tol, 4000));
    match attempt {
        Ok(stats) => Ok((x, stats)),
        Err(e) => {
            let (x, stats) = direct(a)?;
            if stats.residual <= tol.max(1e-9) {
                Ok((x, stats))
            } else {
                Err(e)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> Csr {
        Csr::from_rows(
            (0..n)
                .map(|i| {
                    let mut r = vec![(i, -2.0)];
                    if i > 0 {
                        r.push((i - 1, 0.7));
                    }
                    if i + 1 < n {
                        r.push((i + 1, 1.2));
                    }
                    r
                })
                .collect(),
        )
    }

    #[test]
    fn solvers_agree() {
        let a = laplace_1d(600);
        let b: Vec<f64> = (0..600).map(|i| (i as f64 * 0.1).sin()).collect();
        let x1 = banded_solve(&a, &b).unwrap();
        let (x2, _) = solve(&a, &b, None, 1e-12).unwrap();
        let err = x1.iter().zip(&x2).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn dense_small() {
        let x = dense_solve(vec![vec![2.0, 1.0], vec![1.0, 3.0]], vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
        assert!(dense_solve(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 1.0]).is_err());
    }
}
