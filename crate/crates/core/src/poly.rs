//! Truncated bivariate Taylor polynomials, used for corner jets.

/// sum c[i][j] x^i y^j over i + j <= degree.
#[derive(Clone, Debug, PartialEq)]
pub struct Taylor2 {
    degree: usize,
    coef: Vec<Vec<f64>>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

impl Taylor2 {
    pub fn zero(degree: usize) -> Self {
        let coef = (0..=degree).map(|i| vec![0.0; degree + 1 - i]).collect();
        Taylor2 { degree, coef }
    }

    pub fn constant(degree: usize, c: f64) -> Self {
        let mut p = Self::zero(degree);
        p.coef[0][0] = c;
        p
    }

    /// Builds from partial derivatives `d(i, j)` = D_x^i D_y^j at the expansion point.
    pub fn from_derivatives(degree: usize, d: impl Fn(usize, usize) -> f64) -> Self {
        let mut p = Self::zero(degree);
        for i in 0..=degree {
            for j in 0..=(degree - i) {
                p.coef[i][j] = d(i, j) / (factorial(i) * factorial(j));
            }
        }
        p
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coef(&self, i: usize, j: usize) -> f64 {
        if i + j > self.degree {
            0.0
        } else {
            self.coef[i][j]
        }
    }

    pub fn set_coef(&mut self, i: usize, j: usize, v: f64) {
        self.coef[i][j] = v;
    }

    /// D_x^i D_y^j at the expansion point.
    pub fn derivative_at_origin(&self, i: usize, j: usize) -> f64 {
        self.coef(i, j) * factorial(i) * factorial(j)
    }

    pub fn set_derivative(&mut self, i: usize, j: usize, v: f64) {
        self.coef[i][j] = v / (factorial(i) * factorial(j));
    }

    pub fn add(&self, o: &Taylor2) -> Taylor2 {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Taylor2) -> Taylor2 {
        self.zip(o, |a, b| a - b)
    }

    fn zip(&self, o: &Taylor2, f: impl Fn(f64, f64) -> f64) -> Taylor2 {
        let d = self.degree.min(o.degree);
        let mut p = Self::zero(d);
        for i in 0..=d {
            for j in 0..=(d - i) {
                p.coef[i][j] = f(self.coef[i][j], o.coef[i][j]);
            }
        }
        p
    }

    pub fn scale(&self, s: f64) -> Taylor2 {
        let mut p = self.clone();
        p.coef.iter_mut().flatten().for_each(|c| *c *= s);
        p
    }

    /// Product truncated at the smaller degree.
    pub fn mul(&self, o: &Taylor2) -> Taylor2 {
        let d = self.degree.min(o.degree);
        let mut p = Self::zero(d);
        for i1 in 0..=d {
            for j1 in 0..=(d - i1) {
                let a = self.coef[i1][j1];
                if a == 0.0 {
                    continue;
                }
                for i2 in 0..=(d - i1 - j1) {
                    for j2 in 0..=(d - i1 - j1 - i2) {
                        p.coef[i1 + i2][j1 + j2] += a * o.coef[i2][j2];
                    }
                }
            }
        }
        p
    }

    /// Partial derivative D_x^a D_y^b; the degree drops by a + b.
    pub fn diff(&self, a: usize, b: usize) -> Taylor2 {
        if a + b > self.degree {
            return Self::zero(0);
        }
        let d = self.degree - a - b;
        let mut p = Self::zero(d);
        for i in 0..=d {
            for j in 0..=(d - i) {
                let fx = factorial(i + a) / factorial(i);
                let fy = factorial(j + b) / factorial(j);
                p.coef[i][j] = self.coef[i + a][j + b] * fx * fy;
            }
        }
        p
    }

    /// Restricts to y = k(x), where `k` holds the series coefficients of k with k[0] = 0.
    /// Returns series coefficients in x up to the polynomial degree.
    pub fn along_curve(&self, k: &[f64]) -> Vec<f64> {
        let n = self.degree;
        let mut kser = vec![0.0; n + 1];
        for (m, v) in k.iter().enumerate().take(n + 1) {
            kser[m] = *v;
        }
        let mut out = vec![0.0; n + 1];
        // kpow = k(x)^j
        let mut kpow = vec![0.0; n + 1];
        kpow[0] = 1.0;
        for j in 0..=n {
            for i in 0..=(n - j) {
                let c = self.coef[i][j];
                if c != 0.0 {
                    for m in 0..=(n - i) {
                        out[i + m] += c * kpow[m];
                    }
                }
            }
            kpow = series_mul(&kpow, &kser, n);
        }
        out
    }
}

/// Product of two univariate series truncated at degree n.
pub fn series_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for (i, &x) in a.iter().enumerate().take(n + 1) {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(n + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Series coefficients from derivatives: c_m = d_m / m!.
pub fn series_from_derivatives(d: &[f64]) -> Vec<f64> {
    d.iter().enumerate().map(|(m, v)| v / factorial(m)).collect()
}

/// Derivatives from series coefficients.
pub fn derivatives_from_series(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().map(|(m, v)| v * factorial(m)).collect()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_derivative() {
        // (x + y)^2 = x^2 + 2xy + y^2
        let mut p = Taylor2::zero(3);
        p.set_coef(1, 0, 1.0);
        p.set_coef(0, 1, 1.0);
        let q = p.mul(&p);
        assert_eq!((q.coef(2, 0), q.coef(1, 1), q.coef(0, 2)), (1.0, 2.0, 1.0));
        assert_eq!(q.diff(1, 1).coef(0, 0), 2.0);
        assert_eq!(q.derivative_at_origin(2, 0), 2.0);
    }

    #[test]
    fn restriction_to_curve() {
        // u = x^2 - y^2 on y = x + x^2: x^2 - (x^2 + 2x^3 + x^4)
        let p = Taylor2::from_derivatives(4, |i, j| match (i, j) {
            (2, 0) => 2.0,
            (0, 2) => -2.0,
            _ => 0.0,
        });
        let s = p.along_curve(&[0.0, 1.0, 1.0]);
        assert_eq!(s, vec![0.0, 0.0, 0.0, -2.0, -1.0]);
    }
}
