//! Spectral low-pass S_theta on the even reflection of a rectangular grid function.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::compat::cutoff;
use crate::fields::GridFunction;

/// Multiplies the Fourier coefficients by chi(|xi| / theta), chi = 1 on [0, 1] and 0
/// on [2, inf); xi is the ordinary frequency (cycles per unit length) of the reflected
/// data, whose period is 2 (n - 1) h.
/// All nodes are used regardless of the mask.
pub fn smoothing_apply(u: &GridFunction, theta: f64) -> GridFunction {
    let g = u.grid;
    let (nx, ny) = (g.nx, g.ny);
    let (px, py) = (reflected_len(nx), reflected_len(ny));
    let mirror = |k: usize, n: usize| if k < n { k } else { 2 * (n - 1) - k };
    let mut data: Vec<Complex<f64>> = Vec::with_capacity(px * py);
    for jj in 0..py {
        let j = if ny > 1 { mirror(jj, ny) } else { 0 };
        for ii in 0..px {
            let i = if nx > 1 { mirror(ii, nx) } else { 0 };
            data.push(Complex::new(u.values[g.idx(i, j)], 0.0));
        }
    }
    let mut planner = FftPlanner::<f64>::new();
    transform_2d(&mut planner, &mut data, px, py, false);
    let wave = |k: usize, n: usize| {
        let s = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        s / (n as f64 * g.h)
    };
    for jj in 0..py {
        let ky = wave(jj, py);
        for ii in 0..px {
            let kx = wave(ii, px);
            data[jj * px + ii] *= cutoff((kx * kx + ky * ky).sqrt() / theta);
        }
    }
    transform_2d(&mut planner, &mut data, px, py, true);
    let norm = (px * py) as f64;
    let values = (0..g.len())
        .map(|p| {
            let (i, j) = g.ij(p);
            data[j * px + i].re / norm
        })
        .collect();
    GridFunction::new(g, values, u.mask.clone())
}

fn reflected_len(n: usize) -> usize {
    if n > 1 { 2 * (n - 1) } else { 1 }
}

fn transform_2d(planner: &mut FftPlanner<f64>, data: &mut [Complex<f64>], px: usize, py: usize, inverse: bool) {
    let fx = if inverse { planner.plan_fft_inverse(px) } else { planner.plan_fft_forward(px) };
    for row in data.chunks_mut(px) {
        fx.process(row);
    }
    let fy = if inverse { planner.plan_fft_inverse(py) } else { planner.plan_fft_forward(py) };
    let mut col = vec![Complex::new(0.0, 0.0); py];
    for i in 0..px {
        for j in 0..py {
            col[j] = data[j * px + i];
        }
        fy.process(&mut col);
        for j in 0..py {
            data[j * px + i] = col[j];
        }
    }
}
