//! Thin FFT layer: periodic grid paths <-> Fourier coefficients.
//!
//! Conventions: a real path `v` of length N on the uniform circular grid
//! x_j = j/N has coefficients c[n] = (1/N) sum_j v_j e^{-2 pi i n j / N},
//! so that v_j = sum_n c[n] e^{+2 pi i n j / N}. Coefficient index n runs
//! 0..N with n > N/2 standing for the negative frequency n - N.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> =
        RefCell::new(HashMap::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cache| {
        cache
            .borrow_mut()
            .entry((n, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    })
}

/// Coefficients of a real grid path (normalized by 1/N).
pub fn coefficients(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan(n, false).process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Synthesize a real path from its coefficient vector (inverse of `coefficients`).
///
/// Panics if the imaginary residue exceeds 1e-10 of the path scale: the input
/// must be Hermitian-symmetric.
pub fn synthesize(coeffs: &[Complex64]) -> Vec<f64> {
    let n = coeffs.len();
    let mut buf = coeffs.to_vec();
    plan(n, true).process(&mut buf);
    let scale: f64 = buf.iter().map(|c| c.norm()).fold(0.0_f64, f64::max).max(1.0);
    let imag: f64 = buf.iter().map(|c| c.im.abs()).fold(0.0_f64, f64::max);
    assert!(
        imag <= 1e-10 * scale,
        "non-Hermitian coefficient vector: imaginary residue {imag:e}"
    );
    buf.iter().map(|c| c.re).collect()
}

/// Spectral derivative of order `order` of a real periodic grid path.
pub fn derivative(values: &[f64], order: u32) -> Vec<f64> {
    let n = values.len();
    let mut c = coefficients(values);
    for (idx, coeff) in c.iter_mut().enumerate() {
        let freq = signed_frequency(idx, n);
        let factor = Complex64::new(0.0, 2.0 * std::f64::consts::PI * freq as f64).powu(order);
        *coeff *= factor;
    }
    // the Nyquist mode of an odd-order derivative has no real representation
    if order % 2 == 1 && n % 2 == 0 {
        c[n / 2] = Complex64::new(0.0, 0.0);
    }
    synthesize(&c)
}

/// Periodic antiderivative with value 0 at x = 0; the input must be mean-zero.
pub fn antiderivative(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut c = coefficients(values);
    assert!(
        c[0].norm() <= 1e-9 * (1.0 + max_abs(values)),
        "antiderivative requires a mean-zero path"
    );
    c[0] = Complex64::new(0.0, 0.0);
    for (idx, coeff) in c.iter_mut().enumerate().skip(1) {
        let freq = signed_frequency(idx, n);
        *coeff /= Complex64::new(0.0, 2.0 * std::f64::consts::PI * freq as f64);
    }
    let raw = synthesize(&c);
    let offset = raw[0];
    raw.iter().map(|v| v - offset).collect()
}

/// Trigonometric interpolation of a real periodic path onto a finer grid.
pub fn upsample(values: &[f64], target_len: usize) -> Vec<f64> {
    let n = values.len();
    assert!(target_len >= n && target_len % 2 == 0);
    if target_len == n {
        return values.to_vec();
    }
    let c = coefficients(values);
    let mut padded = vec![Complex64::new(0.0, 0.0); target_len];
    let half = n / 2;
    for k in 0..half {
        padded[k] = c[k];
        if k > 0 {
            padded[target_len - k] = c[n - k];
        }
    }
    // split the Nyquist coefficient symmetrically
    padded[half] = 0.5 * c[half];
    padded[target_len - half] = 0.5 * c[half];
    synthesize(&padded)
}

pub fn signed_frequency(idx: usize, n: usize) -> i64 {
    if idx <= n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// L2 norm with the uniform measure on [0,1): sqrt of the mean square.
pub fn l2_norm(values: &[f64]) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let v: Vec<f64> = (0..64)
            .map(|j| (2.0 * std::f64::consts::PI * j as f64 / 64.0).sin() + 0.3)
            .collect();
        let back = synthesize(&coefficients(&v));
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_cosine() {
        let n = 128;
        let v: Vec<f64> = (0..n)
            .map(|j| (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos())
            .collect();
        let d = derivative(&v, 1);
        for (j, dv) in d.iter().enumerate() {
            let x = j as f64 / n as f64;
            let expect = -2.0 * std::f64::consts::PI * (2.0 * std::f64::consts::PI * x).sin();
            assert!((dv - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn antiderivative_inverts_derivative() {
        let n = 128;
        let v: Vec<f64> = (0..n)
            .map(|j| {
                let x = j as f64 / n as f64;
                (2.0 * std::f64::consts::PI * x).sin() - 0.5 * (4.0 * std::f64::consts::PI * x).cos()
            })
            .collect();
        let a = antiderivative(&v);
        let d = derivative(&a, 1);
        for (x, y) in v.iter().zip(&d) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!(a[0].abs() < 1e-12);
    }
}
