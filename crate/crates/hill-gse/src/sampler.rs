//! Spectral synthesis of Gaussian potential paths and Cameron-Martin tilts.
//!
//! Each sample draws independent complex Gaussians of variance K̂(n) per mode
//! (Hermitian symmetry enforced) and synthesizes the grid path by inverse FFT.
//! Sampling is pure in (kernel, seed, index): sample `i` of a run is bit-
//! reproducible regardless of how samples are distributed over workers.

use crate::error::{Error, Result};
use crate::fourier;
use crate::kernel::CovarianceKernel;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A discretized potential path on the uniform circular grid.
#[derive(Debug, Clone)]
pub struct PotentialSample {
    /// q on the grid.
    pub values: Vec<f64>,
    /// Mean mode q₀ = ∫₀¹q.
    pub q0: f64,
    /// Mean-zero part q̃ = q - q₀.
    pub tilde_values: Vec<f64>,
    /// Log likelihood ratio dP̃/dP̃_shifted for tilted samples; 0 for plain ones.
    pub log_weight: f64,
}

/// A Cameron-Martin mean shift with its log-normalizer.
#[derive(Debug, Clone)]
pub struct TiltSpec {
    /// Mean-zero shift h applied to q̃.
    pub shift_path: Vec<f64>,
    /// ½⟨h, 𝐊⁻¹h⟩.
    pub rate: f64,
}

/// Deterministic per-sample RNG: stream `index` of the seeded generator.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn draw_tilde_coefficients(kernel: &CovarianceKernel, rng: &mut impl Rng) -> Vec<Complex64> {
    let n = kernel.grid_size();
    let half = n / 2;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for mode in 1..half {
        let sd = (kernel.coeff(mode) / 2.0).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        coeffs[mode] = Complex64::new(sd * re, sd * im);
        coeffs[n - mode] = coeffs[mode].conj();
    }
    // Nyquist bin represents both ±N/2 modes: real, variance 2K̂(N/2)
    let g: f64 = rng.sample(StandardNormal);
    coeffs[half] = Complex64::new((2.0 * kernel.coeff(half)).sqrt() * g, 0.0);
    coeffs
}

/// Draw a plain sample of the full potential q = q₀ + q̃.
pub fn sample(kernel: &CovarianceKernel, rng: &mut impl Rng) -> PotentialSample {
    let tilde = fourier::synthesize(&draw_tilde_coefficients(kernel, rng));
    let q0 = kernel.sigma0_sq().sqrt() * rng.sample::<f64, _>(StandardNormal);
    let values = tilde.iter().map(|v| v + q0).collect();
    PotentialSample {
        values,
        q0,
        tilde_values: tilde,
        log_weight: 0.0,
    }
}

/// The §3 concentration shift: h = λ(K(x) - ∫K)/K(0), projected to the
/// kernel's represented modes (it is a kernel path, so the projection is exact).
pub fn make_tilt_toward_optimal(kernel: &CovarianceKernel, lambda: f64) -> Result<TiltSpec> {
    let k0 = kernel.at_zero();
    let integral = kernel.integral();
    let shift_path: Vec<f64> = kernel
        .grid_values()
        .iter()
        .map(|&k| lambda * (k - integral) / k0)
        .collect();
    let rate = 0.5 * kernel.quad_form_inv(&shift_path)?;
    Ok(TiltSpec { shift_path, rate })
}

/// Draw q̃ from the shifted measure, carrying the exact likelihood ratio
/// back to the unshifted one: E_tilted[e^{log_weight} F(q̃)] = E[F(q̃)].
pub fn sample_tilted(
    kernel: &CovarianceKernel,
    tilt: &TiltSpec,
    rng: &mut impl Rng,
) -> Result<PotentialSample> {
    let raw = fourier::synthesize(&draw_tilde_coefficients(kernel, rng));
    let q0 = kernel.sigma0_sq().sqrt() * rng.sample::<f64, _>(StandardNormal);
    if tilt.shift_path.len() != raw.len() {
        return Err(Error::InvalidInput(
            "tilt shift length does not match kernel grid".into(),
        ));
    }
    let log_weight = -kernel.cross_form_inv(&tilt.shift_path, &raw)? - tilt.rate;
    let tilde: Vec<f64> = raw.iter().zip(&tilt.shift_path).map(|(r, h)| r + h).collect();
    let values = tilde.iter().map(|v| v + q0).collect();
    Ok(PotentialSample {
        values,
        q0,
        tilde_values: tilde,
        log_weight,
    })
}
