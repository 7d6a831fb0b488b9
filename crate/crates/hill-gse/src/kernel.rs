//! Stationary covariance kernels on the circle, given by Fourier spectral data.
//!
//! A kernel is stored as the nonnegative coefficients K̂(n) for n = 0..=N/2
//! (with K̂(-n) = K̂(n) implied), on a synthesis grid of N points. All
//! quadratic forms are exact spectral sums over the represented modes.

use crate::error::{Error, Result};
use crate::fourier;
use num_complex::Complex64;

/// Relative floor below which a spectral mode counts as absent.
pub const SPECTRAL_FLOOR_REL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct CovarianceKernel {
    /// K̂(n) for n = 0..=grid_size/2.
    coeffs: Vec<f64>,
    /// Variance of the mean mode, equals K̂(0).
    sigma0_sq: f64,
    grid_size: usize,
    spectral_floor: f64,
}

fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}

impl CovarianceKernel {
    fn new(coeffs: Vec<f64>, grid_size: usize) -> Result<Self> {
        if !is_power_of_two(grid_size) || grid_size < 16 {
            return Err(Error::InvalidKernel(format!(
                "grid_size must be a power of two >= 16, got {grid_size}"
            )));
        }
        if coeffs.is_empty() || coeffs[0] <= 0.0 {
            return Err(Error::InvalidKernel(
                "K̂(0) must be positive (the mean mode must be present: K1 > 0)".into(),
            ));
        }
        if let Some(bad) = coeffs.iter().find(|&&c| !(c >= 0.0)) {
            return Err(Error::InvalidKernel(format!(
                "negative or non-finite spectral coefficient {bad}"
            )));
        }
        let m_max = grid_size / 2;
        let mut coeffs = coeffs;
        coeffs.resize(m_max + 1, 0.0);
        let peak = coeffs.iter().cloned().fold(0.0_f64, f64::max);
        Ok(Self {
            sigma0_sq: coeffs[0],
            spectral_floor: SPECTRAL_FLOOR_REL * peak,
            coeffs,
            grid_size,
        })
    }

    /// Periodic Ornstein-Uhlenbeck kernel of mass `m`: K̂(n) = 1/((2πn)² + m²).
    ///
    /// The spectral tail decays like 1/n², so the represented kernel is the
    /// band-limited truncation of the closed form; real-space values agree
    /// with it to O(1/grid_size).
    pub fn make_ou(m: f64, grid_size: usize) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::InvalidKernel(format!("OU mass must be positive, got {m}")));
        }
        let m_max = grid_size / 2;
        let coeffs: Vec<f64> = (0..=m_max)
            .map(|n| {
                let w = 2.0 * std::f64::consts::PI * n as f64;
                1.0 / (w * w + m * m)
            })
            .collect();
        Self::new(coeffs, grid_size)
    }

    /// Kernel with explicitly given nonnegative coefficients K̂(0), K̂(1), ...
    /// Coefficients beyond grid_size/2 are rejected rather than silently dropped.
    pub fn from_coeffs(coeffs: &[f64], grid_size: usize) -> Result<Self> {
        if coeffs.len() > grid_size / 2 + 1 {
            return Err(Error::InvalidKernel(format!(
                "{} coefficients exceed the grid's {} represented modes",
                coeffs.len(),
                grid_size / 2 + 1
            )));
        }
        Self::new(coeffs.to_vec(), grid_size)
    }

    /// Rescale so that K̂(0) = ∫K = 1.
    pub fn normalized(&self) -> Self {
        let scale = 1.0 / self.coeffs[0];
        let coeffs: Vec<f64> = self.coeffs.iter().map(|c| c * scale).collect();
        Self::new(coeffs, self.grid_size).expect("rescaling preserves validity")
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn m_max(&self) -> usize {
        self.grid_size / 2
    }

    /// K̂(n); zero beyond the represented band.
    pub fn coeff(&self, n: usize) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Variance of the mean mode q₀, equals K̂(0) = ∫₀¹K.
    pub fn sigma0_sq(&self) -> f64 {
        self.sigma0_sq
    }

    /// ∫₀¹K(x)dx = K̂(0).
    pub fn integral(&self) -> f64 {
        self.coeffs[0]
    }

    /// K(0) = Σₙ K̂(n) over all represented integer modes.
    pub fn at_zero(&self) -> f64 {
        self.coeffs[0] + 2.0 * self.coeffs[1..].iter().sum::<f64>()
    }

    pub fn spectral_floor(&self) -> f64 {
        self.spectral_floor
    }

    /// Evaluate K at a point; the argument is wrapped into [0,1).
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.rem_euclid(1.0);
        let mut acc = self.coeffs[0];
        for (n, &c) in self.coeffs.iter().enumerate().skip(1) {
            if c == 0.0 {
                continue;
            }
            acc += 2.0 * c * (2.0 * std::f64::consts::PI * n as f64 * x).cos();
        }
        acc
    }

    /// K sampled on the synthesis grid.
    pub fn grid_values(&self) -> Vec<f64> {
        fourier::synthesize(
            &self
                .form_weights()
                .iter()
                .map(|&w| Complex64::new(w, 0.0))
                .collect::<Vec<_>>(),
        )
    }

    /// Grid-spectrum weights for quadratic forms: index n and N-n carry K̂(n);
    /// the Nyquist bin carries 2K̂(N/2) since it represents both ±N/2 modes.
    fn form_weights(&self) -> Vec<f64> {
        let n = self.grid_size;
        let half = n / 2;
        let mut w = vec![0.0; n];
        w[0] = self.coeffs[0];
        for k in 1..half {
            w[k] = self.coeffs[k];
            w[n - k] = self.coeffs[k];
        }
        w[half] = 2.0 * self.coeffs[half];
        w
    }

    /// ⟨f, 𝐊⁻¹g⟩ = Σₙ conj(f̂(n)) ĝ(n) / K̂(n) over represented modes.
    ///
    /// Errors if either path carries energy in a mode at or below the
    /// spectral floor (the path is then outside the Cameron-Martin space).
    pub fn cross_form_inv(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        self.check_grid(f)?;
        self.check_grid(g)?;
        let fh = fourier::coefficients(f);
        let gh = fourier::coefficients(g);
        let weights = self.form_weights();
        let scale = fourier::max_abs(f).max(fourier::max_abs(g)).max(1.0);
        let mut acc = 0.0;
        for ((cf, cg), &w) in fh.iter().zip(&gh).zip(&weights) {
            if w > self.spectral_floor {
                acc += (cf.conj() * cg).re / w;
            } else if cf.norm() > 1e-12 * scale || cg.norm() > 1e-12 * scale {
                return Err(Error::NotInCameronMartin(format!(
                    "energy {:.3e} in a mode with K̂ <= spectral floor {:.3e}",
                    cf.norm().max(cg.norm()),
                    self.spectral_floor
                )));
            }
        }
        Ok(acc)
    }

    /// The Schilder / Cameron-Martin rate functional I(f) = ⟨f, 𝐊⁻¹f⟩.
    pub fn quad_form_inv(&self, f: &[f64]) -> Result<f64> {
        self.cross_form_inv(f, f)
    }

    /// ⟨f, 𝐊f⟩ = Σₙ K̂(n)|f̂(n)|².
    pub fn quad_form(&self, f: &[f64]) -> Result<f64> {
        self.check_grid(f)?;
        let fh = fourier::coefficients(f);
        let weights = self.form_weights();
        Ok(fh
            .iter()
            .zip(&weights)
            .map(|(c, &w)| w * c.norm_sqr())
            .sum())
    }

    /// Convolution 𝐊f: multiply mode n by K̂(n).
    pub fn convolve(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.check_grid(f)?;
        let mut fh = fourier::coefficients(f);
        let n = self.grid_size;
        let half = n / 2;
        for (idx, c) in fh.iter_mut().enumerate() {
            let mode = fourier::signed_frequency(idx, n).unsigned_abs() as usize;
            // the Nyquist multiplier is K̂(N/2) itself, not the doubled form weight
            let mult = if mode == half { self.coeffs[half] } else { self.coeff(mode) };
            *c *= mult;
        }
        Ok(fourier::synthesize(&fh))
    }

    fn check_grid(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.grid_size {
            return Err(Error::InvalidInput(format!(
                "path length {} does not match kernel grid {}",
                f.len(),
                self.grid_size
            )));
        }
        Ok(())
    }
}
