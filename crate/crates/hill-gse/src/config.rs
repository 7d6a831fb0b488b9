//! Run configuration: JSON (de)serialization, defaults, and the content
//! hash embedded in every output header.

use crate::error::{Error, Result};
use crate::kernel::CovarianceKernel;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelSpec {
    /// K̂(n) = 1/((2πn)² + m²), the exponential-covariance family.
    Ou { m: f64 },
    /// Explicit cosine-series coefficients K̂(0), K̂(1), ...
    Coeffs { values: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: KernelSpec,
    pub grid_size: usize,
    pub galerkin_modes: usize,
    pub ode_steps: usize,
    pub seed: u64,
    /// Rescale the kernel to ∫K = 1 before use.
    pub normalize: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::Ou { m: 1.0 },
            grid_size: 512,
            galerkin_modes: 64,
            ode_steps: 4096,
            seed: 42,
            normalize: false,
        }
    }
}

impl RunConfig {
    /// Load from a JSON file, or defaults for the literal path "default".
    pub fn load(path: &str) -> Result<Self> {
        if path == "default" {
            return Ok(Self::default());
        }
        let text = std::fs::read_to_string(Path::new(path))
            .map_err(|e| Error::Config(format!("cannot read config {path}: {e}")))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("bad config {path}: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 8 || !self.grid_size.is_power_of_two() {
            return Err(Error::Config(format!(
                "grid_size {} must be a power of two ≥ 8",
                self.grid_size
            )));
        }
        if self.galerkin_modes == 0 || 2 * self.galerkin_modes > self.grid_size {
            return Err(Error::Config(format!(
                "galerkin_modes {} out of range for grid {}",
                self.galerkin_modes, self.grid_size
            )));
        }
        if self.ode_steps % self.grid_size != 0 {
            return Err(Error::Config(format!(
                "ode_steps {} must be a multiple of grid_size {}",
                self.ode_steps, self.grid_size
            )));
        }
        match &self.kernel {
            KernelSpec::Ou { m } if *m <= 0.0 => {
                Err(Error::Config(format!("OU parameter m = {m} must be > 0")))
            }
            KernelSpec::Coeffs { values } if values.is_empty() => {
                Err(Error::Config("coeffs kernel needs at least K̂(0)".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn build_kernel(&self) -> Result<CovarianceKernel> {
        let kernel = match &self.kernel {
            KernelSpec::Ou { m } => CovarianceKernel::make_ou(*m, self.grid_size)?,
            KernelSpec::Coeffs { values } => {
                CovarianceKernel::from_coeffs(values, self.grid_size)?
            }
        };
        Ok(if self.normalize {
            kernel.normalized()
        } else {
            kernel
        })
    }

    /// Canonical single-line JSON form, embedded in output headers.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Short content hash of the canonical form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        hex[..16].to_string()
    }
}
