//! Monte Carlo estimators for the law of the ground state energy.
//!
//! The density route evaluates f(λ) = E[exp(-(λ+Φ(q̃))²/(2σ₀²))]/√(2πσ₀²)
//! with σ₀² = K̂(0), reusing one Φ evaluation per sample across the whole λ
//! grid. Cross-checks: a direct kernel-density estimate of sampled
//! eigenvalues, and the distribution identity
//! P(Λ₀ > λ) = E∫₀^∞ e^{-(λ+Φ_s+s²)²/(2σ₀²)} J(s,q̃)/√(2πσ₀²) ds.
//!
//! All estimators partition samples deterministically by index, so results
//! are bit-identical for a fixed seed regardless of worker count.

use crate::error::{Error, Result};
use crate::hill::{self, FinePotential};
use crate::kernel::CovarianceKernel;
use crate::riccati;
use crate::sampler::{self, TiltSpec};
use rayon::prelude::*;

/// Solver resolution and seeding shared by the estimators.
#[derive(Debug, Clone, Copy)]
pub struct McSettings {
    pub modes: usize,
    pub n_ode: usize,
    pub seed: u64,
}

impl McSettings {
    pub fn new(seed: u64) -> Self {
        Self {
            modes: 64,
            n_ode: 4096,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DensityEstimate {
    pub lambdas: Vec<f64>,
    pub f_hat: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_samples: usize,
    pub n_failed: usize,
    pub seed: u64,
    pub tilt_used: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone)]
pub struct TailFit {
    pub side: Side,
    pub rate_hat: f64,
    pub window: (f64, f64),
    pub target: f64,
    pub n_points: usize,
}

const MAX_FAIL_FRACTION: f64 = 1e-3;

fn check_failures(n_failed: usize, n: usize) -> Result<()> {
    if n_failed as f64 > MAX_FAIL_FRACTION * n as f64 {
        return Err(Error::EigenSolve(format!(
            "{n_failed} of {n} eigensolves failed (> {:.1}%)",
            100.0 * MAX_FAIL_FRACTION
        )));
    }
    Ok(())
}

/// Per-sample (Φ(q̃ᵢ), wᵢ) pairs, one Φ eigensolve each; order is by sample
/// index independent of the thread pool.
pub fn phi_samples(
    kernel: &CovarianceKernel,
    n_samples: usize,
    tilt: Option<&TiltSpec>,
    settings: &McSettings,
) -> Result<(Vec<(f64, f64)>, usize)> {
    let modes = settings.modes.min(kernel.grid_size() / 2);
    let raw: Vec<Option<(f64, f64)>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampler::stream_rng(settings.seed, i);
            let (tilde, log_w) = match tilt {
                Some(t) => match sampler::sample_tilted(kernel, t, &mut rng) {
                    Ok(s) => (s.tilde_values, s.log_weight),
                    Err(_) => return None,
                },
                None => (sampler::sample(kernel, &mut rng).tilde_values, 0.0),
            };
            riccati::phi(&tilde, modes)
                .ok()
                .map(|d| (d.phi, log_w.exp()))
        })
        .collect();
    let n_failed = raw.iter().filter(|r| r.is_none()).count();
    check_failures(n_failed, n_samples)?;
    Ok((raw.into_iter().flatten().collect(), n_failed))
}

fn weighted_mean_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let mut n = 0usize;
    let mut acc = 0.0;
    for v in values.clone() {
        n += 1;
        acc += v;
    }
    let mean = acc / n as f64;
    let var: f64 = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Density of Λ₀ on a λ grid via the exact Gaussian-functional formula.
pub fn estimate_density(
    kernel: &CovarianceKernel,
    lambdas: &[f64],
    n_samples: usize,
    tilt: Option<&TiltSpec>,
    settings: &McSettings,
) -> Result<DensityEstimate> {
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be ≥ 1".into()));
    }
    let (phis, n_failed) = phi_samples(kernel, n_samples, tilt, settings)?;
    let sigma_sq = kernel.sigma0_sq();
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma_sq).sqrt();
    let mut f_hat = Vec::with_capacity(lambdas.len());
    let mut stderr = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let (m, se) = weighted_mean_stderr(
            phis.iter()
                .map(|&(phi, w)| w * norm * (-(lam + phi).powi(2) / (2.0 * sigma_sq)).exp()),
        );
        f_hat.push(m);
        stderr.push(se);
    }
    Ok(DensityEstimate {
        lambdas: lambdas.to_vec(),
        f_hat,
        stderr,
        n_samples,
        n_failed,
        seed: settings.seed,
        tilt_used: tilt.is_some(),
    })
}

/// Derivative f′(λ) by differentiating the Gaussian factor under the mean.
pub fn estimate_density_derivative(
    kernel: &CovarianceKernel,
    lambdas: &[f64],
    n_samples: usize,
    tilt: Option<&TiltSpec>,
    settings: &McSettings,
) -> Result<DensityEstimate> {
    let (phis, n_failed) = phi_samples(kernel, n_samples, tilt, settings)?;
    let sigma_sq = kernel.sigma0_sq();
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma_sq).sqrt();
    let mut f_hat = Vec::with_capacity(lambdas.len());
    let mut stderr = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let (m, se) = weighted_mean_stderr(phis.iter().map(|&(phi, w)| {
            let z = lam + phi;
            -w * norm * z / sigma_sq * (-z * z / (2.0 * sigma_sq)).exp()
        }));
        f_hat.push(m);
        stderr.push(se);
    }
    Ok(DensityEstimate {
        lambdas: lambdas.to_vec(),
        f_hat,
        stderr,
        n_samples,
        n_failed,
        seed: settings.seed,
        tilt_used: tilt.is_some(),
    })
}

/// Sampled eigenvalues Λ₀(qᵢ), the direct route.
pub fn sample_eigenvalues(
    kernel: &CovarianceKernel,
    n_samples: usize,
    settings: &McSettings,
) -> Result<Vec<f64>> {
    let modes = settings.modes.min(kernel.grid_size() / 2);
    let raw: Vec<Option<f64>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let s = sampler::sample(kernel, &mut sampler::stream_rng(settings.seed, i));
            hill::ground_state_galerkin(&s.values, modes)
                .ok()
                .map(|gs| gs.lambda0)
        })
        .collect();
    let n_failed = raw.iter().filter(|r| r.is_none()).count();
    check_failures(n_failed, n_samples)?;
    Ok(raw.into_iter().flatten().collect())
}

/// Gaussian kernel-density estimate of the Λ₀ law from direct sampling.
pub fn estimate_density_direct(
    kernel: &CovarianceKernel,
    lambdas: &[f64],
    n_samples: usize,
    bandwidth: f64,
    settings: &McSettings,
) -> Result<DensityEstimate> {
    if bandwidth <= 0.0 {
        return Err(Error::InvalidInput(format!("bandwidth {bandwidth} ≤ 0")));
    }
    let eigs = sample_eigenvalues(kernel, n_samples, settings)?;
    let norm = 1.0 / (bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let mut f_hat = Vec::with_capacity(lambdas.len());
    let mut stderr = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        let (m, se) = weighted_mean_stderr(
            eigs.iter()
                .map(|&e| norm * (-((lam - e) / bandwidth).powi(2) / 2.0).exp()),
        );
        f_hat.push(m);
        stderr.push(se);
    }
    Ok(DensityEstimate {
        lambdas: lambdas.to_vec(),
        f_hat,
        stderr,
        n_samples,
        n_failed: n_samples - eigs.len(),
        seed: settings.seed,
        tilt_used: false,
    })
}

/// Direct Monte Carlo estimate of P(Λ₀ > λ) with its standard error.
pub fn estimate_distribution_direct(
    kernel: &CovarianceKernel,
    lambda: f64,
    n_samples: usize,
    settings: &McSettings,
) -> Result<(f64, f64)> {
    let eigs = sample_eigenvalues(kernel, n_samples, settings)?;
    let hits = eigs.iter().filter(|&&e| e > lambda).count() as f64;
    let n = eigs.len() as f64;
    let p = hits / n;
    Ok((p, (p * (1.0 - p) / n).sqrt()))
}

/// Inner s-integral of the distribution identity for one sample, by
/// composite Simpson with λ̃(s) root-finds warm-started left to right.
fn thm23_inner_integral(
    fine: &FinePotential,
    lambda: f64,
    sigma_sq: f64,
    s_max: f64,
    panels: usize,
) -> Result<f64> {
    let norm = 1.0 / (2.0 * std::f64::consts::PI * sigma_sq).sqrt();
    let n_nodes = 2 * panels + 1;
    let h = s_max / (n_nodes - 1) as f64;
    let mut g = vec![0.0; n_nodes];
    let mut hint = None;
    for (j, slot) in g.iter_mut().enumerate().skip(1) {
        let s = j as f64 * h;
        let data = riccati::floquet_solve_fine(fine, s, hint)?;
        let jac = riccati::jacobian(&data)?;
        // predict the next eigenvalue along dλ̃/ds = -J to warm the bracket
        hint = Some(data.lambda - jac * h);
        let z = lambda + data.phi + s * s;
        *slot = norm * (-z * z / (2.0 * sigma_sq)).exp() * jac;
    }
    // composite Simpson over the 2·panels+1 nodes, with the coarse
    // (every-other-node) value as a convergence gauge
    let simpson = |stride: usize| -> f64 {
        let mut acc = g[0] + g[n_nodes - 1];
        let mut j = stride;
        let mut odd = true;
        while j < n_nodes - 1 {
            acc += if odd { 4.0 } else { 2.0 } * g[j];
            odd = !odd;
            j += stride;
        }
        acc * (stride as f64 * h) / 3.0
    };
    let fine_val = simpson(1);
    let coarse_val = simpson(2);
    if (fine_val - coarse_val).abs() > 1e-3 * (1.0 + fine_val.abs()) {
        return Err(Error::Quadrature(format!(
            "s-integral not converged: {fine_val:e} vs {coarse_val:e} at {panels} panels"
        )));
    }
    Ok(fine_val)
}

fn thm23_sample_integral(
    fine: &FinePotential,
    lambda: f64,
    sigma_sq: f64,
    s_max: f64,
    panels: usize,
) -> Result<f64> {
    match thm23_inner_integral(fine, lambda, sigma_sq, s_max, panels) {
        Err(Error::Quadrature(_)) => thm23_inner_integral(fine, lambda, sigma_sq, s_max, 2 * panels),
        other => other,
    }
}

/// P(Λ₀ > λ) through the Riccati change of variables (distribution route).
pub fn estimate_distribution_thm23(
    kernel: &CovarianceKernel,
    lambda: f64,
    n_samples: usize,
    settings: &McSettings,
) -> Result<(f64, f64)> {
    let sigma_sq = kernel.sigma0_sq();
    // the integrand is ≤ e^{-z²/2σ²}·J with z = λ+Φ_s+s² ≥ λ+s², so mass
    // beyond s² = -λ + 5σ is below e^{-12.5}·J: integrate only up to there
    let s_max = ((-lambda).max(0.0) + 5.0 * sigma_sq.sqrt()).sqrt();
    // resolve the integrand peak, whose width in s is about σ/(2s)
    let peak_width = sigma_sq.sqrt() / (2.0 * s_max.max(1.0));
    let h_target = (peak_width / 3.0).min(0.15);
    let panels = (s_max / (2.0 * h_target)).ceil() as usize;
    let raw: Vec<Result<f64>> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let s = sampler::sample(kernel, &mut sampler::stream_rng(settings.seed, i));
            let fine = FinePotential::new(&s.tilde_values, settings.n_ode)?;
            thm23_sample_integral(&fine, lambda, sigma_sq, s_max, panels)
        })
        .collect();
    let n_failed = raw.iter().filter(|r| r.is_err()).count();
    check_failures(n_failed, n_samples)?;
    let vals: Vec<f64> = raw.into_iter().flatten().collect();
    let (m, se) = weighted_mean_stderr(vals.iter().cloned());
    Ok((m, se))
}

/// Least-squares fit of log f̂(λ) = c - r·λ² over a window, reporting the
/// fitted r and the analytic tail-rate target for this kernel and side.
pub fn fit_tail_rate(
    estimate: &DensityEstimate,
    kernel: &CovarianceKernel,
    side: Side,
    window: (f64, f64),
) -> Result<TailFit> {
    let (lo, hi) = window;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for ((&lam, &f), &se) in estimate
        .lambdas
        .iter()
        .zip(&estimate.f_hat)
        .zip(&estimate.stderr)
    {
        if lam >= lo && lam <= hi {
            if f <= 3.0 * se || f <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "estimate at λ = {lam} not informative (f̂ = {f:e}, se = {se:e})"
                )));
            }
            xs.push(lam * lam);
            ys.push(f.ln());
        }
    }
    if xs.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "tail window [{lo}, {hi}] holds only {} grid points (need ≥ 4)",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let rate_hat = -sxy / sxx;
    let target = match side {
        Side::Right => 1.0 / (2.0 * kernel.integral()),
        Side::Left => 1.0 / (2.0 * kernel.at_zero()),
    };
    Ok(TailFit {
        side,
        rate_hat,
        window,
        target,
        n_points: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_normal(x: f64) -> f64 {
        (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    fn constant_kernel() -> CovarianceKernel {
        CovarianceKernel::from_coeffs(&[1.0], 64).unwrap()
    }

    fn ou1(n: usize) -> CovarianceKernel {
        CovarianceKernel::make_ou(1.0, n).unwrap()
    }

    fn fast_settings(seed: u64) -> McSettings {
        McSettings {
            modes: 48,
            n_ode: 1024,
            seed,
        }
    }

    #[test]
    fn constant_kernel_density_is_standard_normal() {
        let lambdas: Vec<f64> = (-4..=4).map(|k| k as f64).collect();
        let est = estimate_density(&constant_kernel(), &lambdas, 50, None, &McSettings::new(1))
            .unwrap();
        for ((&lam, &f), &se) in est.lambdas.iter().zip(&est.f_hat).zip(&est.stderr) {
            assert!((f - std_normal(lam)).abs() < 1e-12, "λ={lam}: {f}");
            assert!(se < 1e-12); // Φ ≡ 0, zero Monte Carlo variance
        }
    }

    #[test]
    fn constant_kernel_derivative_is_exact() {
        let lambdas = [-2.0, -0.5, 0.0, 1.5];
        let est = estimate_density_derivative(
            &constant_kernel(),
            &lambdas,
            20,
            None,
            &McSettings::new(2),
        )
        .unwrap();
        for (&lam, &d) in est.lambdas.iter().zip(&est.f_hat) {
            assert!((d - (-lam * std_normal(lam))).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_matches_finite_difference_of_density() {
        let kernel = ou1(256);
        let settings = fast_settings(31);
        let h = 0.01;
        let lambdas = [-1.0, 0.0, 1.0];
        let shifted: Vec<f64> = lambdas
            .iter()
            .flat_map(|&l| [l - h, l, l + h])
            .collect();
        let est = estimate_density(&kernel, &shifted, 2000, None, &settings).unwrap();
        let der = estimate_density_derivative(&kernel, &lambdas, 2000, None, &settings).unwrap();
        for (k, &d) in der.f_hat.iter().enumerate() {
            let fd = (est.f_hat[3 * k + 2] - est.f_hat[3 * k]) / (2.0 * h);
            // same sample set: agreement is quadrature-level, not statistical
            assert!((d - fd).abs() < 1e-3 * d.abs().max(1e-3), "{d} vs {fd}");
        }
    }

    #[test]
    fn density_is_positive_everywhere() {
        let kernel = ou1(256);
        let lambdas: Vec<f64> = (-6..=6).map(|k| k as f64 * 0.75).collect();
        let est = estimate_density(&kernel, &lambdas, 500, None, &fast_settings(7)).unwrap();
        assert!(est.f_hat.iter().all(|&f| f > 0.0));
    }

    #[test]
    fn direct_kde_integrates_to_one() {
        let kernel = ou1(256);
        let lambdas: Vec<f64> = (-120..=60).map(|k| k as f64 * 0.1).collect();
        let est =
            estimate_density_direct(&kernel, &lambdas, 2000, 0.25, &fast_settings(9)).unwrap();
        let mass: f64 = est.f_hat.iter().sum::<f64>() * 0.1;
        assert!((mass - 1.0).abs() < 0.01, "mass {mass}");
    }

    #[test]
    fn formula_and_direct_density_agree_at_zero() {
        let kernel = ou1(256);
        let settings = fast_settings(13);
        let n = 4000;
        let formula = estimate_density(&kernel, &[0.0], n, None, &settings).unwrap();
        let direct = estimate_density_direct(&kernel, &[0.0], n, 0.15, &settings).unwrap();
        let tol = 3.0 * (formula.stderr[0].powi(2) + direct.stderr[0].powi(2)).sqrt() + 0.01;
        assert!(
            (formula.f_hat[0] - direct.f_hat[0]).abs() < tol,
            "{} vs {}",
            formula.f_hat[0],
            direct.f_hat[0]
        );
    }

    #[test]
    fn constant_kernel_distribution_at_zero_is_half() {
        let (p, se) = estimate_distribution_thm23(
            &constant_kernel(),
            0.0,
            400,
            &McSettings {
                modes: 16,
                n_ode: 512,
                seed: 17,
            },
        )
        .unwrap();
        // Λ₀ = q₀ ~ N(0,1): exactly 1/2, and the s-integral is deterministic
        assert!((p - 0.5).abs() < 3.0 * se + 1e-3, "p {p} se {se}");
    }

    #[test]
    fn thm23_matches_direct_distribution() {
        let kernel = ou1(256);
        let settings = McSettings {
            modes: 48,
            n_ode: 512,
            seed: 19,
        };
        let n = 300;
        let lam = 0.5;
        let (p_thm, se_thm) = estimate_distribution_thm23(&kernel, lam, n, &settings).unwrap();
        let (p_dir, se_dir) = estimate_distribution_direct(&kernel, lam, 4000, &settings).unwrap();
        let tol = 3.0 * (se_thm * se_thm + se_dir * se_dir).sqrt() + 2e-3;
        assert!((p_thm - p_dir).abs() < tol, "{p_thm} vs {p_dir} (tol {tol})");
    }

    #[test]
    fn distribution_tends_to_one_for_deep_levels() {
        let kernel = ou1(256);
        let (p, _) = estimate_distribution_thm23(
            &kernel,
            -8.0,
            50,
            &McSettings {
                modes: 48,
                n_ode: 512,
                seed: 23,
            },
        )
        .unwrap();
        assert!(p >= 1.0 - 1e-3, "p {p}");
    }

    #[test]
    fn tail_fit_recovers_gaussian_rate() {
        let lambdas: Vec<f64> = (6..=12).map(|k| k as f64 * 0.5).collect();
        let est = estimate_density(&constant_kernel(), &lambdas, 50, None, &McSettings::new(3))
            .unwrap();
        let fit = fit_tail_rate(&est, &constant_kernel(), Side::Right, (3.0, 6.0)).unwrap();
        assert!((fit.rate_hat - 0.5).abs() < 0.02, "{}", fit.rate_hat);
        assert!((fit.target - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tail_fit_rejects_narrow_or_noisy_windows() {
        let lambdas = vec![3.0, 4.0, 5.0];
        let est = estimate_density(&constant_kernel(), &lambdas, 10, None, &McSettings::new(4))
            .unwrap();
        assert!(fit_tail_rate(&est, &constant_kernel(), Side::Right, (3.0, 5.0)).is_err());
    }

    #[test]
    fn left_target_uses_kernel_at_zero() {
        let kernel = ou1(256);
        let lambdas: Vec<f64> = (0..8).map(|k| -1.0 - 0.5 * k as f64).collect();
        let tilt = sampler::make_tilt_toward_optimal(&kernel, -2.5).unwrap();
        let est =
            estimate_density(&kernel, &lambdas, 3000, Some(&tilt), &fast_settings(29)).unwrap();
        let fit = fit_tail_rate(&est, &kernel, Side::Left, (-5.0, -1.0)).unwrap();
        let expect = 1.0 / (2.0 * kernel.at_zero());
        assert!((fit.target - expect).abs() < 1e-12);
        assert!(fit.rate_hat > 0.2 && fit.rate_hat < 0.8, "{}", fit.rate_hat);
    }

    #[test]
    fn estimates_are_thread_count_invariant() {
        let kernel = ou1(256);
        let settings = fast_settings(37);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                estimate_density(&kernel, &[-1.0, 0.0, 1.0], 200, None, &settings).unwrap()
            })
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.f_hat, b.f_hat);
        assert_eq!(a.stderr, b.stderr);
    }
}
