//! Riccati correspondence p = ψ′/ψ for Hill's operator: the functional
//! Φ(q̃) = ∫p̃², its Floquet extension Φ_s, and the Jacobian J(s, q̃) of the
//! change of variables (q₀, q̃) ↦ (s, q̃) at fixed λ.
//!
//! With q = q₀ + q̃ and Qψ = λψ for the positive Floquet solution with
//! multiplier e^s, the mean part of q = λ + p′ + p² reads
//! q₀ = λ + s² + Φ_s(q̃), while the mean-zero part determines p̃ from
//! (q̃, s) alone. Equivalently Φ_s(q̃) = -λ̃(s) - s², where λ̃(s) is the
//! eigenvalue of the mean-zero potential q̃ at multiplier e^s; this identity
//! is exact in the discretization and is the shipped value, with the
//! quadrature of p̃² kept as an internal cross-check.

use crate::error::{Error, Result};
use crate::fourier;
use crate::hill::{self, FinePotential};

/// Log-derivative data of the positive (Floquet) ground solution.
#[derive(Debug, Clone)]
pub struct RiccatiData {
    /// p = ψ′/ψ on a uniform grid (the ODE grid for Floquet solves).
    pub p: Vec<f64>,
    /// Log-multiplier s = ∫p.
    pub s: f64,
    /// Mean-zero part p̃ = p - s.
    pub p_tilde: Vec<f64>,
    /// Φ_s = ∫p̃²; equals -Λ₀(q̃) at s = 0.
    pub phi: f64,
    /// Eigenvalue λ̃(s) of -d²/dx² + q̃ for the multiplier e^s.
    pub lambda: f64,
}

fn require_mean_zero(q_tilde: &[f64]) -> Result<()> {
    let m = fourier::mean(q_tilde).abs();
    if m > 1e-10 * (1.0 + fourier::max_abs(q_tilde)) {
        return Err(Error::InvalidInput(format!(
            "potential path is not mean-zero (mean = {m:e})"
        )));
    }
    Ok(())
}

/// Φ(q̃) = ∫p̃² = -Λ₀(q̃) via the Galerkin ground state, with p built by
/// spectral differentiation of ψ and the identity asserted internally.
pub fn phi(q_tilde: &[f64], modes: usize) -> Result<RiccatiData> {
    require_mean_zero(q_tilde)?;
    let gs = hill::ground_state_galerkin(q_tilde, modes)?;
    let dpsi = fourier::derivative(&gs.psi, 1);
    let p: Vec<f64> = gs
        .psi
        .iter()
        .zip(&dpsi)
        .map(|(psi, d)| d / psi)
        .collect();
    let s = fourier::mean(&p);
    let scale = 1.0 + fourier::max_abs(q_tilde);
    if s.abs() > 1e-9 * scale {
        return Err(Error::Positivity(format!(
            "periodic ground state has nonzero log-multiplier {s:e}"
        )));
    }
    let p_tilde: Vec<f64> = p.iter().map(|v| v - s).collect();
    let quad_phi = fourier::l2_norm(&p_tilde).powi(2);
    let phi = -gs.lambda0;
    if (quad_phi - phi).abs() > 1e-8 * scale {
        return Err(Error::EigenSolve(format!(
            "Riccati identity violated: ∫p̃² = {quad_phi:e} vs -λ̃ = {phi:e}"
        )));
    }
    Ok(RiccatiData {
        p,
        s,
        p_tilde,
        phi,
        lambda: gs.lambda0,
    })
}

/// Floquet solve at log-multiplier s ≥ 0 on a pre-refined potential;
/// `hint` warm-starts the eigenvalue bracket.
pub fn floquet_solve_fine(
    fine: &FinePotential,
    s: f64,
    hint: Option<f64>,
) -> Result<RiccatiData> {
    if s < 0.0 {
        return Err(Error::InvalidInput(format!("log-multiplier s = {s} < 0")));
    }
    let lambda = hill::lambda_for_multiplier(fine, s, hint)?;
    let p = hill::floquet_log_derivative(fine, lambda, s)?;
    let p_mean = fourier::mean(&p);
    let scale = 1.0 + fine.sup_norm() + s * s;
    if (p_mean - s).abs() > 1e-8 * scale {
        return Err(Error::EigenSolve(format!(
            "∫p = {p_mean} disagrees with requested multiplier log {s}"
        )));
    }
    let p_tilde: Vec<f64> = p.iter().map(|v| v - p_mean).collect();
    let phi = -lambda - s * s;
    let quad_phi = fourier::l2_norm(&p_tilde).powi(2);
    if (quad_phi - phi).abs() > 1e-7 * scale {
        return Err(Error::EigenSolve(format!(
            "Floquet Riccati identity violated: ∫p̃² = {quad_phi:e} vs -λ̃-s² = {phi:e}"
        )));
    }
    Ok(RiccatiData {
        p,
        s,
        p_tilde,
        phi,
        lambda,
    })
}

/// Floquet solve at log-multiplier s for a mean-zero grid potential.
pub fn floquet_solve(q_tilde: &[f64], s: f64, n_ode: usize) -> Result<RiccatiData> {
    require_mean_zero(q_tilde)?;
    let fine = FinePotential::new(q_tilde, n_ode)?;
    floquet_solve_fine(&fine, s, None)
}

/// Jacobian J(s, q̃) = ∂q₀/∂s of the change of variables at fixed (λ, q̃).
///
/// With F(x) = s·x + ∫₀ˣp̃,
///   J⁻¹ = e^{-2s}/(1-e^{-2s}) · (∫₀¹e^{2F})(∫₀¹e^{-2F})
///         + ∫₀¹∫₀ˣ e^{2F(y)-2F(x)} dy dx,
/// evaluated by trapezoid quadrature on cumulative integrals. For p̃ ≡ 0
/// this reduces to J = 2s, matching q₀ = λ + s² there.
pub fn jacobian(data: &RiccatiData) -> Result<f64> {
    let s = data.s;
    if s <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "Jacobian requires s > 0, got {s}"
        )));
    }
    let n = data.p_tilde.len();
    let h = 1.0 / n as f64;
    let a = fourier::antiderivative(&data.p_tilde);
    // F on the closed grid 0..=n, F(1) = s
    let f_of = |j: usize| -> f64 {
        if j == n {
            s
        } else {
            s * (j as f64) * h + a[j]
        }
    };
    // trapezoid weights: interior 1, endpoints 1/2
    let mut int_plus = 0.0;
    let mut int_minus = 0.0;
    // cumulative ∫₀ˣ e^{2F} at the nodes, and ∫ e^{-2F(x)}·C(x) dx
    let mut cumulative = 0.0;
    let mut double_integral = 0.0;
    let mut prev_plus = (2.0 * f_of(0)).exp();
    let mut prev_minus = (-2.0 * f_of(0)).exp();
    let mut prev_outer = prev_minus * cumulative;
    for j in 1..=n {
        let fp = (2.0 * f_of(j)).exp();
        let fm = (-2.0 * f_of(j)).exp();
        int_plus += 0.5 * h * (prev_plus + fp);
        int_minus += 0.5 * h * (prev_minus + fm);
        cumulative += 0.5 * h * (prev_plus + fp);
        let outer = fm * cumulative;
        double_integral += 0.5 * h * (prev_outer + outer);
        prev_plus = fp;
        prev_minus = fm;
        prev_outer = outer;
    }
    let e2s = (-2.0 * s).exp();
    let inv_j = e2s / (1.0 - e2s) * int_plus * int_minus + double_integral;
    if !(inv_j.is_finite() && inv_j > 0.0) {
        return Err(Error::Positivity(format!(
            "Jacobian not positive: J⁻¹ = {inv_j:e} at s = {s}"
        )));
    }
    Ok(1.0 / inv_j)
}

/// Jacobian for a mean-zero grid potential at log-multiplier s > 0.
pub fn jacobian_j(q_tilde: &[f64], s: f64, n_ode: usize) -> Result<f64> {
    jacobian(&floquet_solve(q_tilde, s, n_ode)?)
}

/// Verifies that the map (q₀, q̃, s) ↦ (λ, q̃, s) has Jacobian one:
/// q₀(λ) = λ + s² + Φ_s(q̃) is affine in λ with slope 1. Returns the
/// finite-difference slope at step h.
pub fn check_lemma21(q_tilde: &[f64], s: f64, lambda: f64, h: f64, n_ode: usize) -> Result<f64> {
    let data = floquet_solve(q_tilde, s, n_ode)?;
    let q0_at = |lam: f64| lam + s * s + data.phi;
    Ok((q0_at(lambda + h) - q0_at(lambda)) / h)
}
