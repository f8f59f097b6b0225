//! Warden-side covertness analysis.
//!
//! The warden runs an energy detector with threshold `ζ` against its received
//! average power, under bounded noise uncertainty (log-uniform noise power on
//! `[σ̃²/ρ, ρσ̃²]`). This module provides the detection error probability in
//! closed form, the warden's optimal threshold, the resulting minimum DEP,
//! the leakage budget induced by a covertness level `ς`, the covertness
//! constraint check, and a Monte-Carlo estimator validating all closed forms.
//!
//! Probabilities are clamped to `[0, 1]` after floating-point evaluation.
//! `ρ = 1` (noise known exactly) makes the closed forms undefined and is
//! reported as a domain error.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::NoiseUncertainty;
use crate::error::{Error, Result};
use crate::{CMatrix, CVector};

/// Scenario parameters for the covertness analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovertnessParams {
    /// Noise uncertainty coefficient `ρ >= 1`.
    pub rho: f64,
    /// Nominal warden noise power `σ̃_w²`, watts.
    pub sigma_w2_nominal: f64,
    /// Covertness level `ς ∈ [0, 0.5)`.
    pub varsigma: f64,
    /// BS transmit power, watts.
    pub p_bs: f64,
}

impl CovertnessParams {
    pub fn new(rho: f64, sigma_w2_nominal: f64, varsigma: f64, p_bs: f64) -> Result<Self> {
        if rho < 1.0 {
            return Err(Error::invalid("rho must be >= 1"));
        }
        if sigma_w2_nominal <= 0.0 {
            return Err(Error::invalid("nominal warden noise power must be positive"));
        }
        if !(0.0..0.5).contains(&varsigma) {
            return Err(Error::invalid("covertness level must lie in [0, 0.5)"));
        }
        if p_bs < 0.0 {
            return Err(Error::invalid("transmit power must be nonnegative"));
        }
        Ok(Self {
            rho,
            sigma_w2_nominal,
            varsigma,
            p_bs,
        })
    }

    /// Support of the warden noise power, `[σ̃²/ρ, ρσ̃²]`.
    pub fn noise_support(&self) -> (f64, f64) {
        (
            self.sigma_w2_nominal / self.rho,
            self.rho * self.sigma_w2_nominal,
        )
    }

    fn require_uncertainty(&self) -> Result<()> {
        if self.rho <= 1.0 {
            return Err(Error::Domain(
                "rho = 1 leaves the warden's noise known exactly; detection is deterministic"
                    .into(),
            ));
        }
        Ok(())
    }

    fn noise_model(&self, sigma_k2: f64) -> NoiseUncertainty {
        NoiseUncertainty {
            sigma_w2_nominal: self.sigma_w2_nominal,
            rho: self.rho,
            sigma_k2,
        }
    }
}

/// Outcome of the covertness evaluation for one design point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovertnessReport {
    /// Leaked power at the warden, watts.
    pub aleph: f64,
    /// Warden's optimal detection threshold, watts.
    pub zeta_star: f64,
    /// Minimum detection error probability at the optimal threshold.
    pub p_dep_min: f64,
    /// Maximum permitted leakage power, watts.
    pub p_leak: f64,
    /// Whether the covertness constraint `ℵ < P_leak` holds.
    pub feasible: bool,
    /// Slack `P_leak - ℵ`, watts (negative when infeasible).
    pub margin: f64,
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// Average covert signal power reaching the warden:
/// `ℵ = P_bs ||H_br^H Θ g_rw||²`.
pub fn willie_leak_power(
    h_br: &CMatrix,
    theta: &[f64],
    g_rw: &CVector,
    p_bs: f64,
) -> Result<f64> {
    if p_bs < 0.0 {
        return Err(Error::invalid("transmit power must be nonnegative"));
    }
    let cascaded = crate::channel::cascaded_channel(h_br, theta, g_rw)?;
    Ok(p_bs * cascaded.norm_squared())
}

/// False-alarm probability `Pr(σ_w² > ζ)` in closed form.
pub fn fap_closed_form(zeta: f64, params: &CovertnessParams) -> Result<f64> {
    params.require_uncertainty()?;
    let nu = params.noise_model(1.0);
    Ok(clamp_prob(1.0 - nu.cdf(zeta)))
}

/// Missed-detection probability `Pr(ℵ + σ_w² < ζ)` in closed form.
pub fn mdp_closed_form(zeta: f64, aleph: f64, params: &CovertnessParams) -> Result<f64> {
    params.require_uncertainty()?;
    if aleph < 0.0 {
        return Err(Error::invalid("leaked power must be nonnegative"));
    }
    let nu = params.noise_model(1.0);
    Ok(clamp_prob(nu.cdf(zeta - aleph)))
}

/// Total detection error probability in closed form:
///
/// `P_DEP = 1 - (1/(2 ln ρ)) { ln[min(ζ, ρσ̃²)] - ln[max(ζ - ℵ, σ̃²/ρ)] }`,
///
/// with an empty integration interval yielding 1.
pub fn dep_closed_form(zeta: f64, aleph: f64, params: &CovertnessParams) -> Result<f64> {
    params.require_uncertainty()?;
    if zeta <= 0.0 {
        return Err(Error::invalid("detection threshold must be positive"));
    }
    if aleph < 0.0 {
        return Err(Error::invalid("leaked power must be nonnegative"));
    }
    let (lo, hi) = params.noise_support();
    let upper = zeta.min(hi);
    let lower = (zeta - aleph).max(lo);
    if upper <= lower {
        return Ok(1.0);
    }
    let p = 1.0 - (upper.ln() - lower.ln()) / (2.0 * params.rho.ln());
    Ok(clamp_prob(p))
}

/// Warden's optimal detection threshold `ζ* = min(σ̃²/ρ + ℵ, ρσ̃²)`.
pub fn optimal_threshold(aleph: f64, params: &CovertnessParams) -> Result<f64> {
    params.require_uncertainty()?;
    if aleph < 0.0 {
        return Err(Error::invalid("leaked power must be nonnegative"));
    }
    let (lo, hi) = params.noise_support();
    Ok((lo + aleph).min(hi))
}

/// Minimum DEP, attained at the optimal threshold:
/// `1 - ln(1 + ρℵ/σ̃²)/(2 ln ρ)` while `ℵ < σ̃²(ρ - 1/ρ)`, zero beyond.
pub fn min_dep(aleph: f64, params: &CovertnessParams) -> Result<f64> {
    params.require_uncertainty()?;
    if aleph < 0.0 {
        return Err(Error::invalid("leaked power must be nonnegative"));
    }
    let s = params.sigma_w2_nominal;
    let rho = params.rho;
    if aleph >= s * (rho - 1.0 / rho) {
        return Ok(0.0);
    }
    let p = 1.0 - (1.0 + rho * aleph / s).ln() / (2.0 * rho.ln());
    Ok(clamp_prob(p))
}

/// Maximum permitted leakage power under covertness level `ς`:
/// `P_leak = min{ σ̃²(ρ - 1/ρ), (ρ^{2ς} - 1) σ̃²/ρ }`.
///
/// A nonpositive `ς` collapses the budget to zero (logged as a warning).
pub fn leakage_budget(params: &CovertnessParams) -> Result<f64> {
    params.require_uncertainty()?;
    if params.varsigma <= 0.0 {
        log::warn!("covertness level <= 0 leaves no leakage budget");
        return Ok(0.0);
    }
    let s = params.sigma_w2_nominal;
    let rho = params.rho;
    let hard = s * (rho - 1.0 / rho);
    let covert = (rho.powf(2.0 * params.varsigma) - 1.0) * s / rho;
    Ok(hard.min(covert))
}

/// Check the covertness constraint `ℵ < P_leak` for a concrete design.
pub fn covertness_satisfied(
    h_br: &CMatrix,
    theta: &[f64],
    g_rw: &CVector,
    params: &CovertnessParams,
) -> Result<CovertnessReport> {
    let aleph = willie_leak_power(h_br, theta, g_rw, params.p_bs)?;
    report_for_leakage(aleph, params)
}

/// Covertness report for an already-computed leaked power.
pub fn report_for_leakage(aleph: f64, params: &CovertnessParams) -> Result<CovertnessReport> {
    let p_leak = leakage_budget(params)?;
    Ok(CovertnessReport {
        aleph,
        zeta_star: optimal_threshold(aleph, params)?,
        p_dep_min: min_dep(aleph, params)?,
        p_leak,
        feasible: aleph < p_leak,
        margin: p_leak - aleph,
    })
}

/// Monte-Carlo estimates of the detection error probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepEstimate {
    pub p_fap: f64,
    pub p_mdp: f64,
    pub p_dep: f64,
    pub n_trials: usize,
}

impl DepEstimate {
    /// Binomial standard error of the DEP estimate.
    pub fn standard_error(&self) -> f64 {
        let p = self.p_dep.clamp(0.0, 1.0);
        (p * (1.0 - p) / self.n_trials as f64).sqrt()
    }
}

/// Monte-Carlo estimator of `(P_FAP, P_MDP, P_DEP)` by drawing warden noise
/// powers from the bounded uncertainty model.
pub fn dep_monte_carlo<R: Rng + ?Sized>(
    zeta: f64,
    aleph: f64,
    params: &CovertnessParams,
    rng: &mut R,
    n_trials: usize,
) -> Result<DepEstimate> {
    if n_trials == 0 {
        return Err(Error::invalid("trial count must be positive"));
    }
    if zeta <= 0.0 || aleph < 0.0 {
        return Err(Error::invalid("threshold must be positive and leakage nonnegative"));
    }
    let nu = params.noise_model(1.0);
    let mut fap = 0usize;
    let mut mdp = 0usize;
    for _ in 0..n_trials {
        let noise = nu.sample(rng);
        if noise > zeta {
            fap += 1;
        }
        if aleph + noise < zeta {
            mdp += 1;
        }
    }
    let p_fap = fap as f64 / n_trials as f64;
    let p_mdp = mdp as f64 / n_trials as f64;
    Ok(DepEstimate {
        p_fap,
        p_mdp,
        p_dep: p_fap + p_mdp,
        n_trials,
    })
}
