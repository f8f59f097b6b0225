//! Reliability analysis: per-user SINR CDFs under the Rayleigh-cascade
//! statistical model, approximate outage probability, the exact union
//! probability, and a Monte-Carlo simulator validating the closed forms.
//!
//! The statistical model treats the RIS-user link as deterministic and the
//! BS-RIS channel as Gaussian, so the effective cascaded channel is
//! `CN(0, σ_bru² I)` and each beamformer projection power is an independent
//! `Exp(1)` variate scaled by its power share. This model is deliberately
//! decoupled from the geometric sampler in [`crate::channel`]; mixing the two
//! would invalidate the closed forms.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Power allocation across the common stream and `K` private streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSplit {
    /// Common-stream power fraction `α_c`.
    pub alpha_c: f64,
    /// Private-stream power fractions `α_k`, one per user.
    pub alpha: Vec<f64>,
    /// Total BS transmit power, watts.
    pub p_bs: f64,
}

impl PowerSplit {
    pub fn new(alpha_c: f64, alpha: Vec<f64>, p_bs: f64) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::invalid("at least one private stream is required"));
        }
        if alpha_c < 0.0 || alpha.iter().any(|a| *a < 0.0) {
            return Err(Error::invalid("power fractions must be nonnegative"));
        }
        let total = alpha_c + alpha.iter().sum::<f64>();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "power fractions must sum to 1 (got {total})"
            )));
        }
        if p_bs <= 0.0 {
            return Err(Error::invalid("transmit power must be positive"));
        }
        Ok(Self { alpha_c, alpha, p_bs })
    }

    /// Equal split: `α_c` to the common stream, the rest spread evenly.
    pub fn equal(alpha_c: f64, k: usize, p_bs: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("user count must be positive"));
        }
        let per = (1.0 - alpha_c) / k as f64;
        Self::new(alpha_c, vec![per; k], p_bs)
    }

    pub fn num_users(&self) -> usize {
        self.alpha.len()
    }
}

/// Statistical model parameters for the outage analysis of one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageModel {
    /// BS-RIS per-entry variance `σ_br²`.
    pub sigma_br2: f64,
    /// RIS amplitude scalar `β` (unity for a passive lossless RIS).
    pub beta: f64,
    /// Per-element RIS-user distances `r_kn`, meters.
    pub r_kn: Vec<f64>,
    /// Carrier wavelength, meters.
    pub lambda: f64,
    /// Receiver noise power `σ_k²`, watts.
    pub sigma_k2: f64,
    /// Common-stream SINR threshold (linear).
    pub gamma_th_c: f64,
    /// Private-stream SINR threshold (linear).
    pub gamma_th_p: f64,
}

impl OutageModel {
    /// Aggregate near-field loss factor `λ_k = Σ_n 1/(4π r_kn/λ)²`.
    pub fn lambda_k(&self) -> f64 {
        self.r_kn
            .iter()
            .map(|r| {
                let x = 4.0 * std::f64::consts::PI * r / self.lambda;
                1.0 / (x * x)
            })
            .sum()
    }

    /// Effective cascaded-channel variance `σ_bru² = β² λ_k σ_br² / N`.
    pub fn effective_variance(&self) -> Result<f64> {
        effective_variance(self, self.r_kn.len())
    }

    /// Noise normalized by the receive power scale,
    /// `σ̄ = σ_k²/(P_bs σ_bru²)` for a given split.
    fn noise_bar(&self, split: &PowerSplit) -> Result<f64> {
        let var = self.effective_variance()?;
        if var <= 0.0 {
            return Err(Error::invalid("effective variance must be positive"));
        }
        Ok(self.sigma_k2 / (split.p_bs * var))
    }
}

/// Effective cascaded-channel variance `σ_bru,k² = (1/N) β² λ_k σ_br²`.
pub fn effective_variance(model: &OutageModel, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("RIS size must be positive"));
    }
    if model.r_kn.iter().any(|r| *r <= 0.0) {
        return Err(Error::invalid("element distances must be positive"));
    }
    Ok(model.beta * model.beta * model.lambda_k() * model.sigma_br2 / n as f64)
}

/// CDF of the common-stream SINR:
/// `F(γ) = 1 - exp(-γσ_k²/(α_c P σ_bru²)) Π_{i=1..K} 1/(1 + γα_i/α_c)`.
///
/// With no common power (`α_c = 0`) the common stream is undecodable and the
/// CDF is 1 for every `γ > 0`.
pub fn cdf_common(gamma: f64, split: &PowerSplit, model: &OutageModel) -> Result<f64> {
    if gamma < 0.0 {
        return Err(Error::invalid("SINR argument must be nonnegative"));
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    if split.alpha_c == 0.0 {
        return Ok(1.0);
    }
    let noise_bar = model.noise_bar(split)?;
    let mut p = (-gamma * noise_bar / split.alpha_c).exp();
    for alpha_i in &split.alpha {
        p /= 1.0 + gamma * alpha_i / split.alpha_c;
    }
    Ok((1.0 - p).clamp(0.0, 1.0))
}

/// CDF of user `k`'s private-stream SINR (same shape as [`cdf_common`] with
/// `α_k` in place of `α_c` and the interference product over `i ≠ k`).
pub fn cdf_private(gamma: f64, split: &PowerSplit, model: &OutageModel, k: usize) -> Result<f64> {
    if k >= split.num_users() {
        return Err(Error::invalid("user index out of range"));
    }
    if gamma < 0.0 {
        return Err(Error::invalid("SINR argument must be nonnegative"));
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let alpha_k = split.alpha[k];
    if alpha_k == 0.0 {
        return Ok(1.0);
    }
    let noise_bar = model.noise_bar(split)?;
    let mut p = (-gamma * noise_bar / alpha_k).exp();
    for (i, alpha_i) in split.alpha.iter().enumerate() {
        if i != k {
            p /= 1.0 + gamma * alpha_i / alpha_k;
        }
    }
    Ok((1.0 - p).clamp(0.0, 1.0))
}

/// Approximate outage probability for user `k`:
/// `P_out ≈ F_c(γ_th,c) + F_p(γ_th,p) - min{F_c, F_p}` (the correlated-event
/// heuristic, which collapses to `max{F_c, F_p}`).
pub fn outage_probability(split: &PowerSplit, model: &OutageModel, k: usize) -> Result<f64> {
    let f_c = cdf_common(model.gamma_th_c, split, model)?;
    let f_p = cdf_private(model.gamma_th_p, split, model, k)?;
    Ok((f_c + f_p - f_c.min(f_p)).clamp(0.0, 1.0))
}

/// Exact probability of the outage union `{γ_c < γ_th,c} ∪ {γ_p < γ_th,p}`.
///
/// Conditioning on the interference variates shared by both SINRs and
/// integrating the two independent exponentials in closed form gives
///
/// `Pr(no outage) = e^{-tσ̄} / (1 + γ_c α_k/α_c) Π_{i≠k} 1/(1 + tα_i)` with
/// `t = γ_c/α_c + (γ_p/α_k)(1 + γ_c α_k/α_c)`,
///
/// which both CDFs are marginals of (set either threshold to zero).
pub fn outage_union_exact(split: &PowerSplit, model: &OutageModel, k: usize) -> Result<f64> {
    if k >= split.num_users() {
        return Err(Error::invalid("user index out of range"));
    }
    let (gc, gp) = (model.gamma_th_c, model.gamma_th_p);
    if gc < 0.0 || gp < 0.0 {
        return Err(Error::invalid("thresholds must be nonnegative"));
    }
    let alpha_c = split.alpha_c;
    let alpha_k = split.alpha[k];
    // degenerate streams: fall back to the single-event CDFs
    if alpha_c == 0.0 && gc > 0.0 {
        return Ok(1.0);
    }
    if alpha_k == 0.0 && gp > 0.0 {
        return Ok(1.0);
    }
    let noise_bar = model.noise_bar(split)?;
    let rc = if gc > 0.0 { gc / alpha_c } else { 0.0 };
    let rp = if gp > 0.0 { gp / alpha_k } else { 0.0 };
    let self_factor = 1.0 + rc * alpha_k;
    let t = rc + rp * self_factor;
    let mut p_clear = (-t * noise_bar).exp() / self_factor;
    for (i, alpha_i) in split.alpha.iter().enumerate() {
        if i != k {
            p_clear /= 1.0 + t * alpha_i;
        }
    }
    Ok((1.0 - p_clear).clamp(0.0, 1.0))
}

/// One batch of Monte-Carlo outage estimates for user `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    /// Empirical union probability `Pr{γ_c < γ_th,c or γ_p < γ_th,p}`.
    pub op_union: f64,
    /// Empirical max-composition `max{F̂_c, F̂_p}` (the Monte-Carlo
    /// counterpart of the approximate closed form).
    pub op_max: f64,
    /// Empirical common-stream CDF at its threshold.
    pub f_c: f64,
    /// Empirical private-stream CDF at its threshold.
    pub f_p: f64,
    /// Exact union probability (closed form), for gap reporting.
    pub union_exact: f64,
    /// Gap between the exact union and the max-approximation.
    pub approximation_gap: f64,
    pub n_trials: usize,
}

impl OutageEstimate {
    /// Binomial standard error of the union estimate.
    pub fn standard_error(&self) -> f64 {
        let p = self.op_union.clamp(0.0, 1.0);
        (p * (1.0 - p) / self.n_trials as f64).sqrt()
    }
}

/// Monte-Carlo outage estimator drawing the `Exp(1)` projection powers
/// shared by the common and private SINRs.
///
/// Every batch satisfies the counting sandwich
/// `max{F̂_c, F̂_p} <= union <= F̂_c + F̂_p` by construction; it is asserted
/// on each run.
pub fn outage_monte_carlo<R: Rng + ?Sized>(
    split: &PowerSplit,
    model: &OutageModel,
    k: usize,
    rng: &mut R,
    n_trials: usize,
) -> Result<OutageEstimate> {
    if n_trials == 0 {
        return Err(Error::invalid("trial count must be positive"));
    }
    if k >= split.num_users() {
        return Err(Error::invalid("user index out of range"));
    }
    let noise_bar = model.noise_bar(split)?;
    let kk = split.num_users();
    let mut common_out = 0usize;
    let mut private_out = 0usize;
    let mut union_out = 0usize;
    let mut x = vec![0.0f64; kk];
    for _ in 0..n_trials {
        let x_c: f64 = Exp1.sample(rng);
        for xi in x.iter_mut() {
            *xi = Exp1.sample(rng);
        }
        let interf_all: f64 = split
            .alpha
            .iter()
            .zip(&x)
            .map(|(a, xi)| a * xi)
            .sum::<f64>();
        let interf_other = interf_all - split.alpha[k] * x[k];
        let gamma_c = split.alpha_c * x_c / (interf_all + noise_bar);
        let gamma_p = split.alpha[k] * x[k] / (interf_other + noise_bar);
        let c_out = gamma_c < model.gamma_th_c;
        let p_out = gamma_p < model.gamma_th_p;
        common_out += c_out as usize;
        private_out += p_out as usize;
        union_out += (c_out || p_out) as usize;
    }
    let n = n_trials as f64;
    let f_c = common_out as f64 / n;
    let f_p = private_out as f64 / n;
    let op_union = union_out as f64 / n;
    let op_max = f_c.max(f_p);
    assert!(
        op_max <= op_union + 1e-15 && op_union <= f_c + f_p + 1e-15,
        "sandwich violated: max {op_max}, union {op_union}, sum {}",
        f_c + f_p
    );
    let union_exact = outage_union_exact(split, model, k)?;
    let op_approx = outage_probability(split, model, k)?;
    Ok(OutageEstimate {
        op_union,
        op_max,
        f_c,
        f_p,
        union_exact,
        approximation_gap: union_exact - op_approx,
        n_trials,
    })
}
