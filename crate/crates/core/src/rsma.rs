//! Rate-splitting signal model: common/private SINRs and achievable rates,
//! common-rate allocation bookkeeping, and the covert sum-rate objective.
//!
//! Every user first decodes the common stream treating all private streams
//! as interference, then (after perfect SIC of the common stream) decodes its
//! own private stream treating the other private streams as interference.
//! All functions here are pure over immutable inputs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::sample_cn01;
use crate::error::{Error, Result};
use crate::{CVector, C64};

/// Joint BS precoder / RIS phase / common-rate-allocation design point.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingState {
    /// Common-stream precoder, length `M_BS`.
    pub w_c: CVector,
    /// Private precoders, one per user, each length `M_BS`.
    pub w: Vec<CVector>,
    /// RIS phase shifts `θ_n ∈ [0, 2π)`, length `N`.
    pub theta: Vec<f64>,
    /// Common-rate allocation `℘_{c,k} >= 0`, bits/s/Hz, one per user.
    pub common_alloc: Vec<f64>,
}

impl BeamformingState {
    /// Total transmit power `Tr(W^H W) = ||w_c||² + Σ_k ||w_k||²`.
    pub fn transmit_power(&self) -> f64 {
        self.w_c.norm_squared() + self.w.iter().map(|w| w.norm_squared()).sum::<f64>()
    }

    pub fn num_users(&self) -> usize {
        self.w.len()
    }

    /// Structural validation: consistent dimensions, wrapped phases,
    /// nonnegative allocations, and the power budget.
    pub fn validate(&self, p_max: f64) -> Result<()> {
        let m = self.w_c.len();
        if self.w.is_empty() {
            return Err(Error::invalid("at least one private precoder is required"));
        }
        if self.w.iter().any(|w| w.len() != m) {
            return Err(Error::invalid("precoder lengths disagree"));
        }
        if self.common_alloc.len() != self.w.len() {
            return Err(Error::invalid("one common-rate allocation per user is required"));
        }
        if self.common_alloc.iter().any(|p| *p < 0.0) {
            return Err(Error::invalid("common-rate allocations must be nonnegative"));
        }
        if self.transmit_power() > p_max * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::invalid(format!(
                "transmit power {} exceeds budget {}",
                self.transmit_power(),
                p_max
            )));
        }
        Ok(())
    }
}

/// SINRs and rates for a design point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// Common-stream SINR per user (linear).
    pub gamma_c: Vec<f64>,
    /// Private-stream SINR per user (linear).
    pub gamma_p: Vec<f64>,
    /// Common-stream rate per user, bits/s/Hz.
    pub r_c: Vec<f64>,
    /// Private-stream rate per user, bits/s/Hz.
    pub r_p: Vec<f64>,
    /// Common-rate allocation actually carried, per user.
    pub common_alloc: Vec<f64>,
    /// Total rate `Σ_k (℘_{c,k} + R_{p,k})`, bits/s/Hz.
    pub r_total: f64,
    /// True iff `Σ_k ℘_{c,k}` exceeds `min_k R_{c,k}` (the common stream
    /// would be undecodable by at least one user).
    pub common_cap_violated: bool,
}

impl RateReport {
    /// Decodable common-stream budget `min_k R_{c,k}`.
    pub fn common_capacity(&self) -> f64 {
        self.r_c.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn check_noise(sigma_k2: f64) -> Result<()> {
    if sigma_k2 <= 0.0 {
        return Err(Error::invalid("receiver noise power must be positive"));
    }
    Ok(())
}

/// Common-stream SINR at one user:
/// `|h^H w_c|² / (Σ_{i=1..K} |h^H w_i|² + σ²)`.
pub fn sinr_common(h: &CVector, state: &BeamformingState, sigma_k2: f64) -> Result<f64> {
    check_noise(sigma_k2)?;
    if h.len() != state.w_c.len() {
        return Err(Error::invalid("channel/precoder dimension mismatch"));
    }
    let signal = h.dotc(&state.w_c).norm_sqr();
    let interference: f64 = state.w.iter().map(|w| h.dotc(w).norm_sqr()).sum();
    Ok(signal / (interference + sigma_k2))
}

/// Private-stream SINR at user `k`:
/// `|h^H w_k|² / (Σ_{i≠k} |h^H w_i|² + σ²)`.
pub fn sinr_private(h: &CVector, state: &BeamformingState, k: usize, sigma_k2: f64) -> Result<f64> {
    check_noise(sigma_k2)?;
    if k >= state.w.len() {
        return Err(Error::invalid("user index out of range"));
    }
    if h.len() != state.w_c.len() {
        return Err(Error::invalid("channel/precoder dimension mismatch"));
    }
    let signal = h.dotc(&state.w[k]).norm_sqr();
    let interference: f64 = state
        .w
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != k)
        .map(|(_, w)| h.dotc(w).norm_sqr())
        .sum();
    Ok(signal / (interference + sigma_k2))
}

/// Rates for all users: `R = log2(1 + γ)` for both streams, the sum rate
/// `Σ_k (℘_{c,k} + R_{p,k})`, and the common-cap violation flag.
pub fn rates(
    state: &BeamformingState,
    channels: &[CVector],
    sigma_k2: &[f64],
) -> Result<RateReport> {
    let k_users = state.num_users();
    if channels.len() != k_users || sigma_k2.len() != k_users {
        return Err(Error::invalid("one channel and noise power per user is required"));
    }
    let mut gamma_c = Vec::with_capacity(k_users);
    let mut gamma_p = Vec::with_capacity(k_users);
    for k in 0..k_users {
        gamma_c.push(sinr_common(&channels[k], state, sigma_k2[k])?);
        gamma_p.push(sinr_private(&channels[k], state, k, sigma_k2[k])?);
    }
    let r_c: Vec<f64> = gamma_c.iter().map(|g| (1.0 + g).log2()).collect();
    let r_p: Vec<f64> = gamma_p.iter().map(|g| (1.0 + g).log2()).collect();
    let alloc_sum: f64 = state.common_alloc.iter().sum();
    let cap = r_c.iter().copied().fold(f64::INFINITY, f64::min);
    let r_total = alloc_sum + r_p.iter().sum::<f64>();
    Ok(RateReport {
        gamma_c,
        gamma_p,
        r_c,
        r_p,
        common_alloc: state.common_alloc.clone(),
        r_total,
        common_cap_violated: alloc_sum > cap + 1e-9,
    })
}

/// Sample-level SINR estimate for one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrEstimate {
    /// Empirical common-stream SINR.
    pub gamma_c: f64,
    /// Empirical private-stream SINR (after removing the common stream).
    pub gamma_p: f64,
    /// Delta-method standard error of `gamma_c`.
    pub se_c: f64,
    /// Delta-method standard error of `gamma_p`.
    pub se_p: f64,
    pub n_samples: usize,
}

/// Floor applied to empirical interference-plus-noise power so degenerate
/// noise-free configurations report a finite power ratio.
pub const SINR_MC_DENOMINATOR_FLOOR: f64 = 1e-300;

/// Monte-Carlo sanity check of the Gaussian-SINR rate formulas: draws
/// `s_c, s_k ~ CN(0,1)` and `n_k ~ CN(0, σ_k²)`, forms the received samples,
/// and estimates both SINRs from sample powers.
pub fn received_signal_mc<R: Rng + ?Sized>(
    state: &BeamformingState,
    channels: &[CVector],
    sigma_k2: &[f64],
    rng: &mut R,
    n_samples: usize,
) -> Result<Vec<SinrEstimate>> {
    if n_samples < 1000 {
        return Err(Error::invalid("at least 1000 samples are required"));
    }
    let k_users = state.num_users();
    if channels.len() != k_users || sigma_k2.len() != k_users {
        return Err(Error::invalid("one channel and noise power per user is required"));
    }
    // effective complex gains per (user, stream)
    let gain_c: Vec<C64> = channels.iter().map(|h| h.dotc(&state.w_c)).collect();
    let gains: Vec<Vec<C64>> = channels
        .iter()
        .map(|h| state.w.iter().map(|w| h.dotc(w)).collect())
        .collect();

    let mut out = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let noise_std = sigma_k2[k].sqrt();
        let mut num_c = Welford::default();
        let mut den_c = Welford::default();
        let mut num_p = Welford::default();
        let mut den_p = Welford::default();
        for _ in 0..n_samples {
            let s_c = sample_cn01(rng);
            let s: Vec<C64> = (0..k_users).map(|_| sample_cn01(rng)).collect();
            let n = sample_cn01(rng) * noise_std;

            let common_part = gain_c[k] * s_c;
            let mut private_all = C64::new(0.0, 0.0);
            let mut private_others = C64::new(0.0, 0.0);
            for i in 0..k_users {
                let term = gains[k][i] * s[i];
                private_all += term;
                if i != k {
                    private_others += term;
                }
            }
            num_c.push(common_part.norm_sqr());
            den_c.push((private_all + n).norm_sqr());
            num_p.push((gains[k][k] * s[k]).norm_sqr());
            den_p.push((private_others + n).norm_sqr());
        }
        let ratio = |num: &Welford, den: &Welford| {
            let d = den.mean.max(SINR_MC_DENOMINATOR_FLOOR);
            let g = num.mean / d;
            // delta-method SE for a ratio of independent sample means
            let rel = num.var_of_mean() / (num.mean * num.mean).max(SINR_MC_DENOMINATOR_FLOOR)
                + den.var_of_mean() / (d * d);
            (g, g * rel.sqrt())
        };
        let (gamma_c, se_c) = ratio(&num_c, &den_c);
        let (gamma_p, se_p) = ratio(&num_p, &den_p);
        out.push(SinrEstimate {
            gamma_c,
            gamma_p,
            se_c,
            se_p,
            n_samples,
        });
    }
    Ok(out)
}

/// Streaming mean/variance accumulator.
#[derive(Debug, Default, Clone, Copy)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn var_of_mean(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.m2 / ((self.n - 1) as f64 * self.n as f64)
    }
}
