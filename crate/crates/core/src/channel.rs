//! Channel objects: far-field planar-wave BS-RIS channel, near-field
//! spherical-wave RIS-user channels, array response vectors, cascaded
//! channels, and the warden's noise-uncertainty model.
//!
//! Conventions:
//! - All steering/response vectors are normalized to unit Euclidean norm.
//! - The RIS is indexed linearly `1..=N` for the near-field response (the
//!   element offsets `delta_n = (2n - N - 1)/2` run along that index).
//! - Channel objects are immutable after construction; all sampling takes an
//!   explicit RNG so parallel Monte Carlo needs no shared mutable state.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64, SPEED_OF_LIGHT};

/// Deterministic generator for a whole experiment.
pub fn seeded_rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Per-realization stream split off an experiment seed, so realizations can
/// be generated independently (and in parallel) in any order.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draw a standard circularly-symmetric complex Gaussian, `CN(0, 1)`.
pub fn sample_cn01<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let comp = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
    C64::new(comp.sample(rng), comp.sample(rng))
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/// Array geometry shared by the BS ULA and the RIS UPA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    /// BS antenna count (ULA).
    pub m_bs: usize,
    /// RIS rows.
    pub n_y: usize,
    /// RIS columns.
    pub n_z: usize,
    /// Element spacing in meters.
    pub d: f64,
    /// Carrier frequency in Hz.
    pub f: f64,
}

impl ArrayGeometry {
    /// Half-wavelength spacing at carrier frequency `f`.
    pub fn half_wavelength(m_bs: usize, n_y: usize, n_z: usize, f: f64) -> Result<Self> {
        let lambda = SPEED_OF_LIGHT / f;
        Self::new(m_bs, n_y, n_z, lambda / 2.0, f)
    }

    pub fn new(m_bs: usize, n_y: usize, n_z: usize, d: f64, f: f64) -> Result<Self> {
        if m_bs == 0 || n_y == 0 || n_z == 0 {
            return Err(Error::invalid("array sizes must be >= 1"));
        }
        if d <= 0.0 || f <= 0.0 {
            return Err(Error::invalid("element spacing and frequency must be positive"));
        }
        Ok(Self { m_bs, n_y, n_z, d, f })
    }

    /// Total RIS element count `N = N_y * N_z`.
    pub fn n(&self) -> usize {
        self.n_y * self.n_z
    }

    /// Carrier wavelength in meters.
    pub fn lambda(&self) -> f64 {
        SPEED_OF_LIGHT / self.f
    }
}

// ---------------------------------------------------------------------------
// Array response vectors
// ---------------------------------------------------------------------------

fn check_array_args(m: usize, d: f64, lambda: f64) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("element count must be >= 1"));
    }
    if d <= 0.0 {
        return Err(Error::invalid("element spacing must be positive"));
    }
    if lambda <= 0.0 {
        return Err(Error::invalid("wavelength must be positive"));
    }
    Ok(())
}

/// Normalized ULA steering vector: entry `i = exp(j 2π d/λ i sinθ)/√m`.
pub fn ula_steering(theta: f64, m: usize, d: f64, lambda: f64) -> Result<CVector> {
    check_array_args(m, d, lambda)?;
    let scale = 1.0 / (m as f64).sqrt();
    let k = 2.0 * std::f64::consts::PI * d / lambda * theta.sin();
    Ok(CVector::from_fn(m, |i, _| {
        C64::from_polar(scale, k * i as f64)
    }))
}

/// Normalized UPA steering vector `(1/√N) a_y(θ,φ) ⊗ a_z(φ)` with
/// `a_y[p] = exp(j 2π d/λ p sinθ cosφ)` and `a_z[q] = exp(j 2π d/λ q sinφ)`.
pub fn upa_steering(
    theta: f64,
    phi: f64,
    n_y: usize,
    n_z: usize,
    d: f64,
    lambda: f64,
) -> Result<CVector> {
    check_array_args(n_y * n_z.max(1), d, lambda)?;
    if n_y == 0 || n_z == 0 {
        return Err(Error::invalid("UPA dimensions must be >= 1"));
    }
    let n = n_y * n_z;
    let ky = 2.0 * std::f64::consts::PI * d / lambda * theta.sin() * phi.cos();
    let kz = 2.0 * std::f64::consts::PI * d / lambda * phi.sin();
    let scale = 1.0 / (n as f64).sqrt();
    let mut v = CVector::zeros(n);
    for p in 0..n_y {
        for q in 0..n_z {
            v[p * n_z + q] = C64::from_polar(scale, ky * p as f64 + kz * q as f64);
        }
    }
    Ok(v)
}

/// Signed element offsets `(2n - N - 1)/2` for `n = 1..=N`.
fn element_offsets(n: usize) -> impl Iterator<Item = f64> {
    (1..=n).map(move |idx| (2.0 * idx as f64 - n as f64 - 1.0) / 2.0)
}

/// Near-field spherical-wave response vector.
///
/// Entry `n` is `exp(-j 2π/λ (r^(n) - r))/√N` where
/// `r^(n) = sqrt(r² + δ_n² d² - 2 r δ_n d sinθ)` is the exact distance from
/// the scatterer to element `n`.
pub fn nf_response(theta: f64, r: f64, n: usize, d: f64, lambda: f64) -> Result<CVector> {
    check_array_args(n, d, lambda)?;
    if r <= 0.0 {
        return Err(Error::invalid("scatterer range must be positive"));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let k = 2.0 * std::f64::consts::PI / lambda;
    let sin_t = theta.sin();
    let entries: Vec<C64> = element_offsets(n)
        .map(|delta| {
            let rn = (r * r + delta * delta * d * d - 2.0 * r * delta * d * sin_t).sqrt();
            C64::from_polar(scale, -k * (rn - r))
        })
        .collect();
    Ok(CVector::from_vec(entries))
}

/// Planar-wave limit of [`nf_response`]: entry `n = exp(j 2π d/λ δ_n sinθ)/√N`.
///
/// Used by the far-field baseline channel model, where user responses depend
/// on angle only.
pub fn ff_response(theta: f64, n: usize, d: f64, lambda: f64) -> Result<CVector> {
    check_array_args(n, d, lambda)?;
    let scale = 1.0 / (n as f64).sqrt();
    let k = 2.0 * std::f64::consts::PI * d / lambda * theta.sin();
    let entries: Vec<C64> = element_offsets(n)
        .map(|delta| C64::from_polar(scale, k * delta))
        .collect();
    Ok(CVector::from_vec(entries))
}

// ---------------------------------------------------------------------------
// Path sets
// ---------------------------------------------------------------------------

/// One resolvable BS-RIS path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsRisPath {
    /// Complex path gain.
    pub gain: [f64; 2],
    /// Angle of departure at the BS, radians.
    pub aod: f64,
    /// Elevation angle of arrival at the RIS, radians.
    pub aoa_elev: f64,
    /// Azimuth angle of arrival at the RIS, radians.
    pub aoa_azim: f64,
}

impl BsRisPath {
    pub fn gain_c(&self) -> C64 {
        C64::new(self.gain[0], self.gain[1])
    }
}

/// Resolvable paths between the BS and the RIS, with the average path loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsRisPathSet {
    pub paths: Vec<BsRisPath>,
    /// Average path loss `D_pl` (linear).
    pub d_pl: f64,
}

impl BsRisPathSet {
    /// Draw `j_p` paths with `CN(0,1)` gains and angles uniform on
    /// `(-π/3, π/3)`.
    pub fn sample<R: Rng + ?Sized>(j_p: usize, d_pl: f64, rng: &mut R) -> Result<Self> {
        if j_p == 0 {
            return Err(Error::invalid("path count J_p must be >= 1"));
        }
        let ang = Uniform::new(-std::f64::consts::FRAC_PI_3, std::f64::consts::FRAC_PI_3);
        let paths = (0..j_p)
            .map(|_| {
                let g = sample_cn01(rng);
                BsRisPath {
                    gain: [g.re, g.im],
                    aod: ang.sample(rng),
                    aoa_elev: ang.sample(rng),
                    aoa_azim: ang.sample(rng),
                }
            })
            .collect();
        Ok(Self { paths, d_pl })
    }
}

/// One near-field scattered path between the RIS and a user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NfPath {
    /// Complex path gain.
    pub gain: [f64; 2],
    /// Scatterer angle, radians.
    pub theta: f64,
    /// Scatterer range from the RIS center, meters.
    pub range_m: f64,
}

impl NfPath {
    pub fn gain_c(&self) -> C64 {
        C64::new(self.gain[0], self.gain[1])
    }
}

/// Resolvable paths between the RIS and one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NfPathSet {
    pub paths: Vec<NfPath>,
}

impl NfPathSet {
    /// A single deterministic line-of-sight path with unit gain.
    pub fn los(theta: f64, range_m: f64) -> Self {
        Self {
            paths: vec![NfPath {
                gain: [1.0, 0.0],
                theta,
                range_m,
            }],
        }
    }

    /// Draw `l_x` paths with `CN(0,1)` gains, angles uniform on `(-π/3, π/3)`
    /// and ranges uniform on `[r_min, r_max]`.
    pub fn sample<R: Rng + ?Sized>(
        l_x: usize,
        r_min: f64,
        r_max: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if l_x == 0 {
            return Err(Error::invalid("path count L_x must be >= 1"));
        }
        if r_min <= 0.0 || r_max < r_min {
            return Err(Error::invalid("scatterer range interval must satisfy 0 < r_min <= r_max"));
        }
        let ang = Uniform::new(-std::f64::consts::FRAC_PI_3, std::f64::consts::FRAC_PI_3);
        let rad = Uniform::new_inclusive(r_min, r_max);
        let paths = (0..l_x)
            .map(|_| {
                let g = sample_cn01(rng);
                NfPath {
                    gain: [g.re, g.im],
                    theta: ang.sample(rng),
                    range_m: rad.sample(rng),
                }
            })
            .collect();
        Ok(Self { paths })
    }
}

// ---------------------------------------------------------------------------
// Channel assembly
// ---------------------------------------------------------------------------

/// BS-RIS channel `H_br ∈ C^{N×M}` from a fully specified path set:
/// `H = √(M N D_pl / J_p) Σ_j g_j a_UPA(elev_j, azim_j) a_ULA^H(aod_j)`.
pub fn bs_ris_channel(geom: &ArrayGeometry, paths: &BsRisPathSet) -> Result<CMatrix> {
    if paths.paths.is_empty() {
        return Err(Error::invalid("BS-RIS path set is empty"));
    }
    let n = geom.n();
    let m = geom.m_bs;
    let lambda = geom.lambda();
    let j_p = paths.paths.len();
    let amp = ((m * n) as f64 * paths.d_pl / j_p as f64).sqrt();

    let mut h = DMatrix::<C64>::zeros(n, m);
    for p in &paths.paths {
        let a_rx = upa_steering(p.aoa_elev, p.aoa_azim, geom.n_y, geom.n_z, geom.d, lambda)?;
        let a_tx = ula_steering(p.aod, m, geom.d, lambda)?;
        let gain = p.gain_c() * amp;
        // rank-1 accumulation: gain * a_rx * a_tx^H
        for c in 0..m {
            let t = gain * a_tx[c].conj();
            for r in 0..n {
                h[(r, c)] += a_rx[r] * t;
            }
        }
    }
    Ok(h)
}

/// Which response model the RIS-user link uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveModel {
    /// Near-field spherical wavefront (angle and range).
    NearField,
    /// Far-field planar wavefront (angle only).
    FarField,
}

/// RIS-user channel `g ∈ C^N` from a fully specified path set:
/// `g = √(N/L_x) Σ_l α_l b(θ_l, r_l)`.
pub fn ris_user_channel(
    geom: &ArrayGeometry,
    paths: &NfPathSet,
    model: WaveModel,
) -> Result<CVector> {
    if paths.paths.is_empty() {
        return Err(Error::invalid("RIS-user path set is empty"));
    }
    let n = geom.n();
    let lambda = geom.lambda();
    let l_x = paths.paths.len();
    let amp = (n as f64 / l_x as f64).sqrt();

    let mut g = CVector::zeros(n);
    for p in &paths.paths {
        let b = match model {
            WaveModel::NearField => nf_response(p.theta, p.range_m, n, geom.d, lambda)?,
            WaveModel::FarField => ff_response(p.theta, n, geom.d, lambda)?,
        };
        g += b * (p.gain_c() * amp);
    }
    Ok(g)
}

/// Overall cascaded BS-to-user channel via the RIS: `h = H_br^H Θ g` with
/// `Θ = diag(e^{jθ_1}, ..., e^{jθ_N})`.
pub fn cascaded_channel(h_br: &CMatrix, theta: &[f64], g: &CVector) -> Result<CVector> {
    let n = h_br.nrows();
    if theta.len() != n || g.len() != n {
        return Err(Error::invalid(format!(
            "dimension mismatch: H_br is {}x{}, theta has {} entries, g has {}",
            n,
            h_br.ncols(),
            theta.len(),
            g.len()
        )));
    }
    let shifted = CVector::from_fn(n, |i, _| C64::from_polar(1.0, theta[i]) * g[i]);
    Ok(h_br.adjoint() * shifted)
}

/// Rayleigh distance `2 (D_RIS + D_user) f / c` marking the near-field
/// boundary after reflection from the RIS.
pub fn rayleigh_distance(d_ris_aperture: f64, d_user_aperture: f64, f: f64) -> Result<f64> {
    if d_ris_aperture < 0.0 || d_user_aperture < 0.0 || f <= 0.0 {
        return Err(Error::invalid("apertures must be nonnegative and frequency positive"));
    }
    Ok(2.0 * (d_ris_aperture + d_user_aperture) * f / SPEED_OF_LIGHT)
}

/// Lower edge of the near-field region, `0.62 √(D_RIS / (c/f))`.
pub fn near_field_lower_bound(d_ris_aperture: f64, f: f64) -> Result<f64> {
    if d_ris_aperture < 0.0 || f <= 0.0 {
        return Err(Error::invalid("aperture must be nonnegative and frequency positive"));
    }
    Ok(0.62 * (d_ris_aperture / (SPEED_OF_LIGHT / f)).sqrt())
}

// ---------------------------------------------------------------------------
// Noise uncertainty at the warden
// ---------------------------------------------------------------------------

/// Bounded noise-uncertainty model: the warden's noise power is log-uniform
/// on `[σ̃²/ρ, ρ σ̃²]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseUncertainty {
    /// Nominal warden noise power `σ̃_w²`, linear watts.
    pub sigma_w2_nominal: f64,
    /// Uncertainty coefficient `ρ >= 1`.
    pub rho: f64,
    /// Per-user receiver noise power `σ_k²`, linear watts.
    pub sigma_k2: f64,
}

impl NoiseUncertainty {
    pub fn new(sigma_w2_nominal: f64, rho: f64, sigma_k2: f64) -> Result<Self> {
        if sigma_w2_nominal <= 0.0 || sigma_k2 <= 0.0 {
            return Err(Error::invalid("noise powers must be positive"));
        }
        if rho < 1.0 {
            return Err(Error::invalid("uncertainty coefficient rho must be >= 1"));
        }
        Ok(Self {
            sigma_w2_nominal,
            rho,
            sigma_k2,
        })
    }

    /// Support of the noise-power distribution, `[σ̃²/ρ, ρ σ̃²]`.
    pub fn support(&self) -> (f64, f64) {
        (
            self.sigma_w2_nominal / self.rho,
            self.rho * self.sigma_w2_nominal,
        )
    }

    /// Draw one warden noise power in watts. For `ρ = 1` returns `σ̃²` exactly.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.rho == 1.0 {
            return self.sigma_w2_nominal;
        }
        let u: f64 = rng.gen::<f64>();
        self.sigma_w2_nominal * self.rho.powf(2.0 * u - 1.0)
    }

    /// CDF of the warden noise power (0 below the support, 1 above).
    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            0.0
        } else if x >= hi {
            1.0
        } else {
            (x * self.rho / self.sigma_w2_nominal).ln() / (2.0 * self.rho.ln())
        }
    }
}

/// Draw one warden noise power per the bounded uncertainty model.
pub fn sample_willie_noise<R: Rng + ?Sized>(nu: &NoiseUncertainty, rng: &mut R) -> f64 {
    nu.sample(rng)
}

// ---------------------------------------------------------------------------
// Realization bundle
// ---------------------------------------------------------------------------

/// One draw of every channel in the scenario, plus reproduction metadata.
///
/// User indexing: user 1 is Bob (`g_rb`); public users are `2..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub geometry: ArrayGeometry,
    /// BS-RIS channel, `N x M_BS`.
    pub h_br: CMatrix,
    /// RIS-Bob channel, length `N`.
    pub g_rb: CVector,
    /// RIS-Willie channel, length `N`.
    pub g_rw: CVector,
    /// RIS-public-user channels (users `2..=K`), each length `N`.
    pub g_ru: Vec<CVector>,
    /// Experiment seed this realization was drawn under.
    pub seed: u64,
    /// Stream index within the experiment.
    pub stream: u64,
}

impl ChannelRealization {
    /// Total user count including Bob.
    pub fn num_users(&self) -> usize {
        1 + self.g_ru.len()
    }

    /// RIS-user channel for 0-based user index (`0` is Bob).
    pub fn user_channel(&self, k: usize) -> &CVector {
        if k == 0 {
            &self.g_rb
        } else {
            &self.g_ru[k - 1]
        }
    }

    /// Cascaded BS-to-user channels for all users under phases `theta`.
    pub fn cascaded_all(&self, theta: &[f64]) -> Result<Vec<CVector>> {
        (0..self.num_users())
            .map(|k| cascaded_channel(&self.h_br, theta, self.user_channel(k)))
            .collect()
    }

    /// Cascaded BS-to-Willie channel under phases `theta`.
    pub fn cascaded_willie(&self, theta: &[f64]) -> Result<CVector> {
        cascaded_channel(&self.h_br, theta, &self.g_rw)
    }

    fn check_dims(&self) -> Result<()> {
        let n = self.geometry.n();
        let m = self.geometry.m_bs;
        if self.h_br.nrows() != n || self.h_br.ncols() != m {
            return Err(Error::invalid("H_br dimensions inconsistent with geometry"));
        }
        for g in std::iter::once(&self.g_rb)
            .chain(std::iter::once(&self.g_rw))
            .chain(self.g_ru.iter())
        {
            if g.len() != n {
                return Err(Error::invalid("RIS-user channel length inconsistent with geometry"));
            }
            if g.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(Error::invalid("channel entries must be finite"));
            }
        }
        Ok(())
    }

    /// Validate dimensional and finiteness invariants.
    pub fn validate(&self) -> Result<()> {
        self.check_dims()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    const LAMBDA: f64 = 0.0107; // ~28 GHz

    #[test]
    fn ula_broadside_all_ones() {
        let v = ula_steering(0.0, 4, LAMBDA / 2.0, LAMBDA).unwrap();
        for i in 0..4 {
            assert_relative_eq!(v[i].re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(v[i].im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn ula_single_element() {
        let v = ula_steering(1.234, 1, LAMBDA / 2.0, LAMBDA).unwrap();
        assert_eq!(v.len(), 1);
        assert_relative_eq!(v[0].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn ula_matches_elementwise_oracle() {
        // theta = pi/6, d = lambda/2: phase of entry i must be pi*i/2.
        let theta = std::f64::consts::FRAC_PI_6;
        let v = ula_steering(theta, 8, LAMBDA / 2.0, LAMBDA).unwrap();
        for i in 0..8 {
            let phase = 2.0 * std::f64::consts::PI * 0.5 * (i as f64) * theta.sin();
            assert_relative_eq!(phase, std::f64::consts::PI * i as f64 * 0.5, epsilon = 1e-12);
            let expect = C64::from_polar(1.0 / (8f64).sqrt(), phase);
            assert_abs_diff_eq!(v[i].re, expect.re, epsilon = 1e-12);
            assert_abs_diff_eq!(v[i].im, expect.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn ula_rejects_bad_args() {
        assert!(ula_steering(0.0, 0, 1.0, 1.0).is_err());
        assert!(ula_steering(0.0, 2, 0.0, 1.0).is_err());
        assert!(ula_steering(0.0, 2, 1.0, -1.0).is_err());
    }

    #[test]
    fn upa_broadside_all_ones() {
        let v = upa_steering(0.0, 0.0, 2, 2, LAMBDA / 2.0, LAMBDA).unwrap();
        for i in 0..4 {
            assert_relative_eq!(v[i].re, 0.5, epsilon = 1e-15);
            assert_abs_diff_eq!(v[i].im, 0.0, epsilon = 1e-15);
        }
        let single = upa_steering(0.7, -0.3, 1, 1, LAMBDA / 2.0, LAMBDA).unwrap();
        assert_relative_eq!(single[0].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn upa_matches_kronecker_oracle() {
        let (theta, phi) = (std::f64::consts::FRAC_PI_4, std::f64::consts::FRAC_PI_6);
        let (n_y, n_z) = (4usize, 4usize);
        let d = LAMBDA / 2.0;
        let v = upa_steering(theta, phi, n_y, n_z, d, LAMBDA).unwrap();

        // independent double-loop oracle over (p, q)
        let k = 2.0 * std::f64::consts::PI * d / LAMBDA;
        for p in 0..n_y {
            for q in 0..n_z {
                let ay = C64::from_polar(1.0, k * p as f64 * theta.sin() * phi.cos());
                let az = C64::from_polar(1.0, k * q as f64 * phi.sin());
                let expect = ay * az / (16f64).sqrt();
                let got = v[p * n_z + q];
                assert_abs_diff_eq!(got.re, expect.re, epsilon = 1e-12);
                assert_abs_diff_eq!(got.im, expect.im, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn nf_single_element_is_one() {
        let v = nf_response(0.4, 2.0, 1, LAMBDA / 2.0, LAMBDA).unwrap();
        assert_relative_eq!(v[0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[0].im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn nf_rejects_nonpositive_range() {
        assert!(nf_response(0.0, 0.0, 4, 1.0, 1.0).is_err());
        assert!(nf_response(0.0, -1.0, 4, 1.0, 1.0).is_err());
    }

    #[test]
    fn nf_broadside_matches_distance_oracle() {
        // theta = 0, n = 3, r = 5*lambda: delta = (-1, 0, 1), middle phase 0.
        let r = 5.0 * LAMBDA;
        let d = LAMBDA / 2.0;
        let v = nf_response(0.0, r, 3, d, LAMBDA).unwrap();
        assert_abs_diff_eq!(v[1].im, 0.0, epsilon = 1e-15);
        assert_relative_eq!(v[1].re, 1.0 / 3f64.sqrt(), epsilon = 1e-14);
        for (i, delta) in [(0usize, -1.0f64), (2, 1.0)] {
            let rn = (r * r + delta * delta * d * d).sqrt();
            let expect = C64::from_polar(
                1.0 / 3f64.sqrt(),
                -2.0 * std::f64::consts::PI / LAMBDA * (rn - r),
            );
            assert_abs_diff_eq!(v[i].re, expect.re, epsilon = 1e-12);
            assert_abs_diff_eq!(v[i].im, expect.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn nf_converges_to_far_field_phases() {
        // At r = 1e6 lambda the relative entry phases must match the ULA
        // progression within 1e-3 rad (common offset removed via ratios).
        let theta = 0.37;
        let n = 8;
        let d = LAMBDA / 2.0;
        let r = 1e6 * LAMBDA;
        let nf = nf_response(theta, r, n, d, LAMBDA).unwrap();
        let ula = ula_steering(theta, n, d, LAMBDA).unwrap();
        for i in 0..n {
            let rel_nf = nf[i] * nf[0].conj();
            let rel_ula = ula[i] * ula[0].conj();
            let diff = (rel_nf * rel_ula.conj()).arg();
            assert!(diff.abs() < 1e-3, "entry {i}: phase gap {diff}");
        }
    }

    #[test]
    fn ff_response_is_nf_limit() {
        let theta = -0.21;
        let n = 16;
        let d = LAMBDA / 2.0;
        let nf = nf_response(theta, 1e8 * LAMBDA, n, d, LAMBDA).unwrap();
        let ff = ff_response(theta, n, d, LAMBDA).unwrap();
        for i in 0..n {
            assert_abs_diff_eq!((nf[i] * ff[i].conj()).arg(), 0.0, epsilon = 1e-5);
        }
    }

    fn test_geom(m: usize, n_y: usize, n_z: usize) -> ArrayGeometry {
        ArrayGeometry::half_wavelength(m, n_y, n_z, SPEED_OF_LIGHT / LAMBDA).unwrap()
    }

    #[test]
    fn bs_ris_single_path_rank_one() {
        let geom = test_geom(4, 2, 2);
        let paths = BsRisPathSet {
            paths: vec![BsRisPath {
                gain: [1.0, 0.0],
                aod: 0.3,
                aoa_elev: -0.2,
                aoa_azim: 0.5,
            }],
            d_pl: 1.0,
        };
        let h = bs_ris_channel(&geom, &paths).unwrap();
        let amp = (4.0 * 4.0 * 1.0 / 1.0f64).sqrt();
        assert_relative_eq!(h.norm(), amp, epsilon = 1e-12);

        let a_rx = upa_steering(-0.2, 0.5, 2, 2, geom.d, geom.lambda()).unwrap();
        let a_tx = ula_steering(0.3, 4, geom.d, geom.lambda()).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let expect = a_rx[r] * a_tx[c].conj() * amp;
                assert_abs_diff_eq!(h[(r, c)].re, expect.re, epsilon = 1e-12);
                assert_abs_diff_eq!(h[(r, c)].im, expect.im, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn bs_ris_three_paths_match_term_sum() {
        let geom = test_geom(3, 2, 3);
        let mk = |g: (f64, f64), aod: f64, el: f64, az: f64| BsRisPath {
            gain: [g.0, g.1],
            aod,
            aoa_elev: el,
            aoa_azim: az,
        };
        let paths = BsRisPathSet {
            paths: vec![
                mk((0.5, -0.1), 0.1, 0.2, -0.3),
                mk((-0.7, 0.4), -0.5, 0.6, 0.2),
                mk((0.2, 0.9), 0.9, -0.4, -0.1),
            ],
            d_pl: 0.25,
        };
        let h = bs_ris_channel(&geom, &paths).unwrap();

        // term-by-term oracle
        let amp = (3.0 * 6.0 * 0.25 / 3.0f64).sqrt();
        let mut oracle = CMatrix::zeros(6, 3);
        for p in &paths.paths {
            let a_rx = upa_steering(p.aoa_elev, p.aoa_azim, 2, 3, geom.d, geom.lambda()).unwrap();
            let a_tx = ula_steering(p.aod, 3, geom.d, geom.lambda()).unwrap();
            for r in 0..6 {
                for c in 0..3 {
                    oracle[(r, c)] += p.gain_c() * amp * a_rx[r] * a_tx[c].conj();
                }
            }
        }
        assert!((h - oracle).norm() < 1e-12);
    }

    #[test]
    fn bs_ris_moment_check() {
        let geom = test_geom(4, 4, 4);
        let mut rng = seeded_rng(7);
        let d_pl = 0.01;
        let draws = 10_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let paths = BsRisPathSet::sample(3, d_pl, &mut rng).unwrap();
            let h = bs_ris_channel(&geom, &paths).unwrap();
            acc += h.norm_squared() / (4.0 * 16.0 * d_pl);
        }
        let mean = acc / draws as f64;
        assert!((mean - 1.0).abs() < 0.05, "moment ratio {mean}");
    }

    #[test]
    fn ris_user_single_path() {
        let geom = test_geom(2, 2, 2);
        let paths = NfPathSet::los(0.3, 1.5);
        let g = ris_user_channel(&geom, &paths, WaveModel::NearField).unwrap();
        assert_relative_eq!(g.norm(), 2.0, epsilon = 1e-12);
        let b = nf_response(0.3, 1.5, 4, geom.d, geom.lambda()).unwrap();
        assert!((g - b * C64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn ris_user_two_paths_match_term_sum() {
        let geom = test_geom(2, 2, 2);
        let paths = NfPathSet {
            paths: vec![
                NfPath {
                    gain: [0.3, 0.4],
                    theta: 0.1,
                    range_m: 1.0,
                },
                NfPath {
                    gain: [-0.2, 0.8],
                    theta: -0.5,
                    range_m: 2.5,
                },
            ],
        };
        let g = ris_user_channel(&geom, &paths, WaveModel::NearField).unwrap();
        let amp = (4.0 / 2.0f64).sqrt();
        let mut oracle = CVector::zeros(4);
        for p in &paths.paths {
            let b = nf_response(p.theta, p.range_m, 4, geom.d, geom.lambda()).unwrap();
            oracle += b * (p.gain_c() * amp);
        }
        assert!((g - oracle).norm() < 1e-12);
    }

    #[test]
    fn ris_user_moment_check() {
        let geom = test_geom(2, 4, 4);
        let mut rng = seeded_rng(11);
        let draws = 10_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let paths = NfPathSet::sample(3, 0.5, 3.0, &mut rng).unwrap();
            let g = ris_user_channel(&geom, &paths, WaveModel::NearField).unwrap();
            acc += g.norm_squared() / 16.0;
        }
        let mean = acc / draws as f64;
        assert!((mean - 1.0).abs() < 0.05, "moment ratio {mean}");
    }

    #[test]
    fn cascaded_identity_phases() {
        let geom = test_geom(3, 2, 2);
        let mut rng = seeded_rng(3);
        let paths = BsRisPathSet::sample(2, 1.0, &mut rng).unwrap();
        let h = bs_ris_channel(&geom, &paths).unwrap();
        let g = CVector::from_fn(4, |_, _| sample_cn01(&mut rng));
        let out = cascaded_channel(&h, &[0.0; 4], &g).unwrap();
        let expect = h.adjoint() * &g;
        assert!((out - expect).norm() < 1e-13);
    }

    #[test]
    fn cascaded_scalar_case() {
        let h = CMatrix::from_element(1, 1, C64::new(0.6, -0.8)); // |h| = 1
        let g = CVector::from_element(1, C64::new(0.0, 1.0));
        let theta = 0.77;
        let out = cascaded_channel(&h, &[theta], &g).unwrap();
        let expect = C64::new(0.6, 0.8) * C64::from_polar(1.0, theta) * C64::new(0.0, 1.0);
        assert_abs_diff_eq!(out[0].re, expect.re, epsilon = 1e-14);
        assert_abs_diff_eq!(out[0].im, expect.im, epsilon = 1e-14);
    }

    #[test]
    fn cascaded_matches_triple_loop_oracle() {
        let mut rng = seeded_rng(5);
        let (n, m) = (4usize, 2usize);
        let h = CMatrix::from_fn(n, m, |_, _| sample_cn01(&mut rng));
        let g = CVector::from_fn(n, |_, _| sample_cn01(&mut rng));
        let theta: Vec<f64> = (0..n).map(|_| rand::Rng::gen::<f64>(&mut rng) * 6.28).collect();
        let out = cascaded_channel(&h, &theta, &g).unwrap();

        let mut oracle = CVector::zeros(m);
        for c in 0..m {
            for r in 0..n {
                oracle[c] += h[(r, c)].conj() * C64::from_polar(1.0, theta[r]) * g[r];
            }
        }
        assert!((out - oracle).norm() < 1e-13);
    }

    #[test]
    fn cascaded_dimension_mismatch() {
        let h = CMatrix::zeros(4, 2);
        let g = CVector::zeros(3);
        assert!(cascaded_channel(&h, &[0.0; 4], &g).is_err());
    }

    #[test]
    fn cascaded_common_phase_offset() {
        let mut rng = seeded_rng(9);
        let (n, m) = (5usize, 3usize);
        let h = CMatrix::from_fn(n, m, |_, _| sample_cn01(&mut rng));
        let g = CVector::from_fn(n, |_, _| sample_cn01(&mut rng));
        let theta: Vec<f64> = (0..n).map(|_| rand::Rng::gen::<f64>(&mut rng) * 6.28).collect();
        let psi = 1.1;
        let shifted: Vec<f64> = theta.iter().map(|t| t + psi).collect();
        let base = cascaded_channel(&h, &theta, &g).unwrap();
        let moved = cascaded_channel(&h, &shifted, &g).unwrap();
        let rotated = base.clone() * C64::from_polar(1.0, psi);
        assert!((moved.clone() - rotated).norm() < 1e-12);
        assert_relative_eq!(moved.norm(), base.norm(), epsilon = 1e-12);
    }

    #[test]
    fn rayleigh_distance_values() {
        let d = rayleigh_distance(0.5, 0.0, 28e9).unwrap();
        assert_relative_eq!(d, 2.0 * 0.5 * 28e9 / 3e8, epsilon = 1e-12);
        assert!((d - 93.3).abs() < 0.1);
        assert_abs_diff_eq!(rayleigh_distance(0.0, 0.0, 28e9).unwrap(), 0.0);
        let double_f = rayleigh_distance(0.5, 0.0, 56e9).unwrap();
        assert_relative_eq!(double_f, 2.0 * d, epsilon = 1e-12);
        assert!(near_field_lower_bound(0.5, 28e9).unwrap() > 0.0);
    }

    #[test]
    fn willie_noise_exact_when_no_uncertainty() {
        let nu = NoiseUncertainty::new(1.0, 1.0, 1.0).unwrap();
        let mut rng = seeded_rng(1);
        for _ in 0..100 {
            assert_eq!(nu.sample(&mut rng), 1.0);
        }
    }

    #[test]
    fn willie_noise_within_support() {
        let nu = NoiseUncertainty::new(1.0, 2.0, 1.0).unwrap();
        let mut rng = seeded_rng(2);
        for _ in 0..10_000 {
            let x = nu.sample(&mut rng);
            assert!((0.5..=2.0).contains(&x), "draw {x} outside support");
        }
    }

    #[test]
    fn willie_noise_ks_distance() {
        // Empirical CDF vs ln(x rho / sigma^2) / (2 ln rho) over 1e5 draws.
        let nu = NoiseUncertainty::new(1.0, 3.0, 1.0).unwrap();
        let mut rng = seeded_rng(4);
        let n = 100_000usize;
        let mut draws: Vec<f64> = (0..n).map(|_| nu.sample(&mut rng)).collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks: f64 = 0.0;
        for (i, x) in draws.iter().enumerate() {
            let f = nu.cdf(*x);
            let lo = i as f64 / n as f64;
            let hi = (i + 1) as f64 / n as f64;
            ks = ks.max((f - lo).abs()).max((f - hi).abs());
        }
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn willie_noise_rejects_rho_below_one() {
        assert!(NoiseUncertainty::new(1.0, 0.9, 1.0).is_err());
    }

    #[test]
    fn stream_split_is_deterministic() {
        let geom = test_geom(2, 2, 2);
        let draw = |seed, stream| {
            let mut rng = stream_rng(seed, stream);
            let paths = NfPathSet::sample(3, 0.5, 2.0, &mut rng).unwrap();
            ris_user_channel(&geom, &paths, WaveModel::NearField).unwrap()
        };
        let a = draw(42, 7);
        let b = draw(42, 7);
        assert_eq!(a, b);
        let c = draw(42, 8);
        assert_ne!(a, c);
    }

    proptest! {
        #[test]
        fn steering_vectors_unit_norm(
            theta in -1.4f64..1.4,
            phi in -1.4f64..1.4,
            m in 1usize..24,
            ny in 1usize..6,
            nz in 1usize..6,
            r in 0.05f64..50.0,
        ) {
            let d = LAMBDA / 2.0;
            let ula = ula_steering(theta, m, d, LAMBDA).unwrap();
            prop_assert!((ula.norm() - 1.0).abs() < 1e-12);
            let upa = upa_steering(theta, phi, ny, nz, d, LAMBDA).unwrap();
            prop_assert!((upa.norm() - 1.0).abs() < 1e-12);
            let nf = nf_response(theta, r, m, d, LAMBDA).unwrap();
            prop_assert!((nf.norm() - 1.0).abs() < 1e-12);
            let ff = ff_response(theta, m, d, LAMBDA).unwrap();
            prop_assert!((ff.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn noise_draws_never_leave_support(rho in 1.0f64..8.0, seed in 0u64..500) {
            let nu = NoiseUncertainty::new(2.5e-3, rho, 1.0).unwrap();
            let mut rng = seeded_rng(seed);
            let (lo, hi) = nu.support();
            for _ in 0..200 {
                let x = nu.sample(&mut rng);
                prop_assert!(x >= lo * (1.0 - 1e-12) && x <= hi * (1.0 + 1e-12));
            }
        }
    }
}
