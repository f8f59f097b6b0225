//! Scenario configuration: a declarative TOML schema covering geometry, path
//! sets, powers, covertness parameters and optimizer knobs, with dBm/dB
//! accepted at the boundary and converted to linear watts on load.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    bs_ris_channel, ris_user_channel, stream_rng, ArrayGeometry, BsRisPathSet, ChannelRealization,
    NfPath, NfPathSet, NoiseUncertainty, WaveModel,
};
use crate::covertness::{leakage_budget, CovertnessParams};
use crate::error::{Error, Result};
use crate::optimizer::OptimizerConfig;
use crate::outage::OutageModel;
use crate::units::{db_to_linear, dbm_to_watts};
use crate::SPEED_OF_LIGHT;

fn default_f_ghz() -> f64 {
    28.0
}
fn default_users() -> usize {
    3
}
fn default_j_paths() -> usize {
    3
}
fn default_bs_ris_distance() -> f64 {
    20.0
}
fn default_l_paths() -> usize {
    1
}
fn default_public_l_paths() -> usize {
    3
}
fn default_theta_range() -> [f64; 2] {
    [-1.0, 1.0]
}
fn default_range_interval() -> [f64; 2] {
    [1.0, 6.0]
}
fn default_rho() -> f64 {
    2.0
}
fn default_varsigma() -> f64 {
    0.1
}
fn default_true() -> bool {
    true
}

/// Array sizes and carrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub m_bs: usize,
    pub n_y: usize,
    pub n_z: usize,
    #[serde(default = "default_f_ghz")]
    pub f_ghz: f64,
    /// Element spacing in meters; half a wavelength when omitted.
    #[serde(default)]
    pub spacing_m: Option<f64>,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            m_bs: 4,
            n_y: 8,
            n_z: 8,
            f_ghz: default_f_ghz(),
            spacing_m: None,
        }
    }
}

/// BS-RIS link: sparse path count and the free-space reference distance for
/// the average path loss (overridable).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsRisSection {
    #[serde(default = "default_j_paths")]
    pub j_paths: usize,
    #[serde(default = "default_bs_ris_distance")]
    pub distance_m: f64,
    /// Direct override of the average path loss `D_pl` (linear).
    #[serde(default)]
    pub d_pl_override: Option<f64>,
}

impl Default for BsRisSection {
    fn default() -> Self {
        Self {
            j_paths: default_j_paths(),
            distance_m: default_bs_ris_distance(),
            d_pl_override: None,
        }
    }
}

/// A positioned node in the RIS near field (Bob or Willie).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSection {
    /// Angle from the RIS broadside, radians.
    pub theta_rad: f64,
    /// Range from the RIS center, meters.
    pub range_m: f64,
    /// Resolvable paths; 1 means a deterministic line-of-sight path.
    #[serde(default = "default_l_paths")]
    pub l_paths: usize,
}

/// Sampling ranges for the public users' scattered paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PublicUsersSection {
    #[serde(default = "default_public_l_paths")]
    pub l_paths: usize,
    #[serde(default = "default_theta_range")]
    pub theta_range_rad: [f64; 2],
    #[serde(default = "default_range_interval")]
    pub range_m: [f64; 2],
}

impl Default for PublicUsersSection {
    fn default() -> Self {
        Self {
            l_paths: default_public_l_paths(),
            theta_range_rad: default_theta_range(),
            range_m: default_range_interval(),
        }
    }
}

/// Noise powers at user receivers and the warden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub sigma_k2_dbm: f64,
    pub sigma_w2_dbm: f64,
    /// Warden noise uncertainty coefficient `ρ >= 1` (linear).
    #[serde(default = "default_rho")]
    pub rho: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            sigma_k2_dbm: -60.0,
            sigma_w2_dbm: -60.0,
            rho: default_rho(),
        }
    }
}

/// Covertness level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovertnessSection {
    #[serde(default = "default_varsigma")]
    pub varsigma: f64,
}

impl Default for CovertnessSection {
    fn default() -> Self {
        Self {
            varsigma: default_varsigma(),
        }
    }
}

/// Power budget and QoS floors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerSection {
    pub p_max_dbm: f64,
    #[serde(default)]
    pub bob_min_rate: f64,
    #[serde(default)]
    pub public_min_rate: f64,
}

impl Default for PowerSection {
    fn default() -> Self {
        Self {
            p_max_dbm: 30.0,
            bob_min_rate: 0.0,
            public_min_rate: 0.5,
        }
    }
}

/// Optimizer iteration caps and tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub eps: f64,
    pub j_sca_max: usize,
    pub q_sca_max: usize,
    pub s_ao_max: usize,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        Self {
            eps: 1e-4,
            j_sca_max: 30,
            q_sca_max: 30,
            s_ao_max: 100,
        }
    }
}

/// Full scenario: everything needed to draw channels and run the optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default = "default_users")]
    pub users: usize,
    #[serde(default)]
    pub bs_ris: BsRisSection,
    #[serde(default = "default_bob")]
    pub bob: NodeSection,
    #[serde(default = "default_willie")]
    pub willie: NodeSection,
    #[serde(default)]
    pub public: PublicUsersSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub covertness: CovertnessSection,
    #[serde(default)]
    pub power: PowerSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
}

fn default_bob() -> NodeSection {
    NodeSection {
        theta_rad: 0.35,
        range_m: 1.0,
        l_paths: 1,
    }
}

fn default_willie() -> NodeSection {
    NodeSection {
        theta_rad: 0.35,
        range_m: 2.0,
        l_paths: 1,
    }
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            geometry: GeometrySection::default(),
            users: default_users(),
            bs_ris: BsRisSection::default(),
            bob: default_bob(),
            willie: default_willie(),
            public: PublicUsersSection::default(),
            noise: NoiseSection::default(),
            covertness: CovertnessSection::default(),
            power: PowerSection::default(),
            optimizer: OptimizerSection::default(),
        }
    }
}

impl SystemConfig {
    /// Validate cross-field invariants.
    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::Spec("users: at least one user (Bob) is required".into()));
        }
        if self.geometry.m_bs == 0 || self.geometry.n_y == 0 || self.geometry.n_z == 0 {
            return Err(Error::Spec("geometry: array sizes must be >= 1".into()));
        }
        if self.geometry.f_ghz <= 0.0 {
            return Err(Error::Spec("geometry.f_ghz: carrier must be positive".into()));
        }
        if self.bs_ris.j_paths == 0 {
            return Err(Error::Spec("bs_ris.j_paths: at least one path".into()));
        }
        if self.bob.range_m <= 0.0 || self.willie.range_m <= 0.0 {
            return Err(Error::Spec("node ranges must be positive".into()));
        }
        if self.bob.l_paths == 0 || self.willie.l_paths == 0 || self.public.l_paths == 0 {
            return Err(Error::Spec("path counts must be >= 1".into()));
        }
        if self.public.range_m[0] <= 0.0 || self.public.range_m[1] < self.public.range_m[0] {
            return Err(Error::Spec("public.range_m: need 0 < min <= max".into()));
        }
        if self.noise.rho <= 1.0 {
            return Err(Error::Spec(
                "noise.rho: must exceed 1; rho = 1 leaves the warden's noise exactly known and \
                 the detection-error closed forms undefined"
                    .into(),
            ));
        }
        if !(0.0..0.5).contains(&self.covertness.varsigma) {
            return Err(Error::Spec("covertness.varsigma: must lie in [0, 0.5)".into()));
        }
        if self.optimizer.eps <= 0.0 {
            return Err(Error::Spec("optimizer.eps: must be positive".into()));
        }
        if self.optimizer.s_ao_max == 0 || self.optimizer.j_sca_max == 0 || self.optimizer.q_sca_max == 0
        {
            return Err(Error::Spec("optimizer iteration caps must be >= 1".into()));
        }
        Ok(())
    }

    pub fn array_geometry(&self) -> Result<ArrayGeometry> {
        let f = self.geometry.f_ghz * 1e9;
        match self.geometry.spacing_m {
            Some(d) => ArrayGeometry::new(self.geometry.m_bs, self.geometry.n_y, self.geometry.n_z, d, f),
            None => ArrayGeometry::half_wavelength(
                self.geometry.m_bs,
                self.geometry.n_y,
                self.geometry.n_z,
                f,
            ),
        }
    }

    /// Average path loss `D_pl`: free-space at the configured BS-RIS
    /// distance unless overridden.
    pub fn d_pl(&self) -> Result<f64> {
        if let Some(d) = self.bs_ris.d_pl_override {
            return Ok(d);
        }
        let lambda = SPEED_OF_LIGHT / (self.geometry.f_ghz * 1e9);
        let x = lambda / (4.0 * std::f64::consts::PI * self.bs_ris.distance_m);
        Ok(x * x)
    }

    pub fn sigma_k2(&self) -> f64 {
        dbm_to_watts(self.noise.sigma_k2_dbm)
    }

    pub fn p_max(&self) -> f64 {
        dbm_to_watts(self.power.p_max_dbm)
    }

    pub fn noise_uncertainty(&self) -> Result<NoiseUncertainty> {
        NoiseUncertainty::new(
            dbm_to_watts(self.noise.sigma_w2_dbm),
            self.noise.rho,
            self.sigma_k2(),
        )
    }

    pub fn covertness_params(&self) -> Result<CovertnessParams> {
        CovertnessParams::new(
            self.noise.rho,
            dbm_to_watts(self.noise.sigma_w2_dbm),
            self.covertness.varsigma,
            self.p_max(),
        )
    }

    /// Per-user QoS floors: Bob first, then the public users.
    pub fn r_min(&self) -> Vec<f64> {
        let mut v = vec![self.power.bob_min_rate];
        v.extend(std::iter::repeat(self.power.public_min_rate).take(self.users - 1));
        v
    }

    pub fn optimizer_config(&self) -> Result<OptimizerConfig> {
        let p_leak = leakage_budget(&self.covertness_params()?)?;
        let mut cfg = OptimizerConfig::new(
            self.p_max(),
            self.r_min(),
            vec![self.sigma_k2(); self.users],
            p_leak,
        );
        cfg.eps = self.optimizer.eps;
        cfg.j_sca_max = self.optimizer.j_sca_max;
        cfg.q_sca_max = self.optimizer.q_sca_max;
        cfg.s_ao_max = self.optimizer.s_ao_max;
        Ok(cfg)
    }

    /// Statistical outage model for Bob under the Rayleigh-cascade analysis:
    /// per-element distances from the exact element geometry and
    /// `σ_br² = D_pl` so the Gaussian model matches the geometric channel's
    /// per-entry variance.
    pub fn outage_model(&self, gamma_th_db: f64) -> Result<OutageModel> {
        let geom = self.array_geometry()?;
        let n = geom.n();
        let (theta, r) = (self.bob.theta_rad, self.bob.range_m);
        let r_kn: Vec<f64> = (1..=n)
            .map(|idx| {
                let delta = (2.0 * idx as f64 - n as f64 - 1.0) / 2.0;
                (r * r + delta * delta * geom.d * geom.d
                    - 2.0 * r * delta * geom.d * theta.sin())
                .sqrt()
            })
            .collect();
        let th = db_to_linear(gamma_th_db);
        Ok(OutageModel {
            sigma_br2: self.d_pl()?,
            beta: 1.0,
            r_kn,
            lambda: geom.lambda(),
            sigma_k2: self.sigma_k2(),
            gamma_th_c: th,
            gamma_th_p: th,
        })
    }

    /// Draw path sets for one node.
    fn node_paths<R: Rng + ?Sized>(node: &NodeSection, rng: &mut R) -> Result<NfPathSet> {
        if node.l_paths == 1 {
            return Ok(NfPathSet::los(node.theta_rad, node.range_m));
        }
        // line-of-sight at the configured position plus sampled scatterers
        // around it
        let mut set = NfPathSet::los(node.theta_rad, node.range_m);
        let extra = NfPathSet::sample(
            node.l_paths - 1,
            (node.range_m * 0.5).max(0.05),
            node.range_m * 1.5,
            rng,
        )?;
        set.paths.extend(extra.paths);
        Ok(set)
    }

    /// Draw one complete channel realization on stream `stream` of `seed`.
    ///
    /// Draw order is fixed (BS-RIS paths, Bob, Willie, public users) so a
    /// given `(seed, stream)` pair is reproducible bit-for-bit regardless of
    /// which realizations run in parallel.
    pub fn sample_realization(
        &self,
        seed: u64,
        stream: u64,
        model: WaveModel,
    ) -> Result<ChannelRealization> {
        self.validate()?;
        let geometry = self.array_geometry()?;
        let mut rng = stream_rng(seed, stream);

        let bs_paths = BsRisPathSet::sample(self.bs_ris.j_paths, self.d_pl()?, &mut rng)?;
        let h_br = bs_ris_channel(&geometry, &bs_paths)?;

        let bob_paths = Self::node_paths(&self.bob, &mut rng)?;
        let g_rb = ris_user_channel(&geometry, &bob_paths, model)?;
        let willie_paths = Self::node_paths(&self.willie, &mut rng)?;
        let g_rw = ris_user_channel(&geometry, &willie_paths, model)?;

        let mut g_ru = Vec::with_capacity(self.users - 1);
        for _ in 1..self.users {
            let theta = rng.gen_range(self.public.theta_range_rad[0]..=self.public.theta_range_rad[1]);
            let range = rng.gen_range(self.public.range_m[0]..=self.public.range_m[1]);
            let node = NodeSection {
                theta_rad: theta,
                range_m: range,
                l_paths: self.public.l_paths,
            };
            let paths = Self::node_paths(&node, &mut rng)?;
            g_ru.push(ris_user_channel(&geometry, &paths, model)?);
        }

        let real = ChannelRealization {
            geometry,
            h_br,
            g_rb,
            g_rw,
            g_ru,
            seed,
            stream,
        };
        real.validate()?;
        Ok(real)
    }

    /// Copy with a different RIS size (factored into the squarest `n_y x n_z`).
    pub fn with_n_ris(&self, n: usize) -> Result<Self> {
        let (n_y, n_z) = factor_ris(n)?;
        let mut c = self.clone();
        c.geometry.n_y = n_y;
        c.geometry.n_z = n_z;
        Ok(c)
    }

    /// Copy with a different RIS-Willie range.
    pub fn with_willie_range(&self, range_m: f64) -> Self {
        let mut c = self.clone();
        c.willie.range_m = range_m;
        c
    }

    /// Copy with a different power budget.
    pub fn with_p_max_dbm(&self, p_max_dbm: f64) -> Self {
        let mut c = self.clone();
        c.power.p_max_dbm = p_max_dbm;
        c
    }
}

/// Factor an element count into the squarest RIS grid.
pub fn factor_ris(n: usize) -> Result<(usize, usize)> {
    if n == 0 {
        return Err(Error::Spec("RIS size must be positive".into()));
    }
    let mut best = (1, n);
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            best = (d, n / d);
        }
        d += 1;
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Experiment section and scenario files
// ---------------------------------------------------------------------------

/// Experiment families, one per reported figure family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Convergence,
    RateVsDistance,
    RateVsN,
    RateVsPower,
    DepVsThreshold,
    OpVsPower,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Convergence,
        ExperimentKind::RateVsDistance,
        ExperimentKind::RateVsN,
        ExperimentKind::RateVsPower,
        ExperimentKind::DepVsThreshold,
        ExperimentKind::OpVsPower,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::RateVsDistance => "rate_vs_distance",
            ExperimentKind::RateVsN => "rate_vs_n",
            ExperimentKind::RateVsPower => "rate_vs_power",
            ExperimentKind::DepVsThreshold => "dep_vs_threshold",
            ExperimentKind::OpVsPower => "op_vs_power",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Spec(format!("experiment.kind: unknown kind '{s}'")))
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}
fn default_designer() -> String {
    "ao".into()
}
fn default_mc_trials() -> usize {
    100_000
}
fn default_alpha_c() -> f64 {
    0.2
}
fn default_gamma_th_db() -> f64 {
    -10.0
}

/// One experiment request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Sweep grid; meaning depends on the kind (RIS sizes, meters, dBm or
    /// threshold-to-noise ratios). Kind defaults apply when omitted.
    #[serde(default)]
    pub sweep: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Designer registry name used by the rate experiments.
    #[serde(default = "default_designer")]
    pub designer: String,
    /// Also run the far-field baseline for comparison curves.
    #[serde(default = "default_true")]
    pub compare_far_field: bool,
    /// Monte-Carlo trials for the DEP and outage validations.
    #[serde(default = "default_mc_trials")]
    pub mc_trials: usize,
    /// Common-stream power fraction for the outage model.
    #[serde(default = "default_alpha_c")]
    pub alpha_c: f64,
    /// SINR threshold for the outage experiments, dB.
    #[serde(default = "default_gamma_th_db")]
    pub gamma_th_db: f64,
    /// Fixed leaked power (relative to the warden noise) for the DEP sweep;
    /// computed from a baseline design when omitted.
    #[serde(default)]
    pub aleph_over_sigma_w2: Option<f64>,
    /// Permit RIS grids beyond the desk-scale ceiling (slow).
    #[serde(default)]
    pub paper_scale: bool,
}

/// Largest RIS size allowed without the paper-scale flag.
pub const DESK_SCALE_N_MAX: usize = 64;

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            sweep: Vec::new(),
            seeds: default_seeds(),
            designer: default_designer(),
            compare_far_field: true,
            mc_trials: default_mc_trials(),
            alpha_c: default_alpha_c(),
            gamma_th_db: default_gamma_th_db(),
            aleph_over_sigma_w2: None,
            paper_scale: false,
        }
    }

    /// Desk-scale default sweep for each kind.
    pub fn default_sweep(kind: ExperimentKind) -> Vec<f64> {
        match kind {
            ExperimentKind::Convergence => vec![16.0, 32.0],
            ExperimentKind::RateVsN => vec![16.0, 32.0, 64.0],
            ExperimentKind::RateVsDistance => (1..=10).map(|d| d as f64).collect(),
            ExperimentKind::RateVsPower => (0..6).map(|i| 10.0 + 5.0 * i as f64).collect(),
            // threshold-to-nominal-noise ratios spanning past both support edges
            ExperimentKind::DepVsThreshold => (0..25)
                .map(|i| 0.4 + (2.4 - 0.4) * i as f64 / 24.0)
                .collect(),
            ExperimentKind::OpVsPower => (0..6).map(|i| 10.0 + 5.0 * i as f64).collect(),
        }
    }

    /// The sweep grid actually used.
    pub fn effective_sweep(&self) -> Vec<f64> {
        if self.sweep.is_empty() {
            Self::default_sweep(self.kind)
        } else {
            self.sweep.clone()
        }
    }

    pub fn validate(&self, config: &SystemConfig) -> Result<()> {
        config.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Spec("experiment.seeds: seed list must be nonempty".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::Spec("experiment.seeds: seeds must be distinct".into()));
        }
        let sweep = self.effective_sweep();
        if sweep.is_empty() {
            return Err(Error::Spec("experiment.sweep: grid must be nonempty".into()));
        }
        if !sweep.iter().all(|v| v.is_finite()) {
            return Err(Error::Spec("experiment.sweep: grid values must be finite".into()));
        }
        if crate::optimizer::designer_by_name(&self.designer).is_none() {
            return Err(Error::Spec(format!(
                "experiment.designer: unknown designer '{}'",
                self.designer
            )));
        }
        match self.kind {
            ExperimentKind::Convergence | ExperimentKind::RateVsN => {
                for v in &sweep {
                    if *v < 1.0 || v.fract() != 0.0 {
                        return Err(Error::Spec(
                            "experiment.sweep: RIS sizes must be positive integers".into(),
                        ));
                    }
                    if *v as usize > DESK_SCALE_N_MAX && !self.paper_scale {
                        return Err(Error::Spec(format!(
                            "experiment.sweep: N = {v} exceeds the desk-scale ceiling \
                             ({DESK_SCALE_N_MAX}); pass --paper-scale to allow it"
                        )));
                    }
                }
            }
            ExperimentKind::RateVsDistance => {
                if sweep.iter().any(|v| *v <= 0.0) {
                    return Err(Error::Spec("experiment.sweep: distances must be positive".into()));
                }
            }
            ExperimentKind::DepVsThreshold => {
                if sweep.iter().any(|v| *v <= 0.0) {
                    return Err(Error::Spec(
                        "experiment.sweep: threshold ratios must be positive".into(),
                    ));
                }
            }
            ExperimentKind::RateVsPower | ExperimentKind::OpVsPower => {}
        }
        if self.mc_trials < 10_000 {
            return Err(Error::Spec("experiment.mc_trials: at least 10000 trials".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha_c) {
            return Err(Error::Spec("experiment.alpha_c: must lie in [0, 1]".into()));
        }
        if self.kind == ExperimentKind::Convergence || self.kind == ExperimentKind::RateVsN {
            // RIS sizes replace the configured grid, nothing else to check
        }
        Ok(())
    }
}

/// A whole scenario file: system tables plus one experiment table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(flatten)]
    pub system: SystemConfig,
    pub experiment: ExperimentSpec,
}

impl ScenarioFile {
    /// Parse and validate a scenario from TOML text.
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text)
            .map_err(|e| Error::Spec(format!("scenario parse error: {e}")))?;
        file.experiment.validate(&file.system)?;
        Ok(file)
    }

    /// Load a scenario from disk.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Spec(msg) => Error::Spec(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_config_validates() {
        let cfg = SystemConfig::default();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.users, 3);
        assert_eq!(cfg.array_geometry().unwrap().n(), 64);
        assert_relative_eq!(cfg.p_max(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn d_pl_free_space() {
        let cfg = SystemConfig::default();
        let lambda = SPEED_OF_LIGHT / 28e9;
        let expect = (lambda / (4.0 * std::f64::consts::PI * 20.0)).powi(2);
        assert_relative_eq!(cfg.d_pl().unwrap(), expect, epsilon = 1e-15);
        let mut over = cfg;
        over.bs_ris.d_pl_override = Some(1e-7);
        assert_eq!(over.d_pl().unwrap(), 1e-7);
    }

    #[test]
    fn realization_is_deterministic_and_sized() {
        let cfg = SystemConfig::default();
        let a = cfg.sample_realization(9, 4, WaveModel::NearField).unwrap();
        let b = cfg.sample_realization(9, 4, WaveModel::NearField).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_users(), 3);
        assert_eq!(a.h_br.nrows(), 64);
        assert_eq!(a.h_br.ncols(), 4);
        let c = cfg.sample_realization(9, 5, WaveModel::NearField).unwrap();
        assert_ne!(a, c);
        let ff = cfg.sample_realization(9, 4, WaveModel::FarField).unwrap();
        assert_ne!(a.g_rb, ff.g_rb);
        assert_eq!(a.h_br, ff.h_br); // BS-RIS link is far-field either way
    }

    #[test]
    fn factoring_ris_sizes() {
        assert_eq!(factor_ris(64).unwrap(), (8, 8));
        assert_eq!(factor_ris(512).unwrap(), (16, 32));
        assert_eq!(factor_ris(7).unwrap(), (1, 7));
        assert!(factor_ris(0).is_err());
    }

    #[test]
    fn scenario_file_round_trip() {
        let text = r#"
users = 2

[geometry]
m_bs = 4
n_y = 4
n_z = 4

[power]
p_max_dbm = 20.0

[experiment]
kind = "rate_vs_n"
sweep = [16, 32]
seeds = [0, 1]
"#;
        let file = ScenarioFile::from_toml(text).unwrap();
        assert_eq!(file.system.users, 2);
        assert_eq!(file.experiment.kind, ExperimentKind::RateVsN);
        assert_eq!(file.experiment.effective_sweep(), vec![16.0, 32.0]);
    }

    #[test]
    fn scenario_rejects_bad_fields() {
        // unknown key
        assert!(ScenarioFile::from_toml(
            "nonsense = 1\n[experiment]\nkind = \"convergence\""
        )
        .is_err());
        // duplicate seeds
        let dup = r#"
[experiment]
kind = "convergence"
seeds = [1, 1]
"#;
        assert!(matches!(ScenarioFile::from_toml(dup), Err(Error::Spec(_))));
        // empty seeds
        let empty = r#"
[experiment]
kind = "convergence"
seeds = []
"#;
        assert!(matches!(ScenarioFile::from_toml(empty), Err(Error::Spec(_))));
        // paper-scale gate
        let big = r#"
[experiment]
kind = "rate_vs_n"
sweep = [256]
"#;
        let err = ScenarioFile::from_toml(big).unwrap_err();
        assert!(err.to_string().contains("paper-scale"));
        // unknown designer
        let bad_designer = r#"
[experiment]
kind = "convergence"
designer = "genie"
"#;
        assert!(ScenarioFile::from_toml(bad_designer).is_err());
    }

    #[test]
    fn experiment_kind_names_round_trip() {
        for kind in ExperimentKind::ALL {
            let parsed: ExperimentKind = kind.name().parse().unwrap();
            assert_eq!(parsed, kind);
        }
        assert!("nope".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn outage_model_distances_match_geometry() {
        let cfg = SystemConfig::default();
        let model = cfg.outage_model(-10.0).unwrap();
        assert_eq!(model.r_kn.len(), 64);
        assert_relative_eq!(model.gamma_th_c, 0.1, epsilon = 1e-12);
        // the central element distance is close to the configured range
        let mid = model.r_kn[31];
        assert!((mid - cfg.bob.range_m).abs() < 0.01, "mid distance {mid}");
        assert!(model.effective_variance().unwrap() > 0.0);
    }

    #[test]
    fn qos_vector_layout() {
        let mut cfg = SystemConfig::default();
        cfg.power.bob_min_rate = 0.1;
        cfg.power.public_min_rate = 0.7;
        assert_eq!(cfg.r_min(), vec![0.1, 0.7, 0.7]);
    }
}
