//! Covert sum-rate maximization.
//!
//! The master problem maximizes `Σ_k (℘_{c,k} + R_{p,k})` over the BS
//! precoders, the RIS phases and the common-rate allocation, subject to the
//! common-rate cap, per-user QoS floors, the BS power budget, unit-modulus
//! RIS entries and the covertness leakage budget. It is driven by
//! alternating optimization: an SCA loop over the RIS phases (relaxed to
//! `|ψ_n| <= 1`, then projected back to unit modulus) alternating with an
//! SCA loop over the BS precoders.
//!
//! Beyond the per-iteration SCA lower-bound guarantee, the outer driver only
//! ever accepts a candidate that does not decrease the recomputed true sum
//! rate, so the reported trace is nondecreasing by construction.

mod subproblem;

pub use subproblem::{
    build_bs_subproblem, build_ris_subproblem, BsAnchor, BsPoint, BsSubproblem, RisAnchor,
    RisPoint, RisSubproblem, SubproblemConfig, LEAK_MARGIN,
};

use std::time::Instant;

use rand::Rng;

use crate::channel::{stream_rng, ChannelRealization};
use crate::error::{Error, Result};
use crate::rsma::{rates, BeamformingState, RateReport};
use crate::solver::{solve_convex, SolverOptions};
use crate::{CVector, C64};

/// Reserved RNG stream for optimizer initialization draws.
const INIT_STREAM: u64 = 0xFFFF_0001;

/// Tuning knobs of the alternating optimizer.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    /// BS power budget, watts.
    pub p_max: f64,
    /// Per-user QoS floors, bits/s/Hz.
    pub r_min: Vec<f64>,
    /// Per-user receiver noise powers, watts.
    pub sigma_k2: Vec<f64>,
    /// Covertness leakage budget, watts.
    pub p_leak: f64,
    /// Convergence threshold on the sum rate, bits/s/Hz.
    pub eps: f64,
    /// BS SCA iteration cap.
    pub j_sca_max: usize,
    /// RIS SCA iteration cap.
    pub q_sca_max: usize,
    /// Outer AO iteration cap.
    pub s_ao_max: usize,
    /// Fraction of power given to the common stream at initialization.
    pub init_common_fraction: f64,
    /// Fraction of the power budget used at initialization.
    pub init_power_fraction: f64,
    /// Convex solver options.
    pub solver: SolverOptions,
}

impl OptimizerConfig {
    pub fn new(p_max: f64, r_min: Vec<f64>, sigma_k2: Vec<f64>, p_leak: f64) -> Self {
        Self {
            p_max,
            r_min,
            sigma_k2,
            p_leak,
            eps: 1e-4,
            j_sca_max: 30,
            q_sca_max: 30,
            s_ao_max: 100,
            init_common_fraction: 0.2,
            init_power_fraction: 0.9,
            solver: SolverOptions::default(),
        }
    }

    fn num_users(&self) -> usize {
        self.r_min.len()
    }

    fn subproblem(&self) -> SubproblemConfig {
        SubproblemConfig {
            p_max: self.p_max,
            p_leak: self.p_leak,
            r_min: self.r_min.clone(),
        }
    }
}

/// One outer-iteration record of the AO run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub outer_iter: usize,
    /// Inner SCA iterations consumed in this outer iteration (RIS + BS).
    pub inner_iter: usize,
    /// True sum rate after the iteration, bits/s/Hz.
    pub r_sum: f64,
    /// Largest constraint-audit residual.
    pub max_residual: f64,
    /// Leaked power at the warden, watts.
    pub aleph_watts: f64,
    /// Wall-clock spent in this outer iteration, milliseconds.
    pub ms_elapsed: f64,
}

/// Convergence trace of one AO run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OptimizerTrace {
    pub rows: Vec<TraceRow>,
    pub eps: f64,
    pub converged: bool,
}

impl OptimizerTrace {
    /// True if `r_sum` never drops by more than `tol` between rows.
    pub fn is_nondecreasing(&self, tol: f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].r_sum >= w[0].r_sum - tol)
    }

    /// CSV serialization (schema v1). `ms_elapsed` carries wall-clock time
    /// and is not reproducible across runs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# nfcovert optimizer trace v1\n");
        out.push_str("outer_iter,inner_iter,r_sum,max_residual,aleph_watts,ms_elapsed\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.outer_iter, r.inner_iter, r.r_sum, r.max_residual, r.aleph_watts, r.ms_elapsed
            ));
        }
        out
    }
}

/// Post-hoc audit of a design against every constraint family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateAudit {
    pub power: f64,
    pub p_max: f64,
    /// `max(0, Σ℘ - min_k R_{c,k})`.
    pub common_cap_residual: f64,
    /// `max_k max(0, R_min - (℘_k + R_{p,k}))`.
    pub qos_residual: f64,
    pub aleph: f64,
    pub p_leak: f64,
    pub leakage_ok: bool,
    /// Phases are stored as angles, so the reconstructed RIS entries have
    /// unit modulus exactly.
    pub unit_modulus_exact: bool,
    pub max_residual: f64,
}

impl StateAudit {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual <= tol && self.leakage_ok && self.unit_modulus_exact
    }
}

/// Result of an AO run or a baseline design.
#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub state: BeamformingState,
    pub report: RateReport,
    pub trace: OptimizerTrace,
    pub audit: StateAudit,
}

impl DesignOutcome {
    pub fn r_sum(&self) -> f64 {
        self.report.r_total
    }
}

// ---------------------------------------------------------------------------
// Shared evaluation helpers
// ---------------------------------------------------------------------------

fn noise_normalized_cascaded(
    real: &ChannelRealization,
    theta: &[f64],
    sigma_k2: &[f64],
) -> Result<Vec<CVector>> {
    let mut chans = real.cascaded_all(theta)?;
    for (h, sig) in chans.iter_mut().zip(sigma_k2) {
        *h /= C64::new(sig.sqrt(), 0.0);
    }
    Ok(chans)
}

fn willie_gain(real: &ChannelRealization, theta: &[f64]) -> Result<f64> {
    Ok(real.cascaded_willie(theta)?.norm_squared())
}

/// Recompute the true rates for a candidate design and top the common-rate
/// allocation up to the decodable budget (surplus goes to Bob).
fn evaluate_candidate(
    real: &ChannelRealization,
    w_c: CVector,
    w: Vec<CVector>,
    theta: Vec<f64>,
    mut alloc: Vec<f64>,
    cfg: &OptimizerConfig,
) -> Result<(BeamformingState, RateReport)> {
    let mut state = BeamformingState {
        w_c,
        w,
        theta,
        common_alloc: alloc.clone(),
    };
    let channels = real.cascaded_all(&state.theta)?;
    let rep = rates(&state, &channels, &cfg.sigma_k2)?;
    let cap = rep.common_capacity().max(0.0);
    let total: f64 = alloc.iter().sum();
    let surplus = cap - total;
    if surplus > 0.0 {
        alloc[0] += surplus;
    } else if surplus < 0.0 {
        alloc[0] = (alloc[0] + surplus).max(0.0);
    }
    state.common_alloc = alloc;
    let rep = rates(&state, &channels, &cfg.sigma_k2)?;
    Ok((state, rep))
}

/// Audit every constraint family for a finished design.
pub fn audit_state(
    real: &ChannelRealization,
    state: &BeamformingState,
    report: &RateReport,
    cfg: &OptimizerConfig,
) -> Result<StateAudit> {
    let power = state.transmit_power();
    let power_residual = (power - cfg.p_max).max(0.0);
    let cap = report.common_capacity();
    let alloc_sum: f64 = state.common_alloc.iter().sum();
    let common_cap_residual = (alloc_sum - cap).max(0.0);
    let qos_residual = (0..state.num_users())
        .map(|k| (cfg.r_min[k] - (state.common_alloc[k] + report.r_p[k])).max(0.0))
        .fold(0.0, f64::max);
    let aleph = power * willie_gain(real, &state.theta)?;
    let leakage_ok = aleph < cfg.p_leak;
    let max_residual = power_residual.max(common_cap_residual).max(qos_residual);
    Ok(StateAudit {
        power,
        p_max: cfg.p_max,
        common_cap_residual,
        qos_residual,
        aleph,
        p_leak: cfg.p_leak,
        leakage_ok,
        unit_modulus_exact: true,
        max_residual,
    })
}

// ---------------------------------------------------------------------------
// BS-precoder SCA loop (Algorithm 1)
// ---------------------------------------------------------------------------

/// Result of one BS SCA loop.
#[derive(Debug)]
pub struct BsScaResult {
    pub w_c: CVector,
    pub w: Vec<CVector>,
    pub alloc: Vec<f64>,
    /// Surrogate objective per SCA iteration.
    pub surrogate_trace: Vec<f64>,
    pub iterations: usize,
}

/// Iterate the convexified BS subproblem at fixed RIS phases until the
/// surrogate sum rate stalls or the iteration cap is hit.
pub fn sca_bs_loop(
    real: &ChannelRealization,
    theta: &[f64],
    w0: (&CVector, &[CVector]),
    cfg: &OptimizerConfig,
) -> Result<BsScaResult> {
    let channels = noise_normalized_cascaded(real, theta, &cfg.sigma_k2)?;
    let gain_w = willie_gain(real, theta)?;

    // scale the incoming anchor into the power and leakage budgets
    let mut w_c = w0.0.clone();
    let mut w: Vec<CVector> = w0.1.to_vec();
    scale_into_budgets(&mut w_c, &mut w, cfg, gain_w);

    let mut surrogate_trace = Vec::new();
    let mut alloc = vec![0.0; cfg.num_users()];
    let mut prev = f64::NEG_INFINITY;
    let mut iterations = 0;
    for j in 0..cfg.j_sca_max {
        let anchor = BsAnchor {
            channels: &channels,
            willie_gain: gain_w,
            w_c: &w_c,
            w: &w,
        };
        let sub = build_bs_subproblem(&anchor, &cfg.subproblem())?;
        debug_assert!(
            sub.anchor_tightness < 1e-8,
            "SCA bound not tight at anchor: {}",
            sub.anchor_tightness
        );
        if j == 0 {
            prev = sub.anchor_objective;
        }
        let sol = solve_convex(&sub.program, Some(&sub.warm), &cfg.solver)?;
        let point = sub.extract(&sol.x, sol.objective);
        iterations = j + 1;
        surrogate_trace.push(point.objective);
        w_c = point.w_c;
        w = point.w;
        alloc = point.alloc;
        if (point.objective - prev).abs() <= cfg.eps {
            break;
        }
        prev = point.objective;
    }
    Ok(BsScaResult {
        w_c,
        w,
        alloc,
        surrogate_trace,
        iterations,
    })
}

fn scale_into_budgets(w_c: &mut CVector, w: &mut [CVector], cfg: &OptimizerConfig, gain_w: f64) {
    let power = w_c.norm_squared() + w.iter().map(|x| x.norm_squared()).sum::<f64>();
    if power <= 0.0 {
        return;
    }
    let mut scale2: f64 = (cfg.p_max * (1.0 - 1e-9) / power).min(1.0);
    if gain_w > 0.0 {
        scale2 = scale2.min(0.9 * LEAK_MARGIN * cfg.p_leak / (gain_w * power));
    }
    if scale2 < 1.0 {
        let s = C64::new(scale2.sqrt(), 0.0);
        *w_c *= s;
        for wk in w.iter_mut() {
            *wk *= s;
        }
    }
}

// ---------------------------------------------------------------------------
// RIS-phase SCA loop
// ---------------------------------------------------------------------------

/// Result of one RIS SCA loop (still relaxed, before projection).
#[derive(Debug)]
pub struct RisScaResult {
    pub psi: CVector,
    pub surrogate_trace: Vec<f64>,
    pub iterations: usize,
}

/// Iterate the convexified RIS subproblem at fixed precoders.
pub fn sca_ris_loop(
    real: &ChannelRealization,
    psi0: &CVector,
    w_c: &CVector,
    w: &[CVector],
    cfg: &OptimizerConfig,
) -> Result<RisScaResult> {
    let mut psi = psi0.clone();
    // keep the anchor inside the relaxed modulus ball
    for p in psi.iter_mut() {
        let r = p.norm();
        if r > 1.0 {
            *p /= C64::new(r, 0.0);
        }
    }
    let g_users: Vec<&CVector> = (0..real.num_users()).map(|k| real.user_channel(k)).collect();
    let mut surrogate_trace = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    let mut iterations = 0;
    for q in 0..cfg.q_sca_max {
        let anchor = RisAnchor {
            h_br: &real.h_br,
            g_users: g_users.clone(),
            g_rw: &real.g_rw,
            w_c,
            w,
            sigma_k2: &cfg.sigma_k2,
            psi: &psi,
        };
        let sub = build_ris_subproblem(&anchor, &cfg.subproblem())?;
        debug_assert!(
            sub.anchor_tightness < 1e-8,
            "SCA bound not tight at RIS anchor: {}",
            sub.anchor_tightness
        );
        if q == 0 {
            prev = sub.anchor_objective;
        }
        let sol = solve_convex(&sub.program, Some(&sub.warm), &cfg.solver)?;
        let point = sub.extract(&sol.x, sol.objective);
        iterations = q + 1;
        surrogate_trace.push(point.objective);
        psi = point.psi;
        if (point.objective - prev).abs() <= cfg.eps {
            break;
        }
        prev = point.objective;
    }
    Ok(RisScaResult {
        psi,
        surrogate_trace,
        iterations,
    })
}

/// Recover RIS phase angles from a relaxed solution: `θ_n = arg(ψ_n)`.
/// Entries with vanishing modulus get phase zero and are flagged.
pub fn project_unit_modulus(psi: &CVector) -> (Vec<f64>, Vec<usize>) {
    let mut theta = Vec::with_capacity(psi.len());
    let mut flagged = Vec::new();
    for (i, p) in psi.iter().enumerate() {
        if p.norm() < 1e-12 {
            theta.push(0.0);
            flagged.push(i);
        } else {
            theta.push(p.arg().rem_euclid(2.0 * std::f64::consts::PI));
        }
    }
    (theta, flagged)
}

/// Blend projected phases back toward a known leak-feasible phase vector
/// until the covertness budget holds again.
fn restore_leak_feasibility(
    real: &ChannelRealization,
    theta_prev: &[f64],
    theta_new: Vec<f64>,
    p_bs: f64,
    budget: f64,
) -> Result<Vec<f64>> {
    let feasible = |theta: &[f64]| -> Result<bool> {
        Ok(p_bs * willie_gain(real, theta)? < budget)
    };
    if feasible(&theta_new)? {
        return Ok(theta_new);
    }
    let mut beta = 0.5f64;
    for _ in 0..60 {
        let blended: Vec<f64> = theta_prev
            .iter()
            .zip(&theta_new)
            .map(|(a, b)| {
                let z = C64::from_polar(1.0 - beta, *a) + C64::from_polar(beta, *b);
                if z.norm() < 1e-12 {
                    *a
                } else {
                    z.arg().rem_euclid(2.0 * std::f64::consts::PI)
                }
            })
            .collect();
        if feasible(&blended)? {
            return Ok(blended);
        }
        beta *= 0.5;
    }
    Ok(theta_prev.to_vec())
}

// ---------------------------------------------------------------------------
// AO driver (Algorithm 2)
// ---------------------------------------------------------------------------

/// Jointly optimize BS precoders and RIS phases by alternating optimization.
///
/// Initialization: seeded uniform RIS phases and an MRT precoder stack
/// scaled into the power and leakage budgets, followed by one BS stage to
/// reach QoS feasibility. Each outer iteration runs the RIS SCA loop, the
/// unit-modulus projection with leakage backtracking, then the BS SCA loop;
/// a candidate is accepted only if the recomputed true sum rate does not
/// decrease.
pub fn ao_joint(
    real: &ChannelRealization,
    cfg: &OptimizerConfig,
    seed: u64,
) -> Result<DesignOutcome> {
    let k_users = real.num_users();
    if cfg.num_users() != k_users || cfg.sigma_k2.len() != k_users {
        return Err(Error::invalid("config user count disagrees with the realization"));
    }
    let n = real.geometry.n();
    let mut rng = stream_rng(seed, INIT_STREAM);
    let theta0: Vec<f64> = (0..n)
        .map(|_| rng.gen::<f64>() * 2.0 * std::f64::consts::PI)
        .collect();
    let (w_c0, w0) = mrt_stack(real, &theta0, cfg)?;

    // initial BS stage gives a QoS-feasible starting design
    let start = Instant::now();
    let bs0 = sca_bs_loop(real, &theta0, (&w_c0, &w0), cfg)?;
    let (mut state, mut report) =
        evaluate_candidate(real, bs0.w_c, bs0.w, theta0, bs0.alloc, cfg)?;
    let mut trace = OptimizerTrace {
        rows: vec![],
        eps: cfg.eps,
        converged: false,
    };
    let audit0 = audit_state(real, &state, &report, cfg)?;
    trace.rows.push(TraceRow {
        outer_iter: 0,
        inner_iter: bs0.iterations,
        r_sum: report.r_total,
        max_residual: audit0.max_residual,
        aleph_watts: audit0.aleph,
        ms_elapsed: start.elapsed().as_secs_f64() * 1e3,
    });

    for s in 1..=cfg.s_ao_max {
        let t0 = Instant::now();
        let r_prev = report.r_total;

        // RIS stage at fixed precoders
        let psi0 = CVector::from_fn(n, |i, _| C64::from_polar(1.0, state.theta[i]));
        let ris = sca_ris_loop(real, &psi0, &state.w_c, &state.w, cfg)?;
        let (theta_proj, _flagged) = project_unit_modulus(&ris.psi);
        let p_bs = state.transmit_power();
        let theta_cand = restore_leak_feasibility(
            real,
            &state.theta,
            theta_proj,
            p_bs,
            LEAK_MARGIN * cfg.p_leak,
        )?;

        // BS stage at the candidate phases
        let bs = sca_bs_loop(real, &theta_cand, (&state.w_c, &state.w), cfg)?;
        let mut inner = ris.iterations + bs.iterations;
        let (cand_state, cand_report) =
            evaluate_candidate(real, bs.w_c, bs.w, theta_cand, bs.alloc, cfg)?;

        if cand_report.r_total + 1e-12 >= r_prev {
            state = cand_state;
            report = cand_report;
        } else {
            // projection cost more than the RIS stage gained: retry the BS
            // stage on the previous phases and keep whichever is best
            let bs2 = sca_bs_loop(real, &state.theta.clone(), (&state.w_c, &state.w), cfg)?;
            inner += bs2.iterations;
            let (alt_state, alt_report) = evaluate_candidate(
                real,
                bs2.w_c,
                bs2.w,
                state.theta.clone(),
                bs2.alloc,
                cfg,
            )?;
            if alt_report.r_total + 1e-12 >= r_prev && alt_report.r_total >= cand_report.r_total {
                state = alt_state;
                report = alt_report;
            }
            // otherwise keep the previous design (r_sum stays flat)
        }

        let audit = audit_state(real, &state, &report, cfg)?;
        trace.rows.push(TraceRow {
            outer_iter: s,
            inner_iter: inner,
            r_sum: report.r_total,
            max_residual: audit.max_residual,
            aleph_watts: audit.aleph,
            ms_elapsed: t0.elapsed().as_secs_f64() * 1e3,
        });
        if (report.r_total - r_prev).abs() <= cfg.eps {
            trace.converged = true;
            break;
        }
    }

    let audit = audit_state(real, &state, &report, cfg)?;
    Ok(DesignOutcome {
        state,
        report,
        trace,
        audit,
    })
}

/// MRT precoder stack: the common precoder points at Bob's cascaded channel,
/// each private precoder at its own user, split
/// `init_common_fraction : equal`, scaled into the budgets.
fn mrt_stack(
    real: &ChannelRealization,
    theta: &[f64],
    cfg: &OptimizerConfig,
) -> Result<(CVector, Vec<CVector>)> {
    let chans = real.cascaded_all(theta)?;
    let k_users = chans.len();
    let p_total = cfg.init_power_fraction * cfg.p_max;
    let p_common = cfg.init_common_fraction * p_total;
    let p_private = (p_total - p_common) / k_users as f64;
    let unit = |h: &CVector| -> CVector {
        let nrm = h.norm();
        if nrm < 1e-300 {
            let mut e = CVector::zeros(h.len());
            e[0] = C64::new(1.0, 0.0);
            e
        } else {
            h / C64::new(nrm, 0.0)
        }
    };
    let mut w_c = unit(&chans[0]) * C64::new(p_common.sqrt(), 0.0);
    let mut w: Vec<CVector> = chans
        .iter()
        .map(|h| unit(h) * C64::new(p_private.sqrt(), 0.0))
        .collect();
    let gain_w = willie_gain(real, theta)?;
    scale_into_budgets(&mut w_c, &mut w, cfg, gain_w);
    Ok((w_c, w))
}

/// Worst-case operation-count expression evaluated with measured iteration
/// counts: `S (J (8K+1)² (M K + 6K) + Q (8K+N)² (N + 6K))`.
pub fn complexity_estimate(
    k_users: usize,
    m_bs: usize,
    n_ris: usize,
    s_iters: usize,
    j_iters: usize,
    q_iters: usize,
) -> f64 {
    let k = k_users as f64;
    let m = m_bs as f64;
    let n = n_ris as f64;
    let bs_term = j_iters as f64 * (8.0 * k + 1.0).powi(2) * (m * k + 6.0 * k);
    let ris_term = q_iters as f64 * (8.0 * k + n).powi(2) * (n + 6.0 * k);
    s_iters as f64 * (bs_term + ris_term)
}

// ---------------------------------------------------------------------------
// Designer strategy registry
// ---------------------------------------------------------------------------

/// A beamforming design strategy selectable by name at runtime.
pub trait BeamformerDesigner: Sync {
    fn name(&self) -> &'static str;
    fn design(
        &self,
        real: &ChannelRealization,
        cfg: &OptimizerConfig,
        seed: u64,
    ) -> Result<DesignOutcome>;
}

/// Full SCA-based alternating optimization.
pub struct AoDesigner;

impl BeamformerDesigner for AoDesigner {
    fn name(&self) -> &'static str {
        "ao"
    }

    fn design(
        &self,
        real: &ChannelRealization,
        cfg: &OptimizerConfig,
        seed: u64,
    ) -> Result<DesignOutcome> {
        ao_joint(real, cfg, seed)
    }
}

/// Comparison baseline: seeded random RIS phases and MRT precoders at full
/// power (power-feasible but otherwise unoptimized).
pub struct MrtRandomPhaseDesigner;

impl BeamformerDesigner for MrtRandomPhaseDesigner {
    fn name(&self) -> &'static str {
        "mrt-random"
    }

    fn design(
        &self,
        real: &ChannelRealization,
        cfg: &OptimizerConfig,
        seed: u64,
    ) -> Result<DesignOutcome> {
        let n = real.geometry.n();
        let mut rng = stream_rng(seed, INIT_STREAM);
        let theta: Vec<f64> = (0..n)
            .map(|_| rng.gen::<f64>() * 2.0 * std::f64::consts::PI)
            .collect();
        let chans = real.cascaded_all(&theta)?;
        let k_users = chans.len();
        // full power budget, equal private shares
        let p_common = cfg.init_common_fraction * cfg.p_max;
        let p_private = (cfg.p_max - p_common) / k_users as f64;
        let unit = |h: &CVector| -> CVector {
            let nrm = h.norm();
            if nrm < 1e-300 {
                let mut e = CVector::zeros(h.len());
                e[0] = C64::new(1.0, 0.0);
                e
            } else {
                h / C64::new(nrm, 0.0)
            }
        };
        let w_c = unit(&chans[0]) * C64::new(p_common.sqrt(), 0.0);
        let w: Vec<CVector> = chans
            .iter()
            .map(|h| unit(h) * C64::new(p_private.sqrt(), 0.0))
            .collect();
        let (state, report) =
            evaluate_candidate(real, w_c, w, theta, vec![0.0; k_users], cfg)?;
        let audit = audit_state(real, &state, &report, cfg)?;
        Ok(DesignOutcome {
            state,
            report,
            trace: OptimizerTrace::default(),
            audit,
        })
    }
}

/// All registered designers.
pub fn designer_registry() -> &'static [&'static dyn BeamformerDesigner] {
    &[&AoDesigner, &MrtRandomPhaseDesigner]
}

/// Look a designer up by its registry name.
pub fn designer_by_name(name: &str) -> Option<&'static dyn BeamformerDesigner> {
    designer_registry().iter().copied().find(|d| d.name() == name)
}

#[cfg(test)]
mod tests;
