//! SCA-convexified subproblem builders.
//!
//! Both subproblems maximize `Σ_k (℘_k + Υ_k)` over real decision vectors.
//! Complex quantities are mapped to interleaved `(re, im)` coordinate pairs.
//! User channels are pre-divided by `√σ_k²` so interference auxiliaries live
//! in SINR units with a unit noise floor; powers stay in watts.
//!
//! The covertness budget is enforced against `LEAK_MARGIN * P_leak` so the
//! returned designs satisfy the strict inequality `ℵ < P_leak` with room for
//! solver tolerance.

use nalgebra::DVector;

use crate::error::{ConstraintFamily, Error, Result};
use crate::solver::{ConstraintExpr, ConvexProgram, LinearTerm, SparseRow};
use crate::{CMatrix, CVector, C64};

/// Fraction of the leakage budget the optimizer is allowed to use.
pub const LEAK_MARGIN: f64 = 0.999;

fn term(idx: usize, coeff: f64) -> LinearTerm {
    LinearTerm { idx, coeff }
}

/// Variable layout shared by both subproblems: a complex block of `len`
/// entries (interleaved re/im) followed by six scalar groups of size `k`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct VarMap {
    /// Complex entries in the leading block.
    pub complex_len: usize,
    /// User count.
    pub k: usize,
}

impl VarMap {
    pub fn dim(&self) -> usize {
        2 * self.complex_len + 6 * self.k
    }
    pub fn re(&self, i: usize) -> usize {
        2 * i
    }
    pub fn im(&self, i: usize) -> usize {
        2 * i + 1
    }
    fn scalar_base(&self) -> usize {
        2 * self.complex_len
    }
    pub fn alloc(&self, k: usize) -> usize {
        self.scalar_base() + k
    }
    pub fn upsilon(&self, k: usize) -> usize {
        self.scalar_base() + self.k + k
    }
    pub fn beth(&self, k: usize) -> usize {
        self.scalar_base() + 2 * self.k + k
    }
    pub fn nu(&self, k: usize) -> usize {
        self.scalar_base() + 3 * self.k + k
    }
    pub fn kappa(&self, k: usize) -> usize {
        self.scalar_base() + 4 * self.k + k
    }
    pub fn eta(&self, k: usize) -> usize {
        self.scalar_base() + 5 * self.k + k
    }
}

/// Real/imag rows of the Hermitian form `h^H w` over the complex block that
/// starts at complex offset `base` and has `h.len()` entries.
fn hermitian_rows(h: &CVector, base: usize) -> (SparseRow, SparseRow) {
    let mut re = Vec::with_capacity(2 * h.len());
    let mut im = Vec::with_capacity(2 * h.len());
    for (i, hv) in h.iter().enumerate() {
        let (r, j) = (2 * (base + i), 2 * (base + i) + 1);
        re.push(term(r, hv.re));
        re.push(term(j, hv.im));
        im.push(term(r, -hv.im));
        im.push(term(j, hv.re));
    }
    (SparseRow::new(re, 0.0), SparseRow::new(im, 0.0))
}

/// Real/imag rows of the plain linear form `Σ c_n ψ_n` over the leading
/// complex block.
fn linear_rows(c: &CVector) -> (SparseRow, SparseRow) {
    let mut re = Vec::with_capacity(2 * c.len());
    let mut im = Vec::with_capacity(2 * c.len());
    for (i, cv) in c.iter().enumerate() {
        let (r, j) = (2 * i, 2 * i + 1);
        re.push(term(r, cv.re));
        re.push(term(j, -cv.im));
        im.push(term(r, cv.im));
        im.push(term(j, cv.re));
    }
    (SparseRow::new(re, 0.0), SparseRow::new(im, 0.0))
}

/// Assign `ν, ℶ, Υ, ℘` warm values strictly inside the built constraints.
///
/// The SCA rows carry coefficient exactly 1 on their bounded auxiliary, so
/// the largest feasible auxiliary is minus the row value with the auxiliary
/// zeroed. `sca_rows` come in `[common_0, private_0, common_1, ...]` order.
fn assign_warm_auxiliaries(
    warm: &mut DVector<f64>,
    vars: &VarMap,
    sca_rows: &[(SparseRow, f64)],
    cfg: &SubproblemConfig,
) {
    let k_users = vars.k;
    // margins sized against the magnitude of each bound so they dominate
    // floating-point evaluation noise at high SINR
    let abs_margin = 1e-8;
    for k in 0..k_users {
        warm[vars.nu(k)] = 0.0;
        warm[vars.beth(k)] = 0.0;
        let bound_c = -sca_rows[2 * k].0.eval(warm);
        let nu = bound_c - abs_margin * (1.0 + bound_c.abs());
        warm[vars.nu(k)] = nu.max(-1.0 + 1e-9);
        let bound_p = -sca_rows[2 * k + 1].0.eval(warm);
        let beth = bound_p - abs_margin * (1.0 + bound_p.abs());
        warm[vars.beth(k)] = beth.max(-1.0 + 1e-9);
        let cap_p = (1.0 + warm[vars.beth(k)]).log2();
        let ups = cap_p - abs_margin * (1.0 + cap_p.abs());
        warm[vars.upsilon(k)] = ups;
        warm[vars.alloc(k)] = (cfg.r_min[k] - ups + 2.0 * abs_margin).max(abs_margin);
    }
    let min_cap = (0..k_users)
        .map(|k| (1.0 + warm[vars.nu(k)]).log2())
        .fold(f64::INFINITY, f64::min);
    let cap_slack = abs_margin * (1.0 + min_cap.abs());
    let alloc_sum: f64 = (0..k_users).map(|k| warm[vars.alloc(k)]).sum();
    if alloc_sum > min_cap - cap_slack {
        // QoS floors conflict with the common capacity at this anchor; leave
        // the conflict to phase-I but keep the allocations small
        let fill = ((min_cap - cap_slack).max(0.0) / (k_users as f64 + 1.0)).max(abs_margin);
        for k in 0..k_users {
            warm[vars.alloc(k)] = fill;
        }
    }
}

/// Affine SCA lower bound for a quadratic-over-linear SINR numerator:
/// builds `aux - 2 Re(conj(z) L(x))/d_a + |z|² d/d_a² <= 0` where `L` has
/// real/imag rows `(re, im)`, `z = L(anchor)`, `d_a` is the denominator
/// anchor, `d` the denominator variable and `aux` the bounded variable.
fn sca_bound_row(
    re: &SparseRow,
    im: &SparseRow,
    z: C64,
    denom_anchor: f64,
    denom_idx: usize,
    aux_idx: usize,
) -> SparseRow {
    let mut terms = vec![term(aux_idx, 1.0)];
    let s = -2.0 / denom_anchor;
    for t in &re.terms {
        terms.push(term(t.idx, s * z.re * t.coeff));
    }
    for t in &im.terms {
        terms.push(term(t.idx, s * z.im * t.coeff));
    }
    terms.push(term(denom_idx, z.norm_sqr() / (denom_anchor * denom_anchor)));
    SparseRow::new(terms, 0.0)
}

/// Scalar configuration shared by both builders.
#[derive(Debug, Clone)]
pub struct SubproblemConfig {
    /// BS power budget, watts.
    pub p_max: f64,
    /// Leakage budget `P_leak`, watts.
    pub p_leak: f64,
    /// Per-user QoS floors, bits/s/Hz.
    pub r_min: Vec<f64>,
}

/// SCA anchor and fixed data for the BS-precoder subproblem (fixed RIS).
pub struct BsSubproblem {
    pub program: ConvexProgram,
    pub(crate) vars: VarMap,
    /// Warm-start point derived from the anchor.
    pub warm: DVector<f64>,
    /// Largest tightness defect of the SCA bounds at the anchor.
    pub anchor_tightness: f64,
    /// Surrogate objective value achievable at the anchor.
    pub anchor_objective: f64,
    m: usize,
}

/// Solution of a BS subproblem mapped back to beamformers.
pub struct BsPoint {
    pub w_c: CVector,
    pub w: Vec<CVector>,
    pub alloc: Vec<f64>,
    pub upsilon: Vec<f64>,
    pub objective: f64,
}

/// Anchor data for one BS SCA iteration.
pub struct BsAnchor<'a> {
    /// Noise-normalized cascaded user channels at the fixed RIS phases.
    pub channels: &'a [CVector],
    /// `||H_br^H Θ g_rw||²` at the fixed RIS phases.
    pub willie_gain: f64,
    pub w_c: &'a CVector,
    pub w: &'a [CVector],
}

/// Build the convex BS subproblem at the given anchor.
///
/// The anchor precoders must satisfy the power budget; interference anchors
/// `κ^{(j)}, η^{(j)}` are computed from them.
pub fn build_bs_subproblem(anchor: &BsAnchor, cfg: &SubproblemConfig) -> Result<BsSubproblem> {
    let k_users = anchor.channels.len();
    if k_users == 0 || anchor.w.len() != k_users || cfg.r_min.len() != k_users {
        return Err(Error::invalid("one channel, precoder and QoS floor per user"));
    }
    let m = anchor.w_c.len();
    let vars = VarMap {
        complex_len: m * (k_users + 1),
        k: k_users,
    };
    let anchor_power: f64 =
        anchor.w_c.norm_squared() + anchor.w.iter().map(|w| w.norm_squared()).sum::<f64>();
    if anchor_power > cfg.p_max * (1.0 + 1e-6) {
        return Err(Error::invalid(
            "anchor beamformer violates the power budget; re-initialize before building",
        ));
    }

    let mut program = ConvexProgram::new(vars.dim());
    let mut objective = Vec::with_capacity(2 * k_users);
    for k in 0..k_users {
        objective.push(term(vars.alloc(k), 1.0));
        objective.push(term(vars.upsilon(k), 1.0));
    }
    program.objective = SparseRow::new(objective, 0.0);

    // power: ||W||² / P_max <= 1
    let inv_sqrt_p = 1.0 / cfg.p_max.sqrt();
    program.push(
        ConstraintFamily::Power,
        ConstraintExpr::Quadratic {
            factors: (0..2 * vars.complex_len)
                .map(|i| SparseRow::new(vec![term(i, inv_sqrt_p)], 0.0))
                .collect(),
            affine: SparseRow::new(vec![], -1.0),
        },
    );

    // leakage: ||W||² g_w / (margin P_leak) <= 1, quadratic in W for fixed Θ
    if anchor.willie_gain > 0.0 {
        let scale = (anchor.willie_gain / (LEAK_MARGIN * cfg.p_leak)).sqrt();
        program.push(
            ConstraintFamily::Leakage,
            ConstraintExpr::Quadratic {
                factors: (0..2 * vars.complex_len)
                    .map(|i| SparseRow::new(vec![term(i, scale)], 0.0))
                    .collect(),
                affine: SparseRow::new(vec![], -1.0),
            },
        );
    }

    let mut sca_rows: Vec<(SparseRow, f64)> = Vec::with_capacity(2 * k_users);
    let mut kappa_anchor = vec![0.0; k_users];
    let mut eta_anchor = vec![0.0; k_users];
    let mut nu_anchor = vec![0.0; k_users];
    let mut beth_anchor = vec![0.0; k_users];

    for k in 0..k_users {
        let h = &anchor.channels[k];
        // interference anchors (unit noise after normalization)
        let interf_all: f64 = anchor.w.iter().map(|w| h.dotc(w).norm_sqr()).sum();
        let interf_other: f64 = anchor
            .w
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, w)| h.dotc(w).norm_sqr())
            .sum();
        let kap_a = interf_all + 1.0;
        let eta_a = interf_other + 1.0;
        kappa_anchor[k] = kap_a;
        eta_anchor[k] = eta_a;

        // interference caps: Σ_i |h^H w_i|² + 1 <= κ  (and i≠k for η)
        let mut common_factors = Vec::with_capacity(2 * k_users);
        let mut private_factors = Vec::with_capacity(2 * (k_users - 1));
        for i in 0..k_users {
            let (re, im) = hermitian_rows(h, m * (i + 1));
            if i != k {
                private_factors.push(re.clone());
                private_factors.push(im.clone());
            }
            common_factors.push(re);
            common_factors.push(im);
        }
        program.push(
            ConstraintFamily::Interference,
            ConstraintExpr::Quadratic {
                factors: common_factors,
                affine: SparseRow::new(vec![term(vars.kappa(k), -1.0)], 1.0),
            },
        );
        program.push(
            ConstraintFamily::Interference,
            ConstraintExpr::Quadratic {
                factors: private_factors,
                affine: SparseRow::new(vec![term(vars.eta(k), -1.0)], 1.0),
            },
        );

        // SCA lower bounds on the SINR numerators
        let (re_c, im_c) = hermitian_rows(h, 0);
        let z_c = h.dotc(anchor.w_c);
        let row_c = sca_bound_row(&re_c, &im_c, z_c, kap_a, vars.kappa(k), vars.nu(k));
        sca_rows.push((row_c.clone(), z_c.norm_sqr() / kap_a));
        program.push(ConstraintFamily::ScaBound, ConstraintExpr::Affine(row_c));

        let (re_p, im_p) = hermitian_rows(h, m * (k + 1));
        let z_p = h.dotc(&anchor.w[k]);
        let row_p = sca_bound_row(&re_p, &im_p, z_p, eta_a, vars.eta(k), vars.beth(k));
        sca_rows.push((row_p.clone(), z_p.norm_sqr() / eta_a));
        program.push(ConstraintFamily::ScaBound, ConstraintExpr::Affine(row_p));

        nu_anchor[k] = z_c.norm_sqr() / kap_a;
        beth_anchor[k] = z_p.norm_sqr() / eta_a;

        // common-rate cap, private-rate cap, QoS, nonnegativity
        program.push(
            ConstraintFamily::CommonRate,
            ConstraintExpr::LogCap {
                lin: SparseRow::new((0..k_users).map(|i| term(vars.alloc(i), 1.0)).collect(), 0.0),
                log_var: vars.nu(k),
            },
        );
        program.push(
            ConstraintFamily::PrivateRate,
            ConstraintExpr::LogCap {
                lin: SparseRow::new(vec![term(vars.upsilon(k), 1.0)], 0.0),
                log_var: vars.beth(k),
            },
        );
        program.push(
            ConstraintFamily::Qos,
            ConstraintExpr::Affine(SparseRow::new(
                vec![term(vars.alloc(k), -1.0), term(vars.upsilon(k), -1.0)],
                cfg.r_min[k],
            )),
        );
        program.push(
            ConstraintFamily::NonNeg,
            ConstraintExpr::Affine(SparseRow::new(vec![term(vars.alloc(k), -1.0)], 0.0)),
        );
    }

    // numeric check that every linearized bound holds with equality at the
    // anchor point (with the tight auxiliary assignment)
    let mut anchor_vec = DVector::zeros(vars.dim());
    let write_anchor = |base: usize, v: &CVector, out: &mut DVector<f64>| {
        for (i, c) in v.iter().enumerate() {
            out[2 * (base + i)] = c.re;
            out[2 * (base + i) + 1] = c.im;
        }
    };
    write_anchor(0, anchor.w_c, &mut anchor_vec);
    for (i, wk) in anchor.w.iter().enumerate() {
        write_anchor(m * (i + 1), wk, &mut anchor_vec);
    }
    for k in 0..k_users {
        anchor_vec[vars.nu(k)] = nu_anchor[k];
        anchor_vec[vars.beth(k)] = beth_anchor[k];
        anchor_vec[vars.kappa(k)] = kappa_anchor[k];
        anchor_vec[vars.eta(k)] = eta_anchor[k];
    }
    let mut anchor_tightness = 0.0f64;
    for (row, tight) in &sca_rows {
        anchor_tightness = anchor_tightness.max(row.eval(&anchor_vec).abs() / (1.0 + tight));
    }

    // warm start: anchor beamformers slightly shrunk, auxiliaries assigned
    // strictly inside every built constraint
    let mut warm = DVector::zeros(vars.dim());
    let shrink = 0.999_f64;
    let write_complex = |base: usize, v: &CVector, w: &mut DVector<f64>| {
        for (i, c) in v.iter().enumerate() {
            w[2 * (base + i)] = c.re * shrink;
            w[2 * (base + i) + 1] = c.im * shrink;
        }
    };
    write_complex(0, anchor.w_c, &mut warm);
    for (i, wk) in anchor.w.iter().enumerate() {
        write_complex(m * (i + 1), wk, &mut warm);
    }
    for k in 0..k_users {
        warm[vars.kappa(k)] = kappa_anchor[k] * 1.01 + 1e-9;
        warm[vars.eta(k)] = eta_anchor[k] * 1.01 + 1e-9;
    }
    assign_warm_auxiliaries(&mut warm, &vars, &sca_rows, cfg);
    // best surrogate objective attainable at the anchor itself: full common
    // budget plus every private cap
    let anchor_common = nu_anchor
        .iter()
        .map(|v| (1.0 + v.max(0.0)).log2())
        .fold(f64::INFINITY, f64::min);
    let anchor_objective = anchor_common
        + beth_anchor
            .iter()
            .map(|v| (1.0 + v.max(0.0)).log2())
            .sum::<f64>();

    Ok(BsSubproblem {
        program,
        vars,
        warm,
        anchor_tightness,
        anchor_objective,
        m,
    })
}

impl BsSubproblem {
    /// Map a solver point back to beamformers, clamping allocations to be
    /// nonnegative (the solver works against a 1e-9 slack).
    pub fn extract(&self, x: &DVector<f64>, objective: f64) -> BsPoint {
        let m = self.m;
        let k_users = self.vars.k;
        let read = |base: usize| -> CVector {
            CVector::from_fn(m, |i, _| {
                C64::new(x[2 * (base + i)], x[2 * (base + i) + 1])
            })
        };
        BsPoint {
            w_c: read(0),
            w: (0..k_users).map(|k| read(m * (k + 1))).collect(),
            alloc: (0..k_users)
                .map(|k| x[self.vars.alloc(k)].max(0.0))
                .collect(),
            upsilon: (0..k_users).map(|k| x[self.vars.upsilon(k)]).collect(),
            objective,
        }
    }
}

// ---------------------------------------------------------------------------
// RIS subproblem
// ---------------------------------------------------------------------------

/// Fixed data and anchor for the RIS-phase subproblem (fixed precoders).
pub struct RisAnchor<'a> {
    /// BS-RIS channel.
    pub h_br: &'a CMatrix,
    /// RIS-user channels, one per user.
    pub g_users: Vec<&'a CVector>,
    /// RIS-Willie channel.
    pub g_rw: &'a CVector,
    /// Fixed precoders.
    pub w_c: &'a CVector,
    pub w: &'a [CVector],
    /// Per-user receiver noise powers, watts.
    pub sigma_k2: &'a [f64],
    /// Relaxed RIS point `|ψ_n| <= 1` to linearize around.
    pub psi: &'a CVector,
}

/// Built RIS subproblem.
pub struct RisSubproblem {
    pub program: ConvexProgram,
    pub(crate) vars: VarMap,
    pub warm: DVector<f64>,
    pub anchor_tightness: f64,
    /// Surrogate objective value achievable at the anchor.
    pub anchor_objective: f64,
    n: usize,
}

/// Solution of a RIS subproblem.
pub struct RisPoint {
    pub psi: CVector,
    pub alloc: Vec<f64>,
    pub objective: f64,
}

/// Build the convex RIS subproblem at the given anchor.
pub fn build_ris_subproblem(anchor: &RisAnchor, cfg: &SubproblemConfig) -> Result<RisSubproblem> {
    let k_users = anchor.g_users.len();
    if k_users == 0
        || anchor.w.len() != k_users
        || anchor.sigma_k2.len() != k_users
        || cfg.r_min.len() != k_users
    {
        return Err(Error::invalid("one channel, precoder, noise and QoS floor per user"));
    }
    let n = anchor.h_br.nrows();
    if anchor.psi.len() != n || anchor.g_rw.len() != n {
        return Err(Error::invalid("RIS vector lengths disagree"));
    }
    if anchor.psi.iter().any(|p| p.norm() > 1.0 + 1e-9) {
        return Err(Error::invalid(
            "anchor RIS point violates the relaxed modulus bound; re-initialize",
        ));
    }
    let vars = VarMap {
        complex_len: n,
        k: k_users,
    };
    let mut program = ConvexProgram::new(vars.dim());
    let mut objective = Vec::with_capacity(2 * k_users);
    for k in 0..k_users {
        objective.push(term(vars.alloc(k), 1.0));
        objective.push(term(vars.upsilon(k), 1.0));
    }
    program.objective = SparseRow::new(objective, 0.0);

    // Linear functional coefficients: h_k^H w_i = conj(L_{k,i}(ψ)) with
    // L coefficient c_n = g_k[n] * conj((H_br w_i)[n]) / sqrt(σ_k²).
    let hw_c = anchor.h_br * anchor.w_c;
    let hw: Vec<CVector> = anchor.w.iter().map(|w| anchor.h_br * w).collect();
    let coeff = |g: &CVector, hw: &CVector, sigma: f64| -> CVector {
        let s = 1.0 / sigma.sqrt();
        CVector::from_fn(n, |i, _| g[i] * hw[i].conj() * s)
    };

    let mut sca_rows: Vec<(SparseRow, f64)> = Vec::with_capacity(2 * k_users);
    let mut kappa_anchor = vec![0.0; k_users];
    let mut eta_anchor = vec![0.0; k_users];
    let mut nu_anchor = vec![0.0; k_users];
    let mut beth_anchor = vec![0.0; k_users];

    for k in 0..k_users {
        let g_k = anchor.g_users[k];
        let sig = anchor.sigma_k2[k];
        let c_common = coeff(g_k, &hw_c, sig);
        let c_priv: Vec<CVector> = hw.iter().map(|hwi| coeff(g_k, hwi, sig)).collect();

        let lval = |c: &CVector| -> C64 {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                acc += c[i] * anchor.psi[i];
            }
            acc
        };

        let interf_all: f64 = c_priv.iter().map(|c| lval(c).norm_sqr()).sum();
        let interf_other: f64 = c_priv
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k)
            .map(|(_, c)| lval(c).norm_sqr())
            .sum();
        let kap_a = interf_all + 1.0;
        let eta_a = interf_other + 1.0;
        kappa_anchor[k] = kap_a;
        eta_anchor[k] = eta_a;

        let mut common_factors = Vec::with_capacity(2 * k_users);
        let mut private_factors = Vec::with_capacity(2 * (k_users - 1));
        for (i, c) in c_priv.iter().enumerate() {
            let (re, im) = linear_rows(c);
            if i != k {
                private_factors.push(re.clone());
                private_factors.push(im.clone());
            }
            common_factors.push(re);
            common_factors.push(im);
        }
        program.push(
            ConstraintFamily::Interference,
            ConstraintExpr::Quadratic {
                factors: common_factors,
                affine: SparseRow::new(vec![term(vars.kappa(k), -1.0)], 1.0),
            },
        );
        program.push(
            ConstraintFamily::Interference,
            ConstraintExpr::Quadratic {
                factors: private_factors,
                affine: SparseRow::new(vec![term(vars.eta(k), -1.0)], 1.0),
            },
        );

        // SCA bounds with A*, B* coefficients from the anchor
        let (re_c, im_c) = linear_rows(&c_common);
        let z_c = lval(&c_common);
        let row_c = sca_bound_row(&re_c, &im_c, z_c, kap_a, vars.kappa(k), vars.nu(k));
        sca_rows.push((row_c.clone(), z_c.norm_sqr() / kap_a));
        program.push(ConstraintFamily::ScaBound, ConstraintExpr::Affine(row_c));

        let (re_p, im_p) = linear_rows(&c_priv[k]);
        let z_p = lval(&c_priv[k]);
        let row_p = sca_bound_row(&re_p, &im_p, z_p, eta_a, vars.eta(k), vars.beth(k));
        sca_rows.push((row_p.clone(), z_p.norm_sqr() / eta_a));
        program.push(ConstraintFamily::ScaBound, ConstraintExpr::Affine(row_p));

        nu_anchor[k] = z_c.norm_sqr() / kap_a;
        beth_anchor[k] = z_p.norm_sqr() / eta_a;

        program.push(
            ConstraintFamily::CommonRate,
            ConstraintExpr::LogCap {
                lin: SparseRow::new((0..k_users).map(|i| term(vars.alloc(i), 1.0)).collect(), 0.0),
                log_var: vars.nu(k),
            },
        );
        program.push(
            ConstraintFamily::PrivateRate,
            ConstraintExpr::LogCap {
                lin: SparseRow::new(vec![term(vars.upsilon(k), 1.0)], 0.0),
                log_var: vars.beth(k),
            },
        );
        program.push(
            ConstraintFamily::Qos,
            ConstraintExpr::Affine(SparseRow::new(
                vec![term(vars.alloc(k), -1.0), term(vars.upsilon(k), -1.0)],
                cfg.r_min[k],
            )),
        );
        program.push(
            ConstraintFamily::NonNeg,
            ConstraintExpr::Affine(SparseRow::new(vec![term(vars.alloc(k), -1.0)], 0.0)),
        );
    }

    // relaxed modulus: |ψ_n|² <= 1 per element
    for i in 0..n {
        program.push(
            ConstraintFamily::UnitModulus,
            ConstraintExpr::Quadratic {
                factors: vec![
                    SparseRow::new(vec![term(vars.re(i), 1.0)], 0.0),
                    SparseRow::new(vec![term(vars.im(i), 1.0)], 0.0),
                ],
                affine: SparseRow::new(vec![], -1.0),
            },
        );
    }

    // leakage: P_bs ||H_br^H diag(g_rw) ψ||² <= margin * P_leak with fixed
    // P_bs = Tr(W^H W); row m has coefficients conj(H[n,m]) g_rw[n].
    let p_bs: f64 =
        anchor.w_c.norm_squared() + anchor.w.iter().map(|w| w.norm_squared()).sum::<f64>();
    if p_bs > 0.0 {
        let scale = (p_bs / (LEAK_MARGIN * cfg.p_leak)).sqrt();
        let m_bs = anchor.h_br.ncols();
        let mut factors = Vec::with_capacity(2 * m_bs);
        for mcol in 0..m_bs {
            let row = CVector::from_fn(n, |i, _| {
                anchor.h_br[(i, mcol)].conj() * anchor.g_rw[i] * scale
            });
            let (re, im) = linear_rows(&row);
            factors.push(re);
            factors.push(im);
        }
        program.push(
            ConstraintFamily::Leakage,
            ConstraintExpr::Quadratic {
                factors,
                affine: SparseRow::new(vec![], -1.0),
            },
        );
    }

    // equality-at-anchor check for the built SCA rows
    let mut anchor_vec = DVector::zeros(vars.dim());
    for i in 0..n {
        anchor_vec[vars.re(i)] = anchor.psi[i].re;
        anchor_vec[vars.im(i)] = anchor.psi[i].im;
    }
    for k in 0..k_users {
        anchor_vec[vars.nu(k)] = nu_anchor[k];
        anchor_vec[vars.beth(k)] = beth_anchor[k];
        anchor_vec[vars.kappa(k)] = kappa_anchor[k];
        anchor_vec[vars.eta(k)] = eta_anchor[k];
    }
    let mut anchor_tightness = 0.0f64;
    for (row, tight) in &sca_rows {
        anchor_tightness = anchor_tightness.max(row.eval(&anchor_vec).abs() / (1.0 + tight));
    }

    // warm start from the anchor point
    let mut warm = DVector::zeros(vars.dim());
    let shrink = 0.999_f64;
    for i in 0..n {
        warm[vars.re(i)] = anchor.psi[i].re * shrink;
        warm[vars.im(i)] = anchor.psi[i].im * shrink;
    }
    for k in 0..k_users {
        warm[vars.kappa(k)] = kappa_anchor[k] * 1.01 + 1e-9;
        warm[vars.eta(k)] = eta_anchor[k] * 1.01 + 1e-9;
    }
    assign_warm_auxiliaries(&mut warm, &vars, &sca_rows, cfg);

    let anchor_common = nu_anchor
        .iter()
        .map(|v| (1.0 + v.max(0.0)).log2())
        .fold(f64::INFINITY, f64::min);
    let anchor_objective = anchor_common
        + beth_anchor
            .iter()
            .map(|v| (1.0 + v.max(0.0)).log2())
            .sum::<f64>();

    Ok(RisSubproblem {
        program,
        vars,
        warm,
        anchor_tightness,
        anchor_objective,
        n,
    })
}

impl RisSubproblem {
    pub fn extract(&self, x: &DVector<f64>, objective: f64) -> RisPoint {
        RisPoint {
            psi: CVector::from_fn(self.n, |i, _| C64::new(x[self.vars.re(i)], x[self.vars.im(i)])),
            alloc: (0..self.vars.k)
                .map(|k| x[self.vars.alloc(k)].max(0.0))
                .collect(),
            objective,
        }
    }
}
