//! Solver-independent contract for the convex subproblems, backed by a dense
//! log-barrier interior-point method.
//!
//! Programs are linear-objective maximizations over three smooth convex
//! constraint shapes, which is exactly what the SCA subproblems produce:
//!
//! - affine: `a^T x + b <= 0`
//! - convex quadratic: `Σ_j (f_j^T x + c_j)² + a^T x + b <= 0`
//! - log cap: `Σ_i c_i x_i - log2(1 + x_v) <= 0`
//!
//! A phase-I elastic program (`min s` s.t. `f_i(x) <= s`) locates a strictly
//! feasible start or certifies infeasibility; phase-II follows the central
//! path with damped Newton steps. Constraints are solved against a tiny
//! uniform slack so degenerate instances whose feasible set has an empty
//! interior (forced equalities) still center properly; the slack sits three
//! orders of magnitude below the feasibility tolerance of the contract.

use nalgebra::{DMatrix, DVector};

use crate::error::{ConstraintFamily, Error, Result};

/// One sparse linear term `coeff * x[idx]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearTerm {
    pub idx: usize,
    pub coeff: f64,
}

/// Sparse affine functional `Σ terms + offset`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow {
    pub terms: Vec<LinearTerm>,
    pub offset: f64,
}

impl SparseRow {
    pub fn new(terms: Vec<LinearTerm>, offset: f64) -> Self {
        Self { terms, offset }
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.terms
            .iter()
            .fold(self.offset, |acc, t| acc + t.coeff * x[t.idx])
    }

    fn add_scaled_into(&self, g: &mut DVector<f64>, scale: f64) {
        for t in &self.terms {
            g[t.idx] += scale * t.coeff;
        }
    }

    fn add_outer_into(&self, h: &mut DMatrix<f64>, scale: f64) {
        for a in &self.terms {
            for b in &self.terms {
                h[(a.idx, b.idx)] += scale * a.coeff * b.coeff;
            }
        }
    }
}

/// Constraint body `f(x) <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintExpr {
    /// `row(x) <= 0`
    Affine(SparseRow),
    /// `Σ_j factors_j(x)² + affine(x) <= 0`
    Quadratic {
        factors: Vec<SparseRow>,
        affine: SparseRow,
    },
    /// `lin(x) - log2(1 + x[log_var]) <= 0`
    LogCap { lin: SparseRow, log_var: usize },
}

/// Labeled convex constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub expr: ConstraintExpr,
    pub family: ConstraintFamily,
}

impl Constraint {
    /// Value of `f(x)`; `+inf` outside the domain of definition.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match &self.expr {
            ConstraintExpr::Affine(row) => row.eval(x),
            ConstraintExpr::Quadratic { factors, affine } => {
                let q: f64 = factors.iter().map(|f| f.eval(x).powi(2)).sum();
                q + affine.eval(x)
            }
            ConstraintExpr::LogCap { lin, log_var } => {
                let arg = 1.0 + x[*log_var];
                if arg <= 0.0 {
                    f64::INFINITY
                } else {
                    lin.eval(x) - arg.log2()
                }
            }
        }
    }

    fn add_gradient_into(&self, x: &DVector<f64>, g: &mut DVector<f64>, scale: f64) {
        match &self.expr {
            ConstraintExpr::Affine(row) => row.add_scaled_into(g, scale),
            ConstraintExpr::Quadratic { factors, affine } => {
                for f in factors {
                    f.add_scaled_into(g, scale * 2.0 * f.eval(x));
                }
                affine.add_scaled_into(g, scale);
            }
            ConstraintExpr::LogCap { lin, log_var } => {
                lin.add_scaled_into(g, scale);
                g[*log_var] -= scale / (std::f64::consts::LN_2 * (1.0 + x[*log_var]));
            }
        }
    }

    /// Adds `scale * ∇²f(x)` into `h`.
    fn add_hessian_into(&self, x: &DVector<f64>, h: &mut DMatrix<f64>, scale: f64) {
        match &self.expr {
            ConstraintExpr::Affine(_) => {}
            ConstraintExpr::Quadratic { factors, .. } => {
                for f in factors {
                    f.add_outer_into(h, scale * 2.0);
                }
            }
            ConstraintExpr::LogCap { log_var, .. } => {
                let arg = 1.0 + x[*log_var];
                h[(*log_var, *log_var)] += scale / (std::f64::consts::LN_2 * arg * arg);
            }
        }
    }

    /// Gradient as a dense vector (used by the barrier's rank-one term).
    fn gradient(&self, x: &DVector<f64>, buf: &mut DVector<f64>) {
        buf.fill(0.0);
        self.add_gradient_into(x, buf, 1.0);
    }
}

/// Linear-objective convex program: maximize `objective(x)` subject to the
/// constraint list.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexProgram {
    pub dim: usize,
    /// Maximized objective (affine).
    pub objective: SparseRow,
    pub constraints: Vec<Constraint>,
}

impl ConvexProgram {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            objective: SparseRow::default(),
            constraints: Vec::new(),
        }
    }

    pub fn push(&mut self, family: ConstraintFamily, expr: ConstraintExpr) {
        self.constraints.push(Constraint { expr, family });
    }

    /// Largest constraint violation at `x` (`<= 0` means feasible).
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Families of constraints violated beyond `tol` at `x`.
    pub fn violated_families(&self, x: &DVector<f64>, tol: f64) -> Vec<ConstraintFamily> {
        let mut fams: Vec<ConstraintFamily> = self
            .constraints
            .iter()
            .filter(|c| c.value(x) > tol)
            .map(|c| c.family)
            .collect();
        fams.sort_by_key(|f| format!("{f}"));
        fams.dedup();
        fams
    }
}

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    Infeasible,
}

/// Solution of a convex program.
#[derive(Debug, Clone)]
pub struct Solution {
    pub x: DVector<f64>,
    /// Objective value (of the maximized objective).
    pub objective: f64,
    pub status: SolveStatus,
    /// Largest constraint value at `x`.
    pub max_violation: f64,
    /// Newton iterations spent across both phases.
    pub newton_iters: usize,
}

/// Solver tolerances and limits.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Absolute duality-gap target (`m/t` at termination).
    pub tol_gap: f64,
    /// Feasibility tolerance of the contract.
    pub tol_feas: f64,
    /// Uniform constraint slack used for interior centering.
    pub slack: f64,
    /// Barrier multiplier.
    pub mu: f64,
    /// Newton iteration budget across all centering stages.
    pub max_newton: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_gap: 1e-7,
            tol_feas: 1e-6,
            slack: 1e-9,
            mu: 20.0,
            max_newton: 2000,
        }
    }
}

/// Solve a convex program, optionally warm-started.
///
/// Returns `Error::Infeasible` naming the violated constraint families when
/// phase-I certifies there is no feasible point.
pub fn solve_convex(
    program: &ConvexProgram,
    warm_start: Option<&DVector<f64>>,
    options: &SolverOptions,
) -> Result<Solution> {
    let mut x = match warm_start {
        Some(w) if w.len() == program.dim => w.clone(),
        _ => DVector::zeros(program.dim),
    };
    sanitize_domain(program, &mut x);

    let mut newton_total = 0usize;

    // Phase I: find a strictly feasible point unless we already have one.
    if program.max_violation(&x) >= 0.0 {
        match phase_one(program, &mut x, options, &mut newton_total)? {
            PhaseOneOutcome::Feasible => {}
            PhaseOneOutcome::Infeasible(certificate) => {
                return Err(Error::Infeasible {
                    families: program.violated_families(&certificate, options.tol_feas),
                });
            }
        }
    }

    // Phase II: follow the central path.
    let m = program.constraints.len().max(1) as f64;
    let mut t = 1.0;
    let mut status = SolveStatus::Optimal;
    loop {
        let converged = newton_center(program, &mut x, t, options, &mut newton_total);
        if !converged && newton_total >= options.max_newton {
            status = SolveStatus::MaxIterations;
            break;
        }
        if m / t <= options.tol_gap {
            break;
        }
        t *= options.mu;
    }

    let max_violation = program.max_violation(&x);
    if max_violation > options.tol_feas {
        status = SolveStatus::MaxIterations;
    }
    Ok(Solution {
        objective: program.objective.eval(&x),
        x,
        status,
        max_violation,
        newton_iters: newton_total,
    })
}

/// Clamp log-cap arguments into their domain so barrier evaluation is
/// defined at the starting point.
fn sanitize_domain(program: &ConvexProgram, x: &mut DVector<f64>) {
    for c in &program.constraints {
        if let ConstraintExpr::LogCap { log_var, .. } = &c.expr {
            if x[*log_var] <= -1.0 + 1e-9 {
                x[*log_var] = -0.5;
            }
        }
    }
}

enum PhaseOneOutcome {
    Feasible,
    Infeasible(DVector<f64>),
}

/// Elastic feasibility program: minimize `s` subject to `f_i(x) <= s`,
/// stopping early once `s` is comfortably negative.
fn phase_one(
    program: &ConvexProgram,
    x: &mut DVector<f64>,
    options: &SolverOptions,
    newton_total: &mut usize,
) -> Result<PhaseOneOutcome> {
    let n = program.dim;
    let s_idx = n;
    let mut elastic = ConvexProgram::new(n + 1);
    // maximize -s
    elastic.objective = SparseRow::new(vec![LinearTerm { idx: s_idx, coeff: -1.0 }], 0.0);
    for c in &program.constraints {
        let mut expr = c.expr.clone();
        attach_elastic(&mut expr, s_idx);
        elastic.push(c.family, expr);
    }

    let mut z = DVector::zeros(n + 1);
    z.rows_mut(0, n).copy_from(x);
    let s0 = program.max_violation(x);
    if !s0.is_finite() {
        // outside a log-cap domain even after sanitizing: recenter at zero
        z.rows_mut(0, n).fill(0.0);
    }
    let s0 = elastic_violation(program, &z.rows(0, n).into_owned());
    z[s_idx] = s0 + 1.0;

    // stop as soon as the x-part of the iterate is strictly feasible for the
    // original program; the elastic variable itself lags behind
    let strictly_feasible = |z: &DVector<f64>| -> bool {
        let point = z.rows(0, n).into_owned();
        program.max_violation(&point) < 0.0
    };

    let m = elastic.constraints.len().max(1) as f64;
    let mut t = 1.0;
    loop {
        newton_center_with_stop(
            &elastic,
            &mut z,
            t,
            options,
            newton_total,
            Some(&strictly_feasible),
        );
        if std::env::var_os("NFC_SOLVER_DEBUG").is_some() {
            eprintln!(
                "phase1: t={t:.3e} s={:.6e} newton={newton_total}",
                z[s_idx]
            );
        }
        if strictly_feasible(&z) {
            x.copy_from(&z.rows(0, n).into_owned());
            return Ok(PhaseOneOutcome::Feasible);
        }
        if m / t <= options.tol_gap * 1e-1 || *newton_total >= options.max_newton {
            // centered with nonnegative margin: infeasible (or numerically so)
            let point = z.rows(0, n).into_owned();
            if program.max_violation(&point) <= options.tol_feas {
                x.copy_from(&point);
                return Ok(PhaseOneOutcome::Feasible);
            }
            return Ok(PhaseOneOutcome::Infeasible(point));
        }
        t *= options.mu;
    }
}

fn elastic_violation(program: &ConvexProgram, x: &DVector<f64>) -> f64 {
    program
        .constraints
        .iter()
        .map(|c| {
            let v = c.value(x);
            if v.is_finite() {
                v
            } else {
                1e6
            }
        })
        .fold(0.0, f64::max)
}

fn attach_elastic(expr: &mut ConstraintExpr, s_idx: usize) {
    let term = LinearTerm {
        idx: s_idx,
        coeff: -1.0,
    };
    match expr {
        ConstraintExpr::Affine(row) => row.terms.push(term),
        ConstraintExpr::Quadratic { affine, .. } => affine.terms.push(term),
        ConstraintExpr::LogCap { lin, .. } => lin.terms.push(term),
    }
}

fn newton_center(
    program: &ConvexProgram,
    x: &mut DVector<f64>,
    t: f64,
    options: &SolverOptions,
    newton_total: &mut usize,
) -> bool {
    newton_center_with_stop(program, x, t, options, newton_total, None)
}

/// Damped Newton minimization of `-objective(x) + φ(x)/t` where `φ` is the
/// log barrier of the slack-shifted constraints. Returns whether the stage
/// converged. `early_stop` aborts the stage as soon as the predicate holds
/// (used by phase-I).
fn newton_center_with_stop(
    program: &ConvexProgram,
    x: &mut DVector<f64>,
    t: f64,
    options: &SolverOptions,
    newton_total: &mut usize,
    early_stop: Option<&dyn Fn(&DVector<f64>) -> bool>,
) -> bool {
    let n = program.dim;
    let slack = options.slack;
    let mut grad = DVector::zeros(n);
    let mut hess = DMatrix::zeros(n, n);
    let mut cgrad = DVector::zeros(n);

    let merit = |x: &DVector<f64>| -> f64 {
        let mut phi = 0.0;
        for c in &program.constraints {
            let margin = slack - c.value(x);
            if margin <= 0.0 || !margin.is_finite() {
                return f64::INFINITY;
            }
            phi -= margin.ln();
        }
        -program.objective.eval(x) + phi / t
    };

    for iter in 0.. {
        if iter >= 80 || *newton_total >= options.max_newton {
            return false; // stage budget exhausted without convergence
        }
        if let Some(stop) = early_stop {
            if stop(x) {
                return true;
            }
        }
        *newton_total += 1;

        // assemble gradient and Hessian of the merit function
        grad.fill(0.0);
        program.objective.add_scaled_into(&mut grad, -1.0);
        hess.fill(0.0);
        let mut ok = true;
        for c in &program.constraints {
            let margin = slack - c.value(x);
            if margin <= 0.0 || !margin.is_finite() {
                ok = false;
                break;
            }
            let inv = 1.0 / margin;
            c.add_gradient_into(x, &mut grad, inv / t);
            c.add_hessian_into(x, &mut hess, inv / t);
            c.gradient(x, &mut cgrad);
            let scale = inv * inv / t;
            // rank-one term ∇f ∇f^T / m²; skip zero entries cheaply
            for i in 0..n {
                let gi = cgrad[i];
                if gi == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let gj = cgrad[j];
                    if gj != 0.0 {
                        hess[(i, j)] += scale * gi * gj;
                    }
                }
            }
        }
        if !ok {
            // starting point left the interior numerically; give up the stage
            return false;
        }

        // solve H d = -g with escalating ridge regularization
        let mut ridge = 1e-12;
        let step = loop {
            let mut h = hess.clone();
            for i in 0..n {
                h[(i, i)] += ridge;
            }
            if let Some(chol) = h.cholesky() {
                break chol.solve(&(-&grad));
            }
            ridge *= 100.0;
            if ridge > 1e6 {
                return false;
            }
        };

        let decrement = -grad.dot(&step);
        if decrement <= 0.0 {
            return true;
        }
        if decrement / 2.0 < 1e-11 {
            return true;
        }

        // backtracking line search on the merit function
        let f0 = merit(x);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand = &*x + &step * alpha;
            let f1 = merit(&cand);
            if f1.is_finite() && f1 <= f0 - 0.25 * alpha * decrement {
                x.copy_from(&cand);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return true; // stalled at numerical precision
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn term(idx: usize, coeff: f64) -> LinearTerm {
        LinearTerm { idx, coeff }
    }

    #[test]
    fn trivial_lp() {
        // max x s.t. x <= 1
        let mut p = ConvexProgram::new(1);
        p.objective = SparseRow::new(vec![term(0, 1.0)], 0.0);
        p.push(
            ConstraintFamily::Power,
            ConstraintExpr::Affine(SparseRow::new(vec![term(0, 1.0)], -1.0)),
        );
        let sol = solve_convex(&p, None, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-6);
        assert!(sol.max_violation <= 1e-6);
    }

    #[test]
    fn scalar_soc() {
        // max t s.t. t^2 <= x, x <= 4  -> t = 2
        let mut p = ConvexProgram::new(2);
        p.objective = SparseRow::new(vec![term(0, 1.0)], 0.0);
        p.push(
            ConstraintFamily::Interference,
            ConstraintExpr::Quadratic {
                factors: vec![SparseRow::new(vec![term(0, 1.0)], 0.0)],
                affine: SparseRow::new(vec![term(1, -1.0)], 0.0),
            },
        );
        p.push(
            ConstraintFamily::Power,
            ConstraintExpr::Affine(SparseRow::new(vec![term(1, 1.0)], -4.0)),
        );
        let sol = solve_convex(&p, None, &SolverOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_relative_eq!(sol.x[0], 2.0, epsilon = 1e-5);
        assert_relative_eq!(sol.x[1], 4.0, epsilon = 1e-5);
    }

    #[test]
    fn log_cap_binds() {
        // max p s.t. p <= log2(1 + v), v <= 3  -> p = 2
        let mut p = ConvexProgram::new(2);
        p.objective = SparseRow::new(vec![term(0, 1.0)], 0.0);
        p.push(
            ConstraintFamily::CommonRate,
            ConstraintExpr::LogCap {
                lin: SparseRow::new(vec![term(0, 1.0)], 0.0),
                log_var: 1,
            },
        );
        p.push(
            ConstraintFamily::Interference,
            ConstraintExpr::Affine(SparseRow::new(vec![term(1, 1.0)], -3.0)),
        );
        let sol = solve_convex(&p, None, &SolverOptions::default()).unwrap();
        assert_relative_eq!(sol.x[0], 2.0, epsilon = 1e-5);
    }

    #[test]
    fn infeasible_reports_families() {
        // x <= -1 and x >= 1 cannot hold together
        let mut p = ConvexProgram::new(1);
        p.objective = SparseRow::new(vec![term(0, 1.0)], 0.0);
        p.push(
            ConstraintFamily::Power,
            ConstraintExpr::Affine(SparseRow::new(vec![term(0, 1.0)], 1.0)),
        );
        p.push(
            ConstraintFamily::Qos,
            ConstraintExpr::Affine(SparseRow::new(vec![term(0, -1.0)], 1.0)),
        );
        let err = solve_convex(&p, None, &SolverOptions::default()).unwrap_err();
        match err {
            Error::Infeasible { families } => {
                assert!(!families.is_empty());
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn empty_interior_equality_is_tolerated() {
        // p >= 0 and p <= 0 force p = 0; the slack keeps a usable interior
        let mut p = ConvexProgram::new(1);
        p.objective = SparseRow::new(vec![term(0, 1.0)], 0.0);
        p.push(
            ConstraintFamily::NonNeg,
            ConstraintExpr::Affine(SparseRow::new(vec![term(0, -1.0)], 0.0)),
        );
        p.push(
            ConstraintFamily::CommonRate,
            ConstraintExpr::Affine(SparseRow::new(vec![term(0, 1.0)], 0.0)),
        );
        let sol = solve_convex(&p, None, &SolverOptions::default()).unwrap();
        assert!(sol.x[0].abs() <= 1e-6);
        assert!(sol.max_violation <= 1e-6);
    }

    // --- projected-gradient reference oracle ---------------------------------

    /// Dykstra alternating projection onto {||x|| <= r} ∩ {|x_i| <= b_i}.
    fn project_ball_box(x0: &DVector<f64>, r: f64, b: &DVector<f64>) -> DVector<f64> {
        let mut x = x0.clone();
        let mut p = DVector::zeros(x.len());
        let mut q = DVector::zeros(x.len());
        for _ in 0..500 {
            let y = {
                let z = &x + &p;
                let nz = z.norm();
                if nz <= r {
                    z
                } else {
                    z * (r / nz)
                }
            };
            p = &x + &p - &y;
            let w = {
                let z = &y + &q;
                DVector::from_fn(z.len(), |i, _| z[i].clamp(-b[i], b[i]))
            };
            q = &y + &q - &w;
            if (&w - &x).norm() < 1e-13 {
                return w;
            }
            x = w;
        }
        x
    }

    /// Projected gradient ascent for max c^T x over the ball-box intersection.
    fn pg_oracle(c: &DVector<f64>, r: f64, b: &DVector<f64>) -> f64 {
        let mut x = DVector::zeros(c.len());
        let eta = 0.1;
        for _ in 0..20_000 {
            let x_new = project_ball_box(&(&x + c * eta), r, b);
            if (&x_new - &x).norm() < 1e-12 {
                x = x_new;
                break;
            }
            x = x_new;
        }
        c.dot(&x)
    }

    #[test]
    fn random_instances_match_projected_gradient() {
        let mut rng = crate::channel::seeded_rng(99);
        for trial in 0..20 {
            let n = 2 + (trial % 4);
            let c = DVector::from_fn(n, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
            let r = 0.5 + rng.gen::<f64>();
            let b = DVector::from_fn(n, |_, _| 0.3 + rng.gen::<f64>());

            let mut p = ConvexProgram::new(n);
            p.objective = SparseRow::new(
                (0..n).map(|i| term(i, c[i])).collect(),
                0.0,
            );
            p.push(
                ConstraintFamily::Power,
                ConstraintExpr::Quadratic {
                    factors: (0..n)
                        .map(|i| SparseRow::new(vec![term(i, 1.0)], 0.0))
                        .collect(),
                    affine: SparseRow::new(vec![], -r * r),
                },
            );
            for i in 0..n {
                p.push(
                    ConstraintFamily::UnitModulus,
                    ConstraintExpr::Affine(SparseRow::new(vec![term(i, 1.0)], -b[i])),
                );
                p.push(
                    ConstraintFamily::UnitModulus,
                    ConstraintExpr::Affine(SparseRow::new(vec![term(i, -1.0)], -b[i])),
                );
            }
            let sol = solve_convex(&p, None, &SolverOptions::default()).unwrap();
            let reference = pg_oracle(&c, r, &b);
            let scale = reference.abs().max(1e-6);
            assert!(
                (sol.objective - reference).abs() / scale < 1e-4,
                "trial {trial}: ipm {} vs pg {}",
                sol.objective,
                reference
            );
        }
    }

    #[test]
    fn warm_start_is_accepted() {
        let mut p = ConvexProgram::new(1);
        p.objective = SparseRow::new(vec![term(0, 1.0)], 0.0);
        p.push(
            ConstraintFamily::Power,
            ConstraintExpr::Affine(SparseRow::new(vec![term(0, 1.0)], -1.0)),
        );
        let warm = DVector::from_element(1, 0.5);
        let sol = solve_convex(&p, Some(&warm), &SolverOptions::default()).unwrap();
        assert_relative_eq!(sol.x[0], 1.0, epsilon = 1e-6);
    }
}
