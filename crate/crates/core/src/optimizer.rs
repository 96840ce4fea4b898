// Copyright 2026 hyperqec Contributors
// SPDX-License-Identifier: Apache-2.0

//! Two-stage search for mode transforms implementing a target gate.
//!
//! Stage 1 climbs the fidelity from a random start until it passes the
//! threshold. Stage 2 then climbs the success probability with a penalty
//! `P - λ·max(0, threshold - F)`, doubling `λ` whenever an accepted step
//! leaves the feasible set, and keeps the best feasible iterate.
//!
//! Both metrics are invariant under rescaling of the transform, so iterates
//! are kept at unit largest singular value. Stage 2 additionally projects
//! every trial point onto the set of contractions (singular values clipped
//! to 1) before renormalizing.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::ModeTransform;
use crate::metrics::{metric_adjoints, raw_metrics, ContractionPlan, GateMetrics, MeasurementScheme};
use crate::targets::{quad_rail_basis, reduced_basis, reduced_csign, target_csign, TargetGate};

/// Finite-difference step used by [`gradient`].
pub const FD_STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchSpace {
    /// `(V_A, V↻_A1, V↺_A1)` plus three ancillas: 6x6 matrices.
    #[default]
    Reduced,
    /// All six computational modes plus three ancillas: 9x9 matrices.
    Full,
}

impl SearchSpace {
    pub fn mode_count(self) -> usize {
        match self {
            SearchSpace::Reduced => 6,
            SearchSpace::Full => 9,
        }
    }

    pub fn target(self) -> TargetGate {
        match self {
            SearchSpace::Reduced => reduced_csign(),
            SearchSpace::Full => target_csign(),
        }
    }

    pub fn default_scheme(self) -> MeasurementScheme {
        MeasurementScheme::three_single_photons(self.mode_count() - 3)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stage1Config {
    pub max_iterations: usize,
    pub initial_step: f64,
    pub min_step: f64,
    /// Stage 1 keeps climbing until the infidelity is this fraction of the
    /// allowed `1 - threshold`, so stage 2 starts inside the feasible set.
    pub interior_fraction: f64,
}

impl Default for Stage1Config {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            initial_step: 0.1,
            min_step: 1e-14,
            interior_fraction: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stage2Config {
    pub max_iterations: usize,
    pub initial_step: f64,
    pub min_step: f64,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub max_penalty: f64,
    /// Stop when the best feasible P improved by less than
    /// `relative_tolerance` over the last `window` iterations.
    pub window: usize,
    pub relative_tolerance: f64,
    /// Upper bound on the step length (Frobenius norm of the change).
    pub max_step: f64,
    /// Gauss-Newton corrections applied to each trial point. At a unit
    /// threshold they stop once the target residual is below
    /// `restoration_tolerance` relative to the contraction map's norm;
    /// below it they aim `restoration_tolerance` above the threshold.
    pub restoration_iterations: usize,
    pub restoration_tolerance: f64,
}

impl Default for Stage2Config {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            initial_step: 0.01,
            min_step: 1e-14,
            initial_penalty: 10.0,
            penalty_growth: 2.0,
            max_penalty: 1e12,
            window: 50,
            relative_tolerance: 1e-9,
            max_step: 0.5,
            restoration_iterations: 8,
            restoration_tolerance: 1e-11,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizationConfig {
    pub space: SearchSpace,
    /// Defaults to three single photons in, three heralded out.
    pub scheme: Option<MeasurementScheme>,
    pub cycles: usize,
    pub seed: u64,
    pub fidelity_threshold: f64,
    pub stage1: Stage1Config,
    pub stage2: Stage2Config,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            space: SearchSpace::Reduced,
            scheme: None,
            cycles: 200,
            seed: 7,
            fidelity_threshold: 1.0 - 1e-7,
            stage1: Stage1Config::default(),
            stage2: Stage2Config::default(),
        }
    }
}

impl OptimizationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fidelity_threshold > 0.0 && self.fidelity_threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "fidelity threshold {} outside (0, 1)",
                self.fidelity_threshold
            )));
        }
        if self.cycles == 0 {
            return Err(Error::InvalidConfig("cycles must be at least 1".into()));
        }
        let s1 = &self.stage1;
        let s2 = &self.stage2;
        let positive = [
            ("stage1.initial_step", s1.initial_step),
            ("stage1.min_step", s1.min_step),
            ("stage2.initial_step", s2.initial_step),
            ("stage2.min_step", s2.min_step),
            ("stage2.initial_penalty", s2.initial_penalty),
            ("stage2.relative_tolerance", s2.relative_tolerance),
            ("stage2.max_step", s2.max_step),
            ("stage2.restoration_tolerance", s2.restoration_tolerance),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if s2.penalty_growth.is_nan()
            || s2.penalty_growth <= 1.0
            || s2.max_penalty.is_nan()
            || s2.max_penalty < s2.initial_penalty
        {
            return Err(Error::InvalidConfig("penalty schedule must be increasing".into()));
        }
        if !(s1.interior_fraction > 0.0 && s1.interior_fraction <= 1.0) {
            return Err(Error::InvalidConfig(
                "stage1.interior_fraction must lie in (0, 1]".into(),
            ));
        }
        if s2.window == 0 {
            return Err(Error::InvalidConfig("stage2.window must be at least 1".into()));
        }
        Ok(())
    }

    pub fn mode_count(&self) -> usize {
        self.space.mode_count()
    }

    pub fn scheme(&self) -> MeasurementScheme {
        self.scheme.clone().unwrap_or_else(|| self.space.default_scheme())
    }

    pub fn problem(&self) -> Result<Problem> {
        self.validate()?;
        Problem::new(self.space, &self.scheme())
    }
}

/// A target gate with a precompiled contraction plan.
#[derive(Clone, Debug)]
pub struct Problem {
    plan: ContractionPlan,
    target: TargetGate,
}

/// Metrics together with their gradients with respect to the transform
/// (packed as `d/dRe + i d/dIm`), all taken without rescaling.
pub struct Evaluation {
    pub metrics: GateMetrics,
    pub fidelity_gradient: DMatrix<Complex64>,
    pub probability_gradient: DMatrix<Complex64>,
}

impl Problem {
    pub fn new(space: SearchSpace, scheme: &MeasurementScheme) -> Result<Self> {
        let basis = match space {
            SearchSpace::Reduced => reduced_basis(),
            SearchSpace::Full => quad_rail_basis(),
        };
        Ok(Self {
            plan: ContractionPlan::new(space.mode_count(), &basis, scheme)?,
            target: space.target(),
        })
    }

    pub fn mode_count(&self) -> usize {
        self.plan.mode_count()
    }

    fn check(&self, m: &DMatrix<Complex64>) -> Result<()> {
        let n = self.mode_count();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::Dimension(format!(
                "{}x{} matrix for a {n}-mode problem",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// Metrics of `m` taken literally, without rescaling.
    pub fn raw(&self, m: &DMatrix<Complex64>) -> GateMetrics {
        raw_metrics(&self.plan.evaluate(m), &self.target.matrix)
    }

    pub fn raw_with_gradients(&self, m: &DMatrix<Complex64>) -> Evaluation {
        let (a, jac) = self.plan.evaluate_with_jacobian(m);
        let (metrics, fid_adj, prob_adj) = metric_adjoints(&a, &self.target.matrix);
        Evaluation {
            metrics,
            fidelity_gradient: jac.pullback(&fid_adj),
            probability_gradient: jac.pullback(&prob_adj),
        }
    }

    /// Gate metrics of `m` after rescaling to unit largest singular value.
    pub fn metrics(&self, m: &DMatrix<Complex64>) -> Result<GateMetrics> {
        self.check(m)?;
        let (x, _) = normalize(m);
        Ok(self.raw(&x))
    }

    /// Rescaled metrics with their exact gradients. The largest singular
    /// value of `m` must be simple for the gradient to exist.
    pub fn metrics_with_gradients(&self, m: &DMatrix<Complex64>) -> Result<Evaluation> {
        self.check(m)?;
        let svd = m.clone().svd(true, true);
        let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
        let top = svd.singular_values.imax();
        let s = svd.singular_values[top];
        if s == 0.0 {
            return Err(Error::Dimension("zero matrix has no rescaling".into()));
        }
        // d sigma_max, packed like the metric gradients: u v^dag
        let dsigma = u.column(top) * v_t.row(top);
        let x = m / Complex64::new(s, 0.0);
        let raw = self.raw_with_gradients(&x);
        let chain = |g: &DMatrix<Complex64>| {
            let c: f64 = g.iter().zip(m.iter()).map(|(a, b)| (a.conj() * b).re).sum();
            g.map(|z| z / s) - dsigma.map(|z| z * (c / (s * s)))
        };
        Ok(Evaluation {
            metrics: raw.metrics,
            fidelity_gradient: chain(&raw.fidelity_gradient),
            probability_gradient: chain(&raw.probability_gradient),
        })
    }
}

/// `m / sigma_max(m)` and `sigma_max(m)`.
fn normalize(m: &DMatrix<Complex64>) -> (DMatrix<Complex64>, f64) {
    let s = m.clone().singular_values().max();
    if s == 0.0 {
        return (m.clone(), 0.0);
    }
    (m / Complex64::new(s, 0.0), s)
}

/// Nearest contraction in Frobenius norm (singular values clipped to 1),
/// rescaled so its largest singular value is exactly 1.
fn project(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut svd = m.clone().svd(true, true);
    let top = svd.singular_values.max();
    if top == 0.0 {
        return m.clone();
    }
    let cap = top.min(1.0);
    svd.singular_values.iter_mut().for_each(|s| *s = s.min(cap) / cap);
    svd.recompose().expect("u and v_t requested")
}

/// Rescaled fidelity of `m` against the problem's target.
pub fn objective_fidelity(m: &ModeTransform, problem: &Problem) -> Result<f64> {
    Ok(problem.metrics(m.matrix())?.fidelity)
}

/// Central finite-difference gradient of `objective` with step
/// [`FD_STEP`], packed as `df/dRe + i df/dIm` per entry.
pub fn gradient<F>(objective: F, m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>>
where
    F: Fn(&DMatrix<Complex64>) -> f64,
{
    let mut work = m.clone();
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    let probe = |work: &mut DMatrix<Complex64>, idx: (usize, usize), delta: Complex64| {
        let orig = work[idx];
        work[idx] = orig + delta;
        let plus = objective(work);
        work[idx] = orig - delta;
        let minus = objective(work);
        work[idx] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok((plus - minus) / (2.0 * FD_STEP))
    };
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let re = probe(&mut work, (r, c), Complex64::new(FD_STEP, 0.0))?;
            let im = probe(&mut work, (r, c), Complex64::new(0.0, FD_STEP))?;
            out[(r, c)] = Complex64::new(re, im);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage1Status {
    Converged,
    IterationLimit,
    StepCollapse,
}

#[derive(Clone, Debug)]
pub struct Stage1Outcome {
    /// Normalized to unit largest singular value.
    pub matrix: ModeTransform,
    pub fidelity: f64,
    pub iterations: usize,
    pub status: Stage1Status,
    /// Fidelity after each accepted step, starting with the start point.
    pub trace: Vec<f64>,
}

impl Stage1Outcome {
    pub fn converged(&self) -> bool {
        self.status == Stage1Status::Converged
    }
}

/// Gradient ascent on the rescaled fidelity with backtracking.
pub fn stage1_fidelity_ascent(
    start: &ModeTransform,
    problem: &Problem,
    cfg: &OptimizationConfig,
) -> Result<Stage1Outcome> {
    problem.check(start.matrix())?;
    let limits = &cfg.stage1;
    let (mut m, _) = normalize(start.matrix());
    let mut eval = problem.raw_with_gradients(&m);
    let mut trace = vec![eval.metrics.fidelity];
    let aim = 1.0 - limits.interior_fraction * (1.0 - cfg.fidelity_threshold);
    let mut step = limits.initial_step;
    let mut iterations = 0;
    let mut status = loop {
        if eval.metrics.fidelity >= aim {
            break Stage1Status::Converged;
        }
        if iterations == limits.max_iterations {
            break Stage1Status::IterationLimit;
        }
        iterations += 1;
        let mut accepted = false;
        while step >= limits.min_step {
            let (trial, _) = normalize(&(&m + &eval.fidelity_gradient * Complex64::new(step, 0.0)));
            let f = problem.raw(&trial).fidelity;
            if f > eval.metrics.fidelity {
                m = trial;
                eval = problem.raw_with_gradients(&m);
                trace.push(eval.metrics.fidelity);
                step *= 2.0;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break Stage1Status::StepCollapse;
        }
    };
    if eval.metrics.fidelity >= cfg.fidelity_threshold {
        status = Stage1Status::Converged;
    }
    Ok(Stage1Outcome {
        fidelity: eval.metrics.fidelity,
        matrix: ModeTransform::new(m)?,
        iterations,
        status,
        trace,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage2Status {
    Converged,
    IterationLimit,
    StepCollapse,
}

#[derive(Clone, Debug)]
pub struct Stage2Outcome {
    /// Best feasible iterate, normalized to unit largest singular value.
    pub matrix: ModeTransform,
    pub metrics: GateMetrics,
    pub iterations: usize,
    pub status: Stage2Status,
    pub final_penalty: f64,
    /// Metrics after each accepted step, starting with the start point.
    pub trace: Vec<GateMetrics>,
}

/// Penalized success-probability ascent from a point meeting the fidelity
/// threshold.
///
/// Each step follows the success-probability gradient projected onto the
/// tangent space of the fidelity constraint (intersected with the saturated
/// part of the contraction ball), then pulls the trial point back with a few
/// Gauss-Newton corrections. A threshold of 1 (to within [`EQUALITY_GAP`])
/// constrains the whole residual against the target; a lower one only the
/// level set of F, and only once F has dropped to it. Trials are accepted on the penalty merit
/// `P - λ·max(0, threshold - F)`.
pub fn stage2_probability_ascent(
    m0: &ModeTransform,
    problem: &Problem,
    cfg: &OptimizationConfig,
) -> Result<Stage2Outcome> {
    problem.check(m0.matrix())?;
    let limits = &cfg.stage2;
    let thr = cfg.fidelity_threshold;
    let equality = 1.0 - thr <= EQUALITY_GAP;
    let restore = |mut x: DMatrix<Complex64>| {
        for _ in 0..limits.restoration_iterations {
            let correction = if equality {
                let (residual, scale) = problem.relative_residual(&x);
                if residual.norm() <= limits.restoration_tolerance * scale {
                    break;
                }
                let (_, lin) = problem.linearize(&x);
                lin.correction(&residual)
            } else {
                let level = problem.linearize_level(&x, true);
                let gap = level.metrics.fidelity - thr;
                if gap >= 0.0 {
                    break;
                }
                level
                    .lin
                    .correction(&DVector::from_element(1, gap - limits.restoration_tolerance))
            };
            x = project(&(&x + from_real(&correction, x.nrows())));
        }
        let g = problem.raw(&x);
        (x, g)
    };
    // Ascent direction: on the unit-fidelity set when the threshold is 1 to
    // within EQUALITY_GAP, otherwise free until F reaches the threshold and
    // then along its level set.
    let ascent = |m: &DMatrix<Complex64>| {
        if equality {
            let (grad, lin) = problem.linearize(m);
            return lin.tangent(&grad);
        }
        let free = problem.linearize_level(m, false);
        let t = free.lin.tangent(&free.probability_gradient);
        if free.metrics.fidelity - thr > LEVEL_GAP || t.dot(&free.fidelity_gradient) >= 0.0 {
            return t;
        }
        let level = problem.linearize_level(m, true);
        level.lin.tangent(&level.probability_gradient)
    };
    let start = project(m0.matrix());
    let start_metrics = problem.raw(&start);
    if start_metrics.fidelity < thr {
        return Err(Error::InvalidConfig(format!(
            "stage 2 start has fidelity {} below the threshold {thr}",
            start_metrics.fidelity
        )));
    }
    let (mut m, mut metrics) = restore(start.clone());
    if metrics.fidelity < start_metrics.fidelity {
        (m, metrics) = (start, start_metrics);
    }
    let mut lambda = limits.initial_penalty;
    let merit = |g: &GateMetrics, lambda: f64| g.success_probability - lambda * (thr - g.fidelity).max(0.0);

    let mut best = (m.clone(), metrics);
    let mut best_history = vec![metrics.success_probability];
    let mut trace = vec![metrics];
    let mut step = limits.initial_step;
    let mut previous: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut iterations = 0;
    let status = loop {
        if iterations == limits.max_iterations {
            break Stage2Status::IterationLimit;
        }
        if best_history.len() > limits.window {
            let now = best.1.success_probability;
            let then = best_history[best_history.len() - 1 - limits.window];
            if now - then <= limits.relative_tolerance * now {
                break Stage2Status::Converged;
            }
        }
        iterations += 1;
        let tangent = ascent(&m);
        let norm = tangent.norm();
        if norm == 0.0 {
            break Stage2Status::Converged;
        }
        let here = to_real(&m);
        // Barzilai-Borwein length from the previous accepted step, if the
        // objective curved downward along it.
        if let Some((x_prev, t_prev)) = &previous {
            let s_k: DVector<f64> = &here - x_prev;
            let y_k: DVector<f64> = &tangent - t_prev;
            let sy = s_k.dot(&y_k);
            if sy < 0.0 {
                step = (s_k.norm_squared() / -sy * norm).clamp(limits.min_step, limits.max_step);
            }
        }
        let direction = &tangent / norm;
        let current = merit(&metrics, lambda);
        let mut accepted = false;
        while step >= limits.min_step {
            let (trial, g) = restore(project(&(&m + from_real(&(&direction * step), m.nrows()))));
            if merit(&g, lambda) > current {
                m = trial;
                metrics = g;
                trace.push(metrics);
                step = (step * 2.0).min(limits.max_step);
                accepted = true;
                previous = Some((here.clone(), tangent.clone()));
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break Stage2Status::StepCollapse;
        }
        if metrics.fidelity < thr {
            lambda = (lambda * limits.penalty_growth).min(limits.max_penalty);
        } else if metrics.success_probability > best.1.success_probability {
            best = (m.clone(), metrics);
        }
        best_history.push(best.1.success_probability);
    };
    Ok(Stage2Outcome {
        matrix: ModeTransform::new(best.0)?,
        metrics: best.1,
        iterations,
        status,
        final_penalty: lambda,
        trace,
    })
}

/// Thresholds within this of 1 are enforced as the equality F = 1.
const EQUALITY_GAP: f64 = 1e-6;

/// Iterates with F within this of a sub-unit threshold sit on its level set.
const LEVEL_GAP: f64 = 1e-9;

/// Singular values at least this close to 1 are treated as saturated.
const ACTIVE_SINGULAR_VALUE: f64 = 1e-9;

/// Relative cutoff below which constraint directions count as redundant.
const RANK_CUTOFF: f64 = 1e-10;
/// Smallest pivot-squared to diagonal ratio accepted from the Gram-matrix
/// Cholesky factor before falling back to the SVD.
const CHOLESKY_CUTOFF: f64 = 1e-12;

/// Real coordinates of a complex matrix: `(Re, Im)` pairs in column-major
/// entry order.
fn to_real(m: &DMatrix<Complex64>) -> DVector<f64> {
    DVector::from_iterator(2 * m.len(), m.iter().flat_map(|z| [z.re, z.im]))
}

fn from_real(x: &DVector<f64>, n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |r, c| {
        let k = 2 * (c * n + r);
        Complex64::new(x[k], x[k + 1])
    })
}

/// First-order model of the stage 2 constraints around a point: the target
/// residual must vanish and saturated singular values must stay at 1.
struct Linearization {
    // constraint Jacobian with one redundant residual pair removed
    c: DMatrix<f64>,
    solver: ConstraintSolver,
}

enum ConstraintSolver {
    // of C C^T, when well conditioned
    Cholesky(Cholesky<f64, Dyn>),
    // thin SVD of C restricted to its numerical rank
    Svd {
        u: DMatrix<f64>,
        sigma: DVector<f64>,
        v: DMatrix<f64>,
    },
}

impl Linearization {
    fn new(c: DMatrix<f64>) -> Self {
        let gram = &c * c.transpose();
        let top = gram.diagonal().max();
        if let Some(chol) = gram.cholesky() {
            let floor = chol.l_dirty().diagonal().min();
            if floor * floor > CHOLESKY_CUTOFF * top {
                return Self {
                    c,
                    solver: ConstraintSolver::Cholesky(chol),
                };
            }
        }
        let svd = c.clone().svd(true, true);
        let (cu, cv_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
        let top = svd.singular_values.max();
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > RANK_CUTOFF * top)
            .collect();
        let solver = ConstraintSolver::Svd {
            u: cu.select_columns(&keep),
            sigma: DVector::from_iterator(keep.len(), keep.iter().map(|&i| svd.singular_values[i])),
            v: cv_t.transpose().select_columns(&keep),
        };
        Self { c, solver }
    }

    /// Minimum-norm `x` with `C x = b` (least squares when inconsistent).
    fn min_norm_solve(&self, b: &DVector<f64>) -> DVector<f64> {
        match &self.solver {
            ConstraintSolver::Cholesky(chol) => self.c.transpose() * chol.solve(b),
            ConstraintSolver::Svd { u, sigma, v } => v * (u.transpose() * b).component_div(sigma),
        }
    }

    /// Component of `g` tangent to the constraint set.
    fn tangent(&self, g: &DVector<f64>) -> DVector<f64> {
        g - self.min_norm_solve(&(&self.c * g))
    }

    /// Minimum-norm step cancelling `residual`, the values of the leading
    /// constraint rows, to first order while leaving the saturated singular
    /// values alone.
    fn correction(&self, residual: &DVector<f64>) -> DVector<f64> {
        let mut b = DVector::zeros(self.c.nrows());
        b.rows_mut(0, residual.len()).copy_from(residual);
        -self.min_norm_solve(&b)
    }
}

impl Problem {
    /// `A - (<Ω, A> / d) Ω` on the structurally nonzero entries of the
    /// contraction map, in real coordinates, and the Frobenius norm of `A`.
    /// The residual is zero exactly at unit fidelity.
    fn relative_residual(&self, m: &DMatrix<Complex64>) -> (DVector<f64>, f64) {
        let a = self.plan.evaluate(m);
        (self.residual_of(&a), a.norm())
    }

    /// Structurally nonzero entries of the contraction map except the first
    /// one carrying target weight: `sum_k conj(Ω_k) r_k` vanishes
    /// identically, so that entry's residual is implied by the others.
    fn residual_entries(&self) -> Vec<(usize, usize)> {
        let omega = &self.target.matrix;
        let mut entries = self.plan.nonzero_entries();
        let first = entries
            .iter()
            .position(|&(j, i)| omega[(j, i)] != Complex64::new(0.0, 0.0))
            .expect("target has a nonzero entry");
        entries.remove(first);
        entries
    }

    fn residual_of(&self, a: &DMatrix<Complex64>) -> DVector<f64> {
        let omega = &self.target.matrix;
        let d = omega.nrows() as f64;
        let overlap: Complex64 = omega.iter().zip(a.iter()).map(|(w, z)| w.conj() * z).sum();
        let entries = self.residual_entries();
        DVector::from_iterator(
            2 * entries.len(),
            entries.iter().flat_map(|&(j, i)| {
                let r = a[(j, i)] - overlap / d * omega[(j, i)];
                [r.re, r.im]
            }),
        )
    }

    /// Success-probability gradient (real coordinates) and the constraint
    /// linearization at `m`, which must have unit largest singular value.
    fn linearize(&self, m: &DMatrix<Complex64>) -> (DVector<f64>, Linearization) {
        let n = m.nrows();
        let vars = 2 * n * n;
        let (a, jac) = self.plan.evaluate_with_jacobian(m);
        let (_, _, prob_adj) = metric_adjoints(&a, &self.target.matrix);
        let grad = to_real(&jac.pullback(&prob_adj));

        let omega = &self.target.matrix;
        let d = omega.nrows() as f64;
        let derivs = jac.entry_derivatives();
        let mut overlap_deriv = DMatrix::<Complex64>::zeros(n, n);
        for ((j, i), dm) in &derivs {
            let w = omega[(*j, *i)];
            if w != Complex64::new(0.0, 0.0) {
                overlap_deriv += dm * w.conj();
            }
        }

        let keep = self.residual_entries();
        let derivs: Vec<_> = derivs.into_iter().filter(|(e, _)| keep.contains(e)).collect();
        let ball = saturation_rows(m);
        let residual_rows = 2 * derivs.len();
        let mut c = DMatrix::<f64>::zeros(residual_rows + ball.nrows(), vars);
        for (e, ((j, i), dm)) in derivs.iter().enumerate() {
            let w = omega[(*j, *i)] / d;
            for col in 0..n {
                for row in 0..n {
                    let g = dm[(row, col)] - overlap_deriv[(row, col)] * w;
                    let x = 2 * (col * n + row);
                    c[(2 * e, x)] = g.re;
                    c[(2 * e, x + 1)] = -g.im;
                    c[(2 * e + 1, x)] = g.im;
                    c[(2 * e + 1, x + 1)] = g.re;
                }
            }
        }
        c.rows_mut(residual_rows, ball.nrows()).copy_from(&ball);
        let lin = Linearization::new(c);
        (grad, lin)
    }

    /// Gradients of P and F (real coordinates) and the linearization of the
    /// saturated singular values, led by the level set of F when
    /// `with_fidelity` is set.
    fn linearize_level(&self, m: &DMatrix<Complex64>, with_fidelity: bool) -> LevelLinearization {
        let eval = self.raw_with_gradients(m);
        let fidelity_gradient = to_real(&eval.fidelity_gradient);
        let ball = saturation_rows(m);
        let c = if with_fidelity {
            let mut c = DMatrix::<f64>::zeros(1 + ball.nrows(), ball.ncols());
            c.row_mut(0).copy_from(&fidelity_gradient.transpose());
            c.rows_mut(1, ball.nrows()).copy_from(&ball);
            c
        } else {
            ball
        };
        LevelLinearization {
            metrics: eval.metrics,
            probability_gradient: to_real(&eval.probability_gradient),
            fidelity_gradient,
            lin: Linearization::new(c),
        }
    }
}

struct LevelLinearization {
    metrics: GateMetrics,
    probability_gradient: DVector<f64>,
    fidelity_gradient: DVector<f64>,
    lin: Linearization,
}

/// Real rows of the Hermitian part of `U_k^dag Δ V_k` over the singular
/// vectors of `m` whose singular values are saturated at 1.
fn saturation_rows(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = m.nrows();
    let svd = m.clone().svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let active: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] >= 1.0 - ACTIVE_SINGULAR_VALUE)
        .collect();
    let k = active.len();
    let uk = u.select_columns(&active);
    let vk = v_t.adjoint().select_columns(&active);
    let mut c = DMatrix::<f64>::zeros(k * k, 2 * n * n);
    for col in 0..n {
        for row in 0..n {
            for (part, unit) in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)]
                .into_iter()
                .enumerate()
            {
                let x = 2 * (col * n + row) + part;
                let mut r = 0;
                for p in 0..k {
                    for q in p..k {
                        let xpq = uk[(row, p)].conj() * unit * vk[(col, q)];
                        let xqp = uk[(row, q)].conj() * unit * vk[(col, p)];
                        let h = (xpq + xqp.conj()) * 0.5;
                        c[(r, x)] = h.re;
                        r += 1;
                        if q > p {
                            c[(r, x)] = h.im;
                            r += 1;
                        }
                    }
                }
            }
        }
    }
    c
}

/// Complex standard normal entries (`E|z|^2 = 1`).
pub fn random_start(mode_count: usize, rng: &mut ChaCha20Rng) -> ModeTransform {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let m = DMatrix::from_fn(mode_count, mode_count, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * scale, im * scale)
    });
    ModeTransform::new(m).expect("finite square matrix")
}

/// The random generator of one cycle; independent of how cycles are
/// scheduled.
pub fn cycle_rng(seed: u64, cycle: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(cycle as u64);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleStatus {
    Converged,
    Stage1Failed,
    Stage2Failed,
}

#[derive(Clone, Debug)]
pub struct CycleOutcome {
    pub cycle: usize,
    pub status: CycleStatus,
    pub matrix: Option<ModeTransform>,
    pub metrics: GateMetrics,
    pub stage1_iterations: usize,
    pub stage2_iterations: usize,
}

/// One complete stage 1 + stage 2 cycle from the seeded random start.
pub fn run_cycle(problem: &Problem, cfg: &OptimizationConfig, cycle: usize) -> CycleOutcome {
    let mut rng = cycle_rng(cfg.seed, cycle);
    let start = random_start(problem.mode_count(), &mut rng);
    let s1 = match stage1_fidelity_ascent(&start, problem, cfg) {
        Ok(s1) => s1,
        Err(_) => {
            return CycleOutcome {
                cycle,
                status: CycleStatus::Stage1Failed,
                matrix: None,
                metrics: GateMetrics {
                    fidelity: 0.0,
                    success_probability: 0.0,
                },
                stage1_iterations: 0,
                stage2_iterations: 0,
            }
        }
    };
    if !s1.converged() {
        return CycleOutcome {
            cycle,
            status: CycleStatus::Stage1Failed,
            metrics: problem.raw(s1.matrix.matrix()),
            matrix: None,
            stage1_iterations: s1.iterations,
            stage2_iterations: 0,
        };
    }
    match stage2_probability_ascent(&s1.matrix, problem, cfg) {
        Ok(s2) => CycleOutcome {
            cycle,
            status: CycleStatus::Converged,
            matrix: Some(s2.matrix),
            metrics: s2.metrics,
            stage1_iterations: s1.iterations,
            stage2_iterations: s2.iterations,
        },
        Err(_) => CycleOutcome {
            cycle,
            status: CycleStatus::Stage2Failed,
            matrix: None,
            metrics: problem.raw(s1.matrix.matrix()),
            stage1_iterations: s1.iterations,
            stage2_iterations: 0,
        },
    }
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    /// `None` when no cycle met the fidelity threshold.
    pub best_matrix: Option<ModeTransform>,
    pub metrics: Option<GateMetrics>,
    /// Successful cycles sorted ascending by success probability.
    pub per_cycle: Vec<GateMetrics>,
    pub seed: u64,
    pub cycles: usize,
    pub failed_cycles: usize,
    pub wall_time_seconds: f64,
}

impl OptimizationResult {
    pub fn flagged(&self) -> bool {
        self.best_matrix.is_none()
    }
}

/// Runs `cfg.cycles` independent cycles in parallel and merges them in
/// cycle order.
pub fn run_cycles(cfg: &OptimizationConfig) -> Result<OptimizationResult> {
    let clock = Instant::now();
    let problem = cfg.problem()?;
    let outcomes: Vec<CycleOutcome> = (0..cfg.cycles)
        .into_par_iter()
        .map(|c| run_cycle(&problem, cfg, c))
        .collect();
    Ok(aggregate(outcomes, cfg, clock.elapsed().as_secs_f64()))
}

fn aggregate(outcomes: Vec<CycleOutcome>, cfg: &OptimizationConfig, wall_time_seconds: f64) -> OptimizationResult {
    let mut ok: Vec<CycleOutcome> = Vec::new();
    let mut failed = 0;
    for o in outcomes {
        if o.status == CycleStatus::Converged && o.metrics.fidelity >= cfg.fidelity_threshold {
            ok.push(o);
        } else {
            failed += 1;
        }
    }
    // Stable: ties keep cycle order.
    ok.sort_by(|a, b| a.metrics.success_probability.total_cmp(&b.metrics.success_probability));
    let best = ok.last().cloned();
    OptimizationResult {
        best_matrix: best.as_ref().and_then(|b| b.matrix.clone()),
        metrics: best.map(|b| b.metrics),
        per_cycle: ok.iter().map(|o| o.metrics).collect(),
        seed: cfg.seed,
        cycles: cfg.cycles,
        failed_cycles: failed,
        wall_time_seconds,
    }
}

/// Groups of at least two sorted values whose neighbours differ by at most
/// `relative_tolerance` of the value; returns each group's mean.
pub fn plateaus(sorted: &[f64], relative_tolerance: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && (sorted[j] - sorted[j - 1]).abs() <= relative_tolerance * sorted[j].abs() {
            j += 1;
        }
        if j - i >= 2 {
            out.push(sorted[i..j].iter().sum::<f64>() / (j - i) as f64);
        }
        i = j;
    }
    out
}
