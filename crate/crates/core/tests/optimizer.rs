// Copyright 2026 hyperqec Contributors
// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{fixture, rng, PLATEAU_FIXTURE, PLATEAU_FIXTURE_PROBABILITY};
use hyperqec::appendix::{bundled_appendix, normalized_active_block, verify_appendix};
use hyperqec::optimizer::{
    gradient, objective_fidelity, random_start, run_cycle, run_cycles, stage1_fidelity_ascent,
    stage2_probability_ascent, OptimizationConfig, Problem, SearchSpace,
};
use hyperqec::{singular_values, Complex64, ModeTransform};
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

fn reduced_problem() -> Problem {
    Problem::new(SearchSpace::Reduced, &SearchSpace::Reduced.default_scheme()).unwrap()
}

fn relative_error(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let problem = reduced_problem();
    for seed in 0..5 {
        let m = random_start(6, &mut rng(seed)).matrix().clone();
        let eval = problem.raw_with_gradients(&m);
        let fd_f = gradient(|x| problem.raw(x).fidelity, &m).unwrap();
        let fd_p = gradient(|x| problem.raw(x).success_probability, &m).unwrap();
        assert!(relative_error(&eval.fidelity_gradient, &fd_f) < 1e-5);
        assert!(relative_error(&eval.probability_gradient, &fd_p) < 1e-5);
    }
}

#[test]
fn stage1_fidelity_never_decreases() {
    let problem = reduced_problem();
    let cfg = OptimizationConfig::default();
    let start = random_start(6, &mut rng(3));
    let s1 = stage1_fidelity_ascent(&start, &problem, &cfg).unwrap();
    assert!(s1.trace.windows(2).all(|w| w[1] >= w[0]));
    assert_eq!(s1.trace.len(), s1.iterations + 1);
}

#[test]
fn perturbed_appendix_block_recovers_unit_fidelity() {
    let t = bundled_appendix().unwrap();
    let order = verify_appendix(&t).unwrap().resolved_mode_order;
    let block = normalized_active_block(&t, &order).unwrap();
    let mut r = rng(5);
    let noisy = block.matrix().map(|z| {
        let re: f64 = StandardNormal.sample(&mut r);
        let im: f64 = StandardNormal.sample(&mut r);
        z + Complex64::new(re, im) * 1e-3
    });
    let start = ModeTransform::new(noisy).unwrap();
    let problem = reduced_problem();
    let cfg = OptimizationConfig::default();
    assert!(objective_fidelity(&start, &problem).unwrap() < cfg.fidelity_threshold);
    let s1 = stage1_fidelity_ascent(&start, &problem, &cfg).unwrap();
    assert!(s1.converged());
    assert!(s1.fidelity >= 1.0 - 1e-6);
    assert!(s1.iterations <= 1000, "{}", s1.iterations);
}

#[test]
fn stage2_keeps_fidelity_and_raises_probability() {
    let problem = reduced_problem();
    let cfg = OptimizationConfig::default();
    let start = random_start(6, &mut rng(2));
    let s1 = stage1_fidelity_ascent(&start, &problem, &cfg).unwrap();
    assert!(s1.converged());
    let s2 = stage2_probability_ascent(&s1.matrix, &problem, &cfg).unwrap();

    assert!(s2.metrics.fidelity >= cfg.fidelity_threshold);
    assert!(s2.metrics.success_probability >= s2.trace[0].success_probability);
    let feasible: Vec<f64> = s2
        .trace
        .iter()
        .filter(|g| g.fidelity >= cfg.fidelity_threshold)
        .map(|g| g.success_probability)
        .collect();
    let mut best = 0.0f64;
    for p in feasible {
        assert!(p <= s2.metrics.success_probability + 1e-15);
        best = best.max(p);
    }
    assert_eq!(best, s2.metrics.success_probability);

    // the stored matrix is a contraction
    let sv = singular_values(&s2.matrix);
    assert!(sv[0] <= 1.0 + 1e-9, "{sv:?}");
    let reported = problem.metrics(s2.matrix.matrix()).unwrap();
    assert!((reported.success_probability - s2.metrics.success_probability).abs() < 1e-12);
}

#[test]
fn stage2_from_appendix_block_does_not_lose_probability() {
    let t = bundled_appendix().unwrap();
    let order = verify_appendix(&t).unwrap().resolved_mode_order;
    let block = normalized_active_block(&t, &order).unwrap();
    let problem = reduced_problem();
    let cfg = OptimizationConfig::default();
    let s1 = stage1_fidelity_ascent(&block, &problem, &cfg).unwrap();
    let start_p = problem.metrics(s1.matrix.matrix()).unwrap().success_probability;
    let s2 = stage2_probability_ascent(&s1.matrix, &problem, &cfg).unwrap();
    assert!(s2.metrics.fidelity >= cfg.fidelity_threshold);
    assert!(s2.metrics.success_probability >= start_p);
}

#[test]
fn cycles_are_deterministic() {
    let problem = reduced_problem();
    let cfg = OptimizationConfig {
        seed: 11,
        ..OptimizationConfig::default()
    };
    let a = run_cycle(&problem, &cfg, 4);
    let b = run_cycle(&problem, &cfg, 4);
    assert_eq!(a.status, b.status);
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.matrix.map(|m| m.into_matrix()), b.matrix.map(|m| m.into_matrix()));
}

#[test]
fn batch_of_starts_produces_a_feasible_gate() {
    let cfg = OptimizationConfig {
        cycles: 50,
        seed: 2024,
        ..OptimizationConfig::default()
    };
    let problem = reduced_problem();
    // stage 1 alone: at least one start reaches the threshold
    let hits = (0..cfg.cycles)
        .filter(|&c| {
            let start = random_start(6, &mut hyperqec::optimizer::cycle_rng(cfg.seed, c));
            stage1_fidelity_ascent(&start, &problem, &cfg).unwrap().converged()
        })
        .count();
    assert!(hits >= 1);

    let small = OptimizationConfig {
        cycles: 4,
        ..cfg.clone()
    };
    let result = run_cycles(&small).unwrap();
    assert!(!result.flagged());
    assert!(result
        .per_cycle
        .windows(2)
        .all(|w| w[0].success_probability <= w[1].success_probability));
    let best = result.metrics.unwrap();
    assert_eq!(best, *result.per_cycle.last().unwrap());
    assert!(best.fidelity >= cfg.fidelity_threshold);
}

#[test]
fn plateau_fixture_is_a_unit_fidelity_gate() {
    let t = fixture(PLATEAU_FIXTURE);
    let g = reduced_problem().metrics(t.matrix()).unwrap();
    assert!(g.fidelity >= 1.0 - 1e-12, "{}", g.fidelity);
    assert!((g.success_probability - PLATEAU_FIXTURE_PROBABILITY).abs() < 1e-12);
}

#[test]
#[ignore = "known red: optimized gates saturate five singular values and leave the sixth near 0.81"]
fn optimized_gate_has_two_leading_unit_singular_values() {
    let sv = singular_values(&fixture(PLATEAU_FIXTURE));
    assert!((sv[0] - 1.0).abs() < 1e-6 && (sv[1] - 1.0).abs() < 1e-6);
    assert!(sv[2..].iter().all(|&s| s < 1.0 - 1e-3), "{sv:?}");
}

#[test]
fn invalid_thresholds_are_rejected() {
    for thr in [0.0, 1.0, 1.5, f64::NAN] {
        let cfg = OptimizationConfig {
            fidelity_threshold: thr,
            ..OptimizationConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
