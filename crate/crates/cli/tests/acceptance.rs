// Copyright 2026 hyperqec Contributors
// SPDX-License-Identifier: Apache-2.0

//! One PASS/FAIL line per acceptance criterion.
//!
//! Exits nonzero when a check fails that is not listed in `KNOWN_RED`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use common::{evolve_postselect_map, gaussian_matrix, max_abs_diff, naive_permanent, random_unitary, rng};
use hyperqec::appendix::{active_block, bundled_appendix, verify_appendix, PUBLISHED_SUCCESS_PROBABILITY};
use hyperqec::fock::{apply_transform, enumerate_basis, PhotonicState};
use hyperqec::io::RunReport;
use hyperqec::metrics::KNILL_COMBINATION_PROBABILITY;
use hyperqec::optimizer::{gradient, plateaus, random_start, run_cycles, OptimizationConfig, Problem, SearchSpace};
use hyperqec::qec::{protocol_sweep, superdense_roundtrip};
use hyperqec::{
    compile, contraction_map, permanent, reck_decompose, recompose, reduced_basis, Complex64, GateMetrics,
    MeasurementScheme, Message, ModeTransform, SYNDROME_TABLE,
};
use rand::Rng;
use serde_json::Value;

/// Checks that cannot pass with the published data; see the project notes.
const KNOWN_RED: [(u8, &str); 2] = [(1, "singular values"), (3, "upper bound")];

const SEED: u64 = 7;
const CYCLES: usize = 200;

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn check(name: &'static str, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name,
        passed,
        detail: detail.into(),
    }
}

fn hyperqec(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_hyperqec"))
        .args(args)
        .output()
        .unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn criterion1() -> Vec<Check> {
    let clock = Instant::now();
    let (code, stdout) = hyperqec(&["--format", "json", "verify-appendix"]);
    let elapsed = clock.elapsed().as_secs_f64();
    let v: Value = serde_json::from_slice(&stdout).unwrap();
    let r = &v["payload"]["report"];
    let f = r["fidelity"].as_f64().unwrap();
    let p = r["success_probability"].as_f64().unwrap();
    let sv: Vec<f64> = serde_json::from_value(r["singular_values"].clone()).unwrap();
    let expected = [1.0, 1.0, 1.0, 1.0, 1.0, 0.5];
    let sv_dev = sv.iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    vec![
        check("fidelity", f >= 1.0 - 1e-6, format!("F = {f:.16}")),
        check(
            "success probability",
            (p - PUBLISHED_SUCCESS_PROBABILITY).abs() <= 1e-4,
            format!("P = {p:.10}"),
        ),
        check(
            "singular values",
            sv_dev <= 1e-3,
            format!("{sv:.7?}, max deviation {sv_dev:.3e}"),
        ),
        check(
            "report lists configurations",
            r["configurations_tested"].as_u64().unwrap_or(0) > 0
                && r["ranking"].as_array().is_some_and(|a| !a.is_empty()),
            format!("{} tested", r["configurations_tested"]),
        ),
        check("exit code", code == 0, format!("{code}")),
        check("runtime", elapsed < 10.0, format!("{elapsed:.2} s")),
    ]
}

struct Runs {
    unit: (Option<GateMetrics>, Vec<f64>, f64),
    relaxed: Option<GateMetrics>,
}

fn run(threshold: f64) -> (Option<GateMetrics>, Vec<f64>, f64) {
    let cfg = OptimizationConfig {
        cycles: CYCLES,
        seed: SEED,
        fidelity_threshold: threshold,
        ..OptimizationConfig::default()
    };
    let result = run_cycles(&cfg).unwrap();
    let ps = result.per_cycle.iter().map(|g| g.success_probability).collect();
    (result.metrics, ps, result.wall_time_seconds)
}

fn criterion2(runs: &Runs) -> Vec<Check> {
    let (best, ps, secs) = &runs.unit;
    let levels = plateaus(ps, 1e-6);
    let (f, p) = best.map_or((0.0, 0.0), |g| (g.fidelity, g.success_probability));
    vec![
        check("best success probability", p >= 0.0092, format!("P = {p:.10}")),
        check("fidelity", f >= 1.0 - 1e-7, format!("F = {f:.16}")),
        check(
            "plateaus",
            levels.len() >= 2,
            format!("{} plateaus {levels:.6?}", levels.len()),
        ),
        check(
            "runtime",
            *secs < 1800.0,
            format!("{secs:.1} s, {} of {CYCLES} cycles feasible", ps.len()),
        ),
    ]
}

fn criterion3(runs: &Runs) -> Vec<Check> {
    let unit = runs.unit.0.map_or(0.0, |g| g.success_probability);
    let (f, p) = runs.relaxed.map_or((0.0, 0.0), |g| (g.fidelity, g.success_probability));
    vec![
        check("feasible", f >= 0.99, format!("F = {f:.12}")),
        check("lower bound", p >= 0.0097, format!("P = {p:.10}")),
        check("upper bound", p <= 0.013, format!("P = {p:.10}")),
        check("not below unit threshold", p >= unit, format!("{p:.10} vs {unit:.10}")),
    ]
}

fn criterion4() -> Vec<Check> {
    let r = verify_appendix(&bundled_appendix().unwrap()).unwrap();
    let ratio = r.success_probability / KNILL_COMBINATION_PROBABILITY;
    vec![check("ratio", ratio >= 1.7, format!("{ratio:.4}"))]
}

fn criterion5() -> Vec<Check> {
    let clock = Instant::now();
    let outcomes = protocol_sweep(SEED, 20, false).unwrap();
    let sampled = protocol_sweep(SEED, 20, true).unwrap();
    let sdc: Vec<_> = Message::ALL
        .into_iter()
        .map(|m| superdense_roundtrip(m).unwrap())
        .collect();
    let elapsed = clock.elapsed().as_secs_f64();
    let rows_ok = outcomes.iter().chain(&sampled).all(|o| {
        SYNDROME_TABLE
            .iter()
            .any(|r| r.error == o.error && r.syndrome == o.syndrome && r.recovery == o.recovery)
    });
    let worst = outcomes
        .iter()
        .chain(&sampled)
        .map(|o| (o.fidelity - 1.0).abs())
        .fold(0.0, f64::max);
    vec![
        check(
            "table rows",
            rows_ok && outcomes.len() == 80,
            format!("{} runs", outcomes.len() + sampled.len()),
        ),
        check("fidelity", worst <= 1e-12, format!("max |F - 1| = {worst:.2e}")),
        check(
            "superdense coding",
            sdc.iter().all(|o| o.sent == o.decoded),
            "4 messages",
        ),
        check("runtime", elapsed < 1.0, format!("{elapsed:.3} s")),
    ]
}

fn criterion6() -> Vec<Check> {
    let t = bundled_appendix().unwrap();
    let order = verify_appendix(&t).unwrap().resolved_mode_order;
    let c = compile(&active_block(&t, &order).unwrap(), 5e-3, 3).unwrap();
    let n = c.dilation.unitary.mode_count();
    vec![
        check(
            "7x7 unitary",
            n == 7 && c.dilation.unitary.unitarity_deviation() < 1e-12,
            format!("{n} modes"),
        ),
        check(
            "21 beamsplitters",
            c.netlist.beamsplitter_count() == 21,
            format!("{}", c.netlist.beamsplitter_count()),
        ),
        check(
            "recomposition",
            c.round_trip_error < 1e-10,
            format!("{:.2e}", c.round_trip_error),
        ),
        check(
            "vacuum postselection",
            c.postselection_error < 1e-9,
            format!(
                "{:.2e} (snap distance {:.2e})",
                c.postselection_error, c.dilation.snap_distance
            ),
        ),
    ]
}

fn criterion7() -> Vec<Check> {
    let mut r = rng(SEED);

    let mut perm_worst: f64 = 0.0;
    for case in 0..300 {
        let a = gaussian_matrix(case % 6, &mut r);
        let (fast, slow) = (permanent(&a).unwrap(), naive_permanent(&a));
        perm_worst = perm_worst.max((fast - slow).norm() / slow.norm().max(1e-300));
    }

    let mut conservation_worst: f64 = 0.0;
    let mut photons_ok = true;
    for case in 0..50 {
        let modes = 2 + case % 5;
        let photons = 1 + case % 3;
        let u = random_unitary(modes, &mut r);
        let mut state = PhotonicState::zero(modes);
        let mut norm = 0.0;
        for b in enumerate_basis(modes, photons) {
            let z = Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5);
            norm += z.norm_sqr();
            state.add(b, z).unwrap();
        }
        let out = apply_transform(&u, &state).unwrap();
        conservation_worst = conservation_worst.max((out.norm_sqr() - norm).abs() / norm);
        photons_ok &= out.terms().all(|(s, _)| s.photon_count() == photons);
    }

    let problem = Problem::new(SearchSpace::Reduced, &SearchSpace::Reduced.default_scheme()).unwrap();
    let mut gradient_worst: f64 = 0.0;
    for _ in 0..5 {
        let m = random_start(6, &mut r).into_matrix();
        let eval = problem.raw_with_gradients(&m);
        let fd_f = gradient(|x| problem.raw(x).fidelity, &m).unwrap();
        let fd_p = gradient(|x| problem.raw(x).success_probability, &m).unwrap();
        gradient_worst = gradient_worst
            .max((&eval.fidelity_gradient - &fd_f).norm() / fd_f.norm())
            .max((&eval.probability_gradient - &fd_p).norm() / fd_p.norm());
    }

    let mut map_worst: f64 = 0.0;
    let basis = reduced_basis();
    let scheme = MeasurementScheme::three_single_photons(3);
    for case in 0..10 {
        let t = if case % 2 == 0 {
            random_unitary(6, &mut r)
        } else {
            ModeTransform::new(gaussian_matrix(6, &mut r)).unwrap()
        };
        let direct = contraction_map(&t, &basis, &scheme).unwrap();
        map_worst = map_worst.max(max_abs_diff(
            &direct.matrix,
            &evolve_postselect_map(&t, &basis, &scheme),
        ));
    }

    let mut reck_worst: f64 = 0.0;
    let mut counts_ok = true;
    for case in 0..50 {
        let n = 2 + case % 8;
        let u = random_unitary(n, &mut r);
        let net = reck_decompose(&u).unwrap();
        counts_ok &= net.beamsplitter_count() == n * (n - 1) / 2;
        reck_worst = reck_worst.max((recompose(&net).unwrap().matrix() - u.matrix()).norm());
    }

    vec![
        check("permanent", perm_worst < 1e-12, format!("max rel err {perm_worst:.2e}")),
        check(
            "conservation",
            conservation_worst < 1e-10 && photons_ok,
            format!("max rel norm drift {conservation_worst:.2e}"),
        ),
        check(
            "gradients",
            gradient_worst < 1e-5,
            format!("max rel err {gradient_worst:.2e}"),
        ),
        check(
            "contraction map",
            map_worst < 1e-10,
            format!("max abs err {map_worst:.2e}"),
        ),
        check(
            "decomposition",
            reck_worst < 1e-10 && counts_ok,
            format!("max Frobenius err {reck_worst:.2e} on 50 unitaries"),
        ),
    ]
}

fn payload_of(report: &Path) -> (Value, Value) {
    let r = RunReport::read(report).unwrap();
    (r.config, r.payload)
}

/// Runs a command, then re-runs it from the echoed config and seed and
/// compares the serialized payloads.
fn rerun_matches(
    dir: &Path,
    name: &str,
    args: &[&str],
    out_flag: &str,
    rerun: impl Fn(&Value, &str) -> Vec<String>,
) -> bool {
    let first = dir.join(format!("{name}-1"));
    let second = dir.join(format!("{name}-2"));
    let report_path = |p: &Path| {
        if out_flag == "--out" && name == "optimize" {
            p.join("report.json")
        } else {
            p.to_path_buf()
        }
    };
    let mut a: Vec<&str> = args.to_vec();
    let first_str = first.to_str().unwrap().to_string();
    a.extend([out_flag, &first_str]);
    if hyperqec(&a).0 != 0 {
        return false;
    }
    let (config, payload) = payload_of(&report_path(&first));
    let second_str = second.to_str().unwrap().to_string();
    let again = rerun(&config, &second_str);
    let again: Vec<&str> = again.iter().map(String::as_str).collect();
    if hyperqec(&again).0 != 0 {
        return false;
    }
    let (_, payload2) = payload_of(&report_path(&second));
    serde_json::to_string(&payload).unwrap() == serde_json::to_string(&payload2).unwrap()
}

fn flag_args(config: &Value, command: &str, keys: &[(&str, &str)]) -> Vec<String> {
    let mut out = vec![command.to_string()];
    for (key, flag) in keys {
        match &config[*key] {
            Value::Bool(true) => out.push(flag.to_string()),
            Value::Bool(false) | Value::Null => {}
            Value::String(s) => out.extend([flag.to_string(), s.clone()]),
            v => out.extend([flag.to_string(), v.to_string()]),
        }
    }
    out
}

fn criterion8() -> Vec<Check> {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    let cfg_path = d.join("optimize-config.json");
    let optimize = rerun_matches(
        d,
        "optimize",
        &["optimize", "--cycles", "3", "--seed", "11"],
        "--out",
        |config, out| {
            std::fs::write(&cfg_path, serde_json::to_string(config).unwrap()).unwrap();
            vec![
                "optimize".into(),
                "--config".into(),
                cfg_path.to_str().unwrap().into(),
                "--out".into(),
                out.into(),
            ]
        },
    );
    let verify = rerun_matches(d, "verify", &["verify-appendix"], "--out", |c, out| {
        let mut a = flag_args(c, "verify-appendix", &[("matrix", "--matrix"), ("seed", "--seed")]);
        a.extend(["--out".into(), out.into()]);
        a
    });
    let compile = rerun_matches(d, "compile", &["compile"], "--report", |c, out| {
        let mut a = flag_args(
            c,
            "compile",
            &[
                ("input", "--in"),
                ("rank_tolerance", "--rank-tolerance"),
                ("seed", "--seed"),
            ],
        );
        a.extend(["--report".into(), out.into()]);
        a
    });
    let qec_keys = [
        ("error", "--error"),
        ("alpha", "--alpha"),
        ("beta", "--beta"),
        ("all", "--all"),
        ("sample", "--sample"),
        ("seed", "--seed"),
    ];
    let qec = rerun_matches(
        d,
        "qec",
        &["qec", "--all", "--sample", "--seed", "5"],
        "--out",
        |c, out| {
            let mut a = flag_args(c, "qec", &qec_keys);
            a.extend(["--out".into(), out.into()]);
            a
        },
    );
    let sdc = rerun_matches(d, "sdc", &["sdc", "--all"], "--out", |c, out| {
        let mut a = flag_args(
            c,
            "sdc",
            &[("message", "--message"), ("all", "--all"), ("seed", "--seed")],
        );
        a.extend(["--out".into(), out.into()]);
        a
    });
    vec![
        check("optimize", optimize, "3 cycles, seed 11"),
        check("verify-appendix", verify, ""),
        check("compile", compile, ""),
        check("qec", qec, "--all --sample"),
        check("sdc", sdc, "--all"),
    ]
}

fn main() -> ExitCode {
    let clock = Instant::now();
    println!("running optimizer batches ({CYCLES} cycles, seed {SEED}, thresholds 1 - 1e-7 and 0.99)");
    let runs = Runs {
        unit: run(OptimizationConfig::default().fidelity_threshold),
        relaxed: run(0.99).0,
    };
    let criteria: Vec<(u8, &str, Vec<Check>)> = vec![
        (1, "appendix verification", criterion1()),
        (2, "optimization reproduction", criterion2(&runs)),
        (3, "relaxed-fidelity point", criterion3(&runs)),
        (4, "baseline ordering", criterion4()),
        (5, "syndrome table and superdense coding", criterion5()),
        (6, "dilation and decomposition", criterion6()),
        (7, "property suites", criterion7()),
        (8, "determinism", criterion8()),
    ];

    let mut unexpected = 0;
    for (id, title, checks) in &criteria {
        let passed = checks.iter().all(|c| c.passed);
        println!("{} criterion {id}: {title}", if passed { "PASS" } else { "FAIL" });
        for c in checks {
            let known = KNOWN_RED.contains(&(*id, c.name));
            let mark = match (c.passed, known) {
                (true, _) => "ok",
                (false, true) => "red (known)",
                (false, false) => "red",
            };
            if !c.passed && !known {
                unexpected += 1;
            }
            println!("    {:<28} {:<12} {}", c.name, mark, c.detail);
        }
    }
    println!("total {:.1} s", clock.elapsed().as_secs_f64());
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
