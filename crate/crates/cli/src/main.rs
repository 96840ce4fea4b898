// Copyright 2026 hyperqec Contributors
// SPDX-License-Identifier: Apache-2.0

//! `hyperqec` command-line tool.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperqec::appendix::{self, active_block, bundled_appendix, verify_appendix};
use hyperqec::dilation::DEFAULT_RANK_TOLERANCE;
use hyperqec::io::{write_distribution_csv, MatrixFile, NetlistFile, RunReport};
use hyperqec::metrics::KNILL_COMBINATION_PROBABILITY;
use hyperqec::optimizer::{plateaus, run_cycles, OptimizationConfig, SearchSpace};
use hyperqec::qec::{protocol_sweep, run_protocol, run_protocol_sampled, seeded_rng, superdense_roundtrip};
use hyperqec::{compile, singular_values, Complex64, ErrorKind, Message, ModeTransform};
use serde::Serialize;
use serde_json::json;

/// Environment variable setting the optimizer's worker thread count.
const THREADS_ENV: &str = "HYPERQEC_THREADS";

/// Pass band of `verify-appendix` around the published success probability.
const APPENDIX_PROBABILITY_TOLERANCE: f64 = 1e-4;
const APPENDIX_FIDELITY_FLOOR: f64 = 1.0 - 1e-6;

/// Singular-value snap used for the bundled appendix block, whose
/// published entries put one saturated singular value at 0.9973.
const APPENDIX_RANK_TOLERANCE: f64 = 5e-3;

/// Photon numbers checked when comparing the dilation against the block.
const POSTSELECTION_PHOTONS: usize = 3;

const ROUND_TRIP_TOLERANCE: f64 = 1e-10;
const POSTSELECTION_TOLERANCE: f64 = 1e-9;
const FIDELITY_TOLERANCE: f64 = 1e-12;

#[derive(Parser)]
#[command(
    name = "hyperqec",
    version,
    about = "Linear-optical encoder design and code simulation"
)]
struct Cli {
    /// Output style on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Score the bundled 9x9 matrix against the controlled-sign target.
    VerifyAppendix(VerifyArgs),
    /// Two-stage optimization from seeded random starts.
    Optimize(OptimizeArgs),
    /// Dilate a matrix to a unitary and decompose it into a beamsplitter mesh.
    Compile(CompileArgs),
    /// Run the error-correcting code through the polarization-flip channel.
    Qec(QecArgs),
    /// Superdense coding with a hyperentangled pair.
    Sdc(SdcArgs),
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    /// Matrix file to verify instead of the bundled one.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Write the resolved active 6x6 block here.
    #[arg(long)]
    emit_block: Option<PathBuf>,
    /// Write the run report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Unused; accepted for a uniform interface.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct OptimizeArgs {
    /// JSON optimization config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    cycles: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    space: Option<SpaceArg>,
    #[arg(long)]
    fidelity_threshold: Option<f64>,
    /// Directory for distribution.csv, best_matrix.json and report.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SpaceArg {
    Reduced,
    Full,
}

#[derive(Args, Serialize)]
struct CompileArgs {
    /// Matrix file; defaults to the active block of the bundled matrix.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Netlist output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Singular values this close to 1 count as 1. Defaults to 1e-9, or
    /// 5e-3 for the bundled block.
    #[arg(long)]
    rank_tolerance: Option<f64>,
    /// Write the run report here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct QecArgs {
    #[arg(long, default_value = "I")]
    error: String,
    /// Real amplitude of |H⟩.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    alpha: f64,
    /// Real amplitude of |V⟩.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    beta: f64,
    /// Every error on 20 random states.
    #[arg(long)]
    all: bool,
    /// Draw the single-photon analysis outcomes instead of projecting.
    #[arg(long)]
    sample: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the run report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SdcArgs {
    #[arg(long, default_value = "00")]
    message: String,
    /// All four messages.
    #[arg(long)]
    all: bool,
    /// Write the run report here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

/// A command's report, its human-readable summary and whether its checks
/// passed.
struct Finished {
    report: RunReport,
    text: String,
    passed: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let clock = Instant::now();
    let result = match &cli.command {
        Command::VerifyAppendix(a) => cmd_verify_appendix(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::Compile(a) => cmd_compile(a),
        Command::Qec(a) => cmd_qec(a),
        Command::Sdc(a) => cmd_sdc(a),
    };
    match result {
        Ok(mut done) => {
            if done.report.wall_time_seconds == 0.0 {
                done.report.wall_time_seconds = clock.elapsed().as_secs_f64();
            }
            match cli.format {
                Format::Text => print!("{}", done.text),
                Format::Json => print!("{}", done.report.to_json_string()),
            }
            if let Err(e) = write_report(&cli.command, &done.report) {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
            if done.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .with_context(|| format!("{THREADS_ENV}={value:?} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("building the thread pool")
}

fn write_report(command: &Command, report: &RunReport) -> anyhow::Result<()> {
    let path = match command {
        Command::VerifyAppendix(a) => a.out.clone(),
        Command::Optimize(a) => a.out.as_ref().map(|d| d.join("report.json")),
        Command::Compile(a) => a.report.clone(),
        Command::Qec(a) => a.out.clone(),
        Command::Sdc(a) => a.out.clone(),
    };
    if let Some(path) = path {
        report
            .write(&path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn read_matrix(path: &Path) -> anyhow::Result<ModeTransform> {
    Ok(MatrixFile::read(path)?.to_transform()?)
}

fn cmd_verify_appendix(args: &VerifyArgs) -> anyhow::Result<Finished> {
    let t = match &args.matrix {
        Some(p) => read_matrix(p)?,
        None => bundled_appendix()?,
    };
    let r = verify_appendix(&t)?;
    let fidelity_ok = r.fidelity >= APPENDIX_FIDELITY_FLOOR;
    let probability_ok =
        (r.success_probability - appendix::PUBLISHED_SUCCESS_PROBABILITY).abs() <= APPENDIX_PROBABILITY_TOLERANCE;
    if let Some(path) = &args.emit_block {
        let block = active_block(&t, &r.resolved_mode_order)?;
        let source = match &args.matrix {
            Some(p) => p.display().to_string(),
            None => "bundled appendix matrix".to_string(),
        };
        MatrixFile::from_transform(&block, "active block (V_A, V↻_A1, V↺_A1, anc1, anc2, anc3)", source).write(path)?;
    }
    let knill_ratio = r.success_probability / KNILL_COMBINATION_PROBABILITY;
    let mut text = String::new();
    text.push_str(&format!("fidelity             {:.12}\n", r.fidelity));
    text.push_str(&format!("success probability  {:.10}\n", r.success_probability));
    text.push_str(&format!("singular values      {:?}\n", r.singular_values));
    text.push_str(&format!(
        "mode order           {:?}\n",
        r.resolved_mode_order.labelled()
    ));
    text.push_str(&format!(
        "ancilla scheme       in {:?} herald {:?}\n",
        r.resolved_scheme.ancilla_input, r.resolved_scheme.herald_pattern
    ));
    text.push_str(&format!("configurations       {}\n", r.configurations_tested));
    text.push_str(&format!("ratio to Knill pair  {knill_ratio:.4}\n"));
    text.push_str(&format!(
        "check                {}\n",
        if fidelity_ok && probability_ok { "PASS" } else { "FAIL" }
    ));
    let payload = json!({
        "report": r,
        "knill_combination_probability": KNILL_COMBINATION_PROBABILITY,
        "knill_ratio": knill_ratio,
        "fidelity_ok": fidelity_ok,
        "probability_ok": probability_ok,
    });
    Ok(Finished {
        report: RunReport::new("verify-appendix", serde_json::to_value(args)?, payload),
        text,
        passed: fidelity_ok && probability_ok,
    })
}

fn optimization_config(args: &OptimizeArgs) -> anyhow::Result<OptimizationConfig> {
    let mut cfg: OptimizationConfig = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => OptimizationConfig::default(),
    };
    if let Some(c) = args.cycles {
        cfg.cycles = c;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(space) = args.space {
        cfg.space = match space {
            SpaceArg::Reduced => SearchSpace::Reduced,
            SpaceArg::Full => SearchSpace::Full,
        };
    }
    if let Some(f) = args.fidelity_threshold {
        cfg.fidelity_threshold = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_optimize(args: &OptimizeArgs) -> anyhow::Result<Finished> {
    let cfg = optimization_config(args)?;
    let result = run_cycles(&cfg)?;
    let ps: Vec<f64> = result.per_cycle.iter().map(|g| g.success_probability).collect();
    let levels = plateaus(&ps, 1e-6);
    let best_sv = result.best_matrix.as_ref().map(singular_values);
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let rows: Vec<(f64, f64)> = result
            .per_cycle
            .iter()
            .rev()
            .map(|g| (g.fidelity, g.success_probability))
            .collect();
        write_distribution_csv(&dir.join("distribution.csv"), &rows)?;
        if let Some(m) = &result.best_matrix {
            let label = format!("best of {} cycles, seed {}", cfg.cycles, cfg.seed);
            MatrixFile::from_transform(m, label, "hyperqec optimize").write(&dir.join("best_matrix.json"))?;
        }
    }
    let mut text = String::new();
    match &result.metrics {
        Some(g) => {
            text.push_str(&format!("best success probability  {:.10}\n", g.success_probability));
            text.push_str(&format!("best fidelity             {:.12}\n", g.fidelity));
        }
        None => text.push_str("no cycle met the fidelity threshold\n"),
    }
    if let Some(sv) = &best_sv {
        text.push_str(&format!("best singular values      {sv:?}\n"));
    }
    text.push_str(&format!(
        "successful cycles         {} of {}\n",
        result.per_cycle.len(),
        result.cycles
    ));
    text.push_str(&format!("plateaus                  {levels:?}\n"));
    text.push_str(&format!(
        "wall time                 {:.1} s\n",
        result.wall_time_seconds
    ));
    let payload = json!({
        "best": result.metrics,
        "best_singular_values": best_sv,
        "best_matrix": result.best_matrix.as_ref().map(|m| MatrixFile::from_transform(m, "best", "hyperqec optimize")),
        "distribution": result.per_cycle,
        "failed_cycles": result.failed_cycles,
        "plateaus": levels,
    });
    let mut report = RunReport::new("optimize", serde_json::to_value(&cfg)?, payload);
    report.seed = Some(cfg.seed);
    report.wall_time_seconds = result.wall_time_seconds;
    Ok(Finished {
        report,
        text,
        passed: !result.flagged(),
    })
}

fn cmd_compile(args: &CompileArgs) -> anyhow::Result<Finished> {
    let (m, default_tolerance, source) = match &args.input {
        Some(p) => (read_matrix(p)?, DEFAULT_RANK_TOLERANCE, p.display().to_string()),
        None => {
            let t = bundled_appendix()?;
            let r = verify_appendix(&t)?;
            (
                active_block(&t, &r.resolved_mode_order)?,
                APPENDIX_RANK_TOLERANCE,
                "bundled appendix active block".to_string(),
            )
        }
    };
    let tolerance = args.rank_tolerance.unwrap_or(default_tolerance);
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        bail!("rank tolerance must be a non-negative number, got {tolerance}");
    }
    let c = compile(&m, tolerance, POSTSELECTION_PHOTONS)?;
    if let Some(path) = &args.out {
        NetlistFile::new(c.netlist.clone()).write(path)?;
    }
    let phase_shifters = c.netlist.elements.len() - c.netlist.beamsplitter_count();
    let passed = c.round_trip_error < ROUND_TRIP_TOLERANCE && c.postselection_error < POSTSELECTION_TOLERANCE;
    let mut text = String::new();
    text.push_str(&format!("input                {source} ({} modes)\n", m.mode_count()));
    text.push_str(&format!("singular values      {:?}\n", c.singular_values));
    text.push_str(&format!("rescaled by          {}\n", c.rescale));
    text.push_str(&format!("rank tolerance       {tolerance:e}\n"));
    text.push_str(&format!("vacuum modes added   {}\n", c.dilation.extra_modes));
    text.push_str(&format!("snap distance        {:.3e}\n", c.dilation.snap_distance));
    text.push_str(&format!("unitary size         {}\n", c.netlist.mode_count));
    text.push_str(&format!("beamsplitters        {}\n", c.netlist.beamsplitter_count()));
    text.push_str(&format!("phase shifters       {phase_shifters}\n"));
    text.push_str(&format!("round-trip error     {:.3e}\n", c.round_trip_error));
    text.push_str(&format!("postselection error  {:.3e}\n", c.postselection_error));
    let payload = json!({
        "source": source,
        "rank_tolerance": tolerance,
        "singular_values": c.singular_values,
        "rescale": c.rescale,
        "extra_modes": c.dilation.extra_modes,
        "snap_distance": c.dilation.snap_distance,
        "mode_count": c.netlist.mode_count,
        "beamsplitters": c.netlist.beamsplitter_count(),
        "phase_shifters": phase_shifters,
        "round_trip_error": c.round_trip_error,
        "postselection_error": c.postselection_error,
        "netlist": c.netlist,
    });
    Ok(Finished {
        report: RunReport::new("compile", serde_json::to_value(args)?, payload),
        text,
        passed,
    })
}

fn cmd_qec(args: &QecArgs) -> anyhow::Result<Finished> {
    let outcomes = if args.all {
        protocol_sweep(args.seed, 20, args.sample)?
    } else {
        let error: ErrorKind = args.error.parse()?;
        let (alpha, beta) = (Complex64::new(args.alpha, 0.0), Complex64::new(args.beta, 0.0));
        if args.sample {
            let mut rng = seeded_rng(args.seed);
            vec![run_protocol_sampled(alpha, beta, error, &mut rng)?]
        } else {
            vec![run_protocol(alpha, beta, error)?]
        }
    };
    let passed = outcomes
        .iter()
        .all(|o| o.matches_table && (o.fidelity - 1.0).abs() <= FIDELITY_TOLERANCE);
    let mut text = String::new();
    for o in &outcomes {
        text.push_str(&format!(
            "error {:<6} syndrome {}  recovery {:<2}  fidelity {:.15}  {}\n",
            o.error.to_string(),
            o.syndrome,
            o.recovery.to_string(),
            o.fidelity,
            if o.matches_table { "matches table" } else { "MISMATCH" }
        ));
    }
    let payload = json!({ "outcomes": outcomes, "all_match": passed });
    let mut report = RunReport::new("qec", serde_json::to_value(args)?, payload);
    report.seed = Some(args.seed);
    Ok(Finished { report, text, passed })
}

fn cmd_sdc(args: &SdcArgs) -> anyhow::Result<Finished> {
    let messages: Vec<Message> = if args.all {
        Message::ALL.to_vec()
    } else {
        vec![args.message.parse()?]
    };
    let outcomes = messages
        .into_iter()
        .map(superdense_roundtrip)
        .collect::<hyperqec::Result<Vec<_>>>()?;
    let passed = outcomes.iter().all(|o| o.sent == o.decoded);
    let mut text = String::new();
    for o in &outcomes {
        text.push_str(&format!(
            "sent {}  detected {}  decoded {}\n",
            o.sent, o.detected, o.decoded
        ));
    }
    let payload = json!({ "outcomes": outcomes, "all_match": passed });
    Ok(Finished {
        report: RunReport::new("sdc", serde_json::to_value(args)?, payload),
        text,
        passed,
    })
}
