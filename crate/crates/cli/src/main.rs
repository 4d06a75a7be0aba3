mod config;
mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;
use supmeasure::experiments::{run_experiment, ExperimentName};
use supmeasure::model::{ModelConfig, ModelRun};
use supmeasure::simulate::LimitRun;
use supmeasure::SetFamily;

use config::{figure_preset, parse_intervals, PartialConfig};
use output::{metadata, sidecar, summary_row, write_csv, JsonLines, SUMMARY_HEADER};

#[derive(Parser, Debug)]
#[command(name = "supmeasure", version, about = "Simulate and verify random sup-measures with aggregation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Truncated Poisson simulation of the limiting sup-measures.
    SimulateLimit(RunArgs),
    /// Normalised empirical sup-measure of the aggregated heavy-tailed model.
    SimulateModel(RunArgs),
    /// Run a named verification experiment, or `all`.
    Verify(VerifyArgs),
    /// Hypograph and point-process data for one realization (figure preset).
    EmitFigure(RunArgs),
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Flat `key = value` file using the configuration field names.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_family)]
    family: Option<SetFamily>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    #[arg(long = "mn-kappa", visible_alias = "kappa")]
    kappa: Option<f64>,
    #[arg(long = "trunc-L", visible_alias = "trunc-l")]
    trunc_l: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Falls back to SUPMEASURE_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Comma-separated `a/b:c/d` open intervals.
    #[arg(long)]
    intervals: Option<String>,
    /// Subtract the small-reward drift from the model.
    #[arg(long)]
    drift: bool,
    #[arg(long)]
    delta: Option<f64>,
    /// Also record the top-ℓ sup-measure.
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long = "j-max")]
    j_max: Option<usize>,
    /// Main output file; sidecar files are named after it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Extra figure data to write.
    #[arg(long, value_delimiter = ',')]
    emit: Vec<Emit>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Experiment name or `all`.
    #[arg(long)]
    name: String,
    /// Replicates or configurations drawn by the experiment.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    Hypograph,
    Pointprocess,
}

fn parse_family(s: &str) -> Result<SetFamily, String> {
    s.parse().map_err(|e: supmeasure::Error| e.to_string())
}

/// Usage and configuration problems exit with 2, failed runs with 1.
enum Failure {
    Usage(String),
    Run(String),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(format!("i/o error: {e}"))
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn run_failure(e: supmeasure::Error) -> Failure {
    match e {
        supmeasure::Error::InvalidConfig(_)
        | supmeasure::Error::InvalidParameter { .. }
        | supmeasure::Error::InvalidInterval(_)
        | supmeasure::Error::Unsupported(_) => Failure::Usage(e.to_string()),
        other => Failure::Run(other.to_string()),
    }
}

impl CommonArgs {
    fn partial(&self) -> Result<PartialConfig, Failure> {
        let file = match &self.config {
            Some(p) => PartialConfig::load(p).map_err(Failure::Usage)?,
            None => PartialConfig::default(),
        };
        let flags = PartialConfig {
            alpha: self.alpha,
            beta: self.beta,
            p: self.p,
            n: self.grid_n,
            kappa: self.kappa,
            l: self.trunc_l,
            replicates: self.replicates,
            seed: self.seed,
            intervals: self
                .intervals
                .as_deref()
                .map(parse_intervals)
                .transpose()
                .map_err(Failure::Usage)?,
            set_family: self.family,
            drift: self.drift.then_some(true),
            delta: self.delta,
            ell: self.ell,
            j_max: self.j_max,
        };
        Ok(file.merged(flags))
    }

    fn model_config(&self, base: ModelConfig) -> Result<ModelConfig, Failure> {
        self.partial()?.apply_to(base).map_err(Failure::Usage)
    }

    fn init_threads(&self) -> Result<(), Failure> {
        if let Some(t) = self.threads {
            if t == 0 {
                return Err(usage("--threads must be positive"));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| Failure::Run(e.to_string()))?;
        }
        Ok(())
    }
}

fn write_figure(run: &LimitRun, out: Option<&Path>, stem: &str, emit: &[Emit], command: &str) -> Result<(), Failure> {
    let cfg = run.config();
    let meta = metadata(command, cfg, cfg.seed);
    let fig = run.figure_data(0).map_err(run_failure)?;
    if emit.contains(&Emit::Hypograph) {
        let path = sidecar(out, stem, "hypograph.jsonl");
        let mut sink = JsonLines::create(Some(&path), &meta)?;
        for h in &fig.hypographs {
            sink.write(h)?;
        }
        sink.finish()?;
        eprintln!("wrote {}", path.display());
    }
    if emit.contains(&Emit::Pointprocess) {
        let path = sidecar(out, stem, "pointprocess.jsonl");
        let mut sink = JsonLines::create(Some(&path), &meta)?;
        for atom in &fig.atoms {
            sink.write(atom)?;
        }
        sink.finish()?;
        eprintln!("wrote {} ({} atoms)", path.display(), fig.atoms.len());
    }
    Ok(())
}

fn write_summary(
    out: Option<&Path>,
    stem: &str,
    meta: &serde_json::Value,
    columns: BTreeMap<String, Vec<Option<f64>>>,
) -> Result<(), Failure> {
    if out.is_none() {
        return Ok(());
    }
    let rows: Vec<Vec<String>> = columns
        .iter()
        .map(|(label, vals)| summary_row(label, vals))
        .collect();
    let path = sidecar(out, stem, "summary.csv");
    write_csv(&path, meta, &SUMMARY_HEADER, &rows)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn simulate_limit(args: &RunArgs) -> Result<(), Failure> {
    let cfg = args.common.model_config(ModelConfig::default())?;
    let run = LimitRun::new(cfg.clone()).map_err(run_failure)?;
    args.common.init_threads()?;
    let records = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|i| run.replicate(i))
        .collect::<supmeasure::Result<Vec<_>>>()
        .map_err(run_failure)?;
    let meta = metadata("simulate-limit", &cfg, cfg.seed);
    let out = args.common.out.as_deref();
    let mut sink = JsonLines::create(out, &meta)?;
    let mut columns: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    for r in &records {
        sink.write(r)?;
        for (object, evals) in [("agg", &r.evals.agg), ("noAgg", &r.evals.no_agg), ("signed", &r.evals.signed)] {
            for (label, v) in evals {
                columns.entry(format!("{object} {label}")).or_default().push(v.finite());
            }
        }
    }
    sink.finish()?;
    write_summary(out, "limit", &meta, columns)?;
    write_figure(&run, out, "limit", &args.emit, "simulate-limit")
}

fn simulate_model(args: &RunArgs) -> Result<(), Failure> {
    let cfg = args.common.model_config(ModelConfig::default())?;
    let run = ModelRun::new(cfg.clone()).map_err(run_failure)?;
    if !args.emit.is_empty() {
        return Err(usage("--emit applies to simulate-limit and emit-figure"));
    }
    args.common.init_threads()?;
    let records = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|i| run.replicate(i))
        .collect::<supmeasure::Result<Vec<_>>>()
        .map_err(run_failure)?;
    let meta = metadata(
        "simulate-model",
        &json!({"config": cfg, "m_n": run.m_n(), "a_n": run.a_n(), "c0": cfg.c0(), "K0": cfg.k0()}),
        cfg.seed,
    );
    let out = args.common.out.as_deref();
    let mut sink = JsonLines::create(out, &meta)?;
    let mut columns: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    for r in &records {
        sink.write(r)?;
        for (label, v) in &r.evals {
            columns.entry(label.clone()).or_default().push(v.finite());
        }
    }
    sink.finish()?;
    write_summary(out, "model", &meta, columns)
}

fn emit_figure(args: &RunArgs) -> Result<(), Failure> {
    let cfg = args.common.model_config(figure_preset())?;
    let run = LimitRun::new(cfg).map_err(run_failure)?;
    let emit = if args.emit.is_empty() {
        vec![Emit::Hypograph, Emit::Pointprocess]
    } else {
        args.emit.clone()
    };
    write_figure(&run, args.common.out.as_deref(), "figure", &emit, "emit-figure")
}

/// Returns whether every experiment passed.
fn verify(args: &VerifyArgs) -> Result<bool, Failure> {
    let names: Vec<ExperimentName> = if args.name == "all" {
        ExperimentName::ALL.to_vec()
    } else {
        vec![args.name.parse().map_err(usage)?]
    };
    let partial = args.common.partial()?;
    let cfg = partial.to_verify(args.samples).map_err(Failure::Usage)?;
    args.common.init_threads()?;
    let meta = metadata("verify", &cfg, cfg.seed);
    let out = args.common.out.as_deref();
    let mut sink = JsonLines::create(out, &meta)?;
    let mut all_pass = true;
    for name in names {
        let report = run_experiment(name, &cfg).map_err(run_failure)?;
        all_pass &= report.pass;
        if out.is_some() {
            print!("{}", report.table());
        } else {
            eprint!("{}", report.table());
        }
        sink.write(&report)?;
    }
    sink.finish()?;
    Ok(all_pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::SimulateLimit(a) => simulate_limit(a).map(|_| true),
        Command::SimulateModel(a) => simulate_model(a).map(|_| true),
        Command::EmitFigure(a) => emit_figure(a).map(|_| true),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
