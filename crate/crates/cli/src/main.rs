use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use wwrank::experiments::{
    null_distribution_experiment, rejection_rate_experiment, semicircle_experiment,
    ExperimentConfig, ModelSpec, Statistic,
};
use wwrank::reproduce::{reproduce, ReproduceOptions, Target};
use wwrank::{
    load_matrix, rank_transform, run_test_tailed, spectra, whiten, EntryDistribution,
    Execution, MatrixFormat, Tail, TiePolicy,
};

const EXIT_REJECT: u8 = 10;
const EXIT_USAGE: u8 = 64;

fn exit_code(kind: &str) -> u8 {
    match kind {
        "usage" => EXIT_USAGE,
        "parse" => 65,
        "io" => 66,
        "ties" => 67,
        "numerical" => 68,
        "parameter" => 69,
        _ => 70,
    }
}

/// Rank-based spectral tests for symmetric data matrices.
#[derive(Parser)]
#[command(name = "wwrank", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a matrix file for latent structure; exits 10 on rejection.
    Test(TestArgs),
    /// Rejection rate of the test on simulated data.
    Simulate(SimulateArgs),
    /// Rerun a fixed simulation grid and write CSV plus JSON.
    Reproduce(ReproduceArgs),
    /// Empirical spectral distribution of a whitened rank matrix.
    Esd(EsdArgs),
    /// Null QQ table for the eigenvalue or eigenvector statistic.
    Qq(QqArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Ties {
    Error,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum TailArg {
    TwoSided,
    Upper,
    Lower,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Homogeneous,
    #[value(name = "two_block", alias = "two-block")]
    TwoBlock,
    Planted,
}

#[derive(Args)]
struct TestArgs {
    /// Matrix file.
    path: PathBuf,
    /// dense-csv, upper-triangle-text or weighted-edge-list.
    #[arg(long, default_value = "dense-csv")]
    format: MatrixFormat,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "error")]
    ties: Ties,
    /// Seed for random tie breaking.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "two-sided")]
    tail: TailArg,
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(value_enum, required_unless_present = "config")]
    model: Option<Model>,
    /// Entry law, e.g. `normal(1,0.4)`; inside the blocks for two_block and
    /// planted.
    #[arg(required_unless_present = "config")]
    f1: Option<String>,
    /// Background law for two_block and planted.
    f2: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long, default_value_t = 400)]
    replicates: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// JSON experiment config used instead of the positional arguments.
    #[arg(long, conflicts_with_all = ["model", "f1", "f2", "n", "n1"])]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write per-replicate statistics as CSV.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    /// table1, table2, table3, fig1 or fig2.
    target: Target,
    #[arg(long)]
    seed: Option<u64>,
    /// Replicate multiplier.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long)]
    threads: Option<usize>,
    /// Override the matrix sizes (repeatable).
    #[arg(long = "n")]
    ns: Vec<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct EsdArgs {
    /// Matrix file; omit to simulate a null rank matrix of size --n.
    path: Option<PathBuf>,
    #[arg(long, default_value = "dense-csv")]
    format: MatrixFormat,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    /// Required when simulating, or when breaking ties at random.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "error")]
    ties: Ties,
    /// Histogram CSV path; the JSON summary goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QqArgs {
    #[arg(long, default_value = "eigenvalue")]
    statistic: Statistic,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2000)]
    replicates: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// QQ CSV path; the JSON summary goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::fmt::Debug for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

fn require_seed(seed: Option<u64>, what: &str) -> anyhow::Result<u64> {
    seed.ok_or_else(|| usage(format!("--seed is required for {what}")))
}

fn classify(e: &anyhow::Error) -> &'static str {
    if e.downcast_ref::<Usage>().is_some() {
        "usage"
    } else if let Some(w) = e.downcast_ref::<wwrank::Error>() {
        w.kind()
    } else if e.downcast_ref::<io::Error>().is_some() {
        "io"
    } else if e.downcast_ref::<serde_json::Error>().is_some() {
        "parse"
    } else {
        "internal"
    }
}

fn report_error(kind: &str, message: &str) -> ExitCode {
    let code = exit_code(kind);
    let record = json!({ "error": kind, "message": message, "exit_code": code });
    eprintln!("{record}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            return report_error("usage", first.trim_start_matches("error: "));
        }
    };
    let result = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a).map(|_| 0),
        Command::Reproduce(a) => cmd_reproduce(a).map(|_| 0),
        Command::Esd(a) => cmd_esd(a).map(|_| 0),
        Command::Qq(a) => cmd_qq(a).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => report_error(classify(&e), &format!("{e:#}")),
    }
}

fn emit(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n"))
            .with_context(|| format!("writing {}", p.display()))?,
        None => {
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{text}")?;
        }
    }
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn tie_policy(ties: Ties, seed: Option<u64>) -> anyhow::Result<TiePolicy> {
    Ok(match ties {
        Ties::Error => TiePolicy::Error,
        Ties::Random => TiePolicy::Random {
            seed: require_seed(seed, "--ties random")?,
        },
    })
}

fn execution(threads: Option<usize>) -> anyhow::Result<Execution> {
    if threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    Ok(Execution::with_threads(threads))
}

fn cmd_test(a: TestArgs) -> anyhow::Result<u8> {
    let policy = tie_policy(a.ties, a.seed)?;
    let tail = match a.tail {
        TailArg::TwoSided => Tail::TwoSided,
        TailArg::Upper => Tail::Upper,
        TailArg::Lower => Tail::Lower,
    };
    let m = load_matrix(&a.path, a.format)?;
    let result = run_test_tailed(&m, a.alpha, policy, tail)?;
    emit(&result.to_json()?, a.out.as_deref())?;
    Ok(if result.reject { EXIT_REJECT } else { 0 })
}

fn parse_law(spec: &str) -> anyhow::Result<EntryDistribution> {
    spec.parse::<EntryDistribution>()
        .with_context(|| format!("distribution spec '{spec}'"))
}

fn simulate_config(a: &SimulateArgs) -> anyhow::Result<ExperimentConfig> {
    if let Some(path) = &a.config {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("config {}", path.display()))?;
        if let Some(seed) = a.seed {
            cfg.master_seed = seed;
        }
        if a.threads.is_some() {
            cfg.threads = a.threads;
        }
        return Ok(cfg);
    }
    let seed = require_seed(a.seed, "simulate")?;
    let n = a.n.ok_or_else(|| usage("--n is required"))?;
    let f1 = parse_law(a.f1.as_deref().unwrap_or_default())?;
    let second = || -> anyhow::Result<EntryDistribution> {
        parse_law(a.f2.as_deref().ok_or_else(|| usage("this model needs a second law F2"))?)
    };
    let model = match a.model.ok_or_else(|| usage("model is required"))? {
        Model::Homogeneous => {
            if a.f2.is_some() {
                return Err(usage("homogeneous takes a single law"));
            }
            ModelSpec::Homogeneous { f: f1 }
        }
        Model::TwoBlock => ModelSpec::TwoBlock { f1, f2: second()? },
        Model::Planted => ModelSpec::Planted {
            n1: a.n1.ok_or_else(|| usage("planted needs --n1"))?,
            f1,
            f2: second()?,
        },
    };
    Ok(ExperimentConfig {
        id: format!("simulate-{}", model.name()),
        n,
        model,
        replicates: a.replicates,
        alpha: a.alpha,
        master_seed: seed,
        threads: a.threads,
        scale: 1.0,
    })
}

fn cmd_simulate(a: SimulateArgs) -> anyhow::Result<()> {
    execution(a.threads)?;
    let cfg = simulate_config(&a)?;
    let mut report = rejection_rate_experiment(&cfg)?;
    if let Some(path) = &a.dump {
        let mut w = create(path)?;
        report.replicates.write_csv(&mut w)?;
        w.flush()?;
        report.replicates_path = Some(path.display().to_string());
    }
    emit(&report.to_json()?, a.out.as_deref())
}

fn cmd_reproduce(a: ReproduceArgs) -> anyhow::Result<()> {
    let opts = ReproduceOptions {
        master_seed: require_seed(a.seed, "reproduce")?,
        scale: a.scale,
        exec: execution(a.threads)?,
        ns: (!a.ns.is_empty()).then(|| a.ns.clone()),
    };
    let r = reproduce(a.target, &opts)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for t in &r.tables {
        let path = a.out.join(format!("{}.csv", t.name));
        let mut w = create(&path)?;
        t.write_csv(&mut w)?;
        w.flush()?;
    }
    let json_path = a.out.join(format!("{}.json", r.target));
    emit(&r.to_json()?, Some(&json_path))
}

fn cmd_esd(a: EsdArgs) -> anyhow::Result<()> {
    let (summary, scaled_norm) = match (&a.path, a.n) {
        (Some(_), Some(_)) => return Err(usage("give either a matrix path or --n, not both")),
        (None, None) => return Err(usage("give a matrix path or --n")),
        (Some(path), None) => {
            let m = load_matrix(path, a.format)?;
            let r = rank_transform(&m, tie_policy(a.ties, a.seed)?)?;
            let w = whiten(&r)?;
            let norm = spectra::operator_norm(&w)? / (w.n() as f64).sqrt();
            (spectra::esd(&w, a.bins)?, norm)
        }
        (None, Some(n)) => {
            let s = semicircle_experiment(n, a.bins, require_seed(a.seed, "esd --n")?)?;
            (s.esd, s.scaled_norm)
        }
    };
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        summary.write_csv(&mut w)?;
        w.flush()?;
    }
    let record = json!({
        "n": summary.n,
        "bins": a.bins,
        "ks_to_semicircle": summary.ks_to_semicircle,
        "scaled_norm": scaled_norm,
    });
    emit(&serde_json::to_string_pretty(&record)?, None)
}

fn cmd_qq(a: QqArgs) -> anyhow::Result<()> {
    let seed = require_seed(a.seed, "qq")?;
    let exec = execution(a.threads)?;
    let report = null_distribution_experiment(a.n, a.replicates, seed, a.statistic, exec)?;
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        writeln!(w, "percentile,normal,empirical")?;
        for p in &report.summary.qq {
            writeln!(w, "{},{},{}", p.percentile, p.normal, p.empirical)?;
        }
        w.flush()?;
    }
    emit(&report.to_json()?, None)
}
