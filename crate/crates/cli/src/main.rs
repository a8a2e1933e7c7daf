use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use annealkit_core::engine::{matched_pair, static_exchange, EnvironmentSpec, DEFAULT_SWAP_ANGLE};
use annealkit_core::harness::{
    analyze_file, load_config, render, run_experiment, AnalyzeOptions, Beta2Source, Format,
    SweepPointResult, RECORDS_FILE,
};
use annealkit_core::schedule::validate_points;
use annealkit_core::thermo::xft_verify;
use annealkit_core::topology::{
    chimera_graph, embed_chain, validate_embedding, Embedding, GraphExport,
};
use annealkit_core::{Error, IsingModel};

#[derive(Parser)]
#[command(
    name = "annealkit",
    version,
    about = "Reverse-annealing experiments and thermodynamic bounds"
)]
struct Cli {
    /// Worker threads (falls back to ANNEALKIT_THREADS, then all cores).
    #[arg(long, global = true, env = "ANNEALKIT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Chimera graph and a one-to-one chain embedding.
    Embed(EmbedArgs),
    /// Check a config, schedule or embedding file.
    Validate(ValidateArgs),
    /// Execute an experiment sweep.
    Run(RunArgs),
    /// Aggregate records into per-point figures of merit.
    Analyze(AnalyzeArgs),
    /// Turn analysis results into CSV, JSONL or SVG.
    Render(RenderArgs),
    /// Verify the exchange fluctuation relation on a static exchange.
    Xft(XftArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Jsonl,
    Svg,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Jsonl => Format::Jsonl,
            OutFormat::Svg => Format::Svg,
        }
    }
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long, default_value_t = 16)]
    rows: usize,
    #[arg(long, default_value_t = 16)]
    cols: usize,
    #[arg(long, default_value_t = 4)]
    shore: usize,
    /// Number of logical chain spins.
    #[arg(long, default_value_t = 300)]
    length: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Schedule file: JSON list of [t, s] breakpoints.
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Graph export with a `mapping` field, as written by `embed`.
    #[arg(long)]
    embedding: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Records file, or a run directory containing one.
    records: PathBuf,
    #[arg(long)]
    beta1: Option<f64>,
    /// "estimate" or a positive number.
    #[arg(long, default_value = "estimate")]
    beta2: String,
    /// Reference energy for F_GS (defaults to each point's ground energy).
    #[arg(long)]
    e_th: Option<f64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "jsonl")]
    format: OutFormat,
}

#[derive(Args)]
struct RenderArgs {
    /// Results file written by `analyze --format jsonl`.
    results: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "svg")]
    format: OutFormat,
}

#[derive(Args)]
struct XftArgs {
    /// Spins per side of the built-in matched system (1 or 2).
    #[arg(long, default_value_t = 1)]
    spins: usize,
    /// Custom system model JSON (requires --env).
    #[arg(long, requires = "env")]
    system: Option<PathBuf>,
    /// Custom environment JSON: {"model", "coupling_strength", "coupling_pairs"}.
    #[arg(long, requires = "system")]
    env: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    beta1: f64,
    #[arg(long, default_value_t = 0.5)]
    beta2: f64,
    #[arg(long, default_value_t = DEFAULT_SWAP_ANGLE)]
    angle: f64,
    /// Also write the joint distribution to DIR/xft.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_vec_pretty(value)?)
        .with_context(|| format!("writing {}", path.display()))
}

fn embed(a: EmbedArgs) -> Result<()> {
    let graph = chimera_graph(a.rows, a.cols, a.shore)?;
    let embedding = embed_chain(&graph, a.length)?;
    let path = a.out.join("embedding.json");
    write_json(&path, &GraphExport::new(&graph, Some(&embedding)))?;
    println!(
        "chimera({}, {}, {}): {} nodes, {} edges; chain of {} written to {}",
        a.rows,
        a.cols,
        a.shore,
        graph.node_count(),
        graph.edge_count_closed_form(),
        a.length,
        path.display()
    );
    Ok(())
}

/// Returns the number of problems found.
fn validate(a: ValidateArgs) -> Result<usize> {
    if a.config.is_none() && a.schedule.is_none() && a.embedding.is_none() {
        bail!("nothing to validate: pass --config, --schedule or --embedding");
    }
    let mut problems = 0;
    if let Some(p) = a.config {
        match load_config(&p) {
            Ok(cfg) => match cfg.model.load() {
                Ok(m) => println!("{}: ok ({} spins)", p.display(), m.n()),
                Err(e) => {
                    problems += 1;
                    println!("{}: model: {e}", p.display());
                }
            },
            Err(Error::Config(violations)) => {
                for v in &violations {
                    println!("{}: {v}", p.display());
                }
                problems += violations.len();
            }
            Err(e) => return Err(e.into()),
        }
    }
    if let Some(p) = a.schedule {
        let points: Vec<(f64, f64)> = read_json(&p)?;
        let issues = validate_points(&points);
        for i in &issues {
            println!("{}: {i}", p.display());
        }
        if issues.is_empty() {
            println!("{}: ok", p.display());
        }
        problems += issues.len();
    }
    if let Some(p) = a.embedding {
        let export: GraphExport = read_json(&p)?;
        let graph = chimera_graph(export.m, export.n, export.t)?;
        let Some(mapping) = export.mapping else {
            bail!("{} has no mapping to validate", p.display());
        };
        let issues = validate_embedding(&graph, &Embedding { mapping });
        for i in &issues {
            println!("{}: {i}", p.display());
        }
        if issues.is_empty() {
            println!("{}: ok", p.display());
        }
        problems += issues.len();
    }
    Ok(problems)
}

fn run(a: RunArgs) -> Result<usize> {
    let mut cfg = load_config(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.master_seed = seed;
    }
    let out = a
        .out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let summary = run_experiment(&cfg, &out)?;
    println!(
        "{} points ({} resumed), {} records written to {}",
        summary.points,
        summary.resumed_points,
        summary.records_written,
        summary.records_path.display()
    );
    for f in &summary.failures {
        eprintln!("point {} run {} failed: {}", f.point, f.run, f.error);
    }
    Ok(summary.failures.len())
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let records = if a.records.is_dir() {
        a.records.join(RECORDS_FILE)
    } else {
        a.records
    };
    let options = AnalyzeOptions {
        beta1: a.beta1,
        beta2: a.beta2.parse::<Beta2Source>()?,
        e_th: a.e_th,
    };
    let analysis = analyze_file(&records, &options)?;
    for w in &analysis.warnings {
        eprintln!("warning: {w}");
    }
    if analysis.results.is_empty() {
        bail!("no sweep point could be analysed");
    }
    for f in render(&analysis.results, a.format.into(), &a.out)? {
        println!("{}", f.display());
    }
    Ok(())
}

fn render_cmd(a: RenderArgs) -> Result<()> {
    let text = fs::read_to_string(&a.results)
        .with_context(|| format!("reading {}", a.results.display()))?;
    let results = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str::<SweepPointResult>)
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("parsing {}", a.results.display()))?;
    if results.is_empty() {
        bail!("{} holds no results", a.results.display());
    }
    for f in render(&results, a.format.into(), &a.out)? {
        println!("{}", f.display());
    }
    Ok(())
}

fn xft(a: XftArgs) -> Result<()> {
    let (system, env): (IsingModel, EnvironmentSpec) = match (&a.system, &a.env) {
        (Some(s), Some(e)) => (IsingModel::load(s)?, read_json(e)?),
        _ => matched_pair(a.spins)?,
    };
    let dist = static_exchange(&system, &env, a.beta1, a.beta2, a.angle)?;
    let error = xft_verify(&dist, a.beta1, a.beta2)?;
    let report = serde_json::json!({
        "system_spins": system.n(),
        "env_spins": env.n_env(),
        "beta1": a.beta1,
        "beta2": a.beta2,
        "swap_angle": a.angle,
        "entries": dist.entries().len(),
        "max_abs_log_error": error,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(dir) = a.out {
        write_json(
            &dir.join("xft.json"),
            &serde_json::json!({ "report": report, "distribution": dist }),
        )?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    let outcome = match cli.command {
        Command::Embed(a) => embed(a).map(|_| 0),
        Command::Validate(a) => validate(a),
        Command::Run(a) => run(a),
        Command::Analyze(a) => analyze(a).map(|_| 0),
        Command::Render(a) => render_cmd(a).map(|_| 0),
        Command::Xft(a) => xft(a).map(|_| 0),
    };
    match outcome {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
