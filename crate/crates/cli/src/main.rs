//! `windcast`: command-line front end for the forecasting pipeline.
//!
//! Every subcommand loads a pipeline configuration, calls one library
//! operation and writes its results as files under `--out`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use windcast_core::pipeline::{
    decompose_segments, emit_report, evaluate_fitted, fit_matrix, load_fitted, prepare,
    run_benchmark, save_fitted, Decomposition, EvalMode, PipelineConfig,
};
use windcast_core::selftest;
use windcast_core::wavelet::frequency_rank;

#[derive(Parser, Debug)]
#[command(name = "windcast", version, about = "Hybrid wavelet-packet / seasonal / BiLSTM wind-speed forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Pipeline configuration file (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed; overrides the configuration.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "windcast-out")]
    out: PathBuf,

    /// Evaluation mode; overrides the configuration.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,

    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Clean and gap-fill the observations; writes cleaned.csv and clean_report.json.
    Ingest,
    /// Augmented Dickey-Fuller test on the cleaned series; writes adf.json.
    Adf,
    /// Wavelet-packet leaves of the normalized train and test segments.
    Decompose,
    /// Fit every configured model and save it under models/.
    Train,
    /// Score models saved by `train`; writes the report files.
    Evaluate,
    /// Fit and score the whole model matrix; writes the report files.
    Benchmark,
    /// Run the built-in property checks.
    Selftest,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Mode {
    Segment,
    Causal,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}\n\nRun `windcast --help` for usage.");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| UsageError("this subcommand requires --config <PATH>".into()))?;
    let mut config = PipelineConfig::from_file(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(mode) = cli.mode {
        config.mode = match mode {
            Mode::Segment => EvalMode::Segment,
            Mode::Causal => EvalMode::Causal,
        };
    }
    Ok(config)
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn say(cli: &Cli, text: &str) {
    if !cli.quiet {
        println!("{text}");
    }
}

fn run(cli: &Cli) -> Result<()> {
    if let Command::Selftest = cli.command {
        return run_selftest(cli);
    }
    let config = load_config(cli)?;
    create_out(&cli.out)?;
    match cli.command {
        Command::Ingest => {
            let prepared = prepare(&config)?;
            let file = std::fs::File::create(cli.out.join("cleaned.csv")).context("creating cleaned.csv")?;
            prepared.series.write_csv(file)?;
            let json = serde_json::to_string_pretty(&prepared.clean_report)?;
            write(&cli.out.join("clean_report.json"), &json)?;
            say(cli, &json);
        }
        Command::Adf => {
            let prepared = prepare(&config)?;
            let json = serde_json::to_string_pretty(&prepared.adf)?;
            write(&cli.out.join("adf.json"), &json)?;
            say(cli, &json);
        }
        Command::Decompose => run_decompose(cli, &config)?,
        Command::Train => {
            let (_, fitted) = fit_matrix(&config)?;
            write(&cli.out.join("config.conf"), config.to_text())?;
            for entry in &fitted {
                let path = cli.out.join("models").join(format!("{}.json", entry.model));
                save_fitted(entry, &path)?;
                say(cli, &format!("saved {}", path.display()));
            }
        }
        Command::Evaluate => {
            let mut fitted = Vec::new();
            for spec in &config.models {
                let path = cli.out.join("models").join(format!("{spec}.json"));
                if !path.exists() {
                    bail!("no saved model at {}; run `windcast train` first", path.display());
                }
                fitted.push(load_fitted(&path)?);
            }
            let artifacts = evaluate_fitted(&config, fitted)?;
            emit_report(&artifacts, &cli.out)?;
            say(cli, artifacts.report.to_csv().trim_end());
        }
        Command::Benchmark => {
            let artifacts = run_benchmark(&config)?;
            emit_report(&artifacts, &cli.out)?;
            say(cli, artifacts.report.to_csv().trim_end());
        }
        Command::Selftest => unreachable!(),
    }
    Ok(())
}

fn run_decompose(cli: &Cli, config: &PipelineConfig) -> Result<()> {
    let prepared = prepare(config)?;
    let seg = decompose_segments(&prepared, config, Decomposition::Wpd, config.execution())?;
    let mut manifest_leaves = Vec::new();
    for (k, (train, test)) in seg.train.iter().zip(&seg.test).enumerate() {
        let mut text = String::from("timestamp,segment,value\n");
        for (segment, values, offset) in [("train", train, 0), ("test", test, prepared.cut)] {
            for (t, v) in values.iter().enumerate() {
                let ts = prepared.series.timestamp(offset + t).format("%Y-%m-%d %H:%M");
                let _ = writeln!(text, "{ts},{segment},{v}");
            }
        }
        let name = format!("leaf_{k}.csv");
        write(&cli.out.join(&name), text)?;
        manifest_leaves.push(serde_json::json!({
            "file": name,
            "index": k,
            "frequency_rank": frequency_rank(k),
        }));
    }
    let manifest = serde_json::json!({
        "wavelet": seg.filters.as_ref().map(|f| f.name()),
        "level": config.wpd_level,
        "boundary": config.boundary,
        "leaf_order": "natural",
        "n_train": prepared.cut,
        "n_test": prepared.values.len() - prepared.cut,
        "normalizer": seg.normalizer,
        "leaves": manifest_leaves,
    });
    let json = serde_json::to_string_pretty(&manifest)?;
    write(&cli.out.join("manifest.json"), &json)?;
    say(cli, &format!("wrote {} leaves to {}", seg.train.len(), cli.out.display()));
    Ok(())
}

fn run_selftest(cli: &Cli) -> Result<()> {
    let checks = selftest::run_all(windcast_core::Execution::Auto);
    let mut failed = 0;
    for c in &checks {
        if !c.passed {
            failed += 1;
        }
        if !cli.quiet || !c.passed {
            println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
    }
    if failed > 0 {
        bail!("{failed} of {} checks failed", checks.len());
    }
    Ok(())
}

