use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cdasim::engine::simulate;
use cdasim::experiment::{
    format_table, preset, presets, run_experiment, summarize, ExperimentSpec,
};
use cdasim::persist::{read_json, write_json, write_log_dir};
use cdasim::{Error, MarketConfig, Model, Result};

#[derive(Parser)]
#[command(
    name = "cdasim",
    version,
    about = "Continuous double auction simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one market and write its log directory.
    Simulate(SimulateArgs),
    /// Run a replica ensemble from a preset or a spec file.
    Experiment(ExperimentArgs),
    /// Tabulate the fitted exponents of finished experiments.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON market configuration; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<Model>,
    #[arg(long)]
    traders: Option<usize>,
    #[arg(long)]
    rounds: Option<u64>,
    #[arg(long)]
    days: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// GD only: pick a crossing pair whenever one exists.
    #[arg(long)]
    forced: bool,
    /// Also write shouts.csv.
    #[arg(long)]
    shouts: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, conflicts_with = "spec", required_unless_present_any = ["spec", "list"])]
    preset: Option<String>,
    /// JSON experiment spec.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Print the preset names and exit.
    #[arg(long)]
    list: bool,
    /// Replaces the market seed; replica seeds derive from it.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Experiment output directories.
    dirs: Vec<PathBuf>,
    /// Write the rows as JSON instead of a table.
    #[arg(long)]
    json: Option<PathBuf>,
}

/// Reads a user-supplied JSON file; unparsable content is a configuration
/// error rather than an I/O one.
fn read_input<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<T> {
    read_json(path).map_err(|e| match e {
        Error::Format { path, message } => Error::Config(format!("{}: {message}", path.display())),
        other => other,
    })
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let mut config: MarketConfig = match &args.config {
        Some(path) => read_input(path)?,
        None => MarketConfig::default(),
    };
    if let Some(m) = args.model {
        config.model = m;
    }
    if let Some(n) = args.traders {
        config.n_traders = n;
    }
    if let Some(r) = args.rounds {
        config.rounds_per_day = r;
    }
    if let Some(d) = args.days {
        config.n_days = d;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    config.gd_forced_trade |= args.forced;
    let log = simulate(&config)?;
    write_log_dir(&args.out, &log, args.shouts)?;
    eprintln!(
        "{} trades written to {}",
        log.trades.len(),
        args.out.display()
    );
    Ok(())
}

fn run_experiment_cmd(args: ExperimentArgs) -> Result<()> {
    if args.list {
        for p in presets() {
            println!("{}", p.name);
        }
        return Ok(());
    }
    let mut spec: ExperimentSpec = match (&args.preset, &args.spec) {
        (Some(name), _) => preset(name)?,
        (None, Some(path)) => read_input(path)?,
        (None, None) => {
            return Err(Error::Config(
                "either --preset or --spec is required".into(),
            ))
        }
    };
    if let Some(s) = args.seed {
        spec.market.seed = s;
    }
    if let Some(r) = args.replicas {
        spec.replicas = r;
    }
    if let Some(out) = args.out {
        spec.output_dir = out;
    }
    let result = run_experiment(&spec, args.threads)?;
    let s = &result.summary;
    eprintln!(
        "{}: {} replicas, {} trades, results in {}",
        s.name,
        s.replicas.len(),
        s.replicas.iter().map(|r| r.trades).sum::<usize>(),
        result.output_dir.display()
    );
    for (name, fit) in &s.fits {
        eprintln!("  {name}: exponent {:.3} ± {:.3}", fit.exponent, fit.stderr);
    }
    for k in &s.skipped {
        eprintln!("  skipped {}: {}", k.analysis, k.reason);
    }
    Ok(())
}

fn run_summarize(args: SummarizeArgs) -> Result<()> {
    let rows = summarize(&args.dirs);
    match args.json {
        Some(path) => write_json(path, &rows),
        None => {
            print!("{}", format_table(&rows));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors count as configuration errors
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Experiment(a) => run_experiment_cmd(a),
        Command::Summarize(a) => run_summarize(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
