use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use mimonet::link::Impairments;
use simcli::config::ExperimentConfig;
use simcli::spec::{parse_impairments, parse_list, ExperimentSpec, Scenario, DEFAULT_SEED, PAPER_TRIALS};

/// Runs simulation experiments and writes CSV/JSON results.
#[derive(Debug, Parser)]
#[command(name = "simcli", version, about)]
struct Cli {
    #[arg(value_enum)]
    scenario: Scenario,
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Pair counts, e.g. `2,6,10` or `2..10`.
    #[arg(long)]
    k: Option<String>,
    /// Receive antenna counts, e.g. `1..4`.
    #[arg(long)]
    nrx: Option<String>,
    /// Impairment sets: ideal, imp, pn, rfo, ce or combinations like rfo+ce.
    #[arg(long, value_delimiter = ',', value_parser = parse_impairments)]
    impairments: Option<Vec<Impairments>>,
    /// Trials per sweep cell.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Rate table cache; `<out>/tables` when omitted.
    #[arg(long)]
    tables: Option<PathBuf>,
    /// Full-length runs (1000 trials).
    #[arg(long)]
    paper: bool,
    /// Build missing or stale rate tables instead of failing.
    #[arg(long)]
    build_tables: bool,
    /// Symbol vectors per oracle point.
    #[arg(long)]
    symbols: Option<usize>,
    /// Trials per cell with a per-iteration DPRC trace.
    #[arg(long)]
    trace: Option<usize>,
}

fn spec_from(cli: Cli) -> anyhow::Result<ExperimentSpec> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let mut spec = ExperimentSpec::new(cli.scenario, cfg.params, cli.out.clone());
    spec.ga = cfg.ga;
    spec.dprc = cfg.dprc;
    spec.table_config = cfg.rate_table;
    if let Some(k) = cli.k {
        spec.k_values = parse_list(&k).map_err(|e| anyhow::anyhow!("--k: {e}"))?;
    }
    if let Some(n) = cli.nrx {
        spec.n_rx = parse_list(&n).map_err(|e| anyhow::anyhow!("--nrx: {e}"))?;
    }
    if let Some(f) = cli.impairments {
        spec.impairments = f;
    }
    if cli.paper {
        spec.n_trials = PAPER_TRIALS;
    }
    if let Some(t) = cli.trials {
        spec.n_trials = t;
    }
    if let Some(s) = cli.symbols {
        spec.n_symbols = s;
    }
    if let Some(t) = cli.trace {
        spec.trace_trials = t;
    }
    spec.seed = cli.seed;
    if let Some(t) = cli.tables {
        spec.tables_dir = t;
    }
    spec.build_tables = cli.build_tables;
    spec.validate()?;
    Ok(spec)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let jobs = cli.jobs;
    let spec = match spec_from(cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| simcli::run_experiment(&spec)) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
