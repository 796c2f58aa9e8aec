use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fincast::bench::{eda_summary, render_report, run_bench, run_eda, BenchConfig, Evaluation, ModelKind};
use fincast::classical::ArimaOrder;
use fincast::nbeats::NBeatsMode;

/// Forecasting benchmark: N-BEATS, N-HiTS and classical baselines on OHLCV data.
#[derive(Parser, Debug)]
#[command(name = "bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit every enabled model on the training segment and score the test segment.
    Run(RunArgs),
    /// Write the exploratory plot data.
    Eda {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the comparison table of a finished run.
    Report { dir: PathBuf },
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restrict the run to these models (repeatable): nbeats, nhits, sarima, ets.
    #[arg(long = "model")]
    models: Vec<String>,
    /// N-BEATS stack layout.
    #[arg(long)]
    mode: Option<Mode>,
    /// N-HiTS pooling sizes, one block each, e.g. `8,4,1`.
    #[arg(long, value_delimiter = ',')]
    pools: Option<Vec<usize>>,
    /// SARIMA order `p,d,q`; disables the order search.
    #[arg(long, value_delimiter = ',', conflicts_with = "auto")]
    order: Option<Vec<usize>>,
    /// SARIMA seasonal order `P,D,Q,S`.
    #[arg(long, value_delimiter = ',')]
    seasonal: Option<Vec<usize>>,
    /// Select the SARIMA order by AIC.
    #[arg(long)]
    auto: bool,
    #[arg(long)]
    evaluation: Option<EvalArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Interpretable,
    Generic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EvalArg {
    Rolling,
    Recursive,
}

fn load(path: &PathBuf, out: &Option<PathBuf>) -> Result<BenchConfig> {
    let mut config = BenchConfig::from_file(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(out) = out {
        // Taken relative to the working directory, not the config file.
        config.forecast.output_dir = std::env::current_dir()?.join(out);
    }
    Ok(config)
}

fn apply_overrides(config: &mut BenchConfig, args: &RunArgs) -> Result<()> {
    if let Some(seed) = args.seed {
        config.forecast.seed = seed;
    }
    if !args.models.is_empty() {
        config.forecast.models = args
            .models
            .iter()
            .map(|m| m.parse::<ModelKind>())
            .collect::<fincast::Result<_>>()?;
    }
    if let Some(mode) = args.mode {
        config.nbeats.mode = match mode {
            Mode::Interpretable => NBeatsMode::Interpretable,
            Mode::Generic => NBeatsMode::Generic,
        };
    }
    if let Some(pools) = &args.pools {
        config.nhits.pools = pools.clone();
        config.nhits.forecast_coeffs = None;
        config.nhits.backcast_coeffs = None;
    }
    if let Some(order) = &args.order {
        let [p, d, q] = order[..] else {
            bail!("--order expects p,d,q");
        };
        config.sarima.auto = false;
        let s = config.sarima.order;
        config.sarima.order = ArimaOrder::new(p, d, q).with_seasonal(s.seasonal_p, s.seasonal_d, s.seasonal_q, s.period);
    }
    if let Some(seasonal) = &args.seasonal {
        let [sp, sd, sq, period] = seasonal[..] else {
            bail!("--seasonal expects P,D,Q,S");
        };
        config.sarima.order = config.sarima.order.with_seasonal(sp, sd, sq, period);
        config.sarima.caps.period = Some(period);
    }
    if args.auto {
        config.sarima.auto = true;
    }
    if let Some(e) = args.evaluation {
        config.forecast.evaluation = match e {
            EvalArg::Rolling => Evaluation::Rolling,
            EvalArg::Recursive => Evaluation::Recursive,
        };
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => {
            let mut config = load(&args.config, &args.out)?;
            apply_overrides(&mut config, &args)?;
            let result = run_bench(&config)?;
            let dir = config.output_dir();
            if !result.reports.is_empty() {
                print!("{}", render_report(&dir)?.text);
            }
            for f in &result.failures {
                eprintln!("failed: {}", f.message);
            }
            println!("results written to {}", dir.display());
            Ok(if result.is_complete() { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Eda { config, out } => {
            let config = load(&config, &out)?;
            let outcome = run_eda(&config)?;
            print!("{}", eda_summary(&outcome));
            println!("plot data written to {}", outcome.dir.display());
            Ok(if outcome.failed() == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Command::Report { dir } => {
            print!("{}", render_report(&dir)?.text);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
