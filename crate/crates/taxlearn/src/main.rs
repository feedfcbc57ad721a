use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use taxlearn::experiment::{
    self, ExperimentConfig, ExperimentError, GameSource, RunSummary,
};

/// Learn marginal-cost taxes for congestion games from equilibrium feedback.
#[derive(Parser)]
#[command(name = "taxlearn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tax-design loop and emit traces, tax dumps, and a summary.
    Run(RunArgs),
    /// Print brute-force/analytic oracle reports for a game as JSON.
    Oracle(SourceArgs),
    /// Run the named invariant suite; nonzero exit on any failure.
    Validate(ValidateArgs),
}

#[derive(Args, Clone)]
struct SourceArgs {
    /// Nonlinear Pigou instance, e.g. `c=0.2,p=2`. In sweep mode the
    /// values may be `|`-separated lists, e.g. `c=0.2|0.6|1,p=2|4`.
    #[arg(long)]
    pigou: Option<String>,
    /// Explicit-action game description (JSON).
    #[arg(long)]
    game: Option<PathBuf>,
    /// Network game description (JSON).
    #[arg(long)]
    network: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Target accuracy ε; a `|`-separated list in sweep mode.
    #[arg(long, default_value = "0.05")]
    eps: String,
    /// Smoothness bound β handed to the learner (default: the game's
    /// declared bound).
    #[arg(long)]
    beta: Option<f64>,
    /// Round budget (default ⌈2Fβ/ε⌉ + F).
    #[arg(long)]
    tmax: Option<usize>,
    /// Output directory for trace.csv, detail.csv, tax_f<i>.csv,
    /// summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-solve iteration traces (solver_trace.csv).
    #[arg(long)]
    trace_solver: bool,
    /// Reuse the solver's strategy instead of recomputing φ⁻¹(y).
    #[arg(long)]
    reuse_strategy: bool,
    /// Accept a beta below the declared smoothness (out of guarantee).
    #[arg(long)]
    force_beta: bool,
    /// Run every (c, p, ε) combination in parallel worker threads.
    #[arg(long)]
    sweep: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Seed for the randomized property checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> Result<Vec<T>, ExperimentError> {
    raw.split('|')
        .map(|piece| {
            piece
                .trim()
                .parse::<T>()
                .map_err(|_| ExperimentError::Config(format!("bad {what} value `{piece}`")))
        })
        .collect()
}

/// Parse `c=<list>,p=<list>`.
fn parse_pigou(raw: &str) -> Result<(Vec<f64>, Vec<u32>), ExperimentError> {
    let mut cs = None;
    let mut ps = None;
    for part in raw.split(',') {
        let Some((key, value)) = part.split_once('=') else {
            return Err(ExperimentError::Config(format!(
                "bad --pigou fragment `{part}`; expected c=<v>,p=<v>"
            )));
        };
        match key.trim() {
            "c" => cs = Some(parse_list::<f64>(value, "c")?),
            "p" => ps = Some(parse_list::<u32>(value, "p")?),
            other => {
                return Err(ExperimentError::Config(format!(
                    "unknown --pigou key `{other}`"
                )))
            }
        }
    }
    match (cs, ps) {
        (Some(cs), Some(ps)) => Ok((cs, ps)),
        _ => Err(ExperimentError::Config(
            "--pigou needs both c=<v> and p=<v>".into(),
        )),
    }
}

fn single_source(args: &SourceArgs) -> Result<GameSource, ExperimentError> {
    match (&args.pigou, &args.game, &args.network) {
        (Some(pigou), None, None) => {
            let (cs, ps) = parse_pigou(pigou)?;
            if cs.len() != 1 || ps.len() != 1 {
                return Err(ExperimentError::Config(
                    "value lists in --pigou need --sweep".into(),
                ));
            }
            Ok(GameSource::Pigou { c: cs[0], p: ps[0] })
        }
        (None, Some(path), None) => Ok(GameSource::GameFile(path.clone())),
        (None, None, Some(path)) => Ok(GameSource::NetworkFile(path.clone())),
        _ => Err(ExperimentError::Config(
            "pass exactly one of --pigou, --game, --network".into(),
        )),
    }
}

fn print_summary(label: Option<&str>, summary: &RunSummary) {
    let prefix = label.map(|l| format!("{l}: ")).unwrap_or_default();
    println!(
        "{prefix}{} after {} rounds ({} exploratory, {} queries); final social cost {:.6}{}",
        summary.termination,
        summary.rounds,
        summary.exploratory_rounds,
        summary.equilibrium_queries,
        summary.final_social_cost,
        match summary.final_gap {
            Some(gap) => format!(", gap to optimum {gap:.6}"),
            None => String::new(),
        }
    );
}

fn cmd_run(args: RunArgs) -> Result<(), ExperimentError> {
    let epss = parse_list::<f64>(&args.eps, "eps")?;
    let mut base = ExperimentConfig::new(GameSource::Pigou { c: 1.0, p: 1 }, 0.05);
    base.beta = args.beta;
    base.t_max = args.tmax;
    base.out_dir = args.out.clone();
    base.trace_solver = args.trace_solver;
    base.reuse_solver_strategy = args.reuse_strategy;
    base.force_beta = args.force_beta;

    if args.sweep {
        let Some(pigou) = &args.source.pigou else {
            return Err(ExperimentError::Config(
                "--sweep currently sweeps --pigou instances".into(),
            ));
        };
        let (cs, ps) = parse_pigou(pigou)?;
        let results = experiment::run_sweep(&base, &cs, &ps, &epss);
        let mut first_error = None;
        for (label, outcome) in results {
            match outcome {
                Ok(summary) => print_summary(Some(&label), &summary),
                Err(e) => {
                    println!("{label}: FAILED: {e}");
                    first_error.get_or_insert(e);
                }
            }
        }
        return match first_error {
            None => Ok(()),
            Some(e) => Err(e),
        };
    }

    if epss.len() != 1 {
        return Err(ExperimentError::Config("an --eps list needs --sweep".into()));
    }
    base.source = single_source(&args.source)?;
    base.eps = epss[0];
    let summary = experiment::run_experiment(&base)?;
    print_summary(None, &summary);
    Ok(())
}

fn cmd_oracle(args: SourceArgs) -> Result<(), ExperimentError> {
    let cfg = ExperimentConfig::new(single_source(&args)?, 0.05);
    println!("{}", experiment::oracle_report_json(&cfg)?);
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), ExperimentError> {
    let no_source =
        args.source.pigou.is_none() && args.source.game.is_none() && args.source.network.is_none();
    let report = if no_source {
        experiment::validate_default_report(args.seed)?
    } else {
        let mut cfg = ExperimentConfig::new(single_source(&args.source)?, 0.05);
        cfg.seed = args.seed;
        experiment::validate_report(&cfg)?
    };
    print!("{report}");
    println!("all properties passed");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Validate(args) => cmd_validate(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Property reports carry their own formatted lines.
            match &e {
                ExperimentError::Property(report) => eprint!("{report}"),
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
