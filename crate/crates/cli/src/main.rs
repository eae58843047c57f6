use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use ema_core::normality::TestKind;
use ema_core::{QuartileRule, RuleKind};
use ema_tool::commands::{self, AggregateArgs, LossSource, SimulateArgs, SweepArgs};
use ema_tool::{init_thread_pool, CliResult};

#[derive(Parser)]
#[command(
    name = "ema",
    version,
    about = "Robust gradient aggregation and federated-learning simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestArg {
    Sw,
    Ad,
    Both,
}

impl From<TestArg> for TestKind {
    fn from(t: TestArg) -> Self {
        match t {
            TestArg::Sw => TestKind::ShapiroWilk,
            TestArg::Ad => TestKind::AndersonDarling,
            TestArg::Both => TestKind::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum QuartileArg {
    FloorIndex,
    SymmetricRank,
}

impl From<QuartileArg> for QuartileRule {
    fn from(q: QuartileArg) -> Self {
        match q {
            QuartileArg::FloorIndex => QuartileRule::FloorIndex,
            QuartileArg::SymmetricRank => QuartileRule::SymmetricRank,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a federated simulation and write per-round metrics.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override a config value, e.g. `--set attack.fraction=0.2`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Also dump the client updates of this round (1-based).
        #[arg(long)]
        dump_round: Option<usize>,
    },
    /// Normality pre-test over every coordinate of a gradient dump.
    Pretest {
        #[arg(long)]
        dump: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "sw")]
        test: TestArg,
        /// JSON report path; defaults to `<dump>.pretest.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Loss-dispersion check for non-IID client data.
    #[command(group(ArgGroup::new("source").required(true).args(["losses", "config"])))]
    Heterogeneity {
        /// CSV with `client_id,loss` columns.
        #[arg(long)]
        losses: Option<PathBuf>,
        /// Simulation config to train, then evaluate per-client MSE.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE", requires = "config")]
        overrides: Vec<String>,
        #[arg(long, default_value_t = ema_core::heterogeneity::DEFAULT_CV_THRESHOLD)]
        threshold: f64,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One server aggregation step over a dumped round.
    Aggregate {
        #[arg(long)]
        dump: PathBuf,
        #[arg(long, value_parser = parse_rule)]
        rule: RuleKind,
        /// IQR fence multiplier (ema).
        #[arg(long)]
        k: Option<f64>,
        #[arg(long, value_enum)]
        quartile_rule: Option<QuartileArg>,
        /// Fraction trimmed from each end (trimmed_mean).
        #[arg(long)]
        trim_fraction: Option<f64>,
        /// Assumed Byzantine count (krum).
        #[arg(long)]
        f: Option<usize>,
        /// Output path; `.csv` selects CSV, anything else the binary format.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross product of attack fractions, seeds and rules.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        fractions: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_rule)]
        rules: Vec<RuleKind>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

fn parse_rule(s: &str) -> Result<RuleKind, String> {
    s.parse().map_err(|e: ema_core::Error| e.to_string())
}

fn run(cli: Cli) -> CliResult<()> {
    init_thread_pool()?;
    match cli.command {
        Command::Simulate {
            config,
            out,
            overrides,
            dump_round,
        } => commands::simulate(&SimulateArgs {
            config,
            out,
            overrides,
            dump_round,
        }),
        Command::Pretest { dump, alpha, test, out } => commands::pretest(&dump, alpha, test.into(), out.as_deref()),
        Command::Heterogeneity {
            losses,
            config,
            overrides,
            threshold,
            out,
        } => {
            let source = match (losses, config) {
                (Some(path), _) => LossSource::Csv(path),
                (None, Some(config)) => LossSource::Simulation { config, overrides },
                (None, None) => unreachable!("clap requires one source"),
            };
            commands::heterogeneity(&source, threshold, out.as_deref())
        }
        Command::Aggregate {
            dump,
            rule,
            k,
            quartile_rule,
            trim_fraction,
            f,
            out,
        } => commands::aggregate_dump(&AggregateArgs {
            dump,
            rule,
            k,
            quartile_rule: quartile_rule.map(Into::into),
            trim_fraction,
            f,
            out,
        }),
        Command::Sweep {
            config,
            out,
            fractions,
            seeds,
            rules,
            overrides,
        } => commands::sweep(&SweepArgs {
            config,
            out,
            overrides,
            fractions,
            seeds,
            rules,
        }),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
