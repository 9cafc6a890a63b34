use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use fincompare::report::{self, OutputFormat, SimulationReport};
use fincompare::{run_full_experiment, Error, ModelConfig, SimulationConfig, VarianceTarget};

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "fincompare",
    version,
    about = "Squared-score vs negated-Hessian Fisher information estimators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Table => OutputFormat::Table,
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    PerObservation,
    Estimator,
}

#[derive(Subcommand)]
enum Command {
    /// Taylor variance approximations, sufficient conditions and recommendation.
    Analyze {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Include the direct (square-then-expand) variance contrast.
        #[arg(long)]
        naive: bool,
    },
    /// Monte Carlo comparison with a one-sided t-test over trials.
    Simulate {
        config: PathBuf,
        /// Observations per replicate; overrides the config's `n`.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 200)]
        replicates: usize,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "per-observation")]
        mode: Mode,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Finite-difference and Monte Carlo checks of the model's formulas.
    Verify {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
}

fn load(path: &Path) -> Result<ModelConfig, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let cfg = ModelConfig::from_json(&text)?;
    cfg.family()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Analyze {
            config,
            format,
            naive,
        } => {
            let cfg = load(&config)?;
            let r = report::analyze(&cfg, naive)?;
            print!("{}", r.render(format.into())?);
            Ok(0)
        }
        Command::Simulate {
            config,
            n,
            replicates,
            trials,
            seed,
            mode,
            format,
        } => {
            let mut cfg = load(&config)?;
            if let Some(n) = n {
                cfg.n = n;
            }
            let model = cfg.build()?;
            let sim = SimulationConfig {
                n: cfg.n,
                n_replicates: replicates,
                n_trials: trials,
                master_seed: seed,
                variance_target: match mode {
                    Mode::PerObservation => VarianceTarget::PerObservation,
                    Mode::Estimator => VarianceTarget::EstimatorAcrossReplicates,
                },
            };
            sim.validate()?;
            let result = run_full_experiment(&model, &sim)?;
            let r = SimulationReport::new(&cfg, &model, result);
            print!("{}", r.render(format.into())?);
            Ok(0)
        }
        Command::Verify {
            config,
            seed,
            format,
        } => {
            let cfg = load(&config)?;
            let r = report::verify(&cfg, seed)?;
            print!("{}", r.render(format.into())?);
            Ok(if r.passed { 0 } else { EXIT_VERIFY_FAILED })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
