use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use subrad::config::{ScenarioConfig, ScenarioName};
use subrad::multilevel::clebsch_gordan_table;
use subrad::scenario::run_scenario;
use subrad::Error;

const EXIT_NUMERICAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const DEFAULT_OUT: &str = "subrad-out";

#[derive(Parser)]
#[command(name = "subrad", version, about = "Cavity light scattering from a thermal atom array")]
struct Cli {
    /// Worker threads for the Monte Carlo loops (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario from a JSON config or a previous run manifest.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Print the Clebsch–Gordan table as CSV.
    CgDump {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fluctuation power law for uniform and commensurate positions.
    OracleBeta {
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 10_000)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn execute(cli: Cli) -> subrad::Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed_override,
        } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(seed) = seed_override {
                cfg.seed = seed;
            }
            let out = out
                .or_else(|| cfg.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            let manifest = run_scenario(&cfg, &out)?;
            println!(
                "{}: wrote {} files to {}",
                manifest.scenario.as_str(),
                manifest.outputs.len() + 1,
                out.display()
            );
        }
        Command::CgDump { out } => match out {
            Some(dir) => {
                let cfg = ScenarioConfig {
                    scenario: ScenarioName::CgDump,
                    ..Default::default()
                };
                run_scenario(&cfg, &dir)?;
            }
            None => clebsch_gordan_table(1.0).write_csv(io::stdout().lock())?,
        },
        Command::OracleBeta { n, reps, seed, out } => {
            let cfg = ScenarioConfig {
                scenario: ScenarioName::OracleBeta,
                atom_numbers: n,
                realizations: reps,
                seed,
                ..Default::default()
            };
            if reps < 100 {
                return Err(Error::Config {
                    field: "reps".into(),
                    message: "at least 100 repetitions are required".into(),
                });
            }
            let dir = out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
            run_scenario(&cfg, &dir)?;
            let fits = std::fs::read_to_string(dir.join("oracle_beta.json"))?;
            println!("{fits}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure {t} threads: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
