use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use soapfilm::catenoid::Branch;
use soapfilm::cli_io::{self, LambdaSpec};
use soapfilm::diagnostics;
use soapfilm::linalg::SolverConfig;
use soapfilm::mesh::RectMesh;
use soapfilm::stepper::RunOutcome;
use soapfilm::verification;
use soapfilm::Error;

#[derive(Parser)]
#[command(name = "soapfilm", version, about = "Electrostatically actuated tubular soap film")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory from a TOML config and print the JSON summary.
    Run { config: PathBuf },
    /// Run every (sigma, lambda) pair; lambda may be a number or `Kcrit`.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true, allow_negative_numbers = true)]
        sigma: Vec<f64>,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        lambda: Vec<String>,
        #[arg(short = 'j', long, default_value_t = 1)]
        jobs: usize,
        /// Output CSV; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the critical voltage data for `sigma` as JSON.
    Critical {
        #[arg(allow_negative_numbers = true)]
        sigma: f64,
        #[arg(long, default_value = "small")]
        branch: Branch,
        #[arg(long, default_value_t = 129)]
        n_z: usize,
        #[arg(long, default_value_t = 129)]
        n_r: usize,
        /// Also report C17 and the existence-time bound at this voltage.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Run the manufactured-solution convergence suite.
    Verify {
        #[arg(long, value_delimiter = ',', default_values_t = [33usize, 65, 129])]
        resolutions: Vec<usize>,
        /// Convergence table CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Solver(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SolverFailure { .. } | Error::Degenerate { .. } => Failure::Solver(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn io_err(path: &std::path::Path, e: std::io::Error) -> Failure {
    Failure::Config(format!("{}: {e}", path.display()))
}

fn json(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("summary types serialize")
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { config } => {
            let cfg = cli_io::parse_config(&config)?;
            let summary = cli_io::run_single(&cfg)?;
            println!("{}", json(&summary));
            if let RunOutcome::SolverFailure { detail, .. } = &summary.outcome {
                return Err(Failure::Solver(detail.clone()));
            }
        }
        Command::Sweep { config, sigma, lambda, jobs, out } => {
            let cfg = cli_io::parse_config(&config)?;
            let specs = lambda
                .iter()
                .map(|s| s.parse::<LambdaSpec>())
                .collect::<Result<Vec<_>, _>>()?;
            let rows = cli_io::run_sweep(&cfg, &sigma, &specs, jobs)?;
            match out {
                Some(p) => {
                    let f = std::fs::File::create(&p).map_err(|e| io_err(&p, e))?;
                    cli_io::write_sweep(&rows, std::io::BufWriter::new(f)).map_err(|e| io_err(&p, e))?;
                }
                None => cli_io::write_sweep(&rows, std::io::stdout().lock())
                    .map_err(|e| Failure::Config(e.to_string()))?,
            }
        }
        Command::Critical { sigma, branch, n_z, n_r, lambda } => {
            let mesh = RectMesh::with_sizes(n_z, n_r)?;
            let data = diagnostics::lambda_crit(sigma, branch, &mesh, &SolverConfig::default())?;
            match lambda {
                Some(l) => println!("{}", json(&serde_json::json!({ "critical": data, "at": data.at(l) }))),
                None => println!("{}", json(&data)),
            }
        }
        Command::Verify { resolutions, out } => {
            let report = verification::run_verification_suite(&resolutions, &SolverConfig::default())?;
            for c in &report.checks {
                println!(
                    "{} {}: {:.6e} (threshold {:.6e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.threshold
                );
            }
            if let Some(p) = out {
                let f = std::fs::File::create(&p).map_err(|e| io_err(&p, e))?;
                verification::write_convergence_csv(&report.rows, std::io::BufWriter::new(f))
                    .map_err(|e| io_err(&p, e))?;
            }
            if !report.passed() {
                return Err(Failure::Verification("verification suite failed".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("solver failure: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(m)) => {
            eprintln!("{m}");
            ExitCode::from(3)
        }
    }
}
