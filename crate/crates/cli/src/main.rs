use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lyapgibbs_cli::commands::{run_classify, run_solve, run_sweep, run_verify, to_json};
use lyapgibbs_cli::config::RunConfig;
use lyapgibbs_cli::error::CliError;

const EXIT_VERIFY_FAILED: u8 = 4;

/// Fixed points of the quadratic integral operator of a spin model on
/// the order-2 Cayley tree: exact separable-kernel reduction
/// cross-validated against a discretized multistart oracle.
#[derive(Parser)]
#[command(name = "lyapgibbs", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coefficients, cubic and fixed-point count of a degenerate kernel.
    Classify(CommonArgs),
    /// Solve both ways (degenerate) or by the oracle alone (general).
    Solve(CommonArgs),
    /// One row per parameter value over a scalar sweep, as CSV.
    Sweep(CommonArgs),
    /// Run the invariant audit; nonzero exit on any failure.
    Verify(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// json (classify/solve), csv (sweep) or text (verify).
    #[arg(long)]
    format: Option<Format>,
    /// Override numerics.quad_order from the config.
    #[arg(long)]
    quad_order: Option<usize>,
    /// Override numerics.seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override numerics.tol from the config.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

impl CommonArgs {
    fn load_config(&self) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(&self.config).map_err(|e| {
            CliError::Config(format!("cannot read {}: {e}", self.config.display()))
        })?;
        let mut config = RunConfig::from_json(&text)?;
        if let Some(quad_order) = self.quad_order {
            config.numerics.quad_order = quad_order;
        }
        if let Some(seed) = self.seed {
            config.numerics.seed = seed;
        }
        if let Some(tol) = self.tol {
            config.numerics.tol = tol;
        }
        config.validate()?;
        Ok(config)
    }

    fn check_format(&self, expected: Format, name: &str) -> Result<(), CliError> {
        match self.format {
            None => Ok(()),
            Some(f) if f == expected => Ok(()),
            Some(_) => Err(CliError::config(format!(
                "--format: `{name}` only emits {}",
                match expected {
                    Format::Json => "json",
                    Format::Csv => "csv",
                    Format::Text => "text",
                }
            ))),
        }
    }

    fn emit(&self, text: &str) -> Result<(), CliError> {
        match &self.output {
            Some(path) => std::fs::write(path, text.as_bytes())?,
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
            }
        }
        Ok(())
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Classify(args) => {
            args.check_format(Format::Json, "classify")?;
            let config = args.load_config()?;
            let report = run_classify(&config)?;
            args.emit(&to_json(&report)?)?;
            Ok(0)
        }
        Command::Solve(args) => {
            args.check_format(Format::Json, "solve")?;
            let config = args.load_config()?;
            let report = run_solve(&config)?;
            args.emit(&to_json(&report)?)?;
            Ok(0)
        }
        Command::Sweep(args) => {
            args.check_format(Format::Csv, "sweep")?;
            let config = args.load_config()?;
            let output = run_sweep(&config)?;
            args.emit(&output.to_csv())?;
            Ok(0)
        }
        Command::Verify(args) => {
            args.check_format(Format::Text, "verify")?;
            let config = args.load_config()?;
            let report = run_verify(&config)?;
            args.emit(&report.to_text())?;
            Ok(if report.passed { 0 } else { EXIT_VERIFY_FAILED })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
