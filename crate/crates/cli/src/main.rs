use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kaluza::commands::{self, CommandError, Overrides, ProblemSpec, RunReport, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "kaluza", version, about = "Kaluza-Klein curvature, gauge and path-lifting checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct Common {
    /// Problem file (JSON).
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long = "fd-step", global = true)]
    fd_step: Option<f64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 lets the pool decide.
    #[arg(long, global = true, env = "KK_JOBS")]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the algebra hypotheses.
    Validate,
    /// Run the exterior-algebra identity suite.
    Identities {
        /// Frame dimension N.
        #[arg(long)]
        dim: usize,
    },
    /// Curvature and Einstein-Yang-Mills residuals over the chart points.
    Curvature,
    /// Lift the problem's vertical paths.
    Lift,
    /// Coframe identity and gauge covariance over the chart points.
    GaugeCheck,
}

fn problem(common: &Common) -> Result<ProblemSpec, CommandError> {
    match &common.input {
        Some(p) => ProblemSpec::load(p),
        None => Err(CommandError::Usage("this command needs --input <file>".into())),
    }
}

fn run(cli: &Cli) -> Result<RunReport, CommandError> {
    let c = &cli.common;
    let ov = Overrides { tol: c.tol, fd_step: c.fd_step, trials: c.trials, seed: c.seed, jobs: c.jobs };
    match &cli.command {
        Command::Validate => commands::cmd_validate(&problem(c)?, &ov),
        Command::Identities { dim } => {
            commands::cmd_identities(*dim, c.trials.unwrap_or(500), c.seed.unwrap_or(0), c.tol)
        }
        Command::Curvature => commands::cmd_curvature(&problem(c)?, &ov),
        Command::Lift => commands::cmd_lift(&problem(c)?, &ov),
        Command::GaugeCheck => commands::cmd_gauge_check(&problem(c)?, &ov),
    }
}

fn emit(common: &Common, report: &RunReport) -> Result<(), CommandError> {
    let text = match common.format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.to_csv(),
    };
    match &common.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CommandError::Io { path: path.display().to_string(), message: e.to_string() }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let start = Instant::now();
    let result = run(&cli).and_then(|mut report| {
        report.runtime.wall_time_s = start.elapsed().as_secs_f64();
        report.runtime.jobs = cli.common.jobs.unwrap_or(0);
        emit(&cli.common, &report)?;
        Ok(report)
    });
    match result {
        Ok(report) => {
            for c in report.checks.iter().filter(|c| !c.passed) {
                eprintln!(
                    "FAIL {}: {:e} (tol {:e}){}",
                    c.name,
                    c.value,
                    c.tol,
                    c.detail.as_deref().map(|d| format!(" {d}")).unwrap_or_default()
                );
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
