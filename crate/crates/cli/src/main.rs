use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use widthlab_cli::{config, run, thread_cap, write_outputs, CliError, Kind};

#[derive(Parser)]
#[command(name = "widthlab", version, about = "Entropy and width experiments for parametric transport")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out` in the config; default `results`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Certified entropy rate for fixed flow fields.
    FixedB(RunArgs),
    /// Counting certificate for switched flow fields.
    VariableB(RunArgs),
    /// Smoothness ceiling and piecewise polynomial upper rate.
    UpperBound(RunArgs),
    /// Source term invariance of the difference curves.
    RhsInvariance(RunArgs),
    /// Characteristic QoI against the convolution oracle, and RK4 tracing.
    Convolution(RunArgs),
    /// Elliptic reduced basis offline/online split.
    RbElliptic(RunArgs),
    /// Singular value decay of shifted Heaviside snapshots.
    SvdTransport(RunArgs),
    /// Parameter recovery from the shifted Heaviside solution.
    Riemann(RunArgs),
}

impl Command {
    fn split(self) -> (Kind, RunArgs) {
        match self {
            Command::FixedB(a) => (Kind::FixedB, a),
            Command::VariableB(a) => (Kind::VariableB, a),
            Command::UpperBound(a) => (Kind::UpperBound, a),
            Command::RhsInvariance(a) => (Kind::RhsInvariance, a),
            Command::Convolution(a) => (Kind::Convolution, a),
            Command::RbElliptic(a) => (Kind::RbElliptic, a),
            Command::SvdTransport(a) => (Kind::SvdTransport, a),
            Command::Riemann(a) => (Kind::Riemann, a),
        }
    }
}

fn execute(kind: Kind, args: RunArgs) -> Result<bool, CliError> {
    if let Some(n) = thread_cap(std::env::var("WIDTHLAB_THREADS").ok().as_deref())? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("WIDTHLAB_THREADS: {e}")))?;
    }
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.config.display())))?;
    let cfg = config::parse(&text)?;
    let dir = args
        .out
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));
    let outcome = run(kind, &cfg)?;
    let (csv, report) = write_outputs(&outcome, &dir)?;
    for c in &outcome.checks {
        println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.measured);
    }
    println!("wrote {} and {} in {:.2}s", csv.display(), report.display(), outcome.seconds);
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    // usage errors exit 1; 2 is reserved for assertion failures
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (kind, args) = cli.command.split();
    match execute(kind, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("widthlab {}: assertion failure", kind.name());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("widthlab {}: {e}", kind.name());
            ExitCode::from(1)
        }
    }
}
