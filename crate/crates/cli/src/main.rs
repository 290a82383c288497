use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mart_entropy::grid_entropy::CurveMethod;
use mart_entropy_cli::verify::{self, Fault, Suite, VerifyOptions};
use mart_entropy_cli::{commands, CliError, Format, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "mart-entropy", version, about = "Specific relative entropy of martingale laws")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate paths of `model` at one level; writes CSV plus a `.meta.json` sidecar.
    Simulate(RunArgs),
    /// Restricted entropies of `pair` at each level.
    Curve(RunArgs),
    /// Scaling estimate, Gantert bound and verdicts for `pair`, as JSON.
    Report(RunArgs),
    /// Run the built-in acceptance checks.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Auto,
    Analytic,
    Mc,
    Local,
}

impl From<Method> for CurveMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Auto => CurveMethod::Auto,
            Method::Analytic => CurveMethod::Analytic,
            Method::Mc => CurveMethod::Mc,
            Method::Local => CurveMethod::Local,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated grid levels, e.g. `2,4,8`.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    #[arg(long)]
    paths: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Time cells of the midpoint rule for the Gantert bound.
    #[arg(long)]
    time_steps: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum, default_value = "quick")]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, hide = true)]
    inject_fault: Option<Fault>,
}

fn with_threads<T>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError>
where
    T: Send,
{
    match threads {
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn run_command(name: &str, args: RunArgs) -> Result<(), CliError> {
    let overrides = Overrides {
        seed: args.seed,
        levels: args.levels,
        paths: args.paths,
        output: args.output,
        format: args.format,
        method: args.method.map(Into::into),
        time_steps: args.time_steps,
    };
    let (cfg, base) = RunConfig::load(args.config.as_deref(), overrides)?;
    let artifacts = with_threads(args.threads, || match name {
        "simulate" => commands::simulate(&cfg, base.as_deref()),
        "curve" => commands::curve(&cfg, base.as_deref()),
        _ => commands::report(&cfg, base.as_deref()),
    })??;
    commands::write(&artifacts, cfg.output.as_deref())
}

fn run_verify(args: VerifyArgs) -> Result<(), CliError> {
    let opts = VerifyOptions { suite: args.suite, seed: args.seed, fault: args.inject_fault };
    let outcomes = with_threads(args.threads, || verify::run_suite(&opts))?;
    print!("{}", verify::render_table(&outcomes));
    match verify::failures(&outcomes) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => run_command("simulate", a),
        Command::Curve(a) => run_command("curve", a),
        Command::Report(a) => run_command("report", a),
        Command::Verify(a) => run_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
