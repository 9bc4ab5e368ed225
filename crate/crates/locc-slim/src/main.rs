use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use locc_slim::commands::{self, DemoKind, Options, SlimArgs};
use locc_slim::report::RunReport;
use locc_slim::CliError;

/// Validate, evaluate and compress LOCC protocol trees.
#[derive(Parser, Debug)]
#[command(name = "locc-slim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    tol: TolArgs,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    /// Include wall time in the report (makes output nondeterministic).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Args, Debug)]
struct TolArgs {
    /// Vertex completeness tolerance ‖Σ K†K − I‖_F.
    #[arg(long, global = true, default_value_t = Options::default().completeness)]
    tol_completeness: f64,
    /// |t_i − t| below this counts as equalized.
    #[arg(long, global = true, default_value_t = Options::default().equalize)]
    tol_equalize: f64,
    /// Outcomes reached with at most this probability are not equalized.
    #[arg(long, global = true, default_value_t = Options::default().prob_cutoff)]
    tol_prob: f64,
    /// Relative rank tolerance for supports and affine dependencies.
    #[arg(long, global = true, default_value_t = Options::default().rank)]
    tol_rank: f64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a protocol tree for completeness and dimension consistency.
    Validate { tree: PathBuf },
    /// Success probability of a protocol on an ensemble.
    Evaluate {
        tree: PathBuf,
        ensemble: PathBuf,
        /// Let every leaf guess the most likely state.
        #[arg(long)]
        relabel: bool,
    },
    /// Compress every measurement to at most 2·d² outcomes, keeping success.
    CompressM1 {
        tree: PathBuf,
        ensemble: PathBuf,
        /// Write the compressed tree here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decompose into slim components (at most d² nonzero outcomes each).
    Slim {
        tree: PathBuf,
        /// Pick the best component for this ensemble.
        #[arg(long)]
        ensemble: Option<PathBuf>,
        /// Most components to materialize or search exhaustively.
        #[arg(long, default_value_t = locc_core::slim::DEFAULT_CAP)]
        cap: usize,
        /// Stream components as JSON lines to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Reduce the mixture to at most R components with the same instrument.
        #[arg(long)]
        reduce_rand: bool,
    },
    /// Run a built-in instance through evaluate, compress-m1 and slim.
    Demo {
        #[arg(value_enum)]
        name: DemoName,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        rounds: usize,
        /// Local dimensions, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "2,2")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = locc_core::slim::DEFAULT_CAP)]
        cap: usize,
        /// Also write the generated tree.json and ensemble.json here.
        #[arg(long)]
        save: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DemoName {
    Bell,
    ProductBasis,
    Random,
}

fn run(cli: &Cli, opts: &Options) -> Result<RunReport, CliError> {
    match &cli.command {
        Command::Validate { tree } => commands::validate(tree, opts),
        Command::Evaluate { tree, ensemble, relabel } => commands::evaluate(tree, ensemble, *relabel, opts),
        Command::CompressM1 { tree, ensemble, out } => commands::compress_m1(tree, ensemble, out.as_deref(), opts),
        Command::Slim { tree, ensemble, cap, out, reduce_rand } => {
            let args = SlimArgs {
                ensemble: ensemble.as_deref(),
                cap: *cap,
                out: out.as_deref(),
                reduce_rand: *reduce_rand,
            };
            commands::slim(tree, args, opts)
        }
        Command::Demo { name, seed, rounds, dims, cap, save } => {
            let kind = match name {
                DemoName::Bell => DemoKind::Bell,
                DemoName::ProductBasis => DemoKind::ProductBasis,
                DemoName::Random => DemoKind::Random {
                    seed: *seed,
                    rounds: *rounds,
                    dims: dims.clone(),
                },
            };
            commands::demo(&kind, *cap, save.as_deref(), opts)
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("LOCC_SLIM_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .map_err(|_| CliError::Usage(format!("LOCC_SLIM_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.report {
        Some(path) => std::fs::write(path, format!("{text}\n")).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print_stdout(text);
            Ok(())
        }
    }
}

/// A closed stdout (e.g. piped into `head`) is not an error worth a panic.
fn print_stdout(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = Options {
        completeness: cli.tol.tol_completeness,
        equalize: cli.tol.tol_equalize,
        prob_cutoff: cli.tol.tol_prob,
        rank: cli.tol.tol_rank,
    };
    let start = Instant::now();
    let result = configure_threads().and_then(|()| run(&cli, &opts)).and_then(|mut report| {
        if cli.timing {
            report.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        }
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        emit(&cli, &text)?;
        Ok(report)
    });
    match result {
        Ok(report) if report.status == "ok" => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            let obj = e.to_object();
            print_stdout(&serde_json::to_string_pretty(&obj).expect("error serializes"));
            ExitCode::from(obj.exit_code as u8)
        }
    }
}
