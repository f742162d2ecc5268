use std::path::PathBuf;
use std::process::ExitCode;

use capdrop_cli::{apply_tolerance_overrides, convert, run_scenario, CliError, Mode, Scenario};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "capdrop", version, about = "CMC and capillary surfaces on a sphere: generate, solve, sweep, verify")]
#[command(after_help = "Verification tolerances can be overridden with --tol.<name> <value>, e.g. --tol.fit_rms 2e-3.")]
struct Cli {
    /// Worker threads for parallel reductions.
    #[arg(long, global = true, env = "CAPDROP_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the scenario surface and write it.
    Generate(RunArgs),
    /// Generate, then solve.
    Solve(RunArgs),
    /// Generate, then run the moving-plane sweep.
    Sweep(RunArgs),
    /// Generate, then run the theorem check.
    Verify(RunArgs),
    /// Every stage the scenario configures.
    Pipeline(RunArgs),
    /// Convert between OBJ, PLY and CSV profiles.
    Convert {
        input: PathBuf,
        output: PathBuf,
        /// Meridians used when revolving a profile.
        #[arg(long, default_value_t = 64)]
        angular: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the scenario).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (overrides the scenario).
    #[arg(long)]
    seed: Option<u64>,
}

type Overrides = Vec<(String, String)>;

/// Splits `--tol.<name> <value>` and `--tol.<name>=<value>` out of the arguments.
fn take_tolerances(args: Vec<String>) -> Result<(Vec<String>, Overrides), CliError> {
    let mut rest = Vec::new();
    let mut tols = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let Some(spec) = a.strip_prefix("--tol.") else {
            rest.push(a);
            continue;
        };
        let (name, value) = match spec.split_once('=') {
            Some((n, v)) => (n.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| CliError::Usage(format!("--tol.{spec} needs a value")))?;
                (spec.to_string(), v)
            }
        };
        tols.push((name, value));
    }
    Ok((rest, tols))
}

fn run(cli: Cli, tols: Overrides) -> Result<u8, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let (mode, args) = match cli.command {
        Command::Convert { input, output, angular } => {
            convert(&input, &output, angular)?;
            return Ok(0);
        }
        Command::Generate(a) => (Mode::Generate, a),
        Command::Solve(a) => (Mode::Solve, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::Verify(a) => (Mode::Verify, a),
        Command::Pipeline(a) => (Mode::Pipeline, a),
    };
    let mut scenario = Scenario::load(&args.config)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    scenario.tolerances = apply_tolerance_overrides(&scenario.tolerances, &tols)?;
    let out = args.out.unwrap_or_else(|| scenario.output_dir());
    let outcome = run_scenario(&scenario, mode, &out)?;
    if outcome.over_budget(&scenario) {
        eprintln!(
            "[{}] warning: took {:.1} s, budget {:.1} s",
            scenario.name,
            outcome.elapsed.as_secs_f64(),
            scenario.time_budget_s.unwrap_or_default()
        );
    }
    let status = outcome.report.status;
    println!("{}: {:?} ({})", scenario.name, status, outcome.output_dir.join("report.json").display());
    Ok(status.exit_code())
}

fn main() -> ExitCode {
    let (args, tols) = match take_tolerances(std::env::args().collect()) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, tols) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
