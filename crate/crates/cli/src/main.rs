use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kinpipe::kinetic::Execution;
use kinpipe_cli::check::check_invariants;
use kinpipe_cli::compare::{compare_series, CompareWindow};
use kinpipe_cli::config::{parse_config, RunConfig, Solver};
use kinpipe_cli::scenario_window;
use kinpipe_cli::simulate::run_simulation;
use kinpipe_cli::Overrides;

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_CHECK: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "kinpipe", version, about = "Kinetic finite-volume solver for pressurized pipe transients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the configured solver(s) and write CSV output
    Run(Common),
    /// Run both solvers and report their differences at the first probe
    Compare(Common),
    /// Run the invariant suites on the configured scenario
    Check(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file in `key = value` format
    config: PathBuf,
    /// Override the number of mesh cells
    #[arg(long)]
    cells: Option<usize>,
    /// Override the CFL coefficient of the kinetic scheme
    #[arg(long)]
    cfl: Option<f64>,
    /// Override the output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Disable data-parallel flux evaluation
    #[arg(long)]
    sequential: bool,
}

impl Common {
    fn load(&self) -> Result<RunConfig, String> {
        let text = fs::read_to_string(&self.config).map_err(|e| format!("{}: {e}", self.config.display()))?;
        let config = parse_config(&text).map_err(|e| format!("{}: {e}", self.config.display()))?;
        Overrides { cells: self.cells, cfl: self.cfl, output_dir: self.out.clone() }
            .apply(config)
            .map_err(|e| e.to_string())
    }

    fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (Command::Run(common) | Command::Compare(common) | Command::Check(common)) = &cli.command;
    let mut config = match common.load() {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, e),
    };
    if let Err(e) = fs::create_dir_all(&config.output_dir) {
        return fail(EXIT_CONFIG, format!("output directory {}: {e}", config.output_dir.display()));
    }
    let execution = common.execution();

    match &cli.command {
        Command::Run(_) => match run_simulation(&config, execution) {
            Ok(outputs) => {
                print!("{}", kinpipe_cli::simulate::summary(&outputs));
                ExitCode::SUCCESS
            }
            Err(e) => fail(EXIT_SOLVER, e),
        },
        Command::Compare(_) => {
            config.solver = Solver::Both;
            let outputs = match run_simulation(&config, execution) {
                Ok(o) => o,
                Err(e) => return fail(EXIT_SOLVER, e),
            };
            let window: CompareWindow = scenario_window(&config.scenario);
            let mut text = String::new();
            for (k, _) in config.scenario.probes.iter().enumerate() {
                match compare_series(&outputs[0].probes[k], &outputs[1].probes[k], window) {
                    Ok(report) => text.push_str(&format!("{report}\n")),
                    Err(e) => return fail(EXIT_SOLVER, e),
                }
            }
            let path = config.output_dir.join("comparison.txt");
            if let Err(e) = fs::write(&path, &text) {
                return fail(EXIT_SOLVER, format!("{}: {e}", path.display()));
            }
            print!("{text}");
            ExitCode::SUCCESS
        }
        Command::Check(_) => match check_invariants(&config, execution) {
            Ok(report) => {
                print!("{report}");
                if report.passed() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(EXIT_CHECK)
                }
            }
            Err(e) => fail(EXIT_SOLVER, e),
        },
    }
}
