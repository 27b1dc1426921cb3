use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cohtrack::sweep::Execution;
use cohtrack_cli::commands::{self, PlotKind};
use cohtrack_cli::config::{ControlSpec, ScenarioConfig, SweepSpec};
use cohtrack_cli::verify::{self, Suite, DEFAULT_SEED};
use cohtrack_cli::CliError;

/// Coherence tracking control under Markovian decoherence.
///
/// Exit status: 0 success, 1 configuration or input error,
/// 2 infeasible scenario, 3 verification failure.
#[derive(Debug, Parser)]
#[command(name = "cohtrack", version)]
struct Cli {
    /// Seed for randomized verification suites.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Directory for output files; relative output paths resolve against it.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Disable data-parallel execution.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Propagate with all control fields off.
    Free { config: PathBuf },
    /// Run the coherence-holding controller and classify its singularity.
    Track { config: PathBuf },
    /// Run whatever the config's control section asks for.
    Run { config: PathBuf },
    /// Write the tracking fields as `t,omega0,omega1,omega2`.
    Fields { config: PathBuf },
    /// Breakdown-time grid over coherence and purity.
    Sweep { spec: PathBuf },
    /// Apply a unitary change of frame and print a JSON report.
    Equiv {
        config: PathBuf,
        /// 2x2 complex matrix as `[[[re,im],[re,im]],[[re,im],[re,im]]]`.
        #[arg(long)]
        unitary: String,
    },
    /// Render CSV output as SVG.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        #[arg(long, value_enum)]
        kind: PlotKind,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run a built-in verification suite.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
}

fn write(out_dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    let path = out_dir.join(name);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(&path, contents)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let out = cli.out_dir.as_path();
    match cli.command {
        Command::Free { config } => {
            let s = ScenarioConfig::load(&config)?;
            let traj = commands::run_free(&s)?;
            let name = s.output().trajectory.unwrap_or_else(|| "free.csv".into());
            let path = write(out, &name, &traj.to_csv())?;
            println!("{} termination={}", path.display(), traj.termination);
        }
        Command::Track { config } => {
            let s = ScenarioConfig::load(&config)?;
            let traj = commands::run_track(&s)?;
            let name = s.output().trajectory.unwrap_or_else(|| "track.csv".into());
            let path = write(out, &name, &traj.to_csv())?;
            println!("{} termination={}", path.display(), traj.termination);
            for a in &traj.annotations {
                println!("{a}");
            }
        }
        Command::Run { config } => {
            let s = ScenarioConfig::load(&config)?;
            let traj = commands::run_scenario(&s)?;
            let default = match s.config.control {
                ControlSpec::Free => "free.csv",
                ControlSpec::Track { .. } => "track.csv",
                ControlSpec::Fixed { .. } => "run.csv",
            };
            let name = s.output().trajectory.unwrap_or_else(|| default.into());
            let path = write(out, &name, &traj.to_csv())?;
            println!("{} termination={}", path.display(), traj.termination);
        }
        Command::Fields { config } => {
            let s = ScenarioConfig::load(&config)?;
            let traj = commands::run_track(&s)?;
            let name = s.output().fields.unwrap_or_else(|| "fields.csv".into());
            let path = write(out, &name, &traj.fields_csv())?;
            println!("{} termination={}", path.display(), traj.termination);
        }
        Command::Sweep { spec } => {
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| CliError::Config(format!("{}: {e}", spec.display())))?;
            let spec = SweepSpec::from_json(&text)?;
            let csv = commands::run_sweep(&spec, exec)?;
            let path = write(out, spec.output.as_deref().unwrap_or("sweep.csv"), &csv)?;
            println!("{}", path.display());
        }
        Command::Equiv { config, unitary } => {
            let s = ScenarioConfig::load(&config)?;
            let u = commands::parse_unitary(&unitary)?;
            let report = commands::equiv_report(&s, &u)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
        }
        Command::Plot { csv, kind, output } => {
            let texts = csv
                .iter()
                .map(|p| {
                    std::fs::read_to_string(p)
                        .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let inputs: Vec<(&Path, &str)> = csv
                .iter()
                .map(PathBuf::as_path)
                .zip(texts.iter().map(String::as_str))
                .collect();
            let svg = commands::render_plot(kind, &inputs)?;
            let path = write(out, &output.to_string_lossy(), &svg)?;
            println!("{}", path.display());
        }
        Command::Verify { suite } => {
            println!("seed={}", cli.seed);
            let checks = verify::run(suite, cli.seed);
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            println!("{} checks, {failed} failed", checks.len());
            if failed > 0 {
                return Err(CliError::Verification(format!("{failed} check(s) failed")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are configuration errors, not infeasibility.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
