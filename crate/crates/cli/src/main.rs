use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rmsprop_iss_cli::{check_report, cmd_run, cmd_sweep, cmd_verify, spearman, Command, ExperimentConfig, Failure, Overrides};

#[derive(Parser)]
#[command(name = "rmsprop-iss", version, about = "RMSProp trajectories, Lyapunov certificate checks and step-size sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one trajectory; writes trace.csv and summary.json.
    Run,
    /// Check every certificate inequality on sampled states; writes report.json.
    Verify,
    /// One trajectory per constant input level; writes sweep.csv.
    Sweep {
        /// Comma-separated input levels, replacing the configured ones.
        #[arg(long, value_delimiter = ',')]
        u_levels: Option<Vec<f64>>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON). Built-in reference configuration if absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Relative inequality tolerance for `verify`; f_gap threshold for `run` and `sweep`.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let ov = Overrides {
        seed: cli.common.seed,
        out: cli.common.out.clone(),
        tol: cli.common.tol,
    };
    let base = match &cli.common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let quiet = cli.common.quiet;
    match &cli.command {
        Cmd::Run => {
            let cfg = base.resolve(Command::Run, &ov)?;
            let s = cmd_run(&cfg)?;
            if !quiet {
                println!(
                    "steps {}  final resid_inf {:.6e}  max resid_inf {:.6e}  V(T) {:.6e}",
                    s.final_record.t, s.final_resid_inf, s.max_resid_inf, s.v_final
                );
                match s.steps_to_tolerance {
                    Some(t) => println!("f_gap <= {:e} at t = {t}", cfg.gap_tol),
                    None => println!("f_gap <= {:e} not reached", cfg.gap_tol),
                }
                match s.iss_bound {
                    Some(b) => println!("certified bound alpha_V^-1(chi_V({})) = {b:.6e}", s.u_max),
                    None => println!("certified bound alpha_V^-1(chi_V({})) exceeds f64 range", s.u_max),
                }
                println!("wrote {}", cfg.out.display());
            }
        }
        Cmd::Verify => {
            let cfg = base.resolve(Command::Verify, &ov)?;
            let report = cmd_verify(&cfg)?;
            if !quiet {
                print!("{}", report.table());
            }
            check_report(&report)?;
        }
        Cmd::Sweep { u_levels } => {
            let mut base = base;
            if let Some(levels) = u_levels {
                base.sweep.u_levels = levels.clone();
            }
            let cfg = base.resolve(Command::Sweep, &ov)?;
            let rows = cmd_sweep(&cfg)?;
            if !quiet {
                println!("{:>10} {:>10} {:>14}", "u", "steps", "floor");
                for r in &rows {
                    let steps = r.steps.map(|s| s.to_string()).unwrap_or_else(|| "-".into());
                    println!("{:>10} {:>10} {:>14.6e}", r.u, steps, r.floor);
                }
                let us: Vec<f64> = rows.iter().map(|r| r.u).collect();
                let floors: Vec<f64> = rows.iter().map(|r| r.floor).collect();
                if let Some(rho) = spearman(&us, &floors) {
                    println!("spearman(u, floor) = {rho:.4}");
                }
            }
        }
    }
    Ok(())
}
