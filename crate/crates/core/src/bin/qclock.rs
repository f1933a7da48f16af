use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qclock::config::SimConfig;
use qclock::exec::Execution;
use qclock::output::fmt_f64;
use qclock::protocol::ModulationMode;
use qclock::run::{run_simulation, summary_pairs, write_outputs};
use qclock::scenarios::{compare_to_oracle, oracle_case, OracleCase, ORACLE_DTS, ORACLE_DURATION};
use qclock::sweep::{run_sweep, write_sweep_csv};
use qclock::verify::{all_pass, format_report, run_battery, VerifyOptions};
use qclock::{Error, Result};

#[derive(Parser)]
#[command(name = "qclock", version, about = "Quantum-clock-controlled engine simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Suppress progress logging and the stdout summary.
    #[arg(long, global = true)]
    quiet: bool,
    /// Worker threads for independent evolutions (0 = all cores, 1 = sequential).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write trajectory, final state and summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `run.outputs`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Modulation mode override.
        #[arg(long)]
        mode: Option<ModulationMode>,
        #[command(flatten)]
        common: Common,
    },
    /// Run every point of the config's sweep axes and write `sweep.csv`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        mode: Option<ModulationMode>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the built-in invariant battery; exits 1 if any check fails.
    Verify {
        /// Scales the dispersion derivative in the commutator check.
        #[arg(long, hide = true, default_value_t = 1.0)]
        inject_lambda_scale: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the split-step integrator with dense exact evolution.
    Oracle {
        /// Small config (d_E * N <= 4096); the built-in N = 16 case if omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn init_logging(quiet: bool) {
    // the battery uses broadband pulses on purpose; their warnings are noise there
    let level = if quiet { "error" } else { "info,qclock::clock=error" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn load(path: &Path, mode: Option<ModulationMode>) -> Result<SimConfig> {
    let mut cfg = SimConfig::load(path)?;
    if let Some(m) = mode {
        cfg.run.mode = m;
    }
    Ok(cfg)
}

fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn out_dir(cfg: &SimConfig, config: &Path, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| config_dir(config).join(&cfg.run.outputs))
}

fn cmd_run(config: &Path, out: Option<PathBuf>, mode: Option<ModulationMode>, common: &Common) -> Result<()> {
    let cfg = load(config, mode)?;
    let sim = cfg.build(&config_dir(config))?;
    let outcome = run_simulation(&sim, cfg.run.fidelity, Execution::from_jobs(common.jobs))?;
    let dir = out_dir(&cfg, config, out);
    let written = write_outputs(&dir, &outcome)?;
    if !common.quiet {
        for (k, v) in summary_pairs(&outcome) {
            println!("{k} = {v}");
        }
        for p in written {
            println!("wrote {}", p.display());
        }
    }
    if outcome.trajectory.truncated {
        let t = outcome.final_record().t;
        return Err(Error::Wraparound { t });
    }
    Ok(())
}

fn cmd_sweep(config: &Path, out: Option<PathBuf>, mode: Option<ModulationMode>, common: &Common) -> Result<()> {
    let cfg = load(config, mode)?;
    let rows = run_sweep(&cfg, &config_dir(config), Execution::from_jobs(common.jobs))?;
    let dir = out_dir(&cfg, config, out);
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join("sweep.csv");
    let file = File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_sweep_csv(BufWriter::new(file), &rows)?;
    let failed = rows.iter().filter(|r| r.result.is_err()).count();
    if failed > 0 {
        log::warn!("{failed} of {} sweep points failed", rows.len());
    }
    if !common.quiet {
        println!("{} points ({failed} failed); wrote {}", rows.len(), path.display());
    }
    Ok(())
}

fn cmd_oracle(config: Option<&Path>, common: &Common) -> Result<()> {
    let (case, duration, dts) = match config {
        None => (oracle_case(true)?, ORACLE_DURATION, ORACLE_DTS.to_vec()),
        Some(path) => {
            let cfg = load(path, None)?;
            let sim = cfg.build(&config_dir(path))?;
            let dt = sim.step.dt;
            let case = OracleCase {
                model: sim.model,
                initial: sim.initial,
            };
            (case, sim.duration, vec![dt, dt / 2.0, dt / 4.0])
        }
    };
    let conv = compare_to_oracle(&case, duration, &dts)?;
    if !common.quiet {
        println!("dt,max_deviation");
        for (dt, e) in conv.dts.iter().zip(&conv.errors) {
            println!("{},{}", fmt_f64(*dt), fmt_f64(*e));
        }
        println!("order = {:.4}", conv.order);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Run { common, .. }
        | Command::Sweep { common, .. }
        | Command::Verify { common, .. }
        | Command::Oracle { common, .. } => common.clone(),
    };
    init_logging(common.quiet);
    let result = match &cli.command {
        Command::Run { config, out, mode, .. } => cmd_run(config, out.clone(), *mode, &common),
        Command::Sweep { config, out, mode, .. } => cmd_sweep(config, out.clone(), *mode, &common),
        Command::Oracle { config, .. } => cmd_oracle(config.as_deref(), &common),
        Command::Verify {
            inject_lambda_scale, ..
        } => {
            let checks = run_battery(VerifyOptions {
                lambda_scale: *inject_lambda_scale,
                exec: Execution::from_jobs(common.jobs),
            });
            print!("{}", format_report(&checks));
            return if all_pass(&checks) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
