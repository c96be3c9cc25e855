use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use coaxial_core::actuation::{forward_wrench, mix, ActuatorCommand};
use coaxial_core::config_analysis::{self, RotorConfigQuery};
use coaxial_core::scenarios::{self, run_scenario};
use coaxial_core::{exit_code, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "coaxial", version, about = "Fully-actuated coaxial vehicle simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a closed-loop scenario and write telemetry plus a summary.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Directory for the telemetry CSV; defaults to the path in the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Write the summary JSON here instead of stdout.
        #[arg(long)]
        summary_json: Option<PathBuf>,
    },
    /// Tabulate hover efficiency and footprint for 1..n_max rotors.
    AnalyzeConfig {
        #[arg(long)]
        mass: f64,
        #[arg(long)]
        rotor_radius: f64,
        #[arg(long, default_value_t = config_analysis::DEFAULT_N_MAX)]
        n_max: usize,
        #[arg(long, default_value_t = config_analysis::DEFAULT_RHO)]
        rho: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check that mixing random feasible wrenches reproduces them.
    MixCheck {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Failures carry the process exit status alongside the message.
struct Failure {
    code: i32,
    error: anyhow::Error,
}

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e = e.into();
        Self { code: e.exit_code(), error: e.into() }
    }
}

impl Failure {
    fn io(error: anyhow::Error) -> Self {
        Self { code: 1, error }
    }
}

fn simulate(config: &Path, out_dir: Option<&Path>, summary_json: Option<&Path>) -> Result<(), Failure> {
    let mut cfg = scenarios::load_config(config)?;
    if let Some(dir) = out_dir {
        let name = cfg.output.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.name)));
        let file = name.file_name().map(PathBuf::from).unwrap_or(name);
        cfg.output = Some(dir.join(file));
    }
    let start = Instant::now();
    let outcome = run_scenario(&cfg).context("writing telemetry").map_err(Failure::io)?;
    let elapsed = start.elapsed();

    let json = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
    match summary_json {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Failure::io(e.into()))?;
            }
            std::fs::write(path, json + "\n")
                .with_context(|| format!("writing {}", path.display()))
                .map_err(Failure::io)?;
        }
        None => println!("{json}"),
    }
    let r = &outcome.report;
    eprintln!(
        "{}: {} samples in {:.2} s, position RMSE {:.4} m, attitude RMSE {:.3} deg",
        r.scenario,
        r.samples,
        elapsed.as_secs_f64(),
        r.position_rmse_m,
        r.attitude_rmse_deg
    );
    match outcome.error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn analyze(mass: f64, rotor_radius: f64, n_max: usize, rho: f64, out: &Path) -> Result<(), Failure> {
    let query = RotorConfigQuery { rho, ..RotorConfigQuery::new(1, mass, rotor_radius) };
    let rows = config_analysis::generate_config_table(&query, n_max)?;
    config_analysis::write_config_table_file(&rows, out)?;
    for row in &rows {
        println!("n = {:2}  S_c/S_1 = {:.4}", row.n, row.area_ratio);
    }
    Ok(())
}

fn mix_check(params: &Path, samples: usize, seed: u64) -> Result<(), Failure> {
    let p = scenarios::load_vehicle_params(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Instant::now();
    let mut max_err: f64 = 0.0;
    for _ in 0..samples {
        let cmd = ActuatorCommand::from_unit_cube(&p, rng.gen());
        let w = forward_wrench(&cmd, &p);
        let u = mix(&w, &p)?;
        max_err = max_err.max(forward_wrench(&u, &p).max_abs_diff(&w));
    }
    println!("samples: {samples}");
    println!("max abs error: {max_err:.3e}");
    println!("elapsed: {:.3} ms", start.elapsed().as_secs_f64() * 1e3);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { config, out_dir, summary_json } => {
            simulate(config, out_dir.as_deref(), summary_json.as_deref())
        }
        Command::AnalyzeConfig { mass, rotor_radius, n_max, rho, out } => {
            analyze(*mass, *rotor_radius, *n_max, *rho, out)
        }
        Command::MixCheck { params, samples, seed } => mix_check(params, *samples, *seed),
    };
    match result {
        Ok(()) => ExitCode::from(exit_code::SUCCESS as u8),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code as u8)
        }
    }
}
