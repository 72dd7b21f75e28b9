//! `hbf-sim`: run hybrid-beamforming scenarios and figure presets, or
//! print the closed-form interference bounds for a parameter set.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hbf_core::config::{load_config, ScenarioConfig};
use hbf_core::error::Error;
use hbf_core::harness::{figure_preset, run_scenario_with_threads, write_csv, ResultRow};
use hbf_core::rate::{expected_interference, InterferenceForm};

#[derive(Parser)]
#[command(
    name = "hbf-sim",
    version,
    about = "Multiuser mmWave hybrid beamforming simulator"
)]
struct Cli {
    /// Worker threads; falls back to HBF_SIM_THREADS, then all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario file and write <out>/<id>.csv
    Run {
        /// Scenario JSON document.
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the trial count per SNR point.
        #[arg(long)]
        trials: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a figure preset (fig1..fig6) and write <out>/<name>.csv
    Figure {
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the interference bounds and ceiling for one parameter set
    Bounds {
        #[arg(long)]
        sigma_delta: f64,
        #[arg(long)]
        sigma_alpha: f64,
        #[arg(long)]
        nbs: usize,
        #[arg(long)]
        nue: usize,
        #[arg(long)]
        ki: usize,
    },
}

fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, Error> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("HBF_SIM_THREADS") {
        Ok(v) => v
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::Config(format!("HBF_SIM_THREADS must be an integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn run_and_write(
    cfg: &ScenarioConfig,
    threads: Option<usize>,
    out: &PathBuf,
    file: &str,
    append_to: Option<Vec<ResultRow>>,
) -> Result<Vec<ResultRow>, Error> {
    let mut rows = append_to.unwrap_or_default();
    rows.extend(run_scenario_with_threads(cfg, threads)?);
    std::fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.clone(),
        source,
    })?;
    write_csv(&rows, &out.join(file))?;
    Ok(rows)
}

fn real_main() -> Result<(), Error> {
    let cli = Cli::parse();
    let threads = resolve_threads(cli.threads)?;
    match cli.cmd {
        Cmd::Run {
            scenario,
            seed,
            trials,
            out,
        } => {
            let mut cfg = load_config(&scenario)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(trials) = trials {
                cfg.trials = trials;
            }
            cfg.validate()?;
            let file = format!("{}.csv", cfg.id);
            run_and_write(&cfg, threads, &out, &file, None)?;
            println!("wrote {}", out.join(file).display());
        }
        Cmd::Figure { name, out } => {
            let scenarios = figure_preset(&name)?;
            let mut rows = Vec::new();
            let total = scenarios.len();
            for (i, cfg) in scenarios.iter().enumerate() {
                eprintln!("[{}/{total}] {}", i + 1, cfg.id);
                rows = run_and_write(cfg, threads, &out, &format!("{name}.csv"), Some(rows))?;
            }
            println!("wrote {}", out.join(format!("{name}.csv")).display());
        }
        Cmd::Bounds {
            sigma_delta,
            sigma_alpha,
            nbs,
            nue,
            ki,
        } => {
            if sigma_delta < 0.0 || sigma_alpha < 0.0 || nbs == 0 || nue == 0 || ki == 0 {
                return Err(Error::Config(
                    "bounds: sigmas must be nonnegative and nbs/nue/ki at least 1".into(),
                ));
            }
            let simplified = expected_interference(
                sigma_delta,
                sigma_alpha,
                nbs,
                nue,
                ki,
                InterferenceForm::Simplified,
            );
            let exact = expected_interference(
                sigma_delta,
                sigma_alpha,
                nbs,
                nue,
                ki,
                InterferenceForm::Exact,
            );
            let ceiling = if simplified > 0.0 {
                ki as f64 * (1.0 + 1.0 / simplified).log2()
            } else {
                f64::INFINITY
            };
            println!("simplified interference bound: {simplified:.6e}");
            println!("exact interference expectation: {exact:.6e}");
            println!("sum-rate ceiling at K_I={ki}: {ceiling:.4} bits/s/Hz");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::Config(_) | Error::InvalidArgument(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
