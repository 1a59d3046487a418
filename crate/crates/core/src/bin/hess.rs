use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hess::analysis::{
    bode_eval, bode_eval_discrete, compute_metrics, default_segment_length, log_grid, psd_welch,
};
use hess::config::load_config;
use hess::csvio::{
    read_column, read_run, read_table, write_bode, write_load, write_metrics, write_metrics_to,
    write_psd, write_run,
};
use hess::engine::{run_comparison, run_simulation, SimConfig};
use hess::generate_load;
use hess::tf::ContinuousTf;
use hess::{Error, Result};

#[derive(Parser)]
#[command(
    name = "hess",
    version,
    about = "Battery/supercapacitor smoothing simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Loop {
    /// SC controller times SC plant.
    Sc,
    /// SC PD stage alone.
    ScPd,
    /// BESS controller times BESS plant.
    Bess,
    /// BESS loop without the repetitive term.
    BessNoRc,
    /// Power-split high-pass.
    Hpf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write every signal.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a scenario with and without storage; writes with_hess.csv,
    /// without_hess.csv and metrics.csv.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write the synthetic load trace of a scenario.
    GenLoad {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Welch PSD of one column of a CSV.
    Psd {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        column: String,
        /// Sample interval; read from a `time` or `time_s` column if omitted.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        segment: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        overlap: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Frequency response of a controller loop.
    Bode {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "sc")]
        r#loop: Loop,
        /// Evaluate the bilinear discretization instead of the design.
        #[arg(long)]
        discrete: bool,
        #[arg(long, default_value_t = 1e-3)]
        fmin: f64,
        #[arg(long, default_value_t = 10.0)]
        fmax: f64,
        #[arg(long, default_value_t = 50)]
        points_per_decade: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summary metrics of a run CSV; prints to stdout unless --out is given.
    Metrics {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 60.0)]
        nominal_freq: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn config_or_default(path: Option<PathBuf>) -> Result<SimConfig> {
    match path {
        Some(p) => load_config(p),
        None => Ok(SimConfig::default()),
    }
}

fn loop_tf(cfg: &SimConfig, which: Loop) -> ContinuousTf {
    match which {
        Loop::Sc => cfg.sc_controller.open_loop_tf(),
        Loop::ScPd => cfg.sc_controller.pd_tf(),
        Loop::Bess => cfg.ess_controller.open_loop_tf(),
        Loop::BessNoRc => {
            let mut p = cfg.ess_controller;
            p.repetitive = false;
            p.open_loop_tf()
        }
        Loop::Hpf => ContinuousTf::high_pass(cfg.command.hpf_cutoff),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = load_config(config)?;
            write_run(&run_simulation(&cfg)?, out)
        }
        Command::Compare { config, out_dir } => {
            let cfg = load_config(config)?;
            let (with, without) = run_comparison(&cfg)?;
            std::fs::create_dir_all(&out_dir)?;
            write_run(&with, out_dir.join("with_hess.csv"))?;
            write_run(&without, out_dir.join("without_hess.csv"))?;
            write_metrics(
                &[
                    ("with_hess", compute_metrics(&with)?),
                    ("without_hess", compute_metrics(&without)?),
                ],
                out_dir.join("metrics.csv"),
            )
        }
        Command::GenLoad { config, out } => {
            let cfg = config_or_default(config)?;
            write_load(&generate_load(&cfg.load)?, out)
        }
        Command::Psd {
            input,
            column,
            dt,
            segment,
            overlap,
            out,
        } => {
            let samples = read_column(&input, &column)?;
            let dt = match dt {
                Some(dt) => dt,
                None => {
                    let (header, cols) = read_table(&input)?;
                    let t = header
                        .iter()
                        .position(|h| h == "time" || h == "time_s")
                        .map(|i| &cols[i])
                        .ok_or_else(|| Error::Input("no time column; pass --dt".into()))?;
                    if t.len() < 2 {
                        return Err(Error::Input("need at least two rows".into()));
                    }
                    t[1] - t[0]
                }
            };
            let seg = segment.unwrap_or_else(|| default_segment_length(samples.len()));
            write_psd(&psd_welch(&samples, dt, seg, overlap)?, out)
        }
        Command::Bode {
            config,
            r#loop,
            discrete,
            fmin,
            fmax,
            points_per_decade,
            out,
        } => {
            let cfg = config_or_default(config)?;
            let tf = loop_tf(&cfg, r#loop);
            let freqs = log_grid(fmin, fmax, points_per_decade);
            let bode = if discrete {
                bode_eval_discrete(&tf.bilinear(cfg.dt), cfg.dt, &freqs)?
            } else {
                bode_eval(&tf, &freqs)?
            };
            write_bode(&bode, out)
        }
        Command::Metrics {
            input,
            nominal_freq,
            out,
        } => {
            let m = compute_metrics(&read_run(input, nominal_freq)?)?;
            match out {
                Some(p) => write_metrics(&[("run", m)], p),
                None => write_metrics_to(&[("run", m)], std::io::stdout().lock()),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
