//! Hybrid battery / supercapacitor smoothing of pulsed data-centre demand.
//!
//! A demand deviation from the scheduled level is split by a high-pass
//! filter: the supercapacitor takes the fast part, optionally led by a
//! Kalman ramp estimate, and the battery takes the rest. Each device has its
//! own controller and a first-order plant with rate, power and SoC limits.
//! The residual grid draw drives a single-area swing model.
//!
//! ```
//! use hess::{run_simulation, SimConfig};
//!
//! let mut config = SimConfig::default();
//! config.duration = 60.0;
//! let run = run_simulation(&config).unwrap();
//! assert_eq!(run.len(), 6000);
//! ```

pub mod analysis;
pub mod command;
pub mod config;
pub mod control;
pub mod csvio;
pub mod engine;
pub mod error;
pub mod estimation;
pub mod plant;
pub mod signals;
pub mod tf;

pub use analysis::{bode_eval, compute_metrics, psd_welch, BodeResult, PsdResult, RunMetrics};
pub use config::{load_config, parse_config};
pub use engine::{run_comparison, run_simulation, RunResult, SimConfig, Toggles};
pub use error::{Error, Result};
pub use signals::{delta_signal, generate_load, LoadProfileSpec, LoadTrace};
