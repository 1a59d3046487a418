//! Closed-loop scenario driver.
//!
//! Each step runs, in this order: deviation, Kalman ramp estimate, adaptive
//! weight, high-pass split, SoC bias, reference assembly, controllers, device
//! plants, grid bookkeeping `P_grid = P_DC - P_ESS - P_SC`, and the grid
//! frequency update driven by `P_grid - P_DC^0`. Controllers see device
//! outputs from the previous step.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::command::{
    assemble_commands, hpf_step, sc_ramp_command, soc_bias_step, HpfState, SocBiasState,
};
use crate::control::{EssController, EssControllerParams, ScController, ScControllerParams};
use crate::error::{ensure, Error, Result};
use crate::estimation::{
    adaptive_weight, adaptive_weight_with_jerk, kf_step, JerkEstimator, JerkSource, KfParams,
    KfState, RampWeightParams,
};
use crate::plant::{device_step, grid_step, DeviceParams, DeviceState, GridParams, GridState};
use crate::signals::{generate_load, LoadProfileSpec, Phase};

/// When the SoC bias loop is driven by the SoC error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SocManagerMode {
    /// Only during idle phases; the offset decays while training runs.
    #[default]
    IdleOnly,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandParams {
    /// High-pass split cutoff, Hz.
    pub hpf_cutoff: f64,
    /// Ramp look-ahead horizon, s.
    pub t_eff: f64,
    pub ess_bias: SocBiasState,
    pub sc_bias: SocBiasState,
    pub soc_manager_mode: SocManagerMode,
    /// Length of the demand history averaged by baseline correction, s.
    /// The history starts filled with the scheduled reference. A window of
    /// one load cycle gives a reference that is steady from cycle to cycle.
    pub baseline_window: f64,
}

impl Default for CommandParams {
    fn default() -> Self {
        Self {
            hpf_cutoff: 0.2,
            t_eff: 0.02,
            // 1 % SoC error settles at 5 % of rated power: k_q = 0.05 p_max / (0.01 T_q)
            ess_bias: SocBiasState::new(5.0, 30.0, 0.002),
            sc_bias: SocBiasState::new(5.0 / 3.0, 30.0, 0.002),
            soc_manager_mode: SocManagerMode::IdleOnly,
            baseline_window: 600.0,
        }
    }
}

impl CommandParams {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.hpf_cutoff > 0.0 && self.hpf_cutoff.is_finite(),
            "command.hpf_cutoff",
            "must be > 0",
        )?;
        ensure(
            self.t_eff > 0.0 && self.t_eff.is_finite(),
            "command.t_eff",
            "must be > 0",
        )?;
        self.ess_bias.validate("command.ess")?;
        self.sc_bias.validate("command.sc")?;
        ensure(
            self.baseline_window > 0.0 && self.baseline_window.is_finite(),
            "command.baseline_window",
            "must be > 0",
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Toggles {
    pub hess_enabled: bool,
    pub soc_manager_enabled: bool,
    pub baseline_correction_enabled: bool,
    pub ramp_term_enabled: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Self {
            hess_enabled: true,
            soc_manager_enabled: false,
            baseline_correction_enabled: false,
            ramp_term_enabled: true,
        }
    }
}

/// Everything needed to run one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub load: LoadProfileSpec,
    pub grid: GridParams,
    pub bess: DeviceParams,
    pub sc: DeviceParams,
    pub kf: KfParams,
    pub weights: RampWeightParams,
    pub command: CommandParams,
    pub sc_controller: ScControllerParams,
    pub ess_controller: EssControllerParams,
    /// Step, s. Must equal `load.sample_interval` and `kf.dt`.
    pub dt: f64,
    /// s. At most the load schedule length.
    pub duration: f64,
    /// Scheduled demand `P_DC^0`, MW.
    pub reference_power: f64,
    pub toggles: Toggles,
    /// Std of gaussian noise on the device power measurements, MW.
    pub sensor_noise_std: f64,
    pub sensor_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let load = LoadProfileSpec::default();
        let duration = load.total_duration();
        Self {
            load,
            grid: GridParams::default(),
            bess: DeviceParams::bess(),
            sc: DeviceParams::sc(),
            kf: KfParams::default(),
            weights: RampWeightParams::default(),
            command: CommandParams::default(),
            sc_controller: ScControllerParams::default(),
            ess_controller: EssControllerParams::default(),
            dt: 0.01,
            duration,
            reference_power: 45.0,
            toggles: Toggles::default(),
            sensor_noise_std: 0.0,
            sensor_seed: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.dt > 0.0 && self.dt.is_finite(),
            "sim.dt",
            "must be > 0",
        )?;
        self.load.validate()?;
        ensure(
            (self.load.sample_interval - self.dt).abs() <= 1e-12 * self.dt,
            "load.sample_interval",
            "must equal sim.dt",
        )?;
        ensure(
            (self.kf.dt - self.dt).abs() <= 1e-12 * self.dt,
            "kf.dt",
            "must equal sim.dt",
        )?;
        ensure(
            self.duration >= self.dt && self.duration.is_finite(),
            "sim.duration",
            "must be >= dt",
        )?;
        ensure(
            self.duration <= self.load.total_duration() + 0.5 * self.dt,
            "sim.duration",
            "exceeds the load schedule length",
        )?;
        ensure(
            self.reference_power >= 0.0 && self.reference_power.is_finite(),
            "sim.reference_power",
            "must be >= 0",
        )?;
        ensure(
            self.sensor_noise_std >= 0.0 && self.sensor_noise_std.is_finite(),
            "sim.sensor_noise_std",
            "must be >= 0",
        )?;
        self.grid.validate()?;
        self.bess.validate("bess")?;
        self.sc.validate("sc")?;
        self.kf.validate()?;
        self.weights.validate()?;
        self.command.validate()?;
        self.sc_controller.validate()?;
        self.ess_controller.validate()?;
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// Same scenario with storage disconnected.
    pub fn without_hess(&self) -> Self {
        let mut c = self.clone();
        c.toggles.hess_enabled = false;
        c
    }
}

/// Per-step record of every signal in a run. All series share one length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunResult {
    pub time: Vec<f64>,
    pub p_dc: Vec<f64>,
    pub delta: Vec<f64>,
    pub p_sc_ref: Vec<f64>,
    pub p_ess_ref: Vec<f64>,
    pub p_sc: Vec<f64>,
    pub p_ess: Vec<f64>,
    pub u_sc: Vec<f64>,
    pub u_ess: Vec<f64>,
    pub soc_sc: Vec<f64>,
    pub soc_ess: Vec<f64>,
    pub p_grid: Vec<f64>,
    pub freq_hz: Vec<f64>,
    pub ramp_estimate: Vec<f64>,
    pub omega_ramp: Vec<f64>,
    /// Not a column; used to express frequency deviations.
    pub nominal_freq: f64,
}

impl RunResult {
    /// Column order of the CSV form.
    pub const COLUMNS: [&'static str; 15] = [
        "time",
        "p_dc",
        "delta",
        "p_sc_ref",
        "p_ess_ref",
        "p_sc",
        "p_ess",
        "u_sc",
        "u_ess",
        "soc_sc",
        "soc_ess",
        "p_grid",
        "freq_hz",
        "ramp_estimate",
        "omega_ramp",
    ];

    pub fn with_capacity(n: usize, nominal_freq: f64) -> Self {
        let v = || Vec::with_capacity(n);
        Self {
            time: v(),
            p_dc: v(),
            delta: v(),
            p_sc_ref: v(),
            p_ess_ref: v(),
            p_sc: v(),
            p_ess: v(),
            u_sc: v(),
            u_ess: v(),
            soc_sc: v(),
            soc_ess: v(),
            p_grid: v(),
            freq_hz: v(),
            ramp_estimate: v(),
            omega_ramp: v(),
            nominal_freq,
        }
    }

    pub fn columns(&self) -> [&[f64]; 15] {
        [
            &self.time,
            &self.p_dc,
            &self.delta,
            &self.p_sc_ref,
            &self.p_ess_ref,
            &self.p_sc,
            &self.p_ess,
            &self.u_sc,
            &self.u_ess,
            &self.soc_sc,
            &self.soc_ess,
            &self.p_grid,
            &self.freq_hz,
            &self.ramp_estimate,
            &self.omega_ramp,
        ]
    }

    pub fn columns_mut(&mut self) -> [&mut Vec<f64>; 15] {
        [
            &mut self.time,
            &mut self.p_dc,
            &mut self.delta,
            &mut self.p_sc_ref,
            &mut self.p_ess_ref,
            &mut self.p_sc,
            &mut self.p_ess,
            &mut self.u_sc,
            &mut self.u_ess,
            &mut self.soc_sc,
            &mut self.soc_ess,
            &mut self.p_grid,
            &mut self.freq_hz,
            &mut self.ramp_estimate,
            &mut self.omega_ramp,
        ]
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        Self::COLUMNS
            .iter()
            .position(|c| *c == name)
            .map(|i| self.columns()[i])
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn dt(&self) -> f64 {
        if self.time.len() > 1 {
            self.time[1] - self.time[0]
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for (name, col) in Self::COLUMNS.iter().zip(self.columns()) {
            if col.len() != n {
                return Err(Error::Input(format!(
                    "series `{name}` has {} samples, expected {n}",
                    col.len()
                )));
            }
        }
        Ok(())
    }

    fn push(&mut self, row: [f64; 15]) {
        for (col, v) in self.columns_mut().into_iter().zip(row) {
            col.push(v);
        }
    }
}

/// Running mean over the most recent `capacity` samples. The sum is kept
/// incrementally and recomputed from scratch once per window length, which
/// stops rounding drift without an O(window) cost per step.
#[derive(Debug, Clone)]
struct DemandWindow {
    samples: VecDeque<f64>,
    capacity: usize,
    sum: f64,
    since_refresh: usize,
}

impl DemandWindow {
    /// Starts full of `fill`, so early averages lean on the scheduled level.
    fn new(capacity: usize, fill: f64) -> Self {
        let samples: VecDeque<f64> = std::iter::repeat_n(fill, capacity).collect();
        let sum = samples.iter().sum();
        Self {
            samples,
            capacity,
            sum,
            since_refresh: 0,
        }
    }

    fn push(&mut self, p: f64) {
        if self.samples.len() == self.capacity {
            if let Some(old) = self.samples.pop_front() {
                self.sum -= old;
            }
        }
        self.samples.push_back(p);
        self.sum += p;
        self.since_refresh += 1;
        if self.since_refresh == self.capacity {
            self.sum = self.samples.iter().sum();
            self.since_refresh = 0;
        }
    }

    fn mean(&self) -> f64 {
        self.sum / self.samples.len() as f64
    }
}

fn finite_or(step: usize, signal: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { step, signal })
    }
}

/// Runs one scenario to completion.
pub fn run_simulation(config: &SimConfig) -> Result<RunResult> {
    config.validate()?;
    let trace = generate_load(&config.load)?;
    let steps = config.steps().min(trace.len());
    let dt = config.dt;
    let toggles = config.toggles;
    let cmd = &config.command;

    let mut run = RunResult::with_capacity(steps, config.grid.nominal_freq);
    let mut grid = GridState::default();
    let mut reference = config.reference_power;

    let first_delta = trace.samples.first().copied().unwrap_or(reference) - reference;
    let mut kf = KfState::new(first_delta);
    let mut hpf = HpfState::settled(cmd.hpf_cutoff, first_delta);
    let mut jerk = JerkEstimator::new(config.weights.jerk_cutoff, dt);
    let mut ess_bias = cmd.ess_bias;
    let mut sc_bias = cmd.sc_bias;
    let mut ess = DeviceState::at_rest(config.bess.soc_target);
    let mut sc = DeviceState::at_rest(config.sc.soc_target);
    let mut ess_ctrl = EssController::new(config.ess_controller, dt)?;
    let mut sc_ctrl = ScController::new(config.sc_controller, dt)?;
    // Start from the operating point held before the first sample rather
    // than stepping the battery from zero.
    ess.power = ess_ctrl
        .settle(first_delta)
        .clamp(-config.bess.p_max, config.bess.p_max);
    let window_len = ((cmd.baseline_window / dt).round() as usize).max(1);
    let mut window = DemandWindow::new(window_len, config.reference_power);

    let mut sensor_rng = ChaCha8Rng::seed_from_u64(config.sensor_seed);
    let sensor = Normal::new(0.0, config.sensor_noise_std).expect("validated noise std");

    for k in 0..steps {
        let t = k as f64 * dt;
        let p_dc = trace.samples[k];
        let phase = config.load.phase_at(t);

        if toggles.baseline_correction_enabled {
            window.push(p_dc);
            if phase == Phase::Idle {
                reference = window.mean();
            }
        }
        let delta = p_dc - reference;

        if !toggles.hess_enabled {
            grid = grid_step(grid, &config.grid, p_dc, reference, dt);
            let freq = finite_or(k, "freq_hz", config.grid.freq_hz(&grid))?;
            run.push([
                t, p_dc, delta, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, sc.soc, ess.soc, p_dc, freq, 0.0, 0.0,
            ]);
            continue;
        }

        let (next_kf, ramp) = kf_step(&kf, &config.kf, delta)?;
        kf = next_kf;

        let weights = match config.weights.jerk_source {
            JerkSource::RampMagnitude => adaptive_weight(ramp, &config.weights),
            JerkSource::FilteredJerk => {
                adaptive_weight_with_jerk(ramp, jerk.step(ramp), &config.weights)
            }
        };
        let omega = if toggles.ramp_term_enabled {
            weights.omega_ramp
        } else {
            0.0
        };

        let (next_hpf, high, low) = hpf_step(&hpf, delta, dt);
        hpf = next_hpf;
        let sc_ref1 = sc_ramp_command(high, omega, cmd.t_eff, ramp);

        if toggles.soc_manager_enabled {
            let drive = match cmd.soc_manager_mode {
                SocManagerMode::Continuous => true,
                SocManagerMode::IdleOnly => phase == Phase::Idle,
            };
            if drive {
                ess_bias = soc_bias_step(&ess_bias, config.bess.soc_target - ess.soc, dt).0;
                sc_bias = soc_bias_step(&sc_bias, config.sc.soc_target - sc.soc, dt).0;
            } else {
                ess_bias = ess_bias.decayed(dt);
                sc_bias = sc_bias.decayed(dt);
            }
        }
        let (q_ess, q_sc) = if toggles.soc_manager_enabled {
            (ess_bias.offset, sc_bias.offset)
        } else {
            (0.0, 0.0)
        };
        let commands = assemble_commands(high, low, sc_ref1, q_ess, q_sc);

        let (ess_meas, sc_meas) = if config.sensor_noise_std > 0.0 {
            (
                ess.power + sensor.sample(&mut sensor_rng),
                sc.power + sensor.sample(&mut sensor_rng),
            )
        } else {
            (ess.power, sc.power)
        };
        let u_ess = finite_or(k, "u_ess", ess_ctrl.step(commands.p_ess_ref, ess_meas))?;
        let u_sc = finite_or(k, "u_sc", sc_ctrl.step(commands.p_sc_ref, sc_meas, ramp))?;

        ess = device_step(ess, &config.bess, u_ess, dt)?;
        sc = device_step(sc, &config.sc, u_sc, dt)?;

        let p_grid = p_dc - ess.power - sc.power;
        grid = grid_step(grid, &config.grid, p_grid, reference, dt);
        let freq = finite_or(k, "freq_hz", config.grid.freq_hz(&grid))?;

        run.push([
            t,
            p_dc,
            delta,
            commands.p_sc_ref,
            commands.p_ess_ref,
            sc.power,
            ess.power,
            u_sc,
            u_ess,
            sc.soc,
            ess.soc,
            p_grid,
            freq,
            ramp,
            omega,
        ]);
    }
    Ok(run)
}

/// Paired runs on the identical load trace, with and without storage.
pub fn run_comparison(config: &SimConfig) -> Result<(RunResult, RunResult)> {
    config.validate()?;
    let with_cfg = {
        let mut c = config.clone();
        c.toggles.hess_enabled = true;
        c
    };
    let without_cfg = config.without_hess();
    std::thread::scope(|s| {
        let with = s.spawn(|| run_simulation(&with_cfg));
        let without = s.spawn(|| run_simulation(&without_cfg));
        let with = with.join().expect("simulation thread panicked")?;
        let without = without.join().expect("simulation thread panicked")?;
        Ok((with, without))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::command::baseline_correction;
    use crate::signals::PhaseSpan;

    fn flat_config() -> SimConfig {
        SimConfig {
            load: LoadProfileSpec {
                baseline_power: 45.0,
                peak_power: 70.0,
                dominant_amplitude: 0.0,
                sub_amplitude: 0.0,
                noise_std: 0.0,
                schedule: vec![PhaseSpan::idle(20.0)],
                ..LoadProfileSpec::default()
            },
            duration: 20.0,
            ..SimConfig::default()
        }
    }

    #[test]
    fn zero_deviation_is_a_fixed_point() {
        let c = flat_config();
        let run = run_simulation(&c).unwrap();
        assert_eq!(run.len(), 2000);
        assert!(run.p_grid.iter().all(|&p| p == 45.0));
        assert!(run.freq_hz.iter().all(|&f| f == 60.0));
        assert!(run.soc_ess.iter().all(|&s| s == 0.5));
        assert!(run.soc_sc.iter().all(|&s| s == 0.5));
    }

    #[test]
    fn flat_load_comparison_is_flat_in_both() {
        let (with, without) = run_comparison(&flat_config()).unwrap();
        assert_eq!(with.freq_hz, without.freq_hz);
    }

    #[test]
    fn config_errors_surface_before_running() {
        let c = SimConfig {
            duration: 1e6,
            ..SimConfig::default()
        };
        assert!(run_simulation(&c)
            .unwrap_err()
            .to_string()
            .contains("sim.duration"));
        let c = SimConfig {
            dt: 0.02,
            ..SimConfig::default()
        };
        assert!(run_simulation(&c).is_err());
    }

    #[test]
    fn running_window_mean_matches_direct_average() {
        let mut w = DemandWindow::new(50, 45.0);
        let mut history = vec![45.0; 50];
        for k in 0..1000 {
            let p = 20.0 + 50.0 * ((k * 37 % 101) as f64 / 101.0);
            w.push(p);
            history.push(p);
            let direct = baseline_correction(&history[history.len() - 50..]).unwrap();
            assert!((w.mean() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn misaligned_run_rejected() {
        let mut r = RunResult::with_capacity(2, 60.0);
        r.time = vec![0.0, 0.01];
        assert!(r.validate().is_err());
    }
}
