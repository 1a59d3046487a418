//! Power references for the two storage devices.
//!
//! The demand deviation is split by a first-order high-pass: the fast part
//! goes to the supercapacitor, the exact complement to the battery. The SC
//! reference may lead by a ramp term, and both references carry a slow SoC
//! bias.

use std::f64::consts::PI;

use crate::error::{ensure, Error, Result};

/// Bilinear first-order high-pass `s / (s + 2π fc)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpfState {
    pub cutoff_freq: f64,
    pub previous_input: f64,
    pub previous_output: f64,
}

impl HpfState {
    pub fn new(cutoff_freq: f64) -> Self {
        Self {
            cutoff_freq,
            previous_input: 0.0,
            previous_output: 0.0,
        }
    }

    /// State that passes a constant input `delta` straight to the low band.
    pub fn settled(cutoff_freq: f64, delta: f64) -> Self {
        Self {
            cutoff_freq,
            previous_input: delta,
            previous_output: 0.0,
        }
    }
}

/// Returns the next state with the `(high, low)` split of `delta`.
pub fn hpf_step(state: &HpfState, delta: f64, dt: f64) -> (HpfState, f64, f64) {
    let k = 2.0 / dt;
    let w = 2.0 * PI * state.cutoff_freq;
    let high = (k * (delta - state.previous_input) + (k - w) * state.previous_output) / (k + w);
    let low = delta - high;
    (
        HpfState {
            cutoff_freq: state.cutoff_freq,
            previous_input: delta,
            previous_output: high,
        },
        high,
        low,
    )
}

/// SC reference with the ramp look-ahead: `high + omega * t_eff * ramp`.
pub fn sc_ramp_command(high: f64, omega_ramp: f64, t_eff: f64, ramp_estimate: f64) -> f64 {
    high + omega_ramp * t_eff * ramp_estimate
}

/// Slow offset added to a device reference to pull its SoC back to target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocBiasState {
    /// MW.
    pub offset: f64,
    /// MW per unit SoC error per second.
    pub gain_kq: f64,
    /// s.
    pub time_const_tq: f64,
    /// SoC fraction.
    pub deadband: f64,
}

impl SocBiasState {
    pub fn new(gain_kq: f64, time_const_tq: f64, deadband: f64) -> Self {
        Self {
            offset: 0.0,
            gain_kq,
            time_const_tq,
            deadband,
        }
    }

    pub fn validate(&self, section: &str) -> Result<()> {
        ensure(
            self.gain_kq >= 0.0 && self.gain_kq.is_finite(),
            &format!("{section}_kq"),
            "must be >= 0",
        )?;
        ensure(
            self.time_const_tq > 0.0 && self.time_const_tq.is_finite(),
            &format!("{section}_tq"),
            "must be > 0",
        )?;
        ensure(
            self.deadband >= 0.0 && self.deadband.is_finite(),
            &format!("{section}_deadband"),
            "must be >= 0",
        )
    }

    /// Exponential decay with the drive term frozen.
    pub fn decayed(&self, dt: f64) -> Self {
        Self {
            offset: self.offset * (-dt / self.time_const_tq).exp(),
            ..*self
        }
    }
}

/// Advances the bias filter `q' = -k_q e - q / T_q` by one step, where
/// `soc_error = target - soc`. Inside the deadband the offset only decays.
pub fn soc_bias_step(state: &SocBiasState, soc_error: f64, dt: f64) -> (SocBiasState, f64) {
    let next = if soc_error.abs() <= state.deadband {
        state.decayed(dt)
    } else {
        let derivative = -state.gain_kq * soc_error - state.offset / state.time_const_tq;
        SocBiasState {
            offset: state.offset + dt * derivative,
            ..*state
        }
    };
    (next, next.offset)
}

/// Breakdown of the references, MW.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CommandComponents {
    pub hpf_part: f64,
    pub low_part: f64,
    pub ramp_part: f64,
    pub ess_bias: f64,
    pub sc_bias: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CommandSet {
    pub p_ess_ref: f64,
    pub p_sc_ref: f64,
    pub components: CommandComponents,
}

/// Final references. `sc_ref1` is the ramp-augmented SC command and `high`
/// its high-pass part (recorded so the ramp contribution can be recovered).
pub fn assemble_commands(
    high: f64,
    low: f64,
    sc_ref1: f64,
    ess_bias: f64,
    sc_bias: f64,
) -> CommandSet {
    CommandSet {
        p_ess_ref: low + ess_bias,
        p_sc_ref: sc_ref1 + sc_bias,
        components: CommandComponents {
            hpf_part: high,
            low_part: low,
            ramp_part: sc_ref1 - high,
            ess_bias,
            sc_bias,
        },
    }
}

/// Moving average of recent demand, used as a corrected reference level.
pub fn baseline_correction(recent_load: &[f64]) -> Result<f64> {
    if recent_load.is_empty() {
        return Err(Error::Input("baseline correction window is empty".into()));
    }
    Ok(recent_load.iter().sum::<f64>() / recent_load.len() as f64)
}
