//! Ramp-rate estimation of the demand deviation and the adaptive weight that
//! scales the supercapacitor's ramp look-ahead.
//!
//! The filter tracks `z = [baseline, ramp]` under
//!
//! ```text
//! z[k+1] = [[1, dt], [0, phi]] z[k] + w[k]
//! y[k]   = [1, 0] z[k] + v[k]
//! ```
//!
//! with `phi` slightly below one so that the ramp state relaxes slowly.

use nalgebra::{Matrix2, Vector2};

use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KfParams {
    /// Ramp persistence.
    pub phi: f64,
    /// Covariance of `w`.
    pub process_noise: Matrix2<f64>,
    /// Variance of `v`, MW².
    pub meas_noise: f64,
    pub dt: f64,
}

impl Default for KfParams {
    fn default() -> Self {
        Self {
            phi: 0.999,
            process_noise: Matrix2::new(1e-4, 0.0, 0.0, 1.0),
            meas_noise: 1.0,
            dt: 0.01,
        }
    }
}

impl KfParams {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.phi > 0.0 && self.phi <= 1.0,
            "kf.phi",
            "must lie in (0, 1]",
        )?;
        ensure(
            self.meas_noise > 0.0 && self.meas_noise.is_finite(),
            "kf.meas_noise",
            "must be > 0",
        )?;
        ensure(self.dt > 0.0 && self.dt.is_finite(), "kf.dt", "must be > 0")?;
        let q = &self.process_noise;
        ensure(
            q.iter().all(|v| v.is_finite()) && (q[(0, 1)] - q[(1, 0)]).abs() <= 1e-12,
            "kf.process_noise",
            "must be finite and symmetric",
        )?;
        let psd = q[(0, 0)] >= 0.0
            && q[(1, 1)] >= 0.0
            && q[(0, 0)] * q[(1, 1)] - q[(0, 1)] * q[(1, 0)] >= -1e-15;
        ensure(psd, "kf.process_noise", "must be positive semidefinite")
    }

    fn transition(&self) -> Matrix2<f64> {
        Matrix2::new(1.0, self.dt, 0.0, self.phi)
    }
}

/// Estimate `[baseline (MW), ramp (MW/s)]` with its covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KfState {
    pub z: Vector2<f64>,
    pub covariance: Matrix2<f64>,
}

impl KfState {
    /// Starts at `baseline` with zero ramp and a diffuse-ish prior.
    pub fn new(baseline: f64) -> Self {
        Self {
            z: Vector2::new(baseline, 0.0),
            covariance: Matrix2::identity(),
        }
    }

    pub fn baseline(&self) -> f64 {
        self.z[0]
    }

    pub fn ramp(&self) -> f64 {
        self.z[1]
    }
}

/// One predict/update cycle. Returns the updated state and the ramp estimate.
pub fn kf_step(state: &KfState, params: &KfParams, measurement: f64) -> Result<(KfState, f64)> {
    if !measurement.is_finite() {
        return Err(Error::Input(format!(
            "kalman measurement is not finite: {measurement}"
        )));
    }
    let f = params.transition();
    let z_pred = f * state.z;
    let p_pred = f * state.covariance * f.transpose() + params.process_noise;

    let innovation = measurement - z_pred[0];
    let s = p_pred[(0, 0)] + params.meas_noise;
    let gain = Vector2::new(p_pred[(0, 0)], p_pred[(1, 0)]) / s;

    let z = z_pred + gain * innovation;
    // Joseph form keeps the covariance PSD under rounding.
    let i_kh = Matrix2::new(1.0 - gain[0], 0.0, -gain[1], 1.0);
    let p = i_kh * p_pred * i_kh.transpose() + gain * gain.transpose() * params.meas_noise;
    let covariance = (p + p.transpose()) * 0.5;

    let next = KfState { z, covariance };
    Ok((next, next.ramp()))
}

/// What drives the jerk attenuation factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JerkSource {
    /// `|R̂|`, as in the published weight law.
    #[default]
    RampMagnitude,
    /// Filtered derivative of `R̂`.
    FilteredJerk,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampWeightParams {
    /// Reference slope, MW/s.
    pub s_ref: f64,
    /// Reference for jerk attenuation: MW/s with `RampMagnitude`, MW/s² with
    /// `FilteredJerk`.
    pub a_ref: f64,
    /// Evaluate the logistic at `(|R̂| - s_ref) / s_ref` instead of
    /// `|R̂| / s_ref`, so the ramp weight only approaches one past `s_ref`.
    pub threshold_shift: bool,
    pub jerk_source: JerkSource,
    /// Cutoff of the jerk differentiator, Hz.
    pub jerk_cutoff: f64,
}

impl Default for RampWeightParams {
    fn default() -> Self {
        Self {
            s_ref: 5.0,
            a_ref: 50.0,
            threshold_shift: false,
            jerk_source: JerkSource::RampMagnitude,
            jerk_cutoff: 1.0,
        }
    }
}

impl RampWeightParams {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.s_ref > 0.0 && self.s_ref.is_finite(),
            "weights.s_ref",
            "must be > 0",
        )?;
        ensure(
            self.a_ref > 0.0 && self.a_ref.is_finite(),
            "weights.a_ref",
            "must be > 0",
        )?;
        ensure(
            self.jerk_cutoff > 0.0 && self.jerk_cutoff.is_finite(),
            "weights.jerk_cutoff",
            "must be > 0",
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampWeights {
    pub gamma_ramp: f64,
    pub gamma_jerk: f64,
    pub omega_ramp: f64,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `omega = logistic(|R̂|/s_ref) * 1/(1 + |R̂|/a_ref)`.
pub fn adaptive_weight(ramp_estimate: f64, params: &RampWeightParams) -> RampWeights {
    weights(ramp_estimate, ramp_estimate, params)
}

/// Like [`adaptive_weight`] but attenuates with an explicit jerk signal.
pub fn adaptive_weight_with_jerk(
    ramp_estimate: f64,
    jerk_estimate: f64,
    params: &RampWeightParams,
) -> RampWeights {
    weights(ramp_estimate, jerk_estimate, params)
}

fn weights(ramp: f64, attenuator: f64, params: &RampWeightParams) -> RampWeights {
    let r = ramp.abs();
    let arg = if params.threshold_shift {
        (r - params.s_ref) / params.s_ref
    } else {
        r / params.s_ref
    };
    let gamma_ramp = logistic(arg);
    let gamma_jerk = 1.0 / (1.0 + attenuator.abs() / params.a_ref);
    RampWeights {
        gamma_ramp,
        gamma_jerk,
        omega_ramp: gamma_ramp * gamma_jerk,
    }
}

/// Band-limited derivative of the ramp estimate: backward difference followed
/// by a first-order low-pass.
#[derive(Debug, Clone, PartialEq)]
pub struct JerkEstimator {
    previous: Option<f64>,
    filtered: f64,
    smoothing: f64,
    dt: f64,
}

impl JerkEstimator {
    pub fn new(cutoff_hz: f64, dt: f64) -> Self {
        let a = (-2.0 * std::f64::consts::PI * cutoff_hz * dt).exp();
        Self {
            previous: None,
            filtered: 0.0,
            smoothing: a,
            dt,
        }
    }

    pub fn step(&mut self, ramp: f64) -> f64 {
        let raw = match self.previous {
            Some(prev) => (ramp - prev) / self.dt,
            None => 0.0,
        };
        self.previous = Some(ramp);
        self.filtered = self.smoothing * self.filtered + (1.0 - self.smoothing) * raw;
        self.filtered
    }
}
