//! Tracking controllers producing the plant inputs of the two devices.
//!
//! SC: high-pass-shaped PD on the tracking error, a delay-compensating
//! feedforward, and a ramp-tracking correction.
//! BESS: leaky integrator plus repetitive compensator on the tracking error,
//! and the same feedforward structure with the battery's time constant.
//!
//! Every filter is designed in continuous time and discretized with the
//! bilinear transform. Outputs are not clamped; the plant enforces limits.

use std::f64::consts::PI;

use crate::error::{ensure, Error, Result};
use crate::tf::{ContinuousTf, DiscreteTf};

fn finite(v: f64) -> bool {
    v.is_finite()
}

fn check_stable(filter: &DiscreteTf, name: &str) -> Result<()> {
    if filter.is_stable() {
        Ok(())
    } else {
        Err(Error::config(
            name,
            "discretized filter has a pole on or outside the unit circle",
        ))
    }
}

/// Feedforward `scale · (s + 1/τ)` with the `s` term band-limited at `fd`.
/// `scale = τ` turns it into the plant inverse `τ s + 1`.
fn feedforward_tf(scale: f64, tau: f64, fd: f64) -> ContinuousTf {
    ContinuousTf::band_limited_derivative(fd)
        .parallel(&ContinuousTf::gain(1.0 / tau))
        .scaled(scale)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScControllerParams {
    pub kp: f64,
    pub kd: f64,
    /// Derivative filter cutoff, Hz.
    pub fd: f64,
    /// Ramp-tracking gain, MW per MW/s.
    pub k_rk: f64,
    pub tau_sc: f64,
    /// Cutoff of the high-pass factor in the PD, Hz.
    pub hpf_cutoff: f64,
    /// Scale on the feedforward `(s + 1/τ)`.
    pub ff_scale: f64,
    /// Include the high-pass factor in the PD.
    pub hpf_shaping: bool,
    pub feedforward: bool,
    pub ramp_tracking: bool,
}

impl Default for ScControllerParams {
    fn default() -> Self {
        Self {
            kp: 1.0,
            kd: 0.05,
            fd: 5.0,
            k_rk: 0.05,
            tau_sc: 0.02,
            hpf_cutoff: 0.2,
            ff_scale: 0.02,
            hpf_shaping: true,
            feedforward: true,
            ramp_tracking: true,
        }
    }
}

impl ScControllerParams {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.fd > 0.0 && finite(self.fd),
            "sc_controller.fd",
            "must be > 0",
        )?;
        ensure(
            self.tau_sc > 0.0 && finite(self.tau_sc),
            "sc_controller.tau_sc",
            "must be > 0",
        )?;
        ensure(
            self.hpf_cutoff > 0.0 && finite(self.hpf_cutoff),
            "sc_controller.hpf_cutoff",
            "must be > 0",
        )?;
        ensure(finite(self.kp), "sc_controller.kp", "must be finite")?;
        ensure(finite(self.kd), "sc_controller.kd", "must be finite")?;
        ensure(finite(self.k_rk), "sc_controller.k_rk", "must be finite")?;
        ensure(
            finite(self.ff_scale),
            "sc_controller.ff_scale",
            "must be finite",
        )
    }

    /// `kp + kd · 2π fd s / (s + 2π fd)`, with the high-pass factor when
    /// `hpf_shaping` is set.
    pub fn pd_tf(&self) -> ContinuousTf {
        let pd = ContinuousTf::gain(self.kp)
            .parallel(&ContinuousTf::band_limited_derivative(self.fd).scaled(self.kd));
        if self.hpf_shaping {
            ContinuousTf::high_pass(self.hpf_cutoff).series(&pd)
        } else {
            pd
        }
    }

    pub fn feedforward_tf(&self) -> ContinuousTf {
        feedforward_tf(self.ff_scale, self.tau_sc, self.fd)
    }

    /// Feedback controller times the device lag.
    pub fn open_loop_tf(&self) -> ContinuousTf {
        self.pd_tf()
            .series(&ContinuousTf::first_order_lag(self.tau_sc))
    }
}

/// Band-limited backward difference of a measured power.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeEstimator {
    previous: Option<f64>,
    smoother: DiscreteTf,
    dt: f64,
}

impl SlopeEstimator {
    pub fn new(cutoff_hz: f64, dt: f64) -> Self {
        Self {
            previous: None,
            smoother: ContinuousTf::low_pass(cutoff_hz).bilinear(dt),
            dt,
        }
    }

    pub fn filter(&self) -> &DiscreteTf {
        &self.smoother
    }

    /// Slope in MW/s. The first call only latches the measurement.
    pub fn step(&mut self, p_meas: f64) -> f64 {
        let raw = match self.previous {
            Some(prev) => (p_meas - prev) / self.dt,
            None => 0.0,
        };
        self.previous = Some(p_meas);
        self.smoother.step(raw)
    }
}

/// Output of one controller step, split by term.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlTerms {
    pub feedback: f64,
    pub feedforward: f64,
    /// Ramp tracking for the SC, repetitive compensator for the BESS.
    pub auxiliary: f64,
}

impl ControlTerms {
    pub fn total(&self) -> f64 {
        self.feedback + self.feedforward + self.auxiliary
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScController {
    params: ScControllerParams,
    pd: DiscreteTf,
    ff: DiscreteTf,
    slope: SlopeEstimator,
    delayed_power: Option<f64>,
}

impl ScController {
    pub fn new(params: ScControllerParams, dt: f64) -> Result<Self> {
        params.validate()?;
        let pd = params.pd_tf().bilinear(dt);
        let ff = params.feedforward_tf().bilinear(dt);
        let slope = SlopeEstimator::new(params.fd, dt);
        check_stable(&pd, "sc_controller.pd")?;
        check_stable(&ff, "sc_controller.ff")?;
        check_stable(slope.filter(), "sc_controller.fd")?;
        Ok(Self {
            params,
            pd,
            ff,
            slope,
            delayed_power: None,
        })
    }

    pub fn params(&self) -> &ScControllerParams {
        &self.params
    }

    /// Discrete filters held by the controller.
    pub fn filters(&self) -> [&DiscreteTf; 3] {
        [&self.pd, &self.ff, self.slope.filter()]
    }

    /// Plant input for the SC given its reference, its latest measured output
    /// and the demand ramp estimate.
    pub fn step(&mut self, p_ref: f64, p_meas: f64, ramp_dc: f64) -> f64 {
        self.step_terms(p_ref, p_meas, ramp_dc).total()
    }

    pub fn step_terms(&mut self, p_ref: f64, p_meas: f64, ramp_dc: f64) -> ControlTerms {
        let feedback = self.pd.step(p_ref - p_meas);

        let delayed = self.delayed_power.unwrap_or(p_meas);
        self.delayed_power = Some(p_meas);
        let feedforward = if self.params.feedforward {
            self.ff.step(p_ref - delayed)
        } else {
            0.0
        };

        let slope = self.slope.step(p_meas);
        let auxiliary = if self.params.ramp_tracking {
            self.params.k_rk * (ramp_dc - slope)
        } else {
            0.0
        };
        ControlTerms {
            feedback,
            feedforward,
            auxiliary,
        }
    }
}

/// Shape of the repetitive compensator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RcForm {
    /// `k_RC · 2ζω s / (s² + 2ζω s + ω²)`: gain `k_RC` at `ω_RC`, rolling off
    /// on both sides like one tooth of a comb.
    #[default]
    Resonant,
    /// `k_RC · ω_RC / (s + ω_RC)`.
    LowPass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssControllerParams {
    pub ki: f64,
    /// s.
    pub t_leak: f64,
    pub k_rc: f64,
    /// rad/s.
    pub omega_rc: f64,
    /// Damping ratio of the resonant form.
    pub rc_damping: f64,
    pub rc_form: RcForm,
    pub tau_ess: f64,
    /// Derivative filter cutoff for the feedforward, Hz.
    pub fd: f64,
    pub ff_scale: f64,
    pub feedforward: bool,
    pub repetitive: bool,
}

impl Default for EssControllerParams {
    fn default() -> Self {
        Self {
            ki: 2.0,
            t_leak: 20.0,
            k_rc: 0.5,
            omega_rc: 2.0 * PI * 0.05,
            rc_damping: 0.05,
            rc_form: RcForm::Resonant,
            tau_ess: 0.25,
            fd: 5.0,
            ff_scale: 0.25,
            feedforward: true,
            repetitive: true,
        }
    }
}

impl EssControllerParams {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.t_leak > 0.0 && finite(self.t_leak),
            "ess_controller.t_leak",
            "must be > 0",
        )?;
        ensure(
            self.omega_rc > 0.0 && finite(self.omega_rc),
            "ess_controller.omega_rc",
            "must be > 0",
        )?;
        ensure(
            self.rc_damping > 0.0 && finite(self.rc_damping),
            "ess_controller.rc_damping",
            "must be > 0",
        )?;
        ensure(
            self.tau_ess > 0.0 && finite(self.tau_ess),
            "ess_controller.tau_ess",
            "must be > 0",
        )?;
        ensure(
            self.fd > 0.0 && finite(self.fd),
            "ess_controller.fd",
            "must be > 0",
        )?;
        ensure(finite(self.ki), "ess_controller.ki", "must be finite")?;
        ensure(finite(self.k_rc), "ess_controller.k_rc", "must be finite")?;
        ensure(
            finite(self.ff_scale),
            "ess_controller.ff_scale",
            "must be finite",
        )
    }

    /// `k_I / (s + 1/T_leak)`.
    pub fn leaky_integral_tf(&self) -> ContinuousTf {
        ContinuousTf::first_order(self.ki, 1.0 / self.t_leak)
    }

    pub fn repetitive_tf(&self) -> ContinuousTf {
        match self.rc_form {
            RcForm::Resonant => ContinuousTf::resonant(self.k_rc, self.omega_rc, self.rc_damping),
            RcForm::LowPass => ContinuousTf::first_order(self.k_rc * self.omega_rc, self.omega_rc),
        }
    }

    pub fn feedback_tf(&self) -> ContinuousTf {
        let i = self.leaky_integral_tf();
        if self.repetitive {
            i.parallel(&self.repetitive_tf())
        } else {
            i
        }
    }

    pub fn feedforward_tf(&self) -> ContinuousTf {
        feedforward_tf(self.ff_scale, self.tau_ess, self.fd)
    }

    pub fn open_loop_tf(&self) -> ContinuousTf {
        self.feedback_tf()
            .series(&ContinuousTf::first_order_lag(self.tau_ess))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EssController {
    params: EssControllerParams,
    integrator: DiscreteTf,
    rc: DiscreteTf,
    ff: DiscreteTf,
    delayed_power: Option<f64>,
}

impl EssController {
    pub fn new(params: EssControllerParams, dt: f64) -> Result<Self> {
        params.validate()?;
        let integrator = params.leaky_integral_tf().bilinear(dt);
        let rc = params.repetitive_tf().bilinear(dt);
        let ff = params.feedforward_tf().bilinear(dt);
        check_stable(&integrator, "ess_controller.t_leak")?;
        check_stable(&rc, "ess_controller.omega_rc")?;
        check_stable(&ff, "ess_controller.ff")?;
        Ok(Self {
            params,
            integrator,
            rc,
            ff,
            delayed_power: None,
        })
    }

    pub fn params(&self) -> &EssControllerParams {
        &self.params
    }

    pub fn filters(&self) -> [&DiscreteTf; 3] {
        [&self.integrator, &self.rc, &self.ff]
    }

    pub fn step(&mut self, p_ref: f64, p_meas: f64) -> f64 {
        self.step_terms(p_ref, p_meas).total()
    }

    /// Puts the loop in the steady state it reaches under a constant
    /// reference with a unity-gain plant, and returns that plant output.
    pub fn settle(&mut self, p_ref: f64) -> f64 {
        let mut gain = self.integrator.dc_gain();
        if self.params.repetitive {
            gain += self.rc.dc_gain();
        }
        if self.params.feedforward {
            gain += self.ff.dc_gain();
        }
        let err = p_ref / (1.0 + gain);
        let p = p_ref - err;
        self.integrator.prime(err);
        self.rc.prime(err);
        self.ff.prime(err);
        self.delayed_power = Some(p);
        p
    }

    pub fn step_terms(&mut self, p_ref: f64, p_meas: f64) -> ControlTerms {
        let err = p_ref - p_meas;
        let feedback = self.integrator.step(err);
        let auxiliary = if self.params.repetitive {
            self.rc.step(err)
        } else {
            0.0
        };
        let delayed = self.delayed_power.unwrap_or(p_meas);
        self.delayed_power = Some(p_meas);
        let feedforward = if self.params.feedforward {
            self.ff.step(p_ref - delayed)
        } else {
            0.0
        };
        ControlTerms {
            feedback,
            feedforward,
            auxiliary,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    const DT: f64 = 0.01;

    #[test]
    fn ess_settle_is_a_fixed_point() {
        let mut c = EssController::new(EssControllerParams::default(), DT).unwrap();
        let p = c.settle(-25.0);
        // integrator 2 * 20 plus plant-inverse feedforward 1
        assert_relative_eq!(p, -25.0 * 41.0 / 42.0, max_relative = 1e-12);
        for _ in 0..1000 {
            assert_relative_eq!(c.step(-25.0, p), p, max_relative = 1e-9);
        }
    }

    #[test]
    fn sc_zero_error_gives_zero_output() {
        let mut c = ScController::new(ScControllerParams::default(), DT).unwrap();
        for _ in 0..100 {
            assert_eq!(c.step(3.0, 3.0, 0.0), 0.0);
        }
    }

    #[test]
    fn sc_constant_error_leaves_only_feedforward() {
        for scale in [0.02, 1.0] {
            let params = ScControllerParams {
                ff_scale: scale,
                ..Default::default()
            };
            let mut c = ScController::new(params, DT).unwrap();
            let e = 2.0;
            let mut t = ControlTerms::default();
            for _ in 0..20_000 {
                t = c.step_terms(e, 0.0, 0.0);
            }
            assert!(
                t.feedback.abs() < 1e-6,
                "PD should reject DC: {}",
                t.feedback
            );
            assert_eq!(t.auxiliary, 0.0);
            assert_relative_eq!(
                t.feedforward,
                scale / params.tau_sc * e,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn sc_ramp_tracking_term() {
        let mut c = ScController::new(ScControllerParams::default(), DT).unwrap();
        let t = c.step_terms(0.0, 0.0, 10.0);
        assert_relative_eq!(t.auxiliary, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn slope_estimator_settles_on_constant_slope() {
        let mut s = SlopeEstimator::new(5.0, DT);
        assert_eq!(s.step(1.0), 0.0);
        assert_eq!(s.step(1.0), 0.0);
        let mut out = 0.0;
        for k in 0..500 {
            out = s.step(1.0 + 0.1 * k as f64);
        }
        assert_relative_eq!(out, 10.0, max_relative = 1e-9);
    }

    #[test]
    fn ess_dc_contributions() {
        let params = EssControllerParams {
            rc_form: RcForm::LowPass,
            feedforward: false,
            ..Default::default()
        };
        let mut c = EssController::new(params, DT).unwrap();
        let e = 0.5;
        let mut t = ControlTerms::default();
        for _ in 0..200_000 {
            t = c.step_terms(e, 0.0);
        }
        assert_relative_eq!(
            t.feedback,
            params.ki * params.t_leak * e,
            max_relative = 1e-6
        );
        assert_relative_eq!(t.auxiliary, params.k_rc * e, max_relative = 1e-6);
        assert_relative_eq!(
            t.total(),
            (params.ki * params.t_leak + params.k_rc) * e,
            max_relative = 1e-6
        );
    }

    #[test]
    fn ess_zero_error_zero_output() {
        let mut c = EssController::new(EssControllerParams::default(), DT).unwrap();
        for _ in 0..100 {
            assert_eq!(c.step(0.0, 0.0), 0.0);
        }
    }

    fn rc_amplitude_at_omega(form: RcForm) -> f64 {
        let params = EssControllerParams {
            rc_form: form,
            ..Default::default()
        };
        let mut rc = params.repetitive_tf().bilinear(DT);
        let n = 400_000;
        let mut peak: f64 = 0.0;
        for k in 0..n {
            let y = rc.step((params.omega_rc * k as f64 * DT).sin());
            if k > n - 4000 {
                peak = peak.max(y.abs());
            }
        }
        peak
    }

    #[test]
    fn rc_gain_at_its_frequency() {
        let k = EssControllerParams::default().k_rc;
        assert_relative_eq!(
            rc_amplitude_at_omega(RcForm::LowPass),
            k * FRAC_1_SQRT_2,
            max_relative = 1e-3
        );
        assert_relative_eq!(
            rc_amplitude_at_omega(RcForm::Resonant),
            k,
            max_relative = 1e-3
        );
    }

    #[test]
    fn default_filters_are_stable() {
        let sc = ScController::new(ScControllerParams::default(), DT).unwrap();
        let ess = EssController::new(EssControllerParams::default(), DT).unwrap();
        for f in sc.filters().into_iter().chain(ess.filters()) {
            assert!(f.poles().iter().all(|p| p.norm() < 1.0));
        }
    }

    #[test]
    fn leaky_integrator_bounded() {
        let params = EssControllerParams {
            feedforward: false,
            repetitive: false,
            ..Default::default()
        };
        let bound = params.ki * params.t_leak * 1.0;
        let mut c = EssController::new(params, DT).unwrap();
        for _ in 0..100_000 {
            let u = c.step(1.0, 0.0);
            assert!(u <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let bad = ScControllerParams {
            fd: 0.0,
            ..Default::default()
        };
        assert!(ScController::new(bad, DT).is_err());
        let bad = EssControllerParams {
            t_leak: -1.0,
            ..Default::default()
        };
        let msg = EssController::new(bad, DT).unwrap_err().to_string();
        assert!(msg.contains("ess_controller.t_leak"), "{msg}");
    }
}
