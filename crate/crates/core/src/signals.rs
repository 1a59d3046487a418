//! Synthetic datacenter demand traces and the deviation signal.
//!
//! An active (training) phase is a plateau reached through linear ramps, with
//! a dominant and a sub-fluctuation sinusoid riding on it. Idle phases sit at
//! the non-computational baseline. White gaussian noise is added everywhere
//! and the result is clipped at zero.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{ensure, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Active,
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSpan {
    pub phase: Phase,
    /// Seconds.
    pub duration: f64,
}

impl PhaseSpan {
    pub fn active(duration: f64) -> Self {
        Self {
            phase: Phase::Active,
            duration,
        }
    }

    pub fn idle(duration: f64) -> Self {
        Self {
            phase: Phase::Idle,
            duration,
        }
    }
}

/// Shape of a synthetic load profile. Powers in MW, times in s.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfileSpec {
    /// Non-computational floor held during idle phases.
    pub baseline_power: f64,
    /// Plateau level of an active phase.
    pub peak_power: f64,
    pub dominant_freq: f64,
    pub sub_freq: f64,
    pub dominant_amplitude: f64,
    pub sub_amplitude: f64,
    pub noise_std: f64,
    pub ramp_duration: f64,
    pub schedule: Vec<PhaseSpan>,
    pub sample_interval: f64,
    pub seed: u64,
}

impl Default for LoadProfileSpec {
    fn default() -> Self {
        Self {
            baseline_power: 20.0,
            peak_power: 70.0,
            dominant_freq: 0.05,
            sub_freq: 0.15,
            dominant_amplitude: 4.0,
            sub_amplitude: 1.5,
            noise_std: 4.0,
            ramp_duration: 2.0,
            schedule: vec![
                PhaseSpan::idle(45.0),
                PhaseSpan::active(420.0),
                PhaseSpan::idle(135.0),
            ],
            sample_interval: 0.01,
            seed: 7,
        }
    }
}

impl LoadProfileSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.baseline_power,
            self.peak_power,
            self.dominant_freq,
            self.sub_freq,
            self.dominant_amplitude,
            self.sub_amplitude,
            self.noise_std,
            self.ramp_duration,
            self.sample_interval,
        ]
        .iter()
        .all(|v| v.is_finite());
        ensure(finite, "load", "all parameters must be finite")?;
        ensure(
            self.baseline_power >= 0.0,
            "load.baseline_power",
            "must be >= 0",
        )?;
        ensure(
            self.peak_power > self.baseline_power,
            "load.peak_power",
            "must exceed baseline_power",
        )?;
        ensure(
            self.dominant_freq > 0.0,
            "load.dominant_freq",
            "must be > 0",
        )?;
        ensure(
            self.dominant_freq < self.sub_freq,
            "load.sub_freq",
            "must exceed dominant_freq",
        )?;
        ensure(
            self.dominant_amplitude >= 0.0,
            "load.dominant_amplitude",
            "must be >= 0",
        )?;
        ensure(
            self.sub_amplitude >= 0.0,
            "load.sub_amplitude",
            "must be >= 0",
        )?;
        ensure(self.noise_std >= 0.0, "load.noise_std", "must be >= 0")?;
        ensure(
            self.ramp_duration >= 0.0,
            "load.ramp_duration",
            "must be >= 0",
        )?;
        ensure(
            self.sample_interval > 0.0,
            "load.sample_interval",
            "must be > 0",
        )?;
        ensure(
            !self.schedule.is_empty(),
            "load.schedule",
            "must not be empty",
        )?;
        ensure(
            self.schedule
                .iter()
                .all(|s| s.duration.is_finite() && s.duration > 0.0),
            "load.schedule",
            "every phase duration must be > 0",
        )?;
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.schedule.iter().map(|s| s.duration).sum()
    }

    /// Number of samples `generate_load` produces.
    pub fn sample_count(&self) -> usize {
        (self.total_duration() / self.sample_interval).round() as usize
    }

    /// Phase in force at time `t`, with its start and end. Times past the end
    /// of the schedule belong to the last phase.
    fn span_at(&self, t: f64) -> (Phase, f64, f64) {
        let mut start = 0.0;
        for span in &self.schedule {
            let end = start + span.duration;
            if t < end {
                return (span.phase, start, end);
            }
            start = end;
        }
        let last = self.schedule.last().expect("validated schedule");
        (last.phase, start - last.duration, start)
    }

    pub fn phase_at(&self, t: f64) -> Phase {
        self.span_at(t).0
    }

    /// `(start, end)` of every ramp, up and down, in schedule order.
    pub fn ramp_windows(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut start = 0.0;
        for span in &self.schedule {
            let end = start + span.duration;
            if span.phase == Phase::Active {
                let r = self.ramp_duration.min(span.duration / 2.0);
                out.push((start, start + r));
                out.push((end - r, end));
            }
            start = end;
        }
        out
    }

    /// Noise-free active-phase envelope in [0, 1]: linear ramps at both ends
    /// of each active phase, zero during idle.
    fn envelope(&self, t: f64) -> f64 {
        match self.span_at(t) {
            (Phase::Idle, _, _) => 0.0,
            (Phase::Active, start, end) => {
                if self.ramp_duration == 0.0 {
                    return 1.0;
                }
                let up = (t - start) / self.ramp_duration;
                let down = (end - t) / self.ramp_duration;
                up.min(down).clamp(0.0, 1.0)
            }
        }
    }
}

/// Uniformly sampled demand P_DC(t) in MW.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadTrace {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl LoadTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }
}

/// Deviation of the demand from a reference level.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTrace {
    pub dt: f64,
    pub samples: Vec<f64>,
    pub reference_power: f64,
}

pub fn generate_load(spec: &LoadProfileSpec) -> Result<LoadTrace> {
    spec.validate()?;
    let n = spec.sample_count();
    let dt = spec.sample_interval;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_std).expect("noise_std validated >= 0");
    let swing = spec.peak_power - spec.baseline_power;

    let samples = (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            let env = spec.envelope(t);
            let oscillation = spec.dominant_amplitude * (2.0 * PI * spec.dominant_freq * t).sin()
                + spec.sub_amplitude * (2.0 * PI * spec.sub_freq * t).sin();
            let eps = noise.sample(&mut rng);
            (spec.baseline_power + env * (swing + oscillation) + eps).max(0.0)
        })
        .collect();

    Ok(LoadTrace {
        t0: 0.0,
        dt,
        samples,
    })
}

/// Pointwise `trace - reference_power`. `reference_power` is expected to be
/// non-negative.
pub fn delta_signal(trace: &LoadTrace, reference_power: f64) -> DeltaTrace {
    DeltaTrace {
        dt: trace.dt,
        samples: trace.samples.iter().map(|p| p - reference_power).collect(),
        reference_power,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(schedule: Vec<PhaseSpan>) -> LoadProfileSpec {
        LoadProfileSpec {
            dominant_amplitude: 0.0,
            sub_amplitude: 0.0,
            noise_std: 0.0,
            schedule,
            ..LoadProfileSpec::default()
        }
    }

    #[test]
    fn ramp_windows_follow_schedule() {
        let spec = LoadProfileSpec::default();
        assert_eq!(spec.ramp_windows(), vec![(45.0, 47.0), (463.0, 465.0)]);
    }

    #[test]
    fn trapezoid_without_oscillation() {
        let spec = quiet(vec![
            PhaseSpan::idle(1.0),
            PhaseSpan::active(10.0),
            PhaseSpan::idle(1.0),
        ]);
        let trace = generate_load(&spec).unwrap();
        assert_eq!(trace.len(), 1200);
        // idle, mid-ramp, plateau, back at baseline
        assert_eq!(trace.samples[50], 20.0);
        assert!((trace.samples[200] - 45.0).abs() < 1e-9);
        assert_eq!(trace.samples[600], 70.0);
        assert_eq!(trace.samples[1150], 20.0);
        let max = trace.samples.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(max, 70.0);
        // monotone ramp up
        assert!(trace.samples[100..300].windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn swing_is_fifty_megawatts_by_default() {
        let spec = quiet(LoadProfileSpec::default().schedule);
        let trace = generate_load(&spec).unwrap();
        let delta = delta_signal(&trace, spec.baseline_power);
        let max_abs = delta.samples.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        assert!((max_abs - 50.0).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_trace() {
        let spec = LoadProfileSpec::default();
        let a = generate_load(&spec).unwrap();
        let b = generate_load(&spec).unwrap();
        assert_eq!(a, b);
        let other = generate_load(&LoadProfileSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a.samples, other.samples);
    }

    #[test]
    fn samples_never_negative() {
        let spec = LoadProfileSpec {
            baseline_power: 0.5,
            noise_std: 3.0,
            ..LoadProfileSpec::default()
        };
        let trace = generate_load(&spec).unwrap();
        assert!(trace.samples.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn delta_arithmetic() {
        let trace = LoadTrace {
            t0: 0.0,
            dt: 0.01,
            samples: vec![30.0, 40.0],
        };
        let d = delta_signal(&trace, 30.0);
        assert_eq!(d.samples, vec![0.0, 10.0]);
        assert_eq!(d.reference_power, 30.0);

        let flat = LoadTrace {
            t0: 0.0,
            dt: 0.01,
            samples: vec![20.0; 5],
        };
        assert!(delta_signal(&flat, 20.0).samples.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn invalid_specs_name_the_field() {
        let cases: Vec<(LoadProfileSpec, &str)> = vec![
            (
                LoadProfileSpec {
                    peak_power: 10.0,
                    ..Default::default()
                },
                "load.peak_power",
            ),
            (
                LoadProfileSpec {
                    sub_freq: 0.01,
                    ..Default::default()
                },
                "load.sub_freq",
            ),
            (
                LoadProfileSpec {
                    sample_interval: 0.0,
                    ..Default::default()
                },
                "load.sample_interval",
            ),
            (
                LoadProfileSpec {
                    schedule: vec![PhaseSpan::active(0.0)],
                    ..Default::default()
                },
                "load.schedule",
            ),
        ];
        for (spec, field) in cases {
            let err = generate_load(&spec).unwrap_err().to_string();
            assert!(err.contains(field), "{err} should name {field}");
        }
    }

    #[test]
    fn phase_lookup() {
        let spec = LoadProfileSpec::default();
        assert_eq!(spec.phase_at(0.0), Phase::Idle);
        assert_eq!(spec.phase_at(100.0), Phase::Active);
        assert_eq!(spec.phase_at(599.0), Phase::Idle);
        assert_eq!(spec.phase_at(1e6), Phase::Idle);
    }
}
