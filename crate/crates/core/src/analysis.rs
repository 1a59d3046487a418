//! Spectral estimates, Bode evaluation and run-level metrics.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::engine::RunResult;
use crate::error::{Error, Result};
use crate::tf::{ContinuousTf, DiscreteTf};

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdResult {
    pub freqs: Vec<f64>,
    /// Units² per Hz.
    pub density: Vec<f64>,
    pub segment_length: usize,
    pub window: &'static str,
}

impl PsdResult {
    pub fn resolution(&self) -> f64 {
        self.freqs.get(1).copied().unwrap_or(0.0)
    }

    /// Integral of the density over bins with `lo <= f < hi` (rectangle rule).
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        let df = self.resolution();
        self.freqs
            .iter()
            .zip(&self.density)
            .filter(|(f, _)| **f >= lo && **f < hi)
            .map(|(_, d)| d * df)
            .sum()
    }

    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.resolution()
    }

    /// Indices of strict local maxima, strongest first. DC is excluded.
    pub fn peaks(&self) -> Vec<usize> {
        let d = &self.density;
        let mut idx: Vec<usize> = (1..d.len().saturating_sub(1))
            .filter(|&i| d[i] > d[i - 1] && d[i] > d[i + 1])
            .collect();
        idx.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
        idx
    }
}

/// Periodic Hann window.
fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Default Welch segment length: `min(4096, n / 4)`.
pub fn default_segment_length(n: usize) -> usize {
    (n / 4).min(4096)
}

/// Welch estimate: Hann-windowed segments, averaged periodograms, one-sided
/// and density-scaled. Segments are not detrended.
pub fn psd_welch(
    samples: &[f64],
    dt: f64,
    segment_length: usize,
    overlap: f64,
) -> Result<PsdResult> {
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::Input(format!(
            "overlap must lie in [0, 1), got {overlap}"
        )));
    }
    if segment_length < 2 {
        return Err(Error::Input("segment length must be at least 2".into()));
    }
    if samples.len() < segment_length {
        return Err(Error::Input(format!(
            "signal of {} samples is shorter than one {segment_length}-sample segment",
            samples.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::Input("sample interval must be > 0".into()));
    }

    let n = segment_length;
    let hop = ((n as f64 * (1.0 - overlap)).round() as usize).max(1);
    let window = hann(n);
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let fs = 1.0 / dt;

    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let bins = n / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut segments = 0usize;
    let mut start = 0;
    while start + n <= samples.len() {
        for (slot, (x, w)) in buf
            .iter_mut()
            .zip(samples[start..start + n].iter().zip(&window))
        {
            *slot = Complex64::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, c) in acc.iter_mut().zip(&buf[..bins]) {
            *a += c.norm_sqr();
        }
        segments += 1;
        start += hop;
    }

    let scale = 1.0 / (fs * window_power * segments as f64);
    let density = acc
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let one_sided = if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                1.0
            } else {
                2.0
            };
            p * scale * one_sided
        })
        .collect();
    let freqs = (0..bins).map(|k| k as f64 * fs / n as f64).collect();

    Ok(PsdResult {
        freqs,
        density,
        segment_length: n,
        window: "hann",
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodeResult {
    pub freqs: Vec<f64>,
    pub magnitude_db: Vec<f64>,
    /// Unwrapped.
    pub phase_deg: Vec<f64>,
}

impl BodeResult {
    /// Indices of strict local magnitude maxima.
    pub fn local_maxima(&self) -> Vec<usize> {
        let m = &self.magnitude_db;
        (1..m.len().saturating_sub(1))
            .filter(|&i| m[i] > m[i - 1] && m[i] > m[i + 1])
            .collect()
    }

    /// Magnitude at the grid point nearest `f` (log distance).
    pub fn magnitude_near(&self, f: f64) -> f64 {
        let i = self
            .freqs
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1.ln() - f.ln())
                    .abs()
                    .total_cmp(&(b.1.ln() - f.ln()).abs())
            })
            .map(|(i, _)| i)
            .expect("non-empty grid");
        self.magnitude_db[i]
    }
}

/// `points_per_decade` log-spaced frequencies from `f_min` to `f_max`
/// inclusive.
pub fn log_grid(f_min: f64, f_max: f64, points_per_decade: usize) -> Vec<f64> {
    let decades = (f_max / f_min).log10();
    let n = (decades * points_per_decade as f64).round() as usize;
    (0..=n)
        .map(|i| f_min * 10f64.powf(i as f64 / points_per_decade as f64))
        .collect()
}

fn unwrap_degrees(raw: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(raw.len());
    let mut offset = 0.0;
    for (i, &p) in raw.iter().enumerate() {
        if i > 0 {
            let prev = raw[i - 1];
            let jump = p - prev;
            if jump > 180.0 {
                offset -= 360.0;
            } else if jump < -180.0 {
                offset += 360.0;
            }
        }
        out.push(p + offset);
    }
    out
}

fn check_grid(freqs: &[f64]) -> Result<()> {
    if freqs.is_empty() || freqs.iter().any(|f| !(*f > 0.0)) {
        return Err(Error::Input("Bode frequencies must be positive".into()));
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input(
            "Bode frequencies must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn bode_from(freqs: &[f64], response: Vec<Complex64>) -> BodeResult {
    let magnitude_db = response.iter().map(|h| 20.0 * h.norm().log10()).collect();
    let raw: Vec<f64> = response.iter().map(|h| h.arg().to_degrees()).collect();
    BodeResult {
        freqs: freqs.to_vec(),
        magnitude_db,
        phase_deg: unwrap_degrees(&raw),
    }
}

/// Evaluates a continuous-time transfer function at `s = j 2π f`.
pub fn bode_eval(tf: &ContinuousTf, freqs: &[f64]) -> Result<BodeResult> {
    check_grid(freqs)?;
    let response = freqs
        .iter()
        .map(|&f| {
            tf.freq_response(f)
                .filter(|h| h.is_finite())
                .ok_or_else(|| Error::Input(format!("transfer function has a pole at {f} Hz")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(bode_from(freqs, response))
}

/// Evaluates a discrete realization on the unit circle.
pub fn bode_eval_discrete(tf: &DiscreteTf, dt: f64, freqs: &[f64]) -> Result<BodeResult> {
    check_grid(freqs)?;
    let response = freqs
        .iter()
        .map(|&f| {
            let h = tf.freq_response(f, dt);
            if h.is_finite() {
                Ok(h)
            } else {
                Err(Error::Input(format!(
                    "discrete filter has a pole at {f} Hz"
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(bode_from(freqs, response))
}

/// Summary statistics of one simulation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMetrics {
    /// Hz.
    pub freq_dev_max: f64,
    /// Hz.
    pub freq_dev_rms: f64,
    /// MW.
    pub grid_power_std: f64,
    /// Peak-to-peak SoC, fraction of capacity.
    pub soc_excursion_ess: f64,
    pub soc_excursion_sc: f64,
    /// Lag of SC output behind its reference at peak cross-correlation, ms.
    pub ramp_lag_ms: f64,
}

impl RunMetrics {
    pub const COLUMNS: [&'static str; 6] = [
        "freq_dev_max_hz",
        "freq_dev_rms_hz",
        "grid_power_std_mw",
        "soc_excursion_ess",
        "soc_excursion_sc",
        "ramp_lag_ms",
    ];

    pub fn values(&self) -> [f64; 6] {
        [
            self.freq_dev_max,
            self.freq_dev_rms,
            self.grid_power_std,
            self.soc_excursion_ess,
            self.soc_excursion_sc,
            self.ramp_lag_ms,
        ]
    }
}

/// Largest lag searched by the tracking-lag estimate, s.
const MAX_LAG_S: f64 = 1.0;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

fn peak_to_peak(x: &[f64]) -> f64 {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    hi - lo
}

/// Non-negative lag (samples) maximizing the cross-correlation of `output`
/// against `reference`.
pub fn xcorr_lag(reference: &[f64], output: &[f64], max_lag: usize) -> usize {
    let n = reference.len().min(output.len());
    if n == 0 {
        return 0;
    }
    let mr = mean(&reference[..n]);
    let mo = mean(&output[..n]);
    let mut best = (0usize, f64::NEG_INFINITY);
    for lag in 0..=max_lag.min(n - 1) {
        let c: f64 = (0..n - lag)
            .map(|k| (reference[k] - mr) * (output[k + lag] - mo))
            .sum();
        if c > best.1 {
            best = (lag, c);
        }
    }
    best.0
}

pub fn compute_metrics(run: &RunResult) -> Result<RunMetrics> {
    run.validate()?;
    if run.is_empty() {
        return Err(Error::Input("run has no samples".into()));
    }
    let nominal = run.nominal_freq;
    let dev: Vec<f64> = run.freq_hz.iter().map(|f| (f - nominal).abs()).collect();
    let freq_dev_max = dev.iter().cloned().fold(0.0, f64::max);
    let freq_dev_rms = (dev.iter().map(|d| d * d).sum::<f64>() / dev.len() as f64).sqrt();

    let dt = run.dt();
    let max_lag = if dt > 0.0 {
        (MAX_LAG_S / dt).round() as usize
    } else {
        0
    };
    let lag = xcorr_lag(&run.p_sc_ref, &run.p_sc, max_lag);

    Ok(RunMetrics {
        freq_dev_max,
        freq_dev_rms,
        grid_power_std: std_dev(&run.p_grid),
        soc_excursion_ess: peak_to_peak(&run.soc_ess),
        soc_excursion_sc: peak_to_peak(&run.soc_sc),
        ramp_lag_ms: lag as f64 * dt * 1000.0,
    })
}
