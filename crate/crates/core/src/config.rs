//! Sectioned key-value scenario files.
//!
//! ```text
//! # comment
//! [bess]
//! capacity = 2000
//! [load]
//! schedule = idle:45, active:420, idle:135
//! ```
//!
//! Missing keys keep their defaults. A few defaults follow other keys unless
//! set explicitly: `load.sample_interval` and `kf.dt` follow `sim.dt`,
//! `sim.duration` follows the schedule length, the controller plant time
//! constants follow `bess.tau` / `sc.tau`, each `ff_scale` follows its plant
//! time constant, and `sc_controller.hpf_cutoff` follows `command.hpf_cutoff`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::control::RcForm;
use crate::engine::{SimConfig, SocManagerMode};
use crate::error::{Error, Result};
use crate::estimation::JerkSource;
use crate::signals::{Phase, PhaseSpan};

pub const SECTIONS: [&str; 11] = [
    "sim",
    "toggles",
    "load",
    "grid",
    "bess",
    "sc",
    "kf",
    "weights",
    "command",
    "sc_controller",
    "ess_controller",
];

pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, path)
}

/// Parses `text`; `origin` is only used in error messages.
pub fn parse_config(text: &str, origin: impl AsRef<Path>) -> Result<SimConfig> {
    let origin = origin.as_ref().to_path_buf();
    let parse_err = |line: usize, key: &str, reason: String| Error::Parse {
        path: origin.clone(),
        line,
        key: key.to_string(),
        reason,
    };

    let mut config = SimConfig::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut section: Option<String> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line_no, line, "unterminated section header".into()))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(parse_err(line_no, name, "unknown section".into()));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| parse_err(line_no, line, "expected `key = value`".into()))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section
            .as_deref()
            .ok_or_else(|| parse_err(line_no, key, "key outside any section".into()))?;
        let full = format!("{sec}.{key}");
        if let Some(prev) = seen.get(&full) {
            return Err(parse_err(
                line_no,
                &full,
                format!("already set on line {prev}"),
            ));
        }
        apply(&mut config, sec, key, value).map_err(|reason| parse_err(line_no, &full, reason))?;
        seen.insert(full, line_no);
    }

    let set = |k: &str| seen.contains_key(k);
    if !set("load.sample_interval") {
        config.load.sample_interval = config.dt;
    }
    if !set("kf.dt") {
        config.kf.dt = config.dt;
    }
    if !set("sim.duration") {
        config.duration = config.load.total_duration();
    }
    if !set("sc_controller.hpf_cutoff") {
        config.sc_controller.hpf_cutoff = config.command.hpf_cutoff;
    }
    if !set("sc_controller.tau_sc") {
        config.sc_controller.tau_sc = config.sc.tau;
    }
    if !set("sc_controller.ff_scale") {
        config.sc_controller.ff_scale = config.sc_controller.tau_sc;
    }
    if !set("ess_controller.tau_ess") {
        config.ess_controller.tau_ess = config.bess.tau;
    }
    if !set("ess_controller.ff_scale") {
        config.ess_controller.ff_scale = config.ess_controller.tau_ess;
    }

    config.validate().map_err(|e| match e {
        Error::Config { field, reason } => match locate(&seen, &field) {
            Some((key, line)) => Error::Parse {
                path: origin.clone(),
                line,
                key,
                reason,
            },
            None => Error::Config { field, reason },
        },
        other => other,
    })?;
    Ok(config)
}

/// Finds the line that set `field`, or a key it was derived from.
fn locate(seen: &HashMap<String, usize>, field: &str) -> Option<(String, usize)> {
    let aliases: &[&str] = match field {
        "kf.process_noise" => &["kf.q_level", "kf.q_ramp", "kf.q_cross"],
        "sc_controller.pd" => &["sc_controller.kd", "sc_controller.fd"],
        "sc_controller.ff" => &["sc_controller.fd", "sc_controller.ff_scale"],
        "ess_controller.ff" => &["ess_controller.fd", "ess_controller.ff_scale"],
        _ => &[],
    };
    std::iter::once(field)
        .chain(aliases.iter().copied())
        .find_map(|k| seen.get(k).map(|&line| (k.to_string(), line)))
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(i) => &line[..i],
        None => line,
    }
}

fn num(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = v
        .parse()
        .map_err(|_| format!("expected a number, got `{v}`"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a finite number, got `{v}`"))
    }
}

fn int(v: &str) -> std::result::Result<u64, String> {
    v.parse()
        .map_err(|_| format!("expected a non-negative integer, got `{v}`"))
}

fn flag(v: &str) -> std::result::Result<bool, String> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, got `{v}`")),
    }
}

/// `idle:45, active:420, idle:135`
pub fn parse_schedule(v: &str) -> std::result::Result<Vec<PhaseSpan>, String> {
    v.split(',')
        .map(|item| {
            let (phase, dur) = item
                .split_once(':')
                .ok_or_else(|| format!("expected `phase:seconds`, got `{}`", item.trim()))?;
            let duration = num(dur.trim())?;
            let phase = match phase.trim() {
                "idle" => Phase::Idle,
                "active" => Phase::Active,
                other => return Err(format!("unknown phase `{other}`")),
            };
            Ok(PhaseSpan { phase, duration })
        })
        .collect()
}

pub fn format_schedule(schedule: &[PhaseSpan]) -> String {
    schedule
        .iter()
        .map(|s| {
            let name = match s.phase {
                Phase::Idle => "idle",
                Phase::Active => "active",
            };
            format!("{name}:{}", s.duration)
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn apply(c: &mut SimConfig, section: &str, key: &str, v: &str) -> std::result::Result<(), String> {
    match (section, key) {
        ("sim", "dt") => c.dt = num(v)?,
        ("sim", "duration") => c.duration = num(v)?,
        ("sim", "reference_power") => c.reference_power = num(v)?,
        ("sim", "sensor_noise_std") => c.sensor_noise_std = num(v)?,
        ("sim", "sensor_seed") => c.sensor_seed = int(v)?,

        ("toggles", "hess_enabled") => c.toggles.hess_enabled = flag(v)?,
        ("toggles", "soc_manager_enabled") => c.toggles.soc_manager_enabled = flag(v)?,
        ("toggles", "baseline_correction_enabled") => {
            c.toggles.baseline_correction_enabled = flag(v)?
        }
        ("toggles", "ramp_term_enabled") => c.toggles.ramp_term_enabled = flag(v)?,

        ("load", "baseline_power") => c.load.baseline_power = num(v)?,
        ("load", "peak_power") => c.load.peak_power = num(v)?,
        ("load", "dominant_freq") => c.load.dominant_freq = num(v)?,
        ("load", "sub_freq") => c.load.sub_freq = num(v)?,
        ("load", "dominant_amplitude") => c.load.dominant_amplitude = num(v)?,
        ("load", "sub_amplitude") => c.load.sub_amplitude = num(v)?,
        ("load", "noise_std") => c.load.noise_std = num(v)?,
        ("load", "ramp_duration") => c.load.ramp_duration = num(v)?,
        ("load", "schedule") => c.load.schedule = parse_schedule(v)?,
        ("load", "sample_interval") => c.load.sample_interval = num(v)?,
        ("load", "seed") => c.load.seed = int(v)?,

        ("grid", "inertia_h") => c.grid.inertia_h = num(v)?,
        ("grid", "damping_d") => c.grid.damping_d = num(v)?,
        ("grid", "droop_r") => c.grid.droop_r = num(v)?,
        ("grid", "governor_tg") => c.grid.governor_tg = num(v)?,
        ("grid", "base_power") => c.grid.base_power = num(v)?,
        ("grid", "nominal_freq") => c.grid.nominal_freq = num(v)?,

        ("bess" | "sc", _) => {
            let d = if section == "bess" {
                &mut c.bess
            } else {
                &mut c.sc
            };
            match key {
                "p_max" => d.p_max = num(v)?,
                "ramp_max" => d.ramp_max = num(v)?,
                "tau" => d.tau = num(v)?,
                "efficiency" => d.efficiency = num(v)?,
                "capacity" => d.capacity = num(v)?,
                "soc_min" => d.soc_min = num(v)?,
                "soc_max" => d.soc_max = num(v)?,
                "soc_target" => d.soc_target = num(v)?,
                _ => return Err("unknown key".into()),
            }
        }

        ("kf", "phi") => c.kf.phi = num(v)?,
        ("kf", "q_level") => c.kf.process_noise[(0, 0)] = num(v)?,
        ("kf", "q_ramp") => c.kf.process_noise[(1, 1)] = num(v)?,
        ("kf", "q_cross") => {
            let x = num(v)?;
            c.kf.process_noise[(0, 1)] = x;
            c.kf.process_noise[(1, 0)] = x;
        }
        ("kf", "meas_noise") => c.kf.meas_noise = num(v)?,
        ("kf", "dt") => c.kf.dt = num(v)?,

        ("weights", "s_ref") => c.weights.s_ref = num(v)?,
        ("weights", "a_ref") => c.weights.a_ref = num(v)?,
        ("weights", "threshold_shift") => c.weights.threshold_shift = flag(v)?,
        ("weights", "jerk_source") => {
            c.weights.jerk_source = match v {
                "ramp_magnitude" => JerkSource::RampMagnitude,
                "filtered_jerk" => JerkSource::FilteredJerk,
                _ => {
                    return Err(format!(
                        "expected ramp_magnitude or filtered_jerk, got `{v}`"
                    ))
                }
            }
        }
        ("weights", "jerk_cutoff") => c.weights.jerk_cutoff = num(v)?,

        ("command", "hpf_cutoff") => c.command.hpf_cutoff = num(v)?,
        ("command", "t_eff") => c.command.t_eff = num(v)?,
        ("command", "ess_kq") => c.command.ess_bias.gain_kq = num(v)?,
        ("command", "ess_tq") => c.command.ess_bias.time_const_tq = num(v)?,
        ("command", "ess_deadband") => c.command.ess_bias.deadband = num(v)?,
        ("command", "sc_kq") => c.command.sc_bias.gain_kq = num(v)?,
        ("command", "sc_tq") => c.command.sc_bias.time_const_tq = num(v)?,
        ("command", "sc_deadband") => c.command.sc_bias.deadband = num(v)?,
        ("command", "soc_manager_mode") => {
            c.command.soc_manager_mode = match v {
                "idle" => SocManagerMode::IdleOnly,
                "continuous" => SocManagerMode::Continuous,
                _ => return Err(format!("expected idle or continuous, got `{v}`")),
            }
        }
        ("command", "baseline_window") => c.command.baseline_window = num(v)?,

        ("sc_controller", "kp") => c.sc_controller.kp = num(v)?,
        ("sc_controller", "kd") => c.sc_controller.kd = num(v)?,
        ("sc_controller", "fd") => c.sc_controller.fd = num(v)?,
        ("sc_controller", "k_rk") => c.sc_controller.k_rk = num(v)?,
        ("sc_controller", "tau_sc") => c.sc_controller.tau_sc = num(v)?,
        ("sc_controller", "hpf_cutoff") => c.sc_controller.hpf_cutoff = num(v)?,
        ("sc_controller", "ff_scale") => c.sc_controller.ff_scale = num(v)?,
        ("sc_controller", "hpf_shaping") => c.sc_controller.hpf_shaping = flag(v)?,
        ("sc_controller", "feedforward") => c.sc_controller.feedforward = flag(v)?,
        ("sc_controller", "ramp_tracking") => c.sc_controller.ramp_tracking = flag(v)?,

        ("ess_controller", "ki") => c.ess_controller.ki = num(v)?,
        ("ess_controller", "t_leak") => c.ess_controller.t_leak = num(v)?,
        ("ess_controller", "k_rc") => c.ess_controller.k_rc = num(v)?,
        ("ess_controller", "omega_rc") => c.ess_controller.omega_rc = num(v)?,
        ("ess_controller", "rc_damping") => c.ess_controller.rc_damping = num(v)?,
        ("ess_controller", "rc_form") => {
            c.ess_controller.rc_form = match v {
                "resonant" => RcForm::Resonant,
                "low_pass" => RcForm::LowPass,
                _ => return Err(format!("expected resonant or low_pass, got `{v}`")),
            }
        }
        ("ess_controller", "tau_ess") => c.ess_controller.tau_ess = num(v)?,
        ("ess_controller", "fd") => c.ess_controller.fd = num(v)?,
        ("ess_controller", "ff_scale") => c.ess_controller.ff_scale = num(v)?,
        ("ess_controller", "feedforward") => c.ess_controller.feedforward = flag(v)?,
        ("ess_controller", "repetitive") => c.ess_controller.repetitive = flag(v)?,

        _ => return Err("unknown key".into()),
    }
    Ok(())
}

/// Writes every field of `config` in the format read by [`parse_config`].
pub fn render_config(c: &SimConfig) -> String {
    let b = |x: bool| if x { "true" } else { "false" };
    let dev = |name: &str, d: &crate::plant::DeviceParams| {
        format!(
            "[{name}]\np_max = {}\nramp_max = {}\ntau = {}\nefficiency = {}\ncapacity = {}\n\
             soc_min = {}\nsoc_max = {}\nsoc_target = {}\n",
            d.p_max,
            d.ramp_max,
            d.tau,
            d.efficiency,
            d.capacity,
            d.soc_min,
            d.soc_max,
            d.soc_target
        )
    };
    let q = &c.kf.process_noise;
    let mut out = String::new();
    out += &format!(
        "[sim]\ndt = {}\nduration = {}\nreference_power = {}\nsensor_noise_std = {}\nsensor_seed = {}\n\n",
        c.dt, c.duration, c.reference_power, c.sensor_noise_std, c.sensor_seed
    );
    out += &format!(
        "[toggles]\nhess_enabled = {}\nsoc_manager_enabled = {}\nbaseline_correction_enabled = {}\nramp_term_enabled = {}\n\n",
        b(c.toggles.hess_enabled),
        b(c.toggles.soc_manager_enabled),
        b(c.toggles.baseline_correction_enabled),
        b(c.toggles.ramp_term_enabled)
    );
    let l = &c.load;
    out += &format!(
        "[load]\nbaseline_power = {}\npeak_power = {}\ndominant_freq = {}\nsub_freq = {}\n\
         dominant_amplitude = {}\nsub_amplitude = {}\nnoise_std = {}\nramp_duration = {}\n\
         schedule = {}\nsample_interval = {}\nseed = {}\n\n",
        l.baseline_power,
        l.peak_power,
        l.dominant_freq,
        l.sub_freq,
        l.dominant_amplitude,
        l.sub_amplitude,
        l.noise_std,
        l.ramp_duration,
        format_schedule(&l.schedule),
        l.sample_interval,
        l.seed
    );
    let g = &c.grid;
    out += &format!(
        "[grid]\ninertia_h = {}\ndamping_d = {}\ndroop_r = {}\ngovernor_tg = {}\nbase_power = {}\nnominal_freq = {}\n\n",
        g.inertia_h, g.damping_d, g.droop_r, g.governor_tg, g.base_power, g.nominal_freq
    );
    out += &dev("bess", &c.bess);
    out += "\n";
    out += &dev("sc", &c.sc);
    out += "\n";
    out += &format!(
        "[kf]\nphi = {}\nq_level = {}\nq_ramp = {}\nq_cross = {}\nmeas_noise = {}\ndt = {}\n\n",
        c.kf.phi,
        q[(0, 0)],
        q[(1, 1)],
        q[(0, 1)],
        c.kf.meas_noise,
        c.kf.dt
    );
    let w = &c.weights;
    out += &format!(
        "[weights]\ns_ref = {}\na_ref = {}\nthreshold_shift = {}\njerk_source = {}\njerk_cutoff = {}\n\n",
        w.s_ref,
        w.a_ref,
        b(w.threshold_shift),
        match w.jerk_source {
            JerkSource::RampMagnitude => "ramp_magnitude",
            JerkSource::FilteredJerk => "filtered_jerk",
        },
        w.jerk_cutoff
    );
    let m = &c.command;
    out += &format!(
        "[command]\nhpf_cutoff = {}\nt_eff = {}\ness_kq = {}\ness_tq = {}\ness_deadband = {}\n\
         sc_kq = {}\nsc_tq = {}\nsc_deadband = {}\nsoc_manager_mode = {}\nbaseline_window = {}\n\n",
        m.hpf_cutoff,
        m.t_eff,
        m.ess_bias.gain_kq,
        m.ess_bias.time_const_tq,
        m.ess_bias.deadband,
        m.sc_bias.gain_kq,
        m.sc_bias.time_const_tq,
        m.sc_bias.deadband,
        match m.soc_manager_mode {
            SocManagerMode::IdleOnly => "idle",
            SocManagerMode::Continuous => "continuous",
        },
        m.baseline_window
    );
    let s = &c.sc_controller;
    out += &format!(
        "[sc_controller]\nkp = {}\nkd = {}\nfd = {}\nk_rk = {}\ntau_sc = {}\nhpf_cutoff = {}\nff_scale = {}\n\
         hpf_shaping = {}\nfeedforward = {}\nramp_tracking = {}\n\n",
        s.kp,
        s.kd,
        s.fd,
        s.k_rk,
        s.tau_sc,
        s.hpf_cutoff,
        s.ff_scale,
        b(s.hpf_shaping),
        b(s.feedforward),
        b(s.ramp_tracking)
    );
    let e = &c.ess_controller;
    out += &format!(
        "[ess_controller]\nki = {}\nt_leak = {}\nk_rc = {}\nomega_rc = {}\nrc_damping = {}\nrc_form = {}\n\
         tau_ess = {}\nfd = {}\nff_scale = {}\nfeedforward = {}\nrepetitive = {}\n",
        e.ki,
        e.t_leak,
        e.k_rc,
        e.omega_rc,
        e.rc_damping,
        match e.rc_form {
            RcForm::Resonant => "resonant",
            RcForm::LowPass => "low_pass",
        },
        e.tau_ess,
        e.fd,
        e.ff_scale,
        b(e.feedforward),
        b(e.repetitive)
    );
    out
}

/// Path-free wrapper for error messages when parsing in-memory text.
pub fn parse_str(text: &str) -> Result<SimConfig> {
    parse_config(text, PathBuf::from("<string>"))
}
