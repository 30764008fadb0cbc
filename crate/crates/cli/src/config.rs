//! Run configuration: a flat TOML document whose every key can be overridden
//! by an environment variable `AACG_<KEY>` and then by a `--<key>` flag.

use std::fmt;
use std::path::PathBuf;

use aacg_core::poincare::BoaOptions;
use aacg_core::sweep::SweepError;
use aacg_core::{GridAxis, IntegratorConfig, LiftoffPoint, ModelParams, ParamError, SweepSpec};
use serde::{Deserialize, Serialize};

pub const ENV_PREFIX: &str = "AACG_";

/// Every configuration key, in documentation order.
pub const KEYS: &[&str] = &[
    "body_mass",
    "leg_length",
    "gravity",
    "com_offset",
    "stiffness",
    "precompression",
    "trigger_angle",
    "rel_tol",
    "abs_tol",
    "max_step",
    "event_time_tol",
    "max_stride_time",
    "r0_min",
    "r0_max",
    "r0_count",
    "theta_trig_min",
    "theta_trig_max",
    "theta_trig_count",
    "k_values",
    "periods",
    "refine_passes",
    "boa",
    "boa_max_strides",
    "boa_tol",
    "boa_resolution",
    "strides",
    "q_dthetas",
    "q_thetan",
    "q_dthetan",
    "from_fixed_point",
    "impulse_min",
    "impulse_max",
    "impulse_count",
    "overlay_results",
    "out",
    "svg",
    "jobs",
    "svg_speed_min",
    "svg_speed_max",
    "svg_mcot_min",
    "svg_mcot_max",
    "svg_boa_max",
];

/// Keys that act as switches: `--svg` alone means `--svg true`.
pub const SWITCHES: &[&str] = &["boa", "from_fixed_point", "svg"];

const LIST_KEYS: &[&str] = &["k_values", "periods"];
const STRING_KEYS: &[&str] = &["overlay_results", "out"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub body_mass: f64,
    pub leg_length: f64,
    pub gravity: f64,
    pub com_offset: f64,
    pub stiffness: f64,
    pub precompression: f64,
    pub trigger_angle: f64,

    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub event_time_tol: f64,
    pub max_stride_time: f64,

    pub r0_min: f64,
    pub r0_max: f64,
    pub r0_count: usize,
    pub theta_trig_min: f64,
    pub theta_trig_max: f64,
    pub theta_trig_count: usize,
    pub k_values: Vec<f64>,
    pub periods: Vec<usize>,
    pub refine_passes: usize,
    pub boa: bool,
    pub boa_max_strides: usize,
    pub boa_tol: f64,
    pub boa_resolution: f64,

    pub strides: usize,
    pub q_dthetas: f64,
    pub q_thetan: f64,
    pub q_dthetan: f64,
    pub from_fixed_point: bool,

    pub impulse_min: f64,
    pub impulse_max: f64,
    pub impulse_count: usize,
    /// A `results.csv` whose stable cells are drawn over the baseline figure.
    pub overlay_results: String,

    pub out: PathBuf,
    pub svg: bool,
    /// Worker threads; 0 picks one per core.
    pub jobs: usize,

    pub svg_speed_min: f64,
    pub svg_speed_max: f64,
    pub svg_mcot_min: f64,
    pub svg_mcot_max: f64,
    pub svg_boa_max: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = ModelParams::default();
        let i = IntegratorConfig::default();
        let s = SweepSpec::default();
        let b = BoaOptions::default();
        Self {
            body_mass: m.body_mass,
            leg_length: m.leg_length,
            gravity: m.gravity,
            com_offset: m.com_offset,
            stiffness: m.stiffness,
            precompression: m.precompression,
            trigger_angle: m.trigger_angle,
            rel_tol: i.rel_tol,
            abs_tol: i.abs_tol,
            max_step: i.max_step,
            event_time_tol: i.event_time_tol,
            max_stride_time: i.max_stride_time,
            r0_min: s.r0.min,
            r0_max: s.r0.max,
            r0_count: s.r0.count,
            theta_trig_min: s.theta_trig.min,
            theta_trig_max: s.theta_trig.max,
            theta_trig_count: s.theta_trig.count,
            k_values: s.k_values,
            periods: s.periods,
            refine_passes: s.refine_passes,
            boa: false,
            boa_max_strides: b.max_strides,
            boa_tol: b.tol,
            boa_resolution: b.resolution,
            strides: 10,
            q_dthetas: 0.9,
            q_thetan: 0.45,
            q_dthetan: 0.65,
            from_fixed_point: false,
            impulse_min: 0.05,
            impulse_max: 0.75,
            impulse_count: 15,
            overlay_results: String::new(),
            out: PathBuf::from("out"),
            svg: false,
            jobs: 0,
            svg_speed_min: 0.0,
            svg_speed_max: 1.5,
            svg_mcot_min: 0.0,
            svg_mcot_max: 0.2,
            svg_boa_max: 1.0,
        }
    }
}

/// A configuration problem, always attributed to one key when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    pub fn key(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    pub fn general(message: impl Into<String>) -> Self {
        Self {
            key: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(k) => write!(f, "invalid configuration key `{k}`: {}", self.message),
            None => write!(f, "invalid configuration: {}", self.message),
        }
    }
}

/// Turns a flag or environment string into a TOML value of the key's kind.
fn override_value(key: &str, raw: &str) -> Result<toml::Value, ConfigError> {
    if STRING_KEYS.contains(&key) {
        return Ok(toml::Value::String(raw.to_string()));
    }
    let text = if LIST_KEYS.contains(&key) && !raw.trim_start().starts_with('[') {
        format!("v = [{raw}]")
    } else {
        format!("v = {raw}")
    };
    let mut table: toml::Table =
        toml::from_str(&text).map_err(|_| ConfigError::key(key, format!("cannot parse override value `{raw}`")))?;
    Ok(table.remove("v").expect("single key"))
}

/// Builds the configuration from an optional file and `(key, raw value)`
/// overrides applied in order.
pub fn load(file: Option<&str>, overrides: &[(String, String)]) -> Result<RunConfig, ConfigError> {
    let mut table = match file {
        Some(text) => toml::from_str::<toml::Table>(text).map_err(|e| ConfigError::general(e.to_string()))?,
        None => toml::Table::new(),
    };
    for (key, raw) in overrides {
        table.insert(key.clone(), override_value(key, raw)?);
    }
    for key in table.keys() {
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::key(key, "unknown key"));
        }
    }
    // Re-parse as text so type errors carry the offending line.
    let text = toml::to_string(&table).map_err(|e| ConfigError::general(e.to_string()))?;
    let cfg: RunConfig = toml::from_str(&text).map_err(|e| {
        let key = table
            .keys()
            .find(|k| e.to_string().contains(&format!("{k} =")))
            .cloned();
        ConfigError {
            key,
            message: e.message().to_string(),
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn model(&self) -> ModelParams {
        ModelParams {
            body_mass: self.body_mass,
            leg_mass: 0.0,
            leg_length: self.leg_length,
            stiffness: self.stiffness,
            gravity: self.gravity,
            precompression: self.precompression,
            trigger_angle: self.trigger_angle,
            com_offset: self.com_offset,
        }
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
            event_time_tol: self.event_time_tol,
            max_stride_time: self.max_stride_time,
            ..IntegratorConfig::default()
        }
    }

    pub fn boa_options(&self) -> BoaOptions {
        BoaOptions {
            max_strides: self.boa_max_strides,
            tol: self.boa_tol,
            resolution: self.boa_resolution,
            ..BoaOptions::default()
        }
    }

    pub fn sweep_spec(&self) -> SweepSpec {
        SweepSpec {
            r0: GridAxis::new(self.r0_min, self.r0_max, self.r0_count),
            theta_trig: GridAxis::new(self.theta_trig_min, self.theta_trig_max, self.theta_trig_count),
            k_values: self.k_values.clone(),
            periods: self.periods.clone(),
            integrator: self.integrator(),
            boa_enabled: self.boa,
            boa: self.boa_options(),
            base: self.model(),
            refine_passes: self.refine_passes,
        }
    }

    pub fn start_point(&self) -> LiftoffPoint {
        LiftoffPoint::new(self.q_dthetas, self.q_thetan, self.q_dthetan)
    }

    pub fn impulses(&self) -> Vec<f64> {
        GridAxis::new(self.impulse_min, self.impulse_max, self.impulse_count).values()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite = [
            ("q_dthetas", self.q_dthetas),
            ("q_thetan", self.q_thetan),
            ("q_dthetan", self.q_dthetan),
            ("impulse_min", self.impulse_min),
            ("impulse_max", self.impulse_max),
            ("svg_speed_min", self.svg_speed_min),
            ("svg_speed_max", self.svg_speed_max),
            ("svg_mcot_min", self.svg_mcot_min),
            ("svg_mcot_max", self.svg_mcot_max),
            ("svg_boa_max", self.svg_boa_max),
        ];
        for (k, v) in finite {
            if !v.is_finite() {
                return Err(ConfigError::key(k, "must be finite"));
            }
        }
        let ordered = [
            ("r0_max", self.r0_min, self.r0_max),
            ("theta_trig_max", self.theta_trig_min, self.theta_trig_max),
            ("impulse_max", self.impulse_min, self.impulse_max),
            ("svg_speed_max", self.svg_speed_min, self.svg_speed_max),
            ("svg_mcot_max", self.svg_mcot_min, self.svg_mcot_max),
        ];
        for (k, lo, hi) in ordered {
            if !(lo <= hi) {
                return Err(ConfigError::key(k, format!("must not be below its minimum ({hi} < {lo})")));
            }
        }
        if self.impulse_min < 0.0 {
            return Err(ConfigError::key("impulse_min", "impulses must be non-negative"));
        }
        if !(self.svg_boa_max > 0.0) {
            return Err(ConfigError::key("svg_boa_max", "must be positive"));
        }
        for (k, n) in [("r0_count", self.r0_count), ("theta_trig_count", self.theta_trig_count)] {
            if n == 0 {
                return Err(ConfigError::key(k, "must be at least 1"));
            }
        }
        if self.strides == 0 {
            return Err(ConfigError::key("strides", "must be at least 1"));
        }
        if self.boa_max_strides == 0 {
            return Err(ConfigError::key("boa_max_strides", "must be at least 1"));
        }
        for (k, v) in [("boa_tol", self.boa_tol), ("boa_resolution", self.boa_resolution)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::key(k, "must be positive"));
            }
        }
        if self.k_values.iter().any(|k| !(*k > 0.0 && k.is_finite())) {
            return Err(ConfigError::key("k_values", "stiffness values must be positive"));
        }
        self.model().validate().map_err(param_error)?;
        self.integrator()
            .validate()
            .map_err(|e| match e {
                aacg_core::ConfigError::NonPositive(k) => ConfigError::key(k, "must be positive"),
                aacg_core::ConfigError::EventTolerance => ConfigError::key("event_time_tol", e.to_string()),
            })?;
        self.sweep_spec().validate().map_err(|e| match e {
            SweepError::Axis("r0") => ConfigError::key("r0_max", e.to_string()),
            SweepError::Axis(_) => ConfigError::key("theta_trig_max", e.to_string()),
            SweepError::NoStiffness => ConfigError::key("k_values", e.to_string()),
            SweepError::Periods => ConfigError::key("periods", e.to_string()),
            SweepError::Params(p) => sweep_param_error(p),
            SweepError::Integrator(i) => ConfigError::general(i.to_string()),
        })
    }
}

fn param_error(e: ParamError) -> ConfigError {
    let ParamError::OutOfRange { name, .. } = &e;
    ConfigError::key(name, e.to_string())
}

/// Grid corners are checked through the model; report the grid key.
fn sweep_param_error(e: ParamError) -> ConfigError {
    let ParamError::OutOfRange { name, .. } = &e;
    let key = match *name {
        "precompression" => "r0_max",
        "trigger_angle" => "theta_trig_min",
        "stiffness" => "k_values",
        other => other,
    };
    ConfigError::key(key, e.to_string())
}
