//! Run configuration: TOML file, `--set key=value` overrides, then flags.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use atris_core::experiments::{McRanges, StudyKind, SystemParams};
use atris_core::tris::{parse_strategies, Strategy};
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// Dotted key the error refers to, empty for file-level errors.
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        ConfigError {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.key.is_empty() {
            write!(f, "config: {}", self.message)
        } else {
            write!(f, "config key '{}': {}", self.key, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

pub fn parse_study(name: &str) -> Option<StudyKind> {
    [
        StudyKind::Angular,
        StudyKind::Distance,
        StudyKind::PowerAlloc,
        StudyKind::Scalability,
        StudyKind::Single,
    ]
    .into_iter()
    .find(|k| k.name().eq_ignore_ascii_case(name.trim()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub study: StudyKind,
    pub strategies: Vec<Strategy>,
    pub out: PathBuf,
    pub verbose: bool,
    pub params: SystemParams,
    /// User distance for the angular and single studies.
    pub d: f64,
    /// Separation for the distance and single studies.
    pub delta_phi: f64,
    /// Number of users in the single study.
    pub k: usize,
    pub delta_phis: Vec<f64>,
    pub distances: Vec<f64>,
    pub power_alloc_delta_phis: Vec<f64>,
    pub k_values: Vec<usize>,
    pub trials: usize,
    pub mc: McRanges,
    /// Write the surface phase program of diagonal strategies (single study).
    pub export_surface: bool,
    /// Write binary dumps of the feeder and user channels (single study).
    pub export_channels: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            study: StudyKind::Angular,
            strategies: Strategy::ALL.to_vec(),
            out: PathBuf::from("out"),
            verbose: false,
            params: SystemParams::default(),
            d: 10.0,
            delta_phi: 30.0,
            k: 2,
            delta_phis: (0..=6).map(|i| 10.0 * i as f64).collect(),
            distances: (1..=8).map(|i| 5.0 * i as f64).collect(),
            power_alloc_delta_phis: vec![0.0, 30.0],
            k_values: (2..=16).collect(),
            trials: 1000,
            mc: McRanges::default(),
            export_surface: false,
            export_channels: false,
        }
    }
}

/// Every accepted key, in the order they are documented.
pub const KEYS: &[&str] = &[
    "study",
    "strategy",
    "out",
    "verbose",
    "seed",
    "link.carrier_hz",
    "link.bandwidth_hz",
    "link.total_power_w",
    "link.noise_psd_dbm_hz",
    "link.delta_tx",
    "amaf.rows",
    "amaf.cols",
    "tris.rows",
    "tris.cols",
    "tris.feed_offset_wavelengths",
    "array.spacing_wavelengths",
    "sweep.d",
    "sweep.delta_phi",
    "sweep.delta_phis",
    "sweep.distances",
    "power_alloc.delta_phis",
    "single.k",
    "mc.k_values",
    "mc.trials",
    "mc.distance_range",
    "mc.azimuth_range",
    "export.surface",
    "export.channels",
];

impl RunConfig {
    /// Applies a TOML document on top of the current values.
    pub fn apply_toml(&mut self, text: &str) -> Result<(), ConfigError> {
        let table: Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::new("", e.message().to_string()))?;
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        for (key, value) in flat {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        self.apply_toml(&text)
    }

    /// `key=value` with a TOML value; bare words are taken as strings.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::new(assignment.trim(), "expected key=value"))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = match format!("v = {raw}").parse::<Table>() {
            Ok(mut t) => t.remove("v").expect("parsed a single key"),
            Err(_) => Value::String(raw.to_string()),
        };
        self.set(key, &value)
    }

    pub fn set(&mut self, key: &str, value: &Value) -> Result<(), ConfigError> {
        let p = &mut self.params;
        match key {
            "study" => {
                let name = string(key, value)?;
                self.study = parse_study(&name).ok_or_else(|| {
                    ConfigError::new(
                        key,
                        format!(
                            "unknown study '{name}', expected angular, distance, power-alloc, scalability or single"
                        ),
                    )
                })?;
            }
            "strategy" => {
                let list = match value {
                    Value::Array(items) => items
                        .iter()
                        .map(|v| string(key, v))
                        .collect::<Result<Vec<_>, _>>()?
                        .join(","),
                    other => string(key, other)?,
                };
                self.strategies = parse_strategies(&list).map_err(|e| ConfigError::new(key, e.to_string()))?;
            }
            "out" => self.out = PathBuf::from(string(key, value)?),
            "verbose" => self.verbose = boolean(key, value)?,
            "seed" => p.seed = unsigned(key, value)?,
            "link.carrier_hz" => p.carrier_hz = positive(key, value)?,
            "link.bandwidth_hz" => p.bandwidth_hz = positive(key, value)?,
            "link.total_power_w" => p.total_power_w = positive(key, value)?,
            "link.noise_psd_dbm_hz" => p.noise_psd_dbm_hz = float(key, value)?,
            "link.delta_tx" => p.delta_tx = positive(key, value)?,
            "amaf.rows" => p.amaf_rows = count(key, value)?,
            "amaf.cols" => p.amaf_cols = count(key, value)?,
            "tris.rows" => p.tris_rows = count(key, value)?,
            "tris.cols" => p.tris_cols = count(key, value)?,
            "tris.feed_offset_wavelengths" => p.feed_offset_wavelengths = positive(key, value)?,
            "array.spacing_wavelengths" => p.spacing_wavelengths = positive(key, value)?,
            "sweep.d" => self.d = positive(key, value)?,
            "sweep.delta_phi" => self.delta_phi = float(key, value)?,
            "sweep.delta_phis" => self.delta_phis = floats(key, value)?,
            "sweep.distances" => {
                self.distances = floats(key, value)?;
                if self.distances.iter().any(|d| *d <= 0.0) {
                    return Err(ConfigError::new(key, "distances must be positive"));
                }
            }
            "power_alloc.delta_phis" => self.power_alloc_delta_phis = floats(key, value)?,
            "single.k" => self.k = count(key, value)?,
            "mc.k_values" => {
                let Value::Array(items) = value else {
                    return Err(type_error(key, "an array of integers", value));
                };
                self.k_values = items.iter().map(|v| count(key, v)).collect::<Result<_, _>>()?;
                if self.k_values.is_empty() {
                    return Err(ConfigError::new(key, "at least one value is required"));
                }
            }
            "mc.trials" => self.trials = count(key, value)?,
            "mc.distance_range" => self.mc.distance_m = interval(key, value)?,
            "mc.azimuth_range" => self.mc.azimuth_deg = interval(key, value)?,
            "export.surface" => self.export_surface = boolean(key, value)?,
            "export.channels" => self.export_channels = boolean(key, value)?,
            _ => return Err(ConfigError::new(key, "unknown key")),
        }
        Ok(())
    }
}

fn flatten(prefix: &str, table: &Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

fn type_error(key: &str, expected: &str, value: &Value) -> ConfigError {
    ConfigError::new(
        key,
        format!("expected {expected}, found {} `{value}`", value.type_str()),
    )
}

fn string(key: &str, value: &Value) -> Result<String, ConfigError> {
    value
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| type_error(key, "a string", value))
}

fn boolean(key: &str, value: &Value) -> Result<bool, ConfigError> {
    value.as_bool().ok_or_else(|| type_error(key, "a boolean", value))
}

fn float(key: &str, value: &Value) -> Result<f64, ConfigError> {
    let v = match value {
        Value::Float(f) => *f,
        Value::Integer(i) => *i as f64,
        other => return Err(type_error(key, "a number", other)),
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(key, format!("must be finite, got {v}")))
    }
}

fn positive(key: &str, value: &Value) -> Result<f64, ConfigError> {
    let v = float(key, value)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::new(key, format!("must be positive, got {v}")))
    }
}

fn unsigned(key: &str, value: &Value) -> Result<u64, ConfigError> {
    match value {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        // TOML integers are signed 64-bit; larger seeds are given as strings.
        Value::String(s) => s
            .trim()
            .parse()
            .map_err(|_| ConfigError::new(key, format!("expected an unsigned 64-bit integer, found \"{s}\""))),
        other => Err(type_error(key, "a non-negative integer", other)),
    }
}

fn count(key: &str, value: &Value) -> Result<usize, ConfigError> {
    match value {
        Value::Integer(i) if *i >= 1 => Ok(*i as usize),
        Value::Integer(i) => Err(ConfigError::new(key, format!("must be at least 1, got {i}"))),
        other => Err(type_error(key, "a positive integer", other)),
    }
}

fn floats(key: &str, value: &Value) -> Result<Vec<f64>, ConfigError> {
    let Value::Array(items) = value else {
        return Err(type_error(key, "an array of numbers", value));
    };
    let v = items.iter().map(|x| float(key, x)).collect::<Result<Vec<_>, _>>()?;
    if v.is_empty() {
        return Err(ConfigError::new(key, "at least one value is required"));
    }
    Ok(v)
}

fn interval(key: &str, value: &Value) -> Result<(f64, f64), ConfigError> {
    match floats(key, value)?.as_slice() {
        &[lo, hi] if lo <= hi => Ok((lo, hi)),
        _ => Err(ConfigError::new(key, "expected [low, high] with low <= high")),
    }
}
