//! Flat `key = value` configuration covering the whole pipeline.
//!
//! Mapping keys use the bare field names (`v_max_x = 1.5`), spring rig keys
//! are dotted per axis (`rig.roll.k_spring = 0.5`), plus `pose.mount_*` and
//! `service.*`. Unknown keys are rejected.

use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::mapping::{day_profile, MappingConfig, MappingError, Profile};
use crate::pose::TrackerMount;
use crate::rig::{Axis, RigError, SpringRigConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("config line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("config key {key}: bad value {value:?}")]
    BadValue { key: String, value: String },
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Rig(#[from] RigError),
    #[error("invalid service parameter: {0}")]
    Service(String),
    #[error("reading {path}: {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceParams {
    /// Control loop and command rate, Hz.
    pub tick_rate: f64,
    /// Input silence after which the watchdog forces a zero command, s.
    pub watchdog_timeout: f64,
}

impl Default for ServiceParams {
    fn default() -> Self {
        Self {
            tick_rate: 50.0,
            watchdog_timeout: 0.5,
        }
    }
}

impl ServiceParams {
    pub fn tick_dt(&self) -> f64 {
        1.0 / self.tick_rate
    }
}

/// Tracker mounting offset as intrinsic Z-Y-X angles, radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MountAngles {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl MountAngles {
    pub fn mount(&self) -> TrackerMount {
        TrackerMount::from_euler_zyx(self.yaw, self.pitch, self.roll)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub mapping: MappingConfig,
    pub rig: SpringRigConfig,
    pub mount: MountAngles,
    pub service: ServiceParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::for_profile(Profile::Day1)
    }
}

const RIG_FIELDS: [&str; 5] = ["n_springs", "k_spring", "damping", "inertia", "stop"];

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
        })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
        }),
    }
}

impl PipelineConfig {
    pub fn for_profile(profile: Profile) -> Self {
        Self {
            mapping: day_profile(profile),
            rig: SpringRigConfig::default(),
            mount: MountAngles::default(),
            service: ServiceParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.mapping.validate()?;
        self.rig.validate()?;
        let s = &self.service;
        if !(s.tick_rate.is_finite() && s.tick_rate >= 20.0) {
            return Err(ConfigError::Service(format!(
                "tick_rate must be >= 20 Hz, got {}",
                s.tick_rate
            )));
        }
        if !(s.watchdog_timeout.is_finite() && s.watchdog_timeout > 0.0) {
            return Err(ConfigError::Service(format!(
                "watchdog_timeout must be > 0, got {}",
                s.watchdog_timeout
            )));
        }
        Ok(())
    }

    /// Every key with its canonical value text, in a fixed order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let m = &self.mapping;
        let mut out: Vec<(String, String)> = [
            ("dead_roll", m.dead_roll.to_string()),
            ("dead_pitch", m.dead_pitch.to_string()),
            ("dead_yaw", m.dead_yaw.to_string()),
            ("stop_rp", m.stop_rp.to_string()),
            ("stop_yaw", m.stop_yaw.to_string()),
            ("v_max_x", m.v_max_x.to_string()),
            ("v_max_y", m.v_max_y.to_string()),
            ("w_max", m.w_max.to_string()),
            ("a_max_lin", m.a_max_lin.to_string()),
            ("a_max_ang", m.a_max_ang.to_string()),
            ("invert_roll", m.invert_roll.to_string()),
            ("invert_pitch", m.invert_pitch.to_string()),
            ("invert_yaw", m.invert_yaw.to_string()),
            ("smoothing_alpha", m.smoothing_alpha.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        for axis in Axis::ALL {
            let p = self.rig.axis(axis);
            let values = [
                p.n_springs.to_string(),
                p.k_spring.to_string(),
                p.damping.to_string(),
                p.inertia.to_string(),
                p.stop.to_string(),
            ];
            for (field, v) in RIG_FIELDS.iter().zip(values) {
                out.push((format!("rig.{axis}.{field}"), v));
            }
        }
        out.push(("pose.mount_yaw".into(), self.mount.yaw.to_string()));
        out.push(("pose.mount_pitch".into(), self.mount.pitch.to_string()));
        out.push(("pose.mount_roll".into(), self.mount.roll.to_string()));
        out.push(("service.tick_rate".into(), self.service.tick_rate.to_string()));
        out.push((
            "service.watchdog_timeout".into(),
            self.service.watchdog_timeout.to_string(),
        ));
        out
    }

    /// Sets one key; `Ok(false)` if the key is unknown.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, ConfigError> {
        let m = &mut self.mapping;
        let f = |v: &str| parse_f64(key, v);
        match key {
            "dead_roll" => m.dead_roll = f(value)?,
            "dead_pitch" => m.dead_pitch = f(value)?,
            "dead_yaw" => m.dead_yaw = f(value)?,
            "stop_rp" => m.stop_rp = f(value)?,
            "stop_yaw" => m.stop_yaw = f(value)?,
            "v_max_x" => m.v_max_x = f(value)?,
            "v_max_y" => m.v_max_y = f(value)?,
            "w_max" => m.w_max = f(value)?,
            "a_max_lin" => m.a_max_lin = f(value)?,
            "a_max_ang" => m.a_max_ang = f(value)?,
            "invert_roll" => m.invert_roll = parse_bool(key, value)?,
            "invert_pitch" => m.invert_pitch = parse_bool(key, value)?,
            "invert_yaw" => m.invert_yaw = parse_bool(key, value)?,
            "smoothing_alpha" => m.smoothing_alpha = f(value)?,
            "pose.mount_yaw" => self.mount.yaw = f(value)?,
            "pose.mount_pitch" => self.mount.pitch = f(value)?,
            "pose.mount_roll" => self.mount.roll = f(value)?,
            "service.tick_rate" => self.service.tick_rate = f(value)?,
            "service.watchdog_timeout" => self.service.watchdog_timeout = f(value)?,
            _ => {
                let Some(rest) = key.strip_prefix("rig.") else {
                    return Ok(false);
                };
                let Some((axis_name, field)) = rest.split_once('.') else {
                    return Ok(false);
                };
                let Some(axis) = Axis::ALL.into_iter().find(|a| a.name() == axis_name) else {
                    return Ok(false);
                };
                let p = self.rig.axis_mut(axis);
                match field {
                    "n_springs" => {
                        p.n_springs = value.parse().map_err(|_| ConfigError::BadValue {
                            key: key.into(),
                            value: value.into(),
                        })?
                    }
                    "k_spring" => p.k_spring = f(value)?,
                    "damping" => p.damping = f(value)?,
                    "inertia" => p.inertia = f(value)?,
                    "stop" => p.stop = f(value)?,
                    _ => return Ok(false),
                }
            }
        }
        Ok(true)
    }

    /// Applies a config file on top of `self` and validates the result.
    pub fn overlay(mut self, text: &str) -> Result<Self, ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    reason: "expected `key = value`".into(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if !self.set(key, value)? {
                return Err(ConfigError::UnknownKey {
                    line: line_no,
                    key: key.into(),
                });
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn from_entries(entries: &[(String, String)]) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, (k, v)) in entries.iter().enumerate() {
            if !cfg.set(k, v)? {
                return Err(ConfigError::UnknownKey {
                    line: i + 1,
                    key: k.clone(),
                });
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(base: Self, path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        base.overlay(&text)
    }

    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Short digest of the canonical config text.
    pub fn hash(&self) -> String {
        config_hash(&self.entries())
    }
}

pub fn config_hash(entries: &[(String, String)]) -> String {
    let mut h = Sha256::new();
    for (k, v) in entries {
        h.update(k.as_bytes());
        h.update(b" = ");
        h.update(v.as_bytes());
        h.update(b"\n");
    }
    h.finalize()
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}
