//! Session recording, log files, replay and run analysis.
//!
//! A session log is line-oriented text. Header lines have the form
//! `#key: value`; every other non-blank line is one tick:
//!
//! ```text
//! t roll pitch yaw raw_vx raw_vy raw_wz vx vy wz x y heading event
//! ```
//!
//! `event` is `-` or a comma-separated list of tokens (`goal`,
//! `collision:<id>`, `calibrated`, `watchdog`, `profile:<name>`,
//! `config_mismatch`, `error:<what>`). Numbers use the shortest decimal
//! form that round-trips, so a parsed log re-serializes byte for byte.

mod channels;
mod metrics;
mod replay;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use channels::{export_channels, ChannelRow, Channels};
pub use metrics::{compute_metrics, compute_metrics_with, SessionMetrics, DEFAULT_GOAL_RADIUS, REVERSAL_BAND};
pub use replay::{load_replay_input, replay, replay_poses, replay_session, ReplayInput};

use crate::config::{config_hash, ConfigError};
use crate::mapping::{Profile, Twist};
use crate::pose::{PoseError, RudderAttitude};
use crate::sim::{Circle, CollisionKind, Pose2, SimError};

pub const FORMAT_TAG: &str = "rudder-session-1";

pub const COLUMNS: &str = "t roll pitch yaw raw_vx raw_vy raw_wz vx vy wz x y heading event";

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("record at t={t} does not follow t={previous}")]
    NonMonotonic { t: f64, previous: f64 },
    #[error("record at t={0} has non-finite fields")]
    Incomplete(f64),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Pose(#[from] PoseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    Goal,
    Collision(CollisionKind),
    Calibrated,
    /// Watchdog tripped on this tick; the command was forced to zero.
    Watchdog,
    Profile(Profile),
    ConfigMismatch,
    Error(String),
}

impl Event {
    /// Builds an error event, folding the message into a single token.
    pub fn error(msg: &str) -> Self {
        let token: String = msg
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
            .collect();
        Event::Error(if token.is_empty() { "internal".into() } else { token })
    }

    /// Ticks carrying these events had their command forced to zero.
    pub fn forces_stop(&self) -> bool {
        matches!(self, Event::Watchdog | Event::Error(_))
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Goal => f.write_str("goal"),
            Event::Collision(id) => write!(f, "collision:{id}"),
            Event::Calibrated => f.write_str("calibrated"),
            Event::Watchdog => f.write_str("watchdog"),
            Event::Profile(p) => write!(f, "profile:{p}"),
            Event::ConfigMismatch => f.write_str("config_mismatch"),
            Event::Error(what) => write!(f, "error:{what}"),
        }
    }
}

impl FromStr for Event {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "goal" => return Ok(Event::Goal),
            "calibrated" => return Ok(Event::Calibrated),
            "watchdog" => return Ok(Event::Watchdog),
            "config_mismatch" => return Ok(Event::ConfigMismatch),
            _ => {}
        }
        match s.split_once(':') {
            Some(("collision", id)) => Ok(Event::Collision(id.parse()?)),
            Some(("profile", p)) => p.parse().map(Event::Profile).map_err(|e| e.to_string()),
            Some(("error", what)) if !what.is_empty() && !what.contains(',') => {
                Ok(Event::Error(what.to_string()))
            }
            _ => Err(format!("unknown event token {s:?}")),
        }
    }
}

pub fn format_events(events: &[Event]) -> String {
    if events.is_empty() {
        "-".into()
    } else {
        events.iter().map(Event::to_string).collect::<Vec<_>>().join(",")
    }
}

pub fn parse_events(s: &str) -> Result<Vec<Event>, String> {
    if s == "-" {
        return Ok(Vec::new());
    }
    s.split(',').map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub t: f64,
    pub attitude: RudderAttitude,
    pub raw: Twist,
    pub cmd: Twist,
    pub pose: Pose2,
    pub events: Vec<Event>,
}

impl TickRecord {
    fn numbers(&self) -> [f64; 13] {
        [
            self.t,
            self.attitude.roll,
            self.attitude.pitch,
            self.attitude.yaw,
            self.raw.vx,
            self.raw.vy,
            self.raw.wz,
            self.cmd.vx,
            self.cmd.vy,
            self.cmd.wz,
            self.pose.x,
            self.pose.y,
            self.pose.heading,
        ]
    }

    pub fn is_complete(&self) -> bool {
        self.numbers().iter().all(|v| v.is_finite())
    }

    pub fn has_event(&self, pred: impl Fn(&Event) -> bool) -> bool {
        self.events.iter().any(pred)
    }
}

impl fmt::Display for TickRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in self.numbers() {
            write!(f, "{v} ")?;
        }
        f.write_str(&format_events(&self.events))
    }
}

impl FromStr for TickRecord {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fields: Vec<&str> = s.split_whitespace().collect();
        if fields.len() != 14 {
            return Err(format!("expected 14 fields, found {}", fields.len()));
        }
        let mut n = [0.0; 13];
        for (slot, text) in n.iter_mut().zip(&fields) {
            *slot = text
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("bad number {text:?}"))?;
        }
        Ok(TickRecord {
            t: n[0],
            attitude: RudderAttitude::new(n[1], n[2], n[3], n[0]),
            raw: Twist::new(n[4], n[5], n[6]),
            cmd: Twist::new(n[7], n[8], n[9]),
            pose: Pose2 {
                x: n[10],
                y: n[11],
                heading: n[12],
            },
            events: parse_events(fields[13])?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionHeader {
    pub config_hash: String,
    /// Preset name or arena file path.
    pub arena: String,
    /// Clock reading when the session started.
    pub start_time: f64,
    /// Wall-clock time (Unix seconds) at session start; 0 under a virtual clock.
    pub start_wall: f64,
    pub start_pose: Pose2,
    pub goal: Circle,
    /// Full pipeline configuration as canonical key/value pairs.
    pub config: Vec<(String, String)>,
}

/// A sealed, immutable session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub header: SessionHeader,
    pub records: Vec<TickRecord>,
}

/// Append-only builder for a [`SessionLog`].
#[derive(Debug, Clone)]
pub struct SessionRecorder {
    header: SessionHeader,
    records: Vec<TickRecord>,
}

impl SessionRecorder {
    pub fn new(
        arena: &str,
        start_time: f64,
        start_pose: Pose2,
        goal: Circle,
        config: Vec<(String, String)>,
    ) -> Self {
        Self {
            header: SessionHeader {
                config_hash: String::new(),
                arena: arena.to_string(),
                start_time,
                start_wall: 0.0,
                start_pose,
                goal,
                config,
            },
            records: Vec::new(),
        }
    }

    pub fn record(&mut self, rec: TickRecord) -> Result<(), TelemetryError> {
        if !rec.is_complete() {
            return Err(TelemetryError::Incomplete(rec.t));
        }
        if let Some(prev) = self.records.last() {
            if !(rec.t > prev.t) {
                return Err(TelemetryError::NonMonotonic {
                    t: rec.t,
                    previous: prev.t,
                });
            }
        }
        self.records.push(rec);
        Ok(())
    }

    pub fn set_start_wall(&mut self, unix_seconds: f64) {
        self.header.start_wall = unix_seconds;
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[TickRecord] {
        &self.records
    }

    pub fn finalize(self) -> SessionLog {
        let mut header = self.header;
        header.config_hash = config_hash(&header.config);
        SessionLog {
            header,
            records: self.records,
        }
    }
}

fn parse_numbers<const N: usize>(value: &str) -> Option<[f64; N]> {
    let parts: Vec<f64> = value
        .split_whitespace()
        .map(|p| p.parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<_>>()?;
    parts.try_into().ok()
}

impl SessionLog {
    pub fn to_text(&self) -> String {
        let h = &self.header;
        let mut out = String::new();
        out.push_str(&format!("#format: {FORMAT_TAG}\n"));
        out.push_str(&format!("#config_hash: {}\n", h.config_hash));
        out.push_str(&format!("#arena: {}\n", h.arena));
        out.push_str(&format!("#start_time: {}\n", h.start_time));
        out.push_str(&format!("#start_wall: {}\n", h.start_wall));
        let p = &h.start_pose;
        out.push_str(&format!("#start_pose: {} {} {}\n", p.x, p.y, p.heading));
        let g = &h.goal;
        out.push_str(&format!("#goal: {} {} {}\n", g.cx, g.cy, g.r));
        for (k, v) in &h.config {
            out.push_str(&format!("#config.{k}: {v}\n"));
        }
        out.push_str(&format!("#columns: {COLUMNS}\n"));
        for r in &self.records {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<SessionLog, TelemetryError> {
        let mut config_hash = None;
        let mut arena = None;
        let mut start_time = None;
        let mut start_wall = 0.0;
        let mut start_pose = None;
        let mut goal = None;
        let mut config = Vec::new();
        let mut recorder_records: Vec<TickRecord> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |reason: String| TelemetryError::Parse {
                line: line_no,
                reason,
            };
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                let Some((key, value)) = header.split_once(": ") else {
                    continue;
                };
                let value = value.trim();
                match key {
                    "config_hash" => config_hash = Some(value.to_string()),
                    "arena" => arena = Some(value.to_string()),
                    "start_time" => {
                        start_time = Some(
                            parse_numbers::<1>(value).ok_or_else(|| err("bad start_time".into()))?[0],
                        )
                    }
                    "start_wall" => {
                        start_wall =
                            parse_numbers::<1>(value).ok_or_else(|| err("bad start_wall".into()))?[0]
                    }
                    "start_pose" => {
                        let [x, y, heading] =
                            parse_numbers::<3>(value).ok_or_else(|| err("bad start_pose".into()))?;
                        start_pose = Some(Pose2 { x, y, heading });
                    }
                    "goal" => {
                        let [cx, cy, r] =
                            parse_numbers::<3>(value).ok_or_else(|| err("bad goal".into()))?;
                        goal = Some(Circle { cx, cy, r });
                    }
                    k => {
                        if let Some(name) = k.strip_prefix("config.") {
                            config.push((name.to_string(), value.to_string()));
                        }
                    }
                }
                continue;
            }
            let rec: TickRecord = line.parse().map_err(err)?;
            if let Some(prev) = recorder_records.last() {
                if !(rec.t > prev.t) {
                    return Err(err(format!("timestamp {} not after {}", rec.t, prev.t)));
                }
            }
            recorder_records.push(rec);
        }
        let missing = |what: &str| TelemetryError::Parse {
            line: 0,
            reason: format!("missing #{what} header"),
        };
        Ok(SessionLog {
            header: SessionHeader {
                config_hash: config_hash.ok_or_else(|| missing("config_hash"))?,
                arena: arena.ok_or_else(|| missing("arena"))?,
                start_time: start_time.ok_or_else(|| missing("start_time"))?,
                start_wall,
                start_pose: start_pose.ok_or_else(|| missing("start_pose"))?,
                goal: goal.ok_or_else(|| missing("goal"))?,
                config,
            },
            records: recorder_records,
        })
    }

    pub fn duration(&self) -> f64 {
        self.records
            .last()
            .map_or(0.0, |r| r.t - self.header.start_time)
    }
}
