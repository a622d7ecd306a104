//! Line protocol between the control service, robot consumers and the
//! operator station.
//!
//! One message per newline-terminated UTF-8 line:
//! `TYPE key=value key=value ...`. Every message carries `seq` and `t`.
//!
//! | type     | direction | fields after `seq t`                                   |
//! |----------|-----------|--------------------------------------------------------|
//! | `CMD`    | out       | `vx vy wz`                                             |
//! | `STATE`  | out       | `roll pitch yaw vx vy wz x y heading tripped event`    |
//! | `EFFORT` | in        | `roll pitch yaw engaged` (torques, N·m; engaged 0/1)   |
//! | `CAL`    | in        |                                                        |
//! | `CFG`    | in        | `profile`                                              |
//! | `PING`   | in        |                                                        |
//! | `PONG`   | out       |                                                        |
//!
//! The parser is total: anything that is not a valid message comes back as
//! a [`Reject`] value. Fields may appear in any order on input; output
//! always uses the order above.

use std::fmt;

use crate::mapping::Profile;
use crate::rig::FootEffort;

pub const MAX_LINE_BYTES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reject {
    UnknownType,
    BadField,
    NonFinite,
    TooLong,
}

impl fmt::Display for Reject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reject::UnknownType => "unknown-type",
            Reject::BadField => "bad-field",
            Reject::NonFinite => "non-finite",
            Reject::TooLong => "too-long",
        })
    }
}

/// Telemetry snapshot sent once per tick.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StateFields {
    /// Rig angles, radians.
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    /// Commanded twist.
    pub vx: f64,
    pub vy: f64,
    pub wz: f64,
    /// Robot pose.
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub tripped: bool,
    /// `-` or comma-separated event tokens.
    pub event: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WireMessage {
    Cmd { seq: u64, t: f64, vx: f64, vy: f64, wz: f64 },
    Effort { seq: u64, t: f64, effort: FootEffort },
    State { seq: u64, t: f64, state: StateFields },
    Cal { seq: u64, t: f64 },
    Cfg { seq: u64, t: f64, profile: Profile },
    Ping { seq: u64, t: f64 },
    Pong { seq: u64, t: f64 },
}

impl WireMessage {
    pub fn type_name(&self) -> &'static str {
        match self {
            WireMessage::Cmd { .. } => "CMD",
            WireMessage::Effort { .. } => "EFFORT",
            WireMessage::State { .. } => "STATE",
            WireMessage::Cal { .. } => "CAL",
            WireMessage::Cfg { .. } => "CFG",
            WireMessage::Ping { .. } => "PING",
            WireMessage::Pong { .. } => "PONG",
        }
    }

    pub fn seq(&self) -> u64 {
        match self {
            WireMessage::Cmd { seq, .. }
            | WireMessage::Effort { seq, .. }
            | WireMessage::State { seq, .. }
            | WireMessage::Cal { seq, .. }
            | WireMessage::Cfg { seq, .. }
            | WireMessage::Ping { seq, .. }
            | WireMessage::Pong { seq, .. } => *seq,
        }
    }

    pub fn t(&self) -> f64 {
        match self {
            WireMessage::Cmd { t, .. }
            | WireMessage::Effort { t, .. }
            | WireMessage::State { t, .. }
            | WireMessage::Cal { t, .. }
            | WireMessage::Cfg { t, .. }
            | WireMessage::Ping { t, .. }
            | WireMessage::Pong { t, .. } => *t,
        }
    }

    pub fn is_state(&self) -> bool {
        matches!(self, WireMessage::State { .. })
    }
}

fn flag(b: bool) -> u8 {
    b as u8
}

/// Shortest round-trip decimal; scientific notation outside
/// `[1e-5, 1e16)` keeps lines short for extreme magnitudes.
struct Num(f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.0.abs();
        if a == 0.0 || (1e-5..1e16).contains(&a) {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{:e}", self.0)
        }
    }
}

impl fmt::Display for WireMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} seq={} t={}", self.type_name(), self.seq(), Num(self.t()))?;
        match self {
            WireMessage::Cmd { vx, vy, wz, .. } => {
                write!(f, " vx={} vy={} wz={}", Num(*vx), Num(*vy), Num(*wz))
            }
            WireMessage::Effort { effort, .. } => write!(
                f,
                " roll={} pitch={} yaw={} engaged={}",
                Num(effort.torque_roll),
                Num(effort.torque_pitch),
                Num(effort.torque_yaw),
                flag(effort.engaged)
            ),
            WireMessage::State { state: s, .. } => write!(
                f,
                " roll={} pitch={} yaw={} vx={} vy={} wz={} x={} y={} heading={} tripped={} event={}",
                Num(s.roll),
                Num(s.pitch),
                Num(s.yaw),
                Num(s.vx),
                Num(s.vy),
                Num(s.wz),
                Num(s.x),
                Num(s.y),
                Num(s.heading),
                flag(s.tripped),
                s.event
            ),
            WireMessage::Cfg { profile, .. } => write!(f, " profile={profile}"),
            WireMessage::Cal { .. } | WireMessage::Ping { .. } | WireMessage::Pong { .. } => Ok(()),
        }
    }
}

/// Renders a message as one line without the trailing newline.
pub fn format_message(msg: &WireMessage) -> String {
    msg.to_string()
}

struct Fields<'a> {
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Fields<'a> {
    fn parse(tokens: impl Iterator<Item = &'a str>) -> Result<Self, Reject> {
        let mut pairs: Vec<(&str, &str)> = Vec::new();
        for tok in tokens {
            let (k, v) = tok.split_once('=').ok_or(Reject::BadField)?;
            if k.is_empty() || v.is_empty() || pairs.iter().any(|(seen, _)| *seen == k) {
                return Err(Reject::BadField);
            }
            pairs.push((k, v));
        }
        Ok(Fields { pairs })
    }

    /// Fails unless the keys are exactly `expected`.
    fn expect(&self, expected: &[&str]) -> Result<(), Reject> {
        if self.pairs.len() != expected.len() || !self.pairs.iter().all(|(k, _)| expected.contains(k)) {
            return Err(Reject::BadField);
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Result<&'a str, Reject> {
        self.pairs
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or(Reject::BadField)
    }

    fn num(&self, key: &str) -> Result<f64, Reject> {
        let v: f64 = self.raw(key)?.parse().map_err(|_| Reject::BadField)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Reject::NonFinite)
        }
    }

    fn seq(&self) -> Result<u64, Reject> {
        self.raw("seq")?.parse().map_err(|_| Reject::BadField)
    }

    fn flag(&self, key: &str) -> Result<bool, Reject> {
        match self.raw(key)? {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            _ => Err(Reject::BadField),
        }
    }
}

fn valid_event_field(s: &str) -> bool {
    s == "-" || crate::telemetry::parse_events(s).is_ok()
}

/// Parses one line (a trailing `\n` or `\r\n` is allowed).
pub fn parse_message(line: &str) -> Result<WireMessage, Reject> {
    if line.len() > MAX_LINE_BYTES + 2 {
        return Err(Reject::TooLong);
    }
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    if line.len() > MAX_LINE_BYTES {
        return Err(Reject::TooLong);
    }
    let mut tokens = line.split(' ').filter(|t| !t.is_empty());
    let kind = tokens.next().ok_or(Reject::UnknownType)?;
    const KINDS: [&str; 7] = ["CMD", "EFFORT", "STATE", "CAL", "CFG", "PING", "PONG"];
    if !KINDS.contains(&kind) {
        return Err(Reject::UnknownType);
    }
    let fields = Fields::parse(tokens)?;
    let common = |extra: &[&str]| -> Result<(u64, f64), Reject> {
        let mut keys = vec!["seq", "t"];
        keys.extend_from_slice(extra);
        fields.expect(&keys)?;
        Ok((fields.seq()?, fields.num("t")?))
    };
    let msg = match kind {
        "CMD" => {
            let (seq, t) = common(&["vx", "vy", "wz"])?;
            WireMessage::Cmd {
                seq,
                t,
                vx: fields.num("vx")?,
                vy: fields.num("vy")?,
                wz: fields.num("wz")?,
            }
        }
        "EFFORT" => {
            let (seq, t) = common(&["roll", "pitch", "yaw", "engaged"])?;
            WireMessage::Effort {
                seq,
                t,
                effort: FootEffort {
                    torque_roll: fields.num("roll")?,
                    torque_pitch: fields.num("pitch")?,
                    torque_yaw: fields.num("yaw")?,
                    engaged: fields.flag("engaged")?,
                },
            }
        }
        "STATE" => {
            let (seq, t) = common(&[
                "roll", "pitch", "yaw", "vx", "vy", "wz", "x", "y", "heading", "tripped", "event",
            ])?;
            let event = fields.raw("event")?;
            if !valid_event_field(event) {
                return Err(Reject::BadField);
            }
            WireMessage::State {
                seq,
                t,
                state: StateFields {
                    roll: fields.num("roll")?,
                    pitch: fields.num("pitch")?,
                    yaw: fields.num("yaw")?,
                    vx: fields.num("vx")?,
                    vy: fields.num("vy")?,
                    wz: fields.num("wz")?,
                    x: fields.num("x")?,
                    y: fields.num("y")?,
                    heading: fields.num("heading")?,
                    tripped: fields.flag("tripped")?,
                    event: event.to_string(),
                },
            }
        }
        "CFG" => {
            let (seq, t) = common(&["profile"])?;
            let profile = fields.raw("profile")?.parse().map_err(|_| Reject::BadField)?;
            WireMessage::Cfg { seq, t, profile }
        }
        "CAL" => {
            let (seq, t) = common(&[])?;
            WireMessage::Cal { seq, t }
        }
        "PING" => {
            let (seq, t) = common(&[])?;
            WireMessage::Ping { seq, t }
        }
        _ => {
            let (seq, t) = common(&[])?;
            WireMessage::Pong { seq, t }
        }
    };
    Ok(msg)
}

/// Byte-level entry point; invalid UTF-8 is a field error.
pub fn parse_bytes(bytes: &[u8]) -> Result<WireMessage, Reject> {
    if bytes.len() > MAX_LINE_BYTES + 2 {
        return Err(Reject::TooLong);
    }
    std::str::from_utf8(bytes)
        .map_err(|_| Reject::BadField)
        .and_then(parse_message)
}

/// Tally of rejected input lines per category.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RejectCounts {
    pub unknown_type: u64,
    pub bad_field: u64,
    pub non_finite: u64,
    pub too_long: u64,
}

impl RejectCounts {
    pub fn count(&mut self, r: Reject) {
        match r {
            Reject::UnknownType => self.unknown_type += 1,
            Reject::BadField => self.bad_field += 1,
            Reject::NonFinite => self.non_finite += 1,
            Reject::TooLong => self.too_long += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.unknown_type + self.bad_field + self.non_finite + self.too_long
    }
}
