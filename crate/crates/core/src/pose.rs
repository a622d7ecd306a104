//! Tracker pose geometry and single-state calibration.
//!
//! Raw tracker orientations are expressed relative to one captured rest
//! orientation and decomposed into intrinsic Z-Y-X angles: yaw about the
//! vertical, then pitch (forward/backward tilt), then roll (sideways tilt).
//! Axes are right-handed with +x forward, +y left and +z up.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Maximum deviation of |q| from one accepted on ingestion.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Distance from ±π/2 pitch at which the Euler decomposition is treated as
/// gimbal-locked.
pub const GIMBAL_MARGIN: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoseError {
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("pose log line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Rotation quaternion. Components are public; every entry point that takes
/// external data runs [`UnitQuat::validate`] first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for UnitQuat {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl UnitQuat {
    pub const IDENTITY: UnitQuat = UnitQuat {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Normalizes arbitrary finite, non-zero components.
    pub fn normalize(w: f64, x: f64, y: f64, z: f64) -> Result<Self, PoseError> {
        let q = UnitQuat { w, x, y, z };
        if ![w, x, y, z].iter().all(|c| c.is_finite()) {
            return Err(PoseError::InvalidSample("non-finite quaternion".into()));
        }
        let n = q.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(PoseError::InvalidSample("zero-norm quaternion".into()));
        }
        Ok(UnitQuat {
            w: w / n,
            x: x / n,
            y: y / n,
            z: z / n,
        })
    }

    /// Accepts components whose norm is within [`NORM_TOLERANCE`] of one and
    /// renormalizes them.
    pub fn ingest(w: f64, x: f64, y: f64, z: f64) -> Result<Self, PoseError> {
        let q = Self::normalize(w, x, y, z)?;
        let n = UnitQuat { w, x, y, z }.norm();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(PoseError::InvalidSample(format!(
                "quaternion norm {n} outside 1 ± {NORM_TOLERANCE}"
            )));
        }
        Ok(q)
    }

    /// Re-checks the unit invariant of a value built from public fields.
    pub fn validate(&self) -> Result<Self, PoseError> {
        Self::ingest(self.w, self.x, self.y, self.z)
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if n == 0.0 {
            return Self::IDENTITY;
        }
        let (s, c) = (angle / 2.0).sin_cos();
        UnitQuat {
            w: c,
            x: s * axis[0] / n,
            y: s * axis[1] / n,
            z: s * axis[2] / n,
        }
    }

    pub fn rx(angle: f64) -> Self {
        Self::from_axis_angle([1.0, 0.0, 0.0], angle)
    }

    pub fn ry(angle: f64) -> Self {
        Self::from_axis_angle([0.0, 1.0, 0.0], angle)
    }

    pub fn rz(angle: f64) -> Self {
        Self::from_axis_angle([0.0, 0.0, 1.0], angle)
    }

    /// Intrinsic Z-Y-X composition `Rz(yaw) ∘ Ry(pitch) ∘ Rx(roll)`.
    pub fn from_euler_zyx(yaw: f64, pitch: f64, roll: f64) -> Self {
        let (sy, cy) = (yaw / 2.0).sin_cos();
        let (sp, cp) = (pitch / 2.0).sin_cos();
        let (sr, cr) = (roll / 2.0).sin_cos();
        UnitQuat {
            w: cy * cp * cr + sy * sp * sr,
            x: cy * cp * sr - sy * sp * cr,
            y: cy * sp * cr + sy * cp * sr,
            z: sy * cp * cr - cy * sp * sr,
        }
    }

    /// Conjugate; equal to the inverse for unit quaternions.
    pub fn inverse(&self) -> Self {
        UnitQuat {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Hamilton product `self ∘ rhs` (apply `rhs` first, in the body frame of `self`).
    pub fn compose(&self, rhs: &UnitQuat) -> Self {
        let (a, b) = (self, rhs);
        UnitQuat {
            w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        }
    }

    /// Sign representative with `w ≥ 0`.
    pub fn canonical(&self) -> Self {
        if self.w < 0.0 {
            UnitQuat {
                w: -self.w,
                x: -self.x,
                y: -self.y,
                z: -self.z,
            }
        } else {
            *self
        }
    }

    /// `(yaw, pitch, roll)` of the intrinsic Z-Y-X decomposition.
    pub fn to_euler_zyx(&self) -> (f64, f64, f64) {
        let UnitQuat { w, x, y, z } = *self;
        let sinp = (2.0 * (w * y - z * x)).clamp(-1.0, 1.0);
        let pitch = sinp.asin();
        let roll = (2.0 * (w * x + y * z)).atan2(1.0 - 2.0 * (x * x + y * y));
        let yaw = (2.0 * (w * z + x * y)).atan2(1.0 - 2.0 * (y * y + z * z));
        (yaw, pitch, roll)
    }
}

pub fn quat_inverse(q: &UnitQuat) -> UnitQuat {
    q.inverse()
}

pub fn quat_compose(a: &UnitQuat, b: &UnitQuat) -> UnitQuat {
    a.compose(b)
}

pub fn euler_zyx_from_quat(q: &UnitQuat) -> (f64, f64, f64) {
    q.to_euler_zyx()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerSample {
    pub t: f64,
    /// Carried for diagnostics only; the rig is fixed to a planar surface.
    pub position: [f64; 3],
    pub orientation: UnitQuat,
}

impl TrackerSample {
    pub fn new(t: f64, position: [f64; 3], orientation: UnitQuat) -> Self {
        Self {
            t,
            position,
            orientation,
        }
    }

    fn checked_orientation(&self) -> Result<UnitQuat, PoseError> {
        if !self.t.is_finite() {
            return Err(PoseError::InvalidSample("non-finite timestamp".into()));
        }
        self.orientation.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationState {
    pub q_ref: UnitQuat,
    pub t_cal: f64,
}

impl CalibrationState {
    /// Rest orientation equal to the tracker frame itself.
    pub fn identity(t: f64) -> Self {
        Self {
            q_ref: UnitQuat::IDENTITY,
            t_cal: t,
        }
    }
}

/// Rudder deflection relative to the calibrated rest orientation, radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RudderAttitude {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
    pub t: f64,
}

impl RudderAttitude {
    pub fn new(roll: f64, pitch: f64, yaw: f64, t: f64) -> Self {
        Self {
            roll,
            pitch,
            yaw,
            t,
        }
    }

    pub fn clamped(&self, stops: &Stops) -> Self {
        RudderAttitude {
            roll: self.roll.clamp(-stops.roll_pitch, stops.roll_pitch),
            pitch: self.pitch.clamp(-stops.roll_pitch, stops.roll_pitch),
            yaw: self.yaw.clamp(-stops.yaw, stops.yaw),
            t: self.t,
        }
    }
}

/// Mechanical limits of the ball joint (roll, pitch) and the rotary joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stops {
    pub roll_pitch: f64,
    pub yaw: f64,
}

/// Fixed rotation from the rudder frame to the tracker mounting frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrackerMount {
    pub offset: UnitQuat,
}

impl TrackerMount {
    pub fn from_euler_zyx(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self {
            offset: UnitQuat::from_euler_zyx(yaw, pitch, roll),
        }
    }

    /// Expresses a tracker sample as the rudder orientation it implies.
    pub fn to_rudder(&self, sample: &TrackerSample) -> TrackerSample {
        TrackerSample {
            orientation: sample.orientation.compose(&self.offset.inverse()),
            ..*sample
        }
    }

    /// Inverse of [`TrackerMount::to_rudder`].
    pub fn to_tracker(&self, rudder: &UnitQuat) -> UnitQuat {
        rudder.compose(&self.offset)
    }
}

pub fn calibrate(sample: &TrackerSample) -> Result<CalibrationState, PoseError> {
    let q = sample.checked_orientation()?;
    Ok(CalibrationState {
        q_ref: q.canonical(),
        t_cal: sample.t,
    })
}

/// Attitude of `sample` relative to the calibrated rest orientation, clamped
/// to the mechanical stops.
///
/// Near gimbal lock the pitch is reported at its stop and the residual
/// rotation about the vertical is attributed to yaw.
pub fn relative_attitude(
    sample: &TrackerSample,
    cal: &CalibrationState,
    stops: &Stops,
) -> Result<RudderAttitude, PoseError> {
    let q = sample.checked_orientation()?;
    let q_ref = cal.q_ref.validate()?;
    let rel = q_ref.inverse().compose(&q).canonical();
    let (mut yaw, mut pitch, mut roll) = rel.to_euler_zyx();
    if (pitch.abs() - FRAC_PI_2).abs() < GIMBAL_MARGIN {
        pitch = stops.roll_pitch.copysign(pitch);
        roll = 0.0;
        yaw = 2.0 * rel.z.atan2(rel.w);
    }
    Ok(RudderAttitude::new(roll, pitch, yaw, sample.t).clamped(stops))
}

impl fmt::Display for TrackerSample {
    /// One pose-log record: `t px py pz qw qx qy qz`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = &self.orientation;
        write!(
            f,
            "{} {} {} {} {} {} {} {}",
            self.t, self.position[0], self.position[1], self.position[2], q.w, q.x, q.y, q.z
        )
    }
}

impl FromStr for TrackerSample {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fields: Vec<&str> = s.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(format!("expected 8 fields, found {}", fields.len()));
        }
        let mut v = [0.0; 8];
        for (slot, text) in v.iter_mut().zip(&fields) {
            *slot = text
                .parse::<f64>()
                .map_err(|e| format!("bad number {text:?}: {e}"))?;
            if !slot.is_finite() {
                return Err(format!("non-finite value {text:?}"));
            }
        }
        let orientation =
            UnitQuat::ingest(v[4], v[5], v[6], v[7]).map_err(|e| e.to_string())?;
        Ok(TrackerSample::new(v[0], [v[1], v[2], v[3]], orientation))
    }
}

/// Parses a pose log: one `t px py pz qw qx qy qz` record per line, `#`
/// comments and blank lines ignored, timestamps strictly increasing.
pub fn parse_pose_log(text: &str) -> Result<Vec<TrackerSample>, PoseError> {
    let mut out: Vec<TrackerSample> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let sample: TrackerSample = line.parse().map_err(|reason| PoseError::Parse {
            line: idx + 1,
            reason,
        })?;
        if let Some(prev) = out.last() {
            if sample.t <= prev.t {
                return Err(PoseError::Parse {
                    line: idx + 1,
                    reason: format!("timestamp {} not after {}", sample.t, prev.t),
                });
            }
        }
        out.push(sample);
    }
    Ok(out)
}

pub fn format_pose_log(samples: &[TrackerSample]) -> String {
    let mut out = String::from("# t px py pz qw qx qy qz\n");
    for s in samples {
        out.push_str(&s.to_string());
        out.push('\n');
    }
    out
}
