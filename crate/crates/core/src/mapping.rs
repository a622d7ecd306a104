//! Rudder attitude to velocity command mapping.
//!
//! Pitch drives forward velocity, roll drives lateral velocity and yaw drives
//! the turn rate. Each axis passes through its own inactive zone, is rescaled
//! linearly onto `[-1, 1]` between the zone edge and the mechanical stop, and
//! is multiplied by that axis' maximum speed. Commands are then smoothed and
//! slew limited.
//!
//! Sign conventions (right-handed, +x forward, +y left, +z up):
//! tilting forward is positive pitch and gives `+vx`; tilting left is
//! negative roll and gives `+vy`; turning counter-clockwise is positive yaw
//! and gives `+wz`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::pose::{RudderAttitude, Stops};

/// Filtered values closer than this to their target snap onto it, so a
/// released rudder yields an exactly zero command.
pub const SMOOTHING_SNAP: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MappingError {
    #[error("unknown profile {0:?}; valid profiles: day1, day2")]
    UnknownProfile(String),
    #[error("invalid mapping config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Profile {
    Day1,
    Day2,
}

impl Profile {
    pub const ALL: [Profile; 2] = [Profile::Day1, Profile::Day2];

    pub fn name(&self) -> &'static str {
        match self {
            Profile::Day1 => "day1",
            Profile::Day2 => "day2",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = MappingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "day1" => Ok(Profile::Day1),
            "day2" => Ok(Profile::Day2),
            other => Err(MappingError::UnknownProfile(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingConfig {
    pub dead_roll: f64,
    pub dead_pitch: f64,
    pub dead_yaw: f64,
    /// Ball-joint limit shared by roll and pitch.
    pub stop_rp: f64,
    pub stop_yaw: f64,
    pub v_max_x: f64,
    pub v_max_y: f64,
    pub w_max: f64,
    pub a_max_lin: f64,
    pub a_max_ang: f64,
    pub invert_roll: bool,
    pub invert_pitch: bool,
    pub invert_yaw: bool,
    /// Weight of the newest raw command in the exponential filter; 1 disables smoothing.
    pub smoothing_alpha: f64,
}

impl Default for MappingConfig {
    fn default() -> Self {
        day_profile(Profile::Day1)
    }
}

impl MappingConfig {
    pub fn stops(&self) -> Stops {
        Stops {
            roll_pitch: self.stop_rp,
            yaw: self.stop_yaw,
        }
    }

    pub fn validate(&self) -> Result<(), MappingError> {
        let bad = |msg: String| Err(MappingError::InvalidConfig(msg));
        for (name, dead, stop) in [
            ("roll", self.dead_roll, self.stop_rp),
            ("pitch", self.dead_pitch, self.stop_rp),
            ("yaw", self.dead_yaw, self.stop_yaw),
        ] {
            if !(dead.is_finite() && stop.is_finite() && 0.0 <= dead && dead < stop) {
                return bad(format!(
                    "{name}: need 0 <= deadzone ({dead}) < stop ({stop})"
                ));
            }
        }
        for (name, v) in [
            ("v_max_x", self.v_max_x),
            ("v_max_y", self.v_max_y),
            ("w_max", self.w_max),
            ("a_max_lin", self.a_max_lin),
            ("a_max_ang", self.a_max_ang),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be finite and > 0, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.smoothing_alpha) {
            return bad(format!(
                "smoothing_alpha must lie in [0, 1], got {}",
                self.smoothing_alpha
            ));
        }
        Ok(())
    }

    /// Per-axis velocity limit as `(vx, vy, wz)`.
    pub fn limits(&self) -> Twist {
        Twist::new(self.v_max_x, self.v_max_y, self.w_max)
    }
}

/// Built-in speed presets. Day 2 is strictly faster and more aggressive than
/// day 1 in every maximum.
pub fn day_profile(profile: Profile) -> MappingConfig {
    let base = MappingConfig {
        dead_roll: 0.05,
        dead_pitch: 0.05,
        dead_yaw: 0.08,
        stop_rp: 0.25,
        stop_yaw: 0.50,
        v_max_x: 1.0,
        v_max_y: 0.7,
        w_max: 1.0,
        a_max_lin: 0.8,
        a_max_ang: 1.5,
        invert_roll: false,
        invert_pitch: false,
        invert_yaw: false,
        smoothing_alpha: 0.2,
    };
    match profile {
        Profile::Day1 => base,
        Profile::Day2 => MappingConfig {
            v_max_x: 2.0,
            v_max_y: 1.2,
            w_max: 1.5,
            a_max_lin: 1.5,
            a_max_ang: 2.5,
            ..base
        },
    }
}

pub fn day_profile_by_name(name: &str) -> Result<MappingConfig, MappingError> {
    Ok(day_profile(name.parse()?))
}

/// Body-frame velocity triple.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist {
    pub vx: f64,
    pub vy: f64,
    pub wz: f64,
}

impl Twist {
    pub const ZERO: Twist = Twist {
        vx: 0.0,
        vy: 0.0,
        wz: 0.0,
    };

    pub fn new(vx: f64, vy: f64, wz: f64) -> Self {
        Self { vx, vy, wz }
    }

    pub fn is_finite(&self) -> bool {
        self.vx.is_finite() && self.vy.is_finite() && self.wz.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.vx == 0.0 && self.vy == 0.0 && self.wz == 0.0
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.vx, self.vy, self.wz]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistCommand {
    pub vx: f64,
    pub vy: f64,
    pub wz: f64,
    pub t: f64,
    pub seq: u64,
}

impl TwistCommand {
    pub fn twist(&self) -> Twist {
        Twist::new(self.vx, self.vy, self.wz)
    }

    pub fn from_twist(twist: Twist, t: f64, seq: u64) -> Self {
        Self {
            vx: twist.vx,
            vy: twist.vy,
            wz: twist.wz,
            t,
            seq,
        }
    }
}

/// Maps an angle onto `[-1, 1]`: zero inside `[-dead, dead]`, then linear up
/// to ±1 at the stop, saturated beyond.
pub fn normalize_axis(angle: f64, dead: f64, stop: f64) -> f64 {
    let mag = angle.abs();
    if mag <= dead || angle.is_nan() {
        return 0.0;
    }
    ((mag - dead) / (stop - dead)).min(1.0).copysign(angle)
}

pub fn map_to_twist(att: &RudderAttitude, cfg: &MappingConfig) -> Twist {
    let sign = |invert: bool| if invert { -1.0 } else { 1.0 };
    let forward = normalize_axis(att.pitch, cfg.dead_pitch, cfg.stop_rp);
    let left = -normalize_axis(att.roll, cfg.dead_roll, cfg.stop_rp);
    let ccw = normalize_axis(att.yaw, cfg.dead_yaw, cfg.stop_yaw);
    Twist {
        vx: cfg.v_max_x * forward * sign(cfg.invert_pitch),
        vy: cfg.v_max_y * left * sign(cfg.invert_roll),
        wz: cfg.w_max * ccw * sign(cfg.invert_yaw),
    }
}

/// Rate limiter state carried between control ticks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapperState {
    pub previous: TwistCommand,
    pub filtered: Twist,
}

impl MapperState {
    /// Origin rest state: zero twist at `t0`, no command issued yet.
    pub fn new(t0: f64) -> Self {
        Self {
            previous: TwistCommand::from_twist(Twist::ZERO, t0, 0),
            filtered: Twist::ZERO,
        }
    }

    pub fn previous_time(&self) -> f64 {
        self.previous.t
    }

    /// Drops any motion history; the next command ramps up from zero.
    pub fn reset(&mut self, t: f64) {
        let seq = self.previous.seq;
        self.previous = TwistCommand::from_twist(Twist::ZERO, t, seq);
        self.filtered = Twist::ZERO;
    }
}

fn approach(current: f64, target: f64, max_step: f64) -> f64 {
    let delta = target - current;
    if delta.abs() <= max_step {
        target
    } else {
        current + max_step.copysign(delta)
    }
}

fn smooth(filtered: f64, raw: f64, alpha: f64) -> f64 {
    let next = filtered + alpha * (raw - filtered);
    if (next - raw).abs() <= SMOOTHING_SNAP {
        raw
    } else {
        next
    }
}

/// Smooths, slew limits and clamps a raw twist, issuing the next command.
///
/// A non-positive time step returns the previous command untouched.
pub fn rate_limit(
    raw: &Twist,
    state: &mut MapperState,
    t_now: f64,
    cfg: &MappingConfig,
) -> TwistCommand {
    let dt = t_now - state.previous.t;
    if !(dt > 0.0) {
        return state.previous;
    }
    let alpha = cfg.smoothing_alpha;
    let filtered = Twist {
        vx: smooth(state.filtered.vx, raw.vx, alpha),
        vy: smooth(state.filtered.vy, raw.vy, alpha),
        wz: smooth(state.filtered.wz, raw.wz, alpha),
    };
    let prev = state.previous;
    let lin = cfg.a_max_lin * dt;
    let ang = cfg.a_max_ang * dt;
    let limited = Twist {
        vx: approach(prev.vx, filtered.vx, lin).clamp(-cfg.v_max_x, cfg.v_max_x),
        vy: approach(prev.vy, filtered.vy, lin).clamp(-cfg.v_max_y, cfg.v_max_y),
        wz: approach(prev.wz, filtered.wz, ang).clamp(-cfg.w_max, cfg.w_max),
    };
    let cmd = TwistCommand::from_twist(limited, t_now, prev.seq + 1);
    state.filtered = filtered;
    state.previous = cmd;
    cmd
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unsmoothed(profile: Profile) -> MappingConfig {
        MappingConfig {
            smoothing_alpha: 1.0,
            ..day_profile(profile)
        }
    }

    fn att(roll: f64, pitch: f64, yaw: f64) -> RudderAttitude {
        RudderAttitude::new(roll, pitch, yaw, 0.0)
    }

    #[test]
    fn normalize_axis_examples() {
        assert_eq!(normalize_axis(0.0, 0.05, 0.25), 0.0);
        assert_eq!(normalize_axis(0.05, 0.05, 0.25), 0.0);
        assert_eq!(normalize_axis(0.25, 0.05, 0.25), 1.0);
        // (0.15 - 0.05) / (0.25 - 0.05)
        assert!((normalize_axis(0.15, 0.05, 0.25) - 0.5).abs() < 1e-15);
        assert!((normalize_axis(-0.15, 0.05, 0.25) + 0.5).abs() < 1e-15);
        assert_eq!(normalize_axis(0.9, 0.05, 0.25), 1.0);
        assert_eq!(normalize_axis(-0.9, 0.05, 0.25), -1.0);
        assert_eq!(normalize_axis(0.1, 0.0, 0.25), 0.4);
    }

    #[test]
    fn map_to_twist_examples() {
        let cfg = day_profile(Profile::Day2);
        assert_eq!(map_to_twist(&att(0.0, 0.0, 0.0), &cfg), Twist::ZERO);
        assert_eq!(
            map_to_twist(&att(0.0, cfg.stop_rp, 0.0), &cfg),
            Twist::new(cfg.v_max_x, 0.0, 0.0)
        );
        assert_eq!(
            map_to_twist(&att(0.0, cfg.dead_pitch / 2.0, 0.0), &cfg),
            Twist::ZERO
        );
    }

    #[test]
    fn motion_semantics() {
        let cfg = day_profile(Profile::Day1);
        let s = cfg.stop_rp;
        // backward tilt
        assert!(map_to_twist(&att(0.0, -s, 0.0), &cfg).vx < 0.0);
        // left tilt lowers the left side: negative roll
        let left = map_to_twist(&att(-s, 0.0, 0.0), &cfg);
        assert!(left.vy > 0.0 && left.vx == 0.0 && left.wz == 0.0);
        let right = map_to_twist(&att(s, 0.0, 0.0), &cfg);
        assert_eq!(right.vy, -left.vy);
        let turn_left = map_to_twist(&att(0.0, 0.0, cfg.stop_yaw), &cfg);
        assert_eq!(turn_left, Twist::new(0.0, 0.0, cfg.w_max));
        let turn_right = map_to_twist(&att(0.0, 0.0, -cfg.stop_yaw), &cfg);
        assert_eq!(turn_right.wz, -cfg.w_max);

        let inverted = MappingConfig {
            invert_pitch: true,
            invert_roll: true,
            invert_yaw: true,
            ..cfg
        };
        let t = map_to_twist(&att(-s, s, cfg.stop_yaw), &inverted);
        assert_eq!(t, Twist::new(-cfg.v_max_x, -cfg.v_max_y, -cfg.w_max));
    }

    #[test]
    fn rate_limit_examples() {
        let cfg = MappingConfig {
            a_max_lin: 1.5,
            ..unsmoothed(Profile::Day2)
        };
        let mut st = MapperState::new(0.0);
        let cmd = rate_limit(&Twist::new(2.0, 0.0, 0.0), &mut st, 0.02, &cfg);
        // 1.5 m/s² · 0.02 s
        assert!((cmd.vx - 0.03).abs() < 1e-15);
        assert_eq!(cmd.seq, 1);

        // fixed point
        let mut st = MapperState::new(0.0);
        st.previous = TwistCommand::from_twist(Twist::new(0.4, -0.2, 0.1), 0.0, 3);
        st.filtered = st.previous.twist();
        let cmd = rate_limit(&Twist::new(0.4, -0.2, 0.1), &mut st, 0.02, &cfg);
        assert_eq!(cmd.twist(), Twist::new(0.4, -0.2, 0.1));
        assert_eq!(cmd.seq, 4);

        // large step lands exactly on the target
        let mut st = MapperState::new(0.0);
        st.previous = TwistCommand::from_twist(Twist::new(1.0, 0.0, 0.0), 0.0, 0);
        st.filtered = st.previous.twist();
        let cmd = rate_limit(&Twist::ZERO, &mut st, 1.0, &cfg);
        assert_eq!(cmd.twist(), Twist::ZERO);
    }

    #[test]
    fn rate_limit_stale_clock_returns_previous() {
        let cfg = unsmoothed(Profile::Day1);
        let mut st = MapperState::new(1.0);
        let first = rate_limit(&Twist::new(1.0, 0.0, 0.0), &mut st, 1.02, &cfg);
        let again = rate_limit(&Twist::new(-1.0, 0.0, 0.0), &mut st, 1.02, &cfg);
        assert_eq!(first, again);
        let back = rate_limit(&Twist::new(-1.0, 0.0, 0.0), &mut st, 1.0, &cfg);
        assert_eq!(first, back);
    }

    #[test]
    fn smoothing_reaches_target_exactly() {
        let cfg = day_profile(Profile::Day2);
        let mut st = MapperState::new(0.0);
        let mut t = 0.0;
        for _ in 0..200 {
            t += 0.02;
            rate_limit(&Twist::new(2.0, -1.2, 1.5), &mut st, t, &cfg);
        }
        assert_eq!(st.previous.twist(), Twist::new(2.0, -1.2, 1.5));
        for _ in 0..200 {
            t += 0.02;
            rate_limit(&Twist::ZERO, &mut st, t, &cfg);
        }
        assert_eq!(st.previous.twist(), Twist::ZERO);
    }

    #[test]
    fn profiles() {
        let d1 = day_profile(Profile::Day1);
        let d2 = day_profile(Profile::Day2);
        assert!(d1.v_max_x < d2.v_max_x && d1.v_max_y < d2.v_max_y && d1.w_max < d2.w_max);
        assert!(d1.a_max_lin < d2.a_max_lin && d1.a_max_ang < d2.a_max_ang);
        d1.validate().unwrap();
        d2.validate().unwrap();
        let err = day_profile_by_name("day3").unwrap_err();
        assert!(err.to_string().contains("day1") && err.to_string().contains("day2"));
    }

    #[test]
    fn validation_rejects_bad_configs() {
        let base = day_profile(Profile::Day1);
        assert!(MappingConfig { dead_yaw: 0.6, ..base }.validate().is_err());
        assert!(MappingConfig { dead_roll: -0.1, ..base }.validate().is_err());
        assert!(MappingConfig { v_max_x: 0.0, ..base }.validate().is_err());
        assert!(MappingConfig { a_max_ang: f64::NAN, ..base }.validate().is_err());
        assert!(MappingConfig { smoothing_alpha: 1.5, ..base }.validate().is_err());
    }

    proptest! {
        #[test]
        fn normalize_is_odd_and_bounded(a in -1.0f64..1.0, dead in 0.0f64..0.2, span in 0.01f64..0.5) {
            let stop = dead + span;
            let n = normalize_axis(a, dead, stop);
            prop_assert_eq!(normalize_axis(-a, dead, stop), -n);
            prop_assert!(n.abs() <= 1.0);
        }

        #[test]
        fn normalize_is_monotone(a in -1.0f64..1.0, d in 0.0f64..0.1) {
            let (dead, stop) = (0.05, 0.25);
            prop_assert!(normalize_axis(a + d, dead, stop) >= normalize_axis(a, dead, stop));
        }

        #[test]
        fn scale_covariance(roll in -0.25f64..0.25, pitch in -0.25f64..0.25, yaw in -0.5f64..0.5) {
            let cfg = day_profile(Profile::Day1);
            let doubled = MappingConfig { v_max_x: 2.0 * cfg.v_max_x, ..cfg };
            let a = map_to_twist(&att(roll, pitch, yaw), &cfg);
            let b = map_to_twist(&att(roll, pitch, yaw), &doubled);
            prop_assert_eq!(b.vx, 2.0 * a.vx);
            prop_assert_eq!(b.vy, a.vy);
        }

        #[test]
        fn mirrored_tilts_mirror_commands(roll in -1.0f64..1.0, pitch in -1.0f64..1.0, yaw in -1.0f64..1.0) {
            let cfg = day_profile(Profile::Day2);
            let a = map_to_twist(&att(roll, pitch, yaw), &cfg);
            let b = map_to_twist(&att(-roll, -pitch, -yaw), &cfg);
            prop_assert_eq!(a.vx, -b.vx);
            prop_assert_eq!(a.vy, -b.vy);
            prop_assert_eq!(a.wz, -b.wz);
            prop_assert!(a.vx.abs() <= cfg.v_max_x && a.vy.abs() <= cfg.v_max_y && a.wz.abs() <= cfg.w_max);
        }

        #[test]
        fn slew_bound_holds(steps in proptest::collection::vec(
            (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0, 0.001f64..0.1), 1..60)) {
            let cfg = day_profile(Profile::Day2);
            let mut st = MapperState::new(0.0);
            let mut t = 0.0;
            for (vx, vy, wz, dt) in steps {
                let prev = st.previous;
                t += dt;
                let cmd = rate_limit(&Twist::new(vx, vy, wz), &mut st, t, &cfg);
                let real_dt = cmd.t - prev.t;
                prop_assert!((cmd.vx - prev.vx).abs() <= cfg.a_max_lin * real_dt + 1e-12);
                prop_assert!((cmd.vy - prev.vy).abs() <= cfg.a_max_lin * real_dt + 1e-12);
                prop_assert!((cmd.wz - prev.wz).abs() <= cfg.a_max_ang * real_dt + 1e-12);
                prop_assert!(cmd.vx.abs() <= cfg.v_max_x && cmd.wz.abs() <= cfg.w_max);
                prop_assert!(cmd.seq > prev.seq);
            }
        }
    }
}
