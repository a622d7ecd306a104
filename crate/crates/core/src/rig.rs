//! Forward dynamics of the self-centering rudder.
//!
//! Every axis is an independent torsional oscillator
//! `I·θ̈ = τ_foot − K·θ − c·θ̇` whose stiffness is the sum of its installed
//! springs, bounded by perfectly inelastic mechanical stops.

use std::fmt;

use thiserror::Error;

/// Internal integration step, seconds.
pub const INTERNAL_DT: f64 = 0.002;

/// Largest step a caller may request from [`step`].
pub const MAX_STEP: f64 = 0.02;

/// Simulated time after which [`settle_time`] gives up.
pub const SETTLE_HORIZON: f64 = 10.0;

/// Damping ratio used for the default rig.
pub const DEFAULT_DAMPING_RATIO: f64 = 0.9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RigError {
    #[error("time step must be in (0, {MAX_STEP}] s, got {0}")]
    BadStep(f64),
    #[error("non-finite rig state on {0} axis")]
    NonFinite(Axis),
    #[error("eps must be positive, got {0}")]
    BadTolerance(f64),
    #[error("{axis} axis did not settle within {horizon} s (angle {angle}, velocity {velocity})")]
    NotSettled {
        axis: Axis,
        horizon: f64,
        angle: f64,
        velocity: f64,
    },
    #[error("invalid rig config on {axis} axis: {reason}")]
    InvalidConfig { axis: Axis, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Roll,
    Pitch,
    Yaw,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Roll, Axis::Pitch, Axis::Yaw];

    pub fn name(&self) -> &'static str {
        match self {
            Axis::Roll => "roll",
            Axis::Pitch => "pitch",
            Axis::Yaw => "yaw",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisParams {
    pub n_springs: u32,
    /// Rotational stiffness contributed by one spring, N·m/rad.
    pub k_spring: f64,
    /// Viscous damping, N·m·s/rad.
    pub damping: f64,
    /// Moment of inertia, kg·m².
    pub inertia: f64,
    /// Mechanical stop, radians either side of rest.
    pub stop: f64,
}

impl AxisParams {
    /// Parameters with damping set for the given damping ratio.
    pub fn with_damping_ratio(n_springs: u32, k_spring: f64, inertia: f64, stop: f64, zeta: f64) -> Self {
        let stiffness = n_springs as f64 * k_spring;
        AxisParams {
            n_springs,
            k_spring,
            damping: 2.0 * zeta * (stiffness * inertia).sqrt(),
            inertia,
            stop,
        }
    }

    pub fn stiffness(&self) -> f64 {
        self.n_springs as f64 * self.k_spring
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpringRigConfig {
    pub roll: AxisParams,
    pub pitch: AxisParams,
    pub yaw: AxisParams,
}

impl Default for SpringRigConfig {
    /// Three springs each on the left and right (roll), two each front and
    /// back (pitch), four on the rotary joint.
    fn default() -> Self {
        let zeta = DEFAULT_DAMPING_RATIO;
        SpringRigConfig {
            roll: AxisParams::with_damping_ratio(6, 0.5, 0.05, 0.25, zeta),
            pitch: AxisParams::with_damping_ratio(4, 0.5, 0.05, 0.25, zeta),
            yaw: AxisParams::with_damping_ratio(4, 0.4, 0.08, 0.50, zeta),
        }
    }
}

impl SpringRigConfig {
    pub fn axis(&self, axis: Axis) -> &AxisParams {
        match axis {
            Axis::Roll => &self.roll,
            Axis::Pitch => &self.pitch,
            Axis::Yaw => &self.yaw,
        }
    }

    pub fn axis_mut(&mut self, axis: Axis) -> &mut AxisParams {
        match axis {
            Axis::Roll => &mut self.roll,
            Axis::Pitch => &mut self.pitch,
            Axis::Yaw => &mut self.yaw,
        }
    }

    pub fn validate(&self) -> Result<(), RigError> {
        for axis in Axis::ALL {
            let p = self.axis(axis);
            let reason = if !(p.k_spring.is_finite() && p.k_spring > 0.0) {
                Some("k_spring must be > 0")
            } else if !(p.inertia.is_finite() && p.inertia > 0.0) {
                Some("inertia must be > 0")
            } else if !(p.damping.is_finite() && p.damping >= 0.0) {
                Some("damping must be >= 0")
            } else if !(p.stop.is_finite() && p.stop > 0.0) {
                Some("stop must be > 0")
            } else {
                None
            };
            if let Some(reason) = reason {
                return Err(RigError::InvalidConfig {
                    axis,
                    reason: reason.into(),
                });
            }
        }
        Ok(())
    }
}

pub fn axis_stiffness(axis: Axis, cfg: &SpringRigConfig) -> f64 {
    cfg.axis(axis).stiffness()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AxisState {
    pub angle: f64,
    pub velocity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigState {
    /// Indexed roll, pitch, yaw.
    pub axes: [AxisState; 3],
    pub t: f64,
}

impl RigState {
    pub fn at_rest(t: f64) -> Self {
        Self {
            axes: [AxisState::default(); 3],
            t,
        }
    }

    pub fn axis(&self, axis: Axis) -> AxisState {
        self.axes[axis.index()]
    }

    pub fn axis_mut(&mut self, axis: Axis) -> &mut AxisState {
        &mut self.axes[axis.index()]
    }

    /// `(roll, pitch, yaw)` angles.
    pub fn angles(&self) -> (f64, f64, f64) {
        (self.axes[0].angle, self.axes[1].angle, self.axes[2].angle)
    }

    pub fn energy(&self, cfg: &SpringRigConfig) -> f64 {
        Axis::ALL
            .iter()
            .map(|&a| {
                let p = cfg.axis(a);
                let s = self.axis(a);
                0.5 * p.inertia * s.velocity * s.velocity + 0.5 * p.stiffness() * s.angle * s.angle
            })
            .sum()
    }
}

/// Operator input on the rudder surface.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FootEffort {
    pub torque_roll: f64,
    pub torque_pitch: f64,
    pub torque_yaw: f64,
    pub engaged: bool,
}

impl FootEffort {
    pub const RELEASED: FootEffort = FootEffort {
        torque_roll: 0.0,
        torque_pitch: 0.0,
        torque_yaw: 0.0,
        engaged: false,
    };

    pub fn engaged(torque_roll: f64, torque_pitch: f64, torque_yaw: f64) -> Self {
        Self {
            torque_roll,
            torque_pitch,
            torque_yaw,
            engaged: true,
        }
    }

    /// Torques actually applied: all zero when the feet are off the surface.
    pub fn torque(&self, axis: Axis) -> f64 {
        if !self.engaged {
            return 0.0;
        }
        match axis {
            Axis::Roll => self.torque_roll,
            Axis::Pitch => self.torque_pitch,
            Axis::Yaw => self.torque_yaw,
        }
    }
}

fn integrate_axis(s: AxisState, p: &AxisParams, torque: f64, h: f64) -> AxisState {
    let accel = (torque - p.stiffness() * s.angle - p.damping * s.velocity) / p.inertia;
    let mut velocity = s.velocity + h * accel;
    let mut angle = s.angle + h * velocity;
    if angle >= p.stop {
        angle = p.stop;
        velocity = velocity.min(0.0);
    } else if angle <= -p.stop {
        angle = -p.stop;
        velocity = velocity.max(0.0);
    }
    AxisState { angle, velocity }
}

/// Advances the rig by `dt` using semi-implicit Euler at [`INTERNAL_DT`]
/// resolution.
pub fn step(
    state: &RigState,
    effort: &FootEffort,
    dt: f64,
    cfg: &SpringRigConfig,
) -> Result<RigState, RigError> {
    if !(dt > 0.0 && dt <= MAX_STEP) {
        return Err(RigError::BadStep(dt));
    }
    for axis in Axis::ALL {
        let s = state.axis(axis);
        if !(s.angle.is_finite() && s.velocity.is_finite()) {
            return Err(RigError::NonFinite(axis));
        }
    }
    let substeps = (dt / INTERNAL_DT).ceil().max(1.0) as usize;
    let h = dt / substeps as f64;
    let mut next = *state;
    for axis in Axis::ALL {
        let p = cfg.axis(axis);
        let torque = effort.torque(axis);
        let mut s = state.axis(axis);
        for _ in 0..substeps {
            s = integrate_axis(s, p, torque, h);
        }
        if !(s.angle.is_finite() && s.velocity.is_finite()) {
            return Err(RigError::NonFinite(axis));
        }
        *next.axis_mut(axis) = s;
    }
    next.t = state.t + dt;
    Ok(next)
}

/// Advances by an arbitrary non-negative duration, splitting it into steps
/// no longer than [`MAX_STEP`].
pub fn advance(
    state: &RigState,
    effort: &FootEffort,
    duration: f64,
    cfg: &SpringRigConfig,
) -> Result<RigState, RigError> {
    if duration == 0.0 {
        return Ok(*state);
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(RigError::BadStep(duration));
    }
    let chunks = (duration / MAX_STEP).ceil().max(1.0) as usize;
    let dt = duration / chunks as f64;
    let mut s = *state;
    for _ in 0..chunks {
        s = step(&s, effort, dt, cfg)?;
    }
    s.t = state.t + duration;
    Ok(s)
}

fn is_settled(s: &RigState, eps: f64) -> bool {
    s.axes
        .iter()
        .all(|a| a.angle.abs() < eps && a.velocity.abs() < eps)
}

/// Time for the released rig to come to rest: every |angle| < eps rad and
/// every |velocity| < eps rad/s.
pub fn settle_time(from: &RigState, cfg: &SpringRigConfig, eps: f64) -> Result<f64, RigError> {
    if !(eps > 0.0) {
        return Err(RigError::BadTolerance(eps));
    }
    let mut s = *from;
    let max_steps = (SETTLE_HORIZON / INTERNAL_DT).round() as usize;
    for k in 0..=max_steps {
        if is_settled(&s, eps) {
            return Ok(k as f64 * INTERNAL_DT);
        }
        s = step(&s, &FootEffort::RELEASED, INTERNAL_DT, cfg)?;
    }
    let axis = Axis::ALL
        .into_iter()
        .find(|&a| {
            let st = s.axis(a);
            !(st.angle.abs() < eps && st.velocity.abs() < eps)
        })
        .unwrap_or(Axis::Roll);
    let st = s.axis(axis);
    Err(RigError::NotSettled {
        axis,
        horizon: SETTLE_HORIZON,
        angle: st.angle,
        velocity: st.velocity,
    })
}
