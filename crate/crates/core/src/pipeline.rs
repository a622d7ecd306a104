//! Mapping and robot stages shared by the live service and offline replay,
//! so both paths produce bit-identical telemetry for the same inputs.

use crate::mapping::{day_profile, map_to_twist, rate_limit, MapperState, MappingConfig, Profile, Twist, TwistCommand};
use crate::pose::RudderAttitude;
use crate::sim::{check_collision, goal_reached, integrate, Arena, Outcome, RobotState, SimError};
use crate::telemetry::Event;

/// Copies the speed and acceleration limits of `profile` into `cfg`,
/// keeping deadzones, stops, inversion and smoothing.
pub fn apply_profile(cfg: &MappingConfig, profile: Profile) -> MappingConfig {
    let p = day_profile(profile);
    MappingConfig {
        v_max_x: p.v_max_x,
        v_max_y: p.v_max_y,
        w_max: p.w_max,
        a_max_lin: p.a_max_lin,
        a_max_ang: p.a_max_ang,
        ..*cfg
    }
}

#[derive(Debug, Clone)]
pub struct MappingStage {
    pub cfg: MappingConfig,
    pub state: MapperState,
}

impl MappingStage {
    pub fn new(cfg: MappingConfig, t0: f64) -> Self {
        Self {
            cfg,
            state: MapperState::new(t0),
        }
    }

    /// Maps an attitude to `(raw, limited)`. With `force_stop` the limited
    /// command is exactly zero and the limiter restarts from rest.
    pub fn process(&mut self, att: &RudderAttitude, t: f64, force_stop: bool) -> (Twist, TwistCommand) {
        let raw = map_to_twist(att, &self.cfg);
        if force_stop {
            let seq = self.state.previous.seq + 1;
            self.state.reset(t);
            self.state.previous.seq = seq;
            return (raw, self.state.previous);
        }
        let cmd = rate_limit(&raw, &mut self.state, t, &self.cfg);
        (raw, cmd)
    }

    pub fn switch_profile(&mut self, profile: Profile) {
        self.cfg = apply_profile(&self.cfg, profile);
    }
}

/// The simulated base inside its arena. Once the session reaches the goal or
/// collides, the base is frozen in place.
#[derive(Debug, Clone)]
pub struct RobotStage {
    pub arena: Arena,
    pub state: RobotState,
    pub outcome: Option<Outcome>,
}

impl RobotStage {
    pub fn new(arena: Arena, t0: f64) -> Self {
        let state = RobotState::at(arena.start, t0);
        Self {
            arena,
            state,
            outcome: None,
        }
    }

    pub fn advance(&mut self, cmd: &TwistCommand, dt: f64, t: f64) -> Result<Vec<Event>, SimError> {
        if self.outcome.is_some() {
            self.state.vx = 0.0;
            self.state.vy = 0.0;
            self.state.wz = 0.0;
            self.state.t = t;
            return Ok(Vec::new());
        }
        if dt > 0.0 {
            self.state = integrate(&self.state, cmd, dt)?;
        }
        self.state.t = t;
        if let Some(id) = check_collision(&self.state, &self.arena) {
            self.outcome = Some(Outcome::Collision { t, id });
            return Ok(vec![Event::Collision(id)]);
        }
        if goal_reached(&self.state, &self.arena) {
            self.outcome = Some(Outcome::GoalReached { t });
            return Ok(vec![Event::Goal]);
        }
        Ok(Vec::new())
    }

    pub fn finished(&self) -> bool {
        self.outcome.is_some()
    }
}
