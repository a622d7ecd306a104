//! Reference scenarios, shared by the `bench` command and the test suites.

use std::fmt;
use std::time::Instant;

use crate::config::PipelineConfig;
use crate::mapping::{Profile, Twist};
use crate::rig::{settle_time, AxisState, FootEffort, RigState, SpringRigConfig};
use crate::service::{run_script, DriveRun, DriveScript, ServiceError};
use crate::sim::{preset_arena, run_session, Outcome, SessionResult, SimError, WaypointFollower};
use crate::telemetry::export_channels;

/// Pitch torque that pins the rig against its forward stop, N·m.
pub const FULL_FORWARD_TORQUE: f64 = 1.5;

/// Route through both gates of `obstacle_field`.
pub const TASK8_WAYPOINTS: [(f64, f64); 5] = [(2.5, 5.6), (5.0, 5.6), (6.5, 2.4), (9.0, 2.4), (11.0, 4.0)];
pub const TASK8_SPEED: f64 = 0.8;
pub const TASK8_DT: f64 = 0.02;
pub const TASK8_MAX_T: f64 = 60.0;

pub fn full_forward() -> FootEffort {
    FootEffort::engaged(0.0, FULL_FORWARD_TORQUE, 0.0)
}

/// Full forward effort held down the 40 m corridor.
pub fn task5(profile: Profile) -> Result<DriveRun, ServiceError> {
    let cfg = PipelineConfig::for_profile(profile);
    let arena = preset_arena("corridor_40m")?;
    run_script(&cfg, &arena, &DriveScript::constant(full_forward()), 120.0)
}

/// Command sequence recorded once from the waypoint follower on the nominal
/// obstacle field; played back open loop afterwards.
pub fn task8_twists() -> Result<Vec<Twist>, SimError> {
    let arena = preset_arena("obstacle_field")?;
    let mut follower = WaypointFollower::new(TASK8_WAYPOINTS.to_vec(), TASK8_SPEED);
    let run = run_session(&arena, &mut follower, TASK8_DT, TASK8_MAX_T)?;
    Ok(run.commands.iter().map(|c| c.twist()).collect())
}

/// Plays the stored task-8 commands with the robot radius grown by `inflation`.
pub fn task8(twists: &[Twist], inflation: f64) -> Result<SessionResult, SimError> {
    let mut arena = preset_arena("obstacle_field")?;
    arena.robot_radius += inflation;
    let mut script = crate::sim::ScriptedTwists::new(twists.to_vec());
    run_session(&arena, &mut script, TASK8_DT, TASK8_MAX_T)
}

/// Worst settle time over a grid of displaced, moving rig states.
pub fn worst_settle_time(cfg: &SpringRigConfig, eps: f64) -> Result<f64, crate::rig::RigError> {
    let fractions = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let velocities = [-2.0, 0.0, 2.0];
    let mut worst: f64 = 0.0;
    for &f in &fractions {
        for &v in &velocities {
            let mut s = RigState::at_rest(0.0);
            for (axis_state, p) in s.axes.iter_mut().zip([cfg.roll, cfg.pitch, cfg.yaw]) {
                *axis_state = AxisState {
                    angle: f * p.stop,
                    velocity: v,
                };
            }
            worst = worst.max(settle_time(&s, cfg, eps)?);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchLine {
    pub name: String,
    pub result: String,
    pub wall_ms: f64,
}

impl fmt::Display for BenchLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<28} {:<44} {:>8.1} ms", self.name, self.result, self.wall_ms)
    }
}

fn outcome_text(o: &Outcome) -> String {
    match o {
        Outcome::GoalReached { t } => format!("goal at {t:.2} s"),
        Outcome::Collision { t, id } => format!("collision ({id}) at {t:.2} s"),
        Outcome::Timeout { t } => format!("timeout at {t:.2} s"),
    }
}

fn timed(name: &str, f: impl FnOnce() -> String) -> BenchLine {
    let start = Instant::now();
    let result = f();
    BenchLine {
        name: name.into(),
        result,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Runs every reference scenario once.
pub fn run_all() -> Vec<BenchLine> {
    let mut lines = Vec::new();
    for profile in Profile::ALL {
        lines.push(timed(&format!("corridor full-forward {profile}"), || match task5(profile) {
            Ok(run) => outcome_text(&run.outcome),
            Err(e) => format!("error: {e}"),
        }));
    }
    let twists = task8_twists();
    for (label, inflation) in [("nominal", 0.0), ("radius +0.3 m", 0.3)] {
        lines.push(timed(&format!("obstacle field {label}"), || {
            match twists.as_ref().map_err(|e| e.to_string()).and_then(|tw| task8(tw, inflation).map_err(|e| e.to_string())) {
                Ok(r) => outcome_text(&r.outcome),
                Err(e) => format!("error: {e}"),
            }
        }));
    }
    lines.push(timed("self-centering worst case", || {
        match worst_settle_time(&SpringRigConfig::default(), 1e-3) {
            Ok(t) => format!("settles within {t:.3} s"),
            Err(e) => format!("error: {e}"),
        }
    }));
    lines.push(timed("scripted drive determinism", || {
        let a = task5(Profile::Day2);
        let b = task5(Profile::Day2);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                let same = a.log.to_text() == b.log.to_text() && export_channels(&a.log) == export_channels(&b.log);
                format!("{} ({} ticks)", if same { "identical" } else { "DIFFERENT" }, a.log.records.len())
            }
            (Err(e), _) | (_, Err(e)) => format!("error: {e}"),
        }
    }));
    lines
}
