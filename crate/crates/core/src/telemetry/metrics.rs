use super::{Event, SessionLog};

/// Commanded speeds below this magnitude count as "no correction" when
/// looking for direction reversals (m/s, or rad/s for the turn rate).
pub const REVERSAL_BAND: f64 = 0.02;

/// Radius around the goal inside which reversals are counted, m.
pub const DEFAULT_GOAL_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SessionMetrics {
    /// Time from session start to the first goal event.
    pub completion_time: Option<f64>,
    pub path_length: f64,
    /// Sign changes of the commanded vx, vy, wz near the goal.
    pub reversals: [usize; 3],
    /// Fraction of the session spent with every axis inside its inactive zone.
    pub time_in_deadzone: f64,
    /// Seconds with at least one axis outside its inactive zone.
    pub time_active: f64,
    pub duration: f64,
    pub peak_speed: f64,
    pub peak_turn_rate: f64,
    pub command_count: usize,
}

impl SessionMetrics {
    pub fn total_reversals(&self) -> usize {
        self.reversals.iter().sum()
    }
}

pub fn compute_metrics(log: &SessionLog, goal_radius: f64) -> SessionMetrics {
    compute_metrics_with(log, goal_radius, REVERSAL_BAND)
}

pub fn compute_metrics_with(log: &SessionLog, goal_radius: f64, band: f64) -> SessionMetrics {
    let start = log.header.start_time;
    let goal = log.header.goal;
    let mut prev_t = start;
    let mut prev_pose = log.header.start_pose;
    let mut path_length = 0.0;
    let mut deadzone_time = 0.0;
    let mut active_time = 0.0;
    let mut peak_speed: f64 = 0.0;
    let mut peak_turn_rate: f64 = 0.0;
    let mut completion_time = None;
    let mut last_sign = [0.0f64; 3];
    let mut reversals = [0usize; 3];

    for r in &log.records {
        let dt = r.t - prev_t;
        if r.raw.is_zero() {
            deadzone_time += dt;
        } else {
            active_time += dt;
        }
        path_length += (r.pose.x - prev_pose.x).hypot(r.pose.y - prev_pose.y);
        peak_speed = peak_speed.max(r.cmd.vx.hypot(r.cmd.vy));
        peak_turn_rate = peak_turn_rate.max(r.cmd.wz.abs());
        if completion_time.is_none() && r.has_event(|e| *e == Event::Goal) {
            completion_time = Some(r.t - start);
        }
        let near_goal = (r.pose.x - goal.cx).hypot(r.pose.y - goal.cy) <= goal_radius;
        if near_goal {
            for (axis, v) in r.cmd.as_array().into_iter().enumerate() {
                if v.abs() < band {
                    continue;
                }
                let sign = v.signum();
                if last_sign[axis] != 0.0 && sign != last_sign[axis] {
                    reversals[axis] += 1;
                }
                last_sign[axis] = sign;
            }
        }
        prev_t = r.t;
        prev_pose = r.pose;
    }
    let duration = log.duration();
    SessionMetrics {
        completion_time,
        path_length,
        reversals,
        time_in_deadzone: if duration > 0.0 { deadzone_time / duration } else { 0.0 },
        time_active: active_time,
        duration,
        peak_speed,
        peak_turn_rate,
        command_count: log.records.len(),
    }
}
