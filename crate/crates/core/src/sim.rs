//! Simulated omnidirectional base and task arenas.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::mapping::{Twist, TwistCommand};

/// Below this turn rate the straight-line limit of the arc is used.
pub const STRAIGHT_LINE_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("non-finite command {0:?}")]
    NonFiniteCommand(Twist),
    #[error("unknown arena {0:?}; presets: corridor_40m, obstacle_field")]
    UnknownArena(String),
    #[error("arena line {line}: {reason}")]
    ArenaParse { line: usize, reason: String },
    #[error("invalid arena: {0}")]
    InvalidArena(String),
    #[error("reading arena file: {0}")]
    Io(String),
}

/// Wraps an angle into (−π, π].
pub fn normalize_angle(a: f64) -> f64 {
    let wrapped = (a + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped <= -PI {
        wrapped + 2.0 * PI
    } else {
        wrapped
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub vx: f64,
    pub vy: f64,
    pub wz: f64,
    pub t: f64,
}

impl RobotState {
    pub fn at(pose: Pose2, t: f64) -> Self {
        Self {
            x: pose.x,
            y: pose.y,
            heading: normalize_angle(pose.heading),
            t,
            ..Default::default()
        }
    }

    pub fn pose(&self) -> Pose2 {
        Pose2 {
            x: self.x,
            y: self.y,
            heading: self.heading,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

/// Exact integration of a constant body-frame twist held for `dt`.
pub fn integrate(state: &RobotState, cmd: &TwistCommand, dt: f64) -> Result<RobotState, SimError> {
    let twist = cmd.twist();
    if !twist.is_finite() {
        return Err(SimError::NonFiniteCommand(twist));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::BadStep(dt));
    }
    let h0 = state.heading;
    let turn = twist.wz * dt;
    // ∫cos(h0 + wz·s) ds and ∫sin(h0 + wz·s) ds over [0, dt]
    let (int_cos, int_sin) = if twist.wz.abs() < STRAIGHT_LINE_EPS {
        let mid = h0 + 0.5 * turn;
        (dt * mid.cos(), dt * mid.sin())
    } else {
        let h1 = h0 + turn;
        (
            (h1.sin() - h0.sin()) / twist.wz,
            (h0.cos() - h1.cos()) / twist.wz,
        )
    };
    Ok(RobotState {
        x: state.x + twist.vx * int_cos - twist.vy * int_sin,
        y: state.y + twist.vx * int_sin + twist.vy * int_cos,
        heading: normalize_angle(h0 + turn),
        vx: twist.vx,
        vy: twist.vy,
        wz: twist.wz,
        t: state.t + dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            x0: x0.min(x1),
            y0: y0.min(y1),
            x1: x0.max(x1),
            y1: y0.max(y1),
        }
    }

    /// Euclidean distance from a point to the rectangle (0 inside).
    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        let dx = (self.x0 - x).max(0.0).max(x - self.x1);
        let dy = (self.y0 - y).max(0.0).max(y - self.y1);
        dx.hypot(dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Obstacle {
    Circle(Circle),
    Rect(Rect),
}

impl Obstacle {
    /// Distance from a point to the obstacle boundary, zero or negative inside.
    pub fn clearance(&self, x: f64, y: f64) -> f64 {
        match self {
            Obstacle::Circle(c) => (x - c.cx).hypot(y - c.cy) - c.r,
            Obstacle::Rect(r) => r.distance_to(x, y),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arena {
    pub name: String,
    pub bounds: Rect,
    pub obstacles: Vec<Obstacle>,
    pub start: Pose2,
    pub goal: Circle,
    pub robot_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CollisionKind {
    /// Index into [`Arena::obstacles`].
    Obstacle(usize),
    OutOfBounds,
}

impl fmt::Display for CollisionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CollisionKind::Obstacle(id) => write!(f, "{id}"),
            CollisionKind::OutOfBounds => f.write_str("bounds"),
        }
    }
}

impl std::str::FromStr for CollisionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "bounds" {
            return Ok(CollisionKind::OutOfBounds);
        }
        s.parse::<usize>()
            .map(CollisionKind::Obstacle)
            .map_err(|_| format!("bad collision id {s:?}"))
    }
}

/// Disc-versus-world test; touching counts as a collision. Obstacles are
/// checked before the boundary and the lowest index wins.
pub fn check_collision(state: &RobotState, arena: &Arena) -> Option<CollisionKind> {
    let r = arena.robot_radius;
    if let Some(id) = arena
        .obstacles
        .iter()
        .position(|o| o.clearance(state.x, state.y) <= r)
    {
        return Some(CollisionKind::Obstacle(id));
    }
    let b = &arena.bounds;
    if state.x - r <= b.x0 || state.x + r >= b.x1 || state.y - r <= b.y0 || state.y + r >= b.y1 {
        return Some(CollisionKind::OutOfBounds);
    }
    None
}

pub fn goal_reached(state: &RobotState, arena: &Arena) -> bool {
    (state.x - arena.goal.cx).hypot(state.y - arena.goal.cy) <= arena.goal.r
}

impl Arena {
    pub fn validate(&self) -> Result<(), SimError> {
        let start = RobotState::at(self.start, 0.0);
        if let Some(hit) = check_collision(&start, self) {
            return Err(SimError::InvalidArena(format!(
                "start pose collides ({hit})"
            )));
        }
        let b = &self.bounds;
        let g = &self.goal;
        if !(g.cx - g.r >= b.x0 && g.cx + g.r <= b.x1 && g.cy - g.r >= b.y0 && g.cy + g.r <= b.y1)
        {
            return Err(SimError::InvalidArena("goal region leaves the bounds".into()));
        }
        if !(self.robot_radius > 0.0) {
            return Err(SimError::InvalidArena("robot_radius must be > 0".into()));
        }
        Ok(())
    }

    /// Serializes to the line-oriented arena file format.
    pub fn to_text(&self) -> String {
        let b = &self.bounds;
        let mut out = format!("# arena {}\nbounds {} {} {} {}\n", self.name, b.x0, b.y0, b.x1, b.y1);
        for o in &self.obstacles {
            match o {
                Obstacle::Circle(c) => out.push_str(&format!("circle {} {} {}\n", c.cx, c.cy, c.r)),
                Obstacle::Rect(r) => {
                    out.push_str(&format!("rect {} {} {} {}\n", r.x0, r.y0, r.x1, r.y1))
                }
            }
        }
        let s = &self.start;
        let g = &self.goal;
        out.push_str(&format!("start {} {} {}\n", s.x, s.y, s.heading));
        out.push_str(&format!("goal {} {} {}\n", g.cx, g.cy, g.r));
        out.push_str(&format!("robot_radius {}\n", self.robot_radius));
        out
    }

    /// Parses the arena file format: one primitive per line (`bounds`,
    /// `circle`, `rect`, `start`, `goal`, `robot_radius`), `#` comments.
    pub fn parse(name: &str, text: &str) -> Result<Arena, SimError> {
        let mut bounds = None;
        let mut start = None;
        let mut goal = None;
        let mut robot_radius = None;
        let mut obstacles = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| SimError::ArenaParse {
                line: line_no,
                reason,
            };
            let mut parts = line.split_whitespace();
            let kind = parts.next().unwrap_or_default();
            let nums = parts
                .map(|p| {
                    p.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| err(format!("bad number {p:?}")))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            let expect = |n: usize| {
                if nums.len() == n {
                    Ok(())
                } else {
                    Err(err(format!("{kind} takes {n} numbers, found {}", nums.len())))
                }
            };
            match kind {
                "bounds" => {
                    expect(4)?;
                    bounds = Some(Rect::new(nums[0], nums[1], nums[2], nums[3]));
                }
                "circle" => {
                    expect(3)?;
                    obstacles.push(Obstacle::Circle(Circle {
                        cx: nums[0],
                        cy: nums[1],
                        r: nums[2],
                    }));
                }
                "rect" => {
                    expect(4)?;
                    obstacles.push(Obstacle::Rect(Rect::new(nums[0], nums[1], nums[2], nums[3])));
                }
                "start" => {
                    expect(3)?;
                    start = Some(Pose2 {
                        x: nums[0],
                        y: nums[1],
                        heading: nums[2],
                    });
                }
                "goal" => {
                    expect(3)?;
                    goal = Some(Circle {
                        cx: nums[0],
                        cy: nums[1],
                        r: nums[2],
                    });
                }
                "robot_radius" => {
                    expect(1)?;
                    robot_radius = Some(nums[0]);
                }
                other => return Err(err(format!("unknown primitive {other:?}"))),
            }
        }
        let missing = |what: &str| SimError::InvalidArena(format!("missing `{what}` line"));
        let arena = Arena {
            name: name.to_string(),
            bounds: bounds.ok_or_else(|| missing("bounds"))?,
            obstacles,
            start: start.ok_or_else(|| missing("start"))?,
            goal: goal.ok_or_else(|| missing("goal"))?,
            robot_radius: robot_radius.ok_or_else(|| missing("robot_radius"))?,
        };
        arena.validate()?;
        Ok(arena)
    }

    pub fn load(path: &Path) -> Result<Arena, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Arena::parse(&path.display().to_string(), &text)
    }

    /// Preset name, or else a path to an arena file.
    pub fn resolve(name_or_path: &str) -> Result<Arena, SimError> {
        match preset_arena(name_or_path) {
            Ok(a) => Ok(a),
            Err(unknown) => {
                let path = Path::new(name_or_path);
                if path.is_file() {
                    Arena::load(path)
                } else {
                    Err(unknown)
                }
            }
        }
    }
}

pub const PRESET_NAMES: [&str; 2] = ["corridor_40m", "obstacle_field"];

/// Built-in task arenas.
///
/// `corridor_40m` is a straight 3 m wide corridor with the goal 40 m ahead.
/// `obstacle_field` is a 12 m × 8 m field crossed by two walls, each with a
/// single 1.2 m gate, plus four scattered posts. Obstacle 0 is the lower part
/// of the first wall, straight ahead of the start.
pub fn preset_arena(name: &str) -> Result<Arena, SimError> {
    match name {
        "corridor_40m" => Ok(Arena {
            name: name.into(),
            bounds: Rect::new(-1.5, -1.5, 41.5, 1.5),
            obstacles: Vec::new(),
            start: Pose2::default(),
            goal: Circle {
                cx: 40.0,
                cy: 0.0,
                r: 0.5,
            },
            robot_radius: 0.4,
        }),
        "obstacle_field" => Ok(Arena {
            name: name.into(),
            bounds: Rect::new(0.0, 0.0, 12.0, 8.0),
            obstacles: vec![
                // first wall, gate y ∈ [5.0, 6.2]
                Obstacle::Rect(Rect::new(3.5, 0.0, 4.0, 5.0)),
                Obstacle::Rect(Rect::new(3.5, 6.2, 4.0, 8.0)),
                // second wall, gate y ∈ [1.8, 3.0]
                Obstacle::Rect(Rect::new(7.5, 3.0, 8.0, 8.0)),
                Obstacle::Rect(Rect::new(7.5, 0.0, 8.0, 1.8)),
                Obstacle::Circle(Circle { cx: 1.8, cy: 1.6, r: 0.5 }),
                Obstacle::Circle(Circle { cx: 5.8, cy: 7.0, r: 0.45 }),
                Obstacle::Circle(Circle { cx: 5.6, cy: 1.2, r: 0.5 }),
                Obstacle::Circle(Circle { cx: 10.2, cy: 6.6, r: 0.5 }),
            ],
            start: Pose2 {
                x: 1.0,
                y: 4.0,
                heading: 0.0,
            },
            goal: Circle {
                cx: 11.0,
                cy: 4.0,
                r: 0.5,
            },
            robot_radius: 0.35,
        }),
        other => Err(SimError::UnknownArena(other.to_string())),
    }
}

/// Produces the command for the next tick.
pub trait TwistSource {
    fn next_twist(&mut self, t: f64, state: &RobotState) -> Twist;
}

impl<F> TwistSource for F
where
    F: FnMut(f64, &RobotState) -> Twist,
{
    fn next_twist(&mut self, t: f64, state: &RobotState) -> Twist {
        self(t, state)
    }
}

/// Open-loop playback of a stored command sequence; zero once exhausted.
#[derive(Debug, Clone)]
pub struct ScriptedTwists {
    twists: Vec<Twist>,
    next: usize,
}

impl ScriptedTwists {
    pub fn new(twists: Vec<Twist>) -> Self {
        Self { twists, next: 0 }
    }
}

impl TwistSource for ScriptedTwists {
    fn next_twist(&mut self, _t: f64, _state: &RobotState) -> Twist {
        let tw = self.twists.get(self.next).copied().unwrap_or(Twist::ZERO);
        self.next += 1;
        tw
    }
}

/// Holonomic waypoint follower: drives straight at each waypoint in turn
/// while holding heading, slowing down on the final approach.
#[derive(Debug, Clone)]
pub struct WaypointFollower {
    pub waypoints: Vec<(f64, f64)>,
    pub speed: f64,
    pub switch_radius: f64,
    current: usize,
}

impl WaypointFollower {
    pub fn new(waypoints: Vec<(f64, f64)>, speed: f64) -> Self {
        Self {
            waypoints,
            speed,
            switch_radius: 0.1,
            current: 0,
        }
    }
}

impl TwistSource for WaypointFollower {
    fn next_twist(&mut self, _t: f64, state: &RobotState) -> Twist {
        while let Some(&(wx, wy)) = self.waypoints.get(self.current) {
            let last = self.current + 1 == self.waypoints.len();
            let dist = (wx - state.x).hypot(wy - state.y);
            if dist < self.switch_radius && !last {
                self.current += 1;
                continue;
            }
            if dist < 1e-3 {
                return Twist::ZERO;
            }
            let speed = if last { self.speed.min(dist) } else { self.speed };
            let (ex, ey) = ((wx - state.x) / dist * speed, (wy - state.y) / dist * speed);
            let (s, c) = state.heading.sin_cos();
            return Twist::new(c * ex + s * ey, -s * ex + c * ey, 0.0);
        }
        Twist::ZERO
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    GoalReached { t: f64 },
    Collision { t: f64, id: CollisionKind },
    Timeout { t: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    /// Start state followed by one state per tick.
    pub trajectory: Vec<RobotState>,
    pub commands: Vec<TwistCommand>,
    pub outcome: Outcome,
}

/// Runs a closed-loop session: each tick integrates, then checks collisions,
/// then checks the goal.
pub fn run_session(
    arena: &Arena,
    source: &mut dyn TwistSource,
    dt: f64,
    max_t: f64,
) -> Result<SessionResult, SimError> {
    if !(dt > 0.0 && dt <= 0.05) {
        return Err(SimError::BadStep(dt));
    }
    let mut state = RobotState::at(arena.start, 0.0);
    let mut trajectory = vec![state];
    let mut commands = Vec::new();
    let ticks = (max_t / dt - 1e-9).ceil().max(0.0) as u64;
    for k in 1..=ticks {
        let t = k as f64 * dt;
        let twist = source.next_twist(state.t, &state);
        let cmd = TwistCommand::from_twist(twist, t, k);
        let mut next = integrate(&state, &cmd, dt)?;
        next.t = t;
        state = next;
        trajectory.push(state);
        commands.push(cmd);
        if let Some(id) = check_collision(&state, arena) {
            return Ok(SessionResult {
                trajectory,
                commands,
                outcome: Outcome::Collision { t, id },
            });
        }
        if goal_reached(&state, arena) {
            return Ok(SessionResult {
                trajectory,
                commands,
                outcome: Outcome::GoalReached { t },
            });
        }
    }
    Ok(SessionResult {
        trajectory,
        commands,
        outcome: Outcome::Timeout {
            t: ticks as f64 * dt,
        },
    })
}
