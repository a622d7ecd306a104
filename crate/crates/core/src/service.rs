//! The control service: a single owner of all pipeline state.
//!
//! Inputs arrive through [`Service::handle_message`] and
//! [`Service::push_tracker_sample`]; [`Service::tick`] advances the rig,
//! derives the attitude, maps it to a command, moves the simulated base,
//! records telemetry and returns one `CMD` and one `STATE` message. Time is
//! always passed in, so a [`VirtualClock`] makes whole sessions reproducible.

use std::cell::Cell;
use std::time::{Duration, Instant};

use log::warn;
use thiserror::Error;

use crate::config::{ConfigError, PipelineConfig};
use crate::mapping::Twist;
use crate::pipeline::{MappingStage, RobotStage};
use crate::pose::{calibrate, relative_attitude, CalibrationState, PoseError, RudderAttitude, TrackerMount, TrackerSample, UnitQuat};
use crate::protocol::{parse_message, RejectCounts, StateFields, WireMessage};
use crate::rig::{self, FootEffort, RigState};
use crate::sim::{Arena, Outcome};
use crate::telemetry::{format_events, Event, SessionLog, SessionRecorder, TickRecord};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Pose(#[from] PoseError),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error("script line {line}: {reason}")]
    Script { line: usize, reason: String },
}

/// Source of monotonic time in seconds.
pub trait Clock {
    fn now(&self) -> f64;
    /// Blocks (or, for virtual time, jumps) until `now() >= t`.
    fn sleep_until(&self, t: f64);
}

/// Seconds since construction, from the OS monotonic clock.
#[derive(Debug, Clone, Copy)]
pub struct WallClock {
    origin: Instant,
}

impl WallClock {
    pub fn new() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }

    fn sleep_until(&self, t: f64) {
        let wait = t - self.now();
        if wait > 0.0 {
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

/// Manually driven time.
#[derive(Debug, Default)]
pub struct VirtualClock {
    t: Cell<f64>,
}

impl VirtualClock {
    pub fn new(t: f64) -> Self {
        Self { t: Cell::new(t) }
    }

    pub fn set(&self, t: f64) {
        self.t.set(t);
    }

    pub fn advance(&self, dt: f64) {
        self.t.set(self.t.get() + dt);
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> f64 {
        self.t.get()
    }

    fn sleep_until(&self, t: f64) {
        if t > self.t.get() {
            self.t.set(t);
        }
    }
}

/// Input-silence detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WatchdogState {
    pub last_input: f64,
    pub last_output: f64,
    pub timeout: f64,
    pub tripped: bool,
}

impl WatchdogState {
    /// Starts armed: the first `timeout` seconds count as fresh.
    pub fn new(timeout: f64, t0: f64) -> Self {
        Self {
            last_input: t0,
            last_output: t0,
            timeout,
            tripped: false,
        }
    }

    pub fn feed(&mut self, now: f64) {
        self.last_input = self.last_input.max(now);
        self.tripped = false;
    }

    /// Latches `tripped` once the silence exceeds the timeout; only
    /// [`feed`](Self::feed) clears it.
    pub fn check(&mut self, now: f64) -> bool {
        if now - self.last_input > self.timeout {
            self.tripped = true;
        }
        self.last_output = now;
        self.tripped
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputMode {
    /// Foot torques drive the simulated spring rig.
    Effort,
    /// Tracker samples are taken as the rudder pose; the rig is bypassed.
    Tracker,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickOutput {
    pub cmd: WireMessage,
    pub state: WireMessage,
}

impl TickOutput {
    pub fn into_messages(self) -> [WireMessage; 2] {
        [self.cmd, self.state]
    }
}

#[derive(Debug)]
pub struct Service {
    cfg: PipelineConfig,
    mode: InputMode,
    mount: TrackerMount,
    rig: RigState,
    effort: FootEffort,
    latest_sample: Option<TrackerSample>,
    calibration: Option<CalibrationState>,
    mapping: MappingStage,
    robot: RobotStage,
    watchdog: WatchdogState,
    recorder: SessionRecorder,
    last_tick: f64,
    out_seq: u64,
    pending_profile: Option<crate::mapping::Profile>,
    pending_cal: bool,
    last_cmd: Twist,
    last_state: StateFields,
    pub rejects: RejectCounts,
    /// Well-formed messages that a service does not accept (CMD, STATE, PONG).
    pub ignored: u64,
}

impl Service {
    pub fn new(cfg: PipelineConfig, arena: Arena, t0: f64) -> Result<Self, ServiceError> {
        cfg.validate()?;
        let recorder = SessionRecorder::new(&arena.name, t0, arena.start, arena.goal, cfg.entries());
        let robot = RobotStage::new(arena, t0);
        let pose = robot.state.pose();
        Ok(Self {
            mode: InputMode::Effort,
            mount: cfg.mount.mount(),
            rig: RigState::at_rest(t0),
            effort: FootEffort::RELEASED,
            latest_sample: None,
            calibration: Some(CalibrationState::identity(t0)),
            mapping: MappingStage::new(cfg.mapping, t0),
            robot,
            watchdog: WatchdogState::new(cfg.service.watchdog_timeout, t0),
            recorder,
            last_tick: t0,
            out_seq: 0,
            pending_profile: None,
            pending_cal: false,
            last_cmd: Twist::ZERO,
            last_state: StateFields {
                x: pose.x,
                y: pose.y,
                heading: pose.heading,
                event: "-".into(),
                ..StateFields::default()
            },
            rejects: RejectCounts::default(),
            ignored: 0,
            cfg,
        })
    }

    /// Switches to tracker input. The first sample received calibrates.
    pub fn with_tracker_input(mut self) -> Self {
        self.mode = InputMode::Tracker;
        self.calibration = None;
        self
    }

    pub fn set_start_wall(&mut self, unix_seconds: f64) {
        self.recorder.set_start_wall(unix_seconds);
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn mode(&self) -> InputMode {
        self.mode
    }

    pub fn rig(&self) -> &RigState {
        &self.rig
    }

    pub fn robot(&self) -> &RobotStage {
        &self.robot
    }

    pub fn mapping(&self) -> &MappingStage {
        &self.mapping
    }

    pub fn watchdog(&self) -> &WatchdogState {
        &self.watchdog
    }

    pub fn calibration(&self) -> Option<&CalibrationState> {
        self.calibration.as_ref()
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.robot.outcome
    }

    pub fn finished(&self) -> bool {
        self.robot.finished()
    }

    pub fn last_tick(&self) -> f64 {
        self.last_tick
    }

    pub fn records(&self) -> &[TickRecord] {
        self.recorder.records()
    }

    /// Orientation a tracker on the rig would report right now.
    pub fn virtual_tracker(&self) -> TrackerSample {
        let (roll, pitch, yaw) = self.rig.angles();
        let rudder = UnitQuat::from_euler_zyx(yaw, pitch, roll);
        TrackerSample::new(self.rig.t, [0.0; 3], self.mount.to_tracker(&rudder))
    }

    fn current_sample(&self) -> Option<TrackerSample> {
        match self.mode {
            InputMode::Effort => Some(self.virtual_tracker()),
            InputMode::Tracker => self.latest_sample,
        }
    }

    fn next_seq(&mut self) -> u64 {
        self.out_seq += 1;
        self.out_seq
    }

    /// Parses and dispatches one line; malformed lines are counted and dropped.
    pub fn handle_line(&mut self, line: &str, now: f64) -> Vec<WireMessage> {
        match parse_message(line) {
            Ok(msg) => self.handle_message(msg, now),
            Err(r) => {
                self.rejects.count(r);
                Vec::new()
            }
        }
    }

    /// Applies an inbound message and returns any immediate replies.
    pub fn handle_message(&mut self, msg: WireMessage, now: f64) -> Vec<WireMessage> {
        match msg {
            WireMessage::Effort { effort, .. } => {
                if self.mode == InputMode::Effort {
                    self.effort = effort;
                    self.watchdog.feed(now);
                } else {
                    self.ignored += 1;
                }
            }
            WireMessage::Cal { .. } => self.handle_cal(),
            WireMessage::Cfg { profile, .. } => self.pending_profile = Some(profile),
            WireMessage::Ping { .. } => {
                let seq = self.next_seq();
                return vec![WireMessage::Pong { seq, t: now }];
            }
            WireMessage::Cmd { .. } | WireMessage::State { .. } | WireMessage::Pong { .. } => self.ignored += 1,
        }
        Vec::new()
    }

    /// Installs the instantaneous pose as the new zero.
    pub fn handle_cal(&mut self) {
        let Some(sample) = self.current_sample() else {
            warn!("calibration requested before any tracker sample");
            return;
        };
        match calibrate(&self.mount.to_rudder(&sample)) {
            Ok(cal) => {
                self.calibration = Some(cal);
                self.pending_cal = true;
            }
            Err(e) => warn!("calibration rejected: {e}"),
        }
    }

    /// Accepts one tracker sample (tracker input mode). The first sample
    /// becomes the calibration pose.
    pub fn push_tracker_sample(&mut self, sample: TrackerSample, now: f64) -> Result<(), ServiceError> {
        sample.orientation.validate()?;
        if self.calibration.is_none() {
            self.calibration = Some(calibrate(&self.mount.to_rudder(&sample))?);
            self.pending_cal = true;
        }
        self.latest_sample = Some(sample);
        self.watchdog.feed(now);
        Ok(())
    }

    fn attitude(&self, now: f64) -> Result<RudderAttitude, PoseError> {
        let stops = self.mapping.cfg.stops();
        let (Some(sample), Some(cal)) = (self.current_sample(), self.calibration.as_ref()) else {
            return Ok(RudderAttitude::new(0.0, 0.0, 0.0, now));
        };
        let att = relative_attitude(&self.mount.to_rudder(&sample), cal, &stops)?;
        Ok(RudderAttitude { t: now, ..att })
    }

    /// Runs one control period ending at `now`.
    ///
    /// A non-advancing clock (`now` not after the previous tick) repeats the
    /// previous outputs with fresh sequence numbers and records nothing.
    pub fn tick(&mut self, now: f64) -> TickOutput {
        let dt = now - self.last_tick;
        if !(dt > 0.0 && now.is_finite()) {
            return self.emit(self.last_tick);
        }

        let mut events = Vec::new();
        if let Some(p) = self.pending_profile.take() {
            self.mapping.switch_profile(p);
            events.push(Event::Profile(p));
        }
        if std::mem::take(&mut self.pending_cal) {
            events.push(Event::Calibrated);
        }
        let tripped = self.watchdog.check(now);
        if tripped {
            events.push(Event::Watchdog);
        }

        let effort = if tripped || self.mode == InputMode::Tracker {
            FootEffort::RELEASED
        } else {
            self.effort
        };
        let mut fault = None;
        match rig::advance(&self.rig, &effort, dt, &self.cfg.rig) {
            Ok(next) => self.rig = next,
            Err(e) => {
                // restart the rig from rest rather than carry a broken state
                fault = Some(e.to_string());
                self.rig = RigState::at_rest(now);
            }
        }
        let attitude = match self.attitude(now) {
            Ok(att) => att,
            Err(e) => {
                fault.get_or_insert(e.to_string());
                RudderAttitude::new(0.0, 0.0, 0.0, now)
            }
        };
        if let Some(what) = &fault {
            events.push(Event::error(what));
        }

        let (raw, mut cmd) = self.mapping.process(&attitude, now, tripped || fault.is_some());
        match self.robot.advance(&cmd, dt, now) {
            Ok(ev) => events.extend(ev),
            Err(e) => {
                events.push(Event::error(&e.to_string()));
                let seq = cmd.seq;
                self.mapping.state.reset(now);
                self.mapping.state.previous.seq = seq;
                cmd = self.mapping.state.previous;
            }
        }
        self.last_tick = now;

        let pose = self.robot.state.pose();
        self.last_cmd = cmd.twist();
        self.last_state = StateFields {
            roll: attitude.roll,
            pitch: attitude.pitch,
            yaw: attitude.yaw,
            vx: cmd.vx,
            vy: cmd.vy,
            wz: cmd.wz,
            x: pose.x,
            y: pose.y,
            heading: pose.heading,
            tripped,
            event: format_events(&events),
        };
        let record = TickRecord {
            t: now,
            attitude,
            raw,
            cmd: cmd.twist(),
            pose,
            events,
        };
        if let Err(e) = self.recorder.record(record) {
            warn!("telemetry record dropped: {e}");
        }
        self.emit(now)
    }

    fn emit(&mut self, t: f64) -> TickOutput {
        let Twist { vx, vy, wz } = self.last_cmd;
        let cmd = WireMessage::Cmd {
            seq: self.next_seq(),
            t,
            vx,
            vy,
            wz,
        };
        let state = WireMessage::State {
            seq: self.next_seq(),
            t,
            state: self.last_state.clone(),
        };
        TickOutput { cmd, state }
    }

    /// Seals the session log.
    pub fn finish(self) -> SessionLog {
        self.recorder.finalize()
    }
}

/// One line of a drive script.
#[derive(Debug, Clone, PartialEq)]
pub enum ScriptEntry {
    /// An inbound wire message delivered at its own `t`. `EFFORT` is held:
    /// it is re-sent every tick until the next `EFFORT` or `SILENCE`.
    Message(WireMessage),
    /// Stops re-sending the held effort, simulating input loss.
    Silence { t: f64 },
}

impl ScriptEntry {
    pub fn t(&self) -> f64 {
        match self {
            ScriptEntry::Message(m) => m.t(),
            ScriptEntry::Silence { t } => *t,
        }
    }
}

/// Timed inbound messages for a virtual-clock session.
///
/// ```text
/// # t is the delivery time on the virtual clock
/// EFFORT seq=1 t=0 roll=0 pitch=1.2 yaw=0 engaged=1
/// CFG seq=2 t=5 profile=day2
/// SILENCE t=8
/// ```
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DriveScript {
    pub entries: Vec<ScriptEntry>,
}

impl DriveScript {
    pub fn parse(text: &str) -> Result<Self, ServiceError> {
        let mut entries: Vec<ScriptEntry> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| ServiceError::Script { line: idx + 1, reason };
            let entry = if let Some(rest) = line.strip_prefix("SILENCE ") {
                let t = rest
                    .trim()
                    .strip_prefix("t=")
                    .and_then(|v| v.parse::<f64>().ok())
                    .filter(|t| t.is_finite())
                    .ok_or_else(|| err(format!("bad SILENCE line {line:?}")))?;
                ScriptEntry::Silence { t }
            } else {
                let msg = parse_message(line).map_err(|r| err(format!("{r}: {line:?}")))?;
                match msg {
                    WireMessage::Effort { .. } | WireMessage::Cal { .. } | WireMessage::Cfg { .. } | WireMessage::Ping { .. } => {
                        ScriptEntry::Message(msg)
                    }
                    other => return Err(err(format!("{} is not an input message", other.type_name()))),
                }
            };
            if let Some(prev) = entries.last() {
                if entry.t() < prev.t() {
                    return Err(err(format!("t={} goes back from t={}", entry.t(), prev.t())));
                }
            }
            entries.push(entry);
        }
        Ok(Self { entries })
    }

    /// Holds one constant effort from t = 0.
    pub fn constant(effort: FootEffort) -> Self {
        Self {
            entries: vec![ScriptEntry::Message(WireMessage::Effort { seq: 1, t: 0.0, effort })],
        }
    }
}

/// Result of a virtual-clock session.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveRun {
    pub log: SessionLog,
    pub outcome: Outcome,
    /// Every outbound message in emission order.
    pub outputs: Vec<WireMessage>,
}

// Tick k is at k·dt; compare script times with a little slack for rounding.
const TIME_SLACK: f64 = 1e-9;

fn finish_run(svc: Service, outputs: Vec<WireMessage>) -> DriveRun {
    let t = svc.last_tick();
    let outcome = svc.outcome().unwrap_or(Outcome::Timeout { t });
    DriveRun {
        log: svc.finish(),
        outcome,
        outputs,
    }
}

/// Plays `script` against a fresh service on a virtual clock starting at 0,
/// until the base reaches the goal, collides, or `max_t` elapses.
pub fn run_script(cfg: &PipelineConfig, arena: &Arena, script: &DriveScript, max_t: f64) -> Result<DriveRun, ServiceError> {
    let clock = VirtualClock::new(0.0);
    let mut svc = Service::new(*cfg, arena.clone(), clock.now())?;
    let dt = cfg.service.tick_dt();
    let ticks = (max_t / dt + TIME_SLACK).floor() as u64;
    let mut held: Option<FootEffort> = None;
    let mut in_seq = 0u64;
    let mut next = 0;
    let mut outputs = Vec::new();
    for k in 1..=ticks {
        clock.sleep_until(k as f64 * dt);
        let now = clock.now();
        while let Some(entry) = script.entries.get(next).filter(|e| e.t() <= now + TIME_SLACK) {
            match entry {
                ScriptEntry::Message(WireMessage::Effort { effort, .. }) => held = Some(*effort),
                ScriptEntry::Message(msg) => outputs.extend(svc.handle_message(msg.clone(), now)),
                ScriptEntry::Silence { .. } => held = None,
            }
            next += 1;
        }
        if let Some(effort) = held {
            in_seq += 1;
            svc.handle_message(WireMessage::Effort { seq: in_seq, t: now, effort }, now);
        }
        outputs.extend(svc.tick(now).into_messages());
        if svc.finished() {
            break;
        }
    }
    Ok(finish_run(svc, outputs))
}

/// Feeds recorded tracker samples through the tick loop: each sample is
/// delivered at its own timestamp, shifted so the first lands on the first
/// tick. Runs until
/// the last sample has been consumed, the session ends, or `max_t`.
pub fn run_poses(cfg: &PipelineConfig, arena: &Arena, samples: &[TrackerSample], max_t: f64) -> Result<DriveRun, ServiceError> {
    let clock = VirtualClock::new(0.0);
    let mut svc = Service::new(*cfg, arena.clone(), clock.now())?.with_tracker_input();
    let dt = cfg.service.tick_dt();
    let t0 = samples.first().map_or(0.0, |s| s.t);
    let last = samples.last().map_or(0.0, |s| s.t - t0);
    let ticks = (max_t.min(last + dt) / dt).round() as u64;
    let mut next = 0;
    let mut outputs = Vec::new();
    for k in 1..=ticks {
        clock.sleep_until(k as f64 * dt);
        let now = clock.now();
        while let Some(s) = samples.get(next).filter(|s| s.t - t0 + dt <= now + TIME_SLACK) {
            svc.push_tracker_sample(TrackerSample { t: now, ..*s }, now)?;
            next += 1;
        }
        outputs.extend(svc.tick(now).into_messages());
        if svc.finished() {
            break;
        }
    }
    Ok(finish_run(svc, outputs))
}
