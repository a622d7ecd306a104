use super::{Event, SessionLog, SessionRecorder, TelemetryError, TickRecord};
use crate::config::PipelineConfig;
use crate::pipeline::{MappingStage, RobotStage};
use crate::pose::{calibrate, parse_pose_log, relative_attitude, TrackerSample};
use crate::sim::{preset_arena, Arena};

/// Either a recorded session or a raw tracker pose log.
#[derive(Debug, Clone, PartialEq)]
pub enum ReplayInput {
    Session(SessionLog),
    Poses(Vec<TrackerSample>),
}

/// Detects the file kind: pose logs have eight columns per record, session
/// logs carry `#` headers and fourteen columns.
pub fn load_replay_input(text: &str) -> Result<ReplayInput, TelemetryError> {
    let is_session = text.lines().any(|l| l.starts_with("#format: ") || l.starts_with("#config_hash: "));
    if is_session {
        return Ok(ReplayInput::Session(SessionLog::parse(text)?));
    }
    let first = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'));
    match first.map(|l| l.split_whitespace().count()) {
        Some(8) | None => Ok(ReplayInput::Poses(parse_pose_log(text)?)),
        Some(_) => Ok(ReplayInput::Session(SessionLog::parse(text)?)),
    }
}

/// Re-feeds the recorded attitudes of a session through mapping and the
/// robot simulation.
///
/// Without `config` the configuration stored in the log is used. A supplied
/// configuration whose hash differs from the recorded one adds a
/// `config_mismatch` event to the first record.
pub fn replay_session(
    log: &SessionLog,
    config: Option<&PipelineConfig>,
    arena: Option<&Arena>,
) -> Result<SessionLog, TelemetryError> {
    let h = &log.header;
    let (cfg, mismatch) = match config {
        Some(c) => (*c, c.hash() != h.config_hash),
        None => (PipelineConfig::from_entries(&h.config)?, false),
    };
    let arena = match arena {
        Some(a) => a.clone(),
        None => Arena::resolve(&h.arena)?,
    };
    let mut recorder = SessionRecorder::new(&h.arena, h.start_time, arena.start, arena.goal, cfg.entries());
    recorder.set_start_wall(h.start_wall);
    let mut mapping = MappingStage::new(cfg.mapping, h.start_time);
    let mut robot = RobotStage::new(arena, h.start_time);
    let mut prev_t = h.start_time;
    for (i, r) in log.records.iter().enumerate() {
        let mut events = Vec::new();
        if i == 0 && mismatch {
            events.push(Event::ConfigMismatch);
        }
        for e in &r.events {
            match e {
                Event::Profile(p) => {
                    mapping.switch_profile(*p);
                    events.push(e.clone());
                }
                Event::Calibrated | Event::Watchdog | Event::Error(_) => events.push(e.clone()),
                Event::Goal | Event::Collision(_) | Event::ConfigMismatch => {}
            }
        }
        let force_stop = events.iter().any(Event::forces_stop);
        let (raw, cmd) = mapping.process(&r.attitude, r.t, force_stop);
        events.extend(robot.advance(&cmd, r.t - prev_t, r.t)?);
        recorder.record(TickRecord {
            t: r.t,
            attitude: r.attitude,
            raw,
            cmd: cmd.twist(),
            pose: robot.state.pose(),
            events,
        })?;
        prev_t = r.t;
    }
    Ok(recorder.finalize())
}

/// Drives the pipeline from raw tracker samples. The first sample is the
/// single calibration pose; each sample is one tick.
pub fn replay_poses(
    samples: &[TrackerSample],
    config: &PipelineConfig,
    arena: &Arena,
) -> Result<SessionLog, TelemetryError> {
    let start = samples.first().map_or(0.0, |s| s.t);
    let mut recorder = SessionRecorder::new(&arena.name, start, arena.start, arena.goal, config.entries());
    let Some(first) = samples.first() else {
        return Ok(recorder.finalize());
    };
    let mount = config.mount.mount();
    let stops = config.mapping.stops();
    let cal = calibrate(&mount.to_rudder(first))?;
    let mut mapping = MappingStage::new(config.mapping, start);
    let mut robot = RobotStage::new(arena.clone(), start);
    let mut prev_t = start;
    for (i, s) in samples.iter().enumerate() {
        let mut events = Vec::new();
        if i == 0 {
            events.push(Event::Calibrated);
        }
        let att = relative_attitude(&mount.to_rudder(s), &cal, &stops)?;
        let (raw, cmd) = mapping.process(&att, s.t, false);
        events.extend(robot.advance(&cmd, s.t - prev_t, s.t)?);
        recorder.record(TickRecord {
            t: s.t,
            attitude: att,
            raw,
            cmd: cmd.twist(),
            pose: robot.state.pose(),
            events,
        })?;
        prev_t = s.t;
    }
    Ok(recorder.finalize())
}

/// Replays either kind of input. Pose logs default to the stored default
/// configuration and the `corridor_40m` arena.
pub fn replay(
    input: &ReplayInput,
    config: Option<&PipelineConfig>,
    arena: Option<&Arena>,
) -> Result<SessionLog, TelemetryError> {
    match input {
        ReplayInput::Session(log) => replay_session(log, config, arena),
        ReplayInput::Poses(samples) => {
            let cfg = config.copied().unwrap_or_default();
            let arena = match arena {
                Some(a) => a.clone(),
                None => preset_arena("corridor_40m")?,
            };
            replay_poses(samples, &cfg, &arena)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::Profile;
    use crate::pose::{format_pose_log, RudderAttitude, UnitQuat};
    use crate::sim::Pose2;
    use crate::mapping::Twist;

    /// Synthetic session: constant half-forward tilt for 4 s.
    fn constant_attitude_log(cfg: &PipelineConfig) -> SessionLog {
        let arena = preset_arena("corridor_40m").unwrap();
        let mut rec = SessionRecorder::new("corridor_40m", 0.0, arena.start, arena.goal, cfg.entries());
        for k in 1..=200 {
            let t = k as f64 * 0.02;
            rec.record(TickRecord {
                t,
                attitude: RudderAttitude::new(0.0, 0.15, 0.0, t),
                raw: Twist::ZERO,
                cmd: Twist::ZERO,
                pose: Pose2::default(),
                events: vec![],
            })
            .unwrap();
        }
        rec.finalize()
    }

    #[test]
    fn replay_is_a_fixed_point() {
        let cfg = PipelineConfig::for_profile(Profile::Day2);
        let once = replay_session(&constant_attitude_log(&cfg), None, None).unwrap();
        let twice = replay_session(&once, None, None).unwrap();
        assert_eq!(once, twice);
        assert_eq!(once.to_text(), twice.to_text());
        let same_cfg = replay_session(&once, Some(&cfg), None).unwrap();
        assert_eq!(same_cfg, once);
    }

    #[test]
    fn doubled_speed_scales_unsaturated_channel() {
        let mut cfg = PipelineConfig::for_profile(Profile::Day1);
        // large slew limit so the limiter never binds after the filter settles
        cfg.mapping.a_max_lin = 100.0;
        let base = replay_session(&constant_attitude_log(&cfg), None, None).unwrap();
        let mut doubled = cfg;
        doubled.mapping.v_max_x *= 2.0;
        let fast = replay_session(&base, Some(&doubled), None).unwrap();
        assert_eq!(fast.records[0].events, vec![Event::ConfigMismatch]);
        // pitch 0.15 is the middle of the active band, half of v_max
        let steady = base.records.len() - 1;
        assert!((base.records[steady].cmd.vx - 0.5 * cfg.mapping.v_max_x).abs() < 1e-12);
        for (a, b) in base.records.iter().zip(&fast.records).skip(100) {
            assert_eq!(b.cmd.vx, 2.0 * a.cmd.vx);
        }
    }

    #[test]
    fn pose_log_replay_calibrates_on_first_sample() {
        let cfg = PipelineConfig::for_profile(Profile::Day2);
        let rest = UnitQuat::from_euler_zyx(0.4, 0.02, -0.01);
        let mut samples = vec![TrackerSample::new(0.0, [0.1, 0.2, 0.9], rest)];
        for k in 1..=150 {
            let tilt = rest.compose(&UnitQuat::ry(0.25));
            samples.push(TrackerSample::new(k as f64 * 0.02, [0.1, 0.2, 0.9], tilt));
        }
        let input = load_replay_input(&format_pose_log(&samples)).unwrap();
        let log = replay(&input, Some(&cfg), None).unwrap();
        assert_eq!(log.records.len(), 151);
        assert_eq!(log.records[0].events, vec![Event::Calibrated]);
        assert_eq!(log.records[0].cmd, Twist::ZERO);
        let last = log.records.last().unwrap();
        assert!((last.attitude.pitch - 0.25).abs() < 1e-9);
        assert_eq!(last.raw.vx, cfg.mapping.v_max_x);
        assert!(last.pose.x > 0.0);
    }

    #[test]
    fn input_detection() {
        let cfg = PipelineConfig::default();
        let text = constant_attitude_log(&cfg).to_text();
        assert!(matches!(load_replay_input(&text).unwrap(), ReplayInput::Session(_)));
        assert!(matches!(load_replay_input("0 0 0 0 1 0 0 0\n").unwrap(), ReplayInput::Poses(_)));
        let cut = &text[..text.len() - 5];
        assert!(matches!(load_replay_input(cut), Err(TelemetryError::Parse { .. })));
    }
}
