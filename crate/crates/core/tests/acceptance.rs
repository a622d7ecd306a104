//! Acceptance suite: one line per criterion, non-zero exit on any failure.
//!
//! Every check computes its expected values independently of the library
//! (closed forms, hand-built logs, direct geometry) and compares at the
//! stated tolerance.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rudder_core::bench::{task5, task8, task8_twists};
use rudder_core::config::PipelineConfig;
use rudder_core::mapping::{day_profile, map_to_twist, normalize_axis, rate_limit, MapperState, MappingConfig, Profile, Twist, TwistCommand};
use rudder_core::pose::{relative_attitude, CalibrationState, RudderAttitude, TrackerSample, UnitQuat};
use rudder_core::protocol::{format_message, parse_bytes, parse_message, StateFields, WireMessage, MAX_LINE_BYTES};
use rudder_core::rig::{self, AxisParams, AxisState, FootEffort, RigState, SpringRigConfig};
use rudder_core::service::{run_script, DriveScript};
use rudder_core::sim::{integrate, preset_arena, Obstacle, Outcome, Pose2, RobotState};
use rudder_core::telemetry::{compute_metrics, Event, SessionLog, SessionRecorder, TickRecord};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_mapping(r: &mut ChaCha8Rng) -> MappingConfig {
    let mut cfg = day_profile(if r.random_bool(0.5) { Profile::Day1 } else { Profile::Day2 });
    cfg.dead_roll = r.random_range(0.0..0.1);
    cfg.dead_pitch = r.random_range(0.0..0.1);
    cfg.dead_yaw = r.random_range(0.0..0.2);
    cfg.stop_rp = r.random_range(0.15..0.4);
    cfg.stop_yaw = r.random_range(0.3..0.8);
    cfg.invert_roll = r.random_bool(0.5);
    cfg.invert_pitch = r.random_bool(0.5);
    cfg.invert_yaw = r.random_bool(0.5);
    cfg
}

fn deadzone_zero_at_rest() -> Check {
    let start = Instant::now();
    let mut r = rng(1);
    let n = 100_000;
    for i in 0..n {
        let cfg = if i % 2 == 0 { day_profile(Profile::Day2) } else { random_mapping(&mut r) };
        // strictly inside, boundary included as the closed inactive zone
        let mut inside = |dead: f64| if dead == 0.0 { 0.0 } else { r.random_range(-dead..=dead) };
        let att = RudderAttitude::new(inside(cfg.dead_roll), inside(cfg.dead_pitch), inside(cfg.dead_yaw), 0.0);
        let tw = map_to_twist(&att, &cfg);
        ensure!(tw.vx == 0.0 && tw.vy == 0.0 && tw.wz == 0.0, "nonzero {tw:?} for {att:?}");
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 5.0, "took {secs:.2} s");
    Ok(format!("{n} cases, 0 failures, {secs:.2} s"))
}

fn normalize_continuity() -> Check {
    let start = Instant::now();
    let n = 1_000_000;
    let mut worst: f64 = 0.0;
    for (dead, stop) in [(0.05, 0.25), (0.08, 0.5)] {
        let (lo, hi) = (-stop - 0.1, stop + 0.1);
        let mut prev = normalize_axis(lo, dead, stop);
        for i in 1..n {
            let a = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let v = normalize_axis(a, dead, stop);
            ensure!(v >= prev, "decrease at {a}: {prev} -> {v}");
            worst = worst.max(v - prev);
            prev = v;
        }
        ensure!(prev == 1.0 && normalize_axis(lo, dead, stop) == -1.0, "range end values wrong");
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(worst < 1e-4, "max adjacent jump {worst:e}");
    ensure!(secs < 5.0, "took {secs:.2} s");
    Ok(format!("max jump {worst:.2e}, monotone, {secs:.2} s"))
}

fn slew_limit() -> Check {
    let mut r = rng(3);
    let mut worst: f64 = f64::NEG_INFINITY;
    let sequences = 10_000;
    for _ in 0..sequences {
        let mut cfg = random_mapping(&mut r);
        cfg.smoothing_alpha = r.random_range(0.05..=1.0);
        let mut state = MapperState::new(0.0);
        let mut t = 0.0;
        let mut prev = Twist::ZERO;
        for _ in 0..40 {
            let dt = r.random_range(0.001..0.1);
            t += dt;
            let raw = Twist::new(
                r.random_range(-3.0..3.0),
                r.random_range(-3.0..3.0),
                r.random_range(-3.0..3.0),
            );
            let cmd = rate_limit(&raw, &mut state, t, &cfg).twist();
            for (d, a) in [
                (cmd.vx - prev.vx, cfg.a_max_lin),
                (cmd.vy - prev.vy, cfg.a_max_lin),
                (cmd.wz - prev.wz, cfg.a_max_ang),
            ] {
                let excess = d.abs() - (a * dt + 1e-12);
                worst = worst.max(excess);
                ensure!(excess <= 0.0, "|dv|={} > a*dt={} ", d.abs(), a * dt);
            }
            prev = cmd;
        }
    }
    Ok(format!("{sequences} sequences, 0 failures (max margin {worst:.1e})"))
}

fn self_centering_chain() -> Check {
    let cfg = PipelineConfig::default();
    let rig_cfg = cfg.rig;
    let m = cfg.mapping;
    let stops = m.stops();
    let cal = CalibrationState::identity(0.0);
    let mut r = rng(4);
    let dt = 0.02;
    let mut worst: f64 = 0.0;
    for case in 0..100 {
        let mut s = RigState::at_rest(0.0);
        for (axis, p) in s.axes.iter_mut().zip([rig_cfg.roll, rig_cfg.pitch, rig_cfg.yaw]) {
            *axis = AxisState {
                angle: r.random_range(-p.stop..=p.stop),
                velocity: r.random_range(-2.0..=2.0),
            };
        }
        let mut mapper = MapperState::new(0.0);
        let mut t = 0.0;
        let settled = |s: &RigState| s.axes.iter().all(|a| a.angle.abs() < 1e-3 && a.velocity.abs() < 1e-3);
        while !settled(&s) {
            s = rig::step(&s, &FootEffort::RELEASED, dt, &rig_cfg).map_err(|e| e.to_string())?;
            t += dt;
            let (roll, pitch, yaw) = s.angles();
            let sample = TrackerSample::new(t, [0.0; 3], UnitQuat::from_euler_zyx(yaw, pitch, roll));
            let att = relative_attitude(&sample, &cal, &stops).map_err(|e| e.to_string())?;
            rate_limit(&map_to_twist(&att, &m), &mut mapper, t, &m);
            ensure!(t <= 2.0 + 1e-9, "case {case} not settled by 2 s: {s:?}");
        }
        worst = worst.max(t);
        // first command after settling
        s = rig::step(&s, &FootEffort::RELEASED, dt, &rig_cfg).map_err(|e| e.to_string())?;
        t += dt;
        let (roll, pitch, yaw) = s.angles();
        let sample = TrackerSample::new(t, [0.0; 3], UnitQuat::from_euler_zyx(yaw, pitch, roll));
        let att = relative_attitude(&sample, &cal, &stops).map_err(|e| e.to_string())?;
        let cmd = rate_limit(&map_to_twist(&att, &m), &mut mapper, t, &m);
        ensure!(cmd.twist() == Twist::ZERO, "case {case}: post-settle command {cmd:?}");
    }
    Ok(format!("100 states, worst settle {worst:.2} s, post-settle command zero"))
}

fn spring_equilibrium() -> Check {
    let mut r = rng(5);
    let mut worst: f64 = 0.0;
    for axis in rig::Axis::ALL {
        for _ in 0..20 {
            let n = r.random_range(2..=8u32);
            let k = r.random_range(0.2..1.0);
            let inertia = r.random_range(0.02..0.2);
            let zeta = r.random_range(0.5..1.5);
            let stop = r.random_range(0.2..0.6);
            let mut cfg = SpringRigConfig::default();
            *cfg.axis_mut(axis) = AxisParams::with_damping_ratio(n, k, inertia, stop, zeta);
            // target inside the stops so the stop never engages at equilibrium
            let tau = r.random_range(-0.9..0.9) * stop * n as f64 * k;
            let expected = tau / (n as f64 * k);
            let torques = rig::Axis::ALL.map(|a| if a == axis { tau } else { 0.0 });
            let effort = FootEffort::engaged(torques[0], torques[1], torques[2]);
            let s = rig::advance(&RigState::at_rest(0.0), &effort, 40.0, &cfg).map_err(|e| e.to_string())?;
            let err = (s.axis(axis).angle - expected).abs();
            worst = worst.max(err);
            ensure!(err < 1e-4, "{axis}: theta={} expected {expected}", s.axis(axis).angle);
        }
    }
    Ok(format!("60 pairs, max error {worst:.1e} rad"))
}

fn wrap_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

fn kinematics_oracle() -> Check {
    let mut r = rng(6);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let v = r.random_range(0.1..2.0);
        let w: f64 = r.random_range(0.2..2.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
        let t = PI / w.abs();
        let cmd = TwistCommand::from_twist(Twist::new(v, 0.0, w), 0.0, 1);
        let start = RobotState::at(Pose2::default(), 0.0);
        let end = integrate(&start, &cmd, t).map_err(|e| e.to_string())?;
        let (ex, ey) = (0.0, 2.0 * v / w);
        let err = (end.x - ex).abs().max((end.y - ey).abs()).max(wrap_diff(end.heading, PI));
        worst = worst.max(err);
        ensure!(err < 1e-9, "v={v} w={w}: ({}, {}, {})", end.x, end.y, end.heading);

        let n = r.random_range(2..200);
        let mut s = start;
        for _ in 0..n {
            s = integrate(&s, &cmd, t / n as f64).map_err(|e| e.to_string())?;
        }
        let err = (s.x - end.x).abs().max((s.y - end.y).abs()).max(wrap_diff(s.heading, end.heading));
        worst = worst.max(err);
        ensure!(err < 1e-9, "{n} sub-steps differ by {err:e}");
    }
    Ok(format!("50 arcs + sub-step composition, max error {worst:.1e}"))
}

/// Time to cover `d` from rest under a trapezoidal speed profile.
fn trapezoid_time(d: f64, v: f64, a: f64) -> f64 {
    if d >= v * v / a {
        v / a + (d - v * v / (2.0 * a)) / v
    } else {
        2.0 * (d / a).sqrt()
    }
}

fn task5_emulation() -> Check {
    let start = Instant::now();
    let arena = preset_arena("corridor_40m").map_err(|e| e.to_string())?;
    let distance = (arena.goal.cx - arena.start.x).hypot(arena.goal.cy - arena.start.y) - arena.goal.r;
    let mut times = Vec::new();
    for profile in [Profile::Day2, Profile::Day1] {
        let run = task5(profile).map_err(|e| e.to_string())?;
        let Outcome::GoalReached { t } = run.outcome else {
            return Err(format!("{profile}: {:?}", run.outcome));
        };
        times.push(t);
        if profile == Profile::Day2 {
            let p = day_profile(profile);
            let oracle = trapezoid_time(distance, p.v_max_x, p.a_max_lin);
            let rel = (t - oracle).abs() / oracle;
            ensure!(rel <= 0.05, "day2 {t:.3} s vs oracle {oracle:.3} s ({:.1}%)", rel * 100.0);
        }
    }
    ensure!(times[1] > times[0], "day1 {} s not slower than day2 {} s", times[1], times[0]);
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 10.0, "took {secs:.2} s");
    let p = day_profile(Profile::Day2);
    Ok(format!(
        "day2 {:.2} s (oracle {:.2} s), day1 {:.2} s, {secs:.2} s wall",
        times[0],
        trapezoid_time(distance, p.v_max_x, p.a_max_lin),
        times[1]
    ))
}

fn clearance(o: &Obstacle, x: f64, y: f64) -> f64 {
    match o {
        Obstacle::Circle(c) => (x - c.cx).hypot(y - c.cy) - c.r,
        Obstacle::Rect(r) => {
            let dx = (r.x0 - x).max(0.0).max(x - r.x1);
            let dy = (r.y0 - y).max(0.0).max(y - r.y1);
            dx.hypot(dy)
        }
    }
}

fn task8_emulation() -> Check {
    let arena = preset_arena("obstacle_field").map_err(|e| e.to_string())?;
    let twists = task8_twists().map_err(|e| e.to_string())?;
    let nominal = task8(&twists, 0.0).map_err(|e| e.to_string())?;
    ensure!(matches!(nominal.outcome, Outcome::GoalReached { .. }), "nominal run: {:?}", nominal.outcome);
    // independent geometric check of the whole trajectory
    let b = &arena.bounds;
    let min_clear = nominal
        .trajectory
        .iter()
        .map(|s| {
            let walls = (s.x - b.x0).min(b.x1 - s.x).min(s.y - b.y0).min(b.y1 - s.y);
            arena.obstacles.iter().map(|o| clearance(o, s.x, s.y)).fold(walls, f64::min)
        })
        .fold(f64::INFINITY, f64::min);
    ensure!(min_clear > arena.robot_radius, "path clearance {min_clear} <= radius");
    ensure!(min_clear < arena.robot_radius + 0.3, "path clearance {min_clear} leaves room for +0.3 m");
    for inflation in [0.3, 0.35, 0.5] {
        let run = task8(&twists, inflation).map_err(|e| e.to_string())?;
        ensure!(matches!(run.outcome, Outcome::Collision { .. }), "+{inflation} m: {:?}", run.outcome);
    }
    let Outcome::GoalReached { t } = nominal.outcome else { unreachable!() };
    Ok(format!(
        "goal at {t:.2} s, min clearance {:.3} m over radius {}, +0.3 m collides",
        min_clear, arena.robot_radius
    ))
}

fn approach_log(vx: &[f64]) -> SessionLog {
    let arena = preset_arena("corridor_40m").unwrap();
    let mut rec = SessionRecorder::new("corridor_40m", 0.0, arena.start, arena.goal, PipelineConfig::default().entries());
    for (i, &v) in vx.iter().enumerate() {
        let t = (i + 1) as f64 * 0.02;
        // all inside the 2 m approach radius
        rec.record(TickRecord {
            t,
            attitude: RudderAttitude::new(0.0, 0.0, 0.0, t),
            raw: Twist::ZERO,
            cmd: Twist::new(v, 0.0, 0.0),
            pose: Pose2 { x: 39.0, y: 0.0, heading: 0.0 },
            events: vec![],
        })
        .unwrap();
    }
    rec.finalize()
}

fn overshoot_metric() -> Check {
    // one-directional corrections: slow down, stop, creep forward again
    let golden = [1.0, 0.6, 0.3, 0.0, 0.0, 0.2, 0.1, 0.0, 0.05, 0.0];
    let m = compute_metrics(&approach_log(&golden), 2.0);
    ensure!(m.total_reversals() == 0, "golden log scored {}", m.total_reversals());
    let run = task5(Profile::Day2).map_err(|e| e.to_string())?;
    let m = compute_metrics(&run.log, 2.0);
    ensure!(m.total_reversals() == 0, "scripted approach scored {}", m.total_reversals());
    for k in [1usize, 2, 5] {
        let mut vx = vec![0.5, 0.3];
        let mut sign = 1.0;
        for _ in 0..k {
            sign = -sign;
            vx.extend([0.0, 0.2 * sign, 0.3 * sign]);
        }
        let m = compute_metrics(&approach_log(&vx), 2.0);
        ensure!(m.reversals[0] == k, "{k} flips scored {}", m.reversals[0]);
    }
    Ok("golden logs 0, adversarial k=1,2,5 scored exactly k".into())
}

fn end_to_end_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let script = dir.path().join("script.txt");
    std::fs::write(
        &script,
        "EFFORT seq=1 t=0 roll=0.25 pitch=1.2 yaw=-0.14 engaged=1\n\
         CFG seq=2 t=1.5 profile=day2\n\
         EFFORT seq=3 t=3 roll=-0.25 pitch=1.5 yaw=0.14 engaged=1\n\
         SILENCE t=4\n\
         CAL seq=4 t=6.5\n\
         EFFORT seq=5 t=7 roll=0 pitch=0.8 yaw=0 engaged=1\n",
    )
    .map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for run in 0..2 {
        let log = dir.path().join(format!("run{run}.log"));
        let csv = dir.path().join(format!("run{run}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_rudder"))
            .args(["drive", "--arena", "corridor_40m", "--max-t", "8", "--script"])
            .arg(&script)
            .arg("--log")
            .arg(&log)
            .arg("--csv")
            .arg(&csv)
            .env_remove("RUDDER_CONFIG")
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(status.status.success(), "drive failed: {}", String::from_utf8_lossy(&status.stderr));
        outputs.push((std::fs::read(&log).unwrap(), std::fs::read(&csv).unwrap()));
    }
    ensure!(outputs[0].0 == outputs[1].0, "session logs differ");
    ensure!(outputs[0].1 == outputs[1].1, "CSV exports differ");
    let csv = String::from_utf8_lossy(&outputs[0].1);
    let header: Vec<&str> = csv.lines().next().unwrap_or("").split(',').collect();
    ensure!(["t", "vx", "vy", "wz"].iter().all(|c| header.contains(c)), "CSV header {header:?}");
    let rows = csv.lines().count() - 1;
    ensure!(rows == 400, "expected 400 rows, found {rows}");
    Ok(format!("2 runs byte-identical ({} log bytes, {rows} CSV rows)", outputs[0].0.len()))
}

fn random_message(r: &mut ChaCha8Rng) -> WireMessage {
    let num = |r: &mut ChaCha8Rng| match r.random_range(0..4) {
        0 => 0.0,
        1 => r.random_range(-1e3..1e3),
        2 => Some(f64::from_bits(r.next_u64())).filter(|v| v.is_finite()).unwrap_or(1e300),
        _ => r.random_range(-5.0..5.0_f64).round() / 8.0,
    };
    let seq = r.next_u64();
    let t = num(r).abs();
    match r.random_range(0..7) {
        0 => WireMessage::Cmd { seq, t, vx: num(r), vy: num(r), wz: num(r) },
        1 => WireMessage::Effort {
            seq,
            t,
            effort: FootEffort {
                torque_roll: num(r),
                torque_pitch: num(r),
                torque_yaw: num(r),
                engaged: r.random_bool(0.5),
            },
        },
        2 => WireMessage::State {
            seq,
            t,
            state: StateFields {
                roll: num(r),
                pitch: num(r),
                yaw: num(r),
                vx: num(r),
                vy: num(r),
                wz: num(r),
                x: num(r),
                y: num(r),
                heading: num(r),
                tripped: r.random_bool(0.5),
                event: ["-", "goal", "watchdog,collision:3", "calibrated", "profile:day1", "error:rig"][r.random_range(0..6)].into(),
            },
        },
        3 => WireMessage::Cal { seq, t },
        4 => WireMessage::Cfg { seq, t, profile: if r.random_bool(0.5) { Profile::Day1 } else { Profile::Day2 } },
        5 => WireMessage::Ping { seq, t },
        _ => WireMessage::Pong { seq, t },
    }
}

fn protocol_robustness() -> Check {
    let mut r = rng(11);
    let lines = 1_000_000;
    let mut valid = 0usize;
    let mut buf = Vec::with_capacity(2 * MAX_LINE_BYTES);
    for i in 0..lines {
        buf.clear();
        if i % 2 == 0 {
            let len = r.random_range(0..=(MAX_LINE_BYTES + 64));
            buf.extend((0..len).map(|_| r.random::<u8>()));
        } else {
            // mutate a valid line: flip, insert or delete a few bytes
            buf.extend_from_slice(format_message(&random_message(&mut r)).as_bytes());
            for _ in 0..r.random_range(1..4) {
                let pos = r.random_range(0..=buf.len());
                match r.random_range(0..3) {
                    0 if pos < buf.len() => buf[pos] = r.random(),
                    1 => buf.insert(pos, b"=x 0.-e\n\r\x00"[r.random_range(0..10)]),
                    _ if pos < buf.len() => {
                        buf.remove(pos);
                    }
                    _ => {}
                }
            }
        }
        if let Ok(msg) = parse_bytes(&buf) {
            valid += 1;
            let text = format_message(&msg);
            ensure!(parse_message(&text).as_ref() == Ok(&msg), "valid fuzz line does not round-trip: {text}");
        }
    }
    let generated = 100_000;
    for _ in 0..generated {
        let msg = random_message(&mut r);
        let text = format_message(&msg);
        let back = parse_message(&text).map_err(|e| format!("{e} for {text}"))?;
        ensure!(back == msg, "round trip changed {text}");
        ensure!(format_message(&back) == text, "format not canonical for {text}");
    }

    // input loss: last EFFORT delivered at t = 2.0, then silence
    let cfg = PipelineConfig::default();
    let arena = preset_arena("corridor_40m").map_err(|e| e.to_string())?;
    let script = DriveScript::parse("EFFORT seq=1 t=0 roll=0 pitch=1.5 yaw=0 engaged=1\nSILENCE t=2.01\n").map_err(|e| e.to_string())?;
    let run = run_script(&cfg, &arena, &script, 5.0).map_err(|e| e.to_string())?;
    let last_input = 2.0;
    let tick = cfg.service.tick_dt();
    let trip = run
        .log
        .records
        .iter()
        .find(|rec| rec.events.contains(&Event::Watchdog))
        .map(|rec| rec.t)
        .ok_or("watchdog never tripped")?;
    ensure!(trip <= last_input + cfg.service.watchdog_timeout + tick + 1e-9, "tripped at {trip}");
    ensure!(trip > last_input + cfg.service.watchdog_timeout, "tripped early at {trip}");
    ensure!(
        run.log.records.iter().filter(|rec| rec.t >= trip).all(|rec| rec.cmd == Twist::ZERO),
        "command not held at zero after trip"
    );
    Ok(format!(
        "{lines} fuzzed lines ({valid} valid) without a crash, {generated} generated messages round-trip, watchdog tripped at {trip:.2} s"
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("deadzone zero at rest", deadzone_zero_at_rest),
        ("normalize_axis continuity and monotonicity", normalize_continuity),
        ("slew limit", slew_limit),
        ("self-centering chain", self_centering_chain),
        ("spring equilibrium", spring_equilibrium),
        ("kinematics oracle", kinematics_oracle),
        ("corridor full-forward emulation", task5_emulation),
        ("obstacle field emulation", task8_emulation),
        ("overshoot metric", overshoot_metric),
        ("end-to-end determinism", end_to_end_determinism),
        ("protocol robustness", protocol_robustness),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
