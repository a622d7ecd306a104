//! Python bindings for the rudder controller.
//!
//! Angles are radians, rates rad/s, speeds m/s, times seconds. Wire messages
//! cross the boundary as text lines; session logs as their text form.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rudder_core::config::PipelineConfig;
use rudder_core::mapping::{self, MapperState, MappingConfig as CoreMapping, Profile, Twist};
use rudder_core::pose::{self, CalibrationState, RudderAttitude, Stops, TrackerSample, UnitQuat};
use rudder_core::protocol::{self, WireMessage};
use rudder_core::rig::{self, FootEffort, RigState, SpringRigConfig};
use rudder_core::service::{self, DriveScript};
use rudder_core::sim::{self, Arena as CoreArena, Outcome, Pose2, RobotState};
use rudder_core::telemetry::{self, SessionLog};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn profile(name: &str) -> PyResult<Profile> {
    name.parse().map_err(value_err)
}

/// Unit quaternion (w, x, y, z).
#[pyclass(name = "Quat", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyQuat(UnitQuat);

#[pymethods]
impl PyQuat {
    /// Normalizes the input; fails on zero or non-finite components.
    #[new]
    fn new(w: f64, x: f64, y: f64, z: f64) -> PyResult<Self> {
        UnitQuat::normalize(w, x, y, z).map(Self).map_err(value_err)
    }

    #[staticmethod]
    fn identity() -> Self {
        Self(UnitQuat::IDENTITY)
    }

    /// Intrinsic Z-Y-X rotation.
    #[staticmethod]
    fn from_euler_zyx(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self(UnitQuat::from_euler_zyx(yaw, pitch, roll))
    }

    /// Returns `(yaw, pitch, roll)`.
    fn to_euler_zyx(&self) -> (f64, f64, f64) {
        self.0.to_euler_zyx()
    }

    fn compose(&self, other: &PyQuat) -> Self {
        Self(self.0.compose(&other.0))
    }

    fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    fn components(&self) -> (f64, f64, f64, f64) {
        (self.0.w, self.0.x, self.0.y, self.0.z)
    }

    fn __repr__(&self) -> String {
        format!("Quat({}, {}, {}, {})", self.0.w, self.0.x, self.0.y, self.0.z)
    }
}

#[pyclass(name = "Calibration", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyCalibration(CalibrationState);

#[pymethods]
impl PyCalibration {
    #[getter]
    fn q_ref(&self) -> PyQuat {
        PyQuat(self.0.q_ref)
    }

    #[getter]
    fn t_cal(&self) -> f64 {
        self.0.t_cal
    }
}

/// Installs `q` (sampled at `t`) as the rest orientation.
#[pyfunction]
fn calibrate(q: &PyQuat, t: f64) -> PyResult<PyCalibration> {
    pose::calibrate(&TrackerSample::new(t, [0.0; 3], q.0))
        .map(PyCalibration)
        .map_err(value_err)
}

/// Attitude of `q` relative to the calibration, clamped to the stops.
/// Returns `(roll, pitch, yaw)`.
#[pyfunction]
#[pyo3(signature = (q, cal, stop_rp = 0.25, stop_yaw = 0.5))]
fn relative_attitude(q: &PyQuat, cal: &PyCalibration, stop_rp: f64, stop_yaw: f64) -> PyResult<(f64, f64, f64)> {
    let stops = Stops {
        roll_pitch: stop_rp,
        yaw: stop_yaw,
    };
    let att = pose::relative_attitude(&TrackerSample::new(cal.0.t_cal, [0.0; 3], q.0), &cal.0, &stops).map_err(value_err)?;
    Ok((att.roll, att.pitch, att.yaw))
}

/// Deadzones, stops, limits and smoothing for the attitude-to-twist map.
#[pyclass(name = "MappingConfig", from_py_object)]
#[derive(Clone, Copy)]
struct PyMappingConfig {
    inner: CoreMapping,
}

macro_rules! config_fields {
    ($($field:ident: $ty:ty),* $(,)?) => {
        #[pymethods]
        impl PyMappingConfig {
            #[new]
            #[pyo3(signature = (profile = "day1"))]
            fn new(profile: &str) -> PyResult<Self> {
                Ok(Self { inner: mapping::day_profile(self::profile(profile)?) })
            }

            /// Returns a copy with the given fields replaced.
            #[pyo3(signature = (**changes))]
            fn replace(&self, changes: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
                let mut out = *self;
                if let Some(changes) = changes {
                    for (k, v) in changes.iter() {
                        out.set(&k.extract::<String>()?, &v)?;
                    }
                }
                out.inner.validate().map_err(value_err)?;
                Ok(out)
            }

            fn validate(&self) -> PyResult<()> {
                self.inner.validate().map_err(value_err)
            }

            fn as_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
                let d = PyDict::new(py);
                $(d.set_item(stringify!($field), self.inner.$field)?;)*
                Ok(d)
            }

            $(
                #[getter]
                fn $field(&self) -> $ty {
                    self.inner.$field
                }
            )*
        }

        impl PyMappingConfig {
            fn set(&mut self, key: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
                match key {
                    $(stringify!($field) => self.inner.$field = value.extract()?,)*
                    _ => return Err(value_err(format!("unknown mapping field {key:?}"))),
                }
                Ok(())
            }
        }
    };
}

config_fields! {
    dead_roll: f64,
    dead_pitch: f64,
    dead_yaw: f64,
    stop_rp: f64,
    stop_yaw: f64,
    v_max_x: f64,
    v_max_y: f64,
    w_max: f64,
    a_max_lin: f64,
    a_max_ang: f64,
    invert_roll: bool,
    invert_pitch: bool,
    invert_yaw: bool,
    smoothing_alpha: f64,
}

/// Preset `day1` or `day2` mapping configuration.
#[pyfunction]
fn day_profile(name: &str) -> PyResult<PyMappingConfig> {
    Ok(PyMappingConfig {
        inner: mapping::day_profile(profile(name)?),
    })
}

#[pyfunction]
fn normalize_axis(angle: f64, dead: f64, stop: f64) -> f64 {
    mapping::normalize_axis(angle, dead, stop)
}

/// Raw body twist `(vx, vy, wz)` for an attitude.
#[pyfunction]
fn map_to_twist(roll: f64, pitch: f64, yaw: f64, cfg: &PyMappingConfig) -> (f64, f64, f64) {
    let tw = mapping::map_to_twist(&RudderAttitude::new(roll, pitch, yaw, 0.0), &cfg.inner);
    (tw.vx, tw.vy, tw.wz)
}

/// Smoothing and slew limiting of raw twists.
#[pyclass(name = "RateLimiter")]
struct PyRateLimiter {
    cfg: CoreMapping,
    state: MapperState,
}

#[pymethods]
impl PyRateLimiter {
    #[new]
    #[pyo3(signature = (cfg, t0 = 0.0))]
    fn new(cfg: &PyMappingConfig, t0: f64) -> Self {
        Self {
            cfg: cfg.inner,
            state: MapperState::new(t0),
        }
    }

    /// Returns the limited `(vx, vy, wz)` at time `t`.
    fn step(&mut self, vx: f64, vy: f64, wz: f64, t: f64) -> (f64, f64, f64) {
        let cmd = mapping::rate_limit(&Twist::new(vx, vy, wz), &mut self.state, t, &self.cfg);
        (cmd.vx, cmd.vy, cmd.wz)
    }

    fn reset(&mut self, t: f64) {
        self.state.reset(t);
    }
}

/// Three-axis spring-return rig with the default parameters.
#[pyclass(name = "SpringRig")]
struct PySpringRig {
    cfg: SpringRigConfig,
    state: RigState,
}

#[pymethods]
impl PySpringRig {
    #[new]
    fn new() -> Self {
        Self {
            cfg: SpringRigConfig::default(),
            state: RigState::at_rest(0.0),
        }
    }

    /// Advances by `dt` seconds under the given torques (N·m).
    #[pyo3(signature = (dt, roll = 0.0, pitch = 0.0, yaw = 0.0, engaged = true))]
    fn advance(&mut self, dt: f64, roll: f64, pitch: f64, yaw: f64, engaged: bool) -> PyResult<()> {
        let effort = if engaged {
            FootEffort::engaged(roll, pitch, yaw)
        } else {
            FootEffort::RELEASED
        };
        self.state = rig::advance(&self.state, &effort, dt, &self.cfg).map_err(value_err)?;
        Ok(())
    }

    /// Sets the angles (and optionally rates) of all three axes.
    #[pyo3(signature = (roll, pitch, yaw, rates = (0.0, 0.0, 0.0)))]
    fn set_state(&mut self, roll: f64, pitch: f64, yaw: f64, rates: (f64, f64, f64)) {
        for (a, (angle, velocity)) in self.state.axes.iter_mut().zip([(roll, rates.0), (pitch, rates.1), (yaw, rates.2)]) {
            a.angle = angle;
            a.velocity = velocity;
        }
    }

    /// `(roll, pitch, yaw)`.
    fn angles(&self) -> (f64, f64, f64) {
        self.state.angles()
    }

    #[getter]
    fn t(&self) -> f64 {
        self.state.t
    }

    fn energy(&self) -> f64 {
        self.state.energy(&self.cfg)
    }

    /// Seconds until the released rig is within `eps` of rest.
    #[pyo3(signature = (eps = 1e-3))]
    fn settle_time(&self, eps: f64) -> PyResult<f64> {
        rig::settle_time(&self.state, &self.cfg, eps).map_err(value_err)
    }
}

/// Pose `(x, y, heading)` after holding the twist for `dt`.
#[pyfunction]
#[pyo3(signature = (pose, twist, dt))]
fn integrate(pose: (f64, f64, f64), twist: (f64, f64, f64), dt: f64) -> PyResult<(f64, f64, f64)> {
    let state = RobotState::at(
        Pose2 {
            x: pose.0,
            y: pose.1,
            heading: pose.2,
        },
        0.0,
    );
    let cmd = mapping::TwistCommand::from_twist(Twist::new(twist.0, twist.1, twist.2), dt, 0);
    let next = sim::integrate(&state, &cmd, dt).map_err(value_err)?;
    Ok((next.x, next.y, next.heading))
}

#[pyclass(name = "Arena", frozen)]
struct PyArena(CoreArena);

#[pymethods]
impl PyArena {
    /// A preset name or a path to an arena file.
    #[new]
    fn new(name_or_path: &str) -> PyResult<Self> {
        CoreArena::resolve(name_or_path).map(Self).map_err(value_err)
    }

    #[staticmethod]
    fn parse(name: &str, text: &str) -> PyResult<Self> {
        CoreArena::parse(name, text).map(Self).map_err(value_err)
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name.clone()
    }

    #[getter]
    fn robot_radius(&self) -> f64 {
        self.0.robot_radius
    }

    #[getter]
    fn start(&self) -> (f64, f64, f64) {
        (self.0.start.x, self.0.start.y, self.0.start.heading)
    }

    /// `(cx, cy, r)`.
    #[getter]
    fn goal(&self) -> (f64, f64, f64) {
        (self.0.goal.cx, self.0.goal.cy, self.0.goal.r)
    }

    /// `None`, an obstacle index as a string, or `"bounds"`.
    fn collision(&self, x: f64, y: f64) -> Option<String> {
        sim::check_collision(&RobotState::at(Pose2 { x, y, heading: 0.0 }, 0.0), &self.0).map(|c| c.to_string())
    }

    fn goal_reached(&self, x: f64, y: f64) -> bool {
        sim::goal_reached(&RobotState::at(Pose2 { x, y, heading: 0.0 }, 0.0), &self.0)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }
}

fn message_dict<'py>(py: Python<'py>, msg: &WireMessage) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("type", msg.type_name())?;
    // the canonical line already has every field in order
    let line = protocol::format_message(msg);
    for field in line.split(' ').skip(1) {
        let (k, v) = field.split_once('=').ok_or_else(|| value_err("malformed field"))?;
        match (k, v.parse::<f64>()) {
            ("seq", _) => d.set_item(k, msg.seq())?,
            ("profile" | "event", _) | (_, Err(_)) => d.set_item(k, v)?,
            ("engaged" | "tripped", Ok(f)) => d.set_item(k, f != 0.0)?,
            (_, Ok(f)) => d.set_item(k, f)?,
        }
    }
    Ok(d)
}

/// Parses one wire line into a dict with a `type` key. Rejections raise
/// `ValueError` whose message is the category (`unknown-type`, `bad-field`,
/// `non-finite`, `too-long`).
#[pyfunction]
fn parse_message<'py>(py: Python<'py>, line: &str) -> PyResult<Bound<'py, PyDict>> {
    let msg = protocol::parse_message(line).map_err(value_err)?;
    message_dict(py, &msg)
}

/// Formats a message dict (as returned by `parse_message`) canonically.
#[pyfunction]
fn format_message(msg: &Bound<'_, PyDict>) -> PyResult<String> {
    let ty: String = msg
        .get_item("type")?
        .ok_or_else(|| value_err("missing type"))?
        .extract()?;
    let mut line = ty;
    for (k, v) in msg.iter() {
        let key: String = k.extract()?;
        if key == "type" {
            continue;
        }
        let text = if let Ok(b) = v.extract::<bool>() {
            if b { "1".to_string() } else { "0".to_string() }
        } else {
            v.str()?.to_string()
        };
        line.push_str(&format!(" {key}={text}"));
    }
    let parsed = protocol::parse_message(&line).map_err(value_err)?;
    Ok(protocol::format_message(&parsed))
}

/// The control service on a caller-driven clock.
#[pyclass(name = "Service")]
struct PyService {
    inner: Option<service::Service>,
}

impl PyService {
    fn svc(&mut self) -> PyResult<&mut service::Service> {
        self.inner.as_mut().ok_or_else(|| value_err("service already finished"))
    }
}

fn load_config(profile_name: &str, config_text: Option<&str>) -> PyResult<PipelineConfig> {
    let base = PipelineConfig::for_profile(profile(profile_name)?);
    match config_text {
        Some(text) => base.overlay(text).map_err(value_err),
        None => Ok(base),
    }
}

#[pymethods]
impl PyService {
    #[new]
    #[pyo3(signature = (arena = "corridor_40m", profile = "day1", config_text = None, t0 = 0.0))]
    fn new(arena: &str, profile: &str, config_text: Option<&str>, t0: f64) -> PyResult<Self> {
        let cfg = load_config(profile, config_text)?;
        let arena = CoreArena::resolve(arena).map_err(value_err)?;
        let svc = service::Service::new(cfg, arena, t0).map_err(value_err)?;
        Ok(Self { inner: Some(svc) })
    }

    /// Feeds one inbound line; returns the reply lines.
    fn handle_line(&mut self, line: &str, now: f64) -> PyResult<Vec<String>> {
        Ok(self.svc()?.handle_line(line, now).iter().map(protocol::format_message).collect())
    }

    /// Runs one tick; returns the `CMD` and `STATE` lines.
    fn tick(&mut self, now: f64) -> PyResult<(String, String)> {
        let out = self.svc()?.tick(now);
        Ok((protocol::format_message(&out.cmd), protocol::format_message(&out.state)))
    }

    #[getter]
    fn rejected(&mut self) -> PyResult<u64> {
        Ok(self.svc()?.rejects.total())
    }

    #[getter]
    fn tripped(&mut self) -> PyResult<bool> {
        Ok(self.svc()?.watchdog().tripped)
    }

    /// `(x, y, heading)` of the simulated base.
    fn pose(&mut self) -> PyResult<(f64, f64, f64)> {
        let p = self.svc()?.robot().state.pose();
        Ok((p.x, p.y, p.heading))
    }

    /// `(roll, pitch, yaw)` of the rig.
    fn rig_angles(&mut self) -> PyResult<(f64, f64, f64)> {
        Ok(self.svc()?.rig().angles())
    }

    /// Seals the session and returns its log text.
    fn finish(&mut self) -> PyResult<String> {
        let svc = self.inner.take().ok_or_else(|| value_err("service already finished"))?;
        Ok(svc.finish().to_text())
    }
}

fn outcome_str(o: &Outcome) -> String {
    match o {
        Outcome::GoalReached { .. } => "goal".into(),
        Outcome::Collision { id, .. } => format!("collision:{id}"),
        Outcome::Timeout { .. } => "timeout".into(),
    }
}

/// Plays a drive script on a virtual clock. Returns
/// `(log_text, csv_text, outcome)`.
#[pyfunction]
#[pyo3(signature = (script, arena = "corridor_40m", profile = "day1", max_t = 120.0, config_text = None))]
fn run_script(script: &str, arena: &str, profile: &str, max_t: f64, config_text: Option<&str>) -> PyResult<(String, String, String)> {
    let cfg = load_config(profile, config_text)?;
    let arena = CoreArena::resolve(arena).map_err(value_err)?;
    let script = DriveScript::parse(script).map_err(value_err)?;
    let run = service::run_script(&cfg, &arena, &script, max_t).map_err(value_err)?;
    Ok((run.log.to_text(), telemetry::export_channels(&run.log), outcome_str(&run.outcome)))
}

/// Re-runs a session log (or a pose log) and returns the new log text.
#[pyfunction]
fn replay(text: &str) -> PyResult<String> {
    let input = telemetry::load_replay_input(text).map_err(value_err)?;
    Ok(telemetry::replay(&input, None, None).map_err(value_err)?.to_text())
}

/// Velocity/time channels of a session log as CSV.
#[pyfunction]
fn export_channels(log_text: &str) -> PyResult<String> {
    let log = SessionLog::parse(log_text).map_err(value_err)?;
    Ok(telemetry::export_channels(&log))
}

#[pyfunction]
#[pyo3(signature = (log_text, goal_radius = telemetry::DEFAULT_GOAL_RADIUS))]
fn compute_metrics<'py>(py: Python<'py>, log_text: &str, goal_radius: f64) -> PyResult<Bound<'py, PyDict>> {
    let log = SessionLog::parse(log_text).map_err(value_err)?;
    let m = telemetry::compute_metrics(&log, goal_radius);
    let d = PyDict::new(py);
    d.set_item("completion_time", m.completion_time)?;
    d.set_item("path_length", m.path_length)?;
    d.set_item("reversals", m.reversals.to_vec())?;
    d.set_item("time_in_deadzone", m.time_in_deadzone)?;
    d.set_item("time_active", m.time_active)?;
    d.set_item("duration", m.duration)?;
    d.set_item("peak_speed", m.peak_speed)?;
    d.set_item("peak_turn_rate", m.peak_turn_rate)?;
    d.set_item("command_count", m.command_count)?;
    Ok(d)
}

#[pymodule]
fn rudder(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQuat>()?;
    m.add_class::<PyCalibration>()?;
    m.add_class::<PyMappingConfig>()?;
    m.add_class::<PyRateLimiter>()?;
    m.add_class::<PySpringRig>()?;
    m.add_class::<PyArena>()?;
    m.add_class::<PyService>()?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(relative_attitude, m)?)?;
    m.add_function(wrap_pyfunction!(day_profile, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_axis, m)?)?;
    m.add_function(wrap_pyfunction!(map_to_twist, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(parse_message, m)?)?;
    m.add_function(wrap_pyfunction!(format_message, m)?)?;
    m.add_function(wrap_pyfunction!(run_script, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add_function(wrap_pyfunction!(export_channels, m)?)?;
    m.add_function(wrap_pyfunction!(compute_metrics, m)?)?;
    m.add("PRESET_ARENAS", sim::PRESET_NAMES.to_vec())?;
    Ok(())
}
