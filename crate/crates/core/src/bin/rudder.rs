use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use rudder_core::bench;
use rudder_core::config::PipelineConfig;
use rudder_core::mapping::Profile;
use rudder_core::net::{LiveOptions, LiveSession};
use rudder_core::pose::parse_pose_log;
use rudder_core::service::{run_poses, run_script, DriveRun, DriveScript, Service, WallClock};
use rudder_core::sim::{Arena, Outcome};
use rudder_core::telemetry::{compute_metrics_with, export_channels, load_replay_input, replay, SessionLog, REVERSAL_BAND};

const DEFAULT_LISTEN: &str = "127.0.0.1:8765";

#[derive(Parser)]
#[command(name = "rudder", version, about = "Foot rudder locomotion controller")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration overlay file (`key = value` lines).
    #[arg(long, env = "RUDDER_CONFIG")]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the control service, live or from a script on a virtual clock.
    Drive(DriveArgs),
    /// Re-run a session log or pose log and export velocity channels as CSV.
    Replay(ReplayArgs),
    /// Print run metrics for a session log.
    Analyze(AnalyzeArgs),
    /// Run the reference scenarios.
    Bench,
    /// Print the effective configuration and its hash.
    Config {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        profile: Option<Profile>,
    },
}

#[derive(Args)]
struct DriveArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Preset name or arena file.
    #[arg(long, default_value = "corridor_40m")]
    arena: String,
    /// Speed profile applied before the config file.
    #[arg(long)]
    profile: Option<Profile>,
    /// HTTP/WebSocket address for live operation.
    #[arg(long)]
    listen: Option<SocketAddr>,
    /// Raw newline-framed TCP address for live operation.
    #[arg(long)]
    tcp: Option<SocketAddr>,
    /// Directory served as static assets on the HTTP endpoint.
    #[arg(long)]
    assets: Option<PathBuf>,
    /// Take tracker samples (pose-log lines) instead of EFFORT in live mode.
    #[arg(long)]
    tracker: bool,
    /// Session log output; stdout when omitted in scripted mode.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Also export the velocity channels as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Input script, played on a virtual clock.
    #[arg(long, conflicts_with_all = ["poses", "listen", "tcp", "tracker"])]
    script: Option<PathBuf>,
    /// Tracker pose log, played on a virtual clock.
    #[arg(long, conflicts_with_all = ["listen", "tcp", "tracker"])]
    poses: Option<PathBuf>,
    /// Session length limit, seconds.
    #[arg(long)]
    max_t: Option<f64>,
}

#[derive(Args)]
struct ReplayArgs {
    log: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Arena override (preset name or file).
    #[arg(long)]
    arena: Option<String>,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the re-simulated session log here.
    #[arg(long = "log-out")]
    log_out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    log: PathBuf,
    /// Reversals are counted within this distance of the goal centre, m.
    #[arg(long, default_value_t = rudder_core::telemetry::DEFAULT_GOAL_RADIUS)]
    goal_radius: f64,
    /// Commands within this band around zero carry no sign.
    #[arg(long, default_value_t = REVERSAL_BAND)]
    band: f64,
}

fn load_config(args: &ConfigArgs, profile: Option<Profile>) -> Result<PipelineConfig> {
    let base = PipelineConfig::for_profile(profile.unwrap_or(Profile::Day1));
    match &args.config {
        Some(path) => Ok(PipelineConfig::load(base, path)?),
        None => Ok(base),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_or_stdout(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn outcome_summary(o: &Outcome) -> String {
    match o {
        Outcome::GoalReached { t } => format!("goal reached at t={t}"),
        Outcome::Collision { t, id } => format!("collision with {id} at t={t}"),
        Outcome::Timeout { t } => format!("stopped at t={t}"),
    }
}

fn save_session(log: &SessionLog, log_path: Option<&Path>, csv: Option<&Path>) -> Result<()> {
    write_or_stdout(log_path, &log.to_text())?;
    if let Some(p) = csv {
        fs::write(p, export_channels(log)).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn drive(args: DriveArgs) -> Result<()> {
    let cfg = load_config(&args.config, args.profile)?;
    let arena = Arena::resolve(&args.arena)?;
    let scripted = |run: DriveRun| -> Result<()> {
        eprintln!("{} ({} ticks)", outcome_summary(&run.outcome), run.log.records.len());
        save_session(&run.log, args.log.as_deref(), args.csv.as_deref())
    };
    if let Some(path) = &args.script {
        let script = DriveScript::parse(&read(path)?)?;
        return scripted(run_script(&cfg, &arena, &script, args.max_t.unwrap_or(120.0))?);
    }
    if let Some(path) = &args.poses {
        let samples = parse_pose_log(&read(path)?)?;
        return scripted(run_poses(&cfg, &arena, &samples, args.max_t.unwrap_or(f64::INFINITY))?);
    }

    let listen = match (args.listen, args.tcp) {
        (None, None) => Some(DEFAULT_LISTEN.parse()?),
        (l, _) => l,
    };
    let mut svc = Service::new(cfg, arena, 0.0)?;
    if args.tracker {
        svc = svc.with_tracker_input();
    }
    let wall = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    svc.set_start_wall(wall);
    if let Some(dir) = &args.assets {
        if !dir.is_dir() {
            bail!("asset directory {} does not exist", dir.display());
        }
    }
    let session = LiveSession::start(
        svc,
        WallClock::new(),
        LiveOptions {
            listen,
            tcp: args.tcp,
            assets: args.assets.clone(),
            max_t: args.max_t,
            outbox_capacity: None,
        },
    )?;
    if let Some(a) = session.http_addr() {
        eprintln!("http/websocket on http://{a} (ws://{a}/ws)");
    }
    if let Some(a) = session.tcp_addr() {
        eprintln!("line protocol on tcp://{a}");
    }
    let report = session.run_until_interrupted()?;
    eprintln!(
        "{} ticks, {} rejected lines, {} STATE messages dropped",
        report.ticks,
        report.rejects.total(),
        report.dropped_states
    );
    match &args.log {
        Some(_) => save_session(&report.log, args.log.as_deref(), args.csv.as_deref()),
        None => {
            info!("no --log given, session not saved");
            Ok(())
        }
    }
}

fn replay_cmd(args: ReplayArgs) -> Result<()> {
    let input = load_replay_input(&read(&args.log)?)?;
    let cfg = match &args.config.config {
        Some(_) => Some(load_config(&args.config, None)?),
        None => None,
    };
    let arena = args.arena.as_deref().map(Arena::resolve).transpose()?;
    let log = replay(&input, cfg.as_ref(), arena.as_ref())?;
    if let Some(p) = &args.log_out {
        fs::write(p, log.to_text()).with_context(|| format!("writing {}", p.display()))?;
    }
    write_or_stdout(args.out.as_deref(), &export_channels(&log))
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let log = SessionLog::parse(&read(&args.log)?)?;
    let m = compute_metrics_with(&log, args.goal_radius, args.band);
    let completion = m.completion_time.map_or_else(|| "-".to_string(), |t| t.to_string());
    let text = format!(
        "completion_time: {completion}\n\
         path_length: {}\n\
         reversals_vx: {}\n\
         reversals_vy: {}\n\
         reversals_wz: {}\n\
         reversals_total: {}\n\
         time_in_deadzone: {}\n\
         time_active: {}\n\
         duration: {}\n\
         peak_speed: {}\n\
         peak_turn_rate: {}\n\
         command_count: {}\n",
        m.path_length,
        m.reversals[0],
        m.reversals[1],
        m.reversals[2],
        m.total_reversals(),
        m.time_in_deadzone,
        m.time_active,
        m.duration,
        m.peak_speed,
        m.peak_turn_rate,
        m.command_count,
    );
    write_or_stdout(None, &text)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Drive(args) => drive(args),
        Command::Replay(args) => replay_cmd(args),
        Command::Analyze(args) => analyze(args),
        Command::Bench => {
            for line in bench::run_all() {
                println!("{line}");
            }
            Ok(())
        }
        Command::Config { config, profile } => {
            let cfg = load_config(&config, profile)?;
            print!("{}", cfg.to_text());
            println!("# hash {}", cfg.hash());
            Ok(())
        }
    }
}
