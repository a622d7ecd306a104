//! Live operation: network endpoints around a control loop thread.
//!
//! The control loop owns the [`Service`] and talks to I/O tasks only through
//! queues. Inbound lines go through an unbounded channel that the loop drains
//! without waiting. Outbound messages land in a bounded [`Outbox`] per client.
//! When an outbox is full, `STATE` messages are dropped and counted, and `CMD`
//! is never dropped.
//!
//! Endpoints:
//! - HTTP on `listen`: `GET /ws` upgrades to a WebSocket carrying one wire
//!   line per text frame (frames holding several newline-separated lines are
//!   accepted). Anything else is served from the asset directory.
//! - Optional raw TCP on `tcp`: newline-framed wire lines in both directions.
//!   In tracker input mode, pose-log records (`t px py pz qw qx qy qz`) are
//!   accepted as tracker samples on either endpoint.

use std::collections::{HashMap, VecDeque};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use log::{info, warn};
use thiserror::Error;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::Notify;
use tower_http::services::ServeDir;

use crate::pose::TrackerSample;
use crate::protocol::{format_message, RejectCounts, WireMessage, MAX_LINE_BYTES};
use crate::service::{Clock, InputMode, Service};
use crate::telemetry::SessionLog;

pub const DEFAULT_OUTBOX_CAPACITY: usize = 256;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("binding {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("starting runtime: {0}")]
    Runtime(std::io::Error),
    #[error("control loop panicked")]
    LoopPanicked,
}

/// Bounded per-client queue of outbound messages.
#[derive(Debug, Clone)]
pub struct Outbox {
    queue: VecDeque<WireMessage>,
    capacity: usize,
    dropped: u64,
}

impl Outbox {
    pub fn new(capacity: usize) -> Self {
        Self {
            queue: VecDeque::new(),
            capacity: capacity.max(1),
            dropped: 0,
        }
    }

    /// Queues `msg`. When full, a `STATE` is dropped: the incoming one, or for
    /// any other kind the oldest queued `STATE`. Commands and replies are never
    /// dropped, even if that takes the queue past its capacity.
    pub fn push(&mut self, msg: WireMessage) {
        if self.queue.len() >= self.capacity {
            if msg.is_state() {
                self.dropped += 1;
                return;
            }
            if let Some(i) = self.queue.iter().position(WireMessage::is_state) {
                self.queue.remove(i);
                self.dropped += 1;
            }
        }
        self.queue.push_back(msg);
    }

    pub fn drain(&mut self) -> Vec<WireMessage> {
        self.queue.drain(..).collect()
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }
}

struct Client {
    outbox: Outbox,
    wake: Arc<Notify>,
}

/// Registry of connected clients and their outboxes.
pub struct Hub {
    clients: Mutex<HashMap<u64, Client>>,
    next_id: AtomicU64,
    capacity: usize,
    dropped: AtomicU64,
}

impl Hub {
    pub fn new(capacity: usize) -> Self {
        Self {
            clients: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
            capacity,
            dropped: AtomicU64::new(0),
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, HashMap<u64, Client>> {
        self.clients.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn connect(&self) -> (u64, Arc<Notify>) {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let wake = Arc::new(Notify::new());
        self.lock().insert(
            id,
            Client {
                outbox: Outbox::new(self.capacity),
                wake: wake.clone(),
            },
        );
        (id, wake)
    }

    pub fn disconnect(&self, id: u64) {
        if let Some(c) = self.lock().remove(&id) {
            self.dropped.fetch_add(c.outbox.dropped(), Ordering::Relaxed);
        }
    }

    pub fn send_to(&self, id: u64, msgs: impl IntoIterator<Item = WireMessage>) {
        let mut clients = self.lock();
        if let Some(c) = clients.get_mut(&id) {
            msgs.into_iter().for_each(|m| c.outbox.push(m));
            c.wake.notify_one();
        }
    }

    pub fn broadcast(&self, msgs: &[WireMessage]) {
        for c in self.lock().values_mut() {
            for m in msgs {
                c.outbox.push(m.clone());
            }
            c.wake.notify_one();
        }
    }

    /// Pending messages for one client, or `None` once it is disconnected.
    pub fn take(&self, id: u64) -> Option<Vec<WireMessage>> {
        self.lock().get_mut(&id).map(|c| c.outbox.drain())
    }

    pub fn client_count(&self) -> usize {
        self.lock().len()
    }

    /// STATE messages dropped so far, over all clients past and present.
    pub fn dropped(&self) -> u64 {
        self.dropped.load(Ordering::Relaxed) + self.lock().values().map(|c| c.outbox.dropped()).sum::<u64>()
    }
}

/// A line received from a client.
#[derive(Debug, Clone, PartialEq)]
pub struct Inbound {
    pub client: u64,
    pub line: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopReport {
    pub ticks: u64,
    pub rejects: RejectCounts,
}

fn looks_like_pose(line: &str) -> bool {
    line.trim_start().starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '.')
}

fn deliver(svc: &mut Service, hub: &Hub, inbound: Inbound, now: f64) {
    if svc.mode() == InputMode::Tracker && looks_like_pose(&inbound.line) {
        match inbound.line.trim().parse::<TrackerSample>() {
            Ok(sample) => {
                if let Err(e) = svc.push_tracker_sample(sample, now) {
                    warn!("tracker sample rejected: {e}");
                }
            }
            Err(e) => warn!("bad tracker line from client {}: {e}", inbound.client),
        }
        return;
    }
    let replies = svc.handle_line(&inbound.line, now);
    if !replies.is_empty() {
        hub.send_to(inbound.client, replies);
    }
}

/// Runs the tick loop until `stop` is set or `max_t` passes. Inbound lines
/// are drained without blocking before each tick; tick outputs are broadcast.
/// Ticks missed by a late wake-up are skipped, not replayed.
pub fn control_loop<C: Clock>(
    svc: &mut Service,
    clock: &C,
    inbound: &Receiver<Inbound>,
    hub: &Hub,
    stop: &AtomicBool,
    max_t: Option<f64>,
) -> LoopReport {
    let dt = svc.config().service.tick_dt();
    let t0 = svc.last_tick();
    let mut k = 0u64;
    let mut ticks = 0;
    loop {
        k += 1;
        let due = t0 + k as f64 * dt;
        if max_t.is_some_and(|m| due - t0 > m + 1e-9) {
            break;
        }
        clock.sleep_until(due);
        if stop.load(Ordering::Relaxed) {
            break;
        }
        let now = clock.now();
        loop {
            match inbound.try_recv() {
                Ok(msg) => deliver(svc, hub, msg, now),
                Err(TryRecvError::Empty) | Err(TryRecvError::Disconnected) => break,
            }
        }
        let out = svc.tick(now);
        hub.broadcast(&out.into_messages());
        ticks += 1;
        let behind = ((now - t0) / dt).floor() as u64;
        if behind > k {
            k = behind;
        }
    }
    LoopReport {
        ticks,
        rejects: svc.rejects.clone(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct LiveOptions {
    /// HTTP + WebSocket endpoint.
    pub listen: Option<SocketAddr>,
    /// Raw newline-framed TCP endpoint.
    pub tcp: Option<SocketAddr>,
    /// Directory served as static assets over HTTP.
    pub assets: Option<PathBuf>,
    /// Stop after this many seconds.
    pub max_t: Option<f64>,
    pub outbox_capacity: Option<usize>,
}

/// Result of a finished live session.
#[derive(Debug, Clone)]
pub struct LiveReport {
    pub log: SessionLog,
    pub ticks: u64,
    pub rejects: RejectCounts,
    pub dropped_states: u64,
}

/// A running live session.
pub struct LiveSession {
    runtime: tokio::runtime::Runtime,
    http_addr: Option<SocketAddr>,
    tcp_addr: Option<SocketAddr>,
    stop: Arc<AtomicBool>,
    hub: Arc<Hub>,
    control: JoinHandle<Service>,
    report: Arc<Mutex<Option<LoopReport>>>,
}

#[derive(Clone)]
struct Shared {
    hub: Arc<Hub>,
    tx: Sender<Inbound>,
}

const FALLBACK_PAGE: &str = "<!doctype html><title>rudder</title>\
<p>Control service running. Connect a client to <code>/ws</code>.</p>";

impl LiveSession {
    /// Binds the endpoints and starts the control loop on its own thread.
    pub fn start<C: Clock + Send + 'static>(svc: Service, clock: C, opts: LiveOptions) -> Result<Self, NetError> {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .map_err(NetError::Runtime)?;
        let hub = Arc::new(Hub::new(opts.outbox_capacity.unwrap_or(DEFAULT_OUTBOX_CAPACITY)));
        let (tx, rx) = mpsc::channel();
        let shared = Shared { hub: hub.clone(), tx };

        let mut http_addr = None;
        if let Some(addr) = opts.listen {
            let listener = runtime
                .block_on(TcpListener::bind(addr))
                .map_err(|source| NetError::Bind { addr, source })?;
            http_addr = listener.local_addr().ok();
            let app = router(shared.clone(), opts.assets.clone());
            runtime.spawn(async move {
                if let Err(e) = axum::serve(listener, app).await {
                    warn!("http server stopped: {e}");
                }
            });
            info!("listening for HTTP/WebSocket on {}", http_addr.unwrap_or(addr));
        }
        let mut tcp_addr = None;
        if let Some(addr) = opts.tcp {
            let listener = runtime
                .block_on(TcpListener::bind(addr))
                .map_err(|source| NetError::Bind { addr, source })?;
            tcp_addr = listener.local_addr().ok();
            runtime.spawn(accept_tcp(listener, shared.clone()));
            info!("listening for line clients on {}", tcp_addr.unwrap_or(addr));
        }

        let stop = Arc::new(AtomicBool::new(false));
        let report = Arc::new(Mutex::new(None));
        let control = {
            let (hub, stop, report) = (hub.clone(), stop.clone(), report.clone());
            let max_t = opts.max_t;
            std::thread::Builder::new()
                .name("control".into())
                .spawn(move || {
                    let mut svc = svc;
                    let r = control_loop(&mut svc, &clock, &rx, &hub, &stop, max_t);
                    *report.lock().unwrap_or_else(|e| e.into_inner()) = Some(r);
                    stop.store(true, Ordering::Relaxed);
                    svc
                })
                .map_err(NetError::Runtime)?
        };
        Ok(Self {
            runtime,
            http_addr,
            tcp_addr,
            stop,
            hub,
            control,
            report,
        })
    }

    pub fn http_addr(&self) -> Option<SocketAddr> {
        self.http_addr
    }

    pub fn tcp_addr(&self) -> Option<SocketAddr> {
        self.tcp_addr
    }

    pub fn stop_flag(&self) -> Arc<AtomicBool> {
        self.stop.clone()
    }

    pub fn stop(&self) {
        self.stop.store(true, Ordering::Relaxed);
    }

    pub fn is_finished(&self) -> bool {
        self.control.is_finished()
    }

    /// Stops on Ctrl-C, or when the loop ends by itself.
    pub fn run_until_interrupted(self) -> Result<LiveReport, NetError> {
        let stop = self.stop.clone();
        self.runtime.block_on(async {
            loop {
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => {
                        info!("interrupted, shutting down");
                        stop.store(true, Ordering::Relaxed);
                        break;
                    }
                    _ = tokio::time::sleep(std::time::Duration::from_millis(50)) => {
                        if stop.load(Ordering::Relaxed) {
                            break;
                        }
                    }
                }
            }
        });
        self.wait()
    }

    /// Waits for the control loop to end and shuts the endpoints down.
    pub fn wait(self) -> Result<LiveReport, NetError> {
        let svc = self.control.join().map_err(|_| NetError::LoopPanicked)?;
        self.runtime.shutdown_timeout(std::time::Duration::from_millis(200));
        let r = self
            .report
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .take()
            .ok_or(NetError::LoopPanicked)?;
        Ok(LiveReport {
            log: svc.finish(),
            ticks: r.ticks,
            rejects: r.rejects,
            dropped_states: self.hub.dropped(),
        })
    }
}

fn router(shared: Shared, assets: Option<PathBuf>) -> Router {
    let app = Router::new().route("/ws", get(ws_upgrade)).with_state(shared);
    match assets {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.fallback(|| async { Html(FALLBACK_PAGE) }),
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(shared): State<Shared>) -> impl IntoResponse {
    ws.max_message_size(64 * MAX_LINE_BYTES)
        .on_upgrade(move |socket| ws_session(socket, shared))
}

fn forward_lines(shared: &Shared, client: u64, text: &str) -> bool {
    text.split('\n')
        .filter(|l| !l.trim().is_empty())
        .all(|line| {
            shared
                .tx
                .send(Inbound {
                    client,
                    line: line.to_string(),
                })
                .is_ok()
        })
}

async fn ws_session(socket: WebSocket, shared: Shared) {
    let (id, wake) = shared.hub.connect();
    info!("websocket client {id} connected");
    let (mut sink, mut stream) = socket.split();
    let hub = shared.hub.clone();
    let writer = tokio::spawn(async move {
        while let Some(batch) = hub.take(id) {
            if batch.is_empty() {
                wake.notified().await;
                continue;
            }
            for msg in batch {
                let line = format!("{}\n", format_message(&msg));
                if sink.send(Message::Text(line.into())).await.is_err() {
                    return;
                }
            }
        }
    });
    while let Some(Ok(frame)) = stream.next().await {
        match frame {
            Message::Text(text) => {
                if !forward_lines(&shared, id, text.as_str()) {
                    break;
                }
            }
            Message::Binary(bytes) => {
                let text = String::from_utf8_lossy(&bytes);
                if !forward_lines(&shared, id, &text) {
                    break;
                }
            }
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => {}
        }
    }
    shared.hub.disconnect(id);
    writer.abort();
    info!("websocket client {id} disconnected");
}

async fn accept_tcp(listener: TcpListener, shared: Shared) {
    loop {
        match listener.accept().await {
            Ok((stream, peer)) => {
                info!("line client {peer} connected");
                tokio::spawn(tcp_session(stream, shared.clone()));
            }
            Err(e) => warn!("accept failed: {e}"),
        }
    }
}

async fn tcp_session(stream: TcpStream, shared: Shared) {
    let (id, wake) = shared.hub.connect();
    let (read, mut write) = stream.into_split();
    let hub = shared.hub.clone();
    let writer = tokio::spawn(async move {
        while let Some(batch) = hub.take(id) {
            if batch.is_empty() {
                wake.notified().await;
                continue;
            }
            let mut buf = String::new();
            for msg in batch {
                buf.push_str(&format_message(&msg));
                buf.push('\n');
            }
            if write.write_all(buf.as_bytes()).await.is_err() {
                return;
            }
        }
    });
    let mut reader = BufReader::new(read);
    let mut buf = Vec::new();
    loop {
        buf.clear();
        match reader.read_until(b'\n', &mut buf).await {
            Ok(0) => break,
            Ok(_) => {
                // invalid UTF-8 still reaches the parser, which rejects and counts it
                let line = String::from_utf8_lossy(&buf);
                if !forward_lines(&shared, id, &line) {
                    break;
                }
            }
            Err(e) => {
                warn!("line client {id}: {e}");
                break;
            }
        }
    }
    shared.hub.disconnect(id);
    writer.abort();
}
