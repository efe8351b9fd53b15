//! Line protocol that exposes a live session to operator consoles.
//!
//! [`Gateway`] owns the session and turns console lines into session
//! calls and session events into protocol messages. [`serve`] puts it
//! behind a TCP listener: every connection gets a `hello` line, then the
//! shared stream of link events, delivered text and spectrum snapshots.
//! Console input from all connections is applied in arrival order on the
//! simulation thread.

mod protocol;

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

pub use protocol::{GatewayMessage, PROTOCOL_VERSION};

use crate::config::SessionConfig;
use crate::session::{Session, SessionError};

/// Simulated time between spectrum snapshots.
pub const SNAPSHOT_INTERVAL_US: u64 = 500_000;

pub struct Gateway {
    session: Session,
    next_snapshot: u64,
}

impl Gateway {
    pub fn new(cfg: SessionConfig) -> Result<Self, SessionError> {
        Ok(Gateway {
            session: Session::new(cfg)?,
            next_snapshot: 0,
        })
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn session_mut(&mut self) -> &mut Session {
        &mut self.session
    }

    fn ts(&self) -> f64 {
        self.session.now_us() as f64 * 1e-6
    }

    pub fn hello(&self) -> GatewayMessage {
        GatewayMessage::Hello {
            ts: self.ts(),
            version: PROTOCOL_VERSION,
        }
    }

    fn error(&self, message: impl Into<String>) -> GatewayMessage {
        GatewayMessage::Error {
            ts: self.ts(),
            message: message.into(),
        }
    }

    /// Applies one console line. Returns replies meant for the sender only.
    pub fn handle_line(&mut self, line: &str) -> Vec<GatewayMessage> {
        if line.trim().is_empty() {
            return Vec::new();
        }
        let msg = match GatewayMessage::from_line(line) {
            Ok(m) => m,
            Err(e) => return vec![self.error(format!("malformed message: {e}"))],
        };
        self.handle(msg)
    }

    pub fn handle(&mut self, msg: GatewayMessage) -> Vec<GatewayMessage> {
        match &msg {
            GatewayMessage::Hello { version, .. } if *version == PROTOCOL_VERSION => Vec::new(),
            GatewayMessage::Hello { version, .. } => {
                vec![self.error(format!("unsupported protocol version {version}"))]
            }
            GatewayMessage::ChatText { from, text, .. } => match self.session.send_text(*from, text) {
                Ok(()) => Vec::new(),
                Err(e) => vec![self.error(e.to_string())],
            },
            GatewayMessage::JammerCommand { .. } => {
                let update = msg.jammer_update().expect("jammer command");
                match self.session.set_jammer(&update) {
                    Ok(()) => Vec::new(),
                    Err(e) => vec![self.error(e.to_string())],
                }
            }
            other => vec![self.error(format!("{} is not accepted from consoles", other.kind()))],
        }
    }

    /// Runs the simulation forward by `dt_us` and returns everything that
    /// happened, with spectrum snapshots interleaved at their times.
    pub fn advance(&mut self, dt_us: u64) -> Vec<GatewayMessage> {
        let target = self.session.now_us() + dt_us;
        let mut out = Vec::new();
        loop {
            let stop = self.next_snapshot.min(target);
            self.session.run_until(stop);
            let (a, b) = (self.session.config().node_a, self.session.config().node_b);
            let peer = |n: u8| if n == a { b } else { a };
            out.extend(self.session.take_events().iter().map(|e| GatewayMessage::from_event(e, peer)));
            if stop == self.next_snapshot {
                out.push(self.snapshot());
                self.next_snapshot += SNAPSHOT_INTERVAL_US;
            }
            if stop == target {
                return out;
            }
        }
    }

    pub fn snapshot(&self) -> GatewayMessage {
        let t = self.ts();
        let m = self.session.medium();
        let active = self
            .session
            .node(self.session.config().node_a)
            .map(|n| n.channel())
            .unwrap_or(m.active_channel);
        GatewayMessage::SpectrumSnapshot {
            ts: t,
            channels: self.session.spectrum(),
            active,
            jammed: m.jammed_channel(t),
        }
    }
}

/// Pacing of a served session.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServeOptions {
    /// Wall-clock time between simulation slices.
    pub tick: Duration,
    /// Simulated seconds per wall-clock second.
    pub speed: f64,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions {
            tick: Duration::from_millis(20),
            speed: 1.0,
        }
    }
}

type Clients = Arc<Mutex<Vec<(usize, TcpStream)>>>;

fn send(stream: &mut TcpStream, msg: &GatewayMessage) -> std::io::Result<()> {
    let mut line = msg.to_line();
    line.push('\n');
    stream.write_all(line.as_bytes())
}

/// Binds `addr` and serves until the process ends.
pub fn serve(cfg: SessionConfig, addr: impl ToSocketAddrs, opts: ServeOptions) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr)?;
    serve_on(listener, cfg, opts, Arc::new(AtomicBool::new(false)))
}

/// Serves on an already bound listener until `stop` is set.
pub fn serve_on(
    listener: TcpListener,
    cfg: SessionConfig,
    opts: ServeOptions,
    stop: Arc<AtomicBool>,
) -> std::io::Result<()> {
    let mut gw = Gateway::new(cfg).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
    let clients: Clients = Arc::new(Mutex::new(Vec::new()));
    let (tx, rx) = mpsc::channel::<(usize, String)>();
    let hello = Arc::new(Mutex::new(gw.hello()));
    listener.set_nonblocking(true)?;

    {
        let clients = clients.clone();
        let stop = stop.clone();
        let hello = hello.clone();
        thread::spawn(move || {
            let mut next_id = 0;
            while !stop.load(Ordering::Relaxed) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        let _ = stream.set_nonblocking(false);
                        let id = next_id;
                        next_id += 1;
                        let Ok(mut writer) = stream.try_clone() else { continue };
                        let greeting = hello.lock().expect("hello lock").clone();
                        if send(&mut writer, &greeting).is_err() {
                            continue;
                        }
                        clients.lock().expect("client list").push((id, writer));
                        let tx = tx.clone();
                        thread::spawn(move || {
                            for line in BufReader::new(stream).lines() {
                                let Ok(line) = line else { break };
                                if tx.send((id, line)).is_err() {
                                    break;
                                }
                            }
                        });
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        thread::sleep(Duration::from_millis(5));
                    }
                    Err(_) => break,
                }
            }
        });
    }

    let slice_us = (opts.tick.as_secs_f64() * opts.speed * 1e6).round().max(1.0) as u64;
    while !stop.load(Ordering::Relaxed) {
        let started = Instant::now();
        while let Ok((id, line)) = rx.try_recv() {
            let replies = gw.handle_line(&line);
            let mut list = clients.lock().expect("client list");
            if let Some((_, s)) = list.iter_mut().find(|(c, _)| *c == id) {
                for r in &replies {
                    let _ = send(s, r);
                }
            }
        }
        let out = gw.advance(slice_us);
        *hello.lock().expect("hello lock") = gw.hello();
        if !out.is_empty() {
            let mut list = clients.lock().expect("client list");
            list.retain_mut(|(_, s)| out.iter().all(|m| send(s, m).is_ok()));
        }
        if let Some(rest) = opts.tick.checked_sub(started.elapsed()) {
            thread::sleep(rest);
        }
    }
    Ok(())
}
