//! TCP front end: newline-delimited JSON in both directions.
//!
//! One thread owns the session and ticks it at the configured rate whether
//! or not input arrives. Each connection gets a reader thread that forwards
//! lines to the session loop and a writer thread that drains the
//! connection's viewer queue.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, ErrorKind, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::broadcast::{Broadcaster, Next, ViewerId};
use super::replay::Recorder;
use super::session::{Session, SessionConfig};
use crate::flock::FlockError;

const ACCEPT_POLL: Duration = Duration::from_millis(10);
const WRITER_POLL: Duration = Duration::from_millis(50);

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("cannot open record log {path}: {source}")]
    Record { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Flock(#[from] FlockError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bind: SocketAddr,
    pub session: SessionConfig,
    /// Where to log inbound messages for later replay.
    pub record: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ServerSummary {
    pub ticks: u64,
    pub messages: u64,
}

pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    broadcaster: Arc<Broadcaster>,
    sim: JoinHandle<Result<ServerSummary, ServerError>>,
    acceptor: JoinHandle<()>,
}

/// Binds, creates the session and starts serving in background threads.
pub fn start(config: ServerConfig) -> Result<ServerHandle, ServerError> {
    let listener = TcpListener::bind(config.bind).map_err(|source| ServerError::Bind {
        addr: config.bind,
        source,
    })?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;

    let recorder = match &config.record {
        Some(path) => Some(Recorder::new(BufWriter::new(File::create(path).map_err(|source| {
            ServerError::Record {
                path: path.clone(),
                source,
            }
        })?))),
        None => None,
    };

    let session = Session::new(config.session.clone())?;
    let broadcaster = Arc::new(Broadcaster::new());
    if let Some(first) = session.latest_snapshot() {
        broadcaster.publish(first, None);
    }
    let shutdown = Arc::new(AtomicBool::new(false));
    let (tx, rx) = mpsc::channel();

    let sim = {
        let broadcaster = broadcaster.clone();
        let shutdown = shutdown.clone();
        thread::Builder::new()
            .name("session".into())
            .spawn(move || run_session(session, rx, broadcaster, shutdown, recorder))?
    };
    let acceptor = {
        let broadcaster = broadcaster.clone();
        let shutdown = shutdown.clone();
        thread::Builder::new()
            .name("accept".into())
            .spawn(move || accept_loop(listener, tx, broadcaster, shutdown))?
    };

    Ok(ServerHandle {
        addr,
        shutdown,
        broadcaster,
        sim,
        acceptor,
    })
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Flag that stops the server when set; suitable for signal handlers.
    pub fn shutdown_flag(&self) -> Arc<AtomicBool> {
        self.shutdown.clone()
    }

    pub fn viewer_count(&self) -> usize {
        self.broadcaster.viewer_count()
    }

    pub fn is_finished(&self) -> bool {
        self.sim.is_finished()
    }

    /// Stops ticking, flushes the record log and disconnects viewers.
    pub fn stop(self) -> Result<ServerSummary, ServerError> {
        self.shutdown.store(true, Ordering::SeqCst);
        self.wait()
    }

    /// Blocks until the shutdown flag is set elsewhere.
    pub fn wait(self) -> Result<ServerSummary, ServerError> {
        let summary = self.sim.join().expect("session thread panicked");
        self.shutdown.store(true, Ordering::SeqCst);
        self.acceptor.join().expect("accept thread panicked");
        self.broadcaster.close_all();
        summary
    }
}

fn run_session(
    mut session: Session,
    inbound: Receiver<(ViewerId, String)>,
    broadcaster: Arc<Broadcaster>,
    shutdown: Arc<AtomicBool>,
    mut recorder: Option<Recorder<BufWriter<File>>>,
) -> Result<ServerSummary, ServerError> {
    let period = Duration::from_secs_f64(1.0 / session.config().tick_rate);
    let mut deadline = Instant::now();
    let mut messages = 0u64;
    let result = loop {
        if shutdown.load(Ordering::SeqCst) {
            break Ok(());
        }
        while let Ok((viewer, line)) = inbound.try_recv() {
            if let Some(rec) = &mut recorder {
                rec.record(session.tick_count(), &line)?;
            }
            messages += 1;
            for d in session.handle_line(&line) {
                broadcaster.publish(&d, Some(viewer));
            }
        }
        match session.tick() {
            Ok(snapshot) => broadcaster.publish(&snapshot, None),
            Err(e) => break Err(ServerError::from(e)),
        }
        deadline += period;
        let now = Instant::now();
        if deadline > now {
            thread::sleep(deadline - now);
        } else {
            // running behind: drop the backlog instead of bursting
            deadline = now;
        }
    };
    if let Some(rec) = &mut recorder {
        rec.flush()?;
    }
    shutdown.store(true, Ordering::SeqCst);
    broadcaster.close_all();
    result.map(|()| ServerSummary {
        ticks: session.tick_count(),
        messages,
    })
}

fn accept_loop(
    listener: TcpListener,
    inbound: Sender<(ViewerId, String)>,
    broadcaster: Arc<Broadcaster>,
    shutdown: Arc<AtomicBool>,
) {
    while !shutdown.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                if let Err(e) = serve_connection(stream, inbound.clone(), broadcaster.clone(), shutdown.clone()) {
                    eprintln!("connection setup failed: {e}");
                }
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(ACCEPT_POLL),
            Err(e) => {
                eprintln!("accept failed: {e}");
                thread::sleep(ACCEPT_POLL);
            }
        }
    }
}

fn serve_connection(
    stream: TcpStream,
    inbound: Sender<(ViewerId, String)>,
    broadcaster: Arc<Broadcaster>,
    shutdown: Arc<AtomicBool>,
) -> std::io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    let read_half = stream.try_clone()?;
    let (id, queue) = broadcaster.join();

    {
        let broadcaster = broadcaster.clone();
        thread::spawn(move || {
            for line in BufReader::new(read_half).lines() {
                let Ok(line) = line else { break };
                if line.trim().is_empty() {
                    continue;
                }
                if inbound.send((id, line)).is_err() {
                    break;
                }
            }
            broadcaster.leave(id);
        });
    }

    thread::spawn(move || {
        let mut out = stream;
        loop {
            match queue.next_timeout(WRITER_POLL) {
                Next::Line(line) => {
                    let ok = out
                        .write_all(line.as_bytes())
                        .and_then(|()| out.write_all(b"\n"))
                        .is_ok();
                    if !ok {
                        break;
                    }
                }
                Next::Idle if !shutdown.load(Ordering::SeqCst) => {}
                Next::Idle | Next::Closed => break,
            }
        }
        broadcaster.leave(id);
        let _ = out.shutdown(Shutdown::Both);
    });
    Ok(())
}
