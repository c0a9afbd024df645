//! Inbound message logs and deterministic re-execution.
//!
//! A log is newline-delimited JSON, one record per inbound line:
//! `{"tick": <steps completed when applied>, "line": "<raw wire text>"}`.
//! The raw text is kept verbatim so malformed input replays identically.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::session::{Session, SessionConfig};
use crate::flock::FlockError;
use crate::trajectory::{hex, TrajectoryHasher};

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("log line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error(transparent)]
    Flock(#[from] FlockError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub tick: u64,
    pub line: String,
}

/// Appends inbound lines to a log as they are applied.
pub struct Recorder<W: Write> {
    out: W,
}

impl<W: Write> Recorder<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn record(&mut self, tick: u64, line: &str) -> std::io::Result<()> {
        let rec = LogRecord {
            tick,
            line: line.to_string(),
        };
        writeln!(
            self.out,
            "{}",
            serde_json::to_string(&rec).expect("log records serialize")
        )
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Parses a log; ticks must never decrease.
pub fn read_log(input: impl BufRead) -> Result<Vec<LogRecord>, ReplayError> {
    let mut records: Vec<LogRecord> = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LogRecord = serde_json::from_str(&line).map_err(|e| ReplayError::Corrupt {
            line: k + 1,
            message: e.to_string(),
        })?;
        if records.last().is_some_and(|prev| rec.tick < prev.tick) {
            return Err(ReplayError::Corrupt {
                line: k + 1,
                message: format!("tick {} precedes earlier record", rec.tick),
            });
        }
        records.push(rec);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutput {
    /// Every outbound line in sequence order, as a never-lagging viewer
    /// that also sent the logged messages would receive it.
    pub lines: Vec<String>,
    /// SHA-256 over the concatenated lines, newline-terminated.
    pub stream_hash: String,
    /// Bit-exact hash of the flock state after every tick.
    pub trajectory_hash: String,
    pub ticks: u64,
}

/// Re-executes a log. Runs `max(min_ticks, last logged tick + 1)` ticks;
/// each record is applied just before the step of its tick.
pub fn replay(config: SessionConfig, log: &[LogRecord], min_ticks: u64) -> Result<ReplayOutput, ReplayError> {
    let ticks = log.last().map_or(0, |r| r.tick + 1).max(min_ticks);
    let mut session = Session::new(config)?;
    let mut lines = Vec::new();
    let mut trajectory = TrajectoryHasher::new();
    trajectory.update(session.flock());
    if let Some(s) = session.latest_snapshot() {
        lines.push(s.line.to_string());
    }

    let mut pending = log.iter().peekable();
    for t in 0..ticks {
        while let Some(rec) = pending.next_if(|r| r.tick == t) {
            lines.extend(session.handle_line(&rec.line).into_iter().map(|d| d.line.to_string()));
        }
        let snap = session.tick()?;
        trajectory.update(session.flock());
        lines.push(snap.line.to_string());
    }

    let mut hasher = Sha256::new();
    for l in &lines {
        hasher.update(l.as_bytes());
        hasher.update(b"\n");
    }
    Ok(ReplayOutput {
        stream_hash: hex(&hasher.finalize()),
        trajectory_hash: trajectory.finish(),
        lines,
        ticks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_round_trip_and_ordering() {
        let mut rec = Recorder::new(Vec::new());
        rec.record(0, r#"{"kind":"set_emotion","emotion":"fear"}"#).unwrap();
        rec.record(3, "garbage \"quoted\"").unwrap();
        let bytes = rec.into_inner();
        let log = read_log(bytes.as_slice()).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(log[1].line, "garbage \"quoted\"");

        let bad = b"{\"tick\":5,\"line\":\"a\"}\n{\"tick\":4,\"line\":\"b\"}\n";
        assert!(matches!(read_log(&bad[..]), Err(ReplayError::Corrupt { line: 2, .. })));
        assert!(matches!(
            read_log(&b"{\"tick\":"[..]),
            Err(ReplayError::Corrupt { line: 1, .. })
        ));
    }

    #[test]
    fn empty_log_is_pure_simulation() {
        let out = replay(SessionConfig::default(), &[], 5).unwrap();
        assert_eq!(out.lines.len(), 6);
        assert!(out.lines.iter().all(|l| l.contains("\"kind\":\"state_snapshot\"")));
    }

    #[test]
    fn replay_is_repeatable() {
        let log = vec![LogRecord {
            tick: 2,
            line: r#"{"kind":"set_emotion","emotion":"anger"}"#.into(),
        }];
        let a = replay(SessionConfig::default(), &log, 10).unwrap();
        let b = replay(SessionConfig::default(), &log, 10).unwrap();
        assert_eq!(a, b);
        let changes = a
            .lines
            .iter()
            .filter(|l| l.contains("\"kind\":\"emotion_changed\""))
            .count();
        assert_eq!(changes, 1);
    }
}
