//! Newline-delimited trajectory records: one JSON object per tick with
//! each boid flattened to `[x, y, vx, vy]`.
//!
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! write/read cycle reproduces every bit.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::flock::{BoidState, Bounds, FlockState};
use crate::vec2::Vec2;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub tick: u64,
    pub bounds: [f64; 2],
    pub boids: Vec<[f64; 4]>,
}

impl TrajectoryRecord {
    pub fn from_state(state: &FlockState) -> Self {
        Self {
            tick: state.tick,
            bounds: [state.bounds.width, state.bounds.height],
            boids: state
                .boids
                .iter()
                .map(|b| [b.position.x, b.position.y, b.velocity.x, b.velocity.y])
                .collect(),
        }
    }

    pub fn bounds(&self) -> Bounds {
        Bounds {
            width: self.bounds[0],
            height: self.bounds[1],
        }
    }

    pub fn boid_states(&self) -> Vec<BoidState> {
        self.boids
            .iter()
            .map(|&[x, y, vx, vy]| BoidState {
                position: Vec2::new(x, y),
                velocity: Vec2::new(vx, vy),
            })
            .collect()
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.boids.iter().map(|&[x, y, _, _]| Vec2::new(x, y)).collect()
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("trajectory records serialize")
    }
}

pub fn write_record(out: &mut impl Write, record: &TrajectoryRecord) -> std::io::Result<()> {
    writeln!(out, "{}", record.to_line())
}

/// Parses every non-blank line; errors carry 1-based line numbers.
pub fn read_records(input: impl BufRead) -> Result<Vec<TrajectoryRecord>, TrajectoryError> {
    let mut records = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| TrajectoryError::Parse {
            line: k + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Streaming SHA-256 over the exact bit patterns of successive states.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryHasher {
    hasher: Sha256,
}

impl TrajectoryHasher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, state: &FlockState) {
        self.hasher.update(state.tick.to_le_bytes());
        for b in &state.boids {
            for v in [b.position.x, b.position.y, b.velocity.x, b.velocity.y] {
                self.hasher.update(v.to_bits().to_le_bytes());
            }
        }
    }

    pub fn finish(self) -> String {
        hex(&self.hasher.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of arbitrary bytes as lowercase hex.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}
