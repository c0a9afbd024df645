//! Newline-delimited JSON wire messages. Every message carries a `kind`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::emotion::Emotion;
use crate::flock::FlockConfig;
use crate::render::Aesthetics;

pub const INBOUND_KINDS: [&str; 4] = ["rr_sample", "set_emotion", "set_config", "set_aesthetics"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("message has no string `kind` field")]
    MissingKind,
    #[error("unknown kind {0:?}; expected one of rr_sample, set_emotion, set_config, set_aesthetics")]
    UnknownKind(String),
    #[error("invalid {kind} message: {detail}")]
    InvalidPayload { kind: String, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InboundMessage {
    RrSample {
        person_id: String,
        timestamp_ms: i64,
        rr_ms: f64,
    },
    SetEmotion {
        /// Kept as text so unknown names get the full list of valid ones.
        emotion: String,
    },
    SetConfig(ConfigPatch),
    SetAesthetics(AestheticsPatch),
}

impl InboundMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            InboundMessage::RrSample { .. } => "rr_sample",
            InboundMessage::SetEmotion { .. } => "set_emotion",
            InboundMessage::SetConfig(_) => "set_config",
            InboundMessage::SetAesthetics(_) => "set_aesthetics",
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("inbound messages serialize")
    }
}

/// Partial update of the live motion parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigPatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alignment: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohesion: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perception_range: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub separation_range: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_speed: Option<f64>,
}

impl ConfigPatch {
    pub fn apply(&self, base: &FlockConfig) -> FlockConfig {
        FlockConfig {
            separation: self.separation.unwrap_or(base.separation),
            alignment: self.alignment.unwrap_or(base.alignment),
            cohesion: self.cohesion.unwrap_or(base.cohesion),
            perception_range: self.perception_range.unwrap_or(base.perception_range),
            separation_range: self.separation_range.unwrap_or(base.separation_range),
            max_speed: self.max_speed.unwrap_or(base.max_speed),
            flock_size: base.flock_size,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AestheticsPatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stroke_length: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stroke_width: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub palette: Option<String>,
}

impl AestheticsPatch {
    pub fn apply(&self, base: &Aesthetics) -> Result<Aesthetics, String> {
        let mut next = *base;
        if let Some(len) = self.stroke_length {
            next.stroke_length = u8::try_from(len)
                .ok()
                .filter(|&l| l <= 100)
                .ok_or_else(|| format!("stroke_length must be within 0..=100, got {len}"))?;
        }
        if let Some(width) = self.stroke_width {
            next.stroke_width = width;
        }
        if let Some(bg) = &self.background {
            next.background = bg.parse().map_err(|e: crate::render::RenderError| e.to_string())?;
        }
        if let Some(p) = &self.palette {
            next.palette = p.parse().map_err(|e: crate::render::RenderError| e.to_string())?;
        }
        next.validate().map_err(|e| e.to_string())?;
        Ok(next)
    }
}

pub fn parse_inbound(line: &str) -> Result<InboundMessage, ProtocolError> {
    let value: Value = serde_json::from_str(line).map_err(|e| ProtocolError::Json(e.to_string()))?;
    let kind = value
        .get("kind")
        .and_then(Value::as_str)
        .ok_or(ProtocolError::MissingKind)?
        .to_string();
    if !INBOUND_KINDS.contains(&kind.as_str()) {
        return Err(ProtocolError::UnknownKind(kind));
    }
    serde_json::from_value(value).map_err(|e| ProtocolError::InvalidPayload {
        kind,
        detail: e.to_string(),
    })
}

/// Motion parameters as sent to viewers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigView {
    pub separation: f64,
    pub alignment: f64,
    pub cohesion: f64,
    pub perception_range: f64,
    pub separation_range: f64,
    pub max_speed: f64,
    pub flock_size: usize,
}

impl From<&FlockConfig> for ConfigView {
    fn from(c: &FlockConfig) -> Self {
        Self {
            separation: c.separation,
            alignment: c.alignment,
            cohesion: c.cohesion,
            perception_range: c.perception_range,
            separation_range: c.separation_range,
            max_speed: c.max_speed,
            flock_size: c.flock_size,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeSource {
    Physio,
    Operator,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionView {
    pub to: Emotion,
    pub progress: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outbound {
    StateSnapshot {
        tick: u64,
        emotion: Emotion,
        transition: Option<TransitionView>,
        config: ConfigView,
        aesthetics: Aesthetics,
        /// `[x, y, vx, vy]` per boid, rounded to two decimals.
        boids: Vec<[f64; 4]>,
    },
    EmotionChanged {
        tick: u64,
        from: Emotion,
        to: Emotion,
        source: ChangeSource,
    },
    /// Collective statistics only; per-person metrics never leave the service.
    MetricsUpdate {
        tick: u64,
        participants: usize,
        votes: BTreeMap<Emotion, usize>,
        collective: Emotion,
        dropped_samples: u64,
    },
    Ack {
        tick: u64,
        request: String,
        detail: String,
    },
    Error {
        tick: u64,
        message: String,
    },
}

impl Outbound {
    pub fn kind(&self) -> &'static str {
        match self {
            Outbound::StateSnapshot { .. } => "state_snapshot",
            Outbound::EmotionChanged { .. } => "emotion_changed",
            Outbound::MetricsUpdate { .. } => "metrics_update",
            Outbound::Ack { .. } => "ack",
            Outbound::Error { .. } => "error",
        }
    }
}

/// An outbound message stamped with the session-wide sequence number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutboundMessage {
    pub seq: u64,
    #[serde(flatten)]
    pub body: Outbound,
}

impl OutboundMessage {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("outbound messages serialize")
    }
}

/// Rounds to two decimals for the wire.
pub fn quantize(v: f64) -> f64 {
    let q = (v * 100.0).round() / 100.0;
    if q == 0.0 {
        0.0
    } else {
        q
    }
}
