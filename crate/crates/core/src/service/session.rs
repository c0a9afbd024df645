//! Deterministic session state machine.
//!
//! A session owns the flock, the active emotion and its transition, and one
//! physio pipeline per participant. It consumes inbound messages and ticks,
//! and produces sequenced outbound messages. It performs no I/O, so a live
//! server and an offline replay driving it with the same inputs emit the
//! same bytes.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emotion::{config_for, parse_emotion, Emotion, EmotionTransition, DEFAULT_TRANSITION_SECS};
use crate::flock::{init_flock, Bounds, FlockConfig, FlockError, FlockState, DEFAULT_FLOCK_SIZE};
use crate::physio::{aggregate, PersonPipeline, RrSample, WindowConfig, WindowOutcome};
use crate::render::Aesthetics;

use super::protocol::{
    parse_inbound, quantize, AestheticsPatch, ChangeSource, ConfigPatch, ConfigView, InboundMessage, Outbound,
    OutboundMessage, TransitionView,
};

pub const DEFAULT_TICK_RATE: f64 = 30.0;
/// Consecutive differing collective readings needed to end an operator override.
pub const OVERRIDE_RELEASE_STREAK: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub flock_size: usize,
    pub bounds: Bounds,
    pub seed: u64,
    pub tick_rate: f64,
    pub initial_emotion: Emotion,
    pub transition_secs: f64,
    pub aesthetics: Aesthetics,
    pub windows: WindowConfig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            flock_size: DEFAULT_FLOCK_SIZE,
            bounds: Bounds::default(),
            seed: 0,
            tick_rate: DEFAULT_TICK_RATE,
            initial_emotion: Emotion::Joy,
            transition_secs: DEFAULT_TRANSITION_SECS,
            aesthetics: Aesthetics::default(),
            windows: WindowConfig::default(),
        }
    }
}

/// Optional overrides on top of [`SessionConfig::default`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionOverrides {
    pub flock_size: Option<usize>,
    pub bounds: Option<(f64, f64)>,
    pub seed: Option<u64>,
    pub tick_rate: Option<f64>,
    pub initial_emotion: Option<String>,
    pub transition_secs: Option<f64>,
    pub aesthetics: Option<Aesthetics>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid session settings: {}", .0.iter().map(|f| format!("{}: {}", f.field, f.message)).collect::<Vec<_>>().join("; "))]
pub struct InvalidSettings(pub Vec<FieldError>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: &'static str,
    pub message: String,
}

impl SessionOverrides {
    pub fn resolve(&self) -> Result<SessionConfig, InvalidSettings> {
        let mut cfg = SessionConfig::default();
        let mut errors = Vec::new();
        let mut fail = |field, message: String| errors.push(FieldError { field, message });

        if let Some(n) = self.flock_size {
            if n == 0 {
                fail("flock_size", "must be at least 1".into());
            }
            cfg.flock_size = n;
        }
        if let Some((w, h)) = self.bounds {
            match Bounds::new(w, h) {
                Ok(b) => cfg.bounds = b,
                Err(e) => fail("bounds", e.to_string()),
            }
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(rate) = self.tick_rate {
            if !(rate.is_finite() && rate > 0.0) {
                fail(
                    "tick_rate",
                    format!("must be a positive number of steps per second, got {rate}"),
                );
            }
            cfg.tick_rate = rate;
        }
        if let Some(name) = &self.initial_emotion {
            match parse_emotion(name) {
                Ok(e) => cfg.initial_emotion = e,
                Err(e) => fail("initial_emotion", e.to_string()),
            }
        }
        if let Some(secs) = self.transition_secs {
            if !(secs.is_finite() && secs >= 0.0) {
                fail("transition_secs", format!("must be >= 0, got {secs}"));
            }
            cfg.transition_secs = secs;
        }
        if let Some(a) = self.aesthetics {
            if let Err(e) = a.validate() {
                fail("aesthetics", e.to_string());
            }
            cfg.aesthetics = a;
        }
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(InvalidSettings(errors))
        }
    }
}

/// Who should receive an outbound message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Audience {
    Everyone,
    /// Only the connection whose message caused it.
    Sender,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub audience: Audience,
    pub seq: u64,
    pub kind: &'static str,
    /// Serialized once; every recipient gets these exact bytes.
    pub line: Arc<str>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OperatorOverride {
    emotion: Emotion,
    differing_streak: u32,
}

#[derive(Debug)]
pub struct Session {
    config: SessionConfig,
    flock: FlockState,
    /// Motion parameters when no transition is running.
    motion: FlockConfig,
    transition: Option<EmotionTransition>,
    transition_ticks: u64,
    emotion: Emotion,
    aesthetics: Aesthetics,
    operator: Option<OperatorOverride>,
    participants: BTreeMap<String, PersonPipeline>,
    dropped_samples: u64,
    rejected_messages: u64,
    next_seq: u64,
    latest_snapshot: Option<Delivery>,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self, FlockError> {
        let motion = config_for(config.initial_emotion, config.flock_size);
        let flock = init_flock(&motion, config.bounds, config.seed)?;
        let mut session = Self {
            emotion: config.initial_emotion,
            aesthetics: config.aesthetics,
            config,
            flock,
            motion,
            transition: None,
            transition_ticks: 0,
            operator: None,
            participants: BTreeMap::new(),
            dropped_samples: 0,
            rejected_messages: 0,
            next_seq: 0,
            latest_snapshot: None,
        };
        session.snapshot();
        Ok(session)
    }

    pub fn create(overrides: &SessionOverrides) -> Result<Self, SessionError> {
        let config = overrides.resolve()?;
        Ok(Self::new(config)?)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn flock(&self) -> &FlockState {
        &self.flock
    }

    pub fn tick_count(&self) -> u64 {
        self.flock.tick
    }

    pub fn emotion(&self) -> Emotion {
        self.emotion
    }

    pub fn aesthetics(&self) -> &Aesthetics {
        &self.aesthetics
    }

    pub fn participants(&self) -> usize {
        self.participants.len()
    }

    pub fn dropped_samples(&self) -> u64 {
        self.dropped_samples
    }

    pub fn rejected_messages(&self) -> u64 {
        self.rejected_messages
    }

    pub fn transition(&self) -> Option<&EmotionTransition> {
        self.transition.as_ref()
    }

    /// Motion parameters in effect for the next step.
    pub fn current_config(&self) -> FlockConfig {
        self.transition.as_ref().map_or(self.motion, EmotionTransition::config)
    }

    /// Metrics of one participant's pipeline, for diagnostics only.
    pub fn participant(&self, person_id: &str) -> Option<&PersonPipeline> {
        self.participants.get(person_id)
    }

    pub fn latest_snapshot(&self) -> Option<&Delivery> {
        self.latest_snapshot.as_ref()
    }

    fn emit(&mut self, audience: Audience, body: Outbound) -> Delivery {
        let seq = self.next_seq;
        self.next_seq += 1;
        let kind = body.kind();
        let line: Arc<str> = OutboundMessage { seq, body }.to_line().into();
        Delivery {
            audience,
            seq,
            kind,
            line,
        }
    }

    fn snapshot(&mut self) -> Delivery {
        let boids = self
            .flock
            .boids
            .iter()
            .map(|b| {
                [
                    quantize(b.position.x),
                    quantize(b.position.y),
                    quantize(b.velocity.x),
                    quantize(b.velocity.y),
                ]
            })
            .collect();
        let body = Outbound::StateSnapshot {
            tick: self.flock.tick,
            emotion: self.emotion,
            transition: self.transition.as_ref().map(|t| TransitionView {
                to: t.target(),
                progress: if t.duration() > 0.0 {
                    t.elapsed() / t.duration()
                } else {
                    1.0
                },
            }),
            config: ConfigView::from(&self.current_config()),
            aesthetics: self.aesthetics,
            boids,
        };
        let d = self.emit(Audience::Everyone, body);
        self.latest_snapshot = Some(d.clone());
        d
    }

    /// Advances the simulation one step and the transition clock by one
    /// tick period, then emits a snapshot.
    pub fn tick(&mut self) -> Result<Delivery, FlockError> {
        let config = self.current_config();
        self.flock = self.flock.step(&config, 1.0)?;
        if let Some(t) = &mut self.transition {
            // elapsed from a tick count so the end is hit exactly
            self.transition_ticks += 1;
            t.set_elapsed(self.transition_ticks as f64 / self.config.tick_rate);
            if t.is_complete() {
                self.motion = t.target_config();
                self.transition = None;
            }
        }
        Ok(self.snapshot())
    }

    fn begin_transition(&mut self, to: Emotion, source: ChangeSource) -> Delivery {
        let from = self.emotion;
        let start = self.current_config();
        self.transition = Some(EmotionTransition::new(start, to, self.config.transition_secs));
        self.transition_ticks = 0;
        self.emotion = to;
        if self.config.transition_secs <= 0.0 {
            self.motion = config_for(to, self.config.flock_size);
            self.transition = None;
        }
        let tick = self.flock.tick;
        self.emit(Audience::Everyone, Outbound::EmotionChanged { tick, from, to, source })
    }

    fn error(&mut self, message: String) -> Delivery {
        self.rejected_messages += 1;
        let tick = self.flock.tick;
        self.emit(Audience::Sender, Outbound::Error { tick, message })
    }

    fn ack(&mut self, request: &str, detail: String) -> Delivery {
        let tick = self.flock.tick;
        self.emit(
            Audience::Sender,
            Outbound::Ack {
                tick,
                request: request.to_string(),
                detail,
            },
        )
    }

    /// Parses and applies one wire line. Malformed input yields an error
    /// message to the sender and never disturbs the session.
    pub fn handle_line(&mut self, line: &str) -> Vec<Delivery> {
        match parse_inbound(line) {
            Ok(msg) => self.handle(msg),
            Err(e) => vec![self.error(e.to_string())],
        }
    }

    pub fn handle(&mut self, msg: InboundMessage) -> Vec<Delivery> {
        match msg {
            InboundMessage::RrSample {
                person_id,
                timestamp_ms,
                rr_ms,
            } => self.handle_rr(&person_id, timestamp_ms, rr_ms).1,
            InboundMessage::SetEmotion { emotion } => self.handle_override(&emotion),
            InboundMessage::SetConfig(patch) => self.handle_set_config(&patch),
            InboundMessage::SetAesthetics(patch) => self.handle_set_aesthetics(&patch),
        }
    }

    /// Routes a sample into the person's pipeline. Returns the new
    /// collective emotion when it changed.
    pub fn handle_rr(&mut self, person_id: &str, timestamp_ms: i64, rr_ms: f64) -> (Option<Emotion>, Vec<Delivery>) {
        let windows = self.config.windows;
        let pipeline = self
            .participants
            .entry(person_id.to_string())
            .or_insert_with(|| PersonPipeline::new(person_id, windows));
        let reports = match pipeline.push(RrSample::new(timestamp_ms, rr_ms)) {
            Ok(r) => r,
            Err(_) => {
                self.dropped_samples += 1;
                return (None, Vec::new());
            }
        };
        let assessed = reports
            .iter()
            .any(|r| matches!(r.outcome, WindowOutcome::Matched(_) | WindowOutcome::NoMatch(_)));
        if !assessed {
            return (None, Vec::new());
        }

        let latest: Vec<Emotion> = self.participants.values().filter_map(PersonPipeline::latest).collect();
        let Ok(collective) = aggregate(latest.iter().copied()) else {
            return (None, Vec::new());
        };
        let mut votes = BTreeMap::new();
        for e in &latest {
            *votes.entry(*e).or_insert(0) += 1;
        }
        let tick = self.flock.tick;
        let mut out = vec![self.emit(
            Audience::Everyone,
            Outbound::MetricsUpdate {
                tick,
                participants: self.participants.len(),
                votes,
                collective,
                dropped_samples: self.dropped_samples,
            },
        )];

        if let Some(op) = &mut self.operator {
            if collective == op.emotion {
                op.differing_streak = 0;
                return (None, out);
            }
            op.differing_streak += 1;
            if op.differing_streak < OVERRIDE_RELEASE_STREAK {
                return (None, out);
            }
            self.operator = None;
        }
        if collective == self.emotion {
            return (None, out);
        }
        out.push(self.begin_transition(collective, ChangeSource::Physio));
        (Some(collective), out)
    }

    /// Operator steering: starts a transition and holds the emotion against
    /// physio readings until they disagree twice in a row.
    pub fn handle_override(&mut self, name: &str) -> Vec<Delivery> {
        let emotion = match parse_emotion(name) {
            Ok(e) => e,
            Err(e) => return vec![self.error(e.to_string())],
        };
        if emotion == self.emotion {
            return vec![self.ack("set_emotion", format!("already {emotion}"))];
        }
        self.operator = Some(OperatorOverride {
            emotion,
            differing_streak: 0,
        });
        let changed = self.begin_transition(emotion, ChangeSource::Operator);
        let ack = self.ack("set_emotion", format!("transitioning to {emotion}"));
        vec![changed, ack]
    }

    pub fn handle_set_config(&mut self, patch: &ConfigPatch) -> Vec<Delivery> {
        let next = patch.apply(&self.current_config());
        if let Err(e) = next.validate() {
            return vec![self.error(e.to_string())];
        }
        self.motion = next;
        self.transition = None;
        vec![self.ack("set_config", "motion parameters updated".into())]
    }

    pub fn handle_set_aesthetics(&mut self, patch: &AestheticsPatch) -> Vec<Delivery> {
        match patch.apply(&self.aesthetics) {
            Ok(a) => {
                self.aesthetics = a;
                vec![self.ack("set_aesthetics", "aesthetics updated".into())]
            }
            Err(e) => vec![self.error(e)],
        }
    }
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Settings(#[from] InvalidSettings),
    #[error(transparent)]
    Flock(#[from] FlockError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::service::protocol::OutboundMessage;

    fn parse(d: &Delivery) -> OutboundMessage {
        serde_json::from_str(&d.line).unwrap()
    }

    #[test]
    fn defaults_start_in_joy() {
        let s = Session::create(&SessionOverrides::default()).unwrap();
        assert_eq!(s.emotion(), Emotion::Joy);
        let c = s.current_config();
        assert_eq!((c.max_speed, c.perception_range), (2.0, 60.0));
        assert_eq!(s.config().tick_rate, 30.0);
    }

    #[test]
    fn override_flock_size() {
        let s = Session::create(&SessionOverrides {
            flock_size: Some(10),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(s.flock().len(), 10);
    }

    #[test]
    fn invalid_overrides_name_fields() {
        let err = SessionOverrides {
            tick_rate: Some(0.0),
            flock_size: Some(0),
            initial_emotion: Some("bliss".into()),
            ..Default::default()
        }
        .resolve()
        .unwrap_err();
        let fields: Vec<_> = err.0.iter().map(|f| f.field).collect();
        assert_eq!(fields, vec!["flock_size", "tick_rate", "initial_emotion"]);
    }

    #[test]
    fn set_emotion_anger_targets_fast_config() {
        let mut s = Session::new(SessionConfig::default()).unwrap();
        let out = s.handle_override("anger");
        assert_eq!(out[0].kind, "emotion_changed");
        assert_eq!(out[1].kind, "ack");
        assert_eq!(s.transition().unwrap().target_config().max_speed, 10.0);
        assert_eq!(s.emotion(), Emotion::Anger);
    }

    #[test]
    fn set_emotion_same_is_noop_ack() {
        let mut s = Session::new(SessionConfig::default()).unwrap();
        let out = s.handle_override("JOY");
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].kind, "ack");
        assert!(s.transition().is_none());
    }

    #[test]
    fn set_emotion_unknown_lists_names() {
        let mut s = Session::new(SessionConfig::default()).unwrap();
        let out = s.handle_override("bliss");
        assert_eq!(out[0].kind, "error");
        assert_eq!(out[0].audience, Audience::Sender);
        match parse(&out[0]).body {
            Outbound::Error { message, .. } => {
                for e in Emotion::ALL {
                    assert!(message.contains(e.name()));
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn transition_completes_after_duration() {
        let mut s = Session::new(SessionConfig::default()).unwrap();
        s.handle_override("anger");
        for _ in 0..59 {
            s.tick().unwrap();
        }
        assert!(s.transition().is_some());
        s.tick().unwrap();
        assert!(s.transition().is_none());
        assert_eq!(s.current_config(), config_for(Emotion::Anger, 100));
    }

    #[test]
    fn bad_sample_is_counted_not_fatal() {
        let mut s = Session::new(SessionConfig::default()).unwrap();
        let (changed, out) = s.handle_rr("p", 1_000, 9999.0);
        assert!(changed.is_none() && out.is_empty());
        assert_eq!(s.dropped_samples(), 1);
        let out = s.handle_line("{\"kind\":\"teleport\"}");
        assert_eq!(out[0].kind, "error");
        assert_eq!(s.rejected_messages(), 1);
    }

    #[test]
    fn set_config_and_aesthetics() {
        let mut s = Session::new(SessionConfig::default()).unwrap();
        let out = s.handle_line(r#"{"kind":"set_config","max_speed":7}"#);
        assert_eq!(out[0].kind, "ack");
        assert_eq!(s.current_config().max_speed, 7.0);
        let out = s.handle_line(r#"{"kind":"set_config","max_speed":-1}"#);
        assert_eq!(out[0].kind, "error");
        assert_eq!(s.current_config().max_speed, 7.0);
        let out = s.handle_line(r#"{"kind":"set_aesthetics","stroke_length":100,"stroke_width":30}"#);
        assert_eq!(out[0].kind, "ack");
        assert_eq!(s.aesthetics().stroke_width, 30);
    }

    #[test]
    fn sequence_numbers_increase() {
        let mut s = Session::new(SessionConfig::default()).unwrap();
        let mut last = s.latest_snapshot().unwrap().seq;
        for _ in 0..100 {
            let d = s.tick().unwrap();
            assert!(d.seq > last);
            last = d.seq;
        }
    }

    #[test]
    fn snapshot_values_are_quantized() {
        let s = Session::new(SessionConfig::default()).unwrap();
        match parse(s.latest_snapshot().unwrap()).body {
            Outbound::StateSnapshot { boids, tick, .. } => {
                assert_eq!(tick, 0);
                assert_eq!(boids.len(), 100);
                for v in boids.iter().flatten() {
                    assert_eq!(quantize(*v), *v);
                }
            }
            other => panic!("{other:?}"),
        }
    }
}
