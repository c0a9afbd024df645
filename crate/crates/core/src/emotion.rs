//! The eight basic emotions and the motion profile each one drives.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flock::FlockConfig;

/// Default blend time between two emotion profiles, in seconds.
pub const DEFAULT_TRANSITION_SECS: f64 = 2.0;

/// Plutchik's basic emotions. Declaration order is the canonical ordering
/// used for every tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Joy,
    Sadness,
    Fear,
    Anger,
    Trust,
    Disgust,
    Surprise,
    Anticipation,
}

impl Emotion {
    pub const ALL: [Emotion; 8] = [
        Emotion::Joy,
        Emotion::Sadness,
        Emotion::Fear,
        Emotion::Anger,
        Emotion::Trust,
        Emotion::Disgust,
        Emotion::Surprise,
        Emotion::Anticipation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Joy => "joy",
            Emotion::Sadness => "sadness",
            Emotion::Fear => "fear",
            Emotion::Anger => "anger",
            Emotion::Trust => "trust",
            Emotion::Disgust => "disgust",
            Emotion::Surprise => "surprise",
            Emotion::Anticipation => "anticipation",
        }
    }

    /// Position in the canonical ordering.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn profile(self) -> &'static MotionProfile {
        &MOTION_PROFILES[self.index()]
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error(
    "unknown emotion {given:?}; expected one of: joy, sadness, fear, anger, trust, disgust, surprise, anticipation"
)]
pub struct UnknownEmotion {
    pub given: String,
}

impl FromStr for Emotion {
    type Err = UnknownEmotion;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_emotion(s)
    }
}

/// Case-insensitive lookup of an emotion name.
pub fn parse_emotion(name: &str) -> Result<Emotion, UnknownEmotion> {
    let trimmed = name.trim();
    Emotion::ALL
        .into_iter()
        .find(|e| e.name().eq_ignore_ascii_case(trimmed))
        .ok_or_else(|| UnknownEmotion {
            given: name.to_string(),
        })
}

/// The six motion coefficients assigned to an emotion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionProfile {
    pub separation: f64,
    pub alignment: f64,
    pub cohesion: f64,
    pub perception_range: f64,
    pub separation_range: f64,
    pub max_speed: f64,
}

const fn profile(s: f64, m: f64, k: f64, big_r: f64, small_r: f64, v: f64) -> MotionProfile {
    MotionProfile {
        separation: s,
        alignment: m,
        cohesion: k,
        perception_range: big_r,
        separation_range: small_r,
        max_speed: v,
    }
}

/// Indexed by canonical emotion order.
const MOTION_PROFILES: [MotionProfile; 8] = [
    profile(0.05, 0.05, 0.05, 60.0, 30.0, 2.0), // joy
    profile(0.05, 0.05, 0.05, 0.0, 30.0, 1.0),  // sadness
    profile(0.1, 0.05, 0.05, 60.0, 30.0, 1.0),  // fear
    profile(0.01, 0.1, 0.1, 0.0, 0.0, 10.0),    // anger
    profile(0.05, 0.1, 0.05, 60.0, 30.0, 2.0),  // trust
    profile(0.1, 0.05, 0.1, 60.0, 60.0, 5.0),   // disgust
    profile(0.05, 0.05, 0.1, 60.0, 60.0, 5.0),  // surprise
    profile(0.1, 0.1, 0.05, 60.0, 30.0, 4.0),   // anticipation
];

impl MotionProfile {
    pub fn with_flock_size(&self, flock_size: usize) -> FlockConfig {
        FlockConfig {
            separation: self.separation,
            alignment: self.alignment,
            cohesion: self.cohesion,
            perception_range: self.perception_range,
            separation_range: self.separation_range,
            max_speed: self.max_speed,
            flock_size,
        }
    }
}

/// Flock configuration for `emotion` with the caller's flock size.
pub fn config_for(emotion: Emotion, flock_size: usize) -> FlockConfig {
    emotion.profile().with_flock_size(flock_size)
}

/// A linear blend from an arbitrary configuration towards an emotion's
/// profile. `elapsed` is kept within `[0, duration]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmotionTransition {
    from: FlockConfig,
    to: Emotion,
    duration: f64,
    elapsed: f64,
}

impl EmotionTransition {
    /// Negative or non-finite durations are treated as instantaneous.
    pub fn new(from: FlockConfig, to: Emotion, duration: f64) -> Self {
        let duration = if duration.is_finite() && duration > 0.0 {
            duration
        } else {
            0.0
        };
        Self {
            from,
            to,
            duration,
            elapsed: 0.0,
        }
    }

    pub fn from_config(&self) -> &FlockConfig {
        &self.from
    }

    pub fn target(&self) -> Emotion {
        self.to
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn elapsed(&self) -> f64 {
        self.elapsed
    }

    pub fn set_elapsed(&mut self, elapsed: f64) {
        self.elapsed = elapsed.clamp(0.0, self.duration);
    }

    pub fn advance(&mut self, dt: f64) {
        self.set_elapsed(self.elapsed + dt.max(0.0));
    }

    pub fn is_complete(&self) -> bool {
        self.elapsed >= self.duration
    }

    pub fn target_config(&self) -> FlockConfig {
        config_for(self.to, self.from.flock_size)
    }

    /// Componentwise interpolation at `elapsed / duration`; exact at both ends.
    pub fn config(&self) -> FlockConfig {
        let target = self.target_config();
        if self.is_complete() {
            return target;
        }
        let t = self.elapsed / self.duration;
        let lerp = |a: f64, b: f64| (1.0 - t) * a + t * b;
        FlockConfig {
            separation: lerp(self.from.separation, target.separation),
            alignment: lerp(self.from.alignment, target.alignment),
            cohesion: lerp(self.from.cohesion, target.cohesion),
            perception_range: lerp(self.from.perception_range, target.perception_range),
            separation_range: lerp(self.from.separation_range, target.separation_range),
            max_speed: lerp(self.from.max_speed, target.max_speed),
            flock_size: self.from.flock_size,
        }
    }
}

/// Functional form of [`EmotionTransition::config`].
pub fn transition(t: &EmotionTransition) -> FlockConfig {
    t.config()
}
