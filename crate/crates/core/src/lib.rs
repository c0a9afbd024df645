//! Emotion-driven boids.
//!
//! A flock's steering weights, ranges and speed are picked per basic
//! emotion. Emotions come either from an operator or from heart-rate
//! variability footprints of the people being watched; the flock's trails
//! are rendered to raster frames or streamed to live viewers.

pub mod analysis;
pub mod emotion;
pub mod flock;
pub mod grid;
pub mod physio;
pub mod render;
pub mod service;
pub mod spectral;
pub mod trajectory;
pub mod vec2;

pub use emotion::{config_for, parse_emotion, Emotion, EmotionTransition};
pub use flock::{init_flock, BoidState, Bounds, FlockConfig, FlockError, FlockState, NeighborSearch};
pub use vec2::Vec2;
