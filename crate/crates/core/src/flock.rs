//! Deterministic boids simulation on a toroidal plane.
//!
//! Each step reads every force from the pre-step snapshot (synchronous
//! update), then integrates with explicit Euler:
//!
//! ```text
//! v' = clamp(v + S·separation + M·alignment + K·cohesion, V)
//! p' = wrap(p + v'·dt)
//! ```
//!
//! Separation sums `(self − other) / d²` over flockmates within `r`,
//! alignment is the mean neighbor velocity minus the own velocity, and
//! cohesion is the neighbor centroid minus the own position, both over
//! flockmates within `R`. All displacements use the toroidal metric.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::SpatialGrid;
use crate::vec2::Vec2;

pub const DEFAULT_WIDTH: f64 = 800.0;
pub const DEFAULT_HEIGHT: f64 = 600.0;
pub const DEFAULT_FLOCK_SIZE: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum FlockError {
    #[error("world bounds must be finite and positive, got {width}×{height}")]
    InvalidBounds { width: f64, height: f64 },
    #[error("invalid flock config: {field} {reason}")]
    InvalidConfig { field: &'static str, reason: &'static str },
    #[error("boid index {index} out of range for flock of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("flock holds {actual} boids but config expects {expected}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("non-finite value produced for boid {index} at tick {tick}")]
    NonFinite { index: usize, tick: u64 },
}

/// Width × height of the toroidal world, in world units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub width: f64,
    pub height: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
        }
    }
}

impl Bounds {
    pub fn new(width: f64, height: f64) -> Result<Self, FlockError> {
        if !(width.is_finite() && height.is_finite() && width > 0.0 && height > 0.0) {
            return Err(FlockError::InvalidBounds { width, height });
        }
        Ok(Self { width, height })
    }

    /// Maps a point back into `[0, width) × [0, height)`.
    pub fn wrap(&self, p: Vec2) -> Vec2 {
        Vec2::new(wrap_axis(p.x, self.width), wrap_axis(p.y, self.height))
    }

    /// Shortest displacement from `from` to `to` on the torus.
    pub fn displacement(&self, from: Vec2, to: Vec2) -> Vec2 {
        Vec2::new(
            shortest_axis(to.x - from.x, self.width),
            shortest_axis(to.y - from.y, self.height),
        )
    }

    pub fn distance_squared(&self, a: Vec2, b: Vec2) -> f64 {
        self.displacement(a, b).length_squared()
    }

    pub fn contains(&self, p: Vec2) -> bool {
        (0.0..self.width).contains(&p.x) && (0.0..self.height).contains(&p.y)
    }
}

fn wrap_axis(v: f64, extent: f64) -> f64 {
    let w = v.rem_euclid(extent);
    // rem_euclid can round up to `extent` for tiny negative inputs
    if w >= extent {
        0.0
    } else {
        w
    }
}

fn shortest_axis(d: f64, extent: f64) -> f64 {
    let half = extent * 0.5;
    if d > half {
        d - extent
    } else if d < -half {
        d + extent
    } else {
        d
    }
}

/// Motion parameters for one flock behavior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlockConfig {
    /// Separation weight `S`.
    pub separation: f64,
    /// Alignment weight `M`.
    pub alignment: f64,
    /// Cohesion weight `K`.
    pub cohesion: f64,
    /// Perception range `R`: alignment and cohesion radius.
    pub perception_range: f64,
    /// Separation range `r`.
    pub separation_range: f64,
    /// Maximum speed `V`, world units per step.
    pub max_speed: f64,
    /// Flock size `N`.
    pub flock_size: usize,
}

impl FlockConfig {
    pub fn validate(&self) -> Result<(), FlockError> {
        let non_negative = [
            ("separation", self.separation),
            ("alignment", self.alignment),
            ("cohesion", self.cohesion),
            ("perception_range", self.perception_range),
            ("separation_range", self.separation_range),
        ];
        for (field, value) in non_negative {
            if !value.is_finite() {
                return Err(FlockError::InvalidConfig {
                    field,
                    reason: "must be finite",
                });
            }
            if value < 0.0 {
                return Err(FlockError::InvalidConfig {
                    field,
                    reason: "must be >= 0",
                });
            }
        }
        if !(self.max_speed.is_finite() && self.max_speed > 0.0) {
            return Err(FlockError::InvalidConfig {
                field: "max_speed",
                reason: "must be finite and > 0",
            });
        }
        if self.flock_size == 0 {
            return Err(FlockError::InvalidConfig {
                field: "flock_size",
                reason: "must be >= 1",
            });
        }
        Ok(())
    }

    /// Radius that bounds every interaction; zero disables neighbor search.
    pub fn interaction_range(&self) -> f64 {
        self.perception_range.max(self.separation_range)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoidState {
    pub position: Vec2,
    pub velocity: Vec2,
}

/// Snapshot of the whole flock. Cloning is cheap enough to hand snapshots
/// to renderers or broadcasters.
#[derive(Debug, Clone, PartialEq)]
pub struct FlockState {
    pub boids: Vec<BoidState>,
    pub tick: u64,
    pub bounds: Bounds,
    rng: ChaCha8Rng,
}

/// How `step` finds interacting flockmates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeighborSearch {
    #[default]
    Grid,
    BruteForce,
}

/// Scatters `config.flock_size` boids uniformly over `bounds`, heading in
/// uniformly random directions at half the maximum speed.
pub fn init_flock(config: &FlockConfig, bounds: Bounds, seed: u64) -> Result<FlockState, FlockError> {
    let bounds = Bounds::new(bounds.width, bounds.height)?;
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let speed = config.max_speed * 0.5;
    let boids = (0..config.flock_size)
        .map(|_| {
            let position = bounds.wrap(Vec2::new(
                rng.gen::<f64>() * bounds.width,
                rng.gen::<f64>() * bounds.height,
            ));
            let velocity = Vec2::from_angle(rng.gen::<f64>() * TAU) * speed;
            BoidState { position, velocity }
        })
        .collect();
    Ok(FlockState {
        boids,
        tick: 0,
        bounds,
        rng,
    })
}

impl FlockState {
    /// Builds a state from explicit boids; positions are wrapped into bounds.
    pub fn from_boids(boids: Vec<BoidState>, bounds: Bounds, seed: u64) -> Result<Self, FlockError> {
        let bounds = Bounds::new(bounds.width, bounds.height)?;
        let boids = boids
            .into_iter()
            .map(|b| BoidState {
                position: bounds.wrap(b.position),
                velocity: b.velocity,
            })
            .collect();
        Ok(Self {
            boids,
            tick: 0,
            bounds,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn len(&self) -> usize {
        self.boids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boids.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.boids.iter().map(|b| b.position).collect()
    }

    /// Indices `j != i` within `radius` of boid `i`, ascending.
    pub fn neighbors(&self, i: usize, radius: f64) -> Result<Vec<usize>, FlockError> {
        if i >= self.boids.len() {
            return Err(FlockError::IndexOutOfRange {
                index: i,
                len: self.boids.len(),
            });
        }
        let grid = SpatialGrid::build(&self.positions(), self.bounds, radius);
        let center = self.boids[i].position;
        let r2 = radius * radius;
        let mut out = Vec::new();
        grid.for_each_candidate(center, radius, |j| {
            if j != i && self.bounds.distance_squared(center, self.boids[j].position) <= r2 {
                out.push(j);
            }
        });
        out.sort_unstable();
        Ok(out)
    }

    pub fn step(&self, config: &FlockConfig, dt: f64) -> Result<FlockState, FlockError> {
        self.step_with(config, dt, NeighborSearch::Grid)
    }

    pub fn step_with(&self, config: &FlockConfig, dt: f64, search: NeighborSearch) -> Result<FlockState, FlockError> {
        config.validate()?;
        if self.boids.len() != config.flock_size {
            return Err(FlockError::SizeMismatch {
                expected: config.flock_size,
                actual: self.boids.len(),
            });
        }

        let bounds = self.bounds;
        let mut rng = self.rng.clone();
        let range = config.interaction_range();
        let sep_r2 = config.separation_range * config.separation_range;
        let per_r2 = config.perception_range * config.perception_range;
        let positions = self.positions();
        let grid =
            (range > 0.0 && search == NeighborSearch::Grid).then(|| SpatialGrid::build(&positions, bounds, range));

        let mut close: Vec<usize> = Vec::new();
        let mut perceived: Vec<usize> = Vec::new();
        let mut next = Vec::with_capacity(self.boids.len());

        for (i, own) in self.boids.iter().enumerate() {
            close.clear();
            perceived.clear();
            if range > 0.0 {
                let mut consider = |j: usize| {
                    if j == i {
                        return;
                    }
                    let d2 = bounds.distance_squared(own.position, positions[j]);
                    if config.separation_range > 0.0 && d2 <= sep_r2 {
                        close.push(j);
                    }
                    if config.perception_range > 0.0 && d2 <= per_r2 {
                        perceived.push(j);
                    }
                };
                match &grid {
                    Some(g) => g.for_each_candidate(own.position, range, &mut consider),
                    None => (0..positions.len()).for_each(&mut consider),
                }
                close.sort_unstable();
                perceived.sort_unstable();
            }

            let separation = separation_force(own, close.iter().map(|&j| &self.boids[j]), &bounds, &mut rng);
            let alignment = alignment_force(own, perceived.iter().map(|&j| &self.boids[j]));
            let cohesion = cohesion_force(own, perceived.iter().map(|&j| &self.boids[j]), &bounds);

            let steered = own.velocity
                + separation * config.separation
                + alignment * config.alignment
                + cohesion * config.cohesion;
            let velocity = clamp_velocity(steered, config.max_speed);
            let position = bounds.wrap(own.position + velocity * dt);
            if !(velocity.is_finite() && position.is_finite()) {
                return Err(FlockError::NonFinite {
                    index: i,
                    tick: self.tick,
                });
            }
            next.push(BoidState { position, velocity });
        }

        Ok(FlockState {
            boids: next,
            tick: self.tick + 1,
            bounds,
            rng,
        })
    }
}

/// Inverse-distance repulsion: Σ (own − other) / d². Coincident flockmates
/// push along a unit direction drawn from `rng`.
pub fn separation_force<'a, R: Rng + ?Sized>(
    own: &BoidState,
    close: impl IntoIterator<Item = &'a BoidState>,
    bounds: &Bounds,
    rng: &mut R,
) -> Vec2 {
    let mut force = Vec2::ZERO;
    for other in close {
        let away = bounds.displacement(other.position, own.position);
        let d2 = away.length_squared();
        if d2 > 0.0 {
            force += away / d2;
        } else {
            force += Vec2::from_angle(rng.gen::<f64>() * TAU);
        }
    }
    force
}

/// Mean neighbor velocity minus the own velocity.
pub fn alignment_force<'a>(own: &BoidState, perceived: impl IntoIterator<Item = &'a BoidState>) -> Vec2 {
    let mut sum = Vec2::ZERO;
    let mut count = 0usize;
    for other in perceived {
        sum += other.velocity;
        count += 1;
    }
    if count == 0 {
        return Vec2::ZERO;
    }
    sum / count as f64 - own.velocity
}

/// Neighbor centroid minus the own position, measured on the torus.
pub fn cohesion_force<'a>(
    own: &BoidState,
    perceived: impl IntoIterator<Item = &'a BoidState>,
    bounds: &Bounds,
) -> Vec2 {
    let mut sum = Vec2::ZERO;
    let mut count = 0usize;
    for other in perceived {
        sum += bounds.displacement(own.position, other.position);
        count += 1;
    }
    if count == 0 {
        return Vec2::ZERO;
    }
    sum / count as f64
}

/// Rescales `v` to `max_speed` when it is longer; shorter and zero vectors
/// pass through unchanged.
pub fn clamp_velocity(v: Vec2, max_speed: f64) -> Vec2 {
    let speed = v.length();
    if speed > max_speed {
        v * (max_speed / speed)
    } else {
        v
    }
}
