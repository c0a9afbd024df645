//! Headless trail renderer producing RGB8 frames and binary PPM output.
//!
//! Every boid leaves a trail of its recent positions. Trails are drawn as
//! thick Bresenham lines in the boid's palette colour, fading linearly from
//! fully opaque at the newest segment to 10% at the oldest. All arithmetic
//! on pixel values is integer so frames are bit-identical across platforms.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flock::{Bounds, FlockState};
use crate::vec2::Vec2;

/// Stroke length at which trails are never evicted.
pub const PERSISTENT_STROKE_LENGTH: u8 = 100;
const OLDEST_OPACITY: f64 = 0.1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("stroke length must be within 0..=100, got {0}")]
    StrokeLength(u32),
    #[error("stroke width must be at least 1 pixel")]
    StrokeWidth,
    #[error("frame size must be non-zero, got {0}×{1}")]
    ZeroSize(u32, u32),
    #[error("trail buffer tracks {expected} boids but state has {actual}")]
    CountMismatch { expected: usize, actual: usize },
    #[error("malformed PPM: {0}")]
    Ppm(&'static str),
    #[error("unknown {kind} {given:?}")]
    UnknownOption { kind: &'static str, given: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub const fn hex(v: u32) -> Rgb {
        Rgb((v >> 16) as u8, (v >> 8) as u8, v as u8)
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02X}{:02X}{:02X}", self.0, self.1, self.2)
    }
}

pub const DARK_BACKGROUND: Rgb = Rgb::hex(0x14213D);
pub const BRIGHT_BACKGROUND: Rgb = Rgb::hex(0xF1F3F5);

/// Orange, red, yellow.
pub const WARM_COLORS: [Rgb; 3] = [Rgb::hex(0xFF8C00), Rgb::hex(0xE03131), Rgb::hex(0xFFD43B)];
/// Green, blue, indigo, violet.
pub const COLD_COLORS: [Rgb; 4] = [
    Rgb::hex(0x2F9E44),
    Rgb::hex(0x1971C2),
    Rgb::hex(0x4263EB),
    Rgb::hex(0x7048E8),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Background {
    #[default]
    Dark,
    Bright,
}

impl Background {
    pub fn color(self) -> Rgb {
        match self {
            Background::Dark => DARK_BACKGROUND,
            Background::Bright => BRIGHT_BACKGROUND,
        }
    }
}

impl FromStr for Background {
    type Err = RenderError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dark" => Ok(Background::Dark),
            "bright" => Ok(Background::Bright),
            _ => Err(RenderError::UnknownOption {
                kind: "background",
                given: s.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Palette {
    #[default]
    Warm,
    Cold,
    Mixed,
}

impl Palette {
    pub fn colors(self) -> Vec<Rgb> {
        match self {
            Palette::Warm => WARM_COLORS.to_vec(),
            Palette::Cold => COLD_COLORS.to_vec(),
            Palette::Mixed => WARM_COLORS.iter().chain(&COLD_COLORS).copied().collect(),
        }
    }
}

impl FromStr for Palette {
    type Err = RenderError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "warm" => Ok(Palette::Warm),
            "cold" => Ok(Palette::Cold),
            "mixed" => Ok(Palette::Mixed),
            _ => Err(RenderError::UnknownOption {
                kind: "palette",
                given: s.into(),
            }),
        }
    }
}

/// Colour of boid `index` under a palette, cycling through its entries.
pub fn palette_color(palette: Palette, index: usize) -> Rgb {
    let cycle = |colors: &[Rgb]| colors[index % colors.len()];
    match palette {
        Palette::Warm => cycle(&WARM_COLORS),
        Palette::Cold => cycle(&COLD_COLORS),
        Palette::Mixed => {
            let k = index % (WARM_COLORS.len() + COLD_COLORS.len());
            if k < WARM_COLORS.len() {
                WARM_COLORS[k]
            } else {
                COLD_COLORS[k - WARM_COLORS.len()]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Aesthetics {
    pub stroke_length: u8,
    pub stroke_width: u32,
    pub background: Background,
    pub palette: Palette,
}

impl Default for Aesthetics {
    fn default() -> Self {
        Self {
            stroke_length: 20,
            stroke_width: 2,
            background: Background::Dark,
            palette: Palette::Warm,
        }
    }
}

impl Aesthetics {
    pub fn validate(&self) -> Result<(), RenderError> {
        if self.stroke_length > PERSISTENT_STROKE_LENGTH {
            return Err(RenderError::StrokeLength(self.stroke_length.into()));
        }
        if self.stroke_width == 0 {
            return Err(RenderError::StrokeWidth);
        }
        Ok(())
    }

    /// Points retained per trail; `None` means unbounded.
    pub fn trail_capacity(&self) -> Option<usize> {
        (self.stroke_length < PERSISTENT_STROKE_LENGTH).then_some(self.stroke_length as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TrailPoint {
    position: Vec2,
    /// No line joins this point to the previous one (wrap-around jump).
    breaks: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trail {
    points: VecDeque<TrailPoint>,
}

impl Trail {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.points.iter().map(|p| p.position)
    }

    /// Contiguous runs of points, oldest first.
    pub fn segments(&self) -> Vec<Vec<Vec2>> {
        let mut out: Vec<Vec<Vec2>> = Vec::new();
        for (k, p) in self.points.iter().enumerate() {
            if k == 0 || p.breaks {
                out.push(Vec::new());
            }
            out.last_mut().expect("segment opened").push(p.position);
        }
        out
    }
}

/// Per-boid position history, in world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrailBuffer {
    bounds: Bounds,
    trails: Vec<Trail>,
}

impl TrailBuffer {
    pub fn new(boids: usize, bounds: Bounds) -> Self {
        Self {
            bounds,
            trails: vec![Trail::default(); boids],
        }
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn trails(&self) -> &[Trail] {
        &self.trails
    }

    /// Appends the state's positions, evicting the oldest points past the
    /// aesthetics' capacity.
    pub fn update(&mut self, state: &FlockState, aesthetics: &Aesthetics) -> Result<(), RenderError> {
        let positions: Vec<Vec2> = state.boids.iter().map(|b| b.position).collect();
        self.bounds = state.bounds;
        self.push_positions(&positions, aesthetics)
    }

    pub fn push_positions(&mut self, positions: &[Vec2], aesthetics: &Aesthetics) -> Result<(), RenderError> {
        if positions.len() != self.trails.len() {
            return Err(RenderError::CountMismatch {
                expected: self.trails.len(),
                actual: positions.len(),
            });
        }
        let capacity = aesthetics.trail_capacity();
        let (half_w, half_h) = (self.bounds.width / 2.0, self.bounds.height / 2.0);
        for (trail, &position) in self.trails.iter_mut().zip(positions) {
            let breaks = trail.points.back().is_some_and(|last| {
                (position.x - last.position.x).abs() > half_w || (position.y - last.position.y).abs() > half_h
            });
            trail.points.push_back(TrailPoint { position, breaks });
            if let Some(cap) = capacity {
                while trail.points.len() > cap {
                    trail.points.pop_front();
                }
            }
            if let Some(first) = trail.points.front_mut() {
                first.breaks = false;
            }
        }
        Ok(())
    }
}

/// Functional form of [`TrailBuffer::update`].
pub fn update_trails(
    mut buffer: TrailBuffer,
    state: &FlockState,
    aesthetics: &Aesthetics,
) -> Result<TrailBuffer, RenderError> {
    buffer.update(state, aesthetics)?;
    Ok(buffer)
}

/// Row-major RGB8 image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl Frame {
    pub fn filled(width: u32, height: u32, color: Rgb) -> Result<Self, RenderError> {
        if width == 0 || height == 0 {
            return Err(RenderError::ZeroSize(width, height));
        }
        let pixels = [color.0, color.1, color.2].repeat(width as usize * height as usize);
        Ok(Self { width, height, pixels })
    }

    pub fn from_pixels(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self, RenderError> {
        if width == 0 || height == 0 {
            return Err(RenderError::ZeroSize(width, height));
        }
        if pixels.len() != width as usize * height as usize * 3 {
            return Err(RenderError::Ppm("pixel buffer length does not match dimensions"));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        Rgb(self.pixels[i], self.pixels[i + 1], self.pixels[i + 2])
    }

    fn blend(&mut self, x: i64, y: i64, color: Rgb, alpha: u32) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let i = (y as usize * self.width as usize + x as usize) * 3;
        for (c, src) in [color.0, color.1, color.2].into_iter().enumerate() {
            self.pixels[i + c] = blend_channel(src, self.pixels[i + c], alpha);
        }
    }
}

/// `alpha` in 0..=255.
pub fn blend_channel(src: u8, dst: u8, alpha: u32) -> u8 {
    ((src as u32 * alpha + dst as u32 * (255 - alpha) + 127) / 255) as u8
}

/// Opacity (0..=255) of the segment `age` steps back from the newest,
/// out of `segments` segments.
fn segment_alpha(age: usize, segments: usize) -> u32 {
    if segments <= 1 {
        return 255;
    }
    let opacity = 1.0 - (1.0 - OLDEST_OPACITY) * age as f64 / (segments - 1) as f64;
    (opacity * 255.0).round() as u32
}

pub fn render_frame(
    buffer: &TrailBuffer,
    aesthetics: &Aesthetics,
    width: u32,
    height: u32,
) -> Result<Frame, RenderError> {
    aesthetics.validate()?;
    let mut frame = Frame::filled(width, height, aesthetics.background.color())?;
    let bounds = buffer.bounds();
    let sx = width as f64 / bounds.width;
    let sy = height as f64 / bounds.height;
    let to_pixel = |p: Vec2| ((p.x * sx).floor() as i64, (p.y * sy).floor() as i64);
    let stroke = aesthetics.stroke_width as i64;

    for (index, trail) in buffer.trails().iter().enumerate() {
        let color = palette_color(aesthetics.palette, index);
        let segments = trail.segments();
        let lines: usize = segments.iter().map(|s| s.len().saturating_sub(1)).sum();
        if lines == 0 {
            // stationary or single-point trails render as dots
            for run in &segments {
                if let Some(&p) = run.last() {
                    let (x, y) = to_pixel(p);
                    draw_dot(&mut frame, x, y, stroke, color, 255);
                }
            }
            continue;
        }
        // oldest line gets age `lines - 1`
        let mut age = lines;
        for run in &segments {
            if run.len() == 1 {
                let (x, y) = to_pixel(run[0]);
                draw_dot(
                    &mut frame,
                    x,
                    y,
                    stroke,
                    color,
                    segment_alpha(age.saturating_sub(1), lines),
                );
                continue;
            }
            for pair in run.windows(2) {
                age -= 1;
                let alpha = segment_alpha(age, lines);
                draw_thick_line(&mut frame, to_pixel(pair[0]), to_pixel(pair[1]), stroke, color, alpha);
            }
        }
    }
    Ok(frame)
}

fn stroke_offsets(width: i64) -> std::ops::RangeInclusive<i64> {
    -((width - 1) / 2)..=(width / 2)
}

fn draw_dot(frame: &mut Frame, x: i64, y: i64, width: i64, color: Rgb, alpha: u32) {
    for dy in stroke_offsets(width) {
        for dx in stroke_offsets(width) {
            frame.blend(x + dx, y + dy, color, alpha);
        }
    }
}

/// Bresenham line, thickened by offsetting along the minor axis.
fn draw_thick_line(frame: &mut Frame, from: (i64, i64), to: (i64, i64), width: i64, color: Rgb, alpha: u32) {
    if from == to {
        draw_dot(frame, from.0, from.1, width, color, alpha);
        return;
    }
    let (x0, y0) = from;
    let (x1, y1) = to;
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let step_x = if x0 < x1 { 1 } else { -1 };
    let step_y = if y0 < y1 { 1 } else { -1 };
    let x_major = dx >= -dy;
    let mut err = dx + dy;
    let (mut x, mut y) = (x0, y0);
    loop {
        for off in stroke_offsets(width) {
            if x_major {
                frame.blend(x, y + off, color, alpha);
            } else {
                frame.blend(x + off, y, color, alpha);
            }
        }
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += step_x;
        }
        if e2 <= dx {
            err += dx;
            y += step_y;
        }
    }
}

/// Binary PPM (P6, maxval 255).
pub fn encode_ppm(frame: &Frame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    out.extend_from_slice(&frame.pixels);
    out
}

pub fn decode_ppm(bytes: &[u8]) -> Result<Frame, RenderError> {
    let mut pos = 0usize;
    let mut token = || -> Result<&[u8], RenderError> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(RenderError::Ppm("truncated header"));
        }
        Ok(&bytes[start..pos])
    };
    if token()? != b"P6" {
        return Err(RenderError::Ppm("missing P6 magic"));
    }
    let mut number = |what: &'static str| -> Result<u32, RenderError> {
        std::str::from_utf8(token()?)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(RenderError::Ppm(what))
    };
    let width = number("bad width")?;
    let height = number("bad height")?;
    if number("bad maxval")? != 255 {
        return Err(RenderError::Ppm("only maxval 255 is supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    let body = bytes.get(pos + 1..).ok_or(RenderError::Ppm("missing raster"))?;
    Frame::from_pixels(width, height, body.to_vec())
}
