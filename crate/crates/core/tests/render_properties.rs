use std::collections::HashSet;

use heartflock::render::{blend_channel, render_frame, Aesthetics, Background, Palette, Rgb, TrailBuffer};
use heartflock::{config_for, init_flock, BoidState, Bounds, Emotion, FlockState, Vec2};
use proptest::prelude::*;

fn palette_strategy() -> impl Strategy<Value = Palette> {
    prop_oneof![Just(Palette::Warm), Just(Palette::Cold), Just(Palette::Mixed)]
}

fn background_strategy() -> impl Strategy<Value = Background> {
    prop_oneof![Just(Background::Dark), Just(Background::Bright)]
}

/// Every colour reachable by repeatedly blending palette entries over the
/// background and over each other, for the alphas the renderer can use.
fn reachable(background: Rgb, palette: &[Rgb], alphas: &[u32]) -> HashSet<Rgb> {
    let mut seen: HashSet<Rgb> = HashSet::from([background]);
    let mut frontier = vec![background];
    while let Some(c) = frontier.pop() {
        for &p in palette {
            for &a in alphas {
                let next = Rgb(
                    blend_channel(p.0, c.0, a),
                    blend_channel(p.1, c.1, a),
                    blend_channel(p.2, c.2, a),
                );
                if seen.insert(next) {
                    frontier.push(next);
                }
            }
        }
    }
    seen
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn drawn_pixels_come_from_the_palette(
        palette in palette_strategy(),
        background in background_strategy(),
        stroke_length in 1u8..4,
        stroke_width in 1u32..4,
        seed in any::<u64>(),
    ) {
        let aesthetics = Aesthetics { stroke_length, stroke_width, background, palette };
        let config = config_for(Emotion::Disgust, 8);
        let mut state = init_flock(&config, Bounds::new(120.0, 90.0).unwrap(), seed).unwrap();
        let mut trails = TrailBuffer::new(state.len(), state.bounds);
        for _ in 0..12 {
            state = state.step(&config, 1.0).unwrap();
            trails.update(&state, &aesthetics).unwrap();
        }
        let frame = render_frame(&trails, &aesthetics, 120, 90).unwrap();

        // a trail split at the world seam has fewer lines, so take every fade
        // schedule up to the full trail length
        let mut alphas = vec![255u32];
        for lines in 1..usize::from(stroke_length).max(2) {
            for age in 0..lines {
                let opacity = if lines == 1 { 1.0 } else { 1.0 - 0.9 * age as f64 / (lines - 1) as f64 };
                alphas.push((opacity * 255.0).round() as u32);
            }
        }
        alphas.sort_unstable();
        alphas.dedup();
        let allowed = reachable(background.color(), &palette.colors(), &alphas);
        for y in 0..90 {
            for x in 0..120 {
                let px = frame.get(x, y);
                prop_assert!(allowed.contains(&px), "pixel ({x},{y}) = {px} outside the palette closure");
            }
        }
    }
}

#[test]
fn stationary_boid_is_a_dot() {
    let bounds = Bounds::new(50.0, 50.0).unwrap();
    let state = FlockState::from_boids(
        vec![BoidState {
            position: Vec2::new(20.5, 30.5),
            velocity: Vec2::ZERO,
        }],
        bounds,
        0,
    )
    .unwrap();
    let aesthetics = Aesthetics {
        stroke_length: 10,
        stroke_width: 3,
        ..Aesthetics::default()
    };
    let mut trails = TrailBuffer::new(1, bounds);
    for _ in 0..5 {
        trails.update(&state, &aesthetics).unwrap();
    }
    let frame = render_frame(&trails, &aesthetics, 50, 50).unwrap();
    let ink = heartflock::render::palette_color(Palette::Warm, 0);
    let mut painted = Vec::new();
    for y in 0..50 {
        for x in 0..50 {
            if frame.get(x, y) != Background::Dark.color() {
                assert_eq!(frame.get(x, y), ink);
                painted.push((x, y));
            }
        }
    }
    assert_eq!(painted.len(), 9);
    assert!(painted.contains(&(20, 30)));
}

#[test]
fn zero_stroke_length_draws_nothing() {
    let config = config_for(Emotion::Joy, 10);
    let state = init_flock(&config, Bounds::default(), 1).unwrap();
    let aesthetics = Aesthetics {
        stroke_length: 0,
        ..Aesthetics::default()
    };
    let mut trails = TrailBuffer::new(10, state.bounds);
    trails.update(&state, &aesthetics).unwrap();
    let frame = render_frame(&trails, &aesthetics, 80, 60).unwrap();
    assert!(frame
        .pixels()
        .chunks(3)
        .all(|p| Rgb(p[0], p[1], p[2]) == Background::Dark.color()));
}

#[test]
fn wrapping_boid_leaves_no_streak_across_the_frame() {
    let bounds = Bounds::new(100.0, 100.0).unwrap();
    let aesthetics = Aesthetics {
        stroke_length: 100,
        stroke_width: 1,
        ..Aesthetics::default()
    };
    let mut trails = TrailBuffer::new(1, bounds);
    for x in [96.0, 98.0, 0.5, 2.5] {
        trails.push_positions(&[Vec2::new(x, 50.0)], &aesthetics).unwrap();
    }
    let frame = render_frame(&trails, &aesthetics, 100, 100).unwrap();
    for x in 10..90 {
        assert_eq!(frame.get(x, 50), Background::Dark.color(), "streak at x={x}");
    }
}
