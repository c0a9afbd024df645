#![allow(dead_code)]

use std::f64::consts::PI;

use heartflock::physio::RrSample;

/// Beat-to-beat intervals around `mean_ms`, modulated at `hz` with the given
/// amplitude, starting at `t0_ms` and lasting `seconds`.
pub fn beats(t0_ms: i64, seconds: f64, mean_ms: f64, amplitude_ms: f64, hz: f64) -> Vec<RrSample> {
    let mut t = t0_ms as f64;
    let end = t + seconds * 1000.0;
    let mut out = Vec::new();
    while t < end {
        let rr = mean_ms + amplitude_ms * (2.0 * PI * hz * t / 1000.0).sin();
        t += rr;
        out.push(RrSample::new(t.round() as i64, rr));
    }
    out
}

/// Ten relaxed minutes, then two aroused ones: faster heart, small beat-to-
/// beat changes, respiratory-band rhythm.
pub fn excited_after_rest() -> Vec<RrSample> {
    let mut rest = beats(0, 600.0, 1000.0, 40.0, 0.1);
    let t0 = rest.last().unwrap().timestamp_ms;
    rest.extend(beats(t0, 120.0, 700.0, 5.0, 0.3));
    rest
}

pub fn steady(seconds: i64, rr_ms: f64) -> Vec<RrSample> {
    (1..=seconds * 1000 / rr_ms as i64)
        .map(|k| RrSample::new(k * rr_ms as i64, rr_ms))
        .collect()
}
