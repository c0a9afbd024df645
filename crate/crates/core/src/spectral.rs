//! Tachogram resampling and Welch power spectral density.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Resampling rate for the evenly spaced tachogram, in Hz.
pub const RESAMPLE_HZ: f64 = 4.0;
/// Welch segment length, in seconds.
pub const SEGMENT_SECS: f64 = 64.0;

pub const LF_BAND: (f64, f64) = (0.04, 0.15);
pub const HF_BAND: (f64, f64) = (0.15, 0.40);

/// Linearly interpolates `(time_s, value)` points onto a grid starting at
/// `start_s` with spacing `1 / rate_hz`, up to and including `end_s`.
/// Values outside the point range are held constant. Points must be sorted
/// by time.
pub fn resample_linear(points: &[(f64, f64)], start_s: f64, end_s: f64, rate_hz: f64) -> Vec<f64> {
    if points.is_empty() || end_s < start_s {
        return Vec::new();
    }
    let count = ((end_s - start_s) * rate_hz).floor() as usize + 1;
    let mut out = Vec::with_capacity(count);
    let mut seg = 0usize;
    for k in 0..count {
        let t = start_s + k as f64 / rate_hz;
        while seg + 1 < points.len() && points[seg + 1].0 <= t {
            seg += 1;
        }
        let (t0, v0) = points[seg];
        let value = if t <= t0 || seg + 1 == points.len() {
            v0
        } else {
            let (t1, v1) = points[seg + 1];
            let frac = (t - t0) / (t1 - t0);
            v0 + (v1 - v0) * frac
        };
        out.push(value);
    }
    out
}

/// One-sided power spectral density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Bin spacing, in Hz.
    pub resolution: f64,
    /// Power density per bin, in signal units² / Hz; bin `k` sits at `k · resolution`.
    pub density: Vec<f64>,
}

impl Spectrum {
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.resolution
    }

    /// Integrated power over `[lo, hi)` Hz.
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        self.density
            .iter()
            .enumerate()
            .filter(|&(k, _)| {
                let f = self.frequency(k);
                f >= lo && f < hi
            })
            .map(|(_, p)| p * self.resolution)
            .sum()
    }

    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.resolution
    }
}

fn hann(len: usize) -> Vec<f64> {
    // periodic form, as used for spectral averaging
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Welch averaged periodogram with a Hann taper and 50% overlap.
///
/// Segments are `segment_len` samples long, or the whole signal if it is
/// shorter. Returns `None` for signals shorter than two samples.
pub fn welch(signal: &[f64], sample_rate: f64, segment_len: usize) -> Option<Spectrum> {
    if signal.len() < 2 {
        return None;
    }
    let len = segment_len.clamp(2, signal.len());
    let hop = (len / 2).max(1);
    let window = hann(len);
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let scale = 1.0 / (sample_rate * window_power);

    let fft = FftPlanner::new().plan_fft_forward(len);
    let bins = len / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    let mut segments = 0usize;

    let mut start = 0;
    while start + len <= signal.len() {
        for (slot, (&x, &w)) in buf.iter_mut().zip(signal[start..start + len].iter().zip(&window)) {
            *slot = Complex::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            let mut p = buf[k].norm_sqr() * scale;
            // fold negative frequencies, except DC and Nyquist
            if k != 0 && !(len.is_multiple_of(2) && k == len / 2) {
                p *= 2.0;
            }
            *a += p;
        }
        segments += 1;
        start += hop;
    }

    let n = segments as f64;
    Some(Spectrum {
        resolution: sample_rate / len as f64,
        density: acc.into_iter().map(|a| a / n).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resample_interpolates_and_holds_ends() {
        let pts = [(1.0, 10.0), (2.0, 20.0)];
        let out = resample_linear(&pts, 0.5, 2.5, 2.0);
        assert_eq!(out, vec![10.0, 10.0, 15.0, 20.0, 20.0]);
    }

    #[test]
    fn welch_integrates_to_variance() {
        // white-ish deterministic signal: total power ≈ mean square
        let fs = 4.0;
        let sig: Vec<f64> = (0..1024)
            .map(|n| (n as f64 * 0.731).sin() + 0.5 * (n as f64 * 2.13).cos())
            .collect();
        let ms = sig.iter().map(|x| x * x).sum::<f64>() / sig.len() as f64;
        let spec = welch(&sig, fs, 256).unwrap();
        let rel = (spec.total_power() - ms).abs() / ms;
        assert!(rel < 0.05, "total {} vs {}", spec.total_power(), ms);
    }

    #[test]
    fn sinusoid_power_lands_on_its_bin() {
        let fs = 4.0;
        let f0 = 0.25;
        let sig: Vec<f64> = (0..512).map(|n| (2.0 * PI * f0 * n as f64 / fs).sin()).collect();
        let spec = welch(&sig, fs, 256).unwrap();
        let peak = spec
            .density
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(spec.frequency(peak), f0);
        assert!((spec.band_power(0.2, 0.3) - 0.5).abs() < 0.01);
    }

    #[test]
    fn short_signal_uses_single_segment() {
        let spec = welch(&[1.0, -1.0, 1.0, -1.0], 4.0, 256).unwrap();
        assert_eq!(spec.density.len(), 3);
        assert!(welch(&[1.0], 4.0, 256).is_none());
    }
}
