//! Heart-rate variability metrics and the footprint classifier.
//!
//! RR intervals are filtered, cut into sliding windows, reduced to heart
//! rate, RMSSD and LF/HF, and compared against a per-person rolling median
//! baseline. The resulting high/low triple is looked up in the footprint
//! table to obtain one or two candidate emotions.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emotion::Emotion;
use crate::spectral::{self, HF_BAND, LF_BAND, RESAMPLE_HZ, SEGMENT_SECS};

pub const RR_MIN_MS: f64 = 300.0;
pub const RR_MAX_MS: f64 = 2000.0;

/// Minimum samples and span for a frequency-domain estimate.
pub const LF_HF_MIN_SAMPLES: usize = 30;
pub const LF_HF_MIN_SPAN_MS: i64 = 60_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysioError {
    #[error("no usable RR samples left after filtering ({dropped} dropped)")]
    EmptyAfterFilter { dropped: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("window spans {span_ms} ms, need at least {LF_HF_MIN_SPAN_MS} ms")]
    WindowTooShort { span_ms: i64 },
    #[error("LF/HF undefined: high-frequency power is negligible")]
    UndefinedRatio,
    #[error("baseline not established yet")]
    MissingBaseline,
    #[error("no assessments to aggregate")]
    NoAssessments,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrSample {
    pub timestamp_ms: i64,
    pub rr_ms: f64,
}

impl RrSample {
    pub fn new(timestamp_ms: i64, rr_ms: f64) -> Self {
        Self { timestamp_ms, rr_ms }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DropReason {
    #[error("rr outside [{RR_MIN_MS}, {RR_MAX_MS}] ms")]
    OutOfRange,
    #[error("timestamp not after previous sample")]
    NonMonotonic,
}

/// Artifact filter: keeps plausible intervals whose timestamps strictly
/// increase from the first kept sample.
#[derive(Debug, Clone, Default)]
pub struct ArtifactFilter {
    last_timestamp: Option<i64>,
}

impl ArtifactFilter {
    pub fn check(&mut self, sample: RrSample) -> Result<(), DropReason> {
        if !(RR_MIN_MS..=RR_MAX_MS).contains(&sample.rr_ms) {
            return Err(DropReason::OutOfRange);
        }
        if self.last_timestamp.is_some_and(|last| sample.timestamp_ms <= last) {
            return Err(DropReason::NonMonotonic);
        }
        self.last_timestamp = Some(sample.timestamp_ms);
        Ok(())
    }
}

/// Filtered RR samples of one person.
#[derive(Debug, Clone, PartialEq)]
pub struct RrSeries {
    pub person_id: String,
    samples: Vec<RrSample>,
}

impl RrSeries {
    pub fn samples(&self) -> &[RrSample] {
        &self.samples
    }

    /// Samples with `start_ms <= timestamp < end_ms`.
    pub fn window(&self, start_ms: i64, end_ms: i64) -> RrWindow<'_> {
        let lo = self.samples.partition_point(|s| s.timestamp_ms < start_ms);
        let hi = self.samples.partition_point(|s| s.timestamp_ms < end_ms);
        RrWindow {
            start_ms,
            end_ms,
            samples: &self.samples[lo..hi.max(lo)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub series: RrSeries,
    pub dropped: usize,
}

pub fn ingest_rr(
    person_id: impl Into<String>,
    raw: impl IntoIterator<Item = RrSample>,
) -> Result<Ingested, PhysioError> {
    let mut filter = ArtifactFilter::default();
    let mut dropped = 0;
    let mut samples = Vec::new();
    for s in raw {
        match filter.check(s) {
            Ok(()) => samples.push(s),
            Err(_) => dropped += 1,
        }
    }
    if samples.is_empty() {
        return Err(PhysioError::EmptyAfterFilter { dropped });
    }
    Ok(Ingested {
        series: RrSeries {
            person_id: person_id.into(),
            samples,
        },
        dropped,
    })
}

/// A time-bounded run of samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrWindow<'a> {
    pub start_ms: i64,
    pub end_ms: i64,
    pub samples: &'a [RrSample],
}

impl<'a> RrWindow<'a> {
    /// Window spanning from the onset of the first interval to the last beat.
    pub fn covering(samples: &'a [RrSample]) -> Self {
        let start_ms = samples.first().map_or(0, |s| s.timestamp_ms - s.rr_ms.round() as i64);
        let end_ms = samples.last().map_or(0, |s| s.timestamp_ms);
        Self {
            start_ms,
            end_ms,
            samples,
        }
    }

    pub fn rr(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.rr_ms).collect()
    }
}

/// Mean heart rate in beats per minute: `60000 / mean(rr)`.
pub fn heart_rate(rr: &[f64]) -> Result<f64, PhysioError> {
    if rr.len() < 2 {
        return Err(PhysioError::TooFewSamples {
            needed: 2,
            got: rr.len(),
        });
    }
    let mean = rr.iter().sum::<f64>() / rr.len() as f64;
    Ok(60_000.0 / mean)
}

/// Running sum of squared successive differences.
#[derive(Debug, Clone, Copy, Default)]
pub struct SuccessiveDifferences {
    last: Option<f64>,
    sum_sq: f64,
    count: usize,
}

impl SuccessiveDifferences {
    pub fn push(&mut self, rr: f64) {
        if let Some(prev) = self.last {
            let d = rr - prev;
            self.sum_sq += d * d;
            self.count += 1;
        }
        self.last = Some(rr);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn rmssd(&self) -> Option<f64> {
        (self.count > 0).then(|| (self.sum_sq / self.count as f64).sqrt())
    }
}

/// Root mean square of successive differences, in ms.
pub fn rmssd(rr: &[f64]) -> Result<f64, PhysioError> {
    if rr.len() < 3 {
        return Err(PhysioError::TooFewSamples {
            needed: 3,
            got: rr.len(),
        });
    }
    let mut acc = SuccessiveDifferences::default();
    rr.iter().for_each(|&x| acc.push(x));
    Ok(acc.rmssd().unwrap_or(0.0))
}

/// LF and HF band powers of a window's tachogram, in ms².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPowers {
    pub lf: f64,
    pub hf: f64,
    pub total: f64,
}

impl BandPowers {
    pub fn ratio(&self) -> Result<f64, PhysioError> {
        // NaN powers fall through to the error as well
        if self.hf > 1e-12 * self.total {
            Ok(self.lf / self.hf)
        } else {
            Err(PhysioError::UndefinedRatio)
        }
    }
}

/// Evenly resampled, mean-removed tachogram over the window.
pub fn tachogram(window: &RrWindow<'_>) -> Vec<f64> {
    let points: Vec<(f64, f64)> = window
        .samples
        .iter()
        .map(|s| (s.timestamp_ms as f64 / 1000.0, s.rr_ms))
        .collect();
    let mut signal = resample(&points, window);
    let mean = signal.iter().sum::<f64>() / signal.len().max(1) as f64;
    signal.iter_mut().for_each(|x| *x -= mean);
    signal
}

fn resample(points: &[(f64, f64)], window: &RrWindow<'_>) -> Vec<f64> {
    spectral::resample_linear(
        points,
        window.start_ms as f64 / 1000.0,
        window.end_ms as f64 / 1000.0,
        RESAMPLE_HZ,
    )
}

pub fn band_powers(window: &RrWindow<'_>) -> Result<BandPowers, PhysioError> {
    if window.samples.len() < LF_HF_MIN_SAMPLES {
        return Err(PhysioError::TooFewSamples {
            needed: LF_HF_MIN_SAMPLES,
            got: window.samples.len(),
        });
    }
    let span_ms = window.end_ms - window.start_ms;
    if span_ms < LF_HF_MIN_SPAN_MS {
        return Err(PhysioError::WindowTooShort { span_ms });
    }
    let signal = tachogram(window);
    let segment = (SEGMENT_SECS * RESAMPLE_HZ) as usize;
    let spectrum = spectral::welch(&signal, RESAMPLE_HZ, segment).ok_or(PhysioError::TooFewSamples {
        needed: 2,
        got: signal.len(),
    })?;
    Ok(BandPowers {
        lf: spectrum.band_power(LF_BAND.0, LF_BAND.1),
        hf: spectrum.band_power(HF_BAND.0, HF_BAND.1),
        total: spectrum.total_power(),
    })
}

/// Ratio of low- to high-frequency tachogram power.
pub fn lf_hf(window: &RrWindow<'_>) -> Result<f64, PhysioError> {
    band_powers(window)?.ratio()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HrvMetrics {
    pub hr: f64,
    pub rmssd: f64,
    /// Absent when the window is too short or the ratio is undefined.
    pub lf_hf: Option<f64>,
    pub window_start_ms: i64,
    pub window_end_ms: i64,
}

pub fn compute_metrics(window: &RrWindow<'_>) -> Result<HrvMetrics, PhysioError> {
    let rr = window.rr();
    let rmssd = rmssd(&rr)?;
    let hr = heart_rate(&rr)?;
    Ok(HrvMetrics {
        hr,
        rmssd,
        lf_hf: lf_hf(window).ok(),
        window_start_ms: window.start_ms,
        window_end_ms: window.end_ms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    High,
    Low,
}

impl Level {
    fn letter(self) -> char {
        match self {
            Level::High => 'H',
            Level::Low => 'L',
        }
    }

    fn above(value: f64, median: f64) -> Level {
        if value > median {
            Level::High
        } else {
            Level::Low
        }
    }
}

/// High/low levels of (HR, RMSSD, LF/HF) relative to a baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Footprint {
    pub hr: Level,
    pub rmssd: Level,
    pub lf_hf: Level,
}

impl Footprint {
    pub const fn new(hr: Level, rmssd: Level, lf_hf: Level) -> Self {
        Self { hr, rmssd, lf_hf }
    }

    pub fn all() -> impl Iterator<Item = Footprint> {
        let levels = [Level::High, Level::Low];
        levels.into_iter().flat_map(move |h| {
            levels
                .into_iter()
                .flat_map(move |r| levels.into_iter().map(move |l| Footprint::new(h, r, l)))
        })
    }
}

impl fmt::Display for Footprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.hr.letter(), self.rmssd.letter(), self.lf_hf.letter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("footprint must be three H/L letters, got {0:?}")]
pub struct BadFootprint(pub String);

impl FromStr for Footprint {
    type Err = BadFootprint;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let level = |c: char| match c.to_ascii_uppercase() {
            'H' => Some(Level::High),
            'L' => Some(Level::Low),
            _ => None,
        };
        let levels: Option<Vec<Level>> = s.chars().map(level).collect();
        match levels.as_deref() {
            Some(&[h, r, l]) => Ok(Footprint::new(h, r, l)),
            _ => Err(BadFootprint(s.to_string())),
        }
    }
}

impl Serialize for Footprint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Footprint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

use Level::{High as H, Low as L};

/// Footprint table: (HR, RMSSD, LF/HF) → candidate emotions in canonical order.
const FOOTPRINTS: [(Footprint, &[Emotion]); 6] = [
    (Footprint::new(H, L, L), &[Emotion::Joy]),
    (Footprint::new(H, H, H), &[Emotion::Disgust]),
    (Footprint::new(H, H, L), &[Emotion::Trust, Emotion::Surprise]),
    (Footprint::new(H, L, H), &[Emotion::Anger]),
    (Footprint::new(L, H, L), &[Emotion::Anticipation]),
    (Footprint::new(L, L, H), &[Emotion::Sadness, Emotion::Fear]),
];

/// Candidate emotions for a footprint, or `None` for the two patterns the
/// table leaves unmapped.
pub fn classify(footprint: Footprint) -> Option<&'static [Emotion]> {
    FOOTPRINTS
        .iter()
        .find(|(f, _)| *f == footprint)
        .map(|(_, candidates)| *candidates)
}

/// Picks one emotion: singletons directly, ambiguous pairs keep `prior`
/// when it is among them and otherwise take the canonical first.
pub fn resolve(candidates: &[Emotion], prior: Option<Emotion>) -> Option<Emotion> {
    match candidates {
        [] => None,
        [only] => Some(*only),
        _ => prior
            .filter(|p| candidates.contains(p))
            .or_else(|| candidates.iter().min().copied()),
    }
}

/// Plurality vote; ties go to the canonically first emotion.
pub fn aggregate(chosen: impl IntoIterator<Item = Emotion>) -> Result<Emotion, PhysioError> {
    let mut votes = [0usize; 8];
    let mut any = false;
    for e in chosen {
        votes[e.index()] += 1;
        any = true;
    }
    if !any {
        return Err(PhysioError::NoAssessments);
    }
    let best = *votes.iter().max().unwrap_or(&0);
    Ok(Emotion::ALL
        .into_iter()
        .find(|e| votes[e.index()] == best)
        .expect("at least one vote cast"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmotionAssessment {
    pub person_id: String,
    pub footprint: Footprint,
    pub candidates: Vec<Emotion>,
    pub chosen: Emotion,
}

/// Per-metric medians of a baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineMedians {
    pub hr: f64,
    pub rmssd: f64,
    pub lf_hf: Option<f64>,
}

/// Rolling record of a person's recent window metrics.
#[derive(Debug, Clone)]
pub struct Baseline {
    horizon_ms: i64,
    min_windows: usize,
    history: VecDeque<HrvMetrics>,
}

impl Baseline {
    pub fn new(horizon_ms: i64, min_windows: usize) -> Self {
        Self {
            horizon_ms,
            min_windows,
            history: VecDeque::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    /// Records a window and forgets those ending before the horizon.
    pub fn push(&mut self, m: HrvMetrics) {
        let cutoff = m.window_end_ms - self.horizon_ms;
        self.history.push_back(m);
        while self.history.front().is_some_and(|h| h.window_end_ms <= cutoff) {
            self.history.pop_front();
        }
    }

    /// Medians over the retained windows once warm-up is satisfied.
    pub fn medians(&self) -> Option<BaselineMedians> {
        if self.history.len() < self.min_windows.max(1) {
            return None;
        }
        let hr = median(self.history.iter().map(|m| m.hr).collect())?;
        let rmssd = median(self.history.iter().map(|m| m.rmssd).collect())?;
        let lf_hf = median(self.history.iter().filter_map(|m| m.lf_hf).collect());
        Some(BaselineMedians { hr, rmssd, lf_hf })
    }
}

fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    })
}

/// Each metric is High only when strictly above its median. A missing
/// LF/HF on either side counts as Low.
pub fn discretize_against(m: &HrvMetrics, b: &BaselineMedians) -> Footprint {
    let lf_hf = match (m.lf_hf, b.lf_hf) {
        (Some(v), Some(med)) => Level::above(v, med),
        _ => Level::Low,
    };
    Footprint::new(Level::above(m.hr, b.hr), Level::above(m.rmssd, b.rmssd), lf_hf)
}

pub fn discretize(m: &HrvMetrics, b: &Baseline) -> Result<Footprint, PhysioError> {
    let medians = b.medians().ok_or(PhysioError::MissingBaseline)?;
    Ok(discretize_against(m, &medians))
}

/// Sliding-window geometry and baseline policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub window_ms: i64,
    pub hop_ms: i64,
    pub baseline_horizon_ms: i64,
    pub warmup_windows: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            window_ms: 60_000,
            hop_ms: 5_000,
            baseline_horizon_ms: 600_000,
            warmup_windows: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WindowOutcome {
    /// Too few samples for metrics.
    Insufficient(PhysioError),
    /// Metrics computed, baseline not yet established.
    WarmingUp,
    /// Footprint outside the table; downstream keeps the previous emotion.
    NoMatch(Footprint),
    Matched(EmotionAssessment),
}

impl WindowOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            WindowOutcome::Insufficient(_) => "insufficient",
            WindowOutcome::WarmingUp => "warming-up",
            WindowOutcome::NoMatch(_) => "no-match",
            WindowOutcome::Matched(_) => "matched",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowReport {
    pub person_id: String,
    pub start_ms: i64,
    pub end_ms: i64,
    pub metrics: Option<HrvMetrics>,
    pub outcome: WindowOutcome,
}

/// Streaming pipeline for one participant.
#[derive(Debug, Clone)]
pub struct PersonPipeline {
    person_id: String,
    config: WindowConfig,
    filter: ArtifactFilter,
    buffer: VecDeque<RrSample>,
    next_start: Option<i64>,
    baseline: Baseline,
    prior: Option<Emotion>,
    dropped: usize,
}

impl PersonPipeline {
    pub fn new(person_id: impl Into<String>, config: WindowConfig) -> Self {
        Self {
            person_id: person_id.into(),
            config,
            filter: ArtifactFilter::default(),
            buffer: VecDeque::new(),
            next_start: None,
            baseline: Baseline::new(config.baseline_horizon_ms, config.warmup_windows),
            prior: None,
            dropped: 0,
        }
    }

    pub fn person_id(&self) -> &str {
        &self.person_id
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Last emotion this person resolved to.
    pub fn latest(&self) -> Option<Emotion> {
        self.prior
    }

    /// Feeds one sample and returns reports for every window it closed.
    pub fn push(&mut self, sample: RrSample) -> Result<Vec<WindowReport>, DropReason> {
        if let Err(reason) = self.filter.check(sample) {
            self.dropped += 1;
            return Err(reason);
        }
        let ts = sample.timestamp_ms;
        let window_ms = self.config.window_ms;
        let hop = self.config.hop_ms.max(1);
        let mut start = *self.next_start.get_or_insert(ts);
        let mut reports = Vec::new();

        while start + window_ms <= ts {
            let end = start + window_ms;
            let samples: Vec<RrSample> = self
                .buffer
                .iter()
                .filter(|s| s.timestamp_ms >= start && s.timestamp_ms < end)
                .copied()
                .collect();
            if samples.is_empty() {
                // skip the run of empty windows up to the next buffered beat
                let next_ts = self
                    .buffer
                    .iter()
                    .map(|s| s.timestamp_ms)
                    .find(|&t| t >= end)
                    .unwrap_or(ts);
                let k = ((next_ts - window_ms - start) / hop + 1).max(1);
                start += k * hop;
                continue;
            }
            let window = RrWindow {
                start_ms: start,
                end_ms: end,
                samples: &samples,
            };
            reports.push(self.close_window(&window));
            start += hop;
        }

        self.next_start = Some(start);
        self.buffer.push_back(sample);
        while self.buffer.front().is_some_and(|s| s.timestamp_ms < start) {
            self.buffer.pop_front();
        }
        Ok(reports)
    }

    fn close_window(&mut self, window: &RrWindow<'_>) -> WindowReport {
        let report = |metrics, outcome| WindowReport {
            person_id: self.person_id.clone(),
            start_ms: window.start_ms,
            end_ms: window.end_ms,
            metrics,
            outcome,
        };
        let metrics = match compute_metrics(window) {
            Ok(m) => m,
            Err(e) => return report(None, WindowOutcome::Insufficient(e)),
        };
        let outcome = match self.baseline.medians() {
            None => WindowOutcome::WarmingUp,
            Some(medians) => {
                let footprint = discretize_against(&metrics, &medians);
                match classify(footprint) {
                    None => WindowOutcome::NoMatch(footprint),
                    Some(candidates) => {
                        let chosen = resolve(candidates, self.prior).expect("non-empty candidates");
                        self.prior = Some(chosen);
                        WindowOutcome::Matched(EmotionAssessment {
                            person_id: self.person_id.clone(),
                            footprint,
                            candidates: candidates.to_vec(),
                            chosen,
                        })
                    }
                }
            }
        };
        self.baseline.push(metrics);
        report(Some(metrics), outcome)
    }
}

/// One row of offline output: a closed window and what it resolved to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssessmentRecord {
    pub person_id: String,
    pub window_start_ms: i64,
    pub window_end_ms: i64,
    pub outcome: &'static str,
    pub hr: Option<f64>,
    pub rmssd: Option<f64>,
    pub lf_hf: Option<f64>,
    pub footprint: Option<Footprint>,
    pub candidates: Vec<Emotion>,
    pub chosen: Option<Emotion>,
}

impl From<&WindowReport> for AssessmentRecord {
    fn from(r: &WindowReport) -> Self {
        let (footprint, candidates, chosen) = match &r.outcome {
            WindowOutcome::Matched(a) => (Some(a.footprint), a.candidates.clone(), Some(a.chosen)),
            WindowOutcome::NoMatch(fp) => (Some(*fp), Vec::new(), None),
            _ => (None, Vec::new(), None),
        };
        Self {
            person_id: r.person_id.clone(),
            window_start_ms: r.start_ms,
            window_end_ms: r.end_ms,
            outcome: r.outcome.label(),
            hr: r.metrics.map(|m| m.hr),
            rmssd: r.metrics.map(|m| m.rmssd),
            lf_hf: r.metrics.and_then(|m| m.lf_hf),
            footprint,
            candidates,
            chosen,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("rr csv line {line}: {message}")]
pub struct RrCsvError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Deserialize)]
struct RrRow {
    person_id: String,
    timestamp_ms: i64,
    rr_ms: f64,
}

/// Reads `person_id,timestamp_ms,rr_ms` rows (with that header).
pub fn read_rr_csv(input: impl std::io::Read) -> Result<Vec<(String, RrSample)>, RrCsvError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut rows = Vec::new();
    for row in reader.deserialize::<RrRow>() {
        let row = row.map_err(|e| RrCsvError {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        rows.push((row.person_id, RrSample::new(row.timestamp_ms, row.rr_ms)));
    }
    Ok(rows)
}

/// Runs every person's rows through their own pipeline. Reports are grouped
/// by person id (sorted), in window order within a person.
pub fn assess_offline(
    rows: impl IntoIterator<Item = (String, RrSample)>,
    config: WindowConfig,
) -> Result<Vec<WindowReport>, PhysioError> {
    let mut pipelines: std::collections::BTreeMap<String, (PersonPipeline, Vec<WindowReport>)> =
        std::collections::BTreeMap::new();
    let (mut accepted, mut dropped) = (0usize, 0usize);
    for (person, sample) in rows {
        let (pipeline, reports) = pipelines
            .entry(person)
            .or_insert_with_key(|id| (PersonPipeline::new(id.clone(), config), Vec::new()));
        match pipeline.push(sample) {
            Ok(closed) => {
                accepted += 1;
                reports.extend(closed);
            }
            Err(_) => dropped += 1,
        }
    }
    if accepted == 0 {
        return Err(PhysioError::EmptyAfterFilter { dropped });
    }
    Ok(pipelines.into_values().flat_map(|(_, r)| r).collect())
}
