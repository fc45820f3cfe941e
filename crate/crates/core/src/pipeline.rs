//! Streaming drift explanation.
//!
//! Samples are buffered into the current time bin until the detector fires.
//! A detection closes the segment and opens the next bin; the triggering
//! sample is the first member of the new bin. The explanation for a drift
//! event is computed when the bin it opened is closed, either by the next
//! detection or at the end of the stream, so every report compares fully
//! observed bins.

use std::collections::VecDeque;

use log::{debug, warn};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::assign::{associate_all, feature_difference, Dissimilarity};
use crate::error::{Error, Result};
use crate::identifiability::mean_identifiability;
use crate::proto::{find_characteristic_samples, ClusterMethod};
use crate::random::{derive_seed, seeded, Rng};
use crate::timeclf::{estimate_identifiability, ClassifierConfig, KnnConfig};
use crate::types::{Dataset, FeatureVector, TimeBin, TimedSample};

pub const SCHEMA_VERSION: u32 = 1;

/// Fraction of a feature's archive range below which a mean absolute
/// difference counts as no drift.
pub const NO_DRIFT_FRACTION: f64 = 0.05;

pub trait DriftDetector: Send {
    /// Consumes the next sample and reports whether drift is detected at it.
    fn observe(&mut self, x: &[f64]) -> bool;
    fn reset(&mut self);
}

/// Fires at fixed zero-based stream positions.
#[derive(Debug, Clone)]
pub struct OracleDetector {
    change_points: Vec<usize>,
    seen: usize,
    next: usize,
}

pub fn oracle_detector(change_points: Vec<usize>) -> Result<OracleDetector> {
    if change_points.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::validation("change points must be strictly increasing"));
    }
    Ok(OracleDetector {
        change_points,
        seen: 0,
        next: 0,
    })
}

impl DriftDetector for OracleDetector {
    fn observe(&mut self, _x: &[f64]) -> bool {
        let pos = self.seen;
        self.seen += 1;
        if self.change_points.get(self.next) == Some(&pos) {
            self.next += 1;
            true
        } else {
            false
        }
    }

    fn reset(&mut self) {
        self.seen = 0;
        self.next = 0;
    }
}

/// Compares the means of the two most recent half-windows feature by
/// feature. The statistic is `|m_new - m_old| / sqrt((v_old + v_new) / h)`
/// with population variances over half-windows of `h = window / 2` samples.
/// The buffer is cleared after firing, so at least one full window passes
/// before the next detection.
#[derive(Debug, Clone)]
pub struct WindowMeanDetector {
    window: usize,
    threshold: f64,
    buffer: VecDeque<Vec<f64>>,
}

pub fn window_mean_detector(window: usize, threshold: f64) -> Result<WindowMeanDetector> {
    if window < 2 {
        return Err(Error::validation(format!("window must be at least 2, got {window}")));
    }
    if threshold.is_nan() {
        return Err(Error::validation("threshold must not be NaN"));
    }
    Ok(WindowMeanDetector {
        window,
        threshold,
        buffer: VecDeque::with_capacity(window),
    })
}

impl WindowMeanDetector {
    fn statistic(&self) -> f64 {
        let h = self.window / 2;
        let len = self.buffer.len();
        let old = self.buffer.range(len - 2 * h..len - h);
        let new = self.buffer.range(len - h..);
        let dim = self.buffer[0].len();
        let moments = |it: std::collections::vec_deque::Iter<'_, Vec<f64>>, f: usize| {
            let xs: Vec<f64> = it.map(|x| x[f]).collect();
            let m = xs.iter().sum::<f64>() / h as f64;
            let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / h as f64;
            (m, v)
        };
        (0..dim)
            .map(|f| {
                let (m0, v0) = moments(old.clone(), f);
                let (m1, v1) = moments(new.clone(), f);
                let diff = (m1 - m0).abs();
                let se = ((v0 + v1) / h as f64).sqrt();
                if diff == 0.0 {
                    0.0
                } else if se == 0.0 {
                    f64::INFINITY
                } else {
                    diff / se
                }
            })
            .fold(0.0, f64::max)
    }
}

impl DriftDetector for WindowMeanDetector {
    fn observe(&mut self, x: &[f64]) -> bool {
        if self.buffer.len() == self.window {
            self.buffer.pop_front();
        }
        self.buffer.push_back(x.to_vec());
        if self.buffer.len() < self.window {
            return false;
        }
        if self.statistic() > self.threshold {
            self.buffer.clear();
            true
        } else {
            false
        }
    }

    fn reset(&mut self) {
        self.buffer.clear();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DetectorConfig {
    Oracle { change_points: Vec<usize> },
    WindowMean { window: usize, threshold: f64 },
}

impl DetectorConfig {
    pub fn build(&self) -> Result<Box<dyn DriftDetector>> {
        Ok(match self {
            DetectorConfig::Oracle { change_points } => {
                Box::new(oracle_detector(change_points.clone())?)
            }
            DetectorConfig::WindowMean { window, threshold } => {
                Box::new(window_mean_detector(*window, *threshold)?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub detector: DetectorConfig,
    pub classifier: ClassifierConfig,
    pub method: ClusterMethod,
    /// Prototype count for the k-means variants, capped by the smallest bin.
    pub prototypes: usize,
    /// Resample size; `None` resamples as many points as are archived.
    pub m_draw: Option<usize>,
    pub dissimilarity: Dissimilarity,
    pub seed: u64,
    /// Z-score features with archive statistics before classification,
    /// clustering and association. Reports always carry raw vectors.
    pub standardize: bool,
    /// Per-bin reservoir size; `None` keeps every sample.
    pub bin_capacity: Option<usize>,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            detector: DetectorConfig::Oracle {
                change_points: Vec::new(),
            },
            classifier: ClassifierConfig::default(),
            method: ClusterMethod::KMeansResampled,
            prototypes: 3,
            m_draw: None,
            dissimilarity: Dissimilarity::Euclidean,
            seed: 0,
            standardize: false,
            bin_capacity: None,
        }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.prototypes == 0 {
            return Err(Error::validation("prototype count must be at least 1"));
        }
        if self.m_draw == Some(0) {
            return Err(Error::validation("resample size must be at least 1"));
        }
        if self.bin_capacity == Some(0) {
            return Err(Error::validation("bin capacity must be at least 1"));
        }
        self.detector.build().map(|_| ())
    }
}

/// An archived sample as it appears in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSample {
    /// Zero-based stream position (row index for archives).
    pub position: usize,
    pub bin: TimeBin,
    pub x: Vec<f64>,
    pub i_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociatedPair {
    /// Index into the report's characteristic samples.
    pub characteristic: usize,
    pub associated: ReportSample,
    pub cost: f64,
    /// `associated.x - characteristic.x`.
    pub difference: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinAssociation {
    pub bin: TimeBin,
    pub total_cost: f64,
    pub pairs: Vec<AssociatedPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub feature: usize,
    pub name: String,
    pub mean_abs_difference: f64,
    pub mean_difference: f64,
    pub no_drift: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationReport {
    pub schema_version: u32,
    /// One-based drift event counter.
    pub event: usize,
    /// Stream position of the first sample of the newest bin.
    pub change_point: usize,
    pub n_bins: usize,
    pub archive_size: usize,
    pub feature_names: Vec<String>,
    pub classifier: String,
    pub method: ClusterMethod,
    pub clustering_converged: bool,
    pub mean_identifiability: f64,
    pub characteristic: Vec<ReportSample>,
    pub associations: Vec<BinAssociation>,
    /// `max - min` of each feature over the archive.
    pub feature_ranges: Vec<f64>,
    pub summary: Vec<FeatureSummary>,
}

/// Ranks features by mean absolute difference over cross-bin pairs. Features
/// whose mean absolute difference is below [`NO_DRIFT_FRACTION`] of their
/// range are flagged as showing no drift.
pub fn summarize_report(report: &ExplanationReport) -> Vec<FeatureSummary> {
    let dim = report.feature_ranges.len();
    let mut abs = vec![0.0; dim];
    let mut signed = vec![0.0; dim];
    let mut count = 0usize;
    for assoc in &report.associations {
        for pair in &assoc.pairs {
            if report.characteristic[pair.characteristic].bin == assoc.bin {
                continue;
            }
            count += 1;
            for (f, d) in pair.difference.iter().enumerate() {
                abs[f] += d.abs();
                signed[f] += d;
            }
        }
    }
    let denom = count.max(1) as f64;
    let mut out: Vec<FeatureSummary> = (0..dim)
        .map(|f| {
            let mean_abs = abs[f] / denom;
            FeatureSummary {
                feature: f,
                name: report
                    .feature_names
                    .get(f)
                    .cloned()
                    .unwrap_or_else(|| format!("f{f}")),
                mean_abs_difference: mean_abs,
                mean_difference: signed[f] / denom,
                no_drift: mean_abs <= NO_DRIFT_FRACTION * report.feature_ranges[f],
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.mean_abs_difference
            .total_cmp(&a.mean_abs_difference)
            .then(a.feature.cmp(&b.feature))
    });
    out
}

pub fn default_feature_names(dim: usize) -> Vec<String> {
    (0..dim).map(|f| format!("f{f}")).collect()
}

fn standardized(data: &Dataset) -> Result<Dataset> {
    let n = data.len() as f64;
    let dim = data.dim();
    let mut mean = vec![0.0; dim];
    for x in data.features() {
        for (m, v) in mean.iter_mut().zip(x.iter()) {
            *m += v / n;
        }
    }
    let mut sd = vec![0.0; dim];
    for x in data.features() {
        for ((s, v), m) in sd.iter_mut().zip(x.iter()).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let sd: Vec<f64> = sd
        .into_iter()
        .map(|v| if v > 0.0 { v.sqrt() } else { 1.0 })
        .collect();
    let samples = data
        .samples()
        .iter()
        .map(|s| {
            let z = s
                .x
                .iter()
                .zip(&mean)
                .zip(&sd)
                .map(|((v, m), d)| (v - m) / d)
                .collect();
            Ok(TimedSample::new(FeatureVector::new(z)?, s.t))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples, data.n_bins())
}

/// Identifiability estimation, characteristic sample search and association
/// on a labelled archive. `positions` maps archive rows to stream positions.
fn explain_snapshot(
    data: &Dataset,
    positions: &[usize],
    feature_names: &[String],
    cfg: &StreamConfig,
    event: usize,
    change_point: usize,
) -> Result<ExplanationReport> {
    if data.n_bins() < 2 {
        return Err(Error::Unsupported(
            "explanation needs at least two time bins".into(),
        ));
    }
    let working = if cfg.standardize {
        standardized(data)?
    } else {
        data.clone()
    };
    let event_seed = derive_seed(cfg.seed, &[event as u64]);
    let classifier = match cfg.classifier.with_seed(derive_seed(event_seed, &[0])) {
        ClassifierConfig::Knn(k) if k.k > data.len() => ClassifierConfig::Knn(KnnConfig {
            k: data.len(),
            ..k
        }),
        other => other,
    };
    let model = classifier.fit(&working)?;
    let features: Vec<FeatureVector> = working.features().cloned().collect();
    let i_hat = estimate_identifiability(&model, &features)?;
    let smallest_bin = data.bin_counts().into_iter().min().unwrap_or(0);
    let k = cfg.prototypes.min(smallest_bin).max(1);
    let search = find_characteristic_samples(
        &working,
        &i_hat,
        cfg.method,
        cfg.m_draw,
        k,
        derive_seed(event_seed, &[1]),
    )?;
    let chars = search.samples;
    let assignments = associate_all(&chars, &working, &cfg.dissimilarity)?;

    let report_sample = |index: usize| {
        let s = &data.samples()[index];
        ReportSample {
            position: positions[index],
            bin: s.t,
            x: s.x.to_vec(),
            i_value: i_hat[index].value(),
        }
    };
    let characteristic: Vec<ReportSample> = chars.iter().map(|c| report_sample(c.index)).collect();
    let mut associations = Vec::with_capacity(assignments.len());
    for (bin, result) in assignments {
        let mut pairs = Vec::with_capacity(result.pairs.len());
        for (r, (&index, &cost)) in result.pairs.iter().zip(&result.costs).enumerate() {
            let difference =
                feature_difference(&data.samples()[chars[r].index], &data.samples()[index])?;
            pairs.push(AssociatedPair {
                characteristic: r,
                associated: report_sample(index),
                cost,
                difference,
            });
        }
        associations.push(BinAssociation {
            bin,
            total_cost: result.total,
            pairs,
        });
    }
    let dim = data.dim();
    let feature_ranges = (0..dim)
        .map(|f| {
            let (lo, hi) = data
                .features()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x[f]), hi.max(x[f]))
                });
            hi - lo
        })
        .collect();
    let mut names = feature_names.to_vec();
    if names.len() != dim {
        names = default_feature_names(dim);
    }
    let mut report = ExplanationReport {
        schema_version: SCHEMA_VERSION,
        event,
        change_point,
        n_bins: data.n_bins(),
        archive_size: data.len(),
        feature_names: names,
        classifier: classifier.short_name().to_string(),
        method: cfg.method,
        clustering_converged: search.prototypes.converged,
        mean_identifiability: mean_identifiability(&i_hat)?,
        characteristic,
        associations,
        feature_ranges,
        summary: Vec::new(),
    };
    report.summary = summarize_report(&report);
    Ok(report)
}

/// Explains an already labelled archive; rows are treated as stream
/// positions and the change point is the first row of the last bin.
pub fn explain_archive(data: &Dataset, cfg: &StreamConfig) -> Result<ExplanationReport> {
    cfg.validate()?;
    let positions: Vec<usize> = (0..data.len()).collect();
    let last = TimeBin::new(data.n_bins())?;
    let change_point = data
        .samples()
        .iter()
        .position(|s| s.t == last)
        .unwrap_or(0);
    explain_snapshot(
        data,
        &positions,
        &default_feature_names(data.dim()),
        cfg,
        data.n_bins() - 1,
        change_point,
    )
}

/// Incremental driver: feed samples with [`DriftExplainer::push`] and
/// collect the last report with [`DriftExplainer::finish`].
pub struct DriftExplainer {
    cfg: StreamConfig,
    detector: Box<dyn DriftDetector>,
    feature_names: Vec<String>,
    archive: Vec<TimedSample>,
    positions: Vec<usize>,
    bin: TimeBin,
    segment_start: usize,
    segment_seen: usize,
    seen: usize,
    dim: Option<usize>,
    /// Change point whose report is waiting for its bin to close.
    pending: Option<usize>,
    events: usize,
    reservoir: Rng,
}

impl DriftExplainer {
    pub fn new(cfg: StreamConfig) -> Result<Self> {
        cfg.validate()?;
        let detector = cfg.detector.build()?;
        let reservoir = seeded(derive_seed(cfg.seed, &[u64::MAX]));
        Ok(DriftExplainer {
            cfg,
            detector,
            feature_names: Vec::new(),
            archive: Vec::new(),
            positions: Vec::new(),
            bin: TimeBin::new(1)?,
            segment_start: 0,
            segment_seen: 0,
            seen: 0,
            dim: None,
            pending: None,
            events: 0,
            reservoir,
        })
    }

    /// Replaces the configured detector, e.g. with a custom implementation.
    pub fn with_detector(mut self, detector: Box<dyn DriftDetector>) -> Self {
        self.detector = detector;
        self
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Self {
        self.feature_names = names;
        self
    }

    pub fn samples_seen(&self) -> usize {
        self.seen
    }

    pub fn n_bins(&self) -> usize {
        self.bin.index()
    }

    pub fn archive_len(&self) -> usize {
        self.archive.len()
    }

    fn snapshot(&self) -> Result<Dataset> {
        Dataset::new(self.archive.clone(), self.bin.index())
    }

    fn emit(&mut self, change_point: usize) -> Result<ExplanationReport> {
        self.events += 1;
        let data = self.snapshot()?;
        debug!(
            "explaining drift event {} at position {change_point} over {} samples in {} bins",
            self.events,
            data.len(),
            data.n_bins()
        );
        explain_snapshot(
            &data,
            &self.positions,
            &self.feature_names,
            &self.cfg,
            self.events,
            change_point,
        )
    }

    /// Consumes one sample. Returns the report of the previous drift event
    /// when this sample triggers a new detection.
    pub fn push(&mut self, x: FeatureVector) -> Result<Option<ExplanationReport>> {
        let position = self.seen;
        match self.dim {
            None => self.dim = Some(x.dim()),
            Some(d) if d != x.dim() => {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: x.dim(),
                }
                .at_position(position))
            }
            Some(_) => {}
        }
        let mut report = None;
        if self.detector.observe(&x) {
            if self.segment_seen == 0 {
                warn!("ignoring detection at position {position}: current bin is empty");
            } else {
                if let Some(cp) = self.pending.take() {
                    report = Some(self.emit(cp).map_err(|e| e.at_position(position))?);
                }
                self.bin = TimeBin::new(self.bin.index() + 1)?;
                self.segment_start = self.archive.len();
                self.segment_seen = 0;
                self.pending = Some(position);
            }
        }
        self.store(x, position);
        self.seen += 1;
        Ok(report)
    }

    fn store(&mut self, x: FeatureVector, position: usize) {
        let sample = TimedSample::new(x, self.bin);
        let held = self.archive.len() - self.segment_start;
        match self.cfg.bin_capacity {
            Some(cap) if held >= cap => {
                let j = self.reservoir.random_range(0..=self.segment_seen);
                if j < cap {
                    self.archive[self.segment_start + j] = sample;
                    self.positions[self.segment_start + j] = position;
                }
            }
            _ => {
                self.archive.push(sample);
                self.positions.push(position);
            }
        }
        self.segment_seen += 1;
    }

    /// Closes the stream and explains the last drift event, if any.
    pub fn finish(mut self) -> Result<Option<ExplanationReport>> {
        match self.pending.take() {
            Some(cp) => {
                let end = self.seen;
                self.emit(cp).map(Some).map_err(|e| e.at_position(end))
            }
            None => Ok(None),
        }
    }
}

/// Runs the explainer over a whole stream.
pub fn explain_stream<I>(stream: I, cfg: &StreamConfig) -> Result<Vec<ExplanationReport>>
where
    I: IntoIterator<Item = FeatureVector>,
{
    let mut explainer = DriftExplainer::new(cfg.clone())?;
    let mut reports = Vec::new();
    for x in stream {
        reports.extend(explainer.push(x)?);
    }
    reports.extend(explainer.finish()?);
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{sample_gmm, GmmSpec};
    use rand_distr::{Distribution, Normal};

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    fn fire_positions(det: &mut dyn DriftDetector, xs: &[f64]) -> Vec<usize> {
        xs.iter()
            .enumerate()
            .filter_map(|(i, &x)| det.observe(&[x]).then_some(i))
            .collect()
    }

    #[test]
    fn oracle_fires_at_listed_positions() {
        let xs = vec![0.0; 300];
        let mut det = oracle_detector(vec![100]).unwrap();
        assert_eq!(fire_positions(&mut det, &xs), vec![100]);
        let mut det = oracle_detector(vec![]).unwrap();
        assert!(fire_positions(&mut det, &xs).is_empty());
        let mut det = oracle_detector(vec![10, 200]).unwrap();
        assert_eq!(fire_positions(&mut det, &xs), vec![10, 200]);
        det.reset();
        assert_eq!(fire_positions(&mut det, &xs), vec![10, 200]);
        assert!(oracle_detector(vec![5, 5]).is_err());
    }

    #[test]
    fn window_detector_constant_and_infinite_threshold() {
        let xs = vec![3.0; 500];
        let mut det = window_mean_detector(50, 4.0).unwrap();
        assert!(fire_positions(&mut det, &xs).is_empty());
        let mut rng = seeded(1);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let jump: Vec<f64> = (0..400)
            .map(|i| if i < 200 { 0.0 } else { 10.0 } + noise.sample(&mut rng))
            .collect();
        let mut det = window_mean_detector(100, f64::INFINITY).unwrap();
        assert!(fire_positions(&mut det, &jump).is_empty());
        assert!(window_mean_detector(1, 1.0).is_err());
    }

    #[test]
    fn window_detector_catches_jump() {
        let mut rng = seeded(2);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..1000)
            .map(|i| if i < 500 { 0.0 } else { 10.0 } + noise.sample(&mut rng))
            .collect();
        let mut det = window_mean_detector(100, 4.0).unwrap();
        let fired = fire_positions(&mut det, &xs);
        assert_eq!(fired.len(), 1, "{fired:?}");
        assert!(fired[0] >= 500 && fired[0] < 600);
        // direct z-statistic at the firing position
        let h = 50;
        let window = &xs[fired[0] + 1 - 100..=fired[0]];
        let (a, b) = window.split_at(h);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64]| {
            let m = mean(v);
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
        };
        let z = (mean(b) - mean(a)).abs() / ((var(a) + var(b)) / h as f64).sqrt();
        assert!(z > 4.0);
    }

    fn two_segment_stream(spec: &GmmSpec, n: usize, seed: u64) -> (Vec<FeatureVector>, usize) {
        let data = sample_gmm(spec, n, seed).unwrap();
        let mut samples = data.into_samples();
        samples.sort_by_key(|s| s.t);
        let cp = samples.iter().position(|s| s.t.index() == 2).unwrap();
        (samples.into_iter().map(|s| s.x).collect(), cp)
    }

    #[test]
    fn no_detection_no_report() {
        let xs: Vec<FeatureVector> = (0..50).map(|i| fv(&[i as f64])).collect();
        let reports = explain_stream(xs, &StreamConfig::default()).unwrap();
        assert!(reports.is_empty());
    }

    #[test]
    fn single_change_point_single_report() {
        let spec = GmmSpec::new(2, 2, 2, 5);
        let (xs, cp) = two_segment_stream(&spec, 400, 6);
        let cfg = StreamConfig {
            detector: DetectorConfig::Oracle { change_points: vec![cp] },
            prototypes: 3,
            seed: 9,
            ..Default::default()
        };
        let reports = explain_stream(xs.clone(), &cfg).unwrap();
        assert_eq!(reports.len(), 1);
        let r = &reports[0];
        assert_eq!(r.change_point, cp);
        assert_eq!(r.n_bins, 2);
        assert_eq!(r.archive_size, 400);
        assert_eq!(r.associations.len(), 2);
        for c in &r.characteristic {
            assert_eq!(c.x, xs[c.position].to_vec());
            assert!((0.0..=1.0).contains(&c.i_value));
        }
        for assoc in &r.associations {
            for p in &assoc.pairs {
                assert_eq!(p.associated.bin, assoc.bin);
                assert_eq!(p.associated.x, xs[p.associated.position].to_vec());
                if r.characteristic[p.characteristic].bin == assoc.bin {
                    assert_eq!(p.cost, 0.0);
                    assert_eq!(p.associated.position, r.characteristic[p.characteristic].position);
                }
            }
        }
        // replay is identical
        let again = explain_stream(xs, &cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&reports).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }

    #[test]
    fn two_change_points_two_reports() {
        let xs: Vec<FeatureVector> = (0..90)
            .map(|i| fv(&[(i / 30) as f64 * 5.0 + (i % 7) as f64 * 0.1]))
            .collect();
        let cfg = StreamConfig {
            detector: DetectorConfig::Oracle { change_points: vec![30, 60] },
            prototypes: 2,
            ..Default::default()
        };
        let reports = explain_stream(xs, &cfg).unwrap();
        assert_eq!(reports.len(), 2);
        assert_eq!((reports[0].n_bins, reports[0].change_point), (2, 30));
        assert_eq!(reports[0].archive_size, 60);
        assert_eq!((reports[1].n_bins, reports[1].change_point), (3, 60));
        assert_eq!(reports[1].archive_size, 90);
    }

    #[test]
    fn detection_on_empty_bin_is_ignored() {
        let xs: Vec<FeatureVector> = (0..20).map(|i| fv(&[i as f64])).collect();
        let cfg = StreamConfig {
            detector: DetectorConfig::Oracle { change_points: vec![0, 10] },
            prototypes: 1,
            ..Default::default()
        };
        let reports = explain_stream(xs, &cfg).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].change_point, 10);
    }

    #[test]
    fn dimension_change_carries_position() {
        let xs = vec![fv(&[0.0]), fv(&[1.0]), fv(&[1.0, 2.0])];
        match explain_stream(xs, &StreamConfig::default()) {
            Err(Error::Stream { position, .. }) => assert_eq!(position, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bin_capacity_bounds_archive() {
        let xs: Vec<FeatureVector> = (0..400).map(|i| fv(&[(i / 200) as f64 * 3.0 + (i % 5) as f64])).collect();
        let cfg = StreamConfig {
            detector: DetectorConfig::Oracle { change_points: vec![200] },
            bin_capacity: Some(50),
            ..Default::default()
        };
        let reports = explain_stream(xs, &cfg).unwrap();
        assert_eq!(reports[0].archive_size, 100);
        for a in &reports[0].associations {
            for p in &a.pairs {
                let pos = p.associated.position;
                assert_eq!(p.associated.bin.index(), 1 + pos / 200);
            }
        }
    }

    #[test]
    fn standardization_keeps_raw_vectors() {
        let spec = GmmSpec::new(2, 2, 2, 12);
        let (xs, cp) = two_segment_stream(&spec, 200, 13);
        let xs: Vec<FeatureVector> = xs.iter().map(|x| fv(&[x[0] * 100.0, x[1]])).collect();
        let cfg = StreamConfig {
            detector: DetectorConfig::Oracle { change_points: vec![cp] },
            standardize: true,
            ..Default::default()
        };
        let r = &explain_stream(xs.clone(), &cfg).unwrap()[0];
        for c in &r.characteristic {
            assert_eq!(c.x, xs[c.position].to_vec());
        }
    }

    fn report_with_pairs(diffs: &[Vec<f64>], ranges: Vec<f64>) -> ExplanationReport {
        let dim = ranges.len();
        let characteristic = vec![ReportSample {
            position: 0,
            bin: TimeBin::new(1).unwrap(),
            x: vec![0.0; dim],
            i_value: 1.0,
        }];
        let pairs = diffs
            .iter()
            .map(|d| AssociatedPair {
                characteristic: 0,
                associated: ReportSample {
                    position: 1,
                    bin: TimeBin::new(2).unwrap(),
                    x: d.clone(),
                    i_value: 1.0,
                },
                cost: 0.0,
                difference: d.clone(),
            })
            .collect();
        ExplanationReport {
            schema_version: SCHEMA_VERSION,
            event: 1,
            change_point: 1,
            n_bins: 2,
            archive_size: 2,
            feature_names: default_feature_names(dim),
            classifier: "knn".into(),
            method: ClusterMethod::KMeansResampled,
            clustering_converged: true,
            mean_identifiability: 0.0,
            characteristic,
            associations: vec![BinAssociation {
                bin: TimeBin::new(2).unwrap(),
                total_cost: 0.0,
                pairs,
            }],
            feature_ranges: ranges,
            summary: Vec::new(),
        }
    }

    #[test]
    fn summary_flags_zero_differences() {
        let r = report_with_pairs(&[vec![0.0, 0.0, 0.0]], vec![1.0, 2.0, 0.0]);
        assert!(summarize_report(&r).iter().all(|f| f.no_drift));
    }

    #[test]
    fn summary_ranks_injected_feature_first() {
        let mut rng = seeded(4);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let diffs: Vec<Vec<f64>> = (0..10)
            .map(|_| {
                (0..5)
                    .map(|f| noise.sample(&mut rng) + if f == 3 { 2.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        let s = summarize_report(&report_with_pairs(&diffs, vec![4.0; 5]));
        assert_eq!(s[0].feature, 3);
        assert!(!s[0].no_drift);
        assert!(s[1..].iter().all(|f| f.no_drift));
    }
}
