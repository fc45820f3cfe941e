//! Domain types shared by every stage of the explanation pipeline.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the simplex constraint of a [`TimePosterior`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A point in feature space. All entries are finite and there is at least one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FeatureVector(pub(crate) Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("feature vector must have at least one entry"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "feature {pos} is not finite ({})",
                values[pos]
            )));
        }
        Ok(FeatureVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        FeatureVector::new(values)
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(v: FeatureVector) -> Self {
        v.0
    }
}

/// One-based index of a time bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct TimeBin(usize);

impl TimeBin {
    pub fn new(index: usize) -> Result<Self> {
        if index == 0 {
            return Err(Error::validation("time bins are numbered from 1"));
        }
        Ok(TimeBin(index))
    }

    /// Bin from a zero-based offset.
    pub fn from_zero_based(offset: usize) -> Self {
        TimeBin(offset + 1)
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub fn zero_based(self) -> usize {
        self.0 - 1
    }
}

impl TryFrom<usize> for TimeBin {
    type Error = Error;

    fn try_from(index: usize) -> Result<Self> {
        TimeBin::new(index)
    }
}

impl From<TimeBin> for usize {
    fn from(t: TimeBin) -> usize {
        t.0
    }
}

impl std::fmt::Display for TimeBin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimedSample {
    pub x: FeatureVector,
    pub t: TimeBin,
}

impl TimedSample {
    pub fn new(x: FeatureVector, t: TimeBin) -> Self {
        TimedSample { x, t }
    }
}

/// A collection of timed samples in which every bin `1..=n_bins` is populated
/// and all feature vectors share one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<TimedSample>,
    n_bins: usize,
    dim: usize,
}

impl Dataset {
    pub fn new(samples: Vec<TimedSample>, n_bins: usize) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::validation("dataset must contain at least one sample"))?;
        if n_bins == 0 {
            return Err(Error::validation("dataset must have at least one time bin"));
        }
        let dim = first.x.dim();
        let mut counts = vec![0usize; n_bins];
        for s in &samples {
            if s.x.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.x.dim(),
                });
            }
            if s.t.index() > n_bins {
                return Err(Error::validation(format!(
                    "sample bin {} exceeds bin count {n_bins}",
                    s.t
                )));
            }
            counts[s.t.zero_based()] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyBin { bin: empty + 1 });
        }
        Ok(Dataset {
            samples,
            n_bins,
            dim,
        })
    }

    /// Builds a dataset whose bin count is the largest bin label present.
    pub fn from_samples(samples: Vec<TimedSample>) -> Result<Self> {
        let n_bins = samples.iter().map(|s| s.t.index()).max().unwrap_or(0);
        Dataset::new(samples, n_bins)
    }

    pub fn samples(&self) -> &[TimedSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, index: usize) -> Option<&TimedSample> {
        self.samples.get(index)
    }

    pub fn features(&self) -> impl Iterator<Item = &FeatureVector> {
        self.samples.iter().map(|s| &s.x)
    }

    /// Indices of the samples labelled with `bin`.
    pub fn indices_in_bin(&self, bin: TimeBin) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.t == bin)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn bin_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_bins];
        for s in &self.samples {
            counts[s.t.zero_based()] += 1;
        }
        counts
    }

    pub fn into_samples(self) -> Vec<TimedSample> {
        self.samples
    }
}

/// Probability vector over time bins.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimePosterior {
    probs: Vec<f64>,
}

impl TimePosterior {
    /// Validates `probs` against the simplex; entries within tolerance of the
    /// simplex are renormalized, anything further away is rejected.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::validation("posterior must have at least one entry"));
        }
        let mut sum = 0.0;
        for (t, &p) in probs.iter().enumerate() {
            if !p.is_finite() || !(-SIMPLEX_TOLERANCE..=1.0 + SIMPLEX_TOLERANCE).contains(&p) {
                return Err(Error::validation(format!(
                    "posterior entry {t} = {p} outside [0, 1]"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::validation(format!("posterior sums to {sum}, not 1")));
        }
        let probs = probs.into_iter().map(|p| p.max(0.0) / sum).collect();
        Ok(TimePosterior { probs })
    }

    /// Normalizes nonnegative counts or masses. All-zero input yields the
    /// uniform posterior.
    pub fn from_masses(masses: &[f64]) -> Result<Self> {
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::validation("masses must be finite and nonnegative"));
        }
        let total: f64 = masses.iter().sum();
        if total <= 0.0 {
            return TimePosterior::uniform(masses.len());
        }
        TimePosterior::new(masses.iter().map(|m| m / total).collect())
    }

    pub fn uniform(n_bins: usize) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::validation("posterior must have at least one entry"));
        }
        Ok(TimePosterior {
            probs: vec![1.0 / n_bins as f64; n_bins],
        })
    }

    pub fn point_mass(n_bins: usize, bin: TimeBin) -> Result<Self> {
        if bin.index() > n_bins {
            return Err(Error::validation(format!(
                "bin {bin} outside 1..={n_bins}"
            )));
        }
        let mut probs = vec![0.0; n_bins];
        probs[bin.zero_based()] = 1.0;
        Ok(TimePosterior { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_bins(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, bin: TimeBin) -> f64 {
        self.probs.get(bin.zero_based()).copied().unwrap_or(0.0)
    }
}

/// Value of the identifiability function, always in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct IdentifiabilityScore(f64);

impl IdentifiabilityScore {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::validation(format!(
                "identifiability {value} outside [0, 1]"
            )));
        }
        Ok(IdentifiabilityScore(value))
    }

    /// Clamps values that left `[0, 1]` by rounding only.
    pub(crate) fn clamped(value: f64) -> Self {
        IdentifiabilityScore(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for IdentifiabilityScore {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        IdentifiabilityScore::new(value)
    }
}

impl From<IdentifiabilityScore> for f64 {
    fn from(s: IdentifiabilityScore) -> f64 {
        s.0
    }
}

pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
