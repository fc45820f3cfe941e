//! Synthetic streams with known ground truth.
//!
//! The Gaussian-mixture generator places `n_gauss_per_class * n_class`
//! isotropic components with means drawn uniformly from `[-a, a]^d`. The
//! component in overlap class `j` (1-based) emits time bin 1 with probability
//! `j / n_class` and bin 2 otherwise, so the posterior over bins, and with it
//! the identifiability and characterizing functions, are available in closed
//! form. The checkerboard generator draws uniform mass on a per-bin set of grid
//! cells. Benchmark relabeling turns a regression or classification target
//! into a Bernoulli occurrence time.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identifiability::{binary_identifiability, identifiability};
use crate::random::{seeded, Rng};
use crate::types::{
    check_dim, squared_euclidean, Dataset, FeatureVector, IdentifiabilityScore, TimeBin,
    TimePosterior, TimedSample,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmSpec {
    pub d: usize,
    pub n_class: usize,
    pub n_gauss_per_class: usize,
    pub a: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl GmmSpec {
    /// Spec with the default geometry `sigma = 1`, `a = 10 sigma`.
    pub fn new(d: usize, n_gauss_per_class: usize, n_class: usize, seed: u64) -> Self {
        GmmSpec {
            d,
            n_class,
            n_gauss_per_class,
            a: 10.0,
            sigma: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n_class == 0 || self.n_gauss_per_class == 0 {
            return Err(Error::validation(
                "d, n_class and n_gauss_per_class must all be at least 1",
            ));
        }
        if !(self.a > 0.0 && self.a.is_finite()) || !(self.sigma > 0.0 && self.sigma.is_finite())
        {
            return Err(Error::validation("a and sigma must be positive and finite"));
        }
        Ok(())
    }

    /// `d/n_gauss_per_class/n_class`, the encoding used in result tables.
    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.d, self.n_gauss_per_class, self.n_class)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub mean: Vec<f64>,
    /// Probability that a draw from this component lands in bin 1.
    pub first_bin_weight: f64,
}

/// Equally weighted isotropic Gaussian components over two time bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    components: Vec<MixtureComponent>,
    sigma: f64,
    dim: usize,
}

impl GaussianMixture {
    pub fn new(components: Vec<MixtureComponent>, sigma: f64) -> Result<Self> {
        let dim = components
            .first()
            .map(|c| c.mean.len())
            .ok_or_else(|| Error::validation("mixture needs at least one component"))?;
        if dim == 0 {
            return Err(Error::validation("component means must be nonempty"));
        }
        for c in &components {
            check_dim(dim, c.mean.len())?;
            if !(0.0..=1.0).contains(&c.first_bin_weight) {
                return Err(Error::validation("time weights must lie in [0, 1]"));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::validation("component means must be finite"));
            }
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::validation("sigma must be positive and finite"));
        }
        Ok(GaussianMixture {
            components,
            sigma,
            dim,
        })
    }

    /// Draws the component means from `spec.seed`.
    pub fn from_spec(spec: &GmmSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = seeded(spec.seed);
        let mut components = Vec::with_capacity(spec.n_gauss_per_class * spec.n_class);
        for _ in 0..spec.n_gauss_per_class {
            for j in 1..=spec.n_class {
                let mean = (0..spec.d)
                    .map(|_| rng.random_range(-spec.a..=spec.a))
                    .collect();
                components.push(MixtureComponent {
                    mean,
                    first_bin_weight: j as f64 / spec.n_class as f64,
                });
            }
        }
        GaussianMixture::new(components, spec.sigma)
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same means and time weights, different spread.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        GaussianMixture::new(self.components.clone(), sigma)
    }

    fn draw(&self, rng: &mut Rng) -> (FeatureVector, TimeBin) {
        let c = &self.components[rng.random_range(0..self.components.len())];
        let x: Vec<f64> = c
            .mean
            .iter()
            .map(|m| {
                let z: f64 = StandardNormal.sample(rng);
                m + self.sigma * z
            })
            .collect();
        let t = if rng.random::<f64>() < c.first_bin_weight {
            TimeBin::from_zero_based(0)
        } else {
            TimeBin::from_zero_based(1)
        };
        (FeatureVector(x), t)
    }

    /// Draws `n` timed samples. Fails if a bin ends up empty, which is certain
    /// when every component carries weight 1 (for instance `n_class = 1`).
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n == 0 {
            return Err(Error::validation("sample count must be at least 1"));
        }
        if self.components.iter().all(|c| c.first_bin_weight == 1.0) {
            return Err(Error::validation(
                "every component has time weight 1; all samples would fall into bin 1",
            ));
        }
        let mut rng = seeded(seed);
        let samples = (0..n)
            .map(|_| {
                let (x, t) = self.draw(&mut rng);
                TimedSample::new(x, t)
            })
            .collect();
        Dataset::new(samples, 2)
    }

    /// Feature vectors only; the time labels are drawn and discarded.
    pub fn sample_features(&self, n: usize, seed: u64) -> Vec<FeatureVector> {
        let mut rng = seeded(seed);
        (0..n).map(|_| self.draw(&mut rng).0).collect()
    }

    fn log_kernels(&self, x: &[f64]) -> Vec<f64> {
        let two_var = 2.0 * self.sigma * self.sigma;
        self.components
            .iter()
            .map(|c| -squared_euclidean(x, &c.mean) / two_var)
            .collect()
    }

    /// Bayes posterior `P(T = t | X = x)` of the joint mixture, computed in
    /// log space so that points far from every component still get the
    /// posterior of the dominating component.
    pub fn posterior(&self, x: &[f64]) -> Result<TimePosterior> {
        check_dim(self.dim, x.len())?;
        let logs = self.log_kernels(x);
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return TimePosterior::uniform(2);
        }
        let mut first = 0.0;
        let mut total = 0.0;
        for (c, l) in self.components.iter().zip(&logs) {
            let k = (l - max).exp();
            first += c.first_bin_weight * k;
            total += k;
        }
        if !(total > 0.0 && total.is_finite()) {
            return TimePosterior::uniform(2);
        }
        let p1 = (first / total).clamp(0.0, 1.0);
        TimePosterior::new(vec![p1, 1.0 - p1])
    }

    /// Marginal density of X at `x`.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        let norm = (2.0 * std::f64::consts::PI * self.sigma * self.sigma).powf(-(self.dim as f64) / 2.0);
        let sum: f64 = self.log_kernels(x).iter().map(|l| l.exp()).sum();
        Ok(norm * sum / self.components.len() as f64)
    }

    pub fn identifiability(&self, x: &[f64]) -> Result<IdentifiabilityScore> {
        identifiability(&self.posterior(x)?)
    }

    /// `C(x) = P_X(x) i(x)`.
    pub fn characterizing(&self, x: &[f64]) -> Result<f64> {
        Ok(self.density(x)? * self.identifiability(x)?.value())
    }
}

pub fn sample_gmm(spec: &GmmSpec, n: usize, seed: u64) -> Result<Dataset> {
    GaussianMixture::from_spec(spec)?.sample(n, seed)
}

pub fn analytic_posterior(spec: &GmmSpec, x: &[f64]) -> Result<TimePosterior> {
    GaussianMixture::from_spec(spec)?.posterior(x)
}

pub fn analytic_identifiability(spec: &GmmSpec, x: &[f64]) -> Result<IdentifiabilityScore> {
    GaussianMixture::from_spec(spec)?.identifiability(x)
}

pub fn analytic_characterizing(spec: &GmmSpec, x: &[f64]) -> Result<f64> {
    GaussianMixture::from_spec(spec)?.characterizing(x)
}

/// `n` points uniform on `[-a, a]^d`.
pub fn sample_uniform_box(d: usize, a: f64, n: usize, seed: u64) -> Vec<FeatureVector> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| FeatureVector((0..d).map(|_| rng.random_range(-a..=a)).collect()))
        .collect()
}

/// Per-sample ground truth that accompanies a generated dataset.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub i_true: Vec<f64>,
    pub c_true: Option<Vec<f64>>,
}

/// Uniform mass over a per-bin set of cells of a `grid x grid` partition of
/// the unit square. Cells are numbered row-major from the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckerboardSpec {
    pub grid: usize,
    pub active: Vec<BTreeSet<usize>>,
    pub seed: u64,
}

impl CheckerboardSpec {
    pub fn new(grid: usize, active: Vec<BTreeSet<usize>>) -> Result<Self> {
        let spec = CheckerboardSpec {
            grid,
            active,
            seed: 0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Draws each bin's active set by independent fair coin flips per cell,
    /// redrawing until every bin is nonempty and consecutive bins share at
    /// least one cell and differ in at least one.
    pub fn random(grid: usize, n_bins: usize, seed: u64) -> Result<Self> {
        if grid == 0 || n_bins == 0 {
            return Err(Error::validation("grid and bin count must be positive"));
        }
        let cells = grid * grid;
        if n_bins > 1 && cells < 2 {
            return Err(Error::validation(
                "a 1x1 grid cannot have differing active sets",
            ));
        }
        let mut rng = seeded(seed);
        'draw: loop {
            let active: Vec<BTreeSet<usize>> = (0..n_bins)
                .map(|_| (0..cells).filter(|_| rng.random::<bool>()).collect())
                .collect();
            if active.iter().any(|a| a.is_empty()) {
                continue;
            }
            for w in active.windows(2) {
                if w[0].is_disjoint(&w[1]) || w[0] == w[1] {
                    continue 'draw;
                }
            }
            return Ok(CheckerboardSpec { grid, active, seed });
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid == 0 {
            return Err(Error::validation("grid must be positive"));
        }
        if self.active.is_empty() {
            return Err(Error::validation("checkerboard needs at least one bin"));
        }
        let cells = self.n_cells();
        for (b, a) in self.active.iter().enumerate() {
            if a.is_empty() {
                return Err(Error::validation(format!("bin {} has no active cell", b + 1)));
            }
            if let Some(&c) = a.iter().find(|&&c| c >= cells) {
                return Err(Error::validation(format!("cell {c} outside the {cells}-cell grid")));
            }
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.active.len()
    }

    pub fn n_cells(&self) -> usize {
        self.grid * self.grid
    }

    /// Cell containing `x`, or `None` outside the unit square.
    pub fn cell_of(&self, x: &[f64]) -> Option<usize> {
        if x.len() != 2 || x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return None;
        }
        let g = self.grid as f64;
        let col = ((x[0] * g) as usize).min(self.grid - 1);
        let row = ((x[1] * g) as usize).min(self.grid - 1);
        Some(row * self.grid + col)
    }

    /// Cells that appear or vanish between consecutive bins.
    pub fn changed_cells(&self) -> BTreeSet<usize> {
        self.active
            .windows(2)
            .flat_map(|w| w[0].symmetric_difference(&w[1]).copied().collect::<Vec<_>>())
            .collect()
    }

    /// Posterior over bins with equally many samples per bin.
    pub fn posterior(&self, x: &[f64]) -> Result<TimePosterior> {
        let masses: Vec<f64> = match self.cell_of(x) {
            Some(cell) => self
                .active
                .iter()
                .map(|a| if a.contains(&cell) { 1.0 / a.len() as f64 } else { 0.0 })
                .collect(),
            None => vec![0.0; self.n_bins()],
        };
        TimePosterior::from_masses(&masses)
    }

    /// Marginal density of X with equally weighted bins.
    pub fn density(&self, x: &[f64]) -> f64 {
        let cell_area = 1.0 / self.n_cells() as f64;
        match self.cell_of(x) {
            Some(cell) => {
                self.active
                    .iter()
                    .filter(|a| a.contains(&cell))
                    .map(|a| 1.0 / (a.len() as f64 * cell_area))
                    .sum::<f64>()
                    / self.n_bins() as f64
            }
            None => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckerboardSample {
    pub dataset: Dataset,
    pub truth: GroundTruth,
    pub changed_cells: BTreeSet<usize>,
}

/// `n_per_bin` points per bin, uniform over that bin's active cells; bins are
/// emitted in order so the dataset doubles as a stream.
pub fn sample_checkerboard(
    spec: &CheckerboardSpec,
    n_per_bin: usize,
    seed: u64,
) -> Result<CheckerboardSample> {
    spec.validate()?;
    if n_per_bin == 0 {
        return Err(Error::validation("n_per_bin must be at least 1"));
    }
    let mut rng = seeded(seed);
    let g = spec.grid as f64;
    let mut samples = Vec::with_capacity(n_per_bin * spec.n_bins());
    for (b, active) in spec.active.iter().enumerate() {
        let cells: Vec<usize> = active.iter().copied().collect();
        for _ in 0..n_per_bin {
            let cell = cells[rng.random_range(0..cells.len())];
            let (row, col) = (cell / spec.grid, cell % spec.grid);
            let x0 = (col as f64 + rng.random::<f64>()) / g;
            let x1 = (row as f64 + rng.random::<f64>()) / g;
            samples.push(TimedSample::new(
                FeatureVector(vec![x0, x1]),
                TimeBin::from_zero_based(b),
            ));
        }
    }
    let dataset = Dataset::new(samples, spec.n_bins())?;
    let mut i_true = Vec::with_capacity(dataset.len());
    let mut c_true = Vec::with_capacity(dataset.len());
    for s in dataset.samples() {
        let i = if spec.n_bins() >= 2 {
            identifiability(&spec.posterior(&s.x)?)?.value()
        } else {
            0.0
        };
        i_true.push(i);
        c_true.push(spec.density(&s.x) * i);
    }
    Ok(CheckerboardSample {
        dataset,
        truth: GroundTruth {
            i_true,
            c_true: Some(c_true),
        },
        changed_cells: spec.changed_cells(),
    })
}

#[derive(Debug, Clone)]
pub struct Relabeled {
    pub dataset: Dataset,
    pub truth: GroundTruth,
}

/// Min-max normalizes the targets to `y in [0, 1]` and draws bin 2 with
/// probability `y` (bin 1 otherwise).
pub fn relabel_regression(pairs: &[(FeatureVector, f64)], seed: u64) -> Result<Relabeled> {
    if pairs.is_empty() {
        return Err(Error::validation("no samples to relabel"));
    }
    if pairs.iter().any(|(_, y)| !y.is_finite()) {
        return Err(Error::validation("regression targets must be finite"));
    }
    let min = pairs.iter().map(|(_, y)| *y).fold(f64::INFINITY, f64::min);
    let max = pairs.iter().map(|(_, y)| *y).fold(f64::NEG_INFINITY, f64::max);
    if max <= min {
        return Err(Error::validation(
            "constant target column; min-max normalization undefined",
        ));
    }
    let probs: Vec<f64> = pairs.iter().map(|(_, y)| (y - min) / (max - min)).collect();
    bernoulli_relabel(pairs.iter().map(|(x, _)| x), &probs, seed)
}

/// Draws one occurrence probability per class uniformly from `[0, 1]` (in
/// sorted label order), then relabels as [`relabel_classification_with`].
pub fn relabel_classification<L: Ord + Clone>(
    pairs: &[(FeatureVector, L)],
    seed: u64,
) -> Result<Relabeled> {
    if pairs.is_empty() {
        return Err(Error::validation("no samples to relabel"));
    }
    let mut rng = seeded(seed);
    let labels: BTreeSet<L> = pairs.iter().map(|(_, c)| c.clone()).collect();
    let probs: BTreeMap<L, f64> = labels
        .into_iter()
        .map(|c| (c, rng.random::<f64>()))
        .collect();
    relabel_classification_with(pairs, &probs, rng.random())
}

/// Samples of class `c` land in bin 2 with probability `probs[c]`.
pub fn relabel_classification_with<L: Ord>(
    pairs: &[(FeatureVector, L)],
    probs: &BTreeMap<L, f64>,
    seed: u64,
) -> Result<Relabeled> {
    let per_sample = pairs
        .iter()
        .map(|(_, c)| {
            probs
                .get(c)
                .copied()
                .filter(|p| (0.0..=1.0).contains(p))
                .ok_or_else(|| Error::validation("missing or invalid class occurrence probability"))
        })
        .collect::<Result<Vec<f64>>>()?;
    bernoulli_relabel(pairs.iter().map(|(x, _)| x), &per_sample, seed)
}

fn bernoulli_relabel<'a>(
    xs: impl Iterator<Item = &'a FeatureVector>,
    second_bin_probs: &[f64],
    seed: u64,
) -> Result<Relabeled> {
    let mut rng = seeded(seed);
    let samples: Vec<TimedSample> = xs
        .zip(second_bin_probs)
        .map(|(x, &p)| {
            let t = if rng.random::<f64>() < p { 1 } else { 0 };
            TimedSample::new(x.clone(), TimeBin::from_zero_based(t))
        })
        .collect();
    let i_true = second_bin_probs
        .iter()
        .map(|&p| binary_identifiability(p))
        .collect();
    Ok(Relabeled {
        dataset: Dataset::new(samples, 2)?,
        truth: GroundTruth {
            i_true,
            c_true: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mixture(components: &[(&[f64], f64)]) -> GaussianMixture {
        GaussianMixture::new(
            components
                .iter()
                .map(|(m, w)| MixtureComponent {
                    mean: m.to_vec(),
                    first_bin_weight: *w,
                })
                .collect(),
            1.0,
        )
        .unwrap()
    }

    // independent density-ratio oracle: direct (linear-space) Gaussian kernels
    fn posterior_oracle(m: &GaussianMixture, x: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for c in m.components() {
            let d2: f64 = x.iter().zip(&c.mean).map(|(a, b)| (a - b).powi(2)).sum();
            let k = (-d2 / (2.0 * m.sigma().powi(2))).exp();
            num += c.first_bin_weight * k;
            den += k;
        }
        num / den
    }

    #[test]
    fn sample_gmm_appendix_size() {
        let spec = GmmSpec::new(2, 2, 2, 11);
        let data = sample_gmm(&spec, 500, 3).unwrap();
        assert_eq!(data.len(), 500);
        assert_eq!(data.dim(), 2);
        assert!(data.bin_counts().iter().all(|&c| c > 0));
    }

    #[test]
    fn single_overlap_class_is_rejected() {
        let spec = GmmSpec::new(2, 2, 1, 11);
        assert!(sample_gmm(&spec, 100, 3).is_err());
    }

    #[test]
    fn gmm_is_deterministic() {
        let spec = GmmSpec::new(3, 2, 2, 5);
        assert_eq!(sample_gmm(&spec, 50, 9).unwrap(), sample_gmm(&spec, 50, 9).unwrap());
        assert_ne!(sample_gmm(&spec, 50, 9).unwrap(), sample_gmm(&spec, 50, 10).unwrap());
    }

    #[test]
    fn posterior_at_isolated_components() {
        let m = mixture(&[(&[0.0, 0.0], 0.5), (&[100.0, 0.0], 1.0)]);
        let p = m.posterior(&[0.0, 0.0]).unwrap();
        assert!((p.probs()[0] - 0.5).abs() < 1e-12);
        let q = m.posterior(&[100.0, 0.0]).unwrap();
        assert!((q.probs()[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn posterior_matches_density_ratio_oracle() {
        use rand::Rng as _;
        let spec = GmmSpec::new(3, 3, 4, 21);
        let m = GaussianMixture::from_spec(&spec).unwrap();
        let mut rng = seeded(99);
        for _ in 0..200 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-6.0..6.0)).collect();
            let got = m.posterior(&x).unwrap().probs()[0];
            assert!((got - posterior_oracle(&m, &x)).abs() < 1e-12);
            let total: f64 = m.posterior(&x).unwrap().probs().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn far_points_follow_the_dominant_component() {
        // total density underflows to zero here, the posterior does not
        let m = mixture(&[(&[0.0], 1.0), (&[5.0], 0.5)]);
        assert_eq!(m.density(&[-60.0]).unwrap(), 0.0);
        let p = m.posterior(&[-60.0]).unwrap();
        assert!((p.probs()[0] - 1.0).abs() < 1e-12);
        assert_eq!(m.characterizing(&[-60.0]).unwrap(), 0.0);
    }

    #[test]
    fn swapping_bin_roles_swaps_posterior() {
        let a = mixture(&[(&[0.0], 0.2), (&[1.5], 0.9)]);
        let b = mixture(&[(&[0.0], 0.8), (&[1.5], 0.1)]);
        for x in [-1.0, 0.3, 0.75, 2.0] {
            let pa = a.posterior(&[x]).unwrap();
            let pb = b.posterior(&[x]).unwrap();
            assert!((pa.probs()[0] - pb.probs()[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_bins_give_zero_identifiability() {
        let m = mixture(&[(&[0.0, 0.0], 0.5), (&[3.0, 1.0], 0.5)]);
        for k in 0..100 {
            let x = [-5.0 + 0.1 * k as f64, 2.0 - 0.05 * k as f64];
            assert!(m.identifiability(&x).unwrap().value().abs() < 1e-12);
            assert!(m.characterizing(&x).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn disjoint_supports_give_full_identifiability() {
        let m = mixture(&[(&[0.0], 1.0), (&[50.0], 0.0)]);
        assert!(m.identifiability(&[0.3]).unwrap().value() > 1.0 - 1e-9);
        assert!(m.identifiability(&[49.0]).unwrap().value() > 1.0 - 1e-9);
    }

    #[test]
    fn empirical_bin_frequency_matches_component_weight() {
        let m = mixture(&[(&[0.0, 0.0], 0.3), (&[40.0, 40.0], 0.9)]);
        let data = m.sample(20_000, 4).unwrap();
        let near: Vec<&TimedSample> = data
            .samples()
            .iter()
            .filter(|s| squared_euclidean(&s.x, &[0.0, 0.0]) < 9.0)
            .collect();
        let n = near.len() as f64;
        let first = near.iter().filter(|s| s.t.index() == 1).count() as f64 / n;
        assert!((first - 0.3).abs() < 3.0 / n.sqrt());
    }

    #[test]
    fn uniform_box_stays_in_bounds() {
        let xs = sample_uniform_box(4, 2.5, 300, 1);
        assert!(xs.iter().flat_map(|x| x.iter()).all(|v| v.abs() <= 2.5));
    }

    #[test]
    fn checkerboard_sizes_and_determinism() {
        let spec = CheckerboardSpec::random(3, 2, 1).unwrap();
        let a = sample_checkerboard(&spec, 150, 1).unwrap();
        assert_eq!(a.dataset.len(), 300);
        let b = sample_checkerboard(&spec, 150, 1).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert!(!a.changed_cells.is_empty());
        for s in a.dataset.samples() {
            let cell = spec.cell_of(&s.x).unwrap();
            assert!(spec.active[s.t.zero_based()].contains(&cell));
        }
    }

    #[test]
    fn random_checkerboard_constraints() {
        for seed in 0..50 {
            let spec = CheckerboardSpec::random(3, 2, seed).unwrap();
            assert!(!spec.active[0].is_disjoint(&spec.active[1]));
            assert_ne!(spec.active[0], spec.active[1]);
        }
    }

    #[test]
    fn identical_active_sets_have_no_changed_cells() {
        let cells: BTreeSet<usize> = [0, 4, 8].into_iter().collect();
        let spec = CheckerboardSpec::new(3, vec![cells.clone(), cells]).unwrap();
        assert!(spec.changed_cells().is_empty());
        let sample = sample_checkerboard(&spec, 20, 2).unwrap();
        assert!(sample.truth.i_true.iter().all(|&i| i.abs() < 1e-12));
    }

    #[test]
    fn checkerboard_truth_in_changed_cells_is_one() {
        let spec = CheckerboardSpec::new(
            2,
            vec![[0, 1].into_iter().collect(), [1, 2].into_iter().collect()],
        )
        .unwrap();
        let s = sample_checkerboard(&spec, 50, 3).unwrap();
        for (sample, &i) in s.dataset.samples().iter().zip(&s.truth.i_true) {
            let cell = spec.cell_of(&sample.x).unwrap();
            if cell == 1 {
                assert!(i.abs() < 1e-12);
            } else {
                assert!((i - 1.0).abs() < 1e-12);
            }
        }
    }

    fn fv(v: f64) -> FeatureVector {
        FeatureVector::new(vec![v]).unwrap()
    }

    #[test]
    fn regression_relabel_extremes() {
        let pairs: Vec<(FeatureVector, f64)> = (0..200)
            .map(|k| (fv(k as f64), if k % 2 == 0 { 0.0 } else { 1.0 }))
            .collect();
        let r = relabel_regression(&pairs, 8).unwrap();
        for (k, s) in r.dataset.samples().iter().enumerate() {
            assert_eq!(s.t.index(), if k % 2 == 0 { 1 } else { 2 });
            assert_eq!(r.truth.i_true[k], 1.0);
        }
    }

    #[test]
    fn regression_relabel_midpoint_has_zero_identifiability() {
        let pairs = vec![(fv(0.0), 0.0), (fv(1.0), 0.5), (fv(2.0), 1.0)];
        let r = relabel_regression(&pairs, 1).unwrap();
        assert!(r.truth.i_true[1].abs() < 1e-12);
        let pairs = vec![(fv(0.0), 0.0), (fv(1.0), 0.9), (fv(2.0), 1.0)];
        let r = relabel_regression(&pairs, 1).unwrap();
        assert!((r.truth.i_true[1] - 0.531).abs() < 1e-3);
    }

    #[test]
    fn constant_target_is_rejected() {
        let pairs = vec![(fv(0.0), 3.0), (fv(1.0), 3.0)];
        assert!(relabel_regression(&pairs, 1).is_err());
    }

    #[test]
    fn classification_relabel_with_fixed_probabilities() {
        let pairs: Vec<(FeatureVector, &str)> = (0..400)
            .map(|k| (fv(k as f64), if k < 200 { "a" } else { "b" }))
            .collect();
        let probs: BTreeMap<&str, f64> = [("a", 1.0), ("b", 0.5)].into_iter().collect();
        let r = relabel_classification_with(&pairs, &probs, 5).unwrap();
        assert!(r.dataset.samples()[..200].iter().all(|s| s.t.index() == 2));
        assert!(r.truth.i_true[..200].iter().all(|&i| i == 1.0));
        assert!(r.truth.i_true[200..].iter().all(|&i| i.abs() < 1e-12));
    }

    #[test]
    fn classification_relabel_is_reproducible() {
        let pairs: Vec<(FeatureVector, u8)> =
            (0..300).map(|k| (fv(k as f64), (k % 2) as u8)).collect();
        let a = relabel_classification(&pairs, 17).unwrap();
        let b = relabel_classification(&pairs, 17).unwrap();
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.truth, b.truth);
    }
}
