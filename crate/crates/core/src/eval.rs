//! Repeated-run experiments on synthetic and relabelled benchmark data.
//!
//! Every run derives its own seed from the grid seed and the run's
//! coordinates, so runs are independent and executed in parallel; results
//! are collected in run order and keep their raw per-run values.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{explain_stream, DetectorConfig, StreamConfig};
use crate::proto::{find_characteristic_samples, ClusterMethod};
use crate::random::derive_seed;
use crate::synth::{
    relabel_classification, relabel_regression, sample_checkerboard, sample_uniform_box,
    CheckerboardSpec, GaussianMixture, GmmSpec, Relabeled,
};
use crate::timeclf::{estimate_identifiability, identifiability_mse, ClassifierConfig};
use crate::types::{Dataset, FeatureVector, IdentifiabilityScore};

/// Mean and population standard deviation over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatCell {
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
    pub values: Vec<f64>,
}

impl StatCell {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("statistics of zero runs"));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Ok(StatCell {
            mean,
            std: var.sqrt(),
            runs: values.len(),
            values,
        })
    }
}

/// Mixture shape `d / n_gauss_per_class / n_class`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixtureConfig {
    pub d: usize,
    pub n_gauss_per_class: usize,
    pub n_class: usize,
}

impl MixtureConfig {
    pub fn spec(&self, seed: u64) -> GmmSpec {
        GmmSpec::new(self.d, self.n_gauss_per_class, self.n_class, seed)
    }

    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.d, self.n_gauss_per_class, self.n_class)
    }
}

impl std::str::FromStr for MixtureConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split('/').collect();
        let parse = |p: &str| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::validation(format!("bad mixture config '{s}', expected d/ngpc/nclass")))
        };
        match parts.as_slice() {
            [d, g, c] => Ok(MixtureConfig {
                d: parse(d)?,
                n_gauss_per_class: parse(g)?,
                n_class: parse(c)?,
            }),
            _ => Err(Error::validation(format!(
                "bad mixture config '{s}', expected d/ngpc/nclass"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub configs: Vec<MixtureConfig>,
    pub classifiers: Vec<ClassifierConfig>,
    pub methods: Vec<ClusterMethod>,
    pub runs: usize,
    pub seed: u64,
    pub n_train: usize,
    /// Size of each of the three evaluation samples.
    pub n_eval: usize,
    /// Prototype count for k-means; `None` uses the mixture's component count.
    pub prototypes: Option<usize>,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        ExperimentGrid {
            configs: ["2/2/2", "100/8/2", "2/2/10"]
                .iter()
                .map(|s| s.parse().expect("valid literal"))
                .collect(),
            classifiers: vec![ClassifierConfig::default()],
            methods: ClusterMethod::ALL.to_vec(),
            runs: 30,
            seed: 0,
            n_train: 500,
            n_eval: 1500,
            prototypes: Some(8),
        }
    }
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::validation("runs must be at least 1"));
        }
        if self.n_train == 0 || self.n_eval == 0 {
            return Err(Error::validation("sample sizes must be positive"));
        }
        for c in &self.configs {
            c.spec(0).validate()?;
        }
        Ok(())
    }

    fn run_seed(&self, config: usize, run: usize) -> u64 {
        derive_seed(self.seed, &[config as u64, run as u64])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityRow {
    pub config: String,
    pub classifier: String,
    pub mse: StatCell,
}

/// Trains on `n_train` samples of the mixture and scores the estimated
/// identifiability against the analytic one on three evaluation sets of
/// `n_eval` points each: the mixture itself, the mixture with three times
/// the spread around the same means, and the uniform box `[-a, a]^d`. One
/// pooled MSE per run.
pub fn eval_identifiability(grid: &ExperimentGrid) -> Result<Vec<IdentifiabilityRow>> {
    grid.validate()?;
    let mut rows = Vec::new();
    for (ci, config) in grid.configs.iter().enumerate() {
        for clf in &grid.classifiers {
            let values = (0..grid.runs)
                .into_par_iter()
                .map(|run| identifiability_run(grid, ci, *config, clf, run))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(IdentifiabilityRow {
                config: config.label(),
                classifier: clf.short_name().to_string(),
                mse: StatCell::from_values(values)?,
            });
        }
    }
    Ok(rows)
}

fn identifiability_run(
    grid: &ExperimentGrid,
    ci: usize,
    config: MixtureConfig,
    clf: &ClassifierConfig,
    run: usize,
) -> Result<f64> {
    let seed = grid.run_seed(ci, run);
    let spec = config.spec(seed);
    let mix = GaussianMixture::from_spec(&spec)?;
    let train = mix.sample(grid.n_train, derive_seed(seed, &[1]))?;
    let model = clf.with_seed(derive_seed(seed, &[2])).fit(&train)?;
    let mut eval = mix.sample_features(grid.n_eval, derive_seed(seed, &[3]));
    eval.extend(
        mix.with_sigma(3.0 * spec.sigma)?
            .sample_features(grid.n_eval, derive_seed(seed, &[4])),
    );
    eval.extend(sample_uniform_box(spec.d, spec.a, grid.n_eval, derive_seed(seed, &[5])));
    let estimated: Vec<f64> = estimate_identifiability(&model, &eval)?
        .into_iter()
        .map(|s| s.value())
        .collect();
    let truth = eval
        .iter()
        .map(|x| mix.identifiability(x).map(|s| s.value()))
        .collect::<Result<Vec<f64>>>()?;
    identifiability_mse(&estimated, &truth)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeRow {
    pub config: String,
    pub method: ClusterMethod,
    /// Mean analytic identifiability at the characteristic samples.
    pub i_mean: StatCell,
    /// Mean analytic characterizing function at the characteristic samples.
    pub c_mean: StatCell,
    pub prototypes: StatCell,
}

/// Runs each clustering method with the analytic identifiability as weights
/// on `n_train` mixture samples and averages the analytic scores over the
/// resulting characteristic samples.
pub fn eval_prototypes(grid: &ExperimentGrid) -> Result<Vec<PrototypeRow>> {
    grid.validate()?;
    let mut rows = Vec::new();
    for (ci, config) in grid.configs.iter().enumerate() {
        for &method in &grid.methods {
            let per_run = (0..grid.runs)
                .into_par_iter()
                .map(|run| prototype_run(grid, ci, *config, method, run))
                .collect::<Result<Vec<(f64, f64, f64)>>>()?;
            rows.push(PrototypeRow {
                config: config.label(),
                method,
                i_mean: StatCell::from_values(per_run.iter().map(|r| r.0).collect())?,
                c_mean: StatCell::from_values(per_run.iter().map(|r| r.1).collect())?,
                prototypes: StatCell::from_values(per_run.iter().map(|r| r.2).collect())?,
            });
        }
    }
    Ok(rows)
}

fn prototype_run(
    grid: &ExperimentGrid,
    ci: usize,
    config: MixtureConfig,
    method: ClusterMethod,
    run: usize,
) -> Result<(f64, f64, f64)> {
    let seed = grid.run_seed(ci, run);
    let spec = config.spec(seed);
    let mix = GaussianMixture::from_spec(&spec)?;
    let data = mix.sample(grid.n_train, derive_seed(seed, &[1]))?;
    let i_true = data
        .features()
        .map(|x| mix.identifiability(x))
        .collect::<Result<Vec<IdentifiabilityScore>>>()?;
    let k = grid
        .prototypes
        .unwrap_or(config.n_gauss_per_class * config.n_class);
    let found = find_characteristic_samples(&data, &i_true, method, None, k, derive_seed(seed, &[6]))?;
    let xs: Vec<&FeatureVector> = found.samples.iter().map(|c| &c.sample.x).collect();
    let n = xs.len() as f64;
    let mut i_sum = 0.0;
    let mut c_sum = 0.0;
    for x in &xs {
        i_sum += mix.identifiability(x)?.value();
        c_sum += mix.characterizing(x)?;
    }
    Ok((i_sum / n, c_sum / n, n))
}

/// How checkerboard cells are flagged as changed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlagRule {
    /// A cell is flagged iff a characteristic sample lies in it.
    #[default]
    CharacteristicPresence,
    /// A cell is flagged iff the mean estimated identifiability of the
    /// archived samples in it exceeds one half.
    IdentifiabilityMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckerboardConfig {
    pub runs: usize,
    pub n_per_bin: usize,
    pub grid: usize,
    pub classifier: ClassifierConfig,
    pub method: ClusterMethod,
    pub prototypes: usize,
    pub rule: FlagRule,
    pub seed: u64,
}

impl Default for CheckerboardConfig {
    fn default() -> Self {
        CheckerboardConfig {
            runs: 30,
            n_per_bin: 150,
            grid: 3,
            classifier: ClassifierConfig::default(),
            method: ClusterMethod::KMeansResampled,
            prototypes: 3,
            rule: FlagRule::CharacteristicPresence,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckerboardResult {
    pub score: StatCell,
    pub baseline: StatCell,
    /// Runs scoring below / above their baseline.
    pub wins: usize,
    pub losses: usize,
    /// One-sided sign-test p-value for scoring below the baseline.
    pub p_value: f64,
}

/// `|flagged Δ changed| / cells`.
pub fn misclassification_score(flagged: &BTreeSet<usize>, changed: &BTreeSet<usize>, cells: usize) -> f64 {
    flagged.symmetric_difference(changed).count() as f64 / cells as f64
}

/// Expected score of flagging `flagged` cells uniformly at random when
/// `changed` of `cells` cells truly changed.
pub fn random_flagging_baseline(flagged: usize, changed: usize, cells: usize) -> f64 {
    let (f, g, n) = (flagged as f64, changed as f64, cells as f64);
    (f + g - 2.0 * f * g / n) / n
}

/// `P(X >= wins)` for `X ~ Binomial(wins + losses, 1/2)`.
pub fn sign_test_p_value(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    // log-space binomial coefficients keep large n finite
    let ln_choose = |k: usize| -> f64 {
        (1..=k).map(|i| ((n - k + i) as f64).ln() - (i as f64).ln()).sum()
    };
    let ln_half_n = n as f64 * 0.5f64.ln();
    (wins..=n)
        .map(|k| (ln_choose(k) + ln_half_n).exp())
        .sum::<f64>()
        .min(1.0)
}

pub fn eval_checkerboard(cfg: &CheckerboardConfig) -> Result<CheckerboardResult> {
    if cfg.runs == 0 {
        return Err(Error::validation("runs must be at least 1"));
    }
    let per_run = (0..cfg.runs)
        .into_par_iter()
        .map(|run| checkerboard_run(cfg, run))
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let wins = per_run.iter().filter(|(s, b)| s < b).count();
    let losses = per_run.iter().filter(|(s, b)| s > b).count();
    Ok(CheckerboardResult {
        score: StatCell::from_values(per_run.iter().map(|r| r.0).collect())?,
        baseline: StatCell::from_values(per_run.iter().map(|r| r.1).collect())?,
        wins,
        losses,
        p_value: sign_test_p_value(wins, losses),
    })
}

fn checkerboard_run(cfg: &CheckerboardConfig, run: usize) -> Result<(f64, f64)> {
    let seed = derive_seed(cfg.seed, &[run as u64]);
    let spec = CheckerboardSpec::random(cfg.grid, 2, derive_seed(seed, &[0]))?;
    let sample = sample_checkerboard(&spec, cfg.n_per_bin, derive_seed(seed, &[1]))?;
    let stream_cfg = StreamConfig {
        detector: DetectorConfig::Oracle {
            change_points: vec![cfg.n_per_bin],
        },
        classifier: cfg.classifier,
        method: cfg.method,
        prototypes: cfg.prototypes,
        seed: derive_seed(seed, &[2]),
        ..Default::default()
    };
    let flagged: BTreeSet<usize> = match cfg.rule {
        FlagRule::CharacteristicPresence => {
            let xs = sample.dataset.features().cloned();
            let reports = explain_stream(xs, &stream_cfg)?;
            let report = reports
                .first()
                .ok_or_else(|| Error::validation("oracle detector produced no report"))?;
            report
                .characteristic
                .iter()
                .filter_map(|c| spec.cell_of(&c.x))
                .collect()
        }
        FlagRule::IdentifiabilityMass => {
            let model = cfg.classifier.with_seed(stream_cfg.seed).fit(&sample.dataset)?;
            let xs: Vec<FeatureVector> = sample.dataset.features().cloned().collect();
            let i_hat = estimate_identifiability(&model, &xs)?;
            let mut mass = vec![(0.0, 0usize); spec.n_cells()];
            for (x, i) in xs.iter().zip(&i_hat) {
                if let Some(c) = spec.cell_of(x) {
                    mass[c].0 += i.value();
                    mass[c].1 += 1;
                }
            }
            (0..spec.n_cells())
                .filter(|&c| mass[c].1 > 0 && mass[c].0 / mass[c].1 as f64 > 0.5)
                .collect()
        }
    };
    let changed = &sample.changed_cells;
    let cells = spec.n_cells();
    Ok((
        misclassification_score(&flagged, changed, cells),
        random_flagging_baseline(flagged.len(), changed.len(), cells),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub enum BenchmarkTargets {
    Regression(Vec<f64>),
    Classification(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkData {
    pub name: String,
    pub features: Vec<FeatureVector>,
    pub targets: BenchmarkTargets,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub dataset: String,
    pub classifier: String,
    pub mse: StatCell,
}

/// Relabels each dataset into two time bins, splits it in half at random,
/// trains on one half and scores the estimated identifiability against the
/// defined one on the other.
pub fn eval_benchmarks(
    datasets: &[BenchmarkData],
    classifiers: &[ClassifierConfig],
    runs: usize,
    seed: u64,
) -> Result<Vec<BenchmarkRow>> {
    if runs == 0 {
        return Err(Error::validation("runs must be at least 1"));
    }
    let mut rows = Vec::new();
    for (di, data) in datasets.iter().enumerate() {
        let n = data.features.len();
        let target_len = match &data.targets {
            BenchmarkTargets::Regression(y) => y.len(),
            BenchmarkTargets::Classification(y) => y.len(),
        };
        if n != target_len {
            return Err(Error::validation(format!(
                "{}: {n} feature rows but {target_len} targets",
                data.name
            )));
        }
        for clf in classifiers {
            let values = (0..runs)
                .into_par_iter()
                .map(|run| {
                    benchmark_run(data, clf, derive_seed(seed, &[di as u64, run as u64]))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(BenchmarkRow {
                dataset: data.name.clone(),
                classifier: clf.short_name().to_string(),
                mse: StatCell::from_values(values)?,
            });
        }
    }
    Ok(rows)
}

fn benchmark_run(data: &BenchmarkData, clf: &ClassifierConfig, seed: u64) -> Result<f64> {
    use rand::seq::SliceRandom;
    let relabeled: Relabeled = match &data.targets {
        BenchmarkTargets::Regression(y) => {
            let pairs: Vec<(FeatureVector, f64)> =
                data.features.iter().cloned().zip(y.iter().copied()).collect();
            relabel_regression(&pairs, derive_seed(seed, &[0]))?
        }
        BenchmarkTargets::Classification(y) => {
            let pairs: Vec<(FeatureVector, String)> =
                data.features.iter().cloned().zip(y.iter().cloned()).collect();
            relabel_classification(&pairs, derive_seed(seed, &[0]))?
        }
    };
    let mut order: Vec<usize> = (0..relabeled.dataset.len()).collect();
    order.shuffle(&mut crate::random::seeded(derive_seed(seed, &[1])));
    let half = order.len() / 2;
    let (train_idx, test_idx) = order.split_at(half);
    let samples = relabeled.dataset.samples();
    let train = Dataset::new(
        train_idx.iter().map(|&i| samples[i].clone()).collect(),
        relabeled.dataset.n_bins(),
    )?;
    let model = clf.with_seed(derive_seed(seed, &[2])).fit(&train)?;
    let test_x: Vec<FeatureVector> = test_idx.iter().map(|&i| samples[i].x.clone()).collect();
    let estimated: Vec<f64> = estimate_identifiability(&model, &test_x)?
        .into_iter()
        .map(|s| s.value())
        .collect();
    let truth: Vec<f64> = test_idx.iter().map(|&i| relabeled.truth.i_true[i]).collect();
    identifiability_mse(&estimated, &truth)
}

/// Writes a `config,method,mean,std,runs` style table.
pub fn write_table_csv<W: std::io::Write>(
    writer: W,
    header: &[&str],
    rows: &[(Vec<String>, &StatCell)],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut h: Vec<&str> = header.to_vec();
    h.extend(["mean", "std", "runs"]);
    w.write_record(&h)?;
    for (keys, cell) in rows {
        let mut rec = keys.clone();
        rec.extend([cell.mean.to_string(), cell.std.to_string(), cell.runs.to_string()]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
