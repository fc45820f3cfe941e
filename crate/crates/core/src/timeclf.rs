//! Probabilistic classifiers mapping a feature vector to a posterior over
//! time bins. Their posteriors are the plug-in estimate of the identifiability
//! function.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identifiability::identifiability;
use crate::random::{derive_seed, seeded, Rng};
use crate::types::{check_dim, Dataset, FeatureVector, IdentifiabilityScore, TimePosterior};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnnMetric {
    #[default]
    SquaredEuclidean,
    Manhattan,
}

impl KnnMetric {
    fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            KnnMetric::SquaredEuclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
            KnnMetric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    #[serde(default)]
    pub metric: KnnMetric,
}

impl Default for KnnConfig {
    fn default() -> Self {
        KnnConfig {
            k: 5,
            metric: KnnMetric::SquaredEuclidean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure or cannot be split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 10,
            max_depth: None,
            min_leaf: 1,
            seed: 0,
        }
    }
}

/// Which classifier to train, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClassifierConfig {
    Knn(KnnConfig),
    RandomForest(ForestConfig),
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig::Knn(KnnConfig::default())
    }
}

impl ClassifierConfig {
    pub fn fit(&self, data: &Dataset) -> Result<TrainedTimeClassifier> {
        match self {
            ClassifierConfig::Knn(cfg) => fit_knn(data, cfg),
            ClassifierConfig::RandomForest(cfg) => fit_random_forest(data, cfg),
        }
    }

    /// Same classifier with its seed (if any) replaced.
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            ClassifierConfig::RandomForest(cfg) => {
                ClassifierConfig::RandomForest(ForestConfig { seed, ..cfg })
            }
            other => other,
        }
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            ClassifierConfig::Knn(_) => "knn",
            ClassifierConfig::RandomForest(_) => "rf",
        }
    }
}

/// Brute-force k-nearest-neighbour model. The posterior is the raw bin
/// frequency among exactly `k` neighbours; distance ties go to the lower
/// training index.
#[derive(Debug, Clone)]
pub struct KnnModel {
    features: Vec<f64>,
    bins: Vec<usize>,
    k: usize,
    metric: KnnMetric,
    n_bins: usize,
    dim: usize,
}

impl KnnModel {
    /// Indices of the `k` nearest training points, nearest first.
    pub fn neighbors(&self, x: &[f64]) -> Result<Vec<usize>> {
        check_dim(self.dim, x.len())?;
        let mut dists: Vec<(f64, usize)> = self
            .features
            .chunks_exact(self.dim)
            .enumerate()
            .map(|(i, row)| (self.metric.distance(row, x), i))
            .collect();
        let by_distance =
            |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dists.len() {
            dists.select_nth_unstable_by(self.k - 1, by_distance);
            dists.truncate(self.k);
        }
        dists.sort_unstable_by(by_distance);
        Ok(dists.into_iter().map(|(_, i)| i).collect())
    }

    pub fn predict_posterior(&self, x: &[f64]) -> Result<TimePosterior> {
        let mut counts = vec![0.0; self.n_bins];
        for i in self.neighbors(x)? {
            counts[self.bins[i]] += 1.0;
        }
        TimePosterior::from_masses(&counts)
    }
}

pub fn fit_knn(data: &Dataset, cfg: &KnnConfig) -> Result<TrainedTimeClassifier> {
    if cfg.k == 0 || cfg.k > data.len() {
        return Err(Error::validation(format!(
            "k = {} must lie in 1..={}",
            cfg.k,
            data.len()
        )));
    }
    let mut features = Vec::with_capacity(data.len() * data.dim());
    for s in data.samples() {
        features.extend_from_slice(&s.x);
    }
    Ok(TrainedTimeClassifier::Knn(KnnModel {
        features,
        bins: data.samples().iter().map(|s| s.t.zero_based()).collect(),
        k: cfg.k,
        metric: cfg.metric,
        n_bins: data.n_bins(),
        dim: data.dim(),
    }))
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        dist: Vec<f64>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// CART tree with Gini splits; leaves hold bin frequencies.
#[derive(Debug, Clone)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    fn predict(&self, x: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { dist } => return dist,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct TreeBuilder<'a> {
    x: &'a [f64],
    bins: &'a [usize],
    dim: usize,
    n_bins: usize,
    max_depth: Option<usize>,
    min_leaf: usize,
    mtry: usize,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn gini_mass(counts: &[f64], n: f64) -> f64 {
    // n * gini = n - sum c^2 / n
    n - counts.iter().map(|c| c * c).sum::<f64>() / n
}

impl TreeBuilder<'_> {
    fn value(&self, sample: usize, feature: usize) -> f64 {
        self.x[sample * self.dim + feature]
    }

    fn counts(&self, idx: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.n_bins];
        for &i in idx {
            c[self.bins[i]] += 1.0;
        }
        c
    }

    fn best_split_on(&self, idx: &mut [usize], feature: usize, total: &[f64]) -> Option<BestSplit> {
        idx.sort_unstable_by(|&a, &b| {
            self.value(a, feature)
                .total_cmp(&self.value(b, feature))
                .then(a.cmp(&b))
        });
        let n = idx.len();
        let mut left = vec![0.0; self.n_bins];
        let mut best: Option<BestSplit> = None;
        for pos in 0..n - 1 {
            left[self.bins[idx[pos]]] += 1.0;
            let nl = pos + 1;
            let nr = n - nl;
            if nl < self.min_leaf || nr < self.min_leaf {
                continue;
            }
            let lo = self.value(idx[pos], feature);
            let hi = self.value(idx[pos + 1], feature);
            if lo >= hi {
                continue;
            }
            let right: Vec<f64> = total.iter().zip(&left).map(|(t, l)| t - l).collect();
            let impurity = gini_mass(&left, nl as f64) + gini_mass(&right, nr as f64);
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let mid = 0.5 * (lo + hi);
                let threshold = if mid < hi { mid } else { lo };
                best = Some(BestSplit {
                    feature,
                    threshold,
                    impurity,
                });
            }
        }
        best
    }

    fn build(&self, sample: Vec<usize>, rng: &mut Rng) -> DecisionTree {
        let mut nodes = Vec::new();
        // (indices, depth, slot in `nodes` to fill)
        let mut stack = vec![(sample, 0usize, 0usize)];
        nodes.push(Node::Leaf { dist: Vec::new() });
        let mut features: Vec<usize> = (0..self.dim).collect();
        while let Some((mut idx, depth, slot)) = stack.pop() {
            let total = self.counts(&idx);
            let n = idx.len() as f64;
            let pure = total.iter().filter(|&&c| c > 0.0).count() <= 1;
            let depth_capped = self.max_depth.is_some_and(|m| depth >= m);
            let mut best: Option<BestSplit> = None;
            if !pure && !depth_capped && idx.len() >= 2 * self.min_leaf {
                features.shuffle(rng);
                for (tried, &f) in features.iter().enumerate() {
                    // keep drawing features past mtry only while no valid split exists
                    if tried >= self.mtry && best.is_some() {
                        break;
                    }
                    if let Some(s) = self.best_split_on(&mut idx, f, &total) {
                        if best.as_ref().is_none_or(|b| s.impurity < b.impurity) {
                            best = Some(s);
                        }
                    }
                }
            }
            match best {
                None => {
                    nodes[slot] = Node::Leaf {
                        dist: total.iter().map(|c| c / n).collect(),
                    };
                }
                Some(split) => {
                    let (left, right): (Vec<usize>, Vec<usize>) = idx
                        .iter()
                        .partition(|&&i| self.value(i, split.feature) <= split.threshold);
                    let left_slot = nodes.len();
                    nodes.push(Node::Leaf { dist: Vec::new() });
                    let right_slot = nodes.len();
                    nodes.push(Node::Leaf { dist: Vec::new() });
                    nodes[slot] = Node::Split {
                        feature: split.feature,
                        threshold: split.threshold,
                        left: left_slot,
                        right: right_slot,
                    };
                    stack.push((right, depth + 1, right_slot));
                    stack.push((left, depth + 1, left_slot));
                }
            }
        }
        DecisionTree { nodes }
    }
}

/// Bagged CART trees with `sqrt(d)` candidate features per split.
#[derive(Debug, Clone)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    n_bins: usize,
    dim: usize,
}

impl RandomForest {
    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Leaf bin frequencies of each tree at `x`.
    pub fn tree_posteriors(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_dim(self.dim, x.len())?;
        Ok(self.trees.iter().map(|t| t.predict(x).to_vec()).collect())
    }

    pub fn predict_posterior(&self, x: &[f64]) -> Result<TimePosterior> {
        check_dim(self.dim, x.len())?;
        let mut mean = vec![0.0; self.n_bins];
        for tree in &self.trees {
            for (m, p) in mean.iter_mut().zip(tree.predict(x)) {
                *m += p;
            }
        }
        let n = self.trees.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        TimePosterior::from_masses(&mean)
    }
}

pub fn fit_random_forest(data: &Dataset, cfg: &ForestConfig) -> Result<TrainedTimeClassifier> {
    if cfg.n_trees == 0 {
        return Err(Error::validation("a forest needs at least one tree"));
    }
    if cfg.min_leaf == 0 {
        return Err(Error::validation("min_leaf must be at least 1"));
    }
    let dim = data.dim();
    let mut x = Vec::with_capacity(data.len() * dim);
    for s in data.samples() {
        x.extend_from_slice(&s.x);
    }
    let bins: Vec<usize> = data.samples().iter().map(|s| s.t.zero_based()).collect();
    let builder = TreeBuilder {
        x: &x,
        bins: &bins,
        dim,
        n_bins: data.n_bins(),
        max_depth: cfg.max_depth,
        min_leaf: cfg.min_leaf,
        mtry: ((dim as f64).sqrt() as usize).max(1),
    };
    let n = data.len();
    let trees = (0..cfg.n_trees)
        .map(|t| {
            let mut rng = seeded(derive_seed(cfg.seed, &[t as u64]));
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            builder.build(bootstrap, &mut rng)
        })
        .collect();
    Ok(TrainedTimeClassifier::Forest(RandomForest {
        trees,
        n_bins: data.n_bins(),
        dim,
    }))
}

/// A fitted classifier `h: x -> posterior over time bins`.
#[derive(Debug, Clone)]
pub enum TrainedTimeClassifier {
    Knn(KnnModel),
    Forest(RandomForest),
}

impl TrainedTimeClassifier {
    pub fn n_bins(&self) -> usize {
        match self {
            TrainedTimeClassifier::Knn(m) => m.n_bins,
            TrainedTimeClassifier::Forest(m) => m.n_bins,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TrainedTimeClassifier::Knn(m) => m.dim,
            TrainedTimeClassifier::Forest(m) => m.dim,
        }
    }

    pub fn predict_posterior(&self, x: &[f64]) -> Result<TimePosterior> {
        match self {
            TrainedTimeClassifier::Knn(m) => m.predict_posterior(x),
            TrainedTimeClassifier::Forest(m) => m.predict_posterior(x),
        }
    }
}

pub fn predict_posterior(clf: &TrainedTimeClassifier, x: &[f64]) -> Result<TimePosterior> {
    clf.predict_posterior(x)
}

/// Plug-in identifiability `1 - H(h(x)) / log |T|` for each input.
pub fn estimate_identifiability(
    clf: &TrainedTimeClassifier,
    xs: &[FeatureVector],
) -> Result<Vec<IdentifiabilityScore>> {
    xs.iter()
        .map(|x| identifiability(&clf.predict_posterior(x)?))
        .collect()
}

pub fn identifiability_mse(estimated: &[f64], ground_truth: &[f64]) -> Result<f64> {
    if estimated.len() != ground_truth.len() {
        return Err(Error::validation(format!(
            "length mismatch: {} estimates, {} ground-truth values",
            estimated.len(),
            ground_truth.len()
        )));
    }
    if estimated.is_empty() {
        return Err(Error::validation("mean squared error of empty sequences"));
    }
    let sum: f64 = estimated
        .iter()
        .zip(ground_truth)
        .map(|(e, t)| (e - t) * (e - t))
        .sum();
    Ok(sum / estimated.len() as f64)
}
