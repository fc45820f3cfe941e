//! Locating characteristic samples: identifiability-weighted resampling,
//! prototype clustering (k-means, mean shift, affinity propagation) and
//! snapping prototypes back onto dataset members.
//!
//! Resampling indices with probability proportional to the identifiability
//! estimate turns the empirical distribution of the data into one that
//! approximates the `C`-weighted measure; the modes of that measure are found
//! with an ordinary (unweighted) prototype method.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random::{derive_seed, seeded};
use crate::types::{squared_euclidean, Dataset, FeatureVector, IdentifiabilityScore, TimedSample};

/// Nonnegative, finite per-sample weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(pos) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::validation(format!(
                "weight {pos} = {} is negative or not finite",
                weights[pos]
            )));
        }
        Ok(WeightVector(weights))
    }

    pub fn from_scores(scores: &[IdentifiabilityScore]) -> Self {
        WeightVector(scores.iter().map(|s| s.value()).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `m` independent index draws with probability proportional to the weights,
/// or uniform when every weight is zero.
pub fn weighted_resample(weights: &WeightVector, m: usize, seed: u64) -> Result<Vec<usize>> {
    let n = weights.len();
    if n == 0 {
        return Err(Error::validation("cannot resample from an empty weight vector"));
    }
    if m == 0 {
        return Err(Error::validation("resample size must be at least 1"));
    }
    let mut rng = seeded(seed);
    if weights.as_slice().iter().all(|&w| w == 0.0) {
        return Ok((0..m).map(|_| rng.random_range(0..n)).collect());
    }
    let dist = WeightedIndex::new(weights.as_slice())
        .map_err(|e| Error::validation(format!("invalid resampling weights: {e}")))?;
    Ok((0..m).map(|_| dist.sample(&mut rng)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterMethod {
    /// k-means on an identifiability-weighted resample.
    KMeansResampled,
    /// k-means with identifiability as sample weights.
    KMeansWeighted,
    /// k-means ignoring identifiability.
    KMeansBaseline,
    /// Mean shift on an identifiability-weighted resample.
    MeanShift,
    /// Affinity propagation on an identifiability-weighted resample.
    AffinityPropagation,
}

impl ClusterMethod {
    pub const ALL: [ClusterMethod; 5] = [
        ClusterMethod::KMeansResampled,
        ClusterMethod::KMeansWeighted,
        ClusterMethod::KMeansBaseline,
        ClusterMethod::MeanShift,
        ClusterMethod::AffinityPropagation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClusterMethod::KMeansResampled => "kmeans-resampled",
            ClusterMethod::KMeansWeighted => "kmeans-weighted",
            ClusterMethod::KMeansBaseline => "kmeans-baseline",
            ClusterMethod::MeanShift => "mean-shift",
            ClusterMethod::AffinityPropagation => "affinity-propagation",
        }
    }

    fn resamples(self) -> bool {
        matches!(
            self,
            ClusterMethod::KMeansResampled
                | ClusterMethod::MeanShift
                | ClusterMethod::AffinityPropagation
        )
    }
}

impl std::str::FromStr for ClusterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let found = ClusterMethod::ALL.into_iter().find(|m| m.name() == key);
        found.or(match key.as_str() {
            "kmeans" | "k-m" | "km" => Some(ClusterMethod::KMeansResampled),
            "ms" => Some(ClusterMethod::MeanShift),
            "ap" => Some(ClusterMethod::AffinityPropagation),
            _ => None,
        })
        .ok_or_else(|| Error::validation(format!("unknown clustering method '{s}'")))
    }
}

/// Cluster prototypes; not necessarily dataset members.
#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeSet {
    pub points: Vec<FeatureVector>,
    pub method: &'static str,
    /// False when an iterative method stopped at its iteration cap.
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub prototypes: PrototypeSet,
    pub labels: Vec<usize>,
    /// Inertia after each assignment step.
    pub inertia_history: Vec<f64>,
}

impl KMeansResult {
    pub fn inertia(&self) -> f64 {
        self.inertia_history.last().copied().unwrap_or(0.0)
    }
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = squared_euclidean(point, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn check_points(points: &[FeatureVector]) -> Result<usize> {
    let dim = points
        .first()
        .map(|p| p.dim())
        .ok_or_else(|| Error::validation("no points to cluster"))?;
    if let Some(p) = points.iter().find(|p| p.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: p.dim(),
        });
    }
    Ok(dim)
}

/// Greedy k-means++: each new center is the best of `2 + ln k` candidates
/// drawn proportionally to weight times squared distance.
fn kmeans_plus_plus(
    points: &[FeatureVector],
    weights: &[f64],
    k: usize,
    rng: &mut crate::random::Rng,
) -> Vec<Vec<f64>> {
    let n = points.len();
    let trials = 2 + (k as f64).ln() as usize;
    let draw = |mass: &[f64], rng: &mut crate::random::Rng| -> usize {
        let total: f64 = mass.iter().sum();
        if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            for (i, m) in mass.iter().enumerate() {
                if u < *m {
                    return i;
                }
                u -= m;
            }
            mass.iter().rposition(|m| *m > 0.0).unwrap_or(n - 1)
        } else {
            rng.random_range(0..n)
        }
    };
    let first = draw(weights, rng);
    let mut centers = vec![points[first].to_vec()];
    let mut closest: Vec<f64> = points
        .iter()
        .map(|p| squared_euclidean(p, &centers[0]))
        .collect();
    while centers.len() < k {
        let mass: Vec<f64> = closest.iter().zip(weights).map(|(d, w)| d * w).collect();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let cand = draw(&mass, rng);
            let updated: Vec<f64> = points
                .iter()
                .zip(&closest)
                .map(|(p, &d)| d.min(squared_euclidean(p, &points[cand])))
                .collect();
            let potential: f64 = updated.iter().zip(weights).map(|(d, w)| d * w).sum();
            if best.as_ref().is_none_or(|b| potential < b.0) {
                best = Some((potential, cand, updated));
            }
        }
        let (_, cand, updated) = best.expect("at least one trial");
        centers.push(points[cand].to_vec());
        closest = updated;
    }
    centers
}

/// Lloyd's algorithm with greedy k-means++ seeding. An empty cluster has its
/// center moved onto the point farthest from its current center.
pub fn kmeans(
    points: &[FeatureVector],
    k: usize,
    weights: Option<&[f64]>,
    max_iter: usize,
    seed: u64,
) -> Result<KMeansResult> {
    let dim = check_points(points)?;
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::validation(format!("k = {k} must lie in 1..={n}")));
    }
    let weights: Vec<f64> = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(Error::validation("one weight per point required"));
            }
            WeightVector::new(w.to_vec())?;
            if w.iter().all(|&x| x == 0.0) {
                vec![1.0; n]
            } else {
                w.to_vec()
            }
        }
        None => vec![1.0; n],
    };
    let mut rng = seeded(seed);
    let mut centers = kmeans_plus_plus(points, &weights, k, &mut rng);
    let mut labels = vec![usize::MAX; n];
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        let mut inertia = 0.0;
        let mut dists = vec![0.0; n];
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centers);
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
            dists[i] = d;
            inertia += weights[i] * d;
        }
        history.push(inertia);
        if !changed {
            converged = true;
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut mass = vec![0.0; k];
        for (i, p) in points.iter().enumerate() {
            let w = weights[i];
            if w == 0.0 {
                continue;
            }
            mass[labels[i]] += w;
            for (s, v) in sums[labels[i]].iter_mut().zip(p.iter()) {
                *s += w * v;
            }
        }
        let mut taken = vec![false; n];
        for c in 0..k {
            if mass[c] > 0.0 {
                centers[c] = sums[c].iter().map(|s| s / mass[c]).collect();
            } else {
                let far = (0..n)
                    .filter(|&i| !taken[i] && weights[i] > 0.0)
                    .fold(None, |acc: Option<usize>, i| match acc {
                        Some(j) if dists[j] >= dists[i] => Some(j),
                        _ => Some(i),
                    });
                if let Some(i) = far {
                    taken[i] = true;
                    centers[c] = points[i].to_vec();
                    dists[i] = 0.0;
                }
            }
        }
    }
    Ok(KMeansResult {
        prototypes: PrototypeSet {
            points: centers.into_iter().map(FeatureVector).collect(),
            method: "kmeans",
            converged,
        },
        labels,
        inertia_history: history,
    })
}

/// Median pairwise Euclidean distance divided by `sqrt(2 ln(n + 1))`.
/// Zero distances (duplicate points) are skipped when they would make the
/// median vanish. At most 2000 evenly strided points enter the estimate.
pub fn median_heuristic_bandwidth(points: &[FeatureVector]) -> f64 {
    let n = points.len();
    let stride = n.div_ceil(2000).max(1);
    let subset: Vec<&FeatureVector> = points.iter().step_by(stride).collect();
    let mut dists = Vec::with_capacity(subset.len() * subset.len().saturating_sub(1) / 2);
    for (i, a) in subset.iter().enumerate() {
        for b in &subset[i + 1..] {
            dists.push(squared_euclidean(a, b).sqrt());
        }
    }
    let median = |v: &mut Vec<f64>| -> f64 {
        if v.is_empty() {
            return 0.0;
        }
        v.sort_unstable_by(f64::total_cmp);
        let m = v.len() / 2;
        if v.len() % 2 == 1 {
            v[m]
        } else {
            0.5 * (v[m - 1] + v[m])
        }
    };
    let mut med = median(&mut dists);
    if med == 0.0 {
        dists.retain(|&d| d > 0.0);
        med = median(&mut dists);
    }
    med / (2.0 * ((n + 1) as f64).ln()).sqrt()
}

#[derive(Debug, Clone)]
pub struct MeanShiftResult {
    pub prototypes: PrototypeSet,
    pub bandwidth: f64,
}

/// Gaussian-kernel mean shift started from every distinct point. Converged
/// modes are visited in order of decreasing kernel density and a mode is kept
/// only if no kept mode lies within `bandwidth / 2`.
pub fn mean_shift(points: &[FeatureVector], bandwidth: Option<f64>) -> Result<MeanShiftResult> {
    check_points(points)?;
    let h = match bandwidth {
        Some(h) if !(h > 0.0 && h.is_finite()) => {
            return Err(Error::validation(format!(
                "bandwidth must be positive and finite, got {h}"
            )))
        }
        Some(h) => h,
        None => median_heuristic_bandwidth(points),
    };
    if h == 0.0 {
        // every point identical
        return Ok(MeanShiftResult {
            prototypes: PrototypeSet {
                points: vec![points[0].clone()],
                method: "mean-shift",
                converged: true,
            },
            bandwidth: h,
        });
    }
    let two_h2 = 2.0 * h * h;
    let tol = 1e-3 * h;
    let max_iter = 300;
    let mut starts: Vec<&FeatureVector> = Vec::new();
    {
        let mut sorted: Vec<&FeatureVector> = points.iter().collect();
        sorted.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        sorted.dedup();
        starts.extend(sorted);
    }
    let mut all_converged = true;
    let mut modes: Vec<(f64, Vec<f64>)> = Vec::with_capacity(starts.len());
    for start in starts {
        let mut y = start.to_vec();
        let mut done = false;
        let mut density = 0.0;
        for _ in 0..max_iter {
            let mut num = vec![0.0; y.len()];
            let mut den = 0.0;
            for p in points {
                let w = (-squared_euclidean(p, &y) / two_h2).exp();
                den += w;
                for (n, v) in num.iter_mut().zip(p.iter()) {
                    *n += w * v;
                }
            }
            density = den;
            if den == 0.0 {
                done = true;
                break;
            }
            let next: Vec<f64> = num.iter().map(|v| v / den).collect();
            let shift = squared_euclidean(&next, &y).sqrt();
            y = next;
            if shift < tol {
                done = true;
                break;
            }
        }
        all_converged &= done;
        modes.push((density, y));
    }
    // stable sort keeps start order among equal densities
    modes.sort_by(|a, b| b.0.total_cmp(&a.0));
    let radius2 = (h / 2.0) * (h / 2.0);
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for (_, m) in modes {
        if kept.iter().all(|k| squared_euclidean(k, &m) > radius2) {
            kept.push(m);
        }
    }
    Ok(MeanShiftResult {
        prototypes: PrototypeSet {
            points: kept.into_iter().map(FeatureVector).collect(),
            method: "mean-shift",
            converged: all_converged,
        },
        bandwidth: h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffinityConfig {
    /// Self-similarity; `None` uses the median off-diagonal similarity.
    pub preference: Option<f64>,
    pub damping: f64,
    pub max_iter: usize,
    /// Iterations with an unchanged exemplar set that count as converged.
    pub convergence_iter: usize,
    /// Seed for a vanishing perturbation of the similarities that breaks
    /// exact ties between duplicate points. `None` disables it.
    pub jitter_seed: Option<u64>,
}

impl Default for AffinityConfig {
    fn default() -> Self {
        AffinityConfig {
            preference: None,
            damping: 0.5,
            max_iter: 200,
            convergence_iter: 15,
            jitter_seed: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AffinityResult {
    pub prototypes: PrototypeSet,
    /// Indices of the exemplars among the input points.
    pub exemplars: Vec<usize>,
    pub labels: Vec<usize>,
    pub iterations: usize,
}

/// Affinity propagation on `s(i, k) = -|x_i - x_k|^2`.
///
/// Stopping at `max_iter` without a stable exemplar set is reported through
/// `prototypes.converged` rather than as an error. If no point ever becomes
/// an exemplar, the point with the largest self-evidence `a(k,k) + r(k,k)` is
/// used as the single exemplar.
pub fn affinity_propagation(points: &[FeatureVector], cfg: &AffinityConfig) -> Result<AffinityResult> {
    check_points(points)?;
    let n = points.len();
    if n < 2 {
        return Err(Error::validation("affinity propagation needs at least 2 points"));
    }
    if !(0.5..1.0).contains(&cfg.damping) {
        return Err(Error::validation(format!(
            "damping must lie in [0.5, 1), got {}",
            cfg.damping
        )));
    }
    let mut s = vec![0.0; n * n];
    let mut off_diag = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for k in 0..n {
            if i != k {
                let v = -squared_euclidean(&points[i], &points[k]);
                s[i * n + k] = v;
                off_diag.push(v);
            }
        }
    }
    let preference = match cfg.preference {
        Some(p) => p,
        None => {
            off_diag.sort_unstable_by(f64::total_cmp);
            let m = off_diag.len() / 2;
            if off_diag.len() % 2 == 1 {
                off_diag[m]
            } else {
                0.5 * (off_diag[m - 1] + off_diag[m])
            }
        }
    };
    for k in 0..n {
        s[k * n + k] = preference;
    }
    if let Some(seed) = cfg.jitter_seed {
        let mut rng = seeded(seed);
        for v in s.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += (f64::EPSILON * *v + f64::MIN_POSITIVE * 100.0) * z;
        }
    }

    let damp = cfg.damping;
    let mut r = vec![0.0; n * n];
    let mut a = vec![0.0; n * n];
    let window = cfg.convergence_iter.max(1);
    let mut history: Vec<Vec<bool>> = Vec::with_capacity(window);
    let mut converged = false;
    let mut iterations = 0;
    let mut col = vec![0.0; n];
    for it in 0..cfg.max_iter {
        iterations = it + 1;
        for i in 0..n {
            let row = i * n;
            let (mut best, mut best_k, mut second) = (f64::NEG_INFINITY, 0, f64::NEG_INFINITY);
            for k in 0..n {
                let v = a[row + k] + s[row + k];
                if v > best {
                    second = best;
                    best = v;
                    best_k = k;
                } else if v > second {
                    second = v;
                }
            }
            for k in 0..n {
                let competitor = if k == best_k { second } else { best };
                let fresh = s[row + k] - competitor;
                r[row + k] = damp * r[row + k] + (1.0 - damp) * fresh;
            }
        }
        col.iter_mut().for_each(|c| *c = 0.0);
        for i in 0..n {
            for k in 0..n {
                let v = r[i * n + k];
                col[k] += if i == k { v } else { v.max(0.0) };
            }
        }
        for i in 0..n {
            for k in 0..n {
                let rp = if i == k { r[i * n + k] } else { r[i * n + k].max(0.0) };
                let fresh = col[k] - rp;
                let fresh = if i == k { fresh } else { fresh.min(0.0) };
                a[i * n + k] = damp * a[i * n + k] + (1.0 - damp) * fresh;
            }
        }
        let evidence: Vec<bool> = (0..n).map(|k| a[k * n + k] + r[k * n + k] > 0.0).collect();
        if history.len() == window {
            history.remove(0);
        }
        history.push(evidence);
        if history.len() == window {
            let stable = (0..n).all(|k| history.iter().all(|e| e[k]) || history.iter().all(|e| !e[k]));
            let any = history.last().is_some_and(|e| e.iter().any(|&b| b));
            if stable && any {
                converged = true;
                break;
            }
        }
    }

    let mut exemplars: Vec<usize> = (0..n).filter(|&k| a[k * n + k] + r[k * n + k] > 0.0).collect();
    if exemplars.is_empty() {
        let best = (0..n)
            .max_by(|&x, &y| {
                (a[x * n + x] + r[x * n + x])
                    .total_cmp(&(a[y * n + y] + r[y * n + y]))
                    .then(y.cmp(&x))
            })
            .unwrap_or(0);
        exemplars.push(best);
        converged = false;
    }
    let assign = |exemplars: &[usize]| -> Vec<usize> {
        (0..n)
            .map(|i| {
                if let Some(c) = exemplars.iter().position(|&e| e == i) {
                    return c;
                }
                let mut best = (0, f64::NEG_INFINITY);
                for (c, &e) in exemplars.iter().enumerate() {
                    if s[i * n + e] > best.1 {
                        best = (c, s[i * n + e]);
                    }
                }
                best.0
            })
            .collect()
    };
    // refine each cluster's exemplar to the member with the largest summed similarity
    let labels = assign(&exemplars);
    for (c, e) in exemplars.iter_mut().enumerate() {
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
        let mut best = (*e, f64::NEG_INFINITY);
        for &j in &members {
            let total: f64 = members.iter().map(|&i| s[i * n + j]).sum();
            if total > best.1 {
                best = (j, total);
            }
        }
        *e = best.0;
    }
    let labels = assign(&exemplars);
    Ok(AffinityResult {
        prototypes: PrototypeSet {
            points: exemplars.iter().map(|&e| points[e].clone()).collect(),
            method: "affinity-propagation",
            converged,
        },
        exemplars,
        labels,
        iterations,
    })
}

/// A dataset member chosen to represent a region where drift manifests.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicSample {
    /// Position of the member in the dataset it was snapped onto.
    pub index: usize,
    pub sample: TimedSample,
    pub i_value: IdentifiabilityScore,
    /// Index of the prototype that produced this sample.
    pub prototype: usize,
}

#[derive(Debug, Clone)]
pub struct CharacteristicSearch {
    pub prototypes: PrototypeSet,
    pub samples: Vec<CharacteristicSample>,
}

/// Index of the nearest member of `data` (ties to the lower index).
pub fn closest_point(data: &Dataset, x: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, s) in data.samples().iter().enumerate() {
        let d = squared_euclidean(&s.x, x);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Runs the configured prototype method on identifiability-reweighted data
/// and snaps each prototype onto its nearest dataset member. Members hit by
/// several prototypes are reported once.
///
/// `k` is the number of prototypes for the k-means variants; mean shift and
/// affinity propagation choose their own count. `m_draw` defaults to
/// `data.len()`.
pub fn find_characteristic_samples(
    data: &Dataset,
    i_hat: &[IdentifiabilityScore],
    method: ClusterMethod,
    m_draw: Option<usize>,
    k: usize,
    seed: u64,
) -> Result<CharacteristicSearch> {
    if i_hat.len() != data.len() {
        return Err(Error::validation(format!(
            "{} identifiability values for {} samples",
            i_hat.len(),
            data.len()
        )));
    }
    if k == 0 {
        return Err(Error::validation("k must be at least 1"));
    }
    let weights = WeightVector::from_scores(i_hat);
    let features: Vec<FeatureVector> = data.features().cloned().collect();
    let cluster_seed = derive_seed(seed, &[1]);

    let prototypes = if method.resamples() {
        let m = m_draw.unwrap_or(data.len());
        let mut idx = weighted_resample(&weights, m, derive_seed(seed, &[0]))?;
        let distinct = {
            let mut d = idx.clone();
            d.sort_unstable();
            d.dedup();
            d.len()
        };
        let drawn: Vec<FeatureVector> = idx.drain(..).map(|i| features[i].clone()).collect();
        match method {
            ClusterMethod::KMeansResampled => {
                kmeans(&drawn, k.min(distinct), None, 300, cluster_seed)?.prototypes
            }
            ClusterMethod::MeanShift => mean_shift(&drawn, None)?.prototypes,
            ClusterMethod::AffinityPropagation => {
                if drawn.len() < 2 {
                    PrototypeSet {
                        points: drawn,
                        method: "affinity-propagation",
                        converged: true,
                    }
                } else {
                    let cfg = AffinityConfig {
                        jitter_seed: Some(cluster_seed),
                        ..Default::default()
                    };
                    affinity_propagation(&drawn, &cfg)?.prototypes
                }
            }
            _ => unreachable!("non-resampling method"),
        }
    } else {
        let w = match method {
            ClusterMethod::KMeansWeighted if weights.as_slice().iter().any(|&w| w > 0.0) => {
                Some(weights.as_slice())
            }
            _ => None,
        };
        let usable = match w {
            Some(w) => w.iter().filter(|&&x| x > 0.0).count(),
            None => data.len(),
        };
        kmeans(&features, k.min(usable), w, 300, cluster_seed)?.prototypes
    };

    let mut samples: Vec<CharacteristicSample> = Vec::with_capacity(prototypes.points.len());
    for (p, point) in prototypes.points.iter().enumerate() {
        let index = closest_point(data, point);
        if samples.iter().any(|c| c.index == index) {
            continue;
        }
        samples.push(CharacteristicSample {
            index,
            sample: data.samples()[index].clone(),
            i_value: i_hat[index],
            prototype: p,
        });
    }
    Ok(CharacteristicSearch {
        prototypes,
        samples,
    })
}

/// Mean of `truth` over the given points.
pub fn prototype_quality<F>(points: &[FeatureVector], truth: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if points.is_empty() {
        return Err(Error::validation("prototype quality of an empty set"));
    }
    let mut sum = 0.0;
    for p in points {
        sum += truth(p)?;
    }
    Ok(sum / points.len() as f64)
}
