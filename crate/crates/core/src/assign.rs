//! Pairing characteristic samples with their minimal-cost counterparts in
//! each time bin.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::proto::CharacteristicSample;
use crate::types::{check_dim, Dataset, TimeBin, TimedSample};

/// A cost-matrix entry. Infeasible entries are never selected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cost {
    Finite(f64),
    Infeasible,
}

impl Cost {
    pub fn finite(self) -> Option<f64> {
        match self {
            Cost::Finite(c) => Some(c),
            Cost::Infeasible => None,
        }
    }

    fn solver_value(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(c) => write!(f, "{c}"),
            Cost::Infeasible => f.write_str("infeasible"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Cost>,
    /// Dataset index of each column, when built from a dataset.
    column_index: Vec<usize>,
}

impl CostMatrix {
    /// Row-major matrix of finite costs; columns are labelled `0..cols`.
    pub fn from_rows(rows: Vec<Vec<Cost>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::validation("cost matrix rows differ in length"));
        }
        let entries: Vec<Cost> = rows.into_iter().flatten().collect();
        if let Some(c) = entries
            .iter()
            .filter_map(|c| c.finite())
            .find(|c| !(c.is_finite() && *c >= 0.0))
        {
            return Err(Error::validation(format!(
                "costs must be finite and nonnegative, got {c}"
            )));
        }
        Ok(CostMatrix {
            rows: n,
            cols: m,
            entries,
            column_index: (0..m).collect(),
        })
    }

    pub fn from_finite(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&c| Cost::Finite(c)).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Cost {
        self.entries[row * self.cols + col]
    }

    /// Dataset index behind each column.
    pub fn column_index(&self) -> &[usize] {
        &self.column_index
    }
}

/// Dissimilarity between feature vectors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Dissimilarity {
    #[default]
    Euclidean,
    /// `sum |x_i - y_i|^p`.
    PNorm { p: f64 },
    /// `sqrt((x - y)^T M (x - y))` for a symmetric positive-definite `M`.
    Mahalanobis { matrix: Vec<Vec<f64>> },
}


impl Dissimilarity {
    pub fn pnorm(p: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::validation(format!("p-norm exponent must be positive, got {p}")));
        }
        Ok(Dissimilarity::PNorm { p })
    }

    /// Accepts `matrix` only if it is symmetric and has a Cholesky factor.
    pub fn mahalanobis(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let d = matrix.len();
        if d == 0 || matrix.iter().any(|r| r.len() != d) {
            return Err(Error::validation("metric matrix must be square and nonempty"));
        }
        for i in 0..d {
            for j in 0..i {
                let (a, b) = (matrix[i][j], matrix[j][i]);
                if !a.is_finite() || (a - b).abs() > 1e-10 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::validation("metric matrix must be symmetric"));
                }
            }
        }
        let mut l = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..=i {
                let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
                if i == j {
                    let diag = matrix[i][i] - s;
                    if !(diag > 0.0) {
                        return Err(Error::validation(
                            "metric matrix is not positive definite",
                        ));
                    }
                    l[i][i] = diag.sqrt();
                } else {
                    l[i][j] = (matrix[i][j] - s) / l[j][j];
                }
            }
        }
        Ok(Dissimilarity::Mahalanobis { matrix })
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Dissimilarity::Euclidean => Ok(()),
            Dissimilarity::PNorm { p } => Self::pnorm(*p).map(|_| ()),
            Dissimilarity::Mahalanobis { matrix } => {
                if matrix.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: matrix.len(),
                    });
                }
                Self::mahalanobis(matrix.clone()).map(|_| ())
            }
        }
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Dissimilarity::Euclidean => crate::types::squared_euclidean(x, y).sqrt(),
            Dissimilarity::PNorm { p } => {
                x.iter().zip(y).map(|(a, b)| (a - b).abs().powf(*p)).sum()
            }
            Dissimilarity::Mahalanobis { matrix } => {
                let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                let q: f64 = matrix
                    .iter()
                    .zip(&diff)
                    .map(|(row, di)| di * row.iter().zip(&diff).map(|(m, dj)| m * dj).sum::<f64>())
                    .sum();
                q.max(0.0).sqrt()
            }
        }
    }
}

/// Rows are characteristic samples, columns the members of `data` at
/// `target`. A row whose own bin is `target` is zero at its own column and
/// infeasible elsewhere.
pub fn build_cost_matrix(
    chars: &[CharacteristicSample],
    data: &Dataset,
    target: TimeBin,
    dist: &Dissimilarity,
) -> Result<CostMatrix> {
    if target.index() > data.n_bins() {
        return Err(Error::validation(format!(
            "target bin {target} outside 1..={}",
            data.n_bins()
        )));
    }
    dist.validate(data.dim())?;
    let columns = data.indices_in_bin(target);
    if columns.is_empty() {
        return Err(Error::EmptyBin { bin: target.index() });
    }
    let mut entries = Vec::with_capacity(chars.len() * columns.len());
    for c in chars {
        check_dim(data.dim(), c.sample.x.dim())?;
        for &j in &columns {
            let entry = if c.sample.t != target {
                Cost::Finite(dist.distance(&c.sample.x, &data.samples()[j].x))
            } else if j == c.index {
                Cost::Finite(0.0)
            } else {
                Cost::Infeasible
            };
            entries.push(entry);
        }
    }
    Ok(CostMatrix {
        rows: chars.len(),
        cols: columns.len(),
        entries,
        column_index: columns,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentResult {
    pub target: TimeBin,
    /// Column chosen for each row, as a dataset index when the matrix was
    /// built from a dataset.
    pub pairs: Vec<usize>,
    pub costs: Vec<f64>,
    pub total: f64,
}

/// Minimum-cost injective row-to-column assignment for `rows <= cols`.
///
/// Shortest augmenting paths with row and column potentials; rectangular
/// inputs need no padding since every row is augmented exactly once. Runs in
/// `O(rows * cols^2)`.
pub fn hungarian(costs: &CostMatrix) -> Result<Vec<usize>> {
    let (n, m) = (costs.rows, costs.cols);
    if n == 0 {
        return Ok(Vec::new());
    }
    if n > m {
        return Err(Error::validation(format!(
            "{n} rows cannot be assigned injectively to {m} columns"
        )));
    }
    let inf = f64::INFINITY;
    // 1-based with a virtual column 0, as in the classical formulation
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = costs.get(i0 - 1, j - 1).solver_value() - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            if delta == inf {
                let mut blocked: Vec<usize> = (0..=m)
                    .filter(|&j| used[j])
                    .map(|j| owner[j] - 1)
                    .collect();
                blocked.sort_unstable();
                blocked.dedup();
                return Err(Error::Infeasible { rows: blocked });
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=m {
        if owner[j] != 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    Ok(assignment)
}

/// Solves the assignment for a matrix built by [`build_cost_matrix`].
pub fn assign(costs: &CostMatrix, target: TimeBin) -> Result<AssignmentResult> {
    let cols = hungarian(costs)?;
    let mut pairs = Vec::with_capacity(cols.len());
    let mut out_costs = Vec::with_capacity(cols.len());
    for (r, &c) in cols.iter().enumerate() {
        let cost = costs
            .get(r, c)
            .finite()
            .expect("solver never selects infeasible entries");
        pairs.push(costs.column_index[c]);
        out_costs.push(cost);
    }
    Ok(AssignmentResult {
        target,
        total: out_costs.iter().sum(),
        pairs,
        costs: out_costs,
    })
}

/// One assignment per time bin; bins are solved in parallel.
pub fn associate_all(
    chars: &[CharacteristicSample],
    data: &Dataset,
    dist: &Dissimilarity,
) -> Result<BTreeMap<TimeBin, AssignmentResult>> {
    (1..=data.n_bins())
        .into_par_iter()
        .map(|b| {
            let target = TimeBin::new(b)?;
            let costs = build_cost_matrix(chars, data, target, dist)?;
            Ok((target, assign(&costs, target)?))
        })
        .collect()
}

/// `assoc.x - char.x`, feature by feature.
pub fn feature_difference(characteristic: &TimedSample, associated: &TimedSample) -> Result<Vec<f64>> {
    check_dim(characteristic.x.dim(), associated.x.dim())?;
    Ok(associated
        .x
        .iter()
        .zip(characteristic.x.iter())
        .map(|(a, c)| a - c)
        .collect())
}
