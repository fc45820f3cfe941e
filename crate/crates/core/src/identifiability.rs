//! Entropy of time posteriors, the identifiability function built on it, and
//! the mean-identifiability drift indicator.
//!
//! `i(x) = 1 - H(p_x) / log |T|` where `p_x` is the posterior over time bins
//! given the observation `x`. It is zero exactly where `x` carries no
//! information about its time of origin and one where `x` pins down a single
//! bin. Its expectation is nonzero iff the per-bin distributions differ.

use crate::error::{Error, Result};
use crate::types::{IdentifiabilityScore, TimePosterior};

/// Shannon entropy in nats. Zero entries contribute nothing (`0 log 0 = 0`).
pub fn entropy(p: &TimePosterior) -> f64 {
    -p.probs()
        .iter()
        .filter(|&&q| q > 0.0)
        .map(|&q| q * q.ln())
        .sum::<f64>()
}

pub fn identifiability(p: &TimePosterior) -> Result<IdentifiabilityScore> {
    let n = p.n_bins();
    if n < 2 {
        return Err(Error::Unsupported(format!(
            "identifiability needs at least 2 time bins, got {n}"
        )));
    }
    let normalized = entropy(p) / (n as f64).ln();
    Ok(IdentifiabilityScore::clamped(1.0 - normalized))
}

/// Empirical drift indicator: the arithmetic mean of the scores.
pub fn mean_identifiability(scores: &[IdentifiabilityScore]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::validation(
            "mean identifiability of an empty sequence",
        ));
    }
    Ok(scores.iter().map(|s| s.value()).sum::<f64>() / scores.len() as f64)
}

/// `1 - H(Ber(p)) / log 2` for a two-bin posterior `(1 - p, p)`.
pub fn binary_identifiability(p: f64) -> f64 {
    let h = |q: f64| if q > 0.0 { -q * q.ln() } else { 0.0 };
    (1.0 - (h(p) + h(1.0 - p)) / std::f64::consts::LN_2).clamp(0.0, 1.0)
}
