//! Exhaustive reference analysis of an oracle under a scenario distribution:
//! the satisfying fractions λ_ξ, μ, the histogram p(λ) and ε_t.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::ScenarioDistribution;
use crate::error::{input, Result};
use crate::oracle::Oracle;

/// Brute-force summary of an (oracle, distribution) pair.
///
/// λ values are kept exactly as completing-string counts k, with λ = k / 2^c,
/// so histogram binning has no floating-point edges.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioAnalysis {
    decision_bits: u32,
    probabilities: Vec<f64>,
    completing_counts: Vec<usize>,
    mu: f64,
    /// p(λ) keyed by completing count, including k = 0.
    histogram: BTreeMap<usize, f64>,
    inv_lambda_expectation: Option<f64>,
}

/// Enumerates every (ξ, φ) pair. Charges 2^(b+c) oracle calls.
pub fn analyze(oracle: &Oracle, dist: &ScenarioDistribution) -> Result<ScenarioAnalysis> {
    if oracle.scenario_bits() != dist.scenario_bits() {
        return input(format!(
            "oracle has {} scenario bits, distribution has {}",
            oracle.scenario_bits(),
            dist.scenario_bits()
        ));
    }
    let completing_counts = (0..oracle.scenario_count())
        .into_par_iter()
        .map(|xi| oracle.completing_set(xi).map(|set| set.len()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioAnalysis::from_counts(oracle.decision_bits(), dist.probabilities().to_vec(), completing_counts))
}

impl ScenarioAnalysis {
    pub(crate) fn from_counts(decision_bits: u32, probabilities: Vec<f64>, completing_counts: Vec<usize>) -> Self {
        let decisions = (1usize << decision_bits) as f64;
        let mut histogram = BTreeMap::new();
        let mut mu = 0.0;
        let mut weighted_inverse = 0.0;
        for (&p, &k) in probabilities.iter().zip(&completing_counts) {
            *histogram.entry(k).or_insert(0.0) += p;
            if k > 0 {
                mu += p;
                weighted_inverse += p * decisions / k as f64;
            }
        }
        let inv_lambda_expectation = (mu > 0.0).then(|| weighted_inverse / mu);
        Self { decision_bits, probabilities, completing_counts, mu, histogram, inv_lambda_expectation }
    }

    pub fn decision_bits(&self) -> u32 {
        self.decision_bits
    }

    pub fn decision_count(&self) -> usize {
        1 << self.decision_bits
    }

    pub fn scenario_count(&self) -> usize {
        self.completing_counts.len()
    }

    pub fn probability(&self, scenario: usize) -> f64 {
        self.probabilities[scenario]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// |Φ*_ξ|.
    pub fn completing_count(&self, scenario: usize) -> usize {
        self.completing_counts[scenario]
    }

    pub fn completing_counts(&self) -> &[usize] {
        &self.completing_counts
    }

    /// λ_ξ = |Φ*_ξ| / 2^c.
    pub fn lambda(&self, scenario: usize) -> f64 {
        self.completing_counts[scenario] as f64 / self.decision_count() as f64
    }

    pub fn lambdas(&self) -> Vec<f64> {
        (0..self.scenario_count()).map(|xi| self.lambda(xi)).collect()
    }

    /// Probability that the drawn scenario has at least one completing string.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// p(λ) as (completing count, mass) pairs in increasing λ, including λ = 0.
    pub fn histogram(&self) -> &BTreeMap<usize, f64> {
        &self.histogram
    }

    /// p(λ) with λ as a real number.
    pub fn lambda_histogram(&self) -> Vec<(f64, f64)> {
        let n = self.decision_count() as f64;
        self.histogram.iter().map(|(&k, &mass)| (k as f64 / n, mass)).collect()
    }

    /// E[1/λ_ξ | λ_ξ > 0]; `None` when no scenario with positive probability
    /// is satisfiable.
    pub fn inv_lambda_expectation(&self) -> Option<f64> {
        self.inv_lambda_expectation
    }

    /// Smallest positive λ among scenarios with positive probability.
    pub fn min_positive_lambda(&self) -> Option<f64> {
        self.completing_counts
            .iter()
            .zip(&self.probabilities)
            .filter(|&(&k, &p)| k > 0 && p > 0.0)
            .map(|(&k, _)| k)
            .min()
            .map(|k| k as f64 / self.decision_count() as f64)
    }

    /// ε_t: probability mass of satisfiable scenarios with λ_ξ < λ_t.
    pub fn epsilon_t(&self, lambda_t: f64) -> Result<f64> {
        let n = self.decision_count() as f64;
        if !(lambda_t >= 1.0 / n && lambda_t <= 1.0) {
            return input(format!("λ_t = {lambda_t} outside [2^-c, 1]"));
        }
        // k / 2^c < λ_t  ⇔  k < λ_t · 2^c, exact because 2^c is a power of two
        let scaled = lambda_t * n;
        Ok(self
            .histogram
            .iter()
            .filter(|&(&k, _)| k > 0 && (k as f64) < scaled)
            .fold(0.0, |acc, (_, &mass)| acc + mass)
            .min(self.mu))
    }
}
