//! Classical Monte-Carlo baseline: draw scenarios from p(ξ), brute-force
//! search each one for a completing string, and average the hits.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::ScenarioAnalysis;
use crate::distribution::ScenarioDistribution;
use crate::error::{input, Result};
use crate::oracle::Oracle;

/// Order in which decision strings are probed within one scenario.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchOrder {
    /// φ = 0, 1, 2, … until a hit.
    Sequential,
    /// A uniformly random permutation of all φ, until a hit.
    RandomPermutation,
    /// Independent uniform φ until a hit, or until every string has been
    /// seen to miss (which proves the scenario unsatisfiable).
    #[default]
    WithReplacement,
}

/// Result of brute-forcing one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOutcome {
    pub found: bool,
    pub queries: u64,
}

/// Searches Φ for a string completing `scenario`, charging one call per probe.
pub fn search_scenario<R: Rng + ?Sized>(
    oracle: &Oracle,
    scenario: usize,
    order: SearchOrder,
    rng: &mut R,
) -> Result<SearchOutcome> {
    let n = oracle.decision_count();
    let mut queries = 0u64;
    match order {
        SearchOrder::Sequential => {
            for phi in 0..n {
                queries += 1;
                if oracle.evaluate(scenario, phi)? {
                    return Ok(SearchOutcome { found: true, queries });
                }
            }
        }
        SearchOrder::RandomPermutation => {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(rng);
            for phi in perm {
                queries += 1;
                if oracle.evaluate(scenario, phi)? {
                    return Ok(SearchOutcome { found: true, queries });
                }
            }
        }
        SearchOrder::WithReplacement => {
            let mut seen = vec![false; n];
            let mut unseen = n;
            while unseen > 0 {
                let phi = rng.gen_range(0..n);
                queries += 1;
                if oracle.evaluate(scenario, phi)? {
                    return Ok(SearchOutcome { found: true, queries });
                }
                if !seen[phi] {
                    seen[phi] = true;
                    unseen -= 1;
                }
            }
        }
    }
    Ok(SearchOutcome { found: false, queries })
}

/// One Monte-Carlo run of N samples.
#[derive(Debug, Clone, Serialize)]
pub struct ClassicalRunReport {
    pub samples: usize,
    pub order: SearchOrder,
    pub hits: usize,
    /// μ̃ = hits / N.
    pub mu_tilde: f64,
    /// μ̃(1 − μ̃), the plug-in variance of one Bernoulli sample.
    pub plug_in_variance: f64,
    pub queries_actual: u64,
    /// Reference model N·(μ·E[1/λ] + (1 − μ)·2^c), when an analysis is supplied.
    pub queries_model: Option<f64>,
    pub epsilon: Option<f64>,
    /// σ²/(Nε²) with σ² = 1/4, when ε is supplied.
    pub chebyshev_bound: Option<f64>,
    pub seed: Option<u64>,
}

impl ClassicalRunReport {
    /// Attaches the query model, the Chebyshev bound for `epsilon`, and the seed.
    pub fn annotate(mut self, analysis: Option<&ScenarioAnalysis>, epsilon: Option<f64>, seed: Option<u64>) -> Self {
        self.queries_model = analysis.map(|a| expected_query_model(a, self.samples));
        self.epsilon = epsilon;
        self.chebyshev_bound = epsilon.map(|e| chebyshev_bound(self.samples, e, 0.25));
        self.seed = seed;
        self
    }
}

/// Draws `samples` scenarios and brute-forces each one.
pub fn estimate_mu<R: Rng + ?Sized>(
    oracle: &Oracle,
    dist: &ScenarioDistribution,
    samples: usize,
    order: SearchOrder,
    rng: &mut R,
) -> Result<ClassicalRunReport> {
    if samples == 0 {
        return input("at least one sample is required");
    }
    if oracle.scenario_bits() != dist.scenario_bits() {
        return input(format!(
            "oracle has {} scenario bits, distribution has {}",
            oracle.scenario_bits(),
            dist.scenario_bits()
        ));
    }
    let mut hits = 0;
    let mut queries = 0;
    for _ in 0..samples {
        let xi = dist.sample(rng);
        let outcome = search_scenario(oracle, xi, order, rng)?;
        hits += outcome.found as usize;
        queries += outcome.queries;
    }
    let mu_tilde = hits as f64 / samples as f64;
    Ok(ClassicalRunReport {
        samples,
        order,
        hits,
        mu_tilde,
        plug_in_variance: mu_tilde * (1.0 - mu_tilde),
        queries_actual: queries,
        queries_model: None,
        epsilon: None,
        chebyshev_bound: None,
        seed: None,
    })
}

/// Pr[|μ̃ − μ| ≥ ε] ≤ σ²/(Nε²), capped at 1.
pub fn chebyshev_bound(samples: usize, epsilon: f64, variance: f64) -> f64 {
    (variance / (samples as f64 * epsilon * epsilon)).min(1.0)
}

/// Samples needed for the Chebyshev bound to reach `failure` with σ² ≤ 1/4.
pub fn chebyshev_samples(epsilon: f64, failure: f64) -> usize {
    (0.25 / (failure * epsilon * epsilon)).ceil() as usize
}

/// N·(μ·E[1/λ | λ > 0] + (1 − μ)·2^c): the reference query count, with an
/// idealized searcher that pays 1/λ on satisfiable scenarios and exactly 2^c
/// to rule out an unsatisfiable one.
pub fn expected_query_model(analysis: &ScenarioAnalysis, samples: usize) -> f64 {
    let mu = analysis.mu();
    let satisfiable = analysis.inv_lambda_expectation().map_or(0.0, |e| mu * e);
    samples as f64 * (satisfiable + (1.0 - mu) * analysis.decision_count() as f64)
}

/// The true expected number of probes per sample for a given search order.
///
/// `Sequential` depends on where the completing strings sit, so it needs the
/// oracle; the other two depend only on |Φ*_ξ|:
/// - random permutation: (2^c + 1)/(k + 1) if k > 0, else 2^c;
/// - with replacement: 2^c/k if k > 0, else the coupon-collector time 2^c·H_{2^c}.
pub fn expected_queries_per_sample(analysis: &ScenarioAnalysis, order: SearchOrder, oracle: Option<&Oracle>) -> Option<f64> {
    let n = analysis.decision_count();
    let nf = n as f64;
    let marks = oracle.map(Oracle::mark_table);
    let per_scenario = |xi: usize| -> Option<f64> {
        let k = analysis.completing_count(xi);
        Some(match order {
            SearchOrder::RandomPermutation if k > 0 => (nf + 1.0) / (k as f64 + 1.0),
            SearchOrder::RandomPermutation => nf,
            SearchOrder::WithReplacement if k > 0 => nf / k as f64,
            SearchOrder::WithReplacement => nf * (1..=n).map(|i| 1.0 / i as f64).sum::<f64>(),
            SearchOrder::Sequential => {
                let mark = marks.as_ref()?;
                (0..n).position(|phi| mark.is_marked(xi, phi)).map_or(nf, |p| p as f64 + 1.0)
            }
        })
    };
    let mut total = 0.0;
    for xi in 0..analysis.scenario_count() {
        let p = analysis.probability(xi);
        if p > 0.0 {
            total += p * per_scenario(xi)?;
        }
    }
    Some(total)
}

/// Aggregate of many independent Monte-Carlo runs.
#[derive(Debug, Clone, Serialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub samples: usize,
    pub order: SearchOrder,
    pub seed: u64,
    pub mu_tildes: Vec<f64>,
    pub queries: Vec<u64>,
    pub mean_mu_tilde: f64,
    pub mean_queries: f64,
}

impl TrialSummary {
    /// Fraction of trials with |μ̃ − μ| ≥ ε.
    pub fn failure_rate(&self, mu: f64, epsilon: f64) -> f64 {
        let failures = self.mu_tildes.iter().filter(|&&m| (m - mu).abs() >= epsilon).count();
        failures as f64 / self.trials as f64
    }
}

/// Runs `trials` independent estimates in parallel.
///
/// Trial t uses ChaCha8 seeded with `seed` on stream t, so results do not
/// depend on the thread count. Each trial evaluates a private copy of the
/// oracle; the total is charged to `oracle` at the end.
pub fn run_trials(
    oracle: &Oracle,
    dist: &ScenarioDistribution,
    samples: usize,
    trials: usize,
    order: SearchOrder,
    seed: u64,
) -> Result<TrialSummary> {
    if trials == 0 {
        return input("at least one trial is required");
    }
    let reports = (0..trials)
        .into_par_iter()
        .map(|t| {
            let local = oracle.clone();
            local.reset_calls();
            let mut rng = trial_rng(seed, t as u64);
            estimate_mu(&local, dist, samples, order, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let mu_tildes: Vec<f64> = reports.iter().map(|r| r.mu_tilde).collect();
    let queries: Vec<u64> = reports.iter().map(|r| r.queries_actual).collect();
    let total_queries: u64 = queries.iter().sum();
    oracle.record_calls(total_queries);
    Ok(TrialSummary {
        trials,
        samples,
        order,
        seed,
        mean_mu_tilde: mu_tildes.iter().sum::<f64>() / trials as f64,
        mean_queries: total_queries as f64 / trials as f64,
        mu_tildes,
        queries,
    })
}

/// The generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}
