//! Monte-Carlo baseline with repeated seeded trials.

use reqo::analyze;
use reqo::classical::{
    chebyshev_bound, estimate_mu, expected_queries_per_sample, expected_query_model, run_trials, trial_rng,
    ClassicalRunReport, SearchOrder,
};
use serde::Serialize;

use crate::error::CliResult;
use crate::output::{CommandOutput, RunContext};

#[derive(Debug, Clone, Serialize)]
pub struct TrialStatistics {
    pub trials: usize,
    pub mean_mu_tilde: f64,
    pub std_mu_tilde: f64,
    /// Fraction of trials with |μ̃ − μ| ≥ ε.
    pub failure_rate: f64,
    pub chebyshev_bound: f64,
    pub failure_rate_within_bound: bool,
    pub mean_queries: f64,
    /// N·(μ·E[1/λ] + (1 − μ)·2^c).
    pub queries_model: f64,
    /// mean_queries / queries_model − 1.
    pub relative_gap_to_model: f64,
    /// The exact expectation for the configured search order.
    pub queries_expected_for_order: Option<f64>,
    pub relative_gap_to_order_expectation: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicalResult {
    pub mu: f64,
    pub inv_lambda_expectation: Option<f64>,
    pub order: SearchOrder,
    /// Trial 0 in full.
    pub run: ClassicalRunReport,
    pub trials: TrialStatistics,
}

pub fn run(ctx: &RunContext) -> CliResult<CommandOutput> {
    let cfg = ctx.config()?;
    let c = &cfg.config;
    let oracle = cfg.build_oracle()?;
    let dist = cfg.build_distribution(oracle.scenario_bits())?;
    let analysis = analyze(&oracle, &dist)?;
    let epsilon = c.classical_epsilon;
    let samples = c.samples;

    let first = estimate_mu(&oracle.clone(), &dist, samples, c.search_order, &mut trial_rng(ctx.seed, 0))?
        .annotate(Some(&analysis), Some(epsilon), Some(ctx.seed));
    let summary = run_trials(&oracle, &dist, samples, c.trials, c.search_order, ctx.seed)?;

    let mu = analysis.mu();
    let failure_rate = summary.failure_rate(mu, epsilon);
    let bound = chebyshev_bound(samples, epsilon, 0.25);
    let variance =
        summary.mu_tildes.iter().map(|m| (m - summary.mean_mu_tilde).powi(2)).sum::<f64>() / summary.trials as f64;
    let model = expected_query_model(&analysis, samples);
    let expected = expected_queries_per_sample(&analysis, c.search_order, Some(&oracle)).map(|q| q * samples as f64);
    let trials = TrialStatistics {
        trials: summary.trials,
        mean_mu_tilde: summary.mean_mu_tilde,
        std_mu_tilde: variance.sqrt(),
        failure_rate,
        chebyshev_bound: bound,
        failure_rate_within_bound: failure_rate <= bound,
        mean_queries: summary.mean_queries,
        queries_model: model,
        relative_gap_to_model: summary.mean_queries / model - 1.0,
        queries_expected_for_order: expected,
        relative_gap_to_order_expectation: expected.map(|e| summary.mean_queries / e - 1.0),
    };
    let text = format!(
        "classical: μ = {mu:.6}, trial-0 μ̃ = {:.6}; {} trials: failure rate {:.4} (bound {:.4}), mean queries {:.1} vs model {:.1} ({:+.2}%)",
        first.mu_tilde,
        trials.trials,
        trials.failure_rate,
        trials.chebyshev_bound,
        trials.mean_queries,
        trials.queries_model,
        100.0 * trials.relative_gap_to_model
    );
    let result = ClassicalResult {
        mu,
        inv_lambda_expectation: analysis.inv_lambda_expectation(),
        order: c.search_order,
        run: first,
        trials,
    };
    Ok(CommandOutput::new(text).with_file("classical.json", ctx.json("classical", &result)?))
}
