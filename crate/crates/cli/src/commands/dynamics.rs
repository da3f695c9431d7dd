//! Success-probability dynamics over a sweep of search depths.

use rayon::prelude::*;
use reqo::estimator::{good_state_probability, simulated_success};
use reqo::schedule::{min_depth_with_base, success_probability};
use reqo::{analyze, AngleSchedule};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{CommandOutput, RunContext};

/// Allowed gap between the statevector and the closed form.
const AGREEMENT_TOL: f64 = 1e-6;

/// One CSV row. Per-scenario rows fill `xi`, `lambda_xi` and the two P
/// columns; the per-depth aggregate row leaves them empty.
#[derive(Debug, Clone, Serialize)]
pub struct DynamicsRow {
    pub l: usize,
    #[serde(rename = "L")]
    pub depth: usize,
    pub xi: Option<usize>,
    pub lambda_xi: Option<f64>,
    #[serde(rename = "P_analytic")]
    pub p_analytic: Option<f64>,
    #[serde(rename = "P_statevector")]
    pub p_statevector: Option<f64>,
    pub a: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    #[serde(rename = "L_t_marker")]
    pub depth_t_marker: u8,
    pub software: &'static str,
    pub config_sha256: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DynamicsSummary {
    pub delta: f64,
    pub floor: f64,
    pub lambda_t: f64,
    pub epsilon_t: f64,
    pub mu: f64,
    #[serde(rename = "L_t")]
    pub depth_t: usize,
    pub window: [f64; 2],
    /// a at L_t, from the statevector with the mark ancilla.
    pub a_at_depth_t: f64,
    pub a_in_window_at_depth_t: bool,
    pub l_range: (usize, usize),
    /// (λ, p(λ)) including λ = 0.
    pub histogram: Vec<(f64, f64)>,
    /// Per scenario: the smallest odd L reaching the 1 − δ² floor for its own
    /// λ_ξ; `None` for unsatisfiable scenarios.
    pub scenario_min_depth: Vec<Option<usize>>,
    pub rows: usize,
}

pub fn run(ctx: &RunContext) -> CliResult<CommandOutput> {
    let cfg = ctx.config()?;
    let c = &cfg.config;
    let oracle = cfg.build_oracle()?;
    let dist = cfg.build_distribution(oracle.scenario_bits())?;
    let analysis = analyze(&oracle, &dist)?;
    let delta = cfg.delta()?;
    let lambda_t = c.lambda_t.unwrap_or(1.0 / oracle.decision_count() as f64);
    let epsilon_t = analysis.epsilon_t(lambda_t)?;
    let depth_t = min_depth_with_base(lambda_t, delta, c.log_base)?;
    let mu = analysis.mu();
    let window = [(mu - epsilon_t) * (1.0 - delta * delta), mu];
    let (lo, hi) = c.l_range;
    if lo > hi {
        return Err(CliError::Config(format!("l_range ({lo}, {hi}) is empty")));
    }

    let meta = ctx.meta("dynamics");
    let lambdas = analysis.lambdas();
    let sweep = (lo..=hi)
        .into_par_iter()
        .map(|l| -> CliResult<Vec<DynamicsRow>> {
            let schedule = AngleSchedule::new(l, delta)?;
            let depth = schedule.depth();
            let simulated = simulated_success(&oracle, &dist, &schedule)?;
            let mut a = 0.0;
            let mut rows = Vec::with_capacity(lambdas.len() + 1);
            for (xi, (&lambda, sim)) in lambdas.iter().zip(&simulated).enumerate() {
                let analytic = success_probability(depth, delta, lambda)?;
                if let Some(p) = *sim {
                    if (p - analytic).abs() > AGREEMENT_TOL {
                        return Err(CliError::Consistency(format!(
                            "l={l}, ξ={xi}: statevector {p} vs closed form {analytic}"
                        )));
                    }
                    a += dist.probability(xi) * p;
                }
                rows.push(DynamicsRow {
                    l,
                    depth,
                    xi: Some(xi),
                    lambda_xi: Some(lambda),
                    p_analytic: Some(analytic),
                    p_statevector: *sim,
                    a: 0.0,
                    window_lo: window[0],
                    window_hi: window[1],
                    depth_t_marker: (depth == depth_t) as u8,
                    software: meta.software,
                    config_sha256: meta.config_sha256.clone(),
                    seed: meta.seed,
                });
            }
            for row in &mut rows {
                row.a = a;
            }
            rows.push(DynamicsRow {
                xi: None,
                lambda_xi: None,
                p_analytic: None,
                p_statevector: None,
                ..rows[0].clone()
            });
            Ok(rows)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let rows: Vec<DynamicsRow> = sweep.into_iter().flatten().collect();

    let a_at_depth_t = good_state_probability(&oracle, &dist, &AngleSchedule::for_depth(depth_t, delta)?)?;
    let scenario_min_depth = lambdas
        .iter()
        .map(|&lambda| (lambda > 0.0).then(|| min_depth_with_base(lambda, delta, c.log_base)).transpose())
        .collect::<Result<Vec<_>, _>>()?;
    let summary = DynamicsSummary {
        delta,
        floor: 1.0 - delta * delta,
        lambda_t,
        epsilon_t,
        mu,
        depth_t,
        window,
        a_at_depth_t,
        a_in_window_at_depth_t: a_at_depth_t >= window[0] - AGREEMENT_TOL && a_at_depth_t <= window[1] + AGREEMENT_TOL,
        l_range: (lo, hi),
        histogram: analysis.lambda_histogram(),
        scenario_min_depth,
        rows: rows.len(),
    };
    let text = format!(
        "dynamics: μ = {mu:.6}, λ_t = {lambda_t}, ε_t = {epsilon_t}, L_t = {depth_t}, a(L_t) = {a_at_depth_t:.6} in [{:.6}, {:.6}]: {}",
        window[0], window[1], summary.a_in_window_at_depth_t
    );
    Ok(CommandOutput::new(text)
        .with_file("dynamics.csv", ctx.csv(&rows)?)
        .with_file("dynamics.json", ctx.json("dynamics", &summary)?))
}
