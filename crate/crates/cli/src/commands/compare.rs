//! Query-complexity comparison between the classical baseline and the
//! quantum estimator: model counts on an ε grid, the single-solution scaling
//! sweep over c, and measured counts where the statevector fits.

use rayon::prelude::*;
use reqo::classical::{estimate_mu, expected_queries_per_sample, expected_query_model, trial_rng, SearchOrder};
use reqo::estimator::{estimate_with_analysis, oracle_call_model, EstimateOptions, Parameters};
use reqo::schedule::{min_depth_with_base, qae_parameters, LogBase};
use reqo::statevector::{QpeMode, MAX_QUBITS};
use reqo::{analyze, Oracle, ScenarioAnalysis, ScenarioDistribution};
use serde::Serialize;

use crate::error::CliResult;
use crate::output::{CommandOutput, Meta, RunContext};

/// Largest total register the comparison will simulate for measured counts.
const MEASURED_QUBITS: u32 = 22;

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    pub section: &'static str,
    pub scenario_bits: u32,
    pub decision_bits: u32,
    pub epsilon: f64,
    pub mu: f64,
    pub inv_lambda_expectation: Option<f64>,
    pub lambda_t: f64,
    pub delta: f64,
    #[serde(rename = "L_t")]
    pub depth_t: usize,
    pub m: u32,
    #[serde(rename = "M")]
    pub grid: usize,
    /// (μ·E[1/λ] + (1 − μ)·2^c)/ε².
    pub classical_model: f64,
    /// (L_t + 1)(2M − 1).
    pub quantum_model: u64,
    /// L_t(2M − 1), what the simulated circuit is charged.
    pub quantum_ledger: u64,
    pub advantage_ratio: f64,
    pub classical_samples: Option<usize>,
    pub classical_measured: Option<u64>,
    pub mu_tilde: Option<f64>,
    pub quantum_measured: Option<u64>,
    pub a_tilde: Option<f64>,
    pub software: &'static str,
    pub config_sha256: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Slopes {
    pub quantum_model: Option<f64>,
    pub classical_model: Option<f64>,
    pub quantum_measured: Option<f64>,
    pub classical_measured: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchedBudget {
    pub epsilon: f64,
    pub quantum_calls: u64,
    pub a_tilde: f64,
    pub quantum_error: f64,
    pub classical_samples: usize,
    pub classical_calls: u64,
    pub mu_tilde: f64,
    pub classical_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareResult {
    pub mu: f64,
    pub rows: usize,
    /// log-log slopes against 2^c over the single-solution rows.
    pub single_solution_slopes: Slopes,
    pub matched_budget: Option<MatchedBudget>,
}

/// Settings shared by every comparison row.
#[derive(Debug, Clone, Copy)]
pub struct RowSettings {
    pub log_base: LogBase,
    pub order: SearchOrder,
    pub measure: bool,
    pub seed: u64,
    pub stream: u64,
}

/// Samples the classical estimator needs at accuracy ε under the model, 1/ε².
pub fn classical_samples(epsilon: f64) -> usize {
    (1.0 / (epsilon * epsilon)).ceil() as usize
}

fn fits(oracle: &Oracle, m: u32) -> bool {
    let qubits = oracle.scenario_bits() + oracle.decision_bits() + 1 + m;
    qubits <= MEASURED_QUBITS.min(MAX_QUBITS)
}

/// One comparison row; measured counts only when `settings.measure` is set
/// and the register fits.
#[allow(clippy::too_many_arguments)]
pub fn compare_row(
    section: &'static str,
    oracle: &Oracle,
    dist: &ScenarioDistribution,
    analysis: &ScenarioAnalysis,
    epsilon: f64,
    lambda_t: Option<f64>,
    settings: RowSettings,
    meta: &Meta,
) -> CliResult<CompareRow> {
    let q = qae_parameters(epsilon)?;
    let lambda_t = lambda_t.unwrap_or(1.0 / oracle.decision_count() as f64);
    let depth_t = min_depth_with_base(lambda_t, q.delta, settings.log_base)?;
    let classical_model = expected_query_model(analysis, 1) / (epsilon * epsilon);
    let quantum_model = oracle_call_model(depth_t, q.grid);
    let mut row = CompareRow {
        section,
        scenario_bits: oracle.scenario_bits(),
        decision_bits: oracle.decision_bits(),
        epsilon,
        mu: analysis.mu(),
        inv_lambda_expectation: analysis.inv_lambda_expectation(),
        lambda_t,
        delta: q.delta,
        depth_t,
        m: q.m,
        grid: q.grid,
        classical_model,
        quantum_model,
        quantum_ledger: depth_t as u64 * (2 * q.grid as u64 - 1),
        advantage_ratio: classical_model / quantum_model as f64,
        classical_samples: None,
        classical_measured: None,
        mu_tilde: None,
        quantum_measured: None,
        a_tilde: None,
        software: meta.software,
        config_sha256: meta.config_sha256.clone(),
        seed: meta.seed,
    };
    if settings.measure && fits(oracle, q.m) {
        let options = EstimateOptions {
            parameters: Parameters::Target { epsilon, lambda_t: Some(lambda_t) },
            log_base: settings.log_base,
            // same circuit and ledger as the controlled form, far fewer passes
            qpe_mode: QpeMode::PowerSequence,
        };
        let report = estimate_with_analysis(oracle, dist, analysis, &options)?;
        row.quantum_measured = Some(report.oracle_calls_actual);
        row.a_tilde = Some(report.a_tilde_mode);
        let samples = classical_samples(epsilon);
        let local = oracle.clone();
        let run = estimate_mu(&local, dist, samples, settings.order, &mut trial_rng(settings.seed, settings.stream))?;
        row.classical_samples = Some(samples);
        row.classical_measured = Some(run.queries_actual);
        row.mu_tilde = Some(run.mu_tilde);
    }
    Ok(row)
}

/// Ordinary least-squares slope of ln y against ln x.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Rows for planted oracles with exactly one completing string per
/// scenario (λ = 2^-c), one per c, at fixed ε.
pub fn single_solution_rows(
    scenario_bits: u32,
    decision_bits: &[u32],
    epsilon: f64,
    measured_max: u32,
    settings: RowSettings,
    meta: &Meta,
) -> CliResult<Vec<CompareRow>> {
    decision_bits
        .par_iter()
        .enumerate()
        .map(|(i, &c)| {
            let oracle = Oracle::planted_exact(scenario_bits, c, settings.seed.wrapping_add(c as u64), 1)?;
            let dist = ScenarioDistribution::uniform(scenario_bits)?;
            let analysis = analyze(&oracle, &dist)?;
            let s = RowSettings { measure: settings.measure && c <= measured_max, stream: settings.stream + i as u64, ..settings };
            compare_row("single_solution", &oracle, &dist, &analysis, epsilon, None, s, meta)
        })
        .collect()
}

pub fn slopes(rows: &[CompareRow]) -> Slopes {
    let x = |r: &CompareRow| (1u64 << r.decision_bits) as f64;
    let series = |f: &dyn Fn(&CompareRow) -> Option<f64>| -> Option<f64> {
        let pts: Vec<(f64, f64)> = rows.iter().filter_map(|r| f(r).map(|y| (x(r), y))).collect();
        log_log_slope(&pts)
    };
    Slopes {
        quantum_model: series(&|r| Some(r.quantum_model as f64)),
        classical_model: series(&|r| Some(r.classical_model)),
        quantum_measured: series(&|r| r.quantum_measured.map(|q| q as f64)),
        classical_measured: series(&|r| r.classical_measured.map(|q| q as f64)),
    }
}

pub fn run(ctx: &RunContext) -> CliResult<CommandOutput> {
    let cfg = ctx.config()?;
    let c = &cfg.config;
    let spec = &c.compare;
    let oracle = cfg.build_oracle()?;
    let dist = cfg.build_distribution(oracle.scenario_bits())?;
    let analysis = analyze(&oracle, &dist)?;
    let meta = ctx.meta("compare");
    let base = RowSettings { log_base: c.log_base, order: c.search_order, measure: true, seed: ctx.seed, stream: 0 };
    let measure_configured = oracle.decision_bits() <= spec.measured_max_decision_bits;

    let mut rows = spec
        .epsilons
        .par_iter()
        .enumerate()
        .map(|(i, &epsilon)| {
            let s = RowSettings { measure: measure_configured, stream: i as u64, ..base };
            compare_row("epsilon_grid", &oracle, &dist, &analysis, epsilon, c.lambda_t, s, &meta)
        })
        .collect::<CliResult<Vec<_>>>()?;
    let scaling = single_solution_rows(
        spec.scenario_bits,
        &spec.decision_bits,
        spec.epsilon,
        spec.measured_max_decision_bits,
        RowSettings { stream: spec.epsilons.len() as u64, ..base },
        &meta,
    )?;
    let single_solution_slopes = slopes(&scaling);
    rows.extend(scaling);

    let matched_budget = if measure_configured {
        matched_budget(&oracle, &dist, &analysis, spec.epsilon, c.lambda_t, base, rows.len() as u64)?
    } else {
        None
    };
    let result = CompareResult { mu: analysis.mu(), rows: rows.len(), single_solution_slopes, matched_budget };
    let s = &result.single_solution_slopes;
    let text = format!(
        "compare: {} rows; single-solution slopes vs 2^c: quantum model {}, classical model {}",
        rows.len(),
        s.quantum_model.map_or("n/a".into(), |v| format!("{v:.4}")),
        s.classical_model.map_or("n/a".into(), |v| format!("{v:.4}")),
    );
    Ok(CommandOutput::new(text)
        .with_file("compare.csv", ctx.csv(&rows)?)
        .with_file("compare.json", ctx.json("compare", &result)?))
}

/// Runs the quantum estimator at ε, then the classical one with a sample
/// count whose expected cost matches the quantum ledger.
fn matched_budget(
    oracle: &Oracle,
    dist: &ScenarioDistribution,
    analysis: &ScenarioAnalysis,
    epsilon: f64,
    lambda_t: Option<f64>,
    settings: RowSettings,
    stream: u64,
) -> CliResult<Option<MatchedBudget>> {
    let q = qae_parameters(epsilon)?;
    if !fits(oracle, q.m) {
        return Ok(None);
    }
    let options = EstimateOptions {
        parameters: Parameters::Target { epsilon, lambda_t },
        log_base: settings.log_base,
        qpe_mode: QpeMode::PowerSequence,
    };
    let report = estimate_with_analysis(oracle, dist, analysis, &options)?;
    let per_sample = expected_queries_per_sample(analysis, settings.order, Some(oracle)).unwrap_or(1.0).max(1.0);
    let samples = ((report.oracle_calls_actual as f64 / per_sample).round() as usize).max(1);
    let local = oracle.clone();
    let run = estimate_mu(&local, dist, samples, settings.order, &mut trial_rng(settings.seed, stream))?;
    Ok(Some(MatchedBudget {
        epsilon,
        quantum_calls: report.oracle_calls_actual,
        a_tilde: report.a_tilde_mode,
        quantum_error: (report.a_tilde_mode - analysis.mu()).abs(),
        classical_samples: samples,
        classical_calls: run.queries_actual,
        mu_tilde: run.mu_tilde,
        classical_error: (run.mu_tilde - analysis.mu()).abs(),
    }))
}
