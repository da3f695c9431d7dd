//! Quantum estimation driver: picks (λ_t, δ, L_t, M), runs fixed-point
//! search plus amplitude estimation on the statevector engine, and checks
//! the resulting estimate against the analytic error bounds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::analysis::{analyze, ScenarioAnalysis};
use crate::distribution::ScenarioDistribution;
use crate::error::{input, Error, Result};
use crate::oracle::Oracle;
use crate::schedule::{min_depth_with_base, qae_parameters, success_probability, AngleSchedule, LogBase};
use crate::statevector::{scenario_success, Engine, QpeMode};

/// 8/π², the success probability guaranteed by phase-estimation QAE.
pub const QAE_SUCCESS_FLOOR: f64 = 8.0 / (PI * PI);

/// Tolerance between the analytic and simulated good-state probability.
pub const AGREEMENT_TOL: f64 = 1e-6;

/// 2π√(a(1−a))/M + π²/M².
pub fn qae_error_bound(a: f64, grid: usize) -> f64 {
    let m = grid as f64;
    2.0 * PI * (a * (1.0 - a)).max(0.0).sqrt() / m + PI * PI / (m * m)
}

/// ε ≤ ε_t + δ²μ − δ²ε_t + π/M + π²/M².
pub fn theorem1_epsilon(epsilon_t: f64, delta: f64, mu: f64, grid: f64) -> f64 {
    let d2 = delta * delta;
    epsilon_t + d2 * mu - d2 * epsilon_t + PI / grid + PI * PI / (grid * grid)
}

/// (L + 1)(2M − 1).
pub fn oracle_call_model(depth: usize, grid: usize) -> u64 {
    (depth as u64 + 1) * (2 * grid as u64 - 1)
}

/// a = Σ_ξ p(ξ)·P_{L,ξ} from the closed form.
pub fn analytic_good_probability(analysis: &ScenarioAnalysis, schedule: &AngleSchedule) -> Result<f64> {
    let mut a = 0.0;
    for xi in 0..analysis.scenario_count() {
        let p = analysis.probability(xi);
        if p > 0.0 {
            a += p * success_probability(schedule.depth(), schedule.delta(), analysis.lambda(xi))?;
        }
    }
    Ok(a)
}

/// The probability a of reading 1 on the mark ancilla after 𝒜 = U_f·𝒮_L·V.
///
/// Computed both from the statevector and from the closed form; returns the
/// statevector value and fails if they disagree by more than 1e-6.
pub fn good_state_probability(oracle: &Oracle, dist: &ScenarioDistribution, schedule: &AngleSchedule) -> Result<f64> {
    let analysis = analyze(oracle, dist)?;
    good_state_probability_with(oracle, dist, &analysis, schedule)
}

fn good_state_probability_with(
    oracle: &Oracle,
    dist: &ScenarioDistribution,
    analysis: &ScenarioAnalysis,
    schedule: &AngleSchedule,
) -> Result<f64> {
    let mut engine = Engine::new(oracle, dist)?.quiet();
    let state = engine.prepare_marked(schedule)?;
    let simulated = state.ancilla_one_probability()?;
    let analytic = analytic_good_probability(analysis, schedule)?;
    if (simulated - analytic).abs() > AGREEMENT_TOL {
        return Err(Error::Consistency(format!(
            "good-state probability: statevector {simulated} vs closed form {analytic}"
        )));
    }
    Ok(simulated)
}

/// Per-scenario success P_{L,ξ} from the statevector; `None` where p(ξ) = 0.
pub fn simulated_success(
    oracle: &Oracle,
    dist: &ScenarioDistribution,
    schedule: &AngleSchedule,
) -> Result<Vec<Option<f64>>> {
    let mut engine = Engine::new(oracle, dist)?.quiet();
    let mut state = engine.prepare_initial(false)?;
    engine.run_search(&mut state, schedule)?;
    Ok(scenario_success(&state, engine.marks(), dist))
}

/// How the algorithm parameters are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Parameters {
    /// δ = ε/2, M from ε, λ_t = 2^-c unless given.
    Target { epsilon: f64, lambda_t: Option<f64> },
    /// Explicit δ and m. λ_t defaults to 2^-c.
    Explicit { delta: f64, m: u32, lambda_t: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub parameters: Parameters,
    #[serde(default)]
    pub log_base: LogBase,
    #[serde(default)]
    pub qpe_mode: QpeMode,
}

impl EstimateOptions {
    pub fn explicit(delta: f64, m: u32, lambda_t: Option<f64>) -> Self {
        Self { parameters: Parameters::Explicit { delta, m, lambda_t }, log_base: LogBase::Natural, qpe_mode: QpeMode::Controlled }
    }

    pub fn target(epsilon: f64) -> Self {
        Self {
            parameters: Parameters::Target { epsilon, lambda_t: None },
            log_base: LogBase::Natural,
            qpe_mode: QpeMode::Controlled,
        }
    }

    pub fn with_qpe_mode(mut self, mode: QpeMode) -> Self {
        self.qpe_mode = mode;
        self
    }
}

/// Everything one quantum estimation run produces.
#[derive(Debug, Clone, Serialize)]
pub struct QuantumRunReport {
    pub lambda_t: f64,
    pub delta: f64,
    /// L_t, odd.
    pub depth: usize,
    pub iterations: usize,
    pub m: u32,
    pub grid: usize,
    pub mu: f64,
    pub epsilon_t: f64,
    /// Σ p(ξ)·P_{L_t,ξ} from the statevector.
    pub a_exact: f64,
    pub a_analytic: f64,
    /// [(μ − ε_t)(1 − δ²), μ].
    pub a_window: [f64; 2],
    pub outcome_distribution: Vec<f64>,
    pub mode: usize,
    pub a_tilde_mode: f64,
    /// 2π√(a(1−a))/M + π²/M² at a = a_exact.
    pub qae_bound: f64,
    /// Pr[|ã − a| ≤ qae_bound].
    pub success_mass: f64,
    /// ε_t + δ²μ − δ²ε_t + π/M + π²/M².
    pub epsilon_bound: f64,
    /// Pr[|ã − μ| ≤ epsilon_bound].
    pub theorem1_mass: f64,
    /// [(μ−ε_t)(1−δ²) − π/M − π²/M², μ + π/M + π²/M²].
    pub asymmetric_window: [f64; 2],
    pub asymmetric_mass: f64,
    pub mode_error: f64,
    pub oracle_calls_actual: u64,
    pub oracle_calls_model: u64,
    pub norm_drift: f64,
}

/// Runs the full pipeline: analysis, parameter choice, fixed-point search,
/// phase estimation and bound checks.
pub fn estimate(oracle: &Oracle, dist: &ScenarioDistribution, options: &EstimateOptions) -> Result<QuantumRunReport> {
    let analysis = analyze(oracle, dist)?;
    estimate_with_analysis(oracle, dist, &analysis, options)
}

pub fn estimate_with_analysis(
    oracle: &Oracle,
    dist: &ScenarioDistribution,
    analysis: &ScenarioAnalysis,
    options: &EstimateOptions,
) -> Result<QuantumRunReport> {
    let floor_lambda = 1.0 / analysis.decision_count() as f64;
    let (delta, m, lambda_t) = match options.parameters {
        Parameters::Target { epsilon, lambda_t } => {
            let q = qae_parameters(epsilon)?;
            (q.delta, q.m, lambda_t.unwrap_or(floor_lambda))
        }
        Parameters::Explicit { delta, m, lambda_t } => (delta, m, lambda_t.unwrap_or(floor_lambda)),
    };
    if m == 0 {
        return input("m must be at least 1");
    }
    let epsilon_t = analysis.epsilon_t(lambda_t)?;
    let depth = min_depth_with_base(lambda_t, delta, options.log_base)?;
    let schedule = AngleSchedule::for_depth(depth, delta)?;
    let mu = analysis.mu();

    let a_exact = good_state_probability_with(oracle, dist, analysis, &schedule)?;
    let a_analytic = analytic_good_probability(analysis, &schedule)?;
    let a_window = [(mu - epsilon_t) * (1.0 - delta * delta), mu];
    if a_exact < a_window[0] - 1e-9 || a_exact > a_window[1] + 1e-9 {
        return Err(Error::Consistency(format!("a = {a_exact} outside [{}, {}]", a_window[0], a_window[1])));
    }

    let mut engine = Engine::new(oracle, dist)?.quiet();
    let pe = engine.phase_estimation(&schedule, m, options.qpe_mode)?;
    let grid = pe.grid;
    let mode = pe.mode();
    let a_tilde_mode = pe.estimate(mode);
    let qae_bound = qae_error_bound(a_exact, grid);
    let success_mass = pe.mass_within(a_exact, qae_bound);
    if success_mass < QAE_SUCCESS_FLOOR - 1e-9 {
        return Err(Error::Consistency(format!(
            "QAE mass {success_mass} within the bound is below 8/π²"
        )));
    }
    let g = grid as f64;
    let epsilon_bound = theorem1_epsilon(epsilon_t, delta, mu, g);
    let theorem1_mass = pe.mass_within(mu, epsilon_bound);
    let slack = PI / g + PI * PI / (g * g);
    let asymmetric_window = [a_window[0] - slack, mu + slack];
    let asymmetric_mass = pe
        .distribution
        .iter()
        .enumerate()
        .filter(|&(d, _)| {
            let est = pe.estimate(d);
            est >= asymmetric_window[0] && est <= asymmetric_window[1]
        })
        .map(|(_, &p)| p)
        .sum();

    Ok(QuantumRunReport {
        lambda_t,
        delta,
        depth,
        iterations: schedule.iterations(),
        m,
        grid,
        mu,
        epsilon_t,
        a_exact,
        a_analytic,
        a_window,
        outcome_distribution: pe.distribution.clone(),
        mode,
        a_tilde_mode,
        qae_bound,
        success_mass,
        epsilon_bound,
        theorem1_mass,
        asymmetric_window,
        asymmetric_mass,
        mode_error: (a_tilde_mode - mu).abs(),
        oracle_calls_actual: pe.oracle_calls,
        oracle_calls_model: oracle_call_model(depth, grid),
        norm_drift: pe.norm_drift,
    })
}
