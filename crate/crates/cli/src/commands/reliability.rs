//! Two-terminal network reliability: exact enumeration against both
//! estimators.

use reqo::classical::{estimate_mu, trial_rng, ClassicalRunReport};
use reqo::estimator::{estimate_with_analysis, QuantumRunReport};
use reqo::{analyze, Graph, Oracle};
use serde::Serialize;

use crate::commands::qae::{estimate_options, BoundChecks};
use crate::error::{CliError, CliResult};
use crate::output::{CommandOutput, RunContext};

/// Largest graph the command accepts; the statevector has 2·|E| + 1 + m qubits.
pub const MAX_RELIABILITY_EDGES: usize = 6;

const DEFAULT_DELTA: f64 = 0.05;
const DEFAULT_M: u32 = 6;

#[derive(Debug, Clone, Serialize)]
pub struct ReliabilityResult {
    pub graph: Graph,
    /// Σ_ξ p(ξ)·[terminals connected by the surviving edges ξ].
    pub exact_reliability: f64,
    pub mu: f64,
    pub mu_matches_enumeration: bool,
    pub quantum: QuantumRunReport,
    pub quantum_checks: BoundChecks,
    pub classical: ClassicalRunReport,
    pub classical_error: f64,
}

pub fn run(ctx: &RunContext) -> CliResult<CommandOutput> {
    let cfg = ctx.config()?;
    let c = &cfg.config;
    let graph = cfg
        .graph()?
        .ok_or_else(|| CliError::Config("`reliability` needs an oracle of kind `reliability`".into()))?;
    if graph.edge_count() > MAX_RELIABILITY_EDGES {
        return Err(CliError::Capacity(format!(
            "graph has {} edges, `reliability` accepts at most {MAX_RELIABILITY_EDGES}",
            graph.edge_count()
        )));
    }
    let oracle = Oracle::reliability(graph.clone())?;
    let dist = cfg.build_distribution(oracle.scenario_bits())?;
    let exact_reliability: f64 = (0..dist.len())
        .filter(|&xi| graph.terminals_connected(xi as u64))
        .map(|xi| dist.probability(xi))
        .sum();
    let analysis = analyze(&oracle, &dist)?;
    let mu = analysis.mu();
    let mu_matches_enumeration = (mu - exact_reliability).abs() < 1e-12;
    if !mu_matches_enumeration {
        return Err(CliError::Consistency(format!("μ = {mu} but enumeration gives {exact_reliability}")));
    }

    let options = estimate_options(cfg, Some(DEFAULT_DELTA), Some(DEFAULT_M))?;
    let quantum = estimate_with_analysis(&oracle, &dist, &analysis, &options)?;
    let classical = estimate_mu(&oracle, &dist, c.samples, c.search_order, &mut trial_rng(ctx.seed, 0))?
        .annotate(Some(&analysis), Some(c.classical_epsilon), Some(ctx.seed));
    let result = ReliabilityResult {
        graph,
        exact_reliability,
        mu,
        mu_matches_enumeration,
        quantum_checks: BoundChecks::of(&quantum),
        classical_error: (classical.mu_tilde - mu).abs(),
        quantum,
        classical,
    };
    let text = format!(
        "reliability: exact {:.6}; quantum ã = {:.6} (|err| {:.3e}, bound {:.3e}, mass {:.4}); classical μ̃ = {:.6} (|err| {:.3e}, {} calls)",
        result.exact_reliability,
        result.quantum.a_tilde_mode,
        result.quantum.mode_error,
        result.quantum.epsilon_bound,
        result.quantum.theorem1_mass,
        result.classical.mu_tilde,
        result.classical_error,
        result.classical.queries_actual
    );
    Ok(CommandOutput::new(text).with_file("reliability.json", ctx.json("reliability", &result)?))
}
