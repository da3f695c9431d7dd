//! A quick invariant suite that needs no config.

use std::f64::consts::PI;

use reqo::classical::{estimate_mu, trial_rng, SearchOrder};
use reqo::estimator::{qae_error_bound, simulated_success, theorem1_epsilon};
use reqo::schedule::{min_depth, qae_parameters, success_probability};
use reqo::statevector::{Engine, QpeMode};
use reqo::{analyze, AngleSchedule, Graph, Oracle, ScenarioDistribution};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::{CommandOutput, RunContext};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestResult {
    pub passed: usize,
    pub failed: usize,
    pub checks: Vec<Check>,
}

type CheckFn = fn(u64) -> reqo::Result<(bool, String)>;

const CHECKS: &[(&str, CheckFn)] = &[
    ("fixed_point_floor", fixed_point_floor),
    ("schedule_antisymmetry", schedule_antisymmetry),
    ("statevector_matches_closed_form", statevector_matches_closed_form),
    ("qae_mass_floor", qae_mass_floor),
    ("qae_parameters_meet_target", qae_parameters_meet_target),
    ("threshold_instance_mu", threshold_instance_mu),
    ("reliability_examples", reliability_examples),
    ("classical_constant_oracles", classical_constant_oracles),
];

pub fn run(ctx: &RunContext) -> CliResult<CommandOutput> {
    let checks: Vec<Check> = CHECKS
        .iter()
        .map(|&(name, check)| match check(ctx.seed) {
            Ok((passed, detail)) => Check { name, passed, detail },
            Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
        })
        .collect();
    let failed = checks.iter().filter(|c| !c.passed).count();
    let result = SelftestResult { passed: checks.len() - failed, failed, checks };
    let mut text = String::new();
    for c in &result.checks {
        text.push_str(&format!("{} {}: {}\n", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    text.push_str(&format!("selftest: {} passed, {} failed", result.passed, result.failed));
    let mut out = CommandOutput::new(text).with_file("selftest.json", ctx.json("selftest", &result)?);
    if failed > 0 {
        out.failure = Some(CliError::Consistency(format!("{failed} selftest check(s) failed")));
    }
    Ok(out)
}

fn fixed_point_floor(_: u64) -> reqo::Result<(bool, String)> {
    let mut worst = f64::INFINITY;
    for delta in [0.1, 0.3, 0.5] {
        for k in 1..=64 {
            let depth = min_depth(k as f64 / 64.0, delta)?;
            for j in k..=64 {
                let margin = success_probability(depth, delta, j as f64 / 64.0)? - (1.0 - delta * delta);
                worst = worst.min(margin);
            }
        }
    }
    Ok((worst >= -1e-9, format!("smallest margin above 1 − δ²: {worst:.3e}")))
}

fn schedule_antisymmetry(_: u64) -> reqo::Result<(bool, String)> {
    let mut ok = true;
    for l in 0..12 {
        let s = AngleSchedule::new(l, 0.3)?;
        ok &= (0..l).all(|j| s.alphas()[j] == -s.betas()[l - 1 - j]);
    }
    Ok((ok, "α_j = −β_{l−j+1} for l < 12".into()))
}

fn statevector_matches_closed_form(seed: u64) -> reqo::Result<(bool, String)> {
    let mut worst = 0.0f64;
    for i in 0..5 {
        let f = Oracle::planted(3, 3, seed.wrapping_add(i), 0.3)?;
        let d = ScenarioDistribution::uniform(3)?;
        let a = analyze(&f, &d)?;
        for l in 0..6 {
            let schedule = AngleSchedule::new(l, 0.3)?;
            for (xi, p) in simulated_success(&f, &d, &schedule)?.into_iter().enumerate() {
                let want = success_probability(schedule.depth(), 0.3, a.lambda(xi))?;
                worst = worst.max((p.unwrap_or(want) - want).abs());
            }
        }
    }
    Ok((worst < 1e-6, format!("largest |P_statevector − P_analytic| = {worst:.3e}")))
}

fn qae_mass_floor(seed: u64) -> reqo::Result<(bool, String)> {
    let floor = 8.0 / (PI * PI);
    let mut least = f64::INFINITY;
    for i in 0..4 {
        let f = Oracle::planted(2, 2, seed.wrapping_add(i), 0.35)?;
        let d = ScenarioDistribution::uniform(2)?;
        let schedule = AngleSchedule::new(1, 0.3)?;
        let mut e = Engine::new(&f, &d)?.quiet();
        let a = e.prepare_marked(&schedule)?.ancilla_one_probability()?;
        let pe = e.phase_estimation(&schedule, 4, QpeMode::PowerSequence)?;
        least = least.min(pe.mass_within(a, qae_error_bound(a, pe.grid)));
    }
    Ok((least >= floor, format!("smallest mass within the bound: {least:.4} (floor {floor:.4})")))
}

fn qae_parameters_meet_target(_: u64) -> reqo::Result<(bool, String)> {
    let mut ok = true;
    for i in 1..100 {
        let eps = i as f64 / 100.0;
        let q = qae_parameters(eps)?;
        ok &= theorem1_epsilon(0.0, q.delta, 1.0, q.grid as f64) <= eps + 1e-12;
    }
    Ok((ok, "ε_t = 0, δ = ε/2, M(ε) gives a bound ≤ ε on ε ∈ {0.01, …, 0.99}".into()))
}

fn threshold_instance_mu(_: u64) -> reqo::Result<(bool, String)> {
    let f = Oracle::threshold(6, 6, 8.0, 3.0)?;
    let a = analyze(&f, &ScenarioDistribution::uniform(6)?)?;
    // ξ/8 − 3 > φ for some φ ≥ 0 ⇔ ξ > 24
    let want = (0..64).filter(|&xi| xi > 24).count() as f64 / 64.0;
    Ok(((a.mu() - want).abs() < 1e-15, format!("μ = {} (expected {want})", a.mu())))
}

fn reliability_examples(_: u64) -> reqo::Result<(bool, String)> {
    let cases = [
        (Graph::new(2, vec![(0, 1)], (0, 1))?, 0.5),
        (Graph::new(2, vec![(0, 1), (0, 1)], (0, 1))?, 0.75),
        (Graph::triangle(), 0.625),
    ];
    let mut ok = true;
    for (g, want) in cases {
        let bits = g.edge_count() as u32;
        let f = Oracle::reliability(g.clone())?;
        let mu = analyze(&f, &ScenarioDistribution::uniform(bits)?)?.mu();
        ok &= (g.reliability() - want).abs() < 1e-15 && (mu - want).abs() < 1e-15;
    }
    Ok((ok, "single edge 1/2, parallel pair 3/4, triangle 5/8".into()))
}

fn classical_constant_oracles(seed: u64) -> reqo::Result<(bool, String)> {
    let d = ScenarioDistribution::uniform(3)?;
    let mut rng = trial_rng(seed, 0);
    let yes = estimate_mu(&Oracle::constant(3, 4, true)?, &d, 50, SearchOrder::WithReplacement, &mut rng)?;
    let no = estimate_mu(&Oracle::constant(3, 4, false)?, &d, 50, SearchOrder::Sequential, &mut rng)?;
    let ok = yes.mu_tilde == 1.0 && yes.queries_actual == 50 && no.mu_tilde == 0.0 && no.queries_actual == 50 * 16;
    Ok((ok, format!("true: {} queries, false: {} queries for N = 50, c = 4", yes.queries_actual, no.queries_actual)))
}
