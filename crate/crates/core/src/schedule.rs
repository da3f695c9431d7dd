//! Closed-form math of the fixed-point search: Chebyshev polynomials, the
//! phase schedule, the analytic per-scenario success probability, depth
//! selection, and the error-driven choice of (δ, M).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// Chebyshev polynomial of the first kind, T_order(x).
///
/// Uses cos(order·arccos x) for |x| ≤ 1 and cosh(order·arcosh x) for x ≥ 1.
/// Fractional orders are only meaningful on the cosh branch.
pub fn chebyshev(order: f64, x: f64) -> Result<f64> {
    if !x.is_finite() || x < -1.0 {
        return Err(Error::Domain(format!("T_n(x) is only defined here for x >= -1, got {x}")));
    }
    if order.fract() != 0.0 && x < 1.0 {
        return Err(Error::Domain(format!("fractional order {order} requires x >= 1, got {x}")));
    }
    Ok(if x <= 1.0 { (order * x.acos()).cos() } else { (order * x.acosh()).cosh() })
}

/// T_{1/L}(1/δ), the inverse of the width parameter γ in the fixed-point
/// construction. Always ≥ 1.
fn inverse_gamma(depth: usize, delta: f64) -> f64 {
    ((1.0 / delta).acosh() / depth as f64).cosh()
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        input(format!("δ must lie in (0, 1), got {delta}"))
    }
}

/// Phase angles (α_j, β_j), j = 1..l, for a depth L = 2l + 1 fixed-point search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSchedule {
    iterations: usize,
    delta: f64,
    alphas: Vec<f64>,
    betas: Vec<f64>,
}

impl AngleSchedule {
    /// α_j = −β_{l−j+1} = 2·arccot(tan(2πj/L)·√(1 − 1/T_{1/L}(1/δ)²)).
    ///
    /// arccot takes values in (0, π), computed as atan2(1, x).
    pub fn new(iterations: usize, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        let depth = 2 * iterations + 1;
        let g = inverse_gamma(depth, delta);
        let width = (1.0 - 1.0 / (g * g)).max(0.0).sqrt();
        let alphas: Vec<f64> = (1..=iterations)
            .map(|j| {
                let t = (2.0 * PI * j as f64 / depth as f64).tan() * width;
                2.0 * 1f64.atan2(t)
            })
            .collect();
        let betas = (1..=iterations).map(|j| -alphas[iterations - j]).collect();
        Ok(Self { iterations, delta, alphas, betas })
    }

    /// Schedule for an odd query depth L.
    pub fn for_depth(depth: usize, delta: f64) -> Result<Self> {
        if depth % 2 == 0 {
            return input(format!("depth L = {depth} must be odd"));
        }
        Self::new((depth - 1) / 2, delta)
    }

    /// l, the number of Grover iterates.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// L = 2l + 1.
    pub fn depth(&self) -> usize {
        2 * self.iterations + 1
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// (α_j, β_j) in application order, j = 1 first.
    pub fn pairs(&self) -> impl DoubleEndedIterator<Item = (f64, f64)> + '_ {
        self.alphas.iter().copied().zip(self.betas.iter().copied())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }
}

/// P_{L,ξ} = 1 − δ²·T_L(T_{1/L}(1/δ)·√(1−λ))².
pub fn success_probability(depth: usize, delta: f64, lambda: f64) -> Result<f64> {
    if depth % 2 == 0 {
        return input(format!("depth L = {depth} must be odd"));
    }
    check_delta(delta)?;
    if !(0.0..=1.0).contains(&lambda) {
        return input(format!("λ = {lambda} outside [0, 1]"));
    }
    let x = inverse_gamma(depth, delta) * (1.0 - lambda).sqrt();
    let t = chebyshev(depth as f64, x)?;
    let p = 1.0 - delta * delta * t * t;
    debug_assert!((-1e-12..=1.0 + 1e-12).contains(&p), "P = {p} drifted outside [0, 1]");
    Ok(p.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

/// Smallest odd L with L ≥ log(2/δ)/√λ_t, natural log.
pub fn min_depth(lambda_t: f64, delta: f64) -> Result<usize> {
    min_depth_with_base(lambda_t, delta, LogBase::Natural)
}

pub fn min_depth_with_base(lambda_t: f64, delta: f64, base: LogBase) -> Result<usize> {
    check_delta(delta)?;
    if !(lambda_t > 0.0 && lambda_t <= 1.0) {
        return input(format!("λ_t = {lambda_t} outside (0, 1]"));
    }
    let bound = base.log(2.0 / delta) / lambda_t.sqrt();
    let depth = (bound.ceil() as usize).max(1);
    Ok(if depth % 2 == 0 { depth + 1 } else { depth })
}

/// Parameters chosen so that δ + π/M + π²/M² ≤ ε when ε_t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QaeParameters {
    pub delta: f64,
    /// Sample-register qubits.
    pub m: u32,
    /// M = 2^m grid points.
    pub grid: usize,
}

/// δ = ε/2 and M = 2π/(√(2ε+1) − 1), rounded up to a power of two.
pub fn qae_parameters(epsilon: f64) -> Result<QaeParameters> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return input(format!("ε must lie in (0, 1), got {epsilon}"));
    }
    let raw = 2.0 * PI / ((2.0 * epsilon + 1.0).sqrt() - 1.0);
    let m = raw.log2().ceil().max(1.0) as u32;
    if m > 24 {
        return Err(Error::Capacity(format!("ε = {epsilon} needs a {m}-qubit sample register")));
    }
    Ok(QaeParameters { delta: epsilon / 2.0, m, grid: 1 << m })
}
