//! Nature's distribution p(ξ) over the 2^b scenarios.

use rand::Rng;
use serde::Serialize;

use crate::error::{input, Error, Result};

/// Dense storage limit on b.
pub const MAX_SCENARIO_BITS: u32 = 14;

const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioDistribution {
    scenario_bits: u32,
    probabilities: Vec<f64>,
    /// Running sums for inverse-CDF sampling.
    #[serde(skip)]
    cumulative: Vec<f64>,
}

impl ScenarioDistribution {
    fn build(scenario_bits: u32, probabilities: Vec<f64>) -> Result<Self> {
        if scenario_bits == 0 || scenario_bits > MAX_SCENARIO_BITS {
            return Err(Error::Capacity(format!(
                "scenario register of {scenario_bits} bits outside 1..={MAX_SCENARIO_BITS}"
            )));
        }
        let mut cumulative = Vec::with_capacity(probabilities.len());
        let mut acc = 0.0;
        for &p in &probabilities {
            acc += p;
            cumulative.push(acc);
        }
        Ok(Self { scenario_bits, probabilities, cumulative })
    }

    pub fn uniform(scenario_bits: u32) -> Result<Self> {
        if scenario_bits == 0 || scenario_bits > MAX_SCENARIO_BITS {
            return Err(Error::Capacity(format!(
                "scenario register of {scenario_bits} bits outside 1..={MAX_SCENARIO_BITS}"
            )));
        }
        let n = 1usize << scenario_bits;
        Self::build(scenario_bits, vec![1.0 / n as f64; n])
    }

    /// Independent bits: bit j of ξ is 1 with probability `q[j]`.
    pub fn iid_bernoulli(q: &[f64]) -> Result<Self> {
        if let Some(bad) = q.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return input(format!("bit probability {bad} outside [0, 1]"));
        }
        let scenario_bits = q.len() as u32;
        if scenario_bits == 0 || scenario_bits > MAX_SCENARIO_BITS {
            return Err(Error::Capacity(format!(
                "scenario register of {scenario_bits} bits outside 1..={MAX_SCENARIO_BITS}"
            )));
        }
        let probabilities = (0..1usize << scenario_bits)
            .map(|xi| {
                q.iter()
                    .enumerate()
                    .map(|(j, &qj)| if xi >> j & 1 == 1 { qj } else { 1.0 - qj })
                    .product()
            })
            .collect();
        Self::build(scenario_bits, probabilities)
    }

    /// Same success probability on every bit.
    pub fn iid_uniform_bits(scenario_bits: u32, q: f64) -> Result<Self> {
        Self::iid_bernoulli(&vec![q; scenario_bits as usize])
    }

    /// An explicit probability vector of length 2^b. The vector must be
    /// non-negative and sum to 1 within 1e-12; nothing is renormalized.
    pub fn explicit(probabilities: Vec<f64>) -> Result<Self> {
        let len = probabilities.len();
        if len < 2 || !len.is_power_of_two() {
            return input(format!("explicit distribution length {len} is not a power of two >= 2"));
        }
        if let Some(bad) = probabilities.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return input(format!("negative or non-finite probability {bad}"));
        }
        let total: f64 = probabilities.iter().sum();
        if total == 0.0 {
            return input("distribution has zero total mass");
        }
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return input(format!("probabilities sum to {total}, not 1"));
        }
        Self::build(len.trailing_zeros(), probabilities)
    }

    pub fn point_mass(scenario_bits: u32, scenario: usize) -> Result<Self> {
        let n = 1usize << scenario_bits.min(MAX_SCENARIO_BITS);
        if scenario >= n {
            return input(format!("scenario {scenario} out of range"));
        }
        let mut p = vec![0.0; n];
        p[scenario] = 1.0;
        Self::build(scenario_bits, p)
    }

    pub fn scenario_bits(&self) -> u32 {
        self.scenario_bits
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, scenario: usize) -> f64 {
        self.probabilities[scenario]
    }

    /// Draws ξ by inverse CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty");
        let u: f64 = rng.gen::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        // Rounding can leave u at the top edge; fall back to the last
        // scenario with positive mass.
        if idx < self.len() {
            idx
        } else {
            self.probabilities.iter().rposition(|&p| p > 0.0).unwrap_or(self.len() - 1)
        }
    }

    /// √p(ξ), the amplitudes loaded by the state-preparation unitary.
    pub fn amplitudes(&self) -> Vec<f64> {
        self.probabilities.iter().map(|p| p.sqrt()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constructors() {
        assert_eq!(ScenarioDistribution::uniform(2).unwrap().probabilities(), &[0.25; 4]);
        // bit 0 always 1, bit 1 always 0
        let d = ScenarioDistribution::iid_bernoulli(&[1.0, 0.0]).unwrap();
        assert_eq!(d.probabilities(), &[0.0, 1.0, 0.0, 0.0]);
        let e = ScenarioDistribution::explicit(vec![0.2, 0.3, 0.5, 0.0]).unwrap();
        assert_eq!(e.probability(3), 0.0);
        assert_eq!(e.scenario_bits(), 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ScenarioDistribution::explicit(vec![0.0; 4]).is_err());
        assert!(ScenarioDistribution::explicit(vec![-0.5, 1.5]).is_err());
        assert!(ScenarioDistribution::explicit(vec![0.5, 0.4]).is_err());
        assert!(ScenarioDistribution::explicit(vec![0.5, 0.25, 0.25]).is_err());
        assert!(ScenarioDistribution::iid_bernoulli(&[1.2]).is_err());
        assert!(matches!(ScenarioDistribution::uniform(15), Err(Error::Capacity(_))));
    }

    #[test]
    fn amplitude_examples() {
        assert_eq!(ScenarioDistribution::uniform(2).unwrap().amplitudes(), vec![0.5; 4]);
        assert_eq!(ScenarioDistribution::point_mass(2, 3).unwrap().amplitudes(), vec![0.0, 0.0, 0.0, 1.0]);
        let a = ScenarioDistribution::explicit(vec![0.36, 0.64]).unwrap().amplitudes();
        assert!((a[0] - 0.6).abs() < 1e-15 && (a[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn sampling_frequencies() {
        let d = ScenarioDistribution::uniform(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let ones = (0..100_000).filter(|_| d.sample(&mut rng) == 1).count();
        assert!((ones as f64 / 1e5 - 0.5).abs() < 0.01);

        let point = ScenarioDistribution::point_mass(3, 5).unwrap();
        assert!((0..1000).all(|_| point.sample(&mut rng) == 5));

        let skewed = ScenarioDistribution::explicit(vec![0.2, 0.3, 0.5, 0.0]).unwrap();
        assert!((0..10_000).all(|_| skewed.sample(&mut rng) != 3));
    }

    #[test]
    fn iid_half_matches_uniform_chi_square() {
        let d = ScenarioDistribution::iid_uniform_bits(6, 0.5).unwrap();
        let u = ScenarioDistribution::uniform(6).unwrap();
        for (a, b) in d.probabilities().iter().zip(u.probabilities()) {
            assert!((a - b).abs() < 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let draws = 100_000;
        let mut counts = [0usize; 64];
        for _ in 0..draws {
            counts[d.sample(&mut rng)] += 1;
        }
        let expected = draws as f64 / 64.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // chi-square with 63 dof: the 0.999 quantile is about 103.4
        assert!(chi2 < 103.4, "chi2 = {chi2}");
    }
}
