//! Estimating the probability that a randomly drawn scenario admits a
//! completing decision string for a black-box boolean oracle.
//!
//! Two estimators are provided: a classical Monte-Carlo sampler that
//! brute-force searches each drawn scenario, and a dense statevector
//! simulation of oblivious fixed-point amplitude amplification followed by
//! phase-estimation based amplitude estimation. Everything runs at desk
//! scale (a few dozen qubits at most) and every oracle use is accounted.

pub mod analysis;
pub mod classical;
pub mod distribution;
pub mod error;
pub mod estimator;
pub mod graph;
pub mod oracle;
pub mod schedule;
pub mod statevector;

pub use analysis::{analyze, ScenarioAnalysis};
pub use distribution::ScenarioDistribution;
pub use error::{Error, Result};
pub use graph::Graph;
pub use oracle::{Oracle, PlantedTable};
pub use schedule::AngleSchedule;
pub use statevector::StateVector;
