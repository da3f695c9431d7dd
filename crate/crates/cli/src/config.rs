//! The experiment configuration: one JSON document describing the oracle,
//! the scenario distribution and the algorithm parameters.

use std::path::{Path, PathBuf};

use reqo::classical::SearchOrder;
use reqo::schedule::LogBase;
use reqo::statevector::QpeMode;
use reqo::{Graph, Oracle, PlantedTable, ScenarioDistribution};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleSpec {
    Constant { scenario_bits: u32, decision_bits: u32, value: bool },
    Threshold { scenario_bits: u32, decision_bits: u32, divisor: f64, offset: f64 },
    Planted { scenario_bits: u32, decision_bits: u32, seed: u64, density: f64 },
    PlantedExact { scenario_bits: u32, decision_bits: u32, seed: u64, count: usize },
    /// A table written by `PlantedTable::save`.
    PlantedFile { path: PathBuf },
    /// Two-terminal reliability; give either `graph_file` or `graph`.
    Reliability {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        graph_file: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        graph: Option<GraphSpec>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
    pub terminals: (usize, usize),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    #[default]
    Uniform,
    /// Independent bits; `q` is one probability for every bit or one per bit.
    Iid { q: BitProbabilities },
    Explicit { p: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BitProbabilities {
    Shared(f64),
    PerBit(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    /// ε grid for the configured oracle.
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    /// c values for the single-solution scaling rows.
    #[serde(default = "default_decision_bits")]
    pub decision_bits: Vec<u32>,
    /// b for the single-solution oracles.
    #[serde(default = "default_single_solution_scenario_bits")]
    pub scenario_bits: u32,
    /// Fixed ε for the scaling rows.
    #[serde(default = "default_scaling_epsilon")]
    pub epsilon: f64,
    /// Measured counts are produced only up to this c.
    #[serde(default = "default_measured_max")]
    pub measured_max_decision_bits: u32,
}

impl Default for CompareSpec {
    fn default() -> Self {
        Self {
            epsilons: default_epsilons(),
            decision_bits: default_decision_bits(),
            scenario_bits: default_single_solution_scenario_bits(),
            epsilon: default_scaling_epsilon(),
            measured_max_decision_bits: default_measured_max(),
        }
    }
}

fn default_epsilons() -> Vec<f64> {
    vec![0.4, 0.2, 0.1]
}

fn default_decision_bits() -> Vec<u32> {
    vec![4, 6, 8, 10]
}

fn default_single_solution_scenario_bits() -> u32 {
    2
}

fn default_scaling_epsilon() -> f64 {
    0.1
}

fn default_measured_max() -> u32 {
    6
}

fn default_l_range() -> (usize, usize) {
    (0, 30)
}

fn default_samples() -> usize {
    400
}

fn default_trials() -> usize {
    1
}

fn default_classical_epsilon() -> f64 {
    0.1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub oracle: OracleSpec,
    #[serde(default)]
    pub distribution: DistributionSpec,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Convergence target; defaults to 2^-c.
    #[serde(default)]
    pub lambda_t: Option<f64>,
    /// Target accuracy; when present, δ and m follow from it.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub m: Option<u32>,
    /// Inclusive range of Grover iterate counts l for `dynamics`.
    #[serde(default = "default_l_range")]
    pub l_range: (usize, usize),
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// ε for the Chebyshev bound and the failure rate in `classical`.
    #[serde(default = "default_classical_epsilon")]
    pub classical_epsilon: f64,
    #[serde(default)]
    pub search_order: SearchOrder,
    #[serde(default)]
    pub qpe_mode: QpeMode,
    #[serde(default)]
    pub log_base: LogBase,
    /// Measurement shots drawn from the exact QAE distribution.
    #[serde(default)]
    pub shots: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub compare: CompareSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// A parsed config plus everything needed to identify it in outputs.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    /// Directory relative paths in the config are resolved against.
    pub base_dir: PathBuf,
    /// sha256 over the canonical config JSON followed by every referenced file.
    pub hash: String,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str(&text, base_dir)
    }

    pub fn from_str(text: &str, base_dir: PathBuf) -> CliResult<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config is not JSON: {e}")))?;
        let config: ExperimentConfig =
            serde_json::from_value(value.clone()).map_err(|e| CliError::Config(format!("config: {e}")))?;
        let mut hasher = Sha256::new();
        // serde_json maps are ordered by key, so this is canonical
        hasher.update(serde_json::to_vec(&value).expect("value serializes"));
        let loaded = Self { config, base_dir, hash: String::new() };
        for referenced in loaded.referenced_files() {
            let bytes = std::fs::read(&referenced)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", referenced.display())))?;
            hasher.update(&bytes);
        }
        Ok(Self { hash: hex::encode(hasher.finalize()), ..loaded })
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    fn referenced_files(&self) -> Vec<PathBuf> {
        match &self.config.oracle {
            OracleSpec::PlantedFile { path } => vec![self.resolve(path)],
            OracleSpec::Reliability { graph_file: Some(path), .. } => vec![self.resolve(path)],
            _ => Vec::new(),
        }
    }

    /// The graph of a reliability oracle, if that is what is configured.
    pub fn graph(&self) -> CliResult<Option<Graph>> {
        match &self.config.oracle {
            OracleSpec::Reliability { graph_file, graph } => match (graph_file, graph) {
                (Some(path), None) => {
                    let text = std::fs::read_to_string(self.resolve(path))
                        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                    Ok(Some(Graph::parse(&text)?))
                }
                (None, Some(g)) => Ok(Some(Graph::new(g.vertices, g.edges.clone(), g.terminals)?)),
                _ => Err(CliError::Config("reliability oracle needs exactly one of `graph_file` and `graph`".into())),
            },
            _ => Ok(None),
        }
    }

    pub fn build_oracle(&self) -> CliResult<Oracle> {
        Ok(match &self.config.oracle {
            &OracleSpec::Constant { scenario_bits, decision_bits, value } => {
                Oracle::constant(scenario_bits, decision_bits, value)?
            }
            &OracleSpec::Threshold { scenario_bits, decision_bits, divisor, offset } => {
                Oracle::threshold(scenario_bits, decision_bits, divisor, offset)?
            }
            &OracleSpec::Planted { scenario_bits, decision_bits, seed, density } => {
                Oracle::planted(scenario_bits, decision_bits, seed, density)?
            }
            &OracleSpec::PlantedExact { scenario_bits, decision_bits, seed, count } => {
                Oracle::planted_exact(scenario_bits, decision_bits, seed, count)?
            }
            OracleSpec::PlantedFile { path } => {
                let text = std::fs::read_to_string(self.resolve(path))
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
                Oracle::from_table(PlantedTable::from_json(&text)?)?
            }
            OracleSpec::Reliability { .. } => Oracle::reliability(self.graph()?.expect("reliability spec"))?,
        })
    }

    pub fn build_distribution(&self, scenario_bits: u32) -> CliResult<ScenarioDistribution> {
        let dist = match &self.config.distribution {
            DistributionSpec::Uniform => ScenarioDistribution::uniform(scenario_bits)?,
            DistributionSpec::Iid { q: BitProbabilities::Shared(q) } => {
                ScenarioDistribution::iid_uniform_bits(scenario_bits, *q)?
            }
            DistributionSpec::Iid { q: BitProbabilities::PerBit(q) } => ScenarioDistribution::iid_bernoulli(q)?,
            DistributionSpec::Explicit { p } => ScenarioDistribution::explicit(p.clone())?,
        };
        if dist.scenario_bits() != scenario_bits {
            return Err(CliError::Config(format!(
                "distribution covers {} scenario bits, oracle has {scenario_bits}",
                dist.scenario_bits()
            )));
        }
        Ok(dist)
    }

    pub fn delta(&self) -> CliResult<f64> {
        self.config.delta.ok_or_else(|| CliError::Config("`delta` is required for this command".into()))
    }
}
