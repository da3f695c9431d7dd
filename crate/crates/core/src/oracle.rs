//! Black-box boolean oracles f(ξ, φ) over a b-bit scenario register and a
//! c-bit decision register, with call accounting.

use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::graph::{Graph, MAX_EDGES};

/// Largest supported b + c. Exhaustive analysis touches every (ξ, φ) pair.
pub const MAX_ORACLE_BITS: u32 = 24;

type BoolFn = Arc<dyn Fn(usize, usize) -> bool + Send + Sync>;

#[derive(Clone)]
enum Family {
    Constant(bool),
    Threshold { divisor: f64, offset: f64 },
    Planted(Arc<PlantedTable>),
    Reliability(Arc<Graph>),
    Custom(BoolFn),
}

/// A deterministic boolean function of (scenario, decision) that counts every
/// evaluation.
///
/// Oracles are immutable after construction apart from the call counter,
/// which is atomic so that several evaluators may share one oracle.
pub struct Oracle {
    scenario_bits: u32,
    decision_bits: u32,
    family: Family,
    calls: AtomicU64,
}

impl Oracle {
    fn with_family(scenario_bits: u32, decision_bits: u32, family: Family) -> Result<Self> {
        if scenario_bits == 0 || decision_bits == 0 {
            return input("oracle needs at least one scenario bit and one decision bit");
        }
        if scenario_bits + decision_bits > MAX_ORACLE_BITS {
            return Err(Error::Capacity(format!(
                "b + c = {} exceeds {MAX_ORACLE_BITS}",
                scenario_bits + decision_bits
            )));
        }
        Ok(Self { scenario_bits, decision_bits, family, calls: AtomicU64::new(0) })
    }

    pub fn constant(scenario_bits: u32, decision_bits: u32, bit: bool) -> Result<Self> {
        Self::with_family(scenario_bits, decision_bits, Family::Constant(bit))
    }

    /// f(ξ, φ) = 1 iff ξ / divisor − offset > φ, with real division.
    ///
    /// `threshold(6, 6, 8.0, 3.0)` is the instance used for the success
    /// probability dynamics figure.
    pub fn threshold(scenario_bits: u32, decision_bits: u32, divisor: f64, offset: f64) -> Result<Self> {
        if !(divisor.is_finite() && divisor != 0.0 && offset.is_finite()) {
            return input(format!("threshold needs finite non-zero divisor and finite offset, got {divisor}, {offset}"));
        }
        Self::with_family(scenario_bits, decision_bits, Family::Threshold { divisor, offset })
    }

    /// Random marked sets: each (ξ, φ) is marked independently with
    /// probability `density`.
    pub fn planted(scenario_bits: u32, decision_bits: u32, seed: u64, density: f64) -> Result<Self> {
        let table = PlantedTable::random(scenario_bits, decision_bits, seed, density)?;
        Self::from_table(table)
    }

    /// Every scenario gets exactly `count` completing strings chosen
    /// uniformly at random.
    pub fn planted_exact(scenario_bits: u32, decision_bits: u32, seed: u64, count: usize) -> Result<Self> {
        let table = PlantedTable::exact(scenario_bits, decision_bits, seed, count)?;
        Self::from_table(table)
    }

    pub fn from_table(table: PlantedTable) -> Result<Self> {
        Self::with_family(table.scenario_bits, table.decision_bits, Family::Planted(Arc::new(table)))
    }

    /// f(ξ, φ) = g(ξ ∧ φ), where g reports whether the graph's terminals are
    /// connected through the edges selected by its argument. Bit j of ξ is 1
    /// when edge j survives; bit j of φ is 1 when edge j is chosen.
    pub fn reliability(graph: Graph) -> Result<Self> {
        Self::reliability_with_limit(graph, MAX_EDGES)
    }

    pub fn reliability_with_limit(graph: Graph, max_edges: usize) -> Result<Self> {
        let edges = graph.edge_count();
        if edges > max_edges {
            return Err(Error::Capacity(format!("graph has {edges} edges, limit is {max_edges}")));
        }
        if edges == 0 {
            return input("reliability oracle needs at least one edge");
        }
        Self::with_family(edges as u32, edges as u32, Family::Reliability(Arc::new(graph)))
    }

    pub fn from_fn<F>(scenario_bits: u32, decision_bits: u32, f: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> bool + Send + Sync + 'static,
    {
        Self::with_family(scenario_bits, decision_bits, Family::Custom(Arc::new(f)))
    }

    pub fn scenario_bits(&self) -> u32 {
        self.scenario_bits
    }

    pub fn decision_bits(&self) -> u32 {
        self.decision_bits
    }

    pub fn scenario_count(&self) -> usize {
        1 << self.scenario_bits
    }

    pub fn decision_count(&self) -> usize {
        1 << self.decision_bits
    }

    pub fn planted_table(&self) -> Option<&PlantedTable> {
        match &self.family {
            Family::Planted(t) => Some(t),
            _ => None,
        }
    }

    pub fn graph(&self) -> Option<&Graph> {
        match &self.family {
            Family::Reliability(g) => Some(g),
            _ => None,
        }
    }

    fn raw(&self, scenario: usize, decision: usize) -> bool {
        match &self.family {
            Family::Constant(bit) => *bit,
            Family::Threshold { divisor, offset } => scenario as f64 / divisor - offset > decision as f64,
            Family::Planted(table) => table.is_marked(scenario, decision),
            Family::Reliability(graph) => graph.terminals_connected((scenario & decision) as u64),
            Family::Custom(f) => f(scenario, decision),
        }
    }

    /// Evaluates f(ξ, φ) and charges one call.
    pub fn evaluate(&self, scenario: usize, decision: usize) -> Result<bool> {
        if scenario >= self.scenario_count() || decision >= self.decision_count() {
            return Err(Error::Input(format!(
                "index (ξ={scenario}, φ={decision}) outside {}x{}",
                self.scenario_count(),
                self.decision_count()
            )));
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(self.raw(scenario, decision))
    }

    /// Φ*_ξ: every decision string that completes `scenario`, by exhaustive
    /// enumeration (2^c charged calls).
    pub fn completing_set(&self, scenario: usize) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for decision in 0..self.decision_count() {
            if self.evaluate(scenario, decision)? {
                out.push(decision);
            }
        }
        Ok(out)
    }

    /// Truth table of f, laid out as `scenario * 2^c + decision`.
    ///
    /// This is the compiled form the statevector engine uses for U_f. Building
    /// it charges nothing; the engine charges the ledger once per logical
    /// oracle application instead, which is what the query model counts.
    pub fn mark_table(&self) -> MarkTable {
        let decisions = self.decision_count();
        let bits = (0..self.scenario_count() * decisions)
            .map(|i| self.raw(i / decisions, i % decisions))
            .collect();
        MarkTable { decision_bits: self.decision_bits, bits }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    /// Charges `count` logical oracle applications.
    pub fn record_calls(&self, count: u64) {
        self.calls.fetch_add(count, Ordering::Relaxed);
    }

    pub fn reset_calls(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }
}

impl Clone for Oracle {
    fn clone(&self) -> Self {
        Self {
            scenario_bits: self.scenario_bits,
            decision_bits: self.decision_bits,
            family: self.family.clone(),
            calls: AtomicU64::new(self.calls()),
        }
    }
}

impl fmt::Debug for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = match &self.family {
            Family::Constant(bit) => format!("constant({})", *bit as u8),
            Family::Threshold { divisor, offset } => format!("threshold(/{divisor} - {offset})"),
            Family::Planted(_) => "planted".to_string(),
            Family::Reliability(g) => format!("reliability({} edges)", g.edge_count()),
            Family::Custom(_) => "custom".to_string(),
        };
        f.debug_struct("Oracle")
            .field("b", &self.scenario_bits)
            .field("c", &self.decision_bits)
            .field("family", &family)
            .field("calls", &self.calls())
            .finish()
    }
}

/// Precomputed truth table of an oracle.
#[derive(Debug, Clone)]
pub struct MarkTable {
    decision_bits: u32,
    bits: Vec<bool>,
}

impl MarkTable {
    #[inline]
    pub fn is_marked(&self, scenario: usize, decision: usize) -> bool {
        self.bits[(scenario << self.decision_bits) | decision]
    }

    /// Indexed by `scenario * 2^c + decision`.
    #[inline]
    pub fn get(&self, joint: usize) -> bool {
        self.bits[joint]
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Explicit marked-set bitmaps, one per scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedTable {
    scenario_bits: u32,
    decision_bits: u32,
    /// `bitmaps[ξ]` holds 2^c bits packed little-endian into u64 words.
    bitmaps: Vec<Vec<u64>>,
}

impl PlantedTable {
    fn empty(scenario_bits: u32, decision_bits: u32) -> Result<Self> {
        if scenario_bits == 0 || decision_bits == 0 || scenario_bits + decision_bits > MAX_ORACLE_BITS {
            return Err(Error::Capacity(format!(
                "planted table with b={scenario_bits}, c={decision_bits} is out of range"
            )));
        }
        let words = (1usize << decision_bits).div_ceil(64);
        Ok(Self { scenario_bits, decision_bits, bitmaps: vec![vec![0; words]; 1 << scenario_bits] })
    }

    pub fn random(scenario_bits: u32, decision_bits: u32, seed: u64, density: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&density) {
            return input(format!("density must lie in [0, 1], got {density}"));
        }
        let mut table = Self::empty(scenario_bits, decision_bits)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for scenario in 0..1usize << scenario_bits {
            for decision in 0..1usize << decision_bits {
                if rng.gen_bool(density) {
                    table.set(scenario, decision);
                }
            }
        }
        Ok(table)
    }

    pub fn exact(scenario_bits: u32, decision_bits: u32, seed: u64, count: usize) -> Result<Self> {
        let decisions = 1usize << decision_bits;
        if count > decisions {
            return input(format!("cannot plant {count} strings among {decisions}"));
        }
        let mut table = Self::empty(scenario_bits, decision_bits)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for scenario in 0..1usize << scenario_bits {
            for decision in index::sample(&mut rng, decisions, count) {
                table.set(scenario, decision);
            }
        }
        Ok(table)
    }

    /// Builds a table from per-scenario completing sets.
    pub fn from_sets(scenario_bits: u32, decision_bits: u32, sets: &[Vec<usize>]) -> Result<Self> {
        let mut table = Self::empty(scenario_bits, decision_bits)?;
        if sets.len() != table.bitmaps.len() {
            return input(format!("expected {} completing sets, got {}", table.bitmaps.len(), sets.len()));
        }
        for (scenario, set) in sets.iter().enumerate() {
            for &decision in set {
                if decision >= 1 << decision_bits {
                    return input(format!("decision {decision} out of range"));
                }
                table.set(scenario, decision);
            }
        }
        Ok(table)
    }

    fn set(&mut self, scenario: usize, decision: usize) {
        self.bitmaps[scenario][decision / 64] |= 1 << (decision % 64);
    }

    pub fn is_marked(&self, scenario: usize, decision: usize) -> bool {
        self.bitmaps[scenario][decision / 64] >> (decision % 64) & 1 == 1
    }

    pub fn marked_count(&self, scenario: usize) -> usize {
        self.bitmaps[scenario].iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn scenario_bits(&self) -> u32 {
        self.scenario_bits
    }

    pub fn decision_bits(&self) -> u32 {
        self.decision_bits
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let table: Self = serde_json::from_str(text)?;
        let words = (1usize << table.decision_bits).div_ceil(64);
        if table.scenario_bits == 0
            || table.decision_bits == 0
            || table.scenario_bits + table.decision_bits > MAX_ORACLE_BITS
            || table.bitmaps.len() != 1 << table.scenario_bits
            || table.bitmaps.iter().any(|b| b.len() != words)
        {
            return Err(Error::Parse("planted table dimensions do not match its bit counts".into()));
        }
        if table.decision_bits < 6 {
            let spare = !((1u64 << (1 << table.decision_bits)) - 1);
            if table.bitmaps.iter().any(|b| b[0] & spare != 0) {
                return Err(Error::Parse("planted table marks decisions beyond 2^c".into()));
            }
        }
        Ok(table)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
