//! Dense statevector simulation of the search and estimation circuits.
//!
//! Register layout, most significant first: scenario x (b qubits), decision
//! y (c qubits), optional mark ancilla (1 qubit), sample register (m qubits).
//! Each register is little-endian within its block, so the flat amplitude
//! index is `((ξ·2^c + φ)·2^a + anc)·2^m + s` with a ∈ {0, 1}. Sample qubit j
//! is bit j of s and controls 𝒬^(2^j).
//!
//! Operators act on the "system" block (x | y | ancilla). When a sample
//! register is present the system block for a fixed sample value is strided
//! through the amplitude array; it is gathered into a scratch buffer, acted
//! on, and scattered back.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::distribution::ScenarioDistribution;
use crate::error::{Error, Result};
use crate::oracle::{MarkTable, Oracle};
use crate::schedule::AngleSchedule;

type C = Complex64;

/// Hard cap on simulated qubits.
pub const MAX_QUBITS: u32 = 26;

/// Unitarity drift allowed per operator.
pub const NORM_TOL: f64 = 1e-9;

const DUMP_MAGIC: &[u8; 8] = b"REQOSV01";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Layout {
    pub scenario_bits: u32,
    pub decision_bits: u32,
    pub mark_ancilla: bool,
    pub sample_bits: u32,
}

impl Layout {
    pub fn new(scenario_bits: u32, decision_bits: u32, mark_ancilla: bool, sample_bits: u32) -> Result<Self> {
        let layout = Self { scenario_bits, decision_bits, mark_ancilla, sample_bits };
        if layout.total_bits() > MAX_QUBITS {
            return Err(Error::Capacity(format!(
                "{} qubits requested (b={scenario_bits}, c={decision_bits}, ancilla={}, m={sample_bits}), limit is {MAX_QUBITS}",
                layout.total_bits(),
                mark_ancilla as u32
            )));
        }
        if scenario_bits == 0 || decision_bits == 0 {
            return Err(Error::Input("scenario and decision registers need at least one qubit".into()));
        }
        Ok(layout)
    }

    fn ancilla_bits(&self) -> u32 {
        self.mark_ancilla as u32
    }

    pub fn system_bits(&self) -> u32 {
        self.scenario_bits + self.decision_bits + self.ancilla_bits()
    }

    pub fn total_bits(&self) -> u32 {
        self.system_bits() + self.sample_bits
    }

    pub fn system_dim(&self) -> usize {
        1 << self.system_bits()
    }

    pub fn sample_dim(&self) -> usize {
        1 << self.sample_bits
    }

    pub fn dim(&self) -> usize {
        1 << self.total_bits()
    }

    pub fn index(&self, scenario: usize, decision: usize, ancilla: usize, sample: usize) -> usize {
        let joint = (scenario << self.decision_bits) | decision;
        let system = (joint << self.ancilla_bits()) | ancilla;
        (system << self.sample_bits) | sample
    }

    fn system(&self) -> SystemLayout {
        SystemLayout { decision_bits: self.decision_bits, ancilla_bits: self.ancilla_bits(), dim: self.system_dim() }
    }
}

#[derive(Debug, Clone, Copy)]
struct SystemLayout {
    decision_bits: u32,
    ancilla_bits: u32,
    dim: usize,
}

impl SystemLayout {
    #[inline]
    fn joint(&self, i: usize) -> usize {
        i >> self.ancilla_bits
    }

    fn scenario_stride(&self) -> usize {
        1 << (self.decision_bits + self.ancilla_bits)
    }
}

/// Normalized complex amplitudes over a fixed [`Layout`].
#[derive(Clone, PartialEq)]
pub struct StateVector {
    layout: Layout,
    amplitudes: Vec<C>,
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateVector").field("layout", &self.layout).field("dim", &self.amplitudes.len()).finish()
    }
}

impl StateVector {
    /// |0…0⟩.
    pub fn zero(layout: Layout) -> Self {
        let mut amplitudes = vec![C::new(0.0, 0.0); layout.dim()];
        amplitudes[0] = C::new(1.0, 0.0);
        Self { layout, amplitudes }
    }

    pub fn from_amplitudes(layout: Layout, amplitudes: Vec<C>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::StateShape(format!(
                "{} amplitudes for a {}-dimensional layout",
                amplitudes.len(),
                layout.dim()
            )));
        }
        Ok(Self { layout, amplitudes })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amplitudes
    }

    pub fn amplitude(&self, scenario: usize, decision: usize, ancilla: usize, sample: usize) -> C {
        self.amplitudes[self.layout.index(scenario, decision, ancilla, sample)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn check_norm(&self, tol: f64) -> Result<()> {
        let drift = (self.norm_sqr().sqrt() - 1.0).abs();
        if drift > tol {
            return Err(Error::Consistency(format!("state norm drifted by {drift:.3e} (tolerance {tol:.0e})")));
        }
        Ok(())
    }

    pub fn inner(&self, other: &StateVector) -> C {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// Applies `op` to the system block of every sample value (or only those
    /// whose sample bit `control` is set).
    fn for_each_system_slice(&mut self, control: Option<u32>, mut op: impl FnMut(&mut [C])) {
        let m = self.layout.sample_bits;
        if m == 0 {
            if control.is_none() {
                op(&mut self.amplitudes);
            }
            return;
        }
        let samples = self.layout.sample_dim();
        let mut buffer = vec![C::new(0.0, 0.0); self.layout.system_dim()];
        for s in 0..samples {
            if let Some(bit) = control {
                if s >> bit & 1 == 0 {
                    continue;
                }
            }
            for (i, slot) in buffer.iter_mut().enumerate() {
                *slot = self.amplitudes[(i << m) | s];
            }
            op(&mut buffer);
            for (i, value) in buffer.iter().enumerate() {
                self.amplitudes[(i << m) | s] = *value;
            }
        }
    }

    /// S_+(α): reflection about |+⟩^c on the decision register only. Each
    /// slice with fixed (ξ, ancilla, sample) has its mean removed with weight
    /// (1 − e^{iα}). The scenario register is untouched.
    pub fn apply_mixer_reflection(&mut self, alpha: f64) {
        let sys = self.layout.system();
        let factor = C::new(1.0, 0.0) - C::from_polar(1.0, alpha);
        self.for_each_system_slice(None, |v| mixer(v, sys, factor));
    }

    pub fn negate(&mut self) {
        self.amplitudes.iter_mut().for_each(|a| *a = -*a);
    }

    /// Probability of each sample-register outcome, marginalizing everything
    /// else.
    pub fn sample_distribution(&self) -> Vec<f64> {
        let m = self.layout.sample_bits;
        let mut out = vec![0.0; self.layout.sample_dim()];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            out[idx & ((1 << m) - 1)] += a.norm_sqr();
        }
        out
    }

    /// Total probability carried by scenario ξ.
    pub fn scenario_mass(&self, scenario: usize) -> f64 {
        let block = self.layout.dim() >> self.layout.scenario_bits;
        self.amplitudes[scenario * block..(scenario + 1) * block].iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability of the mark ancilla reading 1.
    pub fn ancilla_one_probability(&self) -> Result<f64> {
        if !self.layout.mark_ancilla {
            return Err(Error::StateShape("state has no mark ancilla".into()));
        }
        let m = self.layout.sample_bits;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(idx, _)| (idx >> m) & 1 == 1)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Probability of (ξ, φ) with φ ∈ Φ*_ξ, per scenario, unnormalized.
    pub fn scenario_marked_mass(&self, marks: &MarkTable) -> Vec<f64> {
        let l = self.layout;
        let shift = l.ancilla_bits() + l.sample_bits;
        let mut out = vec![0.0; 1 << l.scenario_bits];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            let joint = idx >> shift;
            if marks.get(joint) {
                out[joint >> l.decision_bits] += a.norm_sqr();
            }
        }
        out
    }

    /// Inverse QFT on the sample register of every system slice.
    pub fn qft_inverse(&mut self) {
        self.sample_fourier(false);
    }

    pub fn qft(&mut self) {
        self.sample_fourier(true);
    }

    /// QFT†|s⟩ = M^{-1/2} Σ_d e^{−2πi·s·d/M}|d⟩, which is the unnormalized
    /// forward DFT; QFT uses the inverse DFT.
    fn sample_fourier(&mut self, forward_qft: bool) {
        let m = self.layout.sample_dim();
        if m == 1 {
            return;
        }
        let mut planner = FftPlanner::<f64>::new();
        let fft = if forward_qft { planner.plan_fft_inverse(m) } else { planner.plan_fft_forward(m) };
        let scale = 1.0 / (m as f64).sqrt();
        for block in self.amplitudes.chunks_exact_mut(m) {
            fft.process(block);
            block.iter_mut().for_each(|a| *a *= scale);
        }
    }

    /// Binary dump: magic, four little-endian u32 layout fields (b, c,
    /// ancilla, m), then interleaved little-endian f64 (re, im) pairs.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        for field in [
            self.layout.scenario_bits,
            self.layout.decision_bits,
            self.layout.mark_ancilla as u32,
            self.layout.sample_bits,
        ] {
            w.write_all(&field.to_le_bytes())?;
        }
        for a in &self.amplitudes {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::Parse("not a statevector dump".into()));
        }
        let mut fields = [0u32; 4];
        for f in &mut fields {
            let mut buf = [0u8; 4];
            r.read_exact(&mut buf)?;
            *f = u32::from_le_bytes(buf);
        }
        let layout = Layout::new(fields[0], fields[1], fields[2] == 1, fields[3])?;
        let mut amplitudes = Vec::with_capacity(layout.dim());
        let mut buf = [0u8; 16];
        for _ in 0..layout.dim() {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
            amplitudes.push(C::new(re, im));
        }
        Self::from_amplitudes(layout, amplitudes)
    }
}

fn mixer(v: &mut [C], sys: SystemLayout, factor: C) {
    let decisions = 1usize << sys.decision_bits;
    let stride = 1usize << sys.ancilla_bits;
    let block = sys.scenario_stride();
    for base in (0..sys.dim).step_by(block) {
        for anc in 0..stride {
            let mean = (0..decisions).map(|phi| v[base + (phi << sys.ancilla_bits) + anc]).sum::<C>()
                / decisions as f64;
            let shift = factor * mean;
            for phi in 0..decisions {
                v[base + (phi << sys.ancilla_bits) + anc] -= shift;
            }
        }
    }
}

fn target_phase(v: &mut [C], sys: SystemLayout, marks: &MarkTable, phase: C) {
    for (i, a) in v.iter_mut().enumerate() {
        if marks.get(sys.joint(i)) {
            *a *= phase;
        }
    }
}

/// U_f: flips the ancilla on marked (ξ, φ).
fn mark(v: &mut [C], sys: SystemLayout, marks: &MarkTable) {
    for i in (0..sys.dim).step_by(2) {
        if marks.get(i >> 1) {
            v.swap(i, i + 1);
        }
    }
}

/// I ⊗ −Z on the ancilla.
fn minus_z(v: &mut [C]) {
    for a in v.iter_mut().step_by(2) {
        *a = -*a;
    }
}

/// H^⊗c on the decision register.
fn hadamard_decision(v: &mut [C], sys: SystemLayout) {
    let norm = 1.0 / ((1usize << sys.decision_bits) as f64).sqrt();
    for bit in 0..sys.decision_bits {
        let h = 1usize << (bit + sys.ancilla_bits);
        for i in 0..sys.dim {
            if i & h == 0 {
                let (x, y) = (v[i], v[i | h]);
                v[i] = x + y;
                v[i | h] = x - y;
            }
        }
    }
    v.iter_mut().for_each(|a| *a *= norm);
}

/// Loads √p(ξ) onto the scenario register.
///
/// Realized as the Householder reflection taking |0⟩ to Σ √p(ξ)|ξ⟩. It is
/// real, symmetric and self-inverse, so the same transform serves as its
/// adjoint.
#[derive(Debug, Clone)]
pub struct StatePrep {
    amplitudes: Vec<f64>,
    /// w = e_0 − √p, scaled so that P = I − w wᵀ.
    reflector: Option<Vec<f64>>,
}

impl StatePrep {
    pub fn new(dist: &ScenarioDistribution) -> Self {
        let amplitudes = dist.amplitudes();
        let mut w: Vec<f64> = amplitudes.iter().map(|a| -a).collect();
        w[0] += 1.0;
        let norm_sqr: f64 = w.iter().map(|x| x * x).sum();
        let reflector = (norm_sqr > 1e-24).then(|| {
            let scale = (2.0 / norm_sqr).sqrt();
            w.iter().map(|x| x * scale).collect()
        });
        Self { amplitudes, reflector }
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    fn apply(&self, v: &mut [C], sys: SystemLayout) {
        let Some(w) = &self.reflector else { return };
        let stride = sys.scenario_stride();
        for offset in 0..stride {
            let dot: C = w.iter().enumerate().map(|(xi, &wx)| v[xi * stride + offset] * wx).sum();
            for (xi, &wx) in w.iter().enumerate() {
                v[xi * stride + offset] -= dot * wx;
            }
        }
    }
}

/// One traced operator application.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum TraceEntry {
    Prepare { ancilla: bool },
    TargetReflection { beta: f64 },
    MixerReflection { alpha: f64 },
    Grover { alpha: f64, beta: f64 },
    Search { iterations: usize },
    Mark,
    Qae { control: Option<u32> },
    PhaseEstimation { m: u32 },
    InverseQft,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEntry::Prepare { ancilla } => write!(f, "V{}", if *ancilla { " (+ancilla)" } else { "" }),
            TraceEntry::TargetReflection { beta } => write!(f, "S_Phi({beta:.6})"),
            TraceEntry::MixerReflection { alpha } => write!(f, "S_+({alpha:.6})"),
            TraceEntry::Grover { alpha, beta } => write!(f, "G({alpha:.6}, {beta:.6})"),
            TraceEntry::Search { iterations } => write!(f, "S_L (l={iterations})"),
            TraceEntry::Mark => write!(f, "U_f"),
            TraceEntry::Qae { control: Some(j) } => write!(f, "C{j}-Q"),
            TraceEntry::Qae { control: None } => write!(f, "Q"),
            TraceEntry::PhaseEstimation { m } => write!(f, "QPE (m={m})"),
            TraceEntry::InverseQft => write!(f, "QFT^-1"),
        }
    }
}

/// Append-only record of applied operators and the oracle calls they used.
#[derive(Debug, Clone, Default, Serialize)]
pub struct OperatorTrace {
    entries: Vec<TraceEntry>,
    oracle_calls: u64,
}

impl OperatorTrace {
    pub fn entries(&self) -> &[TraceEntry] {
        &self.entries
    }

    pub fn oracle_calls(&self) -> u64 {
        self.oracle_calls
    }
}

impl fmt::Display for OperatorTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.entries.iter().enumerate() {
            writeln!(f, "{i:>6}  {e}")?;
        }
        write!(f, "oracle calls: {}", self.oracle_calls)
    }
}

/// How controlled-𝒬^(2^j) is realized during phase estimation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpeMode {
    /// 2^j applications of controlled-𝒬 per sample qubit j, on the full
    /// statevector.
    #[default]
    Controlled,
    /// Computes 𝒬^s|ψ⟩ for each sample value s by repeated multiplication
    /// and writes the result into the s-th sample slice. Mathematically the
    /// same state as `Controlled` with O(M) instead of O(M²) slice updates.
    PowerSequence,
}

/// Exact phase-estimation outcome distribution.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseEstimate {
    pub m: u32,
    pub grid: usize,
    /// Pr[d] for d in 0..M.
    pub distribution: Vec<f64>,
    /// Ledger count for the whole estimation circuit.
    pub oracle_calls: u64,
    /// |‖ψ‖ − 1| of the final state.
    pub norm_drift: f64,
}

impl PhaseEstimate {
    /// ã = sin²(dπ/M).
    pub fn estimate(&self, d: usize) -> f64 {
        (d as f64 * PI / self.grid as f64).sin().powi(2)
    }

    /// Most likely outcome, ties broken toward smaller d.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (d, &p) in self.distribution.iter().enumerate() {
            if p > self.distribution[best] {
                best = d;
            }
        }
        best
    }

    /// Total probability of outcomes whose estimate lies within `radius` of
    /// `center`.
    pub fn mass_within(&self, center: f64, radius: f64) -> f64 {
        self.distribution
            .iter()
            .enumerate()
            .filter(|&(d, _)| (self.estimate(d) - center).abs() <= radius)
            .map(|(_, &p)| p)
            .sum()
    }

    /// Draws measurement outcomes from the exact distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, shots: usize) -> Vec<usize> {
        let mut cumulative = Vec::with_capacity(self.grid);
        let mut acc = 0.0;
        for &p in &self.distribution {
            acc += p;
            cumulative.push(acc);
        }
        (0..shots)
            .map(|_| {
                let u = rng.gen::<f64>() * acc;
                cumulative.partition_point(|&c| c <= u).min(self.grid - 1)
            })
            .collect()
    }
}

/// Applies oracle-dependent operators and keeps the query ledger.
///
/// U_f is simulated from the oracle's truth table; each logical use charges
/// the oracle's call counter and the trace, matching the black-box model:
/// S_Φ costs 2 calls (compute, phase, uncompute), U_f costs 1.
pub struct Engine<'a> {
    oracle: &'a Oracle,
    marks: MarkTable,
    prep: StatePrep,
    trace: OperatorTrace,
    record: bool,
}

impl<'a> Engine<'a> {
    pub fn new(oracle: &'a Oracle, dist: &ScenarioDistribution) -> Result<Self> {
        if oracle.scenario_bits() != dist.scenario_bits() {
            return Err(Error::Input(format!(
                "oracle has {} scenario bits, distribution has {}",
                oracle.scenario_bits(),
                dist.scenario_bits()
            )));
        }
        Ok(Self { oracle, marks: oracle.mark_table(), prep: StatePrep::new(dist), trace: OperatorTrace::default(), record: true })
    }

    /// Stops appending per-operator entries (oracle calls are still counted).
    pub fn quiet(mut self) -> Self {
        self.record = false;
        self
    }

    pub fn trace(&self) -> &OperatorTrace {
        &self.trace
    }

    pub fn marks(&self) -> &MarkTable {
        &self.marks
    }

    pub fn oracle(&self) -> &Oracle {
        self.oracle
    }

    fn push(&mut self, entry: TraceEntry) {
        if self.record {
            self.trace.entries.push(entry);
        }
    }

    fn charge(&mut self, calls: u64) {
        self.trace.oracle_calls += calls;
        self.oracle.record_calls(calls);
    }

    fn layout(&self, mark_ancilla: bool, sample_bits: u32) -> Result<Layout> {
        Layout::new(self.oracle.scenario_bits(), self.oracle.decision_bits(), mark_ancilla, sample_bits)
    }

    /// V|0⟩ = Σ_ξ √p(ξ)|ξ⟩ ⊗ |+⟩^c, with the ancilla (if requested) in |0⟩.
    pub fn prepare_initial(&mut self, mark_ancilla: bool) -> Result<StateVector> {
        let layout = self.layout(mark_ancilla, 0)?;
        let mut state = StateVector::zero(layout);
        let sys = layout.system();
        hadamard_decision(&mut state.amplitudes, sys);
        self.prep.apply(&mut state.amplitudes, sys);
        self.push(TraceEntry::Prepare { ancilla: mark_ancilla });
        Ok(state)
    }

    fn check_layout(&self, state: &StateVector) -> Result<()> {
        let l = state.layout;
        if l.scenario_bits != self.oracle.scenario_bits() || l.decision_bits != self.oracle.decision_bits() {
            return Err(Error::StateShape(format!(
                "state registers (b={}, c={}) do not match the oracle (b={}, c={})",
                l.scenario_bits,
                l.decision_bits,
                self.oracle.scenario_bits(),
                self.oracle.decision_bits()
            )));
        }
        Ok(())
    }

    /// S_Φ(β) = U_f Z(β) U_f: marked (ξ, φ) pick up e^{−iβ}.
    ///
    /// The Z(β) phase uses its own scratch qubit that is returned to |0⟩, so
    /// the operator is diagonal on (ξ, φ) regardless of the mark ancilla.
    pub fn apply_target_reflection(&mut self, state: &mut StateVector, beta: f64) -> Result<()> {
        self.check_layout(state)?;
        let sys = state.layout.system();
        let phase = C::from_polar(1.0, -beta);
        let marks = &self.marks;
        state.for_each_system_slice(None, |v| target_phase(v, sys, marks, phase));
        self.charge(2);
        self.push(TraceEntry::TargetReflection { beta });
        Ok(())
    }

    pub fn apply_mixer_reflection(&mut self, state: &mut StateVector, alpha: f64) -> Result<()> {
        self.check_layout(state)?;
        state.apply_mixer_reflection(alpha);
        self.push(TraceEntry::MixerReflection { alpha });
        Ok(())
    }

    /// G(α, β) = −S_+(α)·S_Φ(β).
    pub fn apply_grover(&mut self, state: &mut StateVector, alpha: f64, beta: f64) -> Result<()> {
        self.check_layout(state)?;
        let sys = state.layout.system();
        let phase = C::from_polar(1.0, -beta);
        let factor = C::new(1.0, 0.0) - C::from_polar(1.0, alpha);
        let marks = &self.marks;
        state.for_each_system_slice(None, |v| grover(v, sys, marks, phase, factor));
        self.charge(2);
        self.push(TraceEntry::Grover { alpha, beta });
        Ok(())
    }

    /// 𝒮_L = G(α_l, β_l)···G(α_1, β_1), G(α_1, β_1) applied first.
    pub fn run_search(&mut self, state: &mut StateVector, schedule: &AngleSchedule) -> Result<()> {
        self.check_layout(state)?;
        for (alpha, beta) in schedule.pairs() {
            self.apply_grover(state, alpha, beta)?;
        }
        self.push(TraceEntry::Search { iterations: schedule.iterations() });
        state.check_norm(NORM_TOL * (1 + schedule.iterations()) as f64)
    }

    /// U_f on the mark ancilla.
    pub fn apply_oracle_mark(&mut self, state: &mut StateVector) -> Result<()> {
        self.check_layout(state)?;
        if !state.layout.mark_ancilla {
            return Err(Error::StateShape("U_f needs the mark ancilla".into()));
        }
        let sys = state.layout.system();
        let marks = &self.marks;
        state.for_each_system_slice(None, |v| mark(v, sys, marks));
        self.charge(1);
        self.push(TraceEntry::Mark);
        Ok(())
    }

    /// Oracle calls charged by one 𝒜 or 𝒜†.
    fn calls_per_a(schedule: &AngleSchedule) -> u64 {
        2 * schedule.iterations() as u64 + 1
    }

    /// 𝒜 = U_f·𝒮_L·V on a system slice.
    fn apply_a(&self, v: &mut [C], sys: SystemLayout, schedule: &AngleSchedule) {
        hadamard_decision(v, sys);
        self.prep.apply(v, sys);
        for (alpha, beta) in schedule.pairs() {
            grover(v, sys, &self.marks, C::from_polar(1.0, -beta), C::new(1.0, 0.0) - C::from_polar(1.0, alpha));
        }
        mark(v, sys, &self.marks);
    }

    /// 𝒜† = V†·𝒮_L†·U_f: reverse order, negate every angle.
    fn apply_a_adjoint(&self, v: &mut [C], sys: SystemLayout, schedule: &AngleSchedule) {
        mark(v, sys, &self.marks);
        for (alpha, beta) in schedule.pairs().rev() {
            // G(α, β)† = −S_Φ(−β)·S_+(−α)
            mixer(v, sys, C::new(1.0, 0.0) - C::from_polar(1.0, -alpha));
            target_phase(v, sys, &self.marks, C::from_polar(1.0, beta));
            v.iter_mut().for_each(|a| *a = -*a);
        }
        self.prep.apply(v, sys);
        hadamard_decision(v, sys);
    }

    /// 𝒬 = 𝒜(I − 2|0⟩⟨0|)𝒜†(I ⊗ −Z) on a system slice.
    fn apply_q(&self, v: &mut [C], sys: SystemLayout, schedule: &AngleSchedule) {
        minus_z(v);
        self.apply_a_adjoint(v, sys, schedule);
        v[0] = -v[0];
        self.apply_a(v, sys, schedule);
    }

    /// Prepares 𝒜|0⟩ on a state with the mark ancilla.
    pub fn prepare_marked(&mut self, schedule: &AngleSchedule) -> Result<StateVector> {
        let mut state = self.prepare_initial(true)?;
        self.run_search(&mut state, schedule)?;
        self.apply_oracle_mark(&mut state)?;
        Ok(state)
    }

    /// One application of 𝒬 to every system slice, or, with `control`, only
    /// to the slices whose sample bit `control` is 1.
    pub fn apply_qae_operator(
        &mut self,
        state: &mut StateVector,
        schedule: &AngleSchedule,
        control: Option<u32>,
    ) -> Result<()> {
        self.check_layout(state)?;
        if !state.layout.mark_ancilla {
            return Err(Error::StateShape("𝒬 needs the mark ancilla".into()));
        }
        if let Some(j) = control {
            if j >= state.layout.sample_bits {
                return Err(Error::StateShape(format!("no sample qubit {j}")));
            }
        }
        let sys = state.layout.system();
        let this = &*self;
        state.for_each_system_slice(control, |v| this.apply_q(v, sys, schedule));
        self.charge(2 * Self::calls_per_a(schedule));
        self.push(TraceEntry::Qae { control });
        Ok(())
    }

    /// Phase estimation of 𝒬 with an m-qubit sample register, returning the
    /// exact outcome distribution of the sample register.
    pub fn phase_estimation(&mut self, schedule: &AngleSchedule, m: u32, mode: QpeMode) -> Result<PhaseEstimate> {
        if m == 0 {
            return Err(Error::Input("phase estimation needs m >= 1".into()));
        }
        let layout = self.layout(true, m)?;
        let start_calls = self.trace.oracle_calls;
        self.push(TraceEntry::PhaseEstimation { m });
        let system = self.prepare_marked(schedule)?;
        let samples = layout.sample_dim();
        let scale = 1.0 / (samples as f64).sqrt();
        let sys = layout.system();
        let mut amplitudes = vec![C::new(0.0, 0.0); layout.dim()];

        let state = match mode {
            QpeMode::Controlled => {
                // |ψ⟩ ⊗ H^m|0⟩
                for (i, a) in system.amplitudes.iter().enumerate() {
                    for s in 0..samples {
                        amplitudes[(i << m) | s] = *a * scale;
                    }
                }
                let mut state = StateVector { layout, amplitudes };
                for j in 0..m {
                    for _ in 0..1usize << j {
                        self.apply_qae_operator(&mut state, schedule, Some(j))?;
                    }
                }
                state
            }
            QpeMode::PowerSequence => {
                let mut current = system.amplitudes.clone();
                for s in 0..samples {
                    if s > 0 {
                        self.apply_q(&mut current, sys, schedule);
                    }
                    for (i, a) in current.iter().enumerate() {
                        amplitudes[(i << m) | s] = *a * scale;
                    }
                }
                // same logical circuit: M − 1 controlled-𝒬 applications
                let per_q = 2 * Self::calls_per_a(schedule);
                for j in 0..m {
                    for _ in 0..1usize << j {
                        self.charge(per_q);
                        self.push(TraceEntry::Qae { control: Some(j) });
                    }
                }
                StateVector { layout, amplitudes }
            }
        };
        let mut state = state;
        state.qft_inverse();
        self.push(TraceEntry::InverseQft);
        let norm_drift = (state.norm_sqr().sqrt() - 1.0).abs();
        state.check_norm(1e-7)?;
        Ok(PhaseEstimate {
            m,
            grid: samples,
            distribution: state.sample_distribution(),
            oracle_calls: self.trace.oracle_calls - start_calls,
            norm_drift,
        })
    }

    /// Dense matrix of 𝒬 on the system register (b + c + 1 qubits), column
    /// by column. Only for small test instances.
    pub fn dense_qae_matrix(&self, schedule: &AngleSchedule) -> Result<Vec<Vec<C>>> {
        let layout = self.layout(true, 0)?;
        if layout.scenario_bits + layout.decision_bits > 6 {
            return Err(Error::Capacity("dense 𝒬 is limited to b + c <= 6".into()));
        }
        let sys = layout.system();
        let dim = layout.system_dim();
        Ok((0..dim)
            .map(|col| {
                let mut v = vec![C::new(0.0, 0.0); dim];
                v[col] = C::new(1.0, 0.0);
                self.apply_q(&mut v, sys, schedule);
                v
            })
            .collect())
    }

    /// 𝒜|0⟩ and 𝒜†|0⟩ without touching the ledger, for cross-checks.
    pub fn a_columns(&self, schedule: &AngleSchedule) -> Result<(Vec<C>, Vec<C>)> {
        let layout = self.layout(true, 0)?;
        let sys = layout.system();
        let mut forward = StateVector::zero(layout).amplitudes;
        self.apply_a(&mut forward, sys, schedule);
        let mut backward = StateVector::zero(layout).amplitudes;
        self.apply_a_adjoint(&mut backward, sys, schedule);
        Ok((forward, backward))
    }

    /// 𝒬 applied to an arbitrary system vector, without touching the ledger.
    pub fn apply_q_raw(&self, v: &mut [C], schedule: &AngleSchedule) -> Result<()> {
        let layout = self.layout(true, 0)?;
        if v.len() != layout.system_dim() {
            return Err(Error::StateShape("vector length does not match the system register".into()));
        }
        self.apply_q(v, layout.system(), schedule);
        Ok(())
    }
}

fn grover(v: &mut [C], sys: SystemLayout, marks: &MarkTable, phase: C, factor: C) {
    target_phase(v, sys, marks, phase);
    mixer(v, sys, factor);
    v.iter_mut().for_each(|a| *a = -*a);
}

/// Per-scenario success Σ_{φ∈Φ*_ξ}|amp|² / p(ξ); `None` where p(ξ) = 0.
pub fn scenario_success(state: &StateVector, marks: &MarkTable, dist: &ScenarioDistribution) -> Vec<Option<f64>> {
    state
        .scenario_marked_mass(marks)
        .into_iter()
        .zip(dist.probabilities())
        .map(|(mass, &p)| (p > 0.0).then(|| mass / p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::success_probability;

    fn close(a: C, b: C, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn prepare_examples() {
        let f = Oracle::constant(1, 1, false).unwrap();
        let mut e = Engine::new(&f, &ScenarioDistribution::uniform(1).unwrap()).unwrap();
        let s = e.prepare_initial(false).unwrap();
        assert!(s.amplitudes().iter().all(|a| close(*a, C::new(0.5, 0.0), 1e-15)));

        let f = Oracle::constant(2, 1, false).unwrap();
        let mut e = Engine::new(&f, &ScenarioDistribution::point_mass(2, 2).unwrap()).unwrap();
        let s = e.prepare_initial(true).unwrap();
        let h = 1.0 / 2f64.sqrt();
        for xi in 0..4 {
            for phi in 0..2 {
                let want = if xi == 2 { h } else { 0.0 };
                assert!(close(s.amplitude(xi, phi, 0, 0), C::new(want, 0.0), 1e-12));
                assert_eq!(s.amplitude(xi, phi, 1, 0), C::new(0.0, 0.0));
            }
        }

        let f = Oracle::constant(1, 2, false).unwrap();
        let mut e = Engine::new(&f, &ScenarioDistribution::explicit(vec![0.36, 0.64]).unwrap()).unwrap();
        let s = e.prepare_initial(false).unwrap();
        for phi in 0..4 {
            assert!(close(s.amplitude(1, phi, 0, 0), C::new(0.4, 0.0), 1e-12));
            assert!(close(s.amplitude(0, phi, 0, 0), C::new(0.3, 0.0), 1e-12));
        }
    }

    #[test]
    fn capacity_limit() {
        assert!(matches!(Layout::new(12, 12, true, 2), Err(Error::Capacity(_))));
        assert!(Layout::new(12, 12, true, 1).is_ok());
    }

    #[test]
    fn target_reflection_phases() {
        let f = Oracle::threshold(3, 3, 2.0, 1.0).unwrap();
        let d = ScenarioDistribution::uniform(3).unwrap();
        let mut e = Engine::new(&f, &d).unwrap();
        let start = e.prepare_initial(true).unwrap();

        let mut s = start.clone();
        e.apply_target_reflection(&mut s, 0.0).unwrap();
        assert_eq!(s, start);

        for beta in [PI, PI / 2.0] {
            let mut s = start.clone();
            e.apply_target_reflection(&mut s, beta).unwrap();
            for xi in 0..8 {
                for phi in 0..8 {
                    let expect = if xi as f64 / 2.0 - 1.0 > phi as f64 {
                        start.amplitude(xi, phi, 0, 0) * C::from_polar(1.0, -beta)
                    } else {
                        start.amplitude(xi, phi, 0, 0)
                    };
                    assert!(close(s.amplitude(xi, phi, 0, 0), expect, 1e-14));
                }
            }
        }
        assert_eq!(e.trace().oracle_calls(), 6);
        assert_eq!(f.calls(), 6);
    }

    #[test]
    fn mixer_examples() {
        let f = Oracle::constant(1, 2, false).unwrap();
        let mut e = Engine::new(&f, &ScenarioDistribution::uniform(1).unwrap()).unwrap();
        let start = e.prepare_initial(false).unwrap();
        let mut s = start.clone();
        s.apply_mixer_reflection(0.0);
        assert_eq!(s, start);
        s.apply_mixer_reflection(PI);
        for (a, b) in s.amplitudes().iter().zip(start.amplitudes()) {
            assert!(close(*a, -*b, 1e-15));
        }
        // (1, -1, 1, -1)/2 on ξ = 0 is orthogonal to |+⟩^2
        let layout = start.layout();
        let mut amps = vec![C::new(0.0, 0.0); 8];
        for phi in 0..4 {
            amps[layout.index(0, phi, 0, 0)] = C::new(if phi % 2 == 0 { 0.5 } else { -0.5 }, 0.0);
        }
        let orth = StateVector::from_amplitudes(layout, amps).unwrap();
        let mut s = orth.clone();
        s.apply_mixer_reflection(PI);
        for (a, b) in s.amplitudes().iter().zip(orth.amplitudes()) {
            assert!(close(*a, *b, 1e-15));
        }
    }

    #[test]
    fn search_matches_closed_form() {
        let f = Oracle::planted(3, 3, 5, 0.3).unwrap();
        let d = ScenarioDistribution::uniform(3).unwrap();
        let mut e = Engine::new(&f, &d).unwrap();
        for l in 0..8 {
            for delta in [0.1, 0.3, 0.5] {
                let schedule = AngleSchedule::new(l, delta).unwrap();
                let mut s = e.prepare_initial(false).unwrap();
                e.run_search(&mut s, &schedule).unwrap();
                let success = scenario_success(&s, e.marks(), &d);
                let table = f.planted_table().unwrap();
                for (xi, got) in success.iter().enumerate() {
                    let lambda = table.marked_count(xi) as f64 / 8.0;
                    let want = success_probability(schedule.depth(), delta, lambda).unwrap();
                    assert!((got.unwrap() - want).abs() < 1e-10, "l={l} δ={delta} ξ={xi}");
                }
            }
        }
    }

    #[test]
    fn mark_examples() {
        let d = ScenarioDistribution::uniform(2).unwrap();
        for bit in [false, true] {
            let f = Oracle::constant(2, 2, bit).unwrap();
            let mut e = Engine::new(&f, &d).unwrap();
            let mut s = e.prepare_initial(true).unwrap();
            e.apply_oracle_mark(&mut s).unwrap();
            let a = s.ancilla_one_probability().unwrap();
            assert!((a - if bit { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
        let f = Oracle::constant(2, 2, true).unwrap();
        let mut e = Engine::new(&f, &d).unwrap();
        let mut s = e.prepare_initial(false).unwrap();
        assert!(matches!(e.apply_oracle_mark(&mut s), Err(Error::StateShape(_))));
    }

    #[test]
    fn qft_examples() {
        let layout = Layout::new(1, 1, false, 3).unwrap();
        let mut s = StateVector::zero(layout);
        s.qft_inverse();
        for a in s.amplitudes().iter().take(8) {
            assert!(close(*a, C::new(1.0 / 8f64.sqrt(), 0.0), 1e-14));
        }
        // m = 1 is a Hadamard
        let layout = Layout::new(1, 1, false, 1).unwrap();
        let mut s = StateVector::zero(layout);
        s.amplitudes[1] = C::new(1.0, 0.0);
        s.amplitudes[0] = C::new(0.0, 0.0);
        s.qft_inverse();
        let h = 1.0 / 2f64.sqrt();
        assert!(close(s.amplitudes()[0], C::new(h, 0.0), 1e-15));
        assert!(close(s.amplitudes()[1], C::new(-h, 0.0), 1e-15));
    }

    #[test]
    fn qft_round_trip() {
        let layout = Layout::new(1, 1, false, 4).unwrap();
        let amps: Vec<C> = (0..layout.dim()).map(|i| C::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let amps: Vec<C> = amps.into_iter().map(|a| a / norm).collect();
        let s0 = StateVector::from_amplitudes(layout, amps).unwrap();
        let mut s = s0.clone();
        s.qft();
        s.qft_inverse();
        for (a, b) in s.amplitudes().iter().zip(s0.amplitudes()) {
            assert!(close(*a, *b, 1e-10));
        }
    }

    #[test]
    fn dump_round_trip() {
        let f = Oracle::planted(2, 2, 1, 0.5).unwrap();
        let d = ScenarioDistribution::explicit(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mut e = Engine::new(&f, &d).unwrap();
        let s = e.prepare_marked(&AngleSchedule::new(2, 0.3).unwrap()).unwrap();
        let mut bytes = Vec::new();
        s.write_dump(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 8 + 16 + 16 * s.layout().dim());
        assert_eq!(StateVector::read_dump(&bytes[..]).unwrap(), s);
        assert!(StateVector::read_dump(&b"garbage-data"[..]).is_err());
    }

    #[test]
    fn trace_prints() {
        let f = Oracle::constant(1, 1, true).unwrap();
        let mut e = Engine::new(&f, &ScenarioDistribution::uniform(1).unwrap()).unwrap();
        let mut s = e.prepare_initial(true).unwrap();
        e.run_search(&mut s, &AngleSchedule::new(1, 0.3).unwrap()).unwrap();
        e.apply_oracle_mark(&mut s).unwrap();
        let text = e.trace().to_string();
        assert!(text.contains("G(") && text.contains("U_f") && text.ends_with("oracle calls: 3"));
    }
}
