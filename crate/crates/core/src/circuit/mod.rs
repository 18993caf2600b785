//! Circuit intermediate representation.
//!
//! A [`Circuit`] is a flat list of [`Instruction`]s over integer qubit ids, with
//! optional rational coordinates per qubit and a free-form metadata map. The
//! text form (see [`text`]) is one instruction per line and round-trips
//! exactly through [`Circuit::parse`] / [`Circuit::to_text`].

mod compile;
mod noise;
pub mod text;

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Rational64;
use thiserror::Error;

pub use compile::compile_3q;
pub use noise::{apply_erasure, apply_noise, NoiseModel, NoiseParams};

/// Errors raised while parsing or validating a circuit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{gate} expects targets in groups of {arity}, got {got}")]
    Arity { gate: String, arity: usize, got: usize },
    #[error("{gate}: qubit {qubit} repeated inside one target group")]
    RepeatedTarget { gate: String, qubit: u32 },
    #[error("probability {p} out of range for {what}")]
    Probability { what: String, p: f64 },
    #[error("record lookback rec[-{lookback}] with only {available} measurements so far")]
    DanglingRecord { lookback: u32, available: usize },
    #[error("MERR on qubit {0} which has not been measured yet")]
    DanglingMeasurementError(u32),
    #[error("duplicate coordinate ({0}) for qubits {1} and {2}")]
    DuplicateCoord(Coord, u32, u32),
    #[error("qubit {qubit} used twice within one tick (instruction {index})")]
    SliceConflict { qubit: u32, index: usize },
    #[error("circuit already contains noise")]
    NoiseAlreadyPresent,
}

/// A rational lattice coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coord {
    pub x: Rational64,
    pub y: Rational64,
}

impl Coord {
    pub fn new(x: i64, y: i64) -> Self {
        Coord {
            x: Rational64::from_integer(x),
            y: Rational64::from_integer(y),
        }
    }

    pub fn from_ratios(x: Rational64, y: Rational64) -> Self {
        Coord { x, y }
    }

    /// Integer coordinates, if both components are integral.
    pub fn as_int(&self) -> Option<(i64, i64)> {
        if self.x.is_integer() && self.y.is_integer() {
            Some((self.x.to_integer(), self.y.to_integer()))
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (
            *self.x.numer() as f64 / *self.x.denom() as f64,
            *self.y.numer() as f64 / *self.y.denom() as f64,
        )
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}", self.x, self.y)
    }
}

/// Single-qubit Pauli.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// (x, z) symplectic bits.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    /// Pauli with index 0..4 in the order I, X, Y, Z.
    pub fn from_index(i: usize) -> Self {
        [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][i & 3]
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Measurement / reset basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    X,
    Z,
}

/// Unitary gates. Controlled gates list the control first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gate {
    I,
    X,
    Y,
    Z,
    H,
    S,
    SDag,
    SqrtX,
    SqrtXDag,
    /// (X + Y)/sqrt(2)
    HXY,
    /// (X - Y)/sqrt(2)
    HNXY,
    T,
    TDag,
    /// exp(-i pi/8 X) up to phase: H T H.
    TX,
    CX,
    CY,
    CZ,
    Swap,
    CH,
    CHXY,
    CHNXY,
    /// Controlled identity; a placeholder that keeps two-qubit noise support.
    CI,
    CCZ,
    CCX,
    CSwap,
    /// Controlled (SWAP * H (x) H).
    CSwapH,
    /// Control X on both targets.
    CXX,
    /// Control X on the first target only.
    CXI,
    /// Three-qubit identity placeholder.
    CII,
}

pub const ALL_GATES: [Gate; 29] = [
    Gate::I,
    Gate::X,
    Gate::Y,
    Gate::Z,
    Gate::H,
    Gate::S,
    Gate::SDag,
    Gate::SqrtX,
    Gate::SqrtXDag,
    Gate::HXY,
    Gate::HNXY,
    Gate::T,
    Gate::TDag,
    Gate::TX,
    Gate::CX,
    Gate::CY,
    Gate::CZ,
    Gate::Swap,
    Gate::CH,
    Gate::CHXY,
    Gate::CHNXY,
    Gate::CI,
    Gate::CCZ,
    Gate::CCX,
    Gate::CSwap,
    Gate::CSwapH,
    Gate::CXX,
    Gate::CXI,
    Gate::CII,
];

impl Gate {
    pub fn name(self) -> &'static str {
        match self {
            Gate::I => "I",
            Gate::X => "X",
            Gate::Y => "Y",
            Gate::Z => "Z",
            Gate::H => "H",
            Gate::S => "S",
            Gate::SDag => "S_DAG",
            Gate::SqrtX => "SQRT_X",
            Gate::SqrtXDag => "SQRT_X_DAG",
            Gate::HXY => "H_XY",
            Gate::HNXY => "H_NXY",
            Gate::T => "T",
            Gate::TDag => "T_DAG",
            Gate::TX => "T_X",
            Gate::CX => "CX",
            Gate::CY => "CY",
            Gate::CZ => "CZ",
            Gate::Swap => "SWAP",
            Gate::CH => "CH",
            Gate::CHXY => "CH_XY",
            Gate::CHNXY => "CH_NXY",
            Gate::CI => "CI",
            Gate::CCZ => "CCZ",
            Gate::CCX => "CCX",
            Gate::CSwap => "CSWAP",
            Gate::CSwapH => "CSWAP_H",
            Gate::CXX => "CXX",
            Gate::CXI => "CXI",
            Gate::CII => "CII",
        }
    }

    pub fn from_name(s: &str) -> Option<Gate> {
        ALL_GATES.iter().copied().find(|g| g.name() == s)
    }

    pub fn arity(self) -> usize {
        use Gate::*;
        match self {
            I | X | Y | Z | H | S | SDag | SqrtX | SqrtXDag | HXY | HNXY | T | TDag | TX => 1,
            CX | CY | CZ | Swap | CH | CHXY | CHNXY | CI => 2,
            CCZ | CCX | CSwap | CSwapH | CXX | CXI | CII => 3,
        }
    }

    pub fn is_clifford(self) -> bool {
        use Gate::*;
        !matches!(
            self,
            T | TDag | TX | CH | CHXY | CHNXY | CCZ | CCX | CSwap | CSwapH
        )
    }
}

/// Noise channels. Probabilities follow the usual conventions: `Dep*` pick a
/// uniformly random non-identity Pauli on the group with total probability
/// p; `Erase*` herald a flag with probability p and then apply a uniformly
/// random Pauli (identity included) on the group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Channel {
    Dep1,
    Dep2,
    Dep3,
    XErr,
    ZErr,
    /// Flip the most recent measurement result of the target.
    MErr,
    Erase1,
    Erase2,
    Erase3,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Dep1 => "DEP1",
            Channel::Dep2 => "DEP2",
            Channel::Dep3 => "DEP3",
            Channel::XErr => "XERR",
            Channel::ZErr => "ZERR",
            Channel::MErr => "MERR",
            Channel::Erase1 => "ERASE1",
            Channel::Erase2 => "ERASE2",
            Channel::Erase3 => "ERASE3",
        }
    }

    pub fn from_name(s: &str) -> Option<Channel> {
        use Channel::*;
        [Dep1, Dep2, Dep3, XErr, ZErr, MErr, Erase1, Erase2, Erase3]
            .into_iter()
            .find(|c| c.name() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            Channel::Dep2 | Channel::Erase2 => 2,
            Channel::Dep3 | Channel::Erase3 => 3,
            _ => 1,
        }
    }

    pub fn is_erasure(self) -> bool {
        matches!(self, Channel::Erase1 | Channel::Erase2 | Channel::Erase3)
    }
}

/// How a detector participates in post-processing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    /// Passed to the decoder.
    Soft,
    /// Any firing discards the shot.
    PostSelect,
    /// Any firing discards the shot, but the rejection is reported separately
    /// (an expected, non-fault rejection such as a probabilistic projection).
    Herald,
}

impl DetectorKind {
    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Soft => "DETECTOR",
            DetectorKind::PostSelect => "DETECTOR_PS",
            DetectorKind::Herald => "DETECTOR_HERALD",
        }
    }

    pub fn discards(self) -> bool {
        !matches!(self, DetectorKind::Soft)
    }
}

pub type PauliTerm = (Pauli, u32);

#[derive(Clone, Debug, PartialEq)]
pub enum Instruction {
    Gate {
        gate: Gate,
        targets: Vec<u32>,
    },
    Reset {
        basis: Basis,
        targets: Vec<u32>,
    },
    /// Single-qubit measurement; `reset` re-prepares the measured eigenstate
    /// |0> or |+> afterwards.
    Measure {
        basis: Basis,
        reset: bool,
        targets: Vec<u32>,
    },
    /// Ideal (never noised) Pauli-product measurements, one record each.
    Mpp {
        products: Vec<Vec<PauliTerm>>,
    },
    Noise {
        channel: Channel,
        p: f64,
        targets: Vec<u32>,
    },
    /// Apply the whole Pauli product with probability p.
    Correlated {
        p: f64,
        paulis: Vec<PauliTerm>,
    },
    /// Classically controlled Pauli: apply `pauli` on the target when the
    /// referenced record is 1. Pairs are (lookback, target).
    Feedback {
        pauli: Pauli,
        pairs: Vec<(u32, u32)>,
    },
    Detector {
        kind: DetectorKind,
        coords: Vec<f64>,
        records: Vec<u32>,
    },
    Observable {
        index: u32,
        records: Vec<u32>,
    },
    Tick,
}

impl Instruction {
    /// Qubits acted on as operations (not annotations). Used for time-slice
    /// exclusivity and liveness.
    pub fn op_qubits(&self) -> Vec<u32> {
        match self {
            Instruction::Gate { targets, .. }
            | Instruction::Reset { targets, .. }
            | Instruction::Measure { targets, .. } => targets.clone(),
            Instruction::Mpp { products } => products
                .iter()
                .flat_map(|p| p.iter().map(|t| t.1))
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn measurement_count(&self) -> usize {
        match self {
            Instruction::Measure { targets, .. } => targets.len(),
            Instruction::Mpp { products } => products.len(),
            _ => 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    /// Coordinates indexed by qubit id; `None` for qubits never given one.
    pub coords: Vec<Option<Coord>>,
    pub meta: BTreeMap<String, String>,
    pub instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Circuit, CircuitError> {
        text::parse(text)
    }

    pub fn to_text(&self) -> String {
        text::serialize(self)
    }

    pub fn push(&mut self, inst: Instruction) {
        self.touch(&inst);
        self.instructions.push(inst);
    }

    fn touch(&mut self, inst: &Instruction) {
        let mut max = None;
        let mut see = |q: u32| max = Some(max.map_or(q, |m: u32| m.max(q)));
        match inst {
            Instruction::Noise { targets, .. } => targets.iter().for_each(|&q| see(q)),
            Instruction::Correlated { paulis, .. } => paulis.iter().for_each(|t| see(t.1)),
            Instruction::Feedback { pairs, .. } => pairs.iter().for_each(|t| see(t.1)),
            other => other.op_qubits().into_iter().for_each(see),
        }
        if let Some(m) = max {
            if self.coords.len() <= m as usize {
                self.coords.resize(m as usize + 1, None);
            }
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.coords.len()
    }

    pub fn num_measurements(&self) -> usize {
        self.instructions.iter().map(|i| i.measurement_count()).sum()
    }

    pub fn num_detectors(&self) -> usize {
        self.detector_kinds().len()
    }

    pub fn detector_kinds(&self) -> Vec<DetectorKind> {
        self.instructions
            .iter()
            .filter_map(|i| match i {
                Instruction::Detector { kind, .. } => Some(*kind),
                _ => None,
            })
            .collect()
    }

    pub fn num_observables(&self) -> usize {
        self.instructions
            .iter()
            .filter_map(|i| match i {
                Instruction::Observable { index, .. } => Some(*index as usize + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn num_ticks(&self) -> usize {
        self.instructions
            .iter()
            .filter(|i| matches!(i, Instruction::Tick))
            .count()
    }

    /// Number of operations (target groups) matching a text mnemonic, e.g.
    /// `count("CX")` or `count("DEP2")`. Annotations count one per line.
    pub fn count(&self, name: &str) -> usize {
        let mut n = 0;
        for inst in &self.instructions {
            n += match inst {
                Instruction::Gate { gate, targets } if gate.name() == name => {
                    targets.len() / gate.arity()
                }
                Instruction::Reset { basis, targets } if text::reset_name(*basis) == name => {
                    targets.len()
                }
                Instruction::Measure {
                    basis,
                    reset,
                    targets,
                } if text::measure_name(*basis, *reset) == name => targets.len(),
                Instruction::Mpp { products } if name == "MPP" => products.len(),
                Instruction::Noise {
                    channel, targets, ..
                } if channel.name() == name => targets.len() / channel.arity(),
                Instruction::Correlated { .. } if name == "E" => 1,
                Instruction::Feedback { pairs, pauli } if text::feedback_name(*pauli) == name => {
                    pairs.len()
                }
                Instruction::Detector { kind, .. } if kind.name() == name => 1,
                Instruction::Observable { .. } if name == "OBSERVABLE_INCLUDE" => 1,
                Instruction::Tick if name == "TICK" => 1,
                _ => 0,
            };
        }
        n
    }

    pub fn is_clifford(&self) -> bool {
        self.instructions.iter().all(|i| match i {
            Instruction::Gate { gate, .. } => gate.is_clifford(),
            _ => true,
        })
    }

    pub fn has_noise(&self) -> bool {
        // Correlated channels are protocol-level coins (input flips, the CX
        // proxy's logical Z), not physical noise.
        self.instructions
            .iter()
            .any(|i| matches!(i, Instruction::Noise { .. }))
    }

    /// Structural validation: arities, repeated targets, probability ranges,
    /// record references, unique coordinates.
    pub fn validate(&self) -> Result<(), CircuitError> {
        let mut seen: BTreeMap<Coord, u32> = BTreeMap::new();
        for (q, c) in self.coords.iter().enumerate() {
            if let Some(c) = c {
                if let Some(prev) = seen.insert(*c, q as u32) {
                    return Err(CircuitError::DuplicateCoord(*c, prev, q as u32));
                }
            }
        }
        let mut chk = Checker::default();
        for inst in &self.instructions {
            chk.check(inst)?;
        }
        Ok(())
    }

    /// Checks that no qubit is operated on twice between consecutive ticks.
    pub fn validate_time_slices(&self) -> Result<(), CircuitError> {
        let mut used = std::collections::HashSet::new();
        for (index, inst) in self.instructions.iter().enumerate() {
            if matches!(inst, Instruction::Tick) {
                used.clear();
                continue;
            }
            let mut qs = inst.op_qubits();
            if matches!(inst, Instruction::Mpp { .. }) {
                // Products within one MPP commute and may overlap.
                qs.sort_unstable();
                qs.dedup();
            }
            for q in qs {
                if !used.insert(q) {
                    return Err(CircuitError::SliceConflict { qubit: q, index });
                }
            }
        }
        Ok(())
    }

    /// Qubit ids sorted by coordinate (qubits without coordinates last, by id).
    pub fn qubits_by_coord(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = (0..self.coords.len() as u32).collect();
        ids.sort_by(|&a, &b| match (&self.coords[a as usize], &self.coords[b as usize]) {
            (Some(x), Some(y)) => x.cmp(y),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.cmp(&b),
        });
        ids
    }

    /// Qubit id at a coordinate.
    pub fn qubit_at(&self, c: Coord) -> Option<u32> {
        self.coords
            .iter()
            .position(|x| *x == Some(c))
            .map(|q| q as u32)
    }

    pub fn meta_qubits(&self, key: &str) -> Option<Vec<u32>> {
        let v = self.meta.get(key)?;
        v.split_whitespace().map(|s| s.parse().ok()).collect()
    }
}

/// Incremental structural validation, one instruction at a time.
#[derive(Default)]
pub(crate) struct Checker {
    measured: usize,
    measured_qubits: std::collections::HashSet<u32>,
}

impl Checker {
    fn records(&self, recs: &[u32]) -> Result<(), CircuitError> {
        for &r in recs {
            if r == 0 || r as usize > self.measured {
                return Err(CircuitError::DanglingRecord {
                    lookback: r,
                    available: self.measured,
                });
            }
        }
        Ok(())
    }

    pub(crate) fn check(&mut self, inst: &Instruction) -> Result<(), CircuitError> {
        let check_p = |what: &str, p: f64, max: f64| -> Result<(), CircuitError> {
            if !(0.0..=max).contains(&p) || p.is_nan() {
                return Err(CircuitError::Probability {
                    what: what.to_string(),
                    p,
                });
            }
            Ok(())
        };
        match inst {
            Instruction::Gate { gate, targets } => check_groups(gate.name(), gate.arity(), targets)?,
            Instruction::Noise {
                channel,
                p,
                targets,
            } => {
                check_groups(channel.name(), channel.arity(), targets)?;
                let max = match channel {
                    Channel::Dep1 => 0.75,
                    Channel::Dep2 => 15.0 / 16.0,
                    Channel::Dep3 => 63.0 / 64.0,
                    _ => 1.0,
                };
                check_p(channel.name(), *p, max)?;
                if *channel == Channel::MErr {
                    if let Some(q) = targets.iter().find(|q| !self.measured_qubits.contains(q)) {
                        return Err(CircuitError::DanglingMeasurementError(*q));
                    }
                }
            }
            Instruction::Correlated { p, .. } => check_p("E", *p, 1.0)?,
            Instruction::Feedback { pairs, .. } => {
                let recs: Vec<u32> = pairs.iter().map(|p| p.0).collect();
                self.records(&recs)?
            }
            Instruction::Detector { records, .. } | Instruction::Observable { records, .. } => {
                self.records(records)?
            }
            Instruction::Measure { targets, .. } => {
                self.measured_qubits.extend(targets.iter().copied());
            }
            _ => {}
        }
        self.measured += inst.measurement_count();
        Ok(())
    }
}

fn check_groups(name: &str, arity: usize, targets: &[u32]) -> Result<(), CircuitError> {
    if targets.len() % arity != 0 {
        return Err(CircuitError::Arity {
            gate: name.to_string(),
            arity,
            got: targets.len(),
        });
    }
    for g in targets.chunks(arity) {
        for i in 0..g.len() {
            for j in 0..i {
                if g[i] == g[j] {
                    return Err(CircuitError::RepeatedTarget {
                        gate: name.to_string(),
                        qubit: g[i],
                    });
                }
            }
        }
    }
    Ok(())
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
