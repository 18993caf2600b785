//! Dense state-vector oracle for the non-Clifford circuits.
//!
//! Noise is sampled trajectory by trajectory. Qubits in single-qubit Pauli
//! eigenstates (freshly reset, just measured, parked boundary ancillas) are
//! held outside the vector, which keeps the d = 3 circuits under the default
//! cap of 22 active qubits.

mod gates;
mod state;

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{Basis, Channel, Circuit, Coord, DetectorKind, Instruction, Pauli};
use crate::tableau::split_seed;

pub use gates::matrix as gate_matrix;
pub use state::{DenseState, QState};

pub const DEFAULT_CAP: usize = 22;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DenseError {
    #[error("state needs {needed} active qubits, cap is {cap}")]
    CapExceeded { needed: usize, cap: usize },
    #[error("circuit is not purely unitary")]
    NotUnitary,
    #[error("missing or malformed metadata {0:?}")]
    Meta(String),
    #[error("fault scan budget of {0} branches exceeded")]
    Budget(usize),
}

/// Outcome of one trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub kept: bool,
    pub erased: bool,
    /// First discarding detector that fired.
    pub discarded_by: Option<usize>,
    /// Fidelity of the output logical state (kept shots with a target).
    pub fidelity: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FidelityReport {
    pub shots: usize,
    pub kept: usize,
    pub erased: usize,
    /// Shots discarded by a herald detector.
    pub heralded: usize,
    pub infidelity_sum: f64,
    pub trajectories: Vec<Trajectory>,
}

impl FidelityReport {
    pub fn acceptance(&self) -> f64 {
        self.kept as f64 / self.shots as f64
    }

    pub fn infidelity(&self) -> f64 {
        self.infidelity_sum / self.kept as f64
    }
}

/// Logical operators (X sites, Z sites per logical qubit) and the target
/// state over the logical qubits (bit i = logical qubit i).
#[derive(Clone, Debug)]
pub struct LogicalSpec {
    pub ops: Vec<(Vec<u32>, Vec<u32>)>,
    pub target: Vec<C>,
}

pub fn target_state(name: &str) -> Option<Vec<C>> {
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, FRAC_PI_8};
    Some(match name {
        "T" => vec![
            C::new(FRAC_1_SQRT_2, 0.0),
            C::from_polar(FRAC_1_SQRT_2, FRAC_PI_4),
        ],
        "H" => vec![C::new(FRAC_PI_8.cos(), 0.0), C::new(FRAC_PI_8.sin(), 0.0)],
        "CX" => {
            // (sqrt2 |00> + |1+>) / sqrt3, control = bit 0.
            let a = (2.0f64 / 3.0).sqrt();
            let b = (1.0f64 / 6.0).sqrt();
            vec![C::new(a, 0.0), C::new(b, 0.0), C::new(0.0, 0.0), C::new(b, 0.0)]
        }
        _ => return None,
    })
}

impl LogicalSpec {
    pub fn from_circuit(c: &Circuit) -> Result<Self, DenseError> {
        let name = c.meta.get("target").ok_or(DenseError::Meta("target".into()))?;
        let target = target_state(name).ok_or(DenseError::Meta("target".into()))?;
        let get = |k: &str| c.meta_qubits(k).ok_or(DenseError::Meta(k.into()));
        let ops = if target.len() == 4 {
            vec![
                (get("logical_x1")?, get("logical_z1")?),
                (get("logical_x2")?, get("logical_z2")?),
            ]
        } else {
            vec![(get("logical_x")?, get("logical_z")?)]
        };
        Ok(LogicalSpec { ops, target })
    }

    /// F = 2^-k sum_P <P>_rho <P>_target over logical Paulis P.
    pub fn fidelity(&self, st: &mut DenseState) -> Result<f64, DenseError> {
        let k = self.ops.len();
        let mut tgt = DenseState::new(k, k);
        let all: Vec<u32> = (0..k as u32).collect();
        tgt.activate_all(&all)?;
        tgt.amps = self.target.clone();
        let qs: Vec<u32> = self
            .ops
            .iter()
            .flat_map(|(x, z)| x.iter().chain(z).copied())
            .collect();
        st.activate_all(&qs)?;
        let slot = |st: &DenseState, q: u32| match st.qubits[q as usize] {
            QState::Active(s) => s,
            QState::Parked { .. } => unreachable!(),
        };
        let mut f = 0.0;
        for code in 0..(1usize << (2 * k)) {
            let (mut xm, mut zm, mut ny) = (0usize, 0usize, 0u32);
            let (mut txm, mut tzm, mut tny) = (0usize, 0usize, 0u32);
            for (i, (xs, zs)) in self.ops.iter().enumerate() {
                let p = Pauli::from_index((code >> (2 * i)) & 3);
                let (x, z) = p.bits();
                if x {
                    xs.iter().for_each(|&q| xm ^= 1 << slot(st, q));
                    txm |= 1 << i;
                }
                if z {
                    zs.iter().for_each(|&q| zm ^= 1 << slot(st, q));
                    tzm |= 1 << i;
                }
                if x && z {
                    ny += 1;
                    tny += 1;
                }
            }
            let e = st.expect_masks(xm, zm, ny).re;
            let t = tgt.expect_masks(txm, tzm, tny).re;
            f += e * t;
        }
        Ok(f / (1 << k) as f64)
    }
}

/// How random choices are made while executing.
enum Mode<'a> {
    Sample(&'a mut ChaCha8Rng),
    /// Stop at random measurements so the caller can fork.
    Branch,
}

enum Step {
    Done,
    Discard(usize),
    /// Random measurement with probability `p1` of outcome 1.
    Fork(f64),
}

/// Resumable interpreter state.
#[derive(Clone)]
struct Exec {
    st: DenseState,
    rec: Vec<bool>,
    last_meas: Vec<Option<usize>>,
    pos: usize,
    /// Position inside a multi-target instruction.
    sub: usize,
    det: usize,
    erased: bool,
    forced: Option<bool>,
    weight: f64,
}

/// Fault injected at noise instruction `inst`, group `group`: Pauli pattern
/// (two bits per qubit, X = bit 0) or, for MERR and E, pattern 1 = fire.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DenseFault {
    pub inst: usize,
    pub group: usize,
    pub pattern: u32,
}

impl Exec {
    fn new(c: &Circuit, cap: usize) -> Self {
        Exec {
            st: DenseState::new(c.num_qubits(), cap),
            rec: Vec::with_capacity(c.num_measurements()),
            last_meas: vec![None; c.num_qubits()],
            pos: 0,
            sub: 0,
            det: 0,
            erased: false,
            forced: None,
            weight: 1.0,
        }
    }

    fn apply_pattern(&mut self, qs: &[u32], r: u32) -> Result<(), DenseError> {
        for (j, &q) in qs.iter().enumerate() {
            let b = (r >> (2 * j)) & 3;
            self.st.apply_pauli(q, Pauli::from_bits(b & 1 == 1, b & 2 == 2))?;
        }
        Ok(())
    }

    fn choose(&mut self, p1: f64, mode: &mut Mode) -> Option<bool> {
        if let Some(f) = self.forced.take() {
            return Some(f);
        }
        if p1 < 1e-12 {
            return Some(false);
        }
        if p1 > 1.0 - 1e-12 {
            return Some(true);
        }
        match mode {
            Mode::Sample(rng) => Some(rng.random::<f64>() < p1),
            Mode::Branch => None,
        }
    }

    fn run(&mut self, c: &Circuit, mode: &mut Mode, faults: &[DenseFault]) -> Result<Step, DenseError> {
        while self.pos < c.instructions.len() {
            let inst = &c.instructions[self.pos];
            match inst {
                Instruction::Gate { gate, targets } => {
                    for g in targets.chunks(gate.arity()) {
                        self.st.apply_gate(*gate, g)?;
                    }
                }
                Instruction::Reset { basis, targets } => {
                    for &q in targets {
                        if let QState::Active(_) = self.st.qubits[q as usize] {
                            // Tracing out an entangled qubit is a measurement.
                            let slots = self.st.activate_all(&[q])?;
                            let p1 = self.measure_prob(slots[0], *basis);
                            if p1 > 1e-12 && p1 < 1.0 - 1e-12 && matches!(mode, Mode::Branch) {
                                return Err(DenseError::Meta("reset of an entangled qubit".into()));
                            }
                            let mut rng = ChaCha8Rng::seed_from_u64(self.rec.len() as u64);
                            match mode {
                                Mode::Sample(r) => self.st.reset(q, *basis, *r),
                                Mode::Branch => self.st.reset(q, *basis, &mut rng),
                            }
                        } else {
                            self.st.reset(q, *basis, &mut NoRng);
                        }
                    }
                }
                Instruction::Measure {
                    basis,
                    reset,
                    targets,
                } => {
                    while self.sub < targets.len() {
                        let q = targets[self.sub];
                        let p1 = self.outcome_prob(q, *basis)?;
                        let Some(one) = self.choose(p1, mode) else {
                            return Ok(Step::Fork(p1));
                        };
                        let (_, p) = self.st.measure(q, *basis, &mut NoRng, Some(one));
                        self.weight *= p;
                        self.last_meas[q as usize] = Some(self.rec.len());
                        self.rec.push(one);
                        if *reset {
                            self.st.reset(q, *basis, &mut NoRng);
                        }
                        self.sub += 1;
                    }
                    self.sub = 0;
                }
                Instruction::Mpp { products } => {
                    while self.sub < products.len() {
                        let terms = &products[self.sub];
                        let (xm, zm, ny) = self.st.masks(terms)?;
                        let e = self.st.expect_masks(xm, zm, ny).re.clamp(-1.0, 1.0);
                        let p1 = (1.0 - e) / 2.0;
                        let Some(one) = self.choose(p1, mode) else {
                            return Ok(Step::Fork(p1));
                        };
                        let (_, p) = self.st.measure_product(terms, &mut NoRng, Some(one))?;
                        self.weight *= p;
                        self.rec.push(one);
                        self.sub += 1;
                    }
                    self.sub = 0;
                }
                Instruction::Noise {
                    channel,
                    p,
                    targets,
                } => {
                    let arity = channel.arity();
                    let groups = targets.len() / arity;
                    for g in 0..groups {
                        let qs = &targets[g * arity..(g + 1) * arity];
                        let forced = faults
                            .iter()
                            .find(|f| f.inst == self.pos && f.group == g)
                            .map(|f| f.pattern);
                        let r = match mode {
                            Mode::Sample(rng) => {
                                if rng.random::<f64>() >= *p {
                                    continue;
                                }
                                match channel {
                                    Channel::XErr => 1,
                                    Channel::ZErr => 2,
                                    Channel::MErr => 1,
                                    Channel::Dep1 | Channel::Dep2 | Channel::Dep3 => {
                                        rng.random_range(1..1u32 << (2 * arity))
                                    }
                                    _ => {
                                        self.erased = true;
                                        rng.random_range(0..1u32 << (2 * arity))
                                    }
                                }
                            }
                            Mode::Branch => match forced {
                                Some(r) => r,
                                None => continue,
                            },
                        };
                        if *channel == Channel::MErr {
                            if let Some(i) = self.last_meas[qs[0] as usize] {
                                self.rec[i] ^= true;
                            }
                        } else {
                            self.apply_pattern(qs, r)?;
                        }
                    }
                }
                Instruction::Correlated { p, paulis } => {
                    let fire = match mode {
                        Mode::Sample(rng) => *p >= 1.0 || rng.random::<f64>() < *p,
                        Mode::Branch => {
                            *p >= 1.0 || faults.iter().any(|f| f.inst == self.pos)
                        }
                    };
                    if fire {
                        for &(pa, q) in paulis {
                            self.st.apply_pauli(q, pa)?;
                        }
                    }
                }
                Instruction::Feedback { pauli, pairs } => {
                    for &(k, q) in pairs {
                        if self.rec[self.rec.len() - k as usize] {
                            self.st.apply_pauli(q, *pauli)?;
                        }
                    }
                }
                Instruction::Detector { kind, records, .. } => {
                    let fired = records
                        .iter()
                        .fold(false, |a, &k| a ^ self.rec[self.rec.len() - k as usize]);
                    let d = self.det;
                    self.det += 1;
                    if fired && kind.discards() {
                        self.pos += 1;
                        return Ok(Step::Discard(d));
                    }
                }
                Instruction::Observable { .. } | Instruction::Tick => {}
            }
            self.pos += 1;
        }
        Ok(Step::Done)
    }

    fn measure_prob(&self, s: usize, basis: Basis) -> f64 {
        match basis {
            Basis::Z => self.st.prob_one(s),
            Basis::X => {
                let e = self.st.expect_masks(1 << s, 0, 0).re;
                (1.0 - e) / 2.0
            }
        }
    }

    fn outcome_prob(&mut self, q: u32, basis: Basis) -> Result<f64, DenseError> {
        Ok(match self.st.qubits[q as usize] {
            QState::Parked { basis: b, one } if b == basis => one as u8 as f64,
            QState::Parked { .. } => 0.5,
            QState::Active(s) => self.measure_prob(s, basis),
        })
    }
}

/// Rng stand-in for calls whose outcome is forced.
struct NoRng;

impl rand::RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("forced outcome")
    }
    fn next_u64(&mut self) -> u64 {
        unreachable!("forced outcome")
    }
    fn fill_bytes(&mut self, _: &mut [u8]) {
        unreachable!("forced outcome")
    }
}

fn is_herald(c: &Circuit, det: usize) -> bool {
    c.instructions
        .iter()
        .filter_map(|i| match i {
            Instruction::Detector { kind, .. } => Some(*kind),
            _ => None,
        })
        .nth(det)
        == Some(DetectorKind::Herald)
}

/// Runs one sampled trajectory and returns the outcome and final state.
pub fn run_trajectory(
    c: &Circuit,
    spec: Option<&LogicalSpec>,
    seed: u64,
    cap: usize,
) -> Result<(Trajectory, DenseState), DenseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ex = Exec::new(c, cap);
    let step = ex.run(c, &mut Mode::Sample(&mut rng), &[])?;
    let mut t = Trajectory {
        kept: false,
        erased: ex.erased,
        discarded_by: None,
        fidelity: None,
    };
    match step {
        Step::Discard(d) => t.discarded_by = Some(d),
        Step::Fork(_) => unreachable!("sampling never forks"),
        Step::Done if ex.erased => {}
        Step::Done => {
            t.kept = true;
            if let Some(spec) = spec {
                t.fidelity = Some(spec.fidelity(&mut ex.st)?);
            }
        }
    }
    Ok((t, ex.st))
}

/// Samples `shots` trajectories. Erased shots are discarded. Each shot uses
/// its own stream `split_seed(seed, shot)`.
pub fn run_dense(c: &Circuit, shots: usize, seed: u64, cap: usize) -> Result<FidelityReport, DenseError> {
    let spec = LogicalSpec::from_circuit(c).ok();
    let trajs: Vec<Trajectory> = (0..shots)
        .into_par_iter()
        .map(|k| run_trajectory(c, spec.as_ref(), split_seed(seed, k as u64), cap).map(|r| r.0))
        .collect::<Result<_, _>>()?;
    let mut r = FidelityReport {
        shots,
        ..Default::default()
    };
    for t in &trajs {
        if t.erased {
            r.erased += 1;
        }
        if t.kept {
            r.kept += 1;
            r.infidelity_sum += 1.0 - t.fidelity.unwrap_or(1.0);
        } else if t.discarded_by.is_some_and(|d| is_herald(c, d)) {
            r.heralded += 1;
        }
    }
    r.trajectories = trajs;
    Ok(r)
}

/// <psi| U |psi> for a unitary circuit `u`, whose qubits are matched to the
/// state's circuit by coordinate.
pub fn eigencheck(
    u: &Circuit,
    psi: &DenseState,
    psi_coords: &[Option<Coord>],
) -> Result<C, DenseError> {
    let map = |q: u32| -> Result<u32, DenseError> {
        let c = u.coords.get(q as usize).copied().flatten();
        psi_coords
            .iter()
            .position(|x| x.is_some() && *x == c)
            .map(|p| p as u32)
            .ok_or(DenseError::Meta(format!("qubit {q} has no counterpart")))
    };
    let mut ops = Vec::new();
    for inst in &u.instructions {
        match inst {
            Instruction::Gate { gate, targets } => {
                for g in targets.chunks(gate.arity()) {
                    ops.push((*gate, g.iter().map(|&q| map(q)).collect::<Result<Vec<_>, _>>()?));
                }
            }
            Instruction::Tick => {}
            _ => return Err(DenseError::NotUnitary),
        }
    }
    let mut before = psi.clone();
    let mut qs: Vec<u32> = ops.iter().flat_map(|o| o.1.iter().copied()).collect();
    qs.sort_unstable();
    qs.dedup();
    before.cap = before.cap.max(before.active() + qs.len());
    before.activate_all(&qs)?;
    let mut after = before.clone();
    for (g, t) in &ops {
        after.apply_gate(*g, t)?;
    }
    if after.slots != before.slots {
        return Err(DenseError::Meta("slot layout changed".into()));
    }
    Ok(before
        .amps
        .iter()
        .zip(&after.amps)
        .map(|(a, b)| a.conj() * b)
        .sum())
}

/// Classification of one fault (set) by exact branching over measurement
/// outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchResult {
    /// Total probability of acceptance.
    pub accept: f64,
    /// Probability-weighted infidelity over accepted branches.
    pub infidelity: f64,
}

/// Explores every measurement branch of the circuit with `faults` forced.
pub fn branch_outcome(
    c: &Circuit,
    spec: Option<&LogicalSpec>,
    faults: &[DenseFault],
    cap: usize,
    budget: usize,
) -> Result<BranchResult, DenseError> {
    let mut stack = vec![Exec::new(c, cap)];
    let mut out = BranchResult {
        accept: 0.0,
        infidelity: 0.0,
    };
    let mut used = 0;
    while let Some(mut ex) = stack.pop() {
        used += 1;
        if used > budget {
            return Err(DenseError::Budget(budget));
        }
        match ex.run(c, &mut Mode::Branch, faults)? {
            Step::Discard(_) => {}
            Step::Done => {
                out.accept += ex.weight;
                if let Some(spec) = spec {
                    out.infidelity += ex.weight * (1.0 - spec.fidelity(&mut ex.st)?);
                }
            }
            Step::Fork(p1) => {
                for (one, p) in [(false, 1.0 - p1), (true, p1)] {
                    if ex.weight * p > 1e-12 {
                        let mut e = ex.clone();
                        e.forced = Some(one);
                        stack.push(e);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Every single fault location of a noisy circuit: (fault, label).
pub fn single_faults(c: &Circuit) -> Vec<DenseFault> {
    let mut out = Vec::new();
    for (i, inst) in c.instructions.iter().enumerate() {
        match inst {
            Instruction::Noise {
                channel, targets, ..
            } => {
                let a = channel.arity();
                for g in 0..targets.len() / a {
                    let patterns: Vec<u32> = match channel {
                        Channel::XErr | Channel::MErr => vec![1],
                        Channel::ZErr => vec![2],
                        _ => (1..1u32 << (2 * a)).collect(),
                    };
                    for pattern in patterns {
                        out.push(DenseFault {
                            inst: i,
                            group: g,
                            pattern,
                        });
                    }
                }
            }
            Instruction::Correlated { p, .. } if *p < 1.0 => out.push(DenseFault {
                inst: i,
                group: 0,
                pattern: 1,
            }),
            _ => {}
        }
    }
    out
}

/// Dense weight-1 fault scan: every single fault is detected (acceptance
/// drops to ~0), benign (accepted output still has fidelity ~1), or
/// returned as undetected-logical together with its branch result.
pub fn fault_scan(
    c: &Circuit,
    cap: usize,
    budget: usize,
) -> Result<Vec<(DenseFault, BranchResult)>, DenseError> {
    let spec = LogicalSpec::from_circuit(c)?;
    let found: Vec<Option<(DenseFault, BranchResult)>> = single_faults(c)
        .into_par_iter()
        .map(|f| {
            let r = branch_outcome(c, Some(&spec), &[f], cap, budget)?;
            let bad = r.accept > 1e-9 && r.infidelity / r.accept > 1e-6;
            Ok(bad.then_some((f, r)))
        })
        .collect::<Result<_, DenseError>>()?;
    Ok(found.into_iter().flatten().collect())
}
