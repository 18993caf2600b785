//! Bit-parallel Pauli-frame simulation.
//!
//! Each bit lane of a `u64` word carries one shot (sampling) or one injected
//! fault (propagation). Detection events and observable flips are reported
//! relative to the noiseless reference execution.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::circuit::{Basis, Channel, Circuit, DetectorKind, Gate, Instruction};

use super::SimError;

/// Shots simulated per independent RNG stream.
pub const CHUNK_SHOTS: usize = 4096;

/// Deterministic seed derivation for chunk `index` of a run seeded `seed`
/// (SplitMix64 finalizer over seed and index).
pub fn split_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Term {
    pub q: u32,
    pub x: bool,
    pub z: bool,
}

#[derive(Clone, Debug)]
pub(crate) enum FOp {
    H(u32),
    /// z ^= x (S-like)
    ZpX(u32),
    /// x ^= z (SQRT_X-like)
    XpZ(u32),
    CX(u32, u32),
    CY(u32, u32),
    CZ(u32, u32),
    Swap(u32, u32),
    Measure {
        q: u32,
        basis: Basis,
        reset: bool,
        rec: u32,
    },
    Reset {
        q: u32,
        basis: Basis,
    },
    Mpp {
        terms: Vec<Term>,
        rec: u32,
    },
    Noise {
        channel: Channel,
        p: f64,
        qubits: Vec<u32>,
        /// First erasure-flag index for erasure channels.
        flag: u32,
    },
    MErr {
        p: f64,
        recs: Vec<u32>,
        qubits: Vec<u32>,
    },
    Corr {
        p: f64,
        terms: Vec<Term>,
    },
    Feedback {
        rec: u32,
        q: u32,
        x: bool,
        z: bool,
    },
}

/// A circuit lowered for frame simulation.
#[derive(Clone, Debug)]
pub struct FrameProgram {
    pub num_qubits: usize,
    pub num_records: usize,
    pub(crate) ops: Vec<FOp>,
    /// Instruction index each op came from.
    pub(crate) op_inst: Vec<usize>,
    pub detectors: Vec<Vec<u32>>,
    pub detector_kinds: Vec<DetectorKind>,
    /// Instruction index of each detector annotation.
    pub detector_inst: Vec<usize>,
    pub observables: Vec<Vec<u32>>,
    /// Instruction index for each erasure flag.
    pub erasure_inst: Vec<usize>,
}

fn gate_ops(g: Gate, t: &[u32], out: &mut Vec<FOp>) -> Result<(), SimError> {
    use Gate::*;
    match g {
        I | X | Y | Z | CI | CII => {}
        H => out.push(FOp::H(t[0])),
        S | SDag | HXY | HNXY => out.push(FOp::ZpX(t[0])),
        SqrtX | SqrtXDag => out.push(FOp::XpZ(t[0])),
        CX => out.push(FOp::CX(t[0], t[1])),
        CY => out.push(FOp::CY(t[0], t[1])),
        CZ => out.push(FOp::CZ(t[0], t[1])),
        Swap => out.push(FOp::Swap(t[0], t[1])),
        CXX => {
            out.push(FOp::CX(t[0], t[1]));
            out.push(FOp::CX(t[0], t[2]));
        }
        CXI => out.push(FOp::CX(t[0], t[1])),
        _ => return Err(SimError::NonClifford(g)),
    }
    Ok(())
}

impl FrameProgram {
    pub fn compile(c: &Circuit) -> Result<FrameProgram, SimError> {
        let mut ops = Vec::new();
        let mut op_inst = Vec::new();
        let mut rec: u32 = 0;
        let mut last_meas: Vec<Option<u32>> = vec![None; c.num_qubits()];
        let mut detectors = Vec::new();
        let mut detector_kinds = Vec::new();
        let mut detector_inst = Vec::new();
        let mut observables: Vec<Vec<u32>> = vec![Vec::new(); c.num_observables()];
        let mut erasure_inst = Vec::new();
        let abs = |rec: u32, k: u32| rec - k;
        for (idx, inst) in c.instructions.iter().enumerate() {
            let before = ops.len();
            match inst {
                Instruction::Gate { gate, targets } => {
                    for g in targets.chunks(gate.arity()) {
                        gate_ops(*gate, g, &mut ops)?;
                    }
                }
                Instruction::Reset { basis, targets } => {
                    for &q in targets {
                        ops.push(FOp::Reset { q, basis: *basis });
                    }
                }
                Instruction::Measure {
                    basis,
                    reset,
                    targets,
                } => {
                    for &q in targets {
                        ops.push(FOp::Measure {
                            q,
                            basis: *basis,
                            reset: *reset,
                            rec,
                        });
                        last_meas[q as usize] = Some(rec);
                        rec += 1;
                    }
                }
                Instruction::Mpp { products } => {
                    for p in products {
                        let terms = p
                            .iter()
                            .map(|&(pa, q)| {
                                let (x, z) = pa.bits();
                                Term { q, x, z }
                            })
                            .collect();
                        ops.push(FOp::Mpp { terms, rec });
                        rec += 1;
                    }
                }
                Instruction::Noise {
                    channel,
                    p,
                    targets,
                } => {
                    if *channel == Channel::MErr {
                        let recs = targets
                            .iter()
                            .map(|&q| last_meas[q as usize].ok_or(SimError::DanglingMErr(q)))
                            .collect::<Result<_, _>>()?;
                        ops.push(FOp::MErr {
                            p: *p,
                            recs,
                            qubits: targets.clone(),
                        });
                    } else {
                        let flag = erasure_inst.len() as u32;
                        if channel.is_erasure() {
                            let groups = targets.len() / channel.arity();
                            erasure_inst.extend(std::iter::repeat_n(idx, groups));
                        }
                        ops.push(FOp::Noise {
                            channel: *channel,
                            p: *p,
                            qubits: targets.clone(),
                            flag,
                        });
                    }
                }
                Instruction::Correlated { p, paulis } => {
                    let terms = paulis
                        .iter()
                        .map(|&(pa, q)| {
                            let (x, z) = pa.bits();
                            Term { q, x, z }
                        })
                        .collect();
                    ops.push(FOp::Corr { p: *p, terms });
                }
                Instruction::Feedback { pauli, pairs } => {
                    let (x, z) = pauli.bits();
                    for &(k, q) in pairs {
                        ops.push(FOp::Feedback {
                            rec: abs(rec, k),
                            q,
                            x,
                            z,
                        });
                    }
                }
                Instruction::Detector { kind, records, .. } => {
                    detectors.push(records.iter().map(|&k| abs(rec, k)).collect());
                    detector_kinds.push(*kind);
                    detector_inst.push(idx);
                }
                Instruction::Observable { index, records } => {
                    observables[*index as usize].extend(records.iter().map(|&k| abs(rec, k)));
                }
                Instruction::Tick => {}
            }
            op_inst.extend(std::iter::repeat_n(idx, ops.len() - before));
        }
        Ok(FrameProgram {
            num_qubits: c.num_qubits(),
            num_records: rec as usize,
            ops,
            op_inst,
            detectors,
            detector_kinds,
            detector_inst,
            observables,
            erasure_inst,
        })
    }

    pub fn num_detectors(&self) -> usize {
        self.detectors.len()
    }

    pub fn num_observables(&self) -> usize {
        self.observables.len()
    }

    /// Samples `shots` shots. Results depend only on (circuit, shots, seed),
    /// not on the number of worker threads.
    pub fn sample(&self, shots: usize, seed: u64) -> Samples {
        let chunks = shots.div_ceil(CHUNK_SHOTS);
        let outs: Vec<(usize, BatchOut)> = (0..chunks)
            .into_par_iter()
            .map(|ci| {
                let n = CHUNK_SHOTS.min(shots - ci * CHUNK_SHOTS);
                let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, ci as u64));
                (n, self.run_batch(n.div_ceil(64), &mut rng))
            })
            .collect();
        let words = shots.div_ceil(64);
        let mut s = Samples {
            shots,
            words,
            det: vec![0; self.detectors.len() * words],
            obs: vec![0; self.observables.len() * words],
            erased: vec![0; self.erasure_inst.len() * words],
            detector_kinds: self.detector_kinds.clone(),
        };
        let mut w0 = 0;
        for (n, b) in outs {
            let bw = n.div_ceil(64);
            let tail_mask = if n % 64 == 0 {
                u64::MAX
            } else {
                (1u64 << (n % 64)) - 1
            };
            let copy = |dst: &mut Vec<u64>, src: &[u64], rows: usize| {
                for r in 0..rows {
                    for k in 0..bw {
                        let mut v = src[r * bw + k];
                        if k == bw - 1 {
                            v &= tail_mask;
                        }
                        dst[r * words + w0 + k] = v;
                    }
                }
            };
            copy(&mut s.det, &b.det, self.detectors.len());
            copy(&mut s.obs, &b.obs, self.observables.len());
            copy(&mut s.erased, &b.erased, self.erasure_inst.len());
            w0 += bw;
        }
        s
    }

    fn run_batch(&self, w: usize, rng: &mut ChaCha8Rng) -> BatchOut {
        let mut f = Frames::new(self.num_qubits, self.num_records, w);
        let mut erased = vec![0u64; self.erasure_inst.len() * w];
        for op in &self.ops {
            match op {
                FOp::Measure { q, basis, reset, rec } => {
                    f.measure(*q, *basis, *rec);
                    if *reset {
                        f.reset_random(*q, *basis, rng);
                    } else {
                        f.randomize_after_measure(*q, *basis, rng);
                    }
                }
                FOp::Reset { q, basis } => f.reset_random(*q, *basis, rng),
                FOp::Mpp { terms, rec } => {
                    f.mpp(terms, *rec);
                    for k in 0..w {
                        let r = rng.next_u64();
                        f.apply_terms_masked(terms, k, r);
                    }
                }
                FOp::Noise {
                    channel,
                    p,
                    qubits,
                    flag,
                } => {
                    let arity = channel.arity();
                    let groups = qubits.len() / arity;
                    for_each_hit(*p, groups, w, rng, |g, k, bit, rng| {
                        let qs = &qubits[g * arity..(g + 1) * arity];
                        let r = match channel {
                            Channel::XErr => 1,
                            Channel::ZErr => 2,
                            Channel::Dep1 | Channel::Dep2 | Channel::Dep3 => {
                                rng.random_range(1..1u32 << (2 * arity))
                            }
                            _ => {
                                erased[(*flag as usize + g) * w + k] |= bit;
                                rng.random_range(0..1u32 << (2 * arity))
                            }
                        };
                        for (j, &q) in qs.iter().enumerate() {
                            let b = (r >> (2 * j)) & 3;
                            f.flip(q, k, bit, b & 1 == 1, b & 2 == 2);
                        }
                    });
                }
                FOp::MErr { p, recs, .. } => {
                    for_each_hit(*p, recs.len(), w, rng, |g, k, bit, _| {
                        f.rec[recs[g] as usize * w + k] ^= bit;
                    });
                }
                FOp::Corr { p, terms } => {
                    if *p >= 1.0 {
                        for k in 0..w {
                            f.apply_terms_masked(terms, k, u64::MAX);
                        }
                    } else {
                        for_each_hit(*p, 1, w, rng, |_, k, bit, _| {
                            f.apply_terms_masked(terms, k, bit);
                        });
                    }
                }
                other => f.unitary_or_feedback(other),
            }
        }
        let det = f.parities(&self.detectors);
        let obs = f.parities(&self.observables);
        BatchOut { det, obs, erased }
    }

    /// Propagates each fault in its own lane (no randomization, no sampling)
    /// and returns per-fault detector and observable flips.
    pub fn propagate(&self, faults: &[Fault]) -> Vec<FaultEffect> {
        self.propagate_with_frames(faults, &[]).0
    }

    /// Like [`propagate`](Self::propagate) but also returns the residual
    /// frame on `watch` qubits at the end of the circuit.
    pub fn propagate_with_frames(
        &self,
        faults: &[Fault],
        watch: &[u32],
    ) -> (Vec<FaultEffect>, Vec<Vec<(bool, bool)>>) {
        let lanes = faults.len();
        let w = lanes.div_ceil(64).max(1);
        let mut f = Frames::new(self.num_qubits, self.num_records, w);
        let mut order: Vec<usize> = (0..lanes).collect();
        order.sort_by_key(|&i| faults[i].op);
        let mut next = 0;
        for (oi, op) in self.ops.iter().enumerate() {
            while next < order.len() && faults[order[next]].op == oi {
                let lane = order[next];
                let (k, bit) = (lane / 64, 1u64 << (lane % 64));
                let fault = &faults[lane];
                for t in &fault.terms {
                    f.flip(t.q, k, bit, t.x, t.z);
                }
                if let Some(r) = fault.flip_record {
                    f.rec[r as usize * w + k] ^= bit;
                }
                next += 1;
            }
            match op {
                FOp::Measure { q, basis, reset, rec } => {
                    f.measure(*q, *basis, *rec);
                    if *reset {
                        f.clear(*q);
                    }
                }
                FOp::Reset { q, .. } => f.clear(*q),
                FOp::Mpp { terms, rec } => f.mpp(terms, *rec),
                FOp::Noise { .. } | FOp::MErr { .. } | FOp::Corr { .. } => {}
                other => f.unitary_or_feedback(other),
            }
        }
        // Faults injected after the last op (annotation-only tail).
        while next < order.len() {
            let lane = order[next];
            let (k, bit) = (lane / 64, 1u64 << (lane % 64));
            for t in &faults[lane].terms {
                f.flip(t.q, k, bit, t.x, t.z);
            }
            if let Some(r) = faults[lane].flip_record {
                f.rec[r as usize * w + k] ^= bit;
            }
            next += 1;
        }
        let det = f.parities(&self.detectors);
        let obs = f.parities(&self.observables);
        let nd = self.detectors.len();
        let no = self.observables.len();
        let mut effects = Vec::with_capacity(lanes);
        for lane in 0..lanes {
            let (k, b) = (lane / 64, lane % 64);
            let mut e = FaultEffect {
                detectors: Vec::new(),
                observables: 0,
            };
            for d in 0..nd {
                if det[d * w + k] >> b & 1 == 1 {
                    e.detectors.push(d as u32);
                }
            }
            for o in 0..no {
                if obs[o * w + k] >> b & 1 == 1 {
                    e.observables |= 1 << o;
                }
            }
            effects.push(e);
        }
        let frames = (0..lanes)
            .map(|lane| {
                let (k, b) = (lane / 64, lane % 64);
                watch
                    .iter()
                    .map(|&q| {
                        let i = q as usize * w + k;
                        (f.x[i] >> b & 1 == 1, f.z[i] >> b & 1 == 1)
                    })
                    .collect()
            })
            .collect();
        (effects, frames)
    }

    /// Index of the first op produced by instruction `inst` (or the op that
    /// follows it, for annotation instructions).
    pub fn op_for_instruction(&self, inst: usize) -> usize {
        self.op_inst.partition_point(|&i| i < inst)
    }
}

/// Read-only view of the noise-bearing ops of a [`FrameProgram`].
#[derive(Clone, Debug)]
pub enum FOpView<'a> {
    Noise {
        channel: Channel,
        p: f64,
        qubits: &'a [u32],
        flag: u32,
    },
    MErr {
        p: f64,
        recs: &'a [u32],
        qubits: &'a [u32],
    },
    /// Correlated Pauli as (qubit, x, z) terms.
    Corr { p: f64, terms: Vec<(u32, bool, bool)> },
    Other,
}

impl FrameProgram {
    pub fn op_views(&self) -> impl Iterator<Item = FOpView<'_>> + '_ {
        self.ops.iter().map(|op| match op {
            FOp::Noise {
                channel,
                p,
                qubits,
                flag,
            } => FOpView::Noise {
                channel: *channel,
                p: *p,
                qubits,
                flag: *flag,
            },
            FOp::MErr { p, recs, qubits } => FOpView::MErr { p: *p, recs, qubits },
            FOp::Corr { p, terms } => FOpView::Corr {
                p: *p,
                terms: terms.iter().map(|t| (t.q, t.x, t.z)).collect(),
            },
            _ => FOpView::Other,
        })
    }

    /// Circuit instruction that produced op `op`.
    pub fn instruction_of(&self, op: usize) -> usize {
        self.op_inst[op]
    }

    pub fn num_ops(&self) -> usize {
        self.ops.len()
    }
}

/// A single injected Pauli fault and/or measurement-record flip, applied just
/// before op index `op`.
#[derive(Clone, Debug, PartialEq)]
pub struct Fault {
    pub op: usize,
    pub(crate) terms: Vec<Term>,
    pub flip_record: Option<u32>,
}

impl Fault {
    pub fn pauli(op: usize, terms: &[(u32, bool, bool)]) -> Fault {
        Fault {
            op,
            terms: terms
                .iter()
                .filter(|t| t.1 || t.2)
                .map(|&(q, x, z)| Term { q, x, z })
                .collect(),
            flip_record: None,
        }
    }

    pub fn record_flip(op: usize, rec: u32) -> Fault {
        Fault {
            op,
            terms: Vec::new(),
            flip_record: Some(rec),
        }
    }

    pub fn terms(&self) -> Vec<(u32, bool, bool)> {
        self.terms.iter().map(|t| (t.q, t.x, t.z)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FaultEffect {
    /// Sorted indices of flipped detectors.
    pub detectors: Vec<u32>,
    /// Bitmask of flipped observables.
    pub observables: u64,
}

struct BatchOut {
    det: Vec<u64>,
    obs: Vec<u64>,
    erased: Vec<u64>,
}

/// Sampled detection events, observable flips and erasure flags, stored
/// row-major by detector (observable, flag) with `words` u64 per row.
#[derive(Clone, Debug)]
pub struct Samples {
    pub shots: usize,
    pub words: usize,
    pub det: Vec<u64>,
    pub obs: Vec<u64>,
    pub erased: Vec<u64>,
    pub detector_kinds: Vec<DetectorKind>,
}

impl Samples {
    pub fn num_detectors(&self) -> usize {
        self.detector_kinds.len()
    }

    pub fn detector(&self, d: usize, shot: usize) -> bool {
        self.det[d * self.words + shot / 64] >> (shot % 64) & 1 == 1
    }

    pub fn observable(&self, o: usize, shot: usize) -> bool {
        self.obs[o * self.words + shot / 64] >> (shot % 64) & 1 == 1
    }

    pub fn observable_mask(&self, shot: usize) -> u64 {
        let no = self.obs.len() / self.words.max(1);
        (0..no).fold(0, |m, o| m | ((self.observable(o, shot) as u64) << o))
    }

    pub fn erasure(&self, e: usize, shot: usize) -> bool {
        self.erased[e * self.words + shot / 64] >> (shot % 64) & 1 == 1
    }

    pub fn fired(&self, shot: usize) -> Vec<u32> {
        (0..self.num_detectors())
            .filter(|&d| self.detector(d, shot))
            .map(|d| d as u32)
            .collect()
    }

    /// Per-word OR over the detectors selected by `pick`.
    pub fn any_fired_mask(&self, pick: impl Fn(usize, DetectorKind) -> bool) -> Vec<u64> {
        let mut m = vec![0u64; self.words];
        for (d, &k) in self.detector_kinds.iter().enumerate() {
            if pick(d, k) {
                for w in 0..self.words {
                    m[w] |= self.det[d * self.words + w];
                }
            }
        }
        m
    }

    pub fn any_erased_mask(&self, pick: impl Fn(usize) -> bool) -> Vec<u64> {
        let mut m = vec![0u64; self.words];
        let ne = self.erased.len() / self.words.max(1);
        for e in 0..ne {
            if pick(e) {
                for w in 0..self.words {
                    m[w] |= self.erased[e * self.words + w];
                }
            }
        }
        m
    }
}

/// Calls `hit(group, word, bit, rng)` for every (group, lane) pair selected
/// independently with probability p, using geometric skipping.
fn for_each_hit(
    p: f64,
    groups: usize,
    w: usize,
    rng: &mut ChaCha8Rng,
    mut hit: impl FnMut(usize, usize, u64, &mut ChaCha8Rng),
) {
    if p <= 0.0 || groups == 0 {
        return;
    }
    let lanes = 64 * w;
    let total = groups * lanes;
    if p >= 1.0 {
        for i in 0..total {
            let (g, l) = (i / lanes, i % lanes);
            hit(g, l / 64, 1 << (l % 64), rng);
        }
        return;
    }
    let log_q = (-p).ln_1p();
    let mut i: usize = 0;
    loop {
        let u: f64 = 1.0 - rng.random::<f64>();
        let skip = (u.ln() / log_q).floor();
        if skip >= (total - i) as f64 {
            return;
        }
        i += skip as usize;
        let (g, l) = (i / lanes, i % lanes);
        hit(g, l / 64, 1 << (l % 64), rng);
        i += 1;
        if i >= total {
            return;
        }
    }
}

struct Frames {
    w: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    rec: Vec<u64>,
}

impl Frames {
    fn new(nq: usize, nrec: usize, w: usize) -> Self {
        Frames {
            w,
            x: vec![0; nq * w],
            z: vec![0; nq * w],
            rec: vec![0; nrec * w],
        }
    }

    #[inline]
    fn flip(&mut self, q: u32, k: usize, bit: u64, x: bool, z: bool) {
        let i = q as usize * self.w + k;
        if x {
            self.x[i] ^= bit;
        }
        if z {
            self.z[i] ^= bit;
        }
    }

    fn apply_terms_masked(&mut self, terms: &[Term], k: usize, mask: u64) {
        for t in terms {
            self.flip(t.q, k, mask, t.x, t.z);
        }
    }

    fn clear(&mut self, q: u32) {
        let a = q as usize * self.w;
        self.x[a..a + self.w].fill(0);
        self.z[a..a + self.w].fill(0);
    }

    fn measure(&mut self, q: u32, basis: Basis, rec: u32) {
        let a = q as usize * self.w;
        let r = rec as usize * self.w;
        let src = match basis {
            Basis::Z => &self.x,
            Basis::X => &self.z,
        };
        for k in 0..self.w {
            self.rec[r + k] ^= src[a + k];
        }
    }

    fn randomize_after_measure(&mut self, q: u32, basis: Basis, rng: &mut ChaCha8Rng) {
        let a = q as usize * self.w;
        let dst = match basis {
            Basis::Z => &mut self.z,
            Basis::X => &mut self.x,
        };
        for k in 0..self.w {
            dst[a + k] ^= rng.next_u64();
        }
    }

    fn reset_random(&mut self, q: u32, basis: Basis, rng: &mut ChaCha8Rng) {
        let a = q as usize * self.w;
        let (keep, rand) = match basis {
            Basis::Z => (&mut self.x, &mut self.z),
            Basis::X => (&mut self.z, &mut self.x),
        };
        for k in 0..self.w {
            keep[a + k] = 0;
            rand[a + k] = rng.next_u64();
        }
    }

    fn mpp(&mut self, terms: &[Term], rec: u32) {
        let r = rec as usize * self.w;
        for t in terms {
            let a = t.q as usize * self.w;
            for k in 0..self.w {
                let mut v = 0;
                if t.x {
                    v ^= self.z[a + k];
                }
                if t.z {
                    v ^= self.x[a + k];
                }
                self.rec[r + k] ^= v;
            }
        }
    }

    fn unitary_or_feedback(&mut self, op: &FOp) {
        let w = self.w;
        match *op {
            FOp::H(q) => {
                let a = q as usize * w;
                for k in a..a + w {
                    std::mem::swap(&mut self.x[k], &mut self.z[k]);
                }
            }
            FOp::ZpX(q) => {
                let a = q as usize * w;
                for k in a..a + w {
                    self.z[k] ^= self.x[k];
                }
            }
            FOp::XpZ(q) => {
                let a = q as usize * w;
                for k in a..a + w {
                    self.x[k] ^= self.z[k];
                }
            }
            FOp::CX(c, t) => {
                let (c, t) = (c as usize * w, t as usize * w);
                for k in 0..w {
                    self.x[t + k] ^= self.x[c + k];
                    self.z[c + k] ^= self.z[t + k];
                }
            }
            FOp::CY(c, t) => {
                // X_c -> X_c Y_t, X_t -> Z_c X_t, Z_t -> Z_c Z_t.
                let (c, t) = (c as usize * w, t as usize * w);
                for k in 0..w {
                    let xc = self.x[c + k];
                    let xt = self.x[t + k];
                    let zt = self.z[t + k];
                    self.x[t + k] ^= xc;
                    self.z[t + k] ^= xc;
                    self.z[c + k] ^= xt ^ zt;
                }
            }
            FOp::CZ(a, b) => {
                let (a, b) = (a as usize * w, b as usize * w);
                for k in 0..w {
                    self.z[a + k] ^= self.x[b + k];
                    self.z[b + k] ^= self.x[a + k];
                }
            }
            FOp::Swap(a, b) => {
                let (a, b) = (a as usize * w, b as usize * w);
                for k in 0..w {
                    self.x.swap(a + k, b + k);
                    self.z.swap(a + k, b + k);
                }
            }
            FOp::Feedback { rec, q, x, z } => {
                let (r, a) = (rec as usize * w, q as usize * w);
                for k in 0..w {
                    let v = self.rec[r + k];
                    if x {
                        self.x[a + k] ^= v;
                    }
                    if z {
                        self.z[a + k] ^= v;
                    }
                }
            }
            _ => unreachable!("non-unitary op in unitary kernel"),
        }
    }

    fn parities(&self, sets: &[Vec<u32>]) -> Vec<u64> {
        let w = self.w;
        let mut out = vec![0u64; sets.len() * w];
        for (i, s) in sets.iter().enumerate() {
            for &r in s {
                for k in 0..w {
                    out[i * w + k] ^= self.rec[r as usize * w + k];
                }
            }
        }
        out
    }
}
