//! Detector error models and complementary-gap decoding.
//!
//! Every noise channel is split into independent single-Pauli mechanisms,
//! each propagated through the frame engine to its detector/observable
//! symptom. Mechanisms with equal symptoms (and erasure flag) are merged.

mod blossom;
mod decode;
mod frontier;
mod graph;

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::circuit::{Channel, Circuit, DetectorKind, Pauli};
use crate::tableau::{Fault, FaultEffect, FrameProgram, SimError};

pub use blossom::{max_weight_matching, min_cost_perfect_matching};
pub use decode::{decode_exhaustive, decode_gap, decode_subsets, GapResult, MAX_EXHAUSTIVE_DEFECTS};
pub use frontier::{default_taus, frontier, FrontierCounts, FrontierPoint, ShotOutcome};
pub use graph::{DecodingGraph, Edge, WEIGHT_SCALE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DemError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("odd defect count in a component without boundary")]
    Unmatchable,
    #[error("component {0} has no consistent two-sided boundary")]
    Unsupported(usize),
    #[error("{0} defects exceed the exhaustive limit")]
    TooManyDefects(usize),
}

/// One elementary fault: a Pauli (or record flip) injected just before frame
/// op `op`, from circuit instruction `inst`.
#[derive(Clone, Debug)]
pub struct FaultComponent {
    pub op: usize,
    pub inst: usize,
    pub fault: Fault,
    /// (qubit, Pauli) for labelling; MERR uses `Pauli::I` on the measured qubit.
    pub terms: Vec<(u32, Pauli)>,
    /// Independent probability of this component.
    pub p: f64,
    pub channel: Option<Channel>,
    pub erasure: Option<u32>,
    /// Noise site (op, target group); components of one site are mutually
    /// exclusive alternatives of the same channel.
    pub site: u32,
}

/// Probability q of each of the 4^n - 1 independent Pauli mechanisms that
/// compose an n-qubit channel applying a uniformly random non-identity
/// Pauli with total probability `p`.
pub fn independent_prob(p: f64, n: usize) -> f64 {
    let k = (1u64 << (2 * n)) as f64;
    let inner = (1.0 - k * p / (k - 1.0)).max(0.0);
    (1.0 - inner.powf(1.0 / (1u64 << (2 * n - 1)) as f64)) / 2.0
}

/// All elementary fault components of every noise site. Correlated
/// channels with p < 1 become one component; p >= 1 ones are part of the
/// baseline and skipped.
pub fn fault_components(prog: &FrameProgram) -> Vec<FaultComponent> {
    use crate::tableau::FOpView;
    let mut out = Vec::new();
    let mut site = 0u32;
    for (op, view) in prog.op_views().enumerate() {
        let inst = prog.instruction_of(op);
        match view {
            FOpView::Noise {
                channel,
                p,
                qubits,
                flag,
            } => {
                let n = channel.arity();
                let patterns: Vec<u32> = match channel {
                    Channel::XErr => vec![1],
                    Channel::ZErr => vec![2],
                    _ => (1..1u32 << (2 * n)).collect(),
                };
                let q = match channel {
                    Channel::XErr | Channel::ZErr => p,
                    _ if channel.is_erasure() => {
                        let k = (1u64 << (2 * n)) as f64;
                        independent_prob(p * (k - 1.0) / k, n)
                    }
                    _ => independent_prob(p, n),
                };
                for (g, qs) in qubits.chunks(n).enumerate() {
                    for &r in &patterns {
                        let terms: Vec<(u32, Pauli)> = qs
                            .iter()
                            .enumerate()
                            .map(|(j, &q)| {
                                let b = (r >> (2 * j)) & 3;
                                (q, Pauli::from_bits(b & 1 == 1, b & 2 == 2))
                            })
                            .filter(|t| t.1 != Pauli::I)
                            .collect();
                        let bits: Vec<(u32, bool, bool)> = terms
                            .iter()
                            .map(|&(q, pa)| {
                                let (x, z) = pa.bits();
                                (q, x, z)
                            })
                            .collect();
                        out.push(FaultComponent {
                            op,
                            inst,
                            fault: Fault::pauli(op, &bits),
                            terms,
                            p: q,
                            channel: Some(channel),
                            erasure: channel.is_erasure().then_some(flag + g as u32),
                            site,
                        });
                    }
                    site += 1;
                }
            }
            FOpView::MErr { p, recs, qubits } => {
                for (&rec, &q) in recs.iter().zip(qubits) {
                    out.push(FaultComponent {
                        op,
                        inst,
                        fault: Fault::record_flip(op, rec),
                        terms: vec![(q, Pauli::I)],
                        p,
                        channel: Some(Channel::MErr),
                        erasure: None,
                        site,
                    });
                    site += 1;
                }
            }
            FOpView::Corr { p, terms } if p < 1.0 => {
                let bits: Vec<(u32, bool, bool)> = terms.to_vec();
                out.push(FaultComponent {
                    op,
                    inst,
                    fault: Fault::pauli(op, &bits),
                    terms: terms
                        .iter()
                        .map(|&(q, x, z)| (q, Pauli::from_bits(x, z)))
                        .collect(),
                    p,
                    channel: None,
                    erasure: None,
                    site,
                });
                site += 1;
            }
            FOpView::Corr { .. } | FOpView::Other => {}
        }
    }
    out
}

/// Symptom of the always-applied correlated Paulis (p >= 1), relative to
/// the noiseless reference.
pub fn baseline_effect(prog: &FrameProgram) -> FaultEffect {
    use crate::tableau::FOpView;
    let faults: Vec<Fault> = prog
        .op_views()
        .enumerate()
        .filter_map(|(op, v)| match v {
            FOpView::Corr { p, terms } if p >= 1.0 => Some(Fault::pauli(op, &terms)),
            _ => None,
        })
        .collect();
    let mut out = FaultEffect {
        detectors: Vec::new(),
        observables: 0,
    };
    for e in prog.propagate(&faults) {
        out = xor_effects(&out, &e);
    }
    out
}

pub fn xor_effects(a: &FaultEffect, b: &FaultEffect) -> FaultEffect {
    FaultEffect {
        detectors: xor_sorted(&a.detectors, &b.detectors),
        observables: a.observables ^ b.observables,
    }
}

pub(crate) fn xor_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            out.push(b[j]);
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    out
}

/// Propagates components in lane batches.
pub fn propagate_components(prog: &FrameProgram, comps: &[FaultComponent]) -> Vec<FaultEffect> {
    use rayon::prelude::*;
    const BATCH: usize = 1 << 12;
    comps
        .par_chunks(BATCH)
        .flat_map_iter(|ch| {
            let faults: Vec<Fault> = ch.iter().map(|c| c.fault.clone()).collect();
            prog.propagate(&faults)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mechanism {
    pub p: f64,
    /// Sorted detector ids.
    pub detectors: Vec<u32>,
    pub observables: u64,
    pub erasure: Option<u32>,
    /// Suggested split into the symptoms of the fault's X and Z halves
    /// (empty when the fault is pure X or Z, or a half is silent).
    pub parts: Vec<FaultEffect>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorErrorModel {
    pub num_detectors: usize,
    pub num_observables: usize,
    pub detector_kinds: Vec<DetectorKind>,
    pub mechanisms: Vec<Mechanism>,
    /// Symptom of deterministic correlated Paulis, XORed into every shot.
    pub baseline: FaultEffect,
}

/// p1 + p2 - 2 p1 p2: probability that exactly one of two independent
/// mechanisms fires.
pub fn xor_prob(a: f64, b: f64) -> f64 {
    a + b - 2.0 * a * b
}

pub fn extract_dem(c: &Circuit) -> Result<DetectorErrorModel, DemError> {
    let prog = FrameProgram::compile(c)?;
    let comps = fault_components(&prog);
    let effects = propagate_components(&prog, &comps);
    // X and Z halves of faults that carry both, as decomposition hints.
    let mut halves = Vec::new();
    let mut half_of = vec![None; comps.len()];
    for (i, comp) in comps.iter().enumerate() {
        let bits = comp.fault.terms();
        let xs: Vec<(u32, bool, bool)> = bits.iter().filter(|t| t.1).map(|t| (t.0, true, false)).collect();
        let zs: Vec<(u32, bool, bool)> = bits.iter().filter(|t| t.2).map(|t| (t.0, false, true)).collect();
        if !xs.is_empty() && !zs.is_empty() && effects[i].detectors.len() >= 2 {
            half_of[i] = Some(halves.len());
            halves.push(Fault::pauli(comp.op, &xs));
            halves.push(Fault::pauli(comp.op, &zs));
        }
    }
    let half_effects = prog.propagate(&halves);
    let mut merged: HashMap<(Vec<u32>, u64, Option<u32>), (f64, Vec<FaultEffect>)> = HashMap::new();
    for (i, (comp, e)) in comps.iter().zip(effects).enumerate() {
        if comp.p <= 0.0 || (e.detectors.is_empty() && e.observables == 0) {
            continue;
        }
        let parts = match half_of[i] {
            Some(h) => {
                let (a, b) = (&half_effects[h], &half_effects[h + 1]);
                let empty = |x: &FaultEffect| x.detectors.is_empty() && x.observables == 0;
                if empty(a) || empty(b) {
                    Vec::new()
                } else {
                    vec![a.clone(), b.clone()]
                }
            }
            None => Vec::new(),
        };
        let slot = merged
            .entry((e.detectors, e.observables, comp.erasure))
            .or_insert((0.0, parts));
        slot.0 = xor_prob(slot.0, comp.p);
    }
    let mut mechanisms: Vec<Mechanism> = merged
        .into_iter()
        .filter(|(_, (p, _))| *p > 0.0)
        .map(|((detectors, observables, erasure), (p, parts))| Mechanism {
            p,
            detectors,
            observables,
            erasure,
            parts,
        })
        .collect();
    mechanisms.sort_by(|a, b| {
        (&a.detectors, a.observables, a.erasure).cmp(&(&b.detectors, b.observables, b.erasure))
    });
    Ok(DetectorErrorModel {
        num_detectors: prog.num_detectors(),
        num_observables: prog.num_observables(),
        detector_kinds: prog.detector_kinds.clone(),
        mechanisms,
        baseline: baseline_effect(&prog),
    })
}

impl DetectorErrorModel {
    /// Probability that each detector fires, from the independent-mechanism
    /// model.
    pub fn detector_marginals(&self) -> Vec<f64> {
        let mut even = vec![1.0; self.num_detectors];
        for m in &self.mechanisms {
            for &d in &m.detectors {
                even[d as usize] *= 1.0 - 2.0 * m.p;
            }
        }
        let mut out: Vec<f64> = even.into_iter().map(|e| (1.0 - e) / 2.0).collect();
        for &d in &self.baseline.detectors {
            out[d as usize] = 1.0 - out[d as usize];
        }
        out
    }

    /// One mechanism per line: `error(p) D.. L.. [E..]`, with a suggested
    /// decomposition written as `D.. L.. ^ D.. L..`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let symptom = |s: &mut String, dets: &[u32], obs: u64| {
            for d in dets {
                let _ = write!(s, " D{d}");
            }
            for o in 0..64 {
                if obs >> o & 1 == 1 {
                    let _ = write!(s, " L{o}");
                }
            }
        };
        for m in &self.mechanisms {
            let _ = write!(s, "error({})", m.p);
            if m.parts.is_empty() {
                symptom(&mut s, &m.detectors, m.observables);
            } else {
                for (i, part) in m.parts.iter().enumerate() {
                    if i > 0 {
                        s.push_str(" ^");
                    }
                    symptom(&mut s, &part.detectors, part.observables);
                }
            }
            if let Some(e) = m.erasure {
                let _ = write!(s, " E{e}");
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;

    #[test]
    fn single_xerr_before_measurement() {
        let c = Circuit::parse("R 0\nTICK\nXERR(0.125) 0\nM 0\nDETECTOR rec[-1]\n").unwrap();
        let dem = extract_dem(&c).unwrap();
        assert_eq!(
            dem.mechanisms,
            vec![Mechanism {
                p: 0.125,
                detectors: vec![0],
                observables: 0,
                erasure: None,
                parts: Vec::new(),
            }]
        );
    }

    #[test]
    fn dep1_splits_into_independent_paulis() {
        // Z-basis detector sees X and Y; X-basis detector sees Z and Y.
        let c = Circuit::parse(
            "R 0\nRX 1\nTICK\nDEP1(0.03) 0 1\nM 0\nMX 1\nDETECTOR rec[-2]\nDETECTOR rec[-1]\n",
        )
        .unwrap();
        let dem = extract_dem(&c).unwrap();
        let q = independent_prob(0.03, 1);
        let both = xor_prob(q, q);
        assert_eq!(dem.mechanisms.len(), 2);
        for m in &dem.mechanisms {
            assert!((m.p - both).abs() < 1e-15);
        }
        // Composition of three independent q-mechanisms reproduces the
        // channel: P(X component only) = q(1-q)^2 + q^2(1-q)... marginal of
        // one detector is 2p/3.
        let marg = dem.detector_marginals();
        assert!((marg[0] - 0.02).abs() < 1e-12, "{}", marg[0]);
    }

    #[test]
    fn independent_prob_inverts_channel_marginal() {
        for n in 1..=3 {
            let p = 0.01;
            let q = independent_prob(p, n);
            let k = (1u64 << (2 * n)) as f64;
            // P(no mechanism fires, or an identity-equivalent set) = 1 - p;
            // for independent uniform Pauli mechanisms the identity weight is
            // (1 + (k-1)(1-2q)^(k/2)) / k.
            let ident = (1.0 + (k - 1.0) * (1.0 - 2.0 * q).powf(k / 2.0)) / k;
            assert!((ident - (1.0 - p)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn xor_sorted_is_symmetric_difference() {
        assert_eq!(xor_sorted(&[1, 3, 5], &[3, 4]), vec![1, 4, 5]);
        assert_eq!(xor_sorted(&[], &[2]), vec![2]);
    }
}
