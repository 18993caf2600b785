//! Exhaustive low-weight fault scans on Clifford (proxy) circuits.
//!
//! Every elementary fault component of every noise site is propagated once
//! through the frame engine. A combination of faults is *detected* when the
//! XOR of its detector symptoms (together with the effect of any certain
//! correlated operation such as a deliberate input flip) is non-empty. An
//! undetected combination is *benign* when it leaves the observables alone,
//! otherwise it is an undetected logical failure.
//!
//! Combinations of weight w are enumerated as (w-1)-subsets plus a hash
//! lookup of the last fault by its symptom, so the cost is C(n, w-1)
//! instead of C(n, w).

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::circuit::{Circuit, Instruction, Pauli};
use crate::dem::{baseline_effect, fault_components, xor_effects, FaultComponent};
use crate::protocol::{ghz_circuit, stage_ranges};
use crate::tableau::{FaultEffect, FrameProgram, SimError};

#[derive(Debug, Error)]
pub enum ScanError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("circuit is not Clifford; use the dense fault scan")]
    NonClifford,
    #[error("scan needs {needed} enumeration steps, budget is {budget}")]
    Budget { needed: u128, budget: u128 },
    #[error("circuit has no stage named {0:?}")]
    NoStage(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Detected,
    Benign,
    UndetectedLogical,
}

/// Where a fault happens: time slice, instruction, and the Pauli it applies.
/// A flipped measurement result is shown as `M` on the measured qubit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaultLabel {
    pub tick: usize,
    pub inst: usize,
    pub terms: Vec<(u32, char)>,
}

impl fmt::Display for FaultLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tick {} inst {}", self.tick, self.inst)?;
        for (q, p) in &self.terms {
            write!(f, " {p}{q}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Finding {
    /// Indices into the component list, increasing.
    pub components: Vec<usize>,
    pub labels: Vec<FaultLabel>,
    pub observables: u64,
}

#[derive(Clone, Debug)]
pub struct ScanOptions {
    pub max_weight: usize,
    /// Limit on enumerated (w-1)-subsets summed over all weights.
    pub budget: u128,
    /// Findings kept in the report; the count is always exact.
    pub max_findings: usize,
}

impl ScanOptions {
    pub fn new(max_weight: usize) -> Self {
        ScanOptions {
            max_weight,
            budget: 2_000_000_000,
            max_findings: 64,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct WeightStats {
    pub weight: usize,
    pub combinations: u128,
    pub undetected: u128,
    pub logical: u128,
}

#[derive(Clone, Debug, Default)]
pub struct ScanReport {
    pub components: usize,
    pub baseline: Option<FaultEffect>,
    pub per_weight: Vec<WeightStats>,
    pub logical_count: u128,
    pub findings: Vec<Finding>,
}

impl ScanReport {
    pub fn is_clean(&self) -> bool {
        self.logical_count == 0
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("fault components: {}\n", self.components);
        if let Some(b) = &self.baseline {
            s += &format!(
                "certain operations: {} detectors, observables {:#b}\n",
                b.detectors.len(),
                b.observables
            );
        }
        for w in &self.per_weight {
            s += &format!(
                "weight {}: {} combinations, {} undetected, {} undetected-logical\n",
                w.weight, w.combinations, w.undetected, w.logical
            );
        }
        for f in &self.findings {
            s += &format!("undetected-logical (obs {:#b}):", f.observables);
            for l in &f.labels {
                s += &format!(" [{l}]");
            }
            s += "\n";
        }
        if (self.findings.len() as u128) < self.logical_count {
            s += &format!("... {} more\n", self.logical_count - self.findings.len() as u128);
        }
        s
    }
}

fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

pub(crate) fn tick_of_instructions(c: &Circuit) -> Vec<usize> {
    let mut t = 0;
    c.instructions
        .iter()
        .map(|i| {
            let here = t;
            if matches!(i, Instruction::Tick) {
                t += 1;
            }
            here
        })
        .collect()
}

fn label(comp: &FaultComponent, ticks: &[usize]) -> FaultLabel {
    FaultLabel {
        tick: ticks[comp.inst],
        inst: comp.inst,
        terms: comp
            .terms
            .iter()
            .map(|&(q, p)| (q, if p == Pauli::I { 'M' } else { p.letter() }))
            .collect(),
    }
}

/// Components a fault scan enumerates: Pauli and measurement faults.
/// Heralded erasures and probabilistic correlated operations (which model
/// intended randomness, not faults) are left out.
fn scan_components(prog: &FrameProgram) -> Vec<FaultComponent> {
    fault_components(prog)
        .into_iter()
        .filter(|f| f.erasure.is_none() && f.channel.is_some())
        .collect()
}

pub fn fault_scan(c: &Circuit, max_weight: usize) -> Result<ScanReport, ScanError> {
    fault_scan_with(c, &ScanOptions::new(max_weight))
}

pub fn fault_scan_with(c: &Circuit, opts: &ScanOptions) -> Result<ScanReport, ScanError> {
    if !c.is_clifford() {
        return Err(ScanError::NonClifford);
    }
    let prog = FrameProgram::compile(c)?;
    let comps = scan_components(&prog);
    let n = comps.len();
    let needed: u128 = (1..=opts.max_weight).map(|w| binom(n, w - 1)).sum();
    if needed > opts.budget {
        return Err(ScanError::Budget {
            needed,
            budget: opts.budget,
        });
    }
    let faults: Vec<_> = comps.iter().map(|f| f.fault.clone()).collect();
    let effects = prog.propagate(&faults);
    let base = baseline_effect(&prog);
    let ticks = tick_of_instructions(c);

    let mut by_syndrome: HashMap<&[u32], Vec<usize>> = HashMap::new();
    for (i, e) in effects.iter().enumerate() {
        by_syndrome.entry(&e.detectors).or_default().push(i);
    }

    // Components of one site are contiguous.
    let nsites = comps.last().map_or(0, |f| f.site as usize + 1);
    let mut site_range = vec![(0usize, 0usize); nsites];
    for (i, f) in comps.iter().enumerate().rev() {
        let r = &mut site_range[f.site as usize];
        if r.1 == 0 {
            r.1 = i + 1;
        }
        r.0 = i;
    }

    let mut report = ScanReport {
        components: n,
        baseline: (!base.detectors.is_empty() || base.observables != 0).then(|| base.clone()),
        ..Default::default()
    };
    let record = |report: &mut ScanReport, combo: &[usize], obs: u64| {
        report.logical_count += 1;
        if report.findings.len() < opts.max_findings {
            report.findings.push(Finding {
                components: combo.to_vec(),
                labels: combo.iter().map(|&i| label(&comps[i], &ticks)).collect(),
                observables: obs,
            });
        }
    };

    if base.detectors.is_empty() && base.observables != 0 {
        record(&mut report, &[], base.observables);
    }

    for w in 1..=opts.max_weight {
        let mut st = WeightStats {
            weight: w,
            combinations: 0,
            undetected: 0,
            logical: 0,
        };
        let mut prefix: Vec<usize> = Vec::with_capacity(w);
        // Depth-first over increasing (w-1)-subsets with distinct sites.
        fn walk(
            start: usize,
            left: usize,
            acc: &FaultEffect,
            prefix: &mut Vec<usize>,
            comps: &[FaultComponent],
            effects: &[FaultEffect],
            visit: &mut dyn FnMut(&[usize], &FaultEffect),
        ) {
            if left == 0 {
                visit(prefix, acc);
                return;
            }
            for i in start..comps.len() {
                if prefix.iter().any(|&j| comps[j].site == comps[i].site) {
                    continue;
                }
                prefix.push(i);
                let next = xor_effects(acc, &effects[i]);
                walk(i + 1, left - 1, &next, prefix, comps, effects, visit);
                prefix.pop();
            }
        }
        let mut found: Vec<(Vec<usize>, u64)> = Vec::new();
        let mut visit = |pre: &[usize], acc: &FaultEffect| {
            let lo = pre.last().map_or(0, |&j| j + 1);
            // Pairable with the remaining comp count as combinations; the
            // last fault is looked up by the syndrome it must cancel.
            let mut cands = n - lo;
            for &j in pre {
                let (a, b) = site_range[comps[j].site as usize];
                cands -= b.saturating_sub(a.max(lo));
            }
            st.combinations += cands as u128;
            let Some(list) = by_syndrome.get(acc.detectors.as_slice()) else {
                return;
            };
            for &i in list {
                if i < lo || pre.iter().any(|&j| comps[j].site == comps[i].site) {
                    continue;
                }
                st.undetected += 1;
                let obs = acc.observables ^ effects[i].observables;
                if obs != 0 {
                    let mut combo = pre.to_vec();
                    combo.push(i);
                    found.push((combo, obs));
                }
            }
        };
        walk(0, w - 1, &base, &mut prefix, &comps, &effects, &mut visit);
        st.logical = found.len() as u128;
        for (combo, obs) in found {
            record(&mut report, &combo, obs);
        }
        report.per_weight.push(st);
    }
    Ok(report)
}

/// Verdict for one fault set against a circuit (no enumeration).
pub fn classify(c: &Circuit, faults: &[crate::tableau::Fault]) -> Result<Verdict, ScanError> {
    let prog = FrameProgram::compile(c)?;
    let mut acc = baseline_effect(&prog);
    for e in prog.propagate(faults) {
        acc = xor_effects(&acc, &e);
    }
    Ok(if !acc.detectors.is_empty() {
        Verdict::Detected
    } else if acc.observables != 0 {
        Verdict::UndetectedLogical
    } else {
        Verdict::Benign
    })
}

#[derive(Clone, Debug, Default)]
pub struct GhzReport {
    pub ancillas: usize,
    pub faults: usize,
    pub detected: usize,
    pub benign: usize,
    /// Undetected faults that flip the X readout of the middle qubit. Any
    /// single Z fault on the middle qubit does this; the readout is
    /// protected by repetition, not by the GHZ circuit.
    pub readout_flips: usize,
    /// Undetected faults leaving an ancilla error of X-weight two or more
    /// (after the all-X stabilizer) at the end of preparation.
    pub bad: Vec<FaultLabel>,
}

impl GhzReport {
    pub fn one_flag(&self) -> bool {
        self.bad.is_empty()
    }
}

/// Weight-1 scan of GHZ preparation and measurement on `n` ancillas under
/// the uniform noise model. A preparation fault is benign when it is
/// undetected and the ancilla error it leaves behind, which is what the
/// controlled layer would copy onto data, has X-weight at most one modulo
/// the all-X stabilizer; the Z part always reduces to weight at most one
/// using the ZZ stabilizers. Faults after preparation never touch data.
pub fn ghz_one_flag(n: usize) -> Result<GhzReport, ScanError> {
    let c = crate::circuit::apply_noise(
        &ghz_circuit(n),
        crate::circuit::NoiseModel::Uniform,
        crate::circuit::NoiseParams::new(1e-3),
    )
    .expect("ghz circuit is noiseless");
    let (_, _, prep_end) = stage_ranges(&c)
        .into_iter()
        .find(|s| s.0 == "ghz_prep")
        .ok_or_else(|| ScanError::NoStage("ghz_prep".into()))?;
    let ticks = tick_of_instructions(&c);
    let cut = ticks.partition_point(|&t| t < prep_end);
    let prefix = Circuit {
        coords: c.coords.clone(),
        meta: Default::default(),
        instructions: c.instructions[..cut].to_vec(),
    };
    let prog = FrameProgram::compile(&c)?;
    let pre = FrameProgram::compile(&prefix)?;
    let comps = scan_components(&prog);
    let faults: Vec<_> = comps.iter().map(|f| f.fault.clone()).collect();
    let effects = prog.propagate(&faults);
    let in_prep: Vec<usize> = (0..comps.len())
        .filter(|&i| comps[i].op < pre.num_ops())
        .collect();
    let watch: Vec<u32> = (0..c.num_qubits() as u32).collect();
    let prep_faults: Vec<_> = in_prep.iter().map(|&i| faults[i].clone()).collect();
    let (_, frames) = pre.propagate_with_frames(&prep_faults, &watch);
    let mut residual: Vec<Option<&Vec<(bool, bool)>>> = vec![None; comps.len()];
    for (k, &i) in in_prep.iter().enumerate() {
        residual[i] = Some(&frames[k]);
    }

    let mut rep = GhzReport {
        ancillas: n,
        faults: comps.len(),
        ..Default::default()
    };
    for (i, e) in effects.iter().enumerate() {
        if !e.detectors.is_empty() {
            rep.detected += 1;
            continue;
        }
        if e.observables != 0 {
            rep.readout_flips += 1;
        }
        let ok = match residual[i] {
            None => true,
            Some(fr) => {
                let wx = fr.iter().filter(|b| b.0).count();
                wx.min(n - wx) <= 1
            }
        };
        if ok {
            rep.benign += 1;
        } else {
            rep.bad.push(label(&comps[i], &ticks));
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{apply_noise, NoiseModel, NoiseParams};

    fn rep_code() -> Circuit {
        // Two-qubit repetition check: Z1 Z2 parity through one ancilla, with
        // the logical read on qubit 0.
        Circuit::parse(
            "R 0 1 2\nTICK\nCX 0 2\nTICK\nCX 1 2\nTICK\nM 2\nM 0 1\n\
             DETECTOR_PS rec[-3]\nDETECTOR_PS rec[-1] rec[-2]\nOBSERVABLE_INCLUDE(0) rec[-2]\n",
        )
        .unwrap()
    }

    #[test]
    fn weight_one_x_on_data_is_detected_weight_two_is_not() {
        let c = apply_noise(&rep_code(), NoiseModel::GateOnly, NoiseParams::new(1e-3)).unwrap();
        let r = fault_scan(&c, 2).unwrap();
        assert_eq!(r.per_weight[0].logical, 0);
        assert!(r.per_weight[1].logical > 0, "{}", r.to_text());
    }

    #[test]
    fn binom_small() {
        assert_eq!(binom(5, 2), 10);
        assert_eq!(binom(3, 0), 1);
        assert_eq!(binom(2, 3), 0);
    }

    #[test]
    fn ghz_small_sizes_are_one_flag() {
        for n in [2, 3, 4, 5, 7] {
            let r = ghz_one_flag(n).unwrap();
            assert!(r.one_flag(), "n={n}: {:?}", r.bad);
            assert_eq!(r.detected + r.benign + r.bad.len(), r.faults);
        }
    }
}
