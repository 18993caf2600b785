//! Experiment runner: noise grids, batched sampling, cultivation
//! post-selection, gap decoding and result tables.
//!
//! A shot survives cultivation when no post-selected or herald detector
//! fired and no erasure was flagged before the final growth stage. Shots of
//! circuits with soft detectors are then decoded and scored by their
//! complementary gap; erasures after the growth boundary are passed to the
//! decoder as hints. Circuits without soft detectors have an infinite gap.
//!
//! Batches are seeded by index, so results depend only on the
//! `ExperimentSpec` and never on the thread count.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{apply_erasure, apply_noise, Circuit, DetectorKind, NoiseModel, NoiseParams};
use crate::dem::{
    decode_gap, default_taus, extract_dem, DecodingGraph, DemError, FrontierCounts, FrontierPoint,
    ShotOutcome,
};
use crate::densesim::{run_dense, DenseError, DEFAULT_CAP};
use crate::geometry::PatchKind;
use crate::protocol::{memory_circuit, parse_preset, stage_ranges, ProtocolError};
use crate::scan::tick_of_instructions;
use crate::tableau::{split_seed, FrameProgram, Samples, SimError};

/// Version tag of the result CSV layout.
pub const CSV_SCHEMA: &str = "cultivar-results/1";
/// Environment variable fixing the worker thread count.
pub const THREADS_ENV: &str = "CULTIVAR_THREADS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Circuit(#[from] crate::circuit::CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Dense(#[from] DenseError),
    #[error("decoder failure: {0}")]
    Decode(#[from] DemError),
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// Sets the global rayon pool size from [`THREADS_ENV`], if present.
pub fn init_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub preset: String,
    pub p: Vec<f64>,
    pub e: Vec<f64>,
    /// Three-qubit gate noise; `None` means the default of 3p.
    pub p3q: Vec<Option<f64>>,
    /// Shot cap per noise point.
    pub shots: u64,
    /// Stop a noise point early once this many errors were seen at the
    /// smallest threshold.
    pub target_errors: Option<u64>,
    pub taus: Vec<f64>,
    pub seed: u64,
    pub batch: usize,
}

impl ExperimentSpec {
    pub fn new(preset: &str, p: &[f64], shots: u64) -> Self {
        ExperimentSpec {
            preset: preset.to_string(),
            p: p.to_vec(),
            e: vec![0.0],
            p3q: vec![None],
            shots,
            target_errors: None,
            taus: default_taus(),
            seed: 0,
            batch: 1 << 14,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Spec(m.to_string()));
        if self.shots == 0 {
            return bad("shots must be at least 1");
        }
        if self.p.is_empty() || self.e.is_empty() || self.p3q.is_empty() || self.taus.is_empty() {
            return bad("empty grid");
        }
        if self.batch == 0 {
            return bad("batch must be at least 1");
        }
        let prob = |x: f64| (0.0..=1.0).contains(&x);
        if !self.p.iter().chain(&self.e).all(|&x| prob(x))
            || !self.p3q.iter().flatten().all(|&x| prob(x))
        {
            return bad("probabilities must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisePoint {
    pub p: f64,
    pub e: f64,
    pub p3q: Option<f64>,
}

/// Counts for one noise point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointStats {
    pub shots: u64,
    /// Survived cultivation post-selection.
    pub cult_kept: u64,
    /// Rejected by a herald detector (expected, non-fault rejections).
    pub heralded: u64,
    /// Rejected only because of a cultivation-stage erasure.
    pub erasure_rejected: u64,
    pub counts: FrontierCounts,
    /// Mean dense-simulation infidelity over kept shots, with its standard
    /// error (dense presets only).
    pub dense: Option<(f64, f64)>,
    pub wall_s: f64,
}

impl PointStats {
    pub fn frontier(&self) -> Vec<FrontierPoint> {
        self.counts.points()
    }

    pub fn cult_rate(&self) -> f64 {
        self.cult_kept as f64 / self.shots.max(1) as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub preset: String,
    pub model: String,
    pub p: f64,
    pub e: f64,
    pub p3q: f64,
    pub tau: f64,
    pub seed: u64,
    pub shots: u64,
    pub cult_kept: u64,
    /// Cultivation keep fraction.
    pub cult_rate: f64,
    /// Gap keep fraction among cultivation survivors.
    pub gap_rate: f64,
    /// Product of the two.
    pub rate: f64,
    /// `None` when nothing was kept.
    pub infidelity: Option<f64>,
    pub sigma: Option<f64>,
    pub kept: u64,
    pub errors: u64,
    pub wall_s: f64,
}

pub fn csv_header() -> String {
    "preset,model,p,e,p3q,tau,seed,shots,cult_kept,cult_rate,gap_rate,rate,if,sigma,kept,errors,wall_s"
        .to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map_or("NA".to_string(), |v| format!("{v:e}"))
}

impl ResultRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{:e},{:e},{:e},{},{},{},{},{:e},{:e},{:e},{},{},{},{},{:.3}",
            self.preset,
            self.model,
            self.p,
            self.e,
            self.p3q,
            self.tau,
            self.seed,
            self.shots,
            self.cult_kept,
            self.cult_rate,
            self.gap_rate,
            self.rate,
            opt(self.infidelity),
            opt(self.sigma),
            self.kept,
            self.errors,
            self.wall_s
        )
    }
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut s = format!("# {CSV_SCHEMA}\n{}\n", csv_header());
    for r in rows {
        s += &r.to_csv();
        s.push('\n');
    }
    s
}

pub fn frontier_csv(points: &[FrontierPoint]) -> String {
    let mut s = String::from("tau,rate,if,sigma,kept,errors\n");
    for f in points {
        let _ = writeln!(
            s,
            "{},{:e},{},{},{},{}",
            f.tau,
            f.rate,
            opt(f.infidelity),
            opt(f.sigma),
            f.kept,
            f.errors
        );
    }
    s
}

/// An experiment plus enough metadata to rerun it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub version: String,
    pub git: Option<String>,
    pub spec: ExperimentSpec,
}

impl Manifest {
    pub fn new(spec: &ExperimentSpec) -> Self {
        let git = std::process::Command::new("git")
            .args(["rev-parse", "HEAD"])
            .output()
            .ok()
            .filter(|o| o.status.success())
            .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string());
        Manifest {
            schema: CSV_SCHEMA.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            git,
            spec: spec.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(s).map_err(|e| HarnessError::Spec(e.to_string()))
    }
}

/// Tick from which erasures are decoder hints rather than rejections: the
/// start of the last growth stage, the circuit start when soft detectors
/// exist without growth, and never otherwise.
fn hint_boundary(c: &Circuit) -> usize {
    if !c.detector_kinds().contains(&DetectorKind::Soft) {
        return usize::MAX;
    }
    stage_ranges(c)
        .iter()
        .filter(|s| s.0 == "grow")
        .map(|s| s.1)
        .next_back()
        .unwrap_or(0)
}

/// Rows of `words`-wide bitsets transposed into per-shot index lists.
fn per_shot(bits: &[u64], words: usize, shots: usize, pick: impl Fn(usize) -> bool) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new(); shots];
    if words == 0 {
        return out;
    }
    for (row, chunk) in bits.chunks(words).enumerate() {
        if !pick(row) {
            continue;
        }
        for (w, &v) in chunk.iter().enumerate() {
            let mut v = v;
            while v != 0 {
                let b = v.trailing_zeros() as usize;
                v &= v - 1;
                out[w * 64 + b].push(row as u32);
            }
        }
    }
    out
}

/// Sampler, decoder and post-selection rule for one noisy circuit.
pub struct Pipeline {
    prog: FrameProgram,
    graph: Option<DecodingGraph>,
    /// Per erasure flag: true when it falls before the hint boundary.
    cultivation_flag: Vec<bool>,
}

impl Pipeline {
    pub fn new(c: &Circuit) -> Result<Self, HarnessError> {
        let prog = FrameProgram::compile(c)?;
        let soft = prog.detector_kinds.contains(&DetectorKind::Soft);
        let graph = if soft {
            Some(DecodingGraph::new(&extract_dem(c)?))
        } else {
            None
        };
        let ticks = tick_of_instructions(c);
        let boundary = hint_boundary(c);
        let cultivation_flag = prog
            .erasure_inst
            .iter()
            .map(|&i| ticks[i] < boundary)
            .collect();
        Ok(Pipeline {
            prog,
            graph,
            cultivation_flag,
        })
    }

    pub fn graph(&self) -> Option<&DecodingGraph> {
        self.graph.as_ref()
    }

    pub fn program(&self) -> &FrameProgram {
        &self.prog
    }

    /// Post-selects and decodes one sampled batch.
    pub fn score(&self, s: &Samples) -> Result<(Vec<ShotOutcome>, u64, u64), HarnessError> {
        let n = s.shots;
        let kinds = &s.detector_kinds;
        let disc = s.any_fired_mask(|_, k| k.discards());
        let herald = s.any_fired_mask(|_, k| k == DetectorKind::Herald);
        let cult_erased = s.any_erased_mask(|e| self.cultivation_flag[e]);
        let bit = |m: &[u64], k: usize| m[k / 64] >> (k % 64) & 1 == 1;
        let fired = if self.graph.is_some() {
            per_shot(&s.det, s.words, n, |d| kinds[d] == DetectorKind::Soft)
        } else {
            vec![Vec::new(); n]
        };
        let hints = per_shot(&s.erased, s.words, n, |e| !self.cultivation_flag[e]);
        let mut heralded = 0;
        let mut erasure_rejected = 0;
        for k in 0..n {
            if bit(&herald, k) {
                heralded += 1;
            } else if !bit(&disc, k) && bit(&cult_erased, k) {
                erasure_rejected += 1;
            }
        }
        let out: Vec<ShotOutcome> = (0..n)
            .into_par_iter()
            .map(|k| {
                if bit(&disc, k) || bit(&cult_erased, k) {
                    return Ok(ShotOutcome {
                        kept: false,
                        gap: 0.0,
                        error: false,
                    });
                }
                let truth = s.observable_mask(k);
                Ok(match &self.graph {
                    None => ShotOutcome {
                        kept: true,
                        gap: f64::INFINITY,
                        error: truth != 0,
                    },
                    Some(g) => {
                        let r = decode_gap(g, &fired[k], &hints[k])?;
                        ShotOutcome {
                            kept: true,
                            gap: r.gap,
                            error: r.class != truth,
                        }
                    }
                })
            })
            .collect::<Result<_, DemError>>()?;
        Ok((out, heralded, erasure_rejected))
    }
}

/// Samples `c` in seeded batches until `shots` or the error target.
pub fn run_circuit(
    c: &Circuit,
    taus: &[f64],
    shots: u64,
    target_errors: Option<u64>,
    seed: u64,
    batch: usize,
) -> Result<PointStats, HarnessError> {
    let t0 = Instant::now();
    if !c.is_clifford() {
        return run_dense_point(c, taus, shots, seed, t0);
    }
    let pipe = Pipeline::new(c)?;
    let mut st = PointStats {
        shots: 0,
        cult_kept: 0,
        heralded: 0,
        erasure_rejected: 0,
        counts: FrontierCounts::new(taus),
        dense: None,
        wall_s: 0.0,
    };
    let first = (0..taus.len())
        .min_by(|&a, &b| taus[a].total_cmp(&taus[b]))
        .unwrap_or(0);
    let mut b = 0u64;
    while st.shots < shots {
        if target_errors.is_some_and(|t| st.counts.errors.get(first).is_some_and(|&e| e >= t)) {
            break;
        }
        let n = (batch as u64).min(shots - st.shots) as usize;
        let s = pipe.prog.sample(n, split_seed(seed, b));
        let (outs, her, er) = pipe.score(&s)?;
        st.shots += n as u64;
        st.heralded += her;
        st.erasure_rejected += er;
        for o in &outs {
            st.cult_kept += o.kept as u64;
            st.counts.push(o);
        }
        b += 1;
    }
    if st.counts.total != st.shots {
        return Err(HarnessError::Invariant("streamed shot total differs from batch total".into()));
    }
    st.wall_s = t0.elapsed().as_secs_f64();
    Ok(st)
}

fn run_dense_point(
    c: &Circuit,
    taus: &[f64],
    shots: u64,
    seed: u64,
    t0: Instant,
) -> Result<PointStats, HarnessError> {
    let r = run_dense(c, shots as usize, seed, DEFAULT_CAP)?;
    let inf: Vec<f64> = r
        .trajectories
        .iter()
        .filter_map(|t| t.fidelity.map(|f| 1.0 - f))
        .collect();
    let k = inf.len() as f64;
    let dense = (!inf.is_empty()).then(|| {
        let mean = inf.iter().sum::<f64>() / k;
        let var = inf.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
        (mean, (var / k).sqrt())
    });
    let mut counts = FrontierCounts::new(taus);
    for t in &r.trajectories {
        counts.push(&ShotOutcome {
            kept: t.kept,
            gap: f64::INFINITY,
            error: false,
        });
    }
    Ok(PointStats {
        shots,
        cult_kept: r.kept as u64,
        heralded: r.heralded as u64,
        erasure_rejected: 0,
        counts,
        dense,
        wall_s: t0.elapsed().as_secs_f64(),
    })
}

/// The noisy circuit for one preset and noise point.
pub fn noisy_circuit(preset: &str, np: NoisePoint) -> Result<(Circuit, NoiseModel), HarnessError> {
    let pre = parse_preset(preset)?;
    let c = crate::protocol::build(&pre.config)?;
    let params = match np.p3q {
        Some(q) => NoiseParams::with_p3q(np.p, q),
        None => NoiseParams::new(np.p),
    };
    let c = apply_noise(&c, pre.noise, params)?;
    Ok((apply_erasure(&c, np.e), pre.noise))
}

fn rows_of(spec: &ExperimentSpec, model: NoiseModel, np: NoisePoint, st: &PointStats) -> Vec<ResultRow> {
    st.frontier()
        .into_iter()
        .map(|f| {
            let (infidelity, sigma, errors) = match st.dense {
                Some((m, se)) => (Some(m), Some(se), 0),
                None => (f.infidelity, f.sigma, f.errors as u64),
            };
            ResultRow {
                preset: spec.preset.clone(),
                model: model.name().to_string(),
                p: np.p,
                e: np.e,
                p3q: np.p3q.unwrap_or(3.0 * np.p),
                tau: f.tau,
                seed: spec.seed,
                shots: st.shots,
                cult_kept: st.cult_kept,
                cult_rate: st.cult_rate(),
                gap_rate: if st.cult_kept == 0 {
                    0.0
                } else {
                    f.kept as f64 / st.cult_kept as f64
                },
                rate: f.rate,
                infidelity,
                sigma,
                kept: f.kept as u64,
                errors,
                wall_s: st.wall_s,
            }
        })
        .collect()
}

/// Runs every noise point of `spec`, handing rows to `sink` as each point
/// completes.
pub fn run_streaming(
    spec: &ExperimentSpec,
    mut sink: impl FnMut(&[ResultRow]),
) -> Result<Vec<ResultRow>, HarnessError> {
    spec.validate()?;
    parse_preset(&spec.preset)?;
    let mut all = Vec::new();
    let mut idx = 0u64;
    for &p in &spec.p {
        for &e in &spec.e {
            for &p3q in &spec.p3q {
                let np = NoisePoint { p, e, p3q };
                let (c, model) = noisy_circuit(&spec.preset, np)?;
                let st = run_circuit(
                    &c,
                    &spec.taus,
                    spec.shots,
                    spec.target_errors,
                    split_seed(spec.seed, idx),
                    spec.batch,
                )?;
                let rows = rows_of(spec, model, np, &st);
                sink(&rows);
                all.extend(rows);
                idx += 1;
            }
        }
    }
    Ok(all)
}

pub fn run(spec: &ExperimentSpec) -> Result<Vec<ResultRow>, HarnessError> {
    run_streaming(spec, |_| {})
}

/// Least-squares slope of log(y) against log(x).
pub fn loglog_slope(xy: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xy
        .iter()
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .map(|p| (p.0.ln(), p.1.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    /// (d2, rounds, frontier) per grid point.
    pub frontiers: Vec<(usize, usize, Vec<FrontierPoint>)>,
    pub rows: Vec<ResultRow>,
    /// Largest |IF_a - IF_b| / sqrt(sigma_a^2 + sigma_b^2) over all pairs
    /// and shared thresholds where both sides kept shots.
    pub max_deviation_sigma: f64,
    /// Largest |IF_a - IF_b| / (sigma_a + sigma_b): the error bands
    /// overlap at k sigma when this is at most k.
    pub max_band_separation: f64,
    pub warnings: Vec<String>,
}

/// Pairwise frontier deviation in combined-sigma units.
pub fn max_deviation_sigma(frontiers: &[Vec<FrontierPoint>]) -> f64 {
    max_pairwise(frontiers, |a, b| (a * a + b * b).sqrt())
}

/// Smallest k such that every pair of ±k·sigma bands intersects, i.e. the
/// largest |IF_a - IF_b| / (sigma_a + sigma_b).
pub fn max_band_separation(frontiers: &[Vec<FrontierPoint>]) -> f64 {
    max_pairwise(frontiers, |a, b| a + b)
}

fn max_pairwise(frontiers: &[Vec<FrontierPoint>], combine: impl Fn(f64, f64) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..frontiers.len() {
        for j in i + 1..frontiers.len() {
            for a in &frontiers[i] {
                let Some(b) = frontiers[j].iter().find(|b| b.tau == a.tau) else {
                    continue;
                };
                let (Some(ia), Some(ib)) = (a.infidelity, b.infidelity) else {
                    continue;
                };
                let s = combine(a.sigma.unwrap_or(0.0), b.sigma.unwrap_or(0.0));
                let dev = if s > 0.0 {
                    (ia - ib).abs() / s
                } else if ia == ib {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(dev);
            }
        }
    }
    worst
}

/// Runs the base preset at every (d2, rounds) pair, with p taken
/// from the first entry of the base grid.
pub fn sweep_d2_rounds(
    spec: &ExperimentSpec,
    d2s: &[usize],
    rounds: &[usize],
) -> Result<SweepReport, HarnessError> {
    spec.validate()?;
    let base = parse_preset(&spec.preset)?;
    let d1 = base.config.d1;
    let mut warnings = Vec::new();
    for &d2 in d2s {
        if d2 < 2 * d1 + 1 {
            warnings.push(format!(
                "d2={d2} is below 2*d1+1={}; the final gap is not expected to be insensitive to it",
                2 * d1 + 1
            ));
        }
    }
    let mut frontiers = Vec::new();
    let mut rows = Vec::new();
    let mut idx = 0u64;
    for &d2 in d2s {
        for &r in rounds {
            let mut pre = base.clone();
            pre.config.d2 = d2;
            pre.config.rounds = r;
            let mut s = spec.clone();
            s.preset = pre.id();
            s.p = vec![spec.p[0]];
            s.e = vec![spec.e[0]];
            s.p3q = vec![spec.p3q[0]];
            // Independent streams, so the frontiers compared are independent.
            s.seed = split_seed(spec.seed, idx);
            idx += 1;
            let rr = run(&s)?;
            frontiers.push((d2, r, frontier_of_rows(&rr)));
            rows.extend(rr);
        }
    }
    let fs: Vec<Vec<FrontierPoint>> = frontiers.iter().map(|f| f.2.clone()).collect();
    Ok(SweepReport {
        max_deviation_sigma: max_deviation_sigma(&fs),
        max_band_separation: max_band_separation(&fs),
        frontiers,
        rows,
        warnings,
    })
}

fn frontier_of_rows(rows: &[ResultRow]) -> Vec<FrontierPoint> {
    rows.iter()
        .map(|r| FrontierPoint {
            tau: r.tau,
            rate: r.rate,
            infidelity: r.infidelity,
            sigma: r.sigma,
            kept: r.kept as usize,
            errors: r.errors as usize,
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MemorySpec {
    pub kind: PatchKind,
    pub d: usize,
    pub rounds: usize,
    /// Pauli strength shared by both configurations; the mixed one adds
    /// erasure at twice this rate.
    pub p: f64,
    pub shots: u64,
    pub seed: u64,
    pub taus: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct MemoryReport {
    pub pauli_only: Vec<FrontierPoint>,
    pub mixed: Vec<FrontierPoint>,
}

impl MemoryReport {
    /// Some mixed point reaches at most the infidelity of some Pauli-only
    /// point (with at least one error there) while keeping strictly more
    /// shots.
    pub fn mixed_keeps_more_at_matched_if(&self) -> bool {
        self.pauli_only.iter().any(|a| {
            a.errors > 0
                && self.mixed.iter().any(|b| {
                    b.infidelity.is_some_and(|ib| ib <= a.infidelity.unwrap_or(0.0)) && b.rate > a.rate
                })
        })
    }
}

/// d-round surface-code memory under gate-only noise: Pauli noise p alone
/// against Pauli noise p with erasure 2p, both post-selected only by the
/// complementary gap.
pub fn memory_experiment(ms: &MemorySpec) -> Result<MemoryReport, HarnessError> {
    let base = memory_circuit(ms.kind, ms.d, ms.rounds)?;
    let noisy = apply_noise(&base, NoiseModel::GateOnly, NoiseParams::new(ms.p))?;
    let mixed = apply_erasure(&noisy, 2.0 * ms.p);
    let a = run_circuit(&noisy, &ms.taus, ms.shots, None, split_seed(ms.seed, 0), 1 << 14)?;
    let b = run_circuit(&mixed, &ms.taus, ms.shots, None, split_seed(ms.seed, 1), 1 << 14)?;
    Ok(MemoryReport {
        pauli_only: a.frontier(),
        mixed: b.frontier(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_shot_transposes_rows() {
        // Two rows, 70 shots -> 2 words per row.
        let words = 2;
        let mut bits = vec![0u64; 2 * words];
        bits[0] = 1 << 3;
        bits[words + 1] = 1 << 2;
        let v = per_shot(&bits, words, 70, |_| true);
        assert_eq!(v[3], vec![0]);
        assert_eq!(v[66], vec![1]);
        let v = per_shot(&bits, words, 70, |r| r == 1);
        assert!(v[3].is_empty());
    }

    #[test]
    fn slope_of_a_cube_is_three() {
        let xy: Vec<(f64, f64)> = [1e-3, 3e-3, 1e-2].iter().map(|&p| (p, 5.0 * p * p * p)).collect();
        assert!((loglog_slope(&xy).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn noiseless_run_keeps_everything_with_no_errors() {
        let mut spec = ExperimentSpec::new("hxy-rot-d3", &[0.0], 500);
        spec.taus = vec![0.0, 5.0];
        let rows = run(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        for r in rows {
            assert_eq!(r.rate, 1.0);
            assert_eq!(r.errors, 0);
            assert_eq!(r.infidelity, Some(0.0));
        }
    }

    #[test]
    fn runs_are_deterministic_given_the_seed() {
        let mut spec = ExperimentSpec::new("hxy-rot-d3-d2_5-r2", &[3e-3], 2000);
        spec.seed = 7;
        spec.batch = 128;
        let a = run(&spec).unwrap();
        let b = run(&spec).unwrap();
        let strip = |v: Vec<ResultRow>| -> Vec<String> {
            v.into_iter()
                .map(|mut r| {
                    r.wall_s = 0.0;
                    r.to_csv()
                })
                .collect()
        };
        assert_eq!(strip(a), strip(b));
    }

    #[test]
    fn memory_without_noise_has_no_errors() {
        let base = memory_circuit(PatchKind::Rotated, 3, 3).unwrap();
        let st = run_circuit(&base, &[0.0], 200, None, 1, 64).unwrap();
        assert_eq!(st.counts.errors[0], 0);
        assert_eq!(st.counts.kept[0], 200);
    }

    #[test]
    fn manifest_round_trips() {
        let spec = ExperimentSpec::new("hxy-rot-d3", &[1e-3, 3e-3], 10);
        let m = Manifest::new(&spec);
        assert_eq!(Manifest::from_json(&m.to_json()).unwrap().spec, spec);
    }

    #[test]
    fn deviation_of_identical_frontiers_is_zero() {
        let f = vec![FrontierPoint {
            tau: 0.0,
            rate: 0.5,
            infidelity: Some(0.01),
            sigma: Some(0.001),
            kept: 100,
            errors: 1,
        }];
        assert_eq!(max_deviation_sigma(&[f.clone(), f]), 0.0);
    }

    #[test]
    fn band_separation_is_the_weaker_test() {
        let pt = |x: f64, s: f64| {
            vec![FrontierPoint {
                tau: 0.0,
                rate: 0.5,
                infidelity: Some(x),
                sigma: Some(s),
                kept: 100,
                errors: 1,
            }]
        };
        let fs = [pt(0.010, 0.001), pt(0.014, 0.001)];
        assert!((max_band_separation(&fs) - 2.0).abs() < 1e-9);
        assert!((max_deviation_sigma(&fs) - 2.0 * 2f64.sqrt()).abs() < 1e-9);
    }
}
