//! Cultivation circuit builders.
//!
//! A build runs, in order: data reset and a sign-fixing syndrome round,
//! injection of the magic state, one post-selected round, one or more
//! projections onto the +1 eigenspace of the transversal logical operator
//! (double-checking or GHZ phase kickback), optional growth 3 -> 5, expansion
//! to `d2` with soft-decoded rounds, and an ideal final readout.
//!
//! Clifford proxies swap each controlled factor for a same-arity Clifford
//! gate that measures logical X (or XX for CX), so noise locations line up
//! with the true circuit.

mod builder;
mod presets;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::circuit::{Basis, Circuit, DetectorKind, Gate, NoiseModel, Pauli};
use crate::geometry::{
    build_patch, expansion_map, mid_cycle, GeometryError, Patch, PatchKind, Site, StabType,
};
use crate::gf2::{self, Bits};

use builder::Builder;
pub use presets::{parse_preset, preset_ids, Preset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    H,
    HXY,
    CX,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::H => "h",
            Variant::HXY => "hxy",
            Variant::CX => "cx",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    DoubleCheck,
    PhaseKickback,
}

impl Projection {
    pub fn name(self) -> &'static str {
        match self {
            Projection::DoubleCheck => "dc",
            Projection::PhaseKickback => "pk",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ProtocolConfig {
    pub variant: Variant,
    pub kind: PatchKind,
    pub d1: usize,
    pub d2: usize,
    /// Soft-decoded rounds after expansion.
    pub rounds: usize,
    pub projection: Projection,
    /// Clifford proxy (true) or the real non-Clifford circuit.
    pub proxy: bool,
    /// Prepare the orthogonal magic state instead (fault-scan experiments).
    pub input_flip: bool,
}

impl ProtocolConfig {
    /// Proxy config with no expansion. Phase kickback is the default
    /// projection for CX and for d1 = 2, double-checking otherwise.
    pub fn new(variant: Variant, kind: PatchKind, d1: usize) -> Self {
        let projection = if variant == Variant::CX || d1 == 2 {
            Projection::PhaseKickback
        } else {
            Projection::DoubleCheck
        };
        ProtocolConfig {
            variant,
            kind,
            d1,
            d2: d1,
            rounds: 0,
            projection,
            proxy: true,
            input_flip: false,
        }
    }

    pub fn expanded(&self) -> bool {
        self.d2 > self.d1
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if ![2, 3, 5].contains(&self.d1) {
            return Err(ProtocolError::Unsupported(format!("d1={}", self.d1)));
        }
        if self.d2 < self.d1 {
            return Err(GeometryError::Expansion(self.d1, self.d2).into());
        }
        if self.variant != Variant::CX && self.kind == PatchKind::Rotated && self.d1 == 2 {
            return Err(ProtocolError::Unsupported(
                "rotated d1=2 has no transversal H".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
}

/// Expected value of a stabilizer: the XOR of the listed records, with the
/// empty list meaning +1.
#[derive(Clone, Debug, PartialEq)]
enum Ref {
    Known(Vec<u32>),
    Random,
}

fn xor_refs(refs: &[&Ref]) -> Ref {
    let mut acc = BTreeSet::new();
    for r in refs {
        match r {
            Ref::Random => return Ref::Random,
            Ref::Known(v) => {
                for x in v {
                    if !acc.remove(x) {
                        acc.insert(*x);
                    }
                }
            }
        }
    }
    Ref::Known(acc.into_iter().collect())
}

struct PState {
    patch: Patch,
    refs: Vec<Ref>,
}

impl PState {
    fn new(patch: Patch) -> Self {
        let refs = vec![Ref::Random; patch.stabilizers.len()];
        PState { patch, refs }
    }

    /// Opposite-type Pauli (by data site) flipping stabilizer `j` only and
    /// commuting with the same-type logical.
    fn destabilizer(&self, j: usize) -> Vec<Site> {
        let p = &self.patch;
        let kind = p.stabilizers[j].kind;
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for (i, s) in p.stabilizers.iter().enumerate() {
            if s.kind == kind {
                rows.push(p.bits(&s.support()));
                rhs.push(i == j);
            }
        }
        rows.push(p.bits(match kind {
            StabType::Z => &p.logical_z,
            StabType::X => &p.logical_x,
        }));
        rhs.push(false);
        let x: Bits = gf2::solve(&rows, &rhs).expect("independent stabilizers");
        x.ones().into_iter().map(|i| p.data[i]).collect()
    }
}

fn pauli_of(kind: StabType) -> Pauli {
    match kind {
        StabType::X => Pauli::X,
        StabType::Z => Pauli::Z,
    }
}

struct Cult {
    b: Builder,
    cfg: ProtocolConfig,
    ps: Vec<PState>,
}

/// Column offset between the two CX patches.
fn cx_offset(d: usize) -> i64 {
    (2 * d as i64 + 7) / 4 * 4
}

pub fn build(cfg: &ProtocolConfig) -> Result<Circuit, ProtocolError> {
    cfg.validate()?;
    let mut c = Cult {
        b: Builder::new(),
        cfg: cfg.clone(),
        ps: Vec::new(),
    };
    match cfg.variant {
        Variant::CX => c.run_cx()?,
        _ => c.run_h()?,
    }
    c.finish()
}

impl Cult {
    fn rotated(&self) -> bool {
        self.cfg.kind == PatchKind::Rotated
    }

    fn soft_kind(&self) -> DetectorKind {
        if self.cfg.expanded() {
            DetectorKind::Soft
        } else {
            DetectorKind::PostSelect
        }
    }

    fn run_h(&mut self) -> Result<(), ProtocolError> {
        let cfg = self.cfg.clone();
        let d_start = cfg.d1.min(3);
        let p = build_patch(cfg.kind, d_start)?;
        let basis = if cfg.variant == Variant::H {
            Basis::Z
        } else {
            Basis::X
        };
        self.ps.push(PState::new(p));
        let data = self.ps[0].patch.data.clone();
        self.staged("init", |s| s.b.reset(basis, &data));
        // The reset basis fixes one stabilizer type to +1.
        self.mark_known(match basis {
            Basis::Z => StabType::Z,
            Basis::X => StabType::X,
        });
        self.stage_round("sign_fix", DetectorKind::PostSelect, true);
        self.inject();
        if cfg.input_flip {
            self.flip_input();
        }
        self.stage_round("check", DetectorKind::PostSelect, false);
        self.project(false);
        if cfg.d1 == 5 {
            self.grow(5, Some((DetectorKind::PostSelect, true)))?;
            self.project(false);
        }
        self.expand()?;
        Ok(())
    }

    fn run_cx(&mut self) -> Result<(), ProtocolError> {
        let cfg = self.cfg.clone();
        let p = build_patch(cfg.kind, cfg.d1)?;
        let off = cx_offset(cfg.d2);
        let q = p.translate(off, 0);
        self.ps.push(PState::new(p));
        self.ps.push(PState::new(q));
        let (a, bq) = (self.ps[0].patch.data.clone(), self.ps[1].patch.data.clone());
        self.staged("init", |s| {
            s.b.reset(Basis::X, &a);
            s.b.reset(Basis::Z, &bq);
        });
        for (i, k) in [(0, StabType::X), (1, StabType::Z)] {
            let st = &mut self.ps[i];
            for (j, s) in st.patch.stabilizers.iter().enumerate() {
                if s.kind == k {
                    st.refs[j] = Ref::Known(Vec::new());
                }
            }
        }
        self.stage_round("sign_fix", DetectorKind::PostSelect, true);
        if cfg.proxy {
            // Bell pair plus a logical Z on the control with probability
            // 1/4, matching the 3/4 acceptance of the true first projection.
            let pairs: Vec<Vec<Site>> = a.iter().zip(&bq).map(|(&x, &y)| vec![x, y]).collect();
            let zl: Vec<(Pauli, Site)> = self.ps[0]
                .patch
                .logical_z
                .iter()
                .map(|&s| (Pauli::Z, s))
                .collect();
            self.staged("inject", |s| {
                s.b.gate(Gate::CX, &pairs);
                s.b.tick();
                s.b.correlated(0.25, &zl);
            });
        }
        if cfg.input_flip {
            self.flip_input();
        }
        for rep in 0..cfg.d1 {
            self.project(rep == 0);
            self.stage_round("check", DetectorKind::PostSelect, false);
        }
        self.expand()?;
        Ok(())
    }

    fn mark_known(&mut self, kind: StabType) {
        for st in &mut self.ps {
            for (j, s) in st.patch.stabilizers.iter().enumerate() {
                if s.kind == kind {
                    st.refs[j] = Ref::Known(Vec::new());
                }
            }
        }
    }

    fn stage_round(&mut self, name: &str, kind: DetectorKind, fix: bool) {
        self.staged(name, |s| s.se_round(kind, fix));
    }

    /// Runs `f` inside a named builder stage.
    fn staged(&mut self, name: &str, f: impl FnOnce(&mut Self)) {
        let start = self.b.stage_start();
        f(self);
        self.b.stage_end(name, start);
    }

    fn se_round(&mut self, kind: DetectorKind, fix: bool) {
        if self.rotated() {
            self.half_a();
            self.half_b(kind, fix);
        } else {
            for t in [StabType::X, StabType::Z] {
                self.sub_round(Some(t), 0..4, kind, fix);
            }
        }
        self.b.t += 1;
    }

    fn half_a(&mut self) {
        self.reset_ancillas(None);
        for l in 0..2 {
            self.cx_layer(l, None);
        }
    }

    fn half_b(&mut self, kind: DetectorKind, fix: bool) {
        for l in 2..4 {
            self.cx_layer(l, None);
        }
        self.measure_ancillas(None, kind, fix);
    }

    fn sub_round(
        &mut self,
        t: Option<StabType>,
        layers: std::ops::Range<usize>,
        kind: DetectorKind,
        fix: bool,
    ) {
        self.reset_ancillas(t);
        for l in layers {
            self.cx_layer(l, t);
        }
        self.measure_ancillas(t, kind, fix);
    }

    fn ancillas(&self, t: Option<StabType>, k: StabType) -> Vec<Site> {
        self.ps
            .iter()
            .flat_map(|st| st.patch.stabilizers.iter())
            .filter(|s| s.kind == k && t.is_none_or(|t| t == k))
            .map(|s| s.site)
            .collect()
    }

    fn reset_ancillas(&mut self, t: Option<StabType>) {
        let x = self.ancillas(t, StabType::X);
        let z = self.ancillas(t, StabType::Z);
        self.b.reset(Basis::X, &x);
        self.b.reset(Basis::Z, &z);
        self.b.tick();
    }

    fn cx_layer(&mut self, l: usize, t: Option<StabType>) {
        let mut pairs = Vec::new();
        for st in &self.ps {
            for s in &st.patch.stabilizers {
                if t.is_some_and(|t| t != s.kind) {
                    continue;
                }
                if let Some(q) = s.schedule.get(l).copied().flatten() {
                    pairs.push(match s.kind {
                        StabType::X => vec![s.site, q],
                        StabType::Z => vec![q, s.site],
                    });
                }
            }
        }
        self.b.gate(Gate::CX, &pairs);
        self.b.tick();
    }

    fn measure_ancillas(&mut self, t: Option<StabType>, kind: DetectorKind, fix: bool) {
        let x = self.ancillas(t, StabType::X);
        let z = self.ancillas(t, StabType::Z);
        let rx = self.b.measure(Basis::X, false, &x);
        let rz = self.b.measure(Basis::Z, false, &z);
        let mut rec_of = std::collections::BTreeMap::new();
        rec_of.extend(x.iter().copied().zip(rx));
        rec_of.extend(z.iter().copied().zip(rz));
        let mut fix_x = Vec::new();
        let mut fix_z = Vec::new();
        for pi in 0..self.ps.len() {
            for j in 0..self.ps[pi].patch.stabilizers.len() {
                let s = self.ps[pi].patch.stabilizers[j].clone();
                let Some(&r) = rec_of.get(&s.site) else {
                    continue;
                };
                let next = match &self.ps[pi].refs[j] {
                    Ref::Known(v) => {
                        let mut recs = vec![r];
                        recs.extend(v);
                        self.b.detector(kind, s.site, &recs);
                        if kind.discards() {
                            Ref::Known(Vec::new())
                        } else {
                            Ref::Known(vec![r])
                        }
                    }
                    Ref::Random if fix => {
                        let out = match s.kind {
                            StabType::Z => &mut fix_x,
                            StabType::X => &mut fix_z,
                        };
                        out.extend(self.ps[pi].destabilizer(j).into_iter().map(|q| (r, q)));
                        Ref::Known(Vec::new())
                    }
                    Ref::Random => Ref::Known(vec![r]),
                };
                self.ps[pi].refs[j] = next;
            }
        }
        self.b.feedback(Pauli::X, &fix_x);
        self.b.feedback(Pauli::Z, &fix_z);
        self.b.tick();
    }

    /// Non-fault-tolerant injection: collapse a logical onto (1, 1), rotate
    /// that qubit, and undo the collapse.
    fn inject(&mut self) {
        let p = self.ps[0].patch.clone();
        let proxy = self.cfg.proxy;
        let variant = self.cfg.variant;
        self.staged("inject", |s| {
            let c = (1, 1);
            let zl: Vec<Site> = p.logical_z.iter().copied().filter(|&a| a != c).collect();
            let xl: Vec<Site> = p.logical_x.iter().copied().filter(|&a| a != c).collect();
            let ladder = |s: &mut Cult, pairs: Vec<[Site; 2]>, g: Gate| {
                for pr in &pairs {
                    s.b.gate(Gate::CX, &[pr.to_vec()]);
                    s.b.tick();
                }
                s.b.gate(g, &[vec![c]]);
                s.b.tick();
                for pr in pairs.iter().rev() {
                    s.b.gate(Gate::CX, &[pr.to_vec()]);
                    s.b.tick();
                }
            };
            let z_pairs: Vec<[Site; 2]> = zl.iter().map(|&a| [a, c]).collect();
            match variant {
                Variant::HXY => {
                    ladder(s, z_pairs, if proxy { Gate::I } else { Gate::T });
                }
                Variant::H => {
                    let x_pairs = xl.iter().map(|&a| [c, a]).collect();
                    ladder(s, x_pairs, if proxy { Gate::SqrtX } else { Gate::TX });
                    ladder(s, z_pairs, Gate::S);
                }
                Variant::CX => unreachable!(),
            }
        });
    }

    fn flip_input(&mut self) {
        let p = &self.ps[0].patch;
        let mut terms: Vec<(Pauli, Site)> = p.logical_z.iter().map(|&s| (Pauli::Z, s)).collect();
        if self.cfg.variant == Variant::H && !self.cfg.proxy {
            for &s in &p.logical_x {
                match terms.iter_mut().find(|t| t.1 == s) {
                    Some(t) => t.0 = Pauli::Y,
                    None => terms.push((Pauli::X, s)),
                }
            }
        }
        self.b.correlated(1.0, &terms);
    }

    /// Transversal factors of the projected operator: gate and data sites.
    fn factors(&self) -> Vec<(Gate, Vec<Site>)> {
        let proxy = self.cfg.proxy;
        match self.cfg.variant {
            Variant::CX => {
                let (p, q) = (&self.ps[0].patch, &self.ps[1].patch);
                p.data
                    .iter()
                    .zip(&q.data)
                    .map(|(&a, &b)| {
                        let g = match (proxy, p.logical_x.contains(&a)) {
                            (false, _) => Gate::CCX,
                            (true, true) => Gate::CXX,
                            (true, false) => Gate::CII,
                        };
                        (g, vec![a, b])
                    })
                    .collect()
            }
            v => {
                let p = &self.ps[0].patch;
                let code = if self.rotated() {
                    mid_cycle(p).code
                } else {
                    p.clone()
                };
                let fold = code.fold();
                let mut out = Vec::new();
                for (i, &a) in fold.diagonal.iter().enumerate() {
                    let g = match (proxy, v) {
                        (true, _) if code.logical_x.contains(&a) => Gate::CX,
                        (true, _) => Gate::CI,
                        (false, Variant::H) => Gate::CH,
                        (false, _) if i % 2 == 0 => Gate::CHXY,
                        (false, _) => Gate::CHNXY,
                    };
                    out.push((g, vec![a]));
                }
                for &(b, c) in &fold.pairs {
                    let g = match (proxy, v) {
                        (true, _) if code.logical_x.contains(&b) => Gate::CXI,
                        (true, _) => Gate::CII,
                        (false, Variant::H) => Gate::CSwapH,
                        (false, _) => Gate::CCZ,
                    };
                    out.push((g, vec![b, c]));
                }
                out
            }
        }
    }

    /// Projection ancillas: reused syndrome qubits on unrotated H/H_XY
    /// patches (idle during the projection), a dedicated row otherwise.
    fn projection_ancillas(&self, k: usize) -> Vec<Site> {
        if !self.rotated() && self.cfg.variant != Variant::CX {
            let mut s: Vec<Site> = self.ps[0].patch.stabilizers.iter().map(|s| s.site).collect();
            s.sort();
            s.truncate(k);
            s
        } else {
            (0..k as i64).map(|i| (2 * i, -2)).collect()
        }
    }

    fn project(&mut self, herald: bool) {
        let mid = self.rotated() && self.cfg.variant != Variant::CX;
        self.staged("project", |s| {
            if mid {
                s.half_a();
            }
            let factors = s.factors();
            let anc = s.projection_ancillas(factors.len());
            match s.cfg.projection {
                Projection::DoubleCheck => s.double_check(&factors, &anc, herald),
                Projection::PhaseKickback => s.kickback(&factors, &anc, herald),
            }
            if mid {
                s.half_b(DetectorKind::PostSelect, false);
                s.b.t += 1;
            }
        });
    }

    fn controlled_layer(&mut self, factors: &[(Gate, Vec<Site>)], anc: &[Site]) {
        let mut gates: Vec<Gate> = factors.iter().map(|f| f.0).collect();
        gates.sort();
        gates.dedup();
        for g in gates {
            let groups: Vec<Vec<Site>> = factors
                .iter()
                .zip(anc)
                .filter(|(f, _)| f.0 == g)
                .map(|(f, &a)| std::iter::once(a).chain(f.1.iter().copied()).collect())
                .collect();
            self.b.gate(g, &groups);
        }
        self.b.tick();
    }

    fn double_check(&mut self, factors: &[(Gate, Vec<Site>)], anc: &[Site], herald: bool) {
        self.b.reset(Basis::X, anc);
        self.b.tick();
        self.controlled_layer(factors, anc);
        // Fan-in: CX(keep, other) moves the other's X onto the keeper.
        let layers = merge_tree(anc);
        for l in &layers {
            self.b.gate(Gate::CX, &pairs_of(l));
            self.b.tick();
        }
        let root = anc[0];
        let r = self.b.measure(Basis::X, true, &[root]);
        let kind = if herald {
            DetectorKind::Herald
        } else {
            DetectorKind::PostSelect
        };
        self.b.detector(kind, root, &r);
        self.b.tick();
        for l in layers.iter().rev() {
            self.b.gate(Gate::CX, &pairs_of(l));
            self.b.tick();
        }
        self.controlled_layer(factors, anc);
        let rs = self.b.measure(Basis::X, false, anc);
        for (&a, r) in anc.iter().zip(rs) {
            self.b.detector(DetectorKind::PostSelect, a, &[r]);
        }
        self.b.tick();
        self.b.t += 1;
    }

    fn kickback(&mut self, factors: &[(Gate, Vec<Site>)], anc: &[Site], herald: bool) {
        let m = centroid(anc);
        let others: Vec<Site> = anc.iter().copied().filter(|&a| a != anc[m]).collect();
        self.b.reset(Basis::X, &[anc[m]]);
        self.b.reset(Basis::Z, &others);
        self.b.tick();
        let layers = spread_tree(anc, m);
        for l in &layers {
            self.b.gate(Gate::CX, &pairs_of(l));
            self.b.tick();
        }
        self.controlled_layer(factors, anc);
        for l in layers.iter().rev() {
            self.b.gate(Gate::CX, &pairs_of(l));
            self.b.tick();
        }
        let rz = self.b.measure(Basis::Z, false, &others);
        let rx = self.b.measure(Basis::X, false, &[anc[m]]);
        for (&a, r) in others.iter().zip(rz) {
            self.b.detector(DetectorKind::PostSelect, a, &[r]);
        }
        let kind = if herald {
            DetectorKind::Herald
        } else {
            DetectorKind::PostSelect
        };
        self.b.detector(kind, anc[m], &rx);
        self.b.tick();
        self.b.t += 1;
    }

    /// Grows every patch to distance `d`: reset the new data qubits, then
    /// optionally one syndrome round (detector kind, sign fixing).
    fn grow(&mut self, d: usize, round: Option<(DetectorKind, bool)>) -> Result<(), ProtocolError> {
        let from = self.ps[0].patch.d;
        if d == from {
            return Ok(());
        }
        let map = expansion_map(self.cfg.kind, from, d)?;
        let mut new_x = Vec::new();
        let mut new_z = Vec::new();
        for st in &mut self.ps {
            let (dx, dy) = (st.patch.data[0].0 - 1, st.patch.data[0].1 - 1);
            for &((x, y), b) in &map.new_qubits {
                match b {
                    Basis::X => new_x.push((x + dx, y + dy)),
                    Basis::Z => new_z.push((x + dx, y + dy)),
                }
            }
            let refs = map
                .determined_by
                .iter()
                .map(|src| match src {
                    Some(v) => xor_refs(&v.iter().map(|&i| &st.refs[i]).collect::<Vec<_>>()),
                    None => Ref::Random,
                })
                .collect();
            st.patch = map.target.translate(dx, dy);
            st.refs = refs;
        }
        self.staged("grow", |s| {
            s.b.reset(Basis::X, &new_x);
            s.b.reset(Basis::Z, &new_z);
            s.b.tick();
            if let Some((kind, fix)) = round {
                s.se_round(kind, fix);
            }
        });
        Ok(())
    }

    fn expand(&mut self) -> Result<(), ProtocolError> {
        let cfg = self.cfg.clone();
        if cfg.expanded() {
            let first = (cfg.rounds > 0).then_some((DetectorKind::Soft, false));
            self.grow(cfg.d2, first)?;
            for _ in 1..cfg.rounds {
                self.stage_round("memory", DetectorKind::Soft, false);
            }
        }
        let kind = self.soft_kind();
        self.staged("readout", |s| s.final_readout(kind));
        Ok(())
    }

    fn final_readout(&mut self, kind: DetectorKind) {
        let mut products: Vec<Vec<(Pauli, Site)>> = Vec::new();
        let mut who = Vec::new();
        for (pi, st) in self.ps.iter().enumerate() {
            for (j, s) in st.patch.stabilizers.iter().enumerate() {
                products.push(s.support().into_iter().map(|q| (pauli_of(s.kind), q)).collect());
                who.push((pi, j, s.site));
            }
        }
        let logical = |st: &PState, pa: Pauli| -> Vec<(Pauli, Site)> {
            let sites = match pa {
                Pauli::X => &st.patch.logical_x,
                _ => &st.patch.logical_z,
            };
            sites.iter().map(|&s| (pa, s)).collect()
        };
        // One MPP instruction: the observables are measured in the same
        // ideal slice as the stabilizers.
        let mut observables = 0;
        if self.cfg.proxy {
            if self.cfg.variant == Variant::CX {
                for pa in [Pauli::X, Pauli::Z] {
                    let mut prod = logical(&self.ps[0], pa);
                    prod.extend(logical(&self.ps[1], pa));
                    products.push(prod);
                    observables += 1;
                }
            } else {
                products.push(logical(&self.ps[0], Pauli::X));
                observables += 1;
            }
        }
        let recs = self.b.mpp(&products);
        for (&(pi, j, site), &r) in who.iter().zip(&recs) {
            if let Ref::Known(v) = &self.ps[pi].refs[j] {
                let mut all = vec![r];
                all.extend(v);
                self.b.detector(kind, site, &all);
            }
        }
        for k in 0..observables {
            self.b.observable(k as u32, &[recs[who.len() + k]]);
        }
        self.b.t += 1;
    }

    fn finish(mut self) -> Result<Circuit, ProtocolError> {
        let cfg = &self.cfg;
        self.b.meta("variant", cfg.variant.name());
        self.b.meta("patch", cfg.kind.name());
        self.b.meta("d1", cfg.d1);
        self.b.meta("d2", cfg.d2);
        self.b.meta("rounds", cfg.rounds);
        self.b.meta("projection", cfg.projection.name());
        self.b.meta("proxy", cfg.proxy);
        self.b.meta("input_flip", cfg.input_flip);
        self.b.meta(
            "target",
            match cfg.variant {
                Variant::H => "H",
                Variant::HXY => "T",
                Variant::CX => "CX",
            },
        );
        if cfg.variant == Variant::CX {
            for (i, st) in self.ps.iter().enumerate() {
                let (x, z) = (st.patch.logical_x.clone(), st.patch.logical_z.clone());
                self.b.meta_sites(&format!("logical_x{}", i + 1), &x);
                self.b.meta_sites(&format!("logical_z{}", i + 1), &z);
            }
        } else {
            let (x, z) = (self.ps[0].patch.logical_x.clone(), self.ps[0].patch.logical_z.clone());
            self.b.meta_sites("logical_x", &x);
            self.b.meta_sites("logical_z", &z);
        }
        Ok(self.b.finish())
    }
}

/// Surface-code memory: data reset in the X basis, `rounds` noisy syndrome
/// rounds with soft detectors, then an ideal readout of every stabilizer
/// and of X_L (observable 0).
pub fn memory_circuit(kind: PatchKind, d: usize, rounds: usize) -> Result<Circuit, ProtocolError> {
    let mut cfg = ProtocolConfig::new(Variant::HXY, kind, 3);
    cfg.d1 = d;
    cfg.d2 = d;
    let mut c = Cult {
        b: Builder::new(),
        cfg,
        ps: vec![PState::new(build_patch(kind, d)?)],
    };
    let data = c.ps[0].patch.data.clone();
    c.staged("init", |s| s.b.reset(Basis::X, &data));
    c.mark_known(StabType::X);
    for _ in 0..rounds {
        c.stage_round("memory", DetectorKind::Soft, false);
    }
    c.staged("readout", |s| s.final_readout(DetectorKind::Soft));
    c.b.meta("patch", kind.name());
    c.b.meta("d1", d);
    c.b.meta("rounds", rounds);
    let x = c.ps[0].patch.logical_x.clone();
    c.b.meta_sites("logical_x", &x);
    Ok(c.b.finish())
}

/// GHZ preparation and measurement alone on `n` ancillas in a row, with
/// the stages `ghz_prep` and `ghz_measure`. No controlled layer in between.
pub fn ghz_circuit(n: usize) -> Circuit {
    let mut b = Builder::new();
    let anc: Vec<Site> = (0..n as i64).map(|i| (2 * i, 0)).collect();
    let m = centroid(&anc);
    let others: Vec<Site> = anc.iter().copied().filter(|&a| a != anc[m]).collect();
    let layers = spread_tree(&anc, m);
    let s = b.stage_start();
    b.reset(Basis::X, &[anc[m]]);
    b.reset(Basis::Z, &others);
    b.tick();
    for l in &layers {
        b.gate(Gate::CX, &pairs_of(l));
        b.tick();
    }
    b.stage_end("ghz_prep", s);
    let s = b.stage_start();
    for l in layers.iter().rev() {
        b.gate(Gate::CX, &pairs_of(l));
        b.tick();
    }
    let rz = b.measure(Basis::Z, false, &others);
    let rx = b.measure(Basis::X, false, &[anc[m]]);
    for (&a, r) in others.iter().zip(rz) {
        b.detector(DetectorKind::PostSelect, a, &[r]);
    }
    b.observable(0, &rx);
    b.stage_end("ghz_measure", s);
    b.finish()
}

fn pairs_of(l: &[(Site, Site)]) -> Vec<Vec<Site>> {
    l.iter().map(|&(a, b)| vec![a, b]).collect()
}

/// Balanced pairwise merge of `sites` onto `sites[0]`: each layer lists
/// (keeper, merged) pairs.
fn merge_tree(sites: &[Site]) -> Vec<Vec<(Site, Site)>> {
    let mut active: Vec<Site> = sites.to_vec();
    let mut layers = Vec::new();
    while active.len() > 1 {
        let mut layer = Vec::new();
        let mut next = Vec::new();
        for ch in active.chunks(2) {
            if let [a, b] = ch {
                layer.push((*a, *b));
            }
            next.push(ch[0]);
        }
        layers.push(layer);
        active = next;
    }
    layers
}

/// Index of the site closest to the centroid (ties broken by order).
fn centroid(sites: &[Site]) -> usize {
    let n = sites.len() as f64;
    let cx = sites.iter().map(|s| s.0 as f64).sum::<f64>() / n;
    let cy = sites.iter().map(|s| s.1 as f64).sum::<f64>() / n;
    let dist = |s: &Site| (s.0 as f64 - cx).powi(2) + (s.1 as f64 - cy).powi(2);
    (0..sites.len())
        .min_by(|&a, &b| dist(&sites[a]).total_cmp(&dist(&sites[b])))
        .unwrap_or(0)
}

/// GHZ fan-out from `sites[root]`: every qubit holding the state copies it
/// onto one fresh qubit per layer, nearest fresh qubits first.
fn spread_tree(sites: &[Site], root: usize) -> Vec<Vec<(Site, Site)>> {
    let r = sites[root];
    let mut fresh: Vec<Site> = sites.iter().copied().filter(|&s| s != r).collect();
    let d = |a: Site, b: Site| (a.0 - b.0).abs() + (a.1 - b.1).abs();
    fresh.sort_by_key(|&s| (d(s, r), s));
    fresh.reverse();
    let mut have = vec![r];
    let mut layers = Vec::new();
    while !fresh.is_empty() {
        let mut layer = Vec::new();
        for &h in &have.clone() {
            let Some(t) = fresh.pop() else { break };
            layer.push((h, t));
            have.push(t);
        }
        layers.push(layer);
    }
    layers
}

/// Named slice ranges `[start, end)` recorded by the builder (injection,
/// projections, growth, ...).
pub fn stage_ranges(c: &Circuit) -> Vec<(String, usize, usize)> {
    let Some(s) = c.meta.get("stages") else {
        return Vec::new();
    };
    s.split_whitespace()
        .filter_map(|tok| {
            let (name, range) = tok.split_once(':')?;
            let (a, b) = range.split_once('-')?;
            Some((name.to_string(), a.parse().ok()?, b.parse().ok()?))
        })
        .collect()
}

/// Preset noise pass shortcut.
pub fn noisy(
    cfg: &ProtocolConfig,
    model: NoiseModel,
    np: crate::circuit::NoiseParams,
) -> Result<Circuit, ProtocolError> {
    let c = build(cfg)?;
    Ok(crate::circuit::apply_noise(&c, model, np).expect("builder output is noiseless"))
}
