//! Surface-code patch layouts.
//!
//! Integer coordinates throughout. Rotated patches put data at odd (x, y) in
//! `[1, 2d-1]^2` and measurement qubits at even (x, y) in `[0, 2d]^2`.
//! Unrotated patches put data at x+y even in `[1, 2d-1]^2`, X checks at
//! (even x, odd y) and Z checks at (odd x, even y). In both layouts logical X
//! is the column x = 1 and logical Z is the row y = 1.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::circuit::Basis;
use crate::gf2::{Bits, Span};

pub type Site = (i64, i64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchKind {
    Rotated,
    Unrotated,
}

impl PatchKind {
    pub fn name(self) -> &'static str {
        match self {
            PatchKind::Rotated => "rot",
            PatchKind::Unrotated => "unrot",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StabType {
    X,
    Z,
}

impl StabType {
    pub fn basis(self) -> Basis {
        match self {
            StabType::X => Basis::X,
            StabType::Z => Basis::Z,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("distance must be at least 2, got {0}")]
    Distance(usize),
    #[error("expansion needs d2 >= d1 (got d1={0}, d2={1})")]
    Expansion(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stabilizer {
    pub kind: StabType,
    /// Measurement-qubit site.
    pub site: Site,
    /// Data qubit touched in each CX layer (None = idle layer).
    pub schedule: Vec<Option<Site>>,
}

impl Stabilizer {
    pub fn support(&self) -> Vec<Site> {
        let mut s: Vec<Site> = self.schedule.iter().flatten().copied().collect();
        s.sort();
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Patch {
    pub kind: PatchKind,
    pub d: usize,
    pub data: Vec<Site>,
    pub stabilizers: Vec<Stabilizer>,
    pub logical_x: Vec<Site>,
    pub logical_z: Vec<Site>,
}

const ROT_Z_ORDER: [Site; 4] = [(-1, -1), (-1, 1), (1, -1), (1, 1)];
const ROT_X_ORDER: [Site; 4] = [(-1, -1), (1, -1), (-1, 1), (1, 1)];
const UNROT_X_ORDER: [Site; 4] = [(0, -1), (0, 1), (-1, 0), (1, 0)];
const UNROT_Z_ORDER: [Site; 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

pub fn build_patch(kind: PatchKind, d: usize) -> Result<Patch, GeometryError> {
    if d < 2 {
        return Err(GeometryError::Distance(d));
    }
    let d = d as i64;
    let b = 2 * d - 1;
    let (data, stabilizers) = match kind {
        PatchKind::Rotated => {
            let data: Vec<Site> = (0..d)
                .flat_map(|i| (0..d).map(move |j| (2 * i + 1, 2 * j + 1)))
                .collect();
            let set: BTreeSet<Site> = data.iter().copied().collect();
            let mut stabs = Vec::new();
            for i in 0..=d {
                for j in 0..=d {
                    let (x, y) = (2 * i, 2 * j);
                    let kind = if (i + j) % 2 == 1 {
                        StabType::Z
                    } else {
                        StabType::X
                    };
                    let bulk = (1..d).contains(&i) && (1..d).contains(&j);
                    let keep = bulk
                        || (kind == StabType::Z && (i == 0 || i == d) && (1..d).contains(&j))
                        || (kind == StabType::X && (j == 0 || j == d) && (1..d).contains(&i));
                    if !keep {
                        continue;
                    }
                    let order = match kind {
                        StabType::Z => ROT_Z_ORDER,
                        StabType::X => ROT_X_ORDER,
                    };
                    let schedule = order
                        .iter()
                        .map(|(dx, dy)| Some((x + dx, y + dy)).filter(|s| set.contains(s)))
                        .collect();
                    stabs.push(Stabilizer {
                        kind,
                        site: (x, y),
                        schedule,
                    });
                }
            }
            (data, stabs)
        }
        PatchKind::Unrotated => {
            let mut data = Vec::new();
            let mut stabs = Vec::new();
            for x in 1..=b {
                for y in 1..=b {
                    if (x + y) % 2 == 0 {
                        data.push((x, y));
                    }
                }
            }
            let set: BTreeSet<Site> = data.iter().copied().collect();
            for x in 1..=b {
                for y in 1..=b {
                    if (x + y) % 2 == 0 {
                        continue;
                    }
                    let (kind, order) = if x % 2 == 0 {
                        (StabType::X, UNROT_X_ORDER)
                    } else {
                        (StabType::Z, UNROT_Z_ORDER)
                    };
                    let schedule = order
                        .iter()
                        .map(|(dx, dy)| Some((x + dx, y + dy)).filter(|s| set.contains(s)))
                        .collect();
                    stabs.push(Stabilizer {
                        kind,
                        site: (x, y),
                        schedule,
                    });
                }
            }
            (data, stabs)
        }
    };
    let logical_x = (0..d).map(|j| (1, 2 * j + 1)).collect();
    let logical_z = (0..d).map(|i| (2 * i + 1, 1)).collect();
    let mut p = Patch {
        kind,
        d: d as usize,
        data,
        stabilizers,
        logical_x,
        logical_z,
    };
    p.data.sort();
    p.stabilizers.sort_by_key(|s| s.site);
    Ok(p)
}

impl Patch {
    pub fn translate(&self, dx: i64, dy: i64) -> Patch {
        let t = |s: &Site| (s.0 + dx, s.1 + dy);
        Patch {
            kind: self.kind,
            d: self.d,
            data: self.data.iter().map(t).collect(),
            stabilizers: self
                .stabilizers
                .iter()
                .map(|s| Stabilizer {
                    kind: s.kind,
                    site: t(&s.site),
                    schedule: s.schedule.iter().map(|o| o.as_ref().map(t)).collect(),
                })
                .collect(),
            logical_x: self.logical_x.iter().map(t).collect(),
            logical_z: self.logical_z.iter().map(t).collect(),
        }
    }

    pub fn stabilizers_of(&self, kind: StabType) -> impl Iterator<Item = &Stabilizer> {
        self.stabilizers.iter().filter(move |s| s.kind == kind)
    }

    pub fn data_index(&self) -> BTreeMap<Site, usize> {
        self.data.iter().enumerate().map(|(i, &s)| (s, i)).collect()
    }

    /// Support of a set of sites as a bit vector over data qubits.
    pub fn bits(&self, sites: &[Site]) -> Bits {
        let idx = self.data_index();
        Bits::from_indices(self.data.len(), sites.iter().map(|s| idx[s]))
    }

    /// Number of CX layers in one syndrome-extraction round.
    pub fn layers(&self) -> usize {
        self.stabilizers
            .iter()
            .map(|s| s.schedule.len())
            .max()
            .unwrap_or(0)
    }

    /// Checks commutation of all stabilizers and logicals, and that the
    /// logicals anticommute with each other.
    pub fn check_commutation(&self) -> bool {
        let overlap = |a: &[Site], b: &[Site]| a.iter().filter(|s| b.contains(s)).count();
        for s in &self.stabilizers {
            let sup = s.support();
            for t in &self.stabilizers {
                if s.kind != t.kind && overlap(&sup, &t.support()) % 2 == 1 {
                    return false;
                }
            }
            let other = match s.kind {
                StabType::X => &self.logical_z,
                StabType::Z => &self.logical_x,
            };
            if overlap(&sup, other) % 2 == 1 {
                return false;
            }
        }
        overlap(&self.logical_x, &self.logical_z) % 2 == 1
    }

    /// Annotated text dump for golden files.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "patch {} d={}", self.kind.name(), self.d);
        let fmt = |v: &[Site]| {
            v.iter()
                .map(|(x, y)| format!("({x},{y})"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(s, "data {}", fmt(&self.data));
        for st in &self.stabilizers {
            let sched: Vec<String> = st
                .schedule
                .iter()
                .map(|o| match o {
                    Some((x, y)) => format!("({x},{y})"),
                    None => "-".to_string(),
                })
                .collect();
            let _ = writeln!(
                s,
                "{:?} ({},{}) {}",
                st.kind,
                st.site.0,
                st.site.1,
                sched.join(" ")
            );
        }
        let _ = writeln!(s, "XL {}", fmt(&self.logical_x));
        let _ = writeln!(s, "ZL {}", fmt(&self.logical_z));
        s
    }

    /// Fold structure of an unrotated-layout code: the reflection
    /// (x, y) -> (y, x) maps X checks onto Z checks and X_L onto Z_L.
    pub fn fold(&self) -> Fold {
        let mut diagonal: Vec<Site> = self.data.iter().copied().filter(|s| s.0 == s.1).collect();
        diagonal.sort();
        let mut pairs: Vec<(Site, Site)> = self
            .data
            .iter()
            .copied()
            .filter(|s| s.0 < s.1)
            .map(|s| (s, (s.1, s.0)))
            .collect();
        pairs.sort();
        Fold { diagonal, pairs }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    /// Fixed points ordered by x; the first is (1, 1).
    pub diagonal: Vec<Site>,
    /// (b, c) with b above the diagonal (b.x < b.y) and c its mirror image.
    pub pairs: Vec<(Site, Site)>,
}

impl Fold {
    pub fn num_factors(&self) -> usize {
        self.diagonal.len() + self.pairs.len()
    }
}

/// The code seen halfway through a rotated syndrome-extraction round.
#[derive(Clone, Debug)]
pub struct MidCycle {
    /// Unrotated-layout code on the sites x+y even in `[1, 2d-1]^2`
    /// (rotated data and bulk measurement qubits).
    pub code: Patch,
    /// Boundary measurement qubits left in a single-qubit eigenstate.
    pub parked: Vec<(Site, StabType)>,
}

/// Symplectic support of a Pauli over an ordered list of sites.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiteOp {
    pub x: Bits,
    pub z: Bits,
}

/// Generators of the stabilizer group after the first half (two CX layers)
/// of a rotated round, as X/Z supports over `sites` (data then measurement
/// qubits, sorted). Computed by propagating code and measurement-qubit
/// stabilizers through the layers.
pub fn half_round_generators(p: &Patch) -> (Vec<Site>, Vec<SiteOp>) {
    let mut sites: Vec<Site> = p.data.clone();
    sites.extend(p.stabilizers.iter().map(|s| s.site));
    sites.sort();
    let idx: BTreeMap<Site, usize> = sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let n = sites.len();
    let mut gens: Vec<SiteOp> = Vec::new();
    for s in &p.stabilizers {
        let sup: Vec<usize> = s.support().iter().map(|x| idx[x]).collect();
        let on_data = Bits::from_indices(n, sup);
        let anc = Bits::from_indices(n, [idx[&s.site]]);
        match s.kind {
            StabType::X => {
                gens.push(SiteOp { x: on_data, z: Bits::zeros(n) });
                gens.push(SiteOp { x: anc, z: Bits::zeros(n) });
            }
            StabType::Z => {
                gens.push(SiteOp { x: Bits::zeros(n), z: on_data });
                gens.push(SiteOp { x: Bits::zeros(n), z: anc });
            }
        }
    }
    for layer in 0..2 {
        for s in &p.stabilizers {
            let Some(q) = s.schedule.get(layer).copied().flatten() else {
                continue;
            };
            let (c, t) = match s.kind {
                StabType::X => (idx[&s.site], idx[&q]),
                StabType::Z => (idx[&q], idx[&s.site]),
            };
            for g in &mut gens {
                if g.x.get(c) {
                    g.x.flip(t);
                }
                if g.z.get(t) {
                    g.z.flip(c);
                }
            }
        }
    }
    (sites, gens)
}

/// Mid-cycle code of a rotated patch.
pub fn mid_cycle(p: &Patch) -> MidCycle {
    assert_eq!(p.kind, PatchKind::Rotated, "mid-cycle code needs a rotated patch");
    let code = build_patch(PatchKind::Unrotated, p.d).expect("d >= 2");
    let d = p.d as i64;
    let parked = p
        .stabilizers
        .iter()
        .filter(|s| s.site.0 == 0 || s.site.1 == 0 || s.site.0 == 2 * d || s.site.1 == 2 * d)
        .map(|s| (s.site, s.kind))
        .collect();
    MidCycle { code, parked }
}

/// Stabilizer generators implied by a [`MidCycle`], over the same sites as
/// [`half_round_generators`].
pub fn mid_cycle_generators(m: &MidCycle, sites: &[Site]) -> Vec<SiteOp> {
    let idx: BTreeMap<Site, usize> = sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let n = sites.len();
    let mut gens = Vec::new();
    for s in &m.code.stabilizers {
        let b = Bits::from_indices(n, s.support().iter().map(|x| idx[x]));
        gens.push(match s.kind {
            StabType::X => SiteOp { x: b, z: Bits::zeros(n) },
            StabType::Z => SiteOp { x: Bits::zeros(n), z: b },
        });
    }
    for &(site, kind) in &m.parked {
        let b = Bits::from_indices(n, [idx[&site]]);
        gens.push(match kind {
            StabType::X => SiteOp { x: b, z: Bits::zeros(n) },
            StabType::Z => SiteOp { x: Bits::zeros(n), z: b },
        });
    }
    gens
}

/// Whether two generator lists span the same group (signs are all +1 for
/// CSS generators propagated through CX gates).
pub fn same_group(a: &[SiteOp], b: &[SiteOp]) -> bool {
    let flat = |v: &[SiteOp]| -> Vec<Bits> {
        v.iter()
            .map(|g| {
                let n = g.x.n;
                let mut out = Bits::zeros(2 * n);
                for i in g.x.ones() {
                    out.flip(i);
                }
                for i in g.z.ones() {
                    out.flip(n + i);
                }
                out
            })
            .collect()
    };
    let (fa, fb) = (flat(a), flat(b));
    let (sa, sb) = (Span::new(&fa), Span::new(&fb));
    sa.rank() == sb.rank() && fb.iter().all(|v| sa.contains(v)) && fa.iter().all(|v| sb.contains(v))
}

/// How the stabilizers of a grown patch relate to the source patch.
#[derive(Clone, Debug)]
pub struct ExpansionMap {
    pub source: Patch,
    pub target: Patch,
    /// New data qubits and the basis they are reset in.
    pub new_qubits: Vec<(Site, Basis)>,
    /// For each target stabilizer: `Some(source stabilizer indices)` whose
    /// product fixes its first value, or `None` if its first value is random.
    pub determined_by: Vec<Option<Vec<usize>>>,
}

/// Reset basis of a new qubit when growing past `bound` (the largest data
/// coordinate of the source): the region below the source extends X_L and
/// is prepared in |+>, the region to the right extends Z_L and is prepared
/// in |0>; the corner is split along the diagonal.
pub fn growth_basis(site: Site, bound: i64) -> Basis {
    let (x, y) = site;
    if x <= bound {
        Basis::X
    } else if y <= bound || x > y {
        Basis::Z
    } else {
        Basis::X
    }
}

pub fn expansion_map(kind: PatchKind, d1: usize, d2: usize) -> Result<ExpansionMap, GeometryError> {
    if d2 < d1 {
        return Err(GeometryError::Expansion(d1, d2));
    }
    let source = build_patch(kind, d1)?;
    let target = build_patch(kind, d2)?;
    let bound = 2 * d1 as i64 - 1;
    let old: BTreeSet<Site> = source.data.iter().copied().collect();
    let new_qubits: Vec<(Site, Basis)> = target
        .data
        .iter()
        .copied()
        .filter(|s| !old.contains(s))
        .map(|s| (s, growth_basis(s, bound)))
        .collect();
    let basis_of: BTreeMap<Site, Basis> = new_qubits.iter().copied().collect();
    let src_idx = source.data_index();
    let n_src = source.data.len();
    let spans: BTreeMap<StabType, (Vec<usize>, Span)> = [StabType::X, StabType::Z]
        .into_iter()
        .map(|k| {
            let ids: Vec<usize> = (0..source.stabilizers.len())
                .filter(|&i| source.stabilizers[i].kind == k)
                .collect();
            let gens: Vec<Bits> = ids
                .iter()
                .map(|&i| source.bits(&source.stabilizers[i].support()))
                .collect();
            (k, (ids, Span::new(&gens)))
        })
        .collect();
    let determined_by = target
        .stabilizers
        .iter()
        .map(|t| {
            let sup = t.support();
            let mut old_part = Vec::new();
            for s in &sup {
                match basis_of.get(s) {
                    Some(b) if *b == t.kind.basis() => {}
                    Some(_) => return None,
                    None => old_part.push(src_idx[s]),
                }
            }
            let (ids, span) = &spans[&t.kind];
            let v = Bits::from_indices(n_src, old_part);
            span.express(&v)
                .map(|combo| combo.into_iter().map(|k| ids[k]).collect())
        })
        .collect();
    Ok(ExpansionMap {
        source,
        target,
        new_qubits,
        determined_by,
    })
}
