use std::collections::{BTreeMap, BTreeSet};

use cultivar::circuit::{Basis, Pauli};
use cultivar::geometry::{
    build_patch, expansion_map, half_round_generators, mid_cycle, mid_cycle_generators, same_group,
    Patch, PatchKind, Site, SiteOp, StabType,
};
use cultivar::gf2::Bits;
use cultivar::tableau::{PauliString, Tableau};

fn reflect(s: Site) -> Site {
    (s.1, s.0)
}

fn supports(p: &Patch, k: StabType) -> BTreeSet<Vec<Site>> {
    p.stabilizers_of(k).map(|s| s.support()).collect()
}

#[test]
fn patch_sizes() {
    let r3 = build_patch(PatchKind::Rotated, 3).unwrap();
    assert_eq!((r3.data.len(), r3.stabilizers.len()), (9, 8));
    assert_eq!(build_patch(PatchKind::Unrotated, 3).unwrap().data.len(), 13);
    let u2 = build_patch(PatchKind::Unrotated, 2).unwrap();
    assert_eq!((u2.data.len(), u2.stabilizers.len()), (5, 4));
    assert!(build_patch(PatchKind::Unrotated, 1).is_err());
}

#[test]
fn logicals_have_the_canonical_commutation_pattern() {
    for kind in [PatchKind::Rotated, PatchKind::Unrotated] {
        for d in 2..7 {
            let p = build_patch(kind, d).unwrap();
            let overlap = |a: &[Site], b: &[Site]| a.iter().filter(|s| b.contains(s)).count();
            for s in &p.stabilizers {
                let other = match s.kind {
                    StabType::X => &p.logical_z,
                    StabType::Z => &p.logical_x,
                };
                assert_eq!(overlap(&s.support(), other) % 2, 0, "{kind:?} d{d}");
            }
            assert_eq!(overlap(&p.logical_x, &p.logical_z) % 2, 1);
            assert_eq!(p.logical_x.len(), d);
            assert_eq!(p.logical_z.len(), d);
        }
    }
}

#[test]
fn fold_reflection_swaps_check_types() {
    for d in 2..8 {
        let p = build_patch(PatchKind::Unrotated, d).unwrap();
        let data: BTreeSet<Site> = p.data.iter().copied().collect();
        let fixed: Vec<Site> = p.data.iter().copied().filter(|&s| reflect(s) == s).collect();
        assert!(p.data.iter().all(|&s| data.contains(&reflect(s))));
        let fold = p.fold();
        assert_eq!(fold.diagonal.len(), fixed.len());
        assert_eq!(2 * fold.pairs.len() + fold.diagonal.len(), p.data.len());
        assert_eq!(fold.diagonal.len(), 2 * d - 1, "d{d}");
        if d == 3 {
            assert_eq!((fold.diagonal.len(), fold.pairs.len()), (d + 2, 4));
        }
        let mirrored: BTreeSet<Vec<Site>> = supports(&p, StabType::X)
            .into_iter()
            .map(|s| {
                let mut m: Vec<Site> = s.into_iter().map(reflect).collect();
                m.sort();
                m
            })
            .collect();
        assert_eq!(mirrored, supports(&p, StabType::Z), "d{d}");
        let mut zl: Vec<Site> = p.logical_x.iter().copied().map(reflect).collect();
        zl.sort();
        let mut want = p.logical_z.clone();
        want.sort();
        assert_eq!(zl, want);
        let on_diag = p.logical_z.iter().filter(|s| s.0 == s.1).count();
        assert_eq!(on_diag, 1, "Z_L must cross the diagonal once");
    }
}

/// Pushes generators through CX layers `layers` of the round, mirroring
/// `half_round_generators`.
fn propagate(p: &Patch, sites: &[Site], gens: &mut [SiteOp], layers: std::ops::Range<usize>) {
    let idx: BTreeMap<Site, usize> = sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    for layer in layers {
        for s in &p.stabilizers {
            let Some(q) = s.schedule.get(layer).copied().flatten() else {
                continue;
            };
            let (c, t) = match s.kind {
                StabType::X => (idx[&s.site], idx[&q]),
                StabType::Z => (idx[&q], idx[&s.site]),
            };
            for g in gens.iter_mut() {
                if g.x.get(c) {
                    g.x.flip(t);
                }
                if g.z.get(t) {
                    g.z.flip(c);
                }
            }
        }
    }
}

#[test]
fn mid_cycle_group_is_unrotated() {
    for d in [2, 3, 5, 7] {
        let p = build_patch(PatchKind::Rotated, d).unwrap();
        let (sites, mut half) = half_round_generators(&p);
        let m = mid_cycle(&p);
        assert_eq!(m.code.data.len(), d * d + (d - 1) * (d - 1));
        assert_eq!(m.code.data.len() + m.parked.len(), sites.len());
        assert!(same_group(&half, &mid_cycle_generators(&m, &sites)), "d{d}");
        // Finishing the round returns to the rotated group.
        propagate(&p, &sites, &mut half, 2..4);
        let idx: BTreeMap<Site, usize> = sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let n = sites.len();
        let mut start = Vec::new();
        for s in &p.stabilizers {
            let sup = Bits::from_indices(n, s.support().iter().map(|x| idx[x]));
            let anc = Bits::from_indices(n, [idx[&s.site]]);
            let (a, b) = match s.kind {
                StabType::X => (SiteOp { x: sup, z: Bits::zeros(n) }, SiteOp { x: anc, z: Bits::zeros(n) }),
                StabType::Z => (SiteOp { x: Bits::zeros(n), z: sup }, SiteOp { x: Bits::zeros(n), z: anc }),
            };
            start.push(a);
            start.push(b);
        }
        // After a full round each ancilla holds its check value, which is
        // the product of the data stabilizer and the ancilla's initial state.
        assert!(same_group(&half, &start), "d{d}");
    }
}

fn encoded(p: &Patch, all: &BTreeMap<Site, usize>, n: usize) -> Tableau {
    let mut t = Tableau::new(n);
    for s in p.stabilizers_of(StabType::X) {
        let terms: Vec<(Pauli, u32)> = s.support().iter().map(|x| (Pauli::X, all[x] as u32)).collect();
        let (m, _) = t.measure(&PauliString::from_terms(n, &terms), &mut || false);
        assert!(!m);
    }
    t
}

fn peek(t: &Tableau, sites: &[Site], pa: Pauli, all: &BTreeMap<Site, usize>, n: usize) -> Option<bool> {
    let terms: Vec<(Pauli, u32)> = sites.iter().map(|x| (pa, all[x] as u32)).collect();
    t.peek(&PauliString::from_terms(n, &terms))
}

#[test]
fn expansion_fixes_exactly_the_predicted_checks() {
    for kind in [PatchKind::Rotated, PatchKind::Unrotated] {
        for (d1, d2) in [(2, 5), (3, 3), (3, 5), (3, 7), (2, 11)] {
            if kind == PatchKind::Rotated && d1 == 2 {
                continue;
            }
            let m = expansion_map(kind, d1, d2).unwrap();
            let all: BTreeMap<Site, usize> =
                m.target.data.iter().enumerate().map(|(i, &s)| (s, i)).collect();
            let n = m.target.data.len();
            assert!(m.source.data.iter().all(|s| all.contains_key(s)));
            assert_eq!(m.new_qubits.len(), n - m.source.data.len());
            if d1 == d2 {
                assert!(m.new_qubits.is_empty());
            }
            let mut t = encoded(&m.source, &all, n);
            for &(s, b) in &m.new_qubits {
                t.reset(all[&s], b);
            }
            for (st, det) in m.target.stabilizers.iter().zip(&m.determined_by) {
                let pa = match st.kind.basis() {
                    Basis::X => Pauli::X,
                    Basis::Z => Pauli::Z,
                };
                let v = peek(&t, &st.support(), pa, &all, n);
                assert_eq!(v.is_some(), det.is_some(), "{kind:?} {d1}->{d2} check at {:?}", st.site);
                if let Some(v) = v {
                    assert!(!v);
                }
            }
            // The source logicals survive as subsets of the target's.
            assert!(m.source.logical_x.iter().all(|s| m.target.logical_x.contains(s)));
            assert!(m.source.logical_z.iter().all(|s| m.target.logical_z.contains(s)));
            assert_eq!(peek(&t, &m.target.logical_z, Pauli::Z, &all, n), Some(false));
        }
    }
    assert!(expansion_map(PatchKind::Rotated, 5, 3).is_err());
    assert_eq!(expansion_map(PatchKind::Rotated, 3, 5).unwrap().new_qubits.len(), 16);
}
