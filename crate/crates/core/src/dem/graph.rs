//! Matching graph over the soft detectors.
//!
//! Mechanisms touching a post-selected or herald detector are dropped: a
//! decoded shot has already passed those checks. Hyperedges are split into
//! existing edges where possible.
//!
//! Each connected component gets a node potential `f` with
//! `obs(e) = f(u) ^ f(v)` on every bulk edge. Then the logical class of a
//! correction is fixed by which boundary edges it uses plus the potentials
//! of the defects, and class-constrained matching reduces to a parity
//! constraint on the number of "far side" boundary matches.

use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::cmp::Reverse;

use super::{xor_prob, DetectorErrorModel};
use crate::circuit::DetectorKind;

/// Integer weight units per natural-log unit of likelihood.
pub const WEIGHT_SCALE: f64 = 16384.0;

pub fn weight_of(p: f64) -> i64 {
    if p >= 0.5 {
        0
    } else {
        (((1.0 - p) / p).ln() * WEIGHT_SCALE).round() as i64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub u: u32,
    /// `None` for a boundary edge.
    pub v: Option<u32>,
    pub obs: u64,
    pub p: f64,
    /// Erasure flags of contributing mechanisms; any set flag makes the
    /// edge free (p = 1/2).
    pub flags: Vec<u32>,
    pub weight: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub nodes: Vec<u32>,
    /// Boundary label of the far side (0 if the component cannot flip an
    /// observable).
    pub side_mask: u64,
    pub consistent: bool,
    /// Cheapest near-to-far boundary path (an undetectable logical) under
    /// the base weights.
    pub loop_cost: Option<i64>,
}

#[derive(Clone, Debug)]
pub struct DecodingGraph {
    pub num_detectors: usize,
    pub num_observables: usize,
    pub node_of: Vec<Option<u32>>,
    pub detector_of: Vec<u32>,
    pub edges: Vec<Edge>,
    pub adj: Vec<Vec<u32>>,
    pub comp_of: Vec<u32>,
    pub comps: Vec<Component>,
    pub potential: Vec<u64>,
    pub flag_edges: HashMap<u32, Vec<u32>>,
    base: Vec<i64>,
    base_sides: [Vec<i64>; 2],
    /// XOR-combined probability of logical mechanisms with no soft symptom.
    pub undetectable: f64,
    /// Hyperedges that could not be split into existing edges with the
    /// right observable.
    pub decomposition_misses: usize,
}

type Key = (u32, Option<u32>, u64);

struct Acc {
    p: f64,
    flags: Vec<u32>,
}

fn add(map: &mut BTreeMap<Key, Acc>, key: Key, p: f64, flag: Option<u32>) {
    let a = map.entry(key).or_insert(Acc {
        p: 0.0,
        flags: Vec::new(),
    });
    a.p = xor_prob(a.p, p);
    if let Some(f) = flag {
        if !a.flags.contains(&f) {
            a.flags.push(f);
        }
    }
}

fn key_of(a: u32, b: Option<u32>, obs: u64) -> Key {
    match b {
        Some(b) if b < a => (b, Some(a), obs),
        _ => (a, b, obs),
    }
}

/// Splits `nodes` into parts that are existing edge keys, with observables
/// XORing to `target` when `match_obs`.
fn split(
    nodes: &[u32],
    target: u64,
    options: &HashMap<(u32, Option<u32>), Vec<u64>>,
    match_obs: bool,
    budget: &mut usize,
) -> Option<Vec<Key>> {
    if *budget == 0 {
        return None;
    }
    *budget -= 1;
    let Some((&a, rest)) = nodes.split_first() else {
        return (!match_obs || target == 0).then(Vec::new);
    };
    let mut tries: Vec<(Option<u32>, Vec<u32>)> = vec![(None, rest.to_vec())];
    for (i, &b) in rest.iter().enumerate() {
        let mut r = rest.to_vec();
        r.remove(i);
        tries.push((Some(b), r));
    }
    for (b, r) in tries {
        let k = key_of(a, b, 0);
        let Some(obs_list) = options.get(&(k.0, k.1)) else {
            continue;
        };
        for &o in obs_list {
            if let Some(mut parts) = split(&r, target ^ o, options, match_obs, budget) {
                parts.push((k.0, k.1, o));
                return Some(parts);
            }
            if !match_obs {
                break;
            }
        }
    }
    None
}

impl DecodingGraph {
    pub fn new(dem: &DetectorErrorModel) -> Self {
        let mut node_of = vec![None; dem.num_detectors];
        let mut detector_of = Vec::new();
        for (d, k) in dem.detector_kinds.iter().enumerate() {
            if *k == DetectorKind::Soft {
                node_of[d] = Some(detector_of.len() as u32);
                detector_of.push(d as u32);
            }
        }
        let soft = |m: &super::Mechanism| -> Option<Vec<u32>> {
            m.detectors.iter().map(|&d| node_of[d as usize]).collect()
        };
        let mut map: BTreeMap<Key, Acc> = BTreeMap::new();
        let mut undetectable = 0.0;
        let mut hyper = Vec::new();
        let soft_of = |dets: &[u32]| -> Option<Vec<u32>> {
            dets.iter().map(|&d| node_of[d as usize]).collect()
        };
        for m in &dem.mechanisms {
            let Some(s) = soft(m) else { continue };
            let parts: Option<Vec<(Vec<u32>, u64)>> = m
                .parts
                .iter()
                .map(|e| soft_of(&e.detectors).filter(|d| !d.is_empty() && d.len() <= 2).map(|d| (d, e.observables)))
                .collect();
            if let Some(parts) = parts.filter(|p| !p.is_empty() && s.len() >= 2) {
                for (d, o) in parts {
                    add(&mut map, key_of(d[0], d.get(1).copied(), o), m.p, m.erasure);
                }
                continue;
            }
            match s.len() {
                0 => {
                    if m.observables != 0 {
                        undetectable = xor_prob(undetectable, m.p);
                    }
                }
                1 => add(&mut map, (s[0], None, m.observables), m.p, m.erasure),
                2 => add(&mut map, key_of(s[0], Some(s[1]), m.observables), m.p, m.erasure),
                _ => hyper.push((s, m)),
            }
        }
        let mut options: HashMap<(u32, Option<u32>), Vec<u64>> = HashMap::new();
        for k in map.keys() {
            options.entry((k.0, k.1)).or_default().push(k.2);
        }
        let mut decomposition_misses = 0;
        for (mut s, m) in hyper {
            s.sort_unstable();
            let mut budget = 20_000;
            let parts = split(&s, m.observables, &options, true, &mut budget).or_else(|| {
                decomposition_misses += 1;
                let mut budget = 20_000;
                split(&s, m.observables, &options, false, &mut budget).map(|mut parts| {
                    let got = parts.iter().fold(0, |a, k| a ^ k.2);
                    parts[0].2 ^= got ^ m.observables;
                    parts
                })
            });
            let parts = parts.unwrap_or_else(|| {
                let mut parts: Vec<Key> = s
                    .chunks(2)
                    .map(|c| key_of(c[0], c.get(1).copied(), 0))
                    .collect();
                parts[0].2 = m.observables;
                parts
            });
            for k in parts {
                add(&mut map, k, m.p, m.erasure);
            }
        }
        let n = detector_of.len();
        let mut g = DecodingGraph {
            num_detectors: dem.num_detectors,
            num_observables: dem.num_observables,
            node_of,
            detector_of,
            edges: Vec::new(),
            adj: Vec::new(),
            comp_of: Vec::new(),
            comps: Vec::new(),
            potential: Vec::new(),
            flag_edges: HashMap::new(),
            base: Vec::new(),
            base_sides: [Vec::new(), Vec::new()],
            undetectable,
            decomposition_misses,
        };
        // A two-detector mechanism can leave through two different
        // boundaries (for example one qubit of a correlated fault exits
        // through the logical boundary, the other through the growth-time
        // boundary). As a bulk edge it contradicts the gauge; re-express it
        // as the two boundary edges it really is.
        for _ in 0..4 {
            g.install(&map, n);
            let mut changed = false;
            for e in &g.edges {
                let Some(v) = e.v else { continue };
                if g.potential[e.u as usize] ^ g.potential[v as usize] == e.obs {
                    continue;
                }
                let exits = |x: u32| -> Vec<u64> {
                    map.range((x, None, 0)..=(x, None, u64::MAX))
                        .map(|(k, _)| k.2)
                        .collect()
                };
                let (bu, bv) = (exits(e.u), exits(v));
                let Some((o1, o2)) = bu
                    .iter()
                    .flat_map(|&a| bv.iter().map(move |&b| (a, b)))
                    .find(|&(a, b)| a ^ b == e.obs)
                else {
                    continue;
                };
                let acc = map.remove(&(e.u, Some(v), e.obs)).expect("edge key");
                for key in [(e.u, None, o1), (v, None, o2)] {
                    add(&mut map, key, acc.p, None);
                    let a = map.get_mut(&key).expect("just added");
                    for &f in &acc.flags {
                        if !a.flags.contains(&f) {
                            a.flags.push(f);
                        }
                    }
                }
                changed = true;
            }
            if !changed {
                break;
            }
        }
        g.base = g.edges.iter().map(|e| e.weight).collect();
        let w = g.base.clone();
        g.base_sides = g.side_distances(&w);
        for c in 0..g.comps.len() {
            g.comps[c].loop_cost = g.loop_cost(c, &w);
        }
        g
    }

    /// Rebuilds edges, adjacency and the gauge from merged mechanisms.
    fn install(&mut self, map: &BTreeMap<Key, Acc>, n: usize) {
        self.edges = map
            .iter()
            .map(|(&(u, v, obs), a)| Edge {
                u,
                v,
                obs,
                p: a.p,
                weight: weight_of(a.p),
                flags: a.flags.clone(),
            })
            .collect();
        self.adj = vec![Vec::new(); n];
        self.flag_edges = HashMap::new();
        for (i, e) in self.edges.iter().enumerate() {
            self.adj[e.u as usize].push(i as u32);
            if let Some(v) = e.v {
                self.adj[v as usize].push(i as u32);
            }
            for &f in &e.flags {
                self.flag_edges.entry(f).or_default().push(i as u32);
            }
        }
        self.gauge();
    }

    pub fn num_nodes(&self) -> usize {
        self.detector_of.len()
    }

    pub fn base_weights(&self) -> Vec<i64> {
        self.base.clone()
    }

    pub fn base_weights_ref(&self) -> &[i64] {
        &self.base
    }

    /// Edge weights with every edge of an erased location made free.
    pub fn weights_with_erasures(&self, erased: &[u32]) -> Vec<i64> {
        let mut w = self.base_weights();
        for f in erased {
            for &e in self.flag_edges.get(f).into_iter().flatten() {
                w[e as usize] = 0;
            }
        }
        w
    }

    /// Components touched by erasure flags.
    pub fn comps_touched(&self, erased: &[u32]) -> Vec<u32> {
        let mut out: Vec<u32> = erased
            .iter()
            .flat_map(|f| self.flag_edges.get(f).into_iter().flatten())
            .map(|&e| self.comp_of[self.edges[e as usize].u as usize])
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn other(&self, e: &Edge, x: u32) -> Option<u32> {
        match e.v {
            Some(v) if v == x => Some(e.u),
            Some(v) => Some(v),
            None => None,
        }
    }

    /// Boundary label of boundary edge `e` after the potential shift.
    pub fn boundary_label(&self, e: &Edge) -> u64 {
        e.obs ^ self.potential[e.u as usize]
    }

    /// Potentials from a maximum-likelihood spanning forest, so that rare
    /// mechanisms never define the gauge; components are its trees.
    fn gauge(&mut self) {
        let n = self.num_nodes();
        let mut parent: Vec<u32> = (0..n as u32).collect();
        let mut par: Vec<u64> = vec![0; n];
        fn find(parent: &mut [u32], par: &mut [u64], x: u32) -> (u32, u64) {
            let p = parent[x as usize];
            if p == x {
                return (x, 0);
            }
            let (r, pp) = find(parent, par, p);
            par[x as usize] ^= pp;
            parent[x as usize] = r;
            (r, par[x as usize])
        }
        let mut order: Vec<usize> = (0..self.edges.len())
            .filter(|&i| self.edges[i].v.is_some())
            .collect();
        order.sort_by_key(|&i| (self.edges[i].weight, i));
        for i in order {
            let e = &self.edges[i];
            let v = e.v.expect("bulk");
            let (ru, pu) = find(&mut parent, &mut par, e.u);
            let (rv, pv) = find(&mut parent, &mut par, v);
            if ru != rv {
                parent[rv as usize] = ru;
                par[rv as usize] = pu ^ pv ^ e.obs;
            }
        }
        self.comp_of = vec![u32::MAX; n];
        self.potential = vec![0; n];
        self.comps = Vec::new();
        let mut comp_of_root: HashMap<u32, u32> = HashMap::new();
        for x in 0..n as u32 {
            let (r, px) = find(&mut parent, &mut par, x);
            let cid = *comp_of_root.entry(r).or_insert_with(|| {
                self.comps.push(Component {
                    nodes: Vec::new(),
                    side_mask: 0,
                    consistent: true,
                    loop_cost: None,
                });
                (self.comps.len() - 1) as u32
            });
            self.comp_of[x as usize] = cid;
            self.potential[x as usize] = px;
            self.comps[cid as usize].nodes.push(x);
        }
        for e in &self.edges {
            let c = self.comp_of[e.u as usize] as usize;
            match e.v {
                Some(v) => {
                    if self.potential[e.u as usize] ^ self.potential[v as usize] != e.obs {
                        self.comps[c].consistent = false;
                    }
                }
                None => {
                    let l = self.boundary_label(e);
                    if l != 0 {
                        let comp = &mut self.comps[c];
                        if comp.side_mask != 0 && comp.side_mask != l {
                            comp.consistent = false;
                        }
                        comp.side_mask = l;
                    }
                }
            }
        }
    }

    /// Dijkstra over bulk edges from `sources` (node, initial distance).
    /// Returns distances (i64::MAX unreachable) for every node.
    pub fn dijkstra(&self, sources: &[(u32, i64)], w: &[i64]) -> Vec<i64> {
        self.dijkstra_within(sources, w, i64::MAX)
    }

    /// Like [`dijkstra`](Self::dijkstra) but stops past `radius`; entries
    /// above the radius are reported as unreachable.
    pub fn dijkstra_within(&self, sources: &[(u32, i64)], w: &[i64], radius: i64) -> Vec<i64> {
        let mut dist = vec![i64::MAX; self.num_nodes()];
        let mut heap = BinaryHeap::new();
        for &(s, d) in sources {
            if d < dist[s as usize] {
                dist[s as usize] = d;
                heap.push(Reverse((d, s)));
            }
        }
        while let Some(Reverse((d, x))) = heap.pop() {
            if d > radius {
                break;
            }
            if d > dist[x as usize] {
                continue;
            }
            for &ei in &self.adj[x as usize] {
                let e = &self.edges[ei as usize];
                let Some(y) = self.other(e, x) else { continue };
                let nd = d + w[ei as usize];
                if nd < dist[y as usize] {
                    dist[y as usize] = nd;
                    heap.push(Reverse((nd, y)));
                }
            }
        }
        if radius < i64::MAX {
            for d in dist.iter_mut().filter(|d| **d > radius) {
                *d = i64::MAX;
            }
        }
        dist
    }

    /// Distance from every node to the near and to the far boundary.
    pub fn side_distances(&self, w: &[i64]) -> [Vec<i64>; 2] {
        let mut src: [Vec<(u32, i64)>; 2] = [Vec::new(), Vec::new()];
        for x in 0..self.num_nodes() as u32 {
            let (bn, bf) = self.boundary_costs(x, w);
            src[0].extend(bn.map(|b| (x, b)));
            src[1].extend(bf.map(|b| (x, b)));
        }
        [self.dijkstra(&src[0], w), self.dijkstra(&src[1], w)]
    }

    pub fn base_side_distances(&self) -> &[Vec<i64>; 2] {
        &self.base_sides
    }

    /// Cheapest boundary edge per side at node `x`: (near, far).
    pub fn boundary_costs(&self, x: u32, w: &[i64]) -> (Option<i64>, Option<i64>) {
        let mut near = None;
        let mut far = None;
        for &ei in &self.adj[x as usize] {
            let e = &self.edges[ei as usize];
            if e.v.is_none() {
                let slot = if self.boundary_label(e) == 0 {
                    &mut near
                } else {
                    &mut far
                };
                let c = w[ei as usize];
                *slot = Some(slot.map_or(c, |s: i64| s.min(c)));
            }
        }
        (near, far)
    }

    /// Cheapest path entering through a near boundary edge and leaving
    /// through a far one.
    pub fn loop_cost(&self, comp: usize, w: &[i64]) -> Option<i64> {
        let c = &self.comps[comp];
        if c.side_mask == 0 {
            return None;
        }
        let sources: Vec<(u32, i64)> = c
            .nodes
            .iter()
            .filter_map(|&x| self.boundary_costs(x, w).0.map(|d| (x, d)))
            .collect();
        let dist = self.dijkstra(&sources, w);
        c.nodes
            .iter()
            .filter_map(|&x| {
                let d = dist[x as usize];
                let far = self.boundary_costs(x, w).1?;
                (d < i64::MAX).then_some(d + far)
            })
            .min()
    }
}
