//! Low-level circuit assembly by lattice site.
//!
//! Qubits are addressed by [`Site`] while building and renumbered in
//! coordinate order at the end. Measurement records are tracked as absolute
//! indices and converted to lookbacks on emission.

use std::collections::BTreeMap;

use crate::circuit::{Basis, Circuit, Coord, DetectorKind, Gate, Instruction, Pauli};
use crate::geometry::Site;

pub(crate) struct Builder {
    c: Circuit,
    ids: BTreeMap<Site, u32>,
    nrec: u32,
    dirty: bool,
    /// Time coordinate stamped on detectors.
    pub t: u32,
    ticks: usize,
    stages: Vec<String>,
    meta_sites: Vec<(String, Vec<Site>)>,
}

impl Builder {
    pub fn new() -> Self {
        Builder {
            c: Circuit::new(),
            ids: BTreeMap::new(),
            nrec: 0,
            dirty: false,
            t: 0,
            ticks: 0,
            stages: Vec::new(),
            meta_sites: Vec::new(),
        }
    }

    pub fn q(&mut self, s: Site) -> u32 {
        let n = self.ids.len() as u32;
        *self.ids.entry(s).or_insert(n)
    }

    fn qs(&mut self, sites: &[Site]) -> Vec<u32> {
        sites.iter().map(|&s| self.q(s)).collect()
    }

    fn push(&mut self, inst: Instruction) {
        if !inst.op_qubits().is_empty() || matches!(inst, Instruction::Feedback { .. }) {
            self.dirty = true;
        }
        self.c.push(inst);
    }

    pub fn tick(&mut self) {
        if self.dirty {
            self.c.push(Instruction::Tick);
            self.dirty = false;
            self.ticks += 1;
        }
    }

    /// Starts a named stage; pair with [`stage_end`](Self::stage_end).
    pub fn stage_start(&mut self) -> usize {
        self.tick();
        self.ticks
    }

    /// Records the stage's slice range `[start, end)` under the `stages`
    /// metadata key.
    pub fn stage_end(&mut self, name: &str, start: usize) {
        self.tick();
        self.stages.push(format!("{name}:{start}-{}", self.ticks));
    }

    /// One instruction applying `g` to each group of sites.
    pub fn gate(&mut self, g: Gate, groups: &[Vec<Site>]) {
        if groups.is_empty() {
            return;
        }
        let targets = groups.iter().flat_map(|gr| self.qs(gr)).collect();
        self.push(Instruction::Gate { gate: g, targets });
    }

    pub fn reset(&mut self, basis: Basis, sites: &[Site]) {
        if sites.is_empty() {
            return;
        }
        let targets = self.qs(sites);
        self.push(Instruction::Reset { basis, targets });
    }

    /// Returns the absolute record index of each measurement.
    pub fn measure(&mut self, basis: Basis, reset: bool, sites: &[Site]) -> Vec<u32> {
        if sites.is_empty() {
            return Vec::new();
        }
        let targets = self.qs(sites);
        let first = self.nrec;
        self.nrec += targets.len() as u32;
        self.push(Instruction::Measure {
            basis,
            reset,
            targets,
        });
        (first..self.nrec).collect()
    }

    pub fn mpp(&mut self, products: &[Vec<(Pauli, Site)>]) -> Vec<u32> {
        if products.is_empty() {
            return Vec::new();
        }
        let products: Vec<Vec<(Pauli, u32)>> = products
            .iter()
            .map(|p| p.iter().map(|&(pa, s)| (pa, self.q(s))).collect())
            .collect();
        let first = self.nrec;
        self.nrec += products.len() as u32;
        self.push(Instruction::Mpp { products });
        (first..self.nrec).collect()
    }

    fn lookbacks(&self, recs: &[u32]) -> Vec<u32> {
        recs.iter().map(|&r| self.nrec - r).collect()
    }

    pub fn detector(&mut self, kind: DetectorKind, site: Site, recs: &[u32]) {
        let coords = vec![site.0 as f64, site.1 as f64, self.t as f64];
        let records = self.lookbacks(recs);
        self.c.push(Instruction::Detector {
            kind,
            coords,
            records,
        });
    }

    pub fn observable(&mut self, index: u32, recs: &[u32]) {
        let records = self.lookbacks(recs);
        self.c.push(Instruction::Observable { index, records });
    }

    /// Applies `pauli` on each site when record `rec` is 1.
    pub fn feedback(&mut self, pauli: Pauli, pairs: &[(u32, Site)]) {
        if pairs.is_empty() {
            return;
        }
        let pairs = pairs
            .iter()
            .map(|&(r, s)| (self.nrec - r, self.q(s)))
            .collect();
        self.push(Instruction::Feedback { pauli, pairs });
    }

    pub fn correlated(&mut self, p: f64, terms: &[(Pauli, Site)]) {
        let paulis = terms.iter().map(|&(pa, s)| (pa, self.q(s))).collect();
        self.c.push(Instruction::Correlated { p, paulis });
    }

    pub fn meta(&mut self, k: &str, v: impl ToString) {
        self.c.meta.insert(k.to_string(), v.to_string());
    }

    /// Qubit-list metadata, resolved to final ids by [`finish`](Self::finish).
    pub fn meta_sites(&mut self, k: &str, sites: &[Site]) {
        for &s in sites {
            self.q(s);
        }
        self.meta_sites.push((k.to_string(), sites.to_vec()));
    }

    /// Renumbers qubits by coordinate and returns the circuit.
    pub fn finish(mut self) -> Circuit {
        self.tick();
        if matches!(self.c.instructions.last(), Some(Instruction::Tick)) {
            self.c.instructions.pop();
        }
        let mut order: Vec<(Site, u32)> = self.ids.iter().map(|(&s, &q)| (s, q)).collect();
        order.sort();
        let mut map = vec![0u32; order.len()];
        for (new, &(_, old)) in order.iter().enumerate() {
            map[old as usize] = new as u32;
        }
        let m = |q: &mut u32| *q = map[*q as usize];
        for inst in &mut self.c.instructions {
            match inst {
                Instruction::Gate { targets, .. }
                | Instruction::Reset { targets, .. }
                | Instruction::Measure { targets, .. }
                | Instruction::Noise { targets, .. } => targets.iter_mut().for_each(m),
                Instruction::Mpp { products } => products
                    .iter_mut()
                    .flat_map(|p| p.iter_mut())
                    .for_each(|t| m(&mut t.1)),
                Instruction::Correlated { paulis, .. } => {
                    paulis.iter_mut().for_each(|t| m(&mut t.1))
                }
                Instruction::Feedback { pairs, .. } => pairs.iter_mut().for_each(|t| m(&mut t.1)),
                _ => {}
            }
        }
        self.c.coords = order
            .iter()
            .map(|&((x, y), _)| Some(Coord::new(x, y)))
            .collect();
        if !self.stages.is_empty() {
            self.c.meta.insert("stages".into(), self.stages.join(" "));
        }
        for (k, sites) in std::mem::take(&mut self.meta_sites) {
            let v: Vec<String> = sites
                .iter()
                .map(|s| map[self.ids[s] as usize].to_string())
                .collect();
            self.c.meta.insert(k, v.join(" "));
        }
        self.c
    }
}
