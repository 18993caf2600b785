//! State vector with dynamic slot allocation.
//!
//! Qubits that sit in a single-qubit Pauli eigenstate are kept out of the
//! vector ("parked") and only get a slot when an operation entangles them.

use num_complex::Complex64 as C;
use rand::Rng;

use crate::circuit::{Basis, Gate, Pauli};

use super::gates;
use super::DenseError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QState {
    Active(usize),
    /// Eigenstate of Z (basis Z) or X (basis X); `one` selects |1> / |->.
    Parked { basis: Basis, one: bool },
}

#[derive(Clone, Debug)]
pub struct DenseState {
    pub amps: Vec<C>,
    /// Circuit qubit held by each slot.
    pub slots: Vec<u32>,
    pub qubits: Vec<QState>,
    pub cap: usize,
}

fn insert_zero(i: usize, bit: usize) -> usize {
    let lo = i & ((1 << bit) - 1);
    ((i >> bit) << (bit + 1)) | lo
}

impl DenseState {
    pub fn new(num_qubits: usize, cap: usize) -> Self {
        DenseState {
            amps: vec![C::new(1.0, 0.0)],
            slots: Vec::new(),
            qubits: vec![
                QState::Parked {
                    basis: Basis::Z,
                    one: false
                };
                num_qubits
            ],
            cap,
        }
    }

    pub fn active(&self) -> usize {
        self.slots.len()
    }

    fn add_slot(&mut self, q: u32) -> Result<usize, DenseError> {
        if self.slots.len() >= self.cap {
            return Err(DenseError::CapExceeded {
                needed: self.slots.len() + 1,
                cap: self.cap,
            });
        }
        let s = self.slots.len();
        self.amps.resize(self.amps.len() * 2, C::new(0.0, 0.0));
        self.slots.push(q);
        self.qubits[q as usize] = QState::Active(s);
        Ok(s)
    }

    /// Gives every listed qubit a slot, parking other eigenstate qubits first
    /// if the cap would be exceeded. Returns the slots in order.
    pub fn activate_all(&mut self, qs: &[u32]) -> Result<Vec<usize>, DenseError> {
        let needed = qs
            .iter()
            .filter(|&&q| !matches!(self.qubits[q as usize], QState::Active(_)))
            .count();
        if self.slots.len() + needed > self.cap {
            self.park_eigenstates(qs);
        }
        for &q in qs {
            self.activate(q)?;
        }
        Ok(qs
            .iter()
            .map(|&q| match self.qubits[q as usize] {
                QState::Active(s) => s,
                QState::Parked { .. } => unreachable!(),
            })
            .collect())
    }

    /// Gives `q` a slot, preparing its parked eigenstate.
    fn activate(&mut self, q: u32) -> Result<usize, DenseError> {
        match self.qubits[q as usize] {
            QState::Active(s) => Ok(s),
            QState::Parked { basis, one } => {
                let s = self.add_slot(q)?;
                if one {
                    self.apply_1q(s, &gates::one_qubit(Gate::X).unwrap());
                }
                if basis == Basis::X {
                    self.apply_1q(s, &gates::one_qubit(Gate::H).unwrap());
                }
                Ok(s)
            }
        }
    }

    /// Removes slot `s`, whose qubit must be in Z eigenstate |bit>.
    fn remove_slot(&mut self, s: usize, bit: bool) {
        let half = self.amps.len() / 2;
        let mut out = Vec::with_capacity(half);
        let b = if bit { 1usize << s } else { 0 };
        for i in 0..half {
            out.push(self.amps[insert_zero(i, s) | b]);
        }
        self.amps = out;
        self.slots.remove(s);
        for (k, &q) in self.slots.iter().enumerate().skip(s) {
            self.qubits[q as usize] = QState::Active(k);
        }
    }

    /// Parks every active qubit (outside `keep`) found in a Z or X
    /// eigenstate.
    pub fn park_eigenstates(&mut self, keep: &[u32]) {
        let mut s = 0;
        while s < self.slots.len() {
            let q = self.slots[s];
            if keep.contains(&q) {
                s += 1;
                continue;
            }
            let p1 = self.prob_one(s);
            if p1 < 1e-12 || p1 > 1.0 - 1e-12 {
                let one = p1 > 0.5;
                self.remove_slot(s, one);
                self.qubits[q as usize] = QState::Parked {
                    basis: Basis::Z,
                    one,
                };
                continue;
            }
            let ex = self.expect_single(s, Pauli::X);
            if (ex.abs() - 1.0).abs() < 1e-12 {
                self.apply_1q(s, &gates::one_qubit(Gate::H).unwrap());
                let one = ex < 0.0;
                self.remove_slot(s, one);
                self.qubits[q as usize] = QState::Parked {
                    basis: Basis::X,
                    one,
                };
                continue;
            }
            s += 1;
        }
    }

    pub fn prob_one(&self, s: usize) -> f64 {
        let m = 1usize << s;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & m != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    fn expect_single(&self, s: usize, p: Pauli) -> f64 {
        let (x, z) = p.bits();
        let xm = if x { 1 << s } else { 0 };
        let zm = if z { 1 << s } else { 0 };
        self.expect_masks(xm, zm, (x && z) as u32).re
    }

    /// <psi| i^ny X^x Z^z |psi> over slot masks.
    pub fn expect_masks(&self, xm: usize, zm: usize, ny: u32) -> C {
        let mut acc = C::new(0.0, 0.0);
        for (i, a) in self.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let sign = if (i & zm).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            acc += self.amps[i ^ xm].conj() * a * sign;
        }
        acc * C::i().powu(ny % 4)
    }

    /// psi <- i^ny X^x Z^z psi.
    pub fn apply_masks(&mut self, xm: usize, zm: usize, ny: u32) {
        let ph = C::i().powu(ny % 4);
        if zm != 0 || ny % 4 != 0 {
            for (i, a) in self.amps.iter_mut().enumerate() {
                if (i & zm).count_ones() % 2 == 1 {
                    *a = -*a * ph;
                } else {
                    *a *= ph;
                }
            }
        }
        if xm != 0 {
            let hi = 1usize << (usize::BITS - 1 - xm.leading_zeros());
            for i in 0..self.amps.len() {
                if i & hi == 0 {
                    self.amps.swap(i, i ^ xm);
                }
            }
        }
    }

    /// Applies a Pauli to one qubit, staying parked when possible.
    pub fn apply_pauli(&mut self, q: u32, p: Pauli) -> Result<(), DenseError> {
        if p == Pauli::I {
            return Ok(());
        }
        match self.qubits[q as usize] {
            QState::Parked { basis, one } => {
                let (x, z) = p.bits();
                let flips = match basis {
                    Basis::Z => x,
                    Basis::X => z,
                };
                self.qubits[q as usize] = QState::Parked {
                    basis,
                    one: one ^ flips,
                };
            }
            QState::Active(s) => {
                let (x, z) = p.bits();
                let m = 1usize << s;
                self.apply_masks(
                    if x { m } else { 0 },
                    if z { m } else { 0 },
                    (x && z) as u32,
                );
            }
        }
        Ok(())
    }

    pub fn apply_1q(&mut self, s: usize, m: &[C; 4]) {
        let bit = 1usize << s;
        let half = self.amps.len() / 2;
        for k in 0..half {
            let i = insert_zero(k, s);
            let (a, b) = (self.amps[i], self.amps[i | bit]);
            self.amps[i] = m[0] * a + m[1] * b;
            self.amps[i | bit] = m[2] * a + m[3] * b;
        }
    }

    fn apply_dense(&mut self, slots: &[usize], m: &[C]) {
        let k = slots.len();
        let dim = 1 << k;
        let mut sorted = slots.to_vec();
        sorted.sort_unstable();
        let offs: Vec<usize> = (0..dim)
            .map(|l| {
                (0..k)
                    .filter(|j| l >> j & 1 == 1)
                    .map(|j| 1usize << slots[j])
                    .sum()
            })
            .collect();
        let mut buf = vec![C::new(0.0, 0.0); dim];
        for base in 0..self.amps.len() >> k {
            let mut i = base;
            for &s in &sorted {
                i = insert_zero(i, s);
            }
            for l in 0..dim {
                buf[l] = self.amps[i | offs[l]];
            }
            for r in 0..dim {
                let row = &m[r * dim..(r + 1) * dim];
                let mut acc = C::new(0.0, 0.0);
                for (a, b) in row.iter().zip(&buf) {
                    acc += a * b;
                }
                self.amps[i | offs[r]] = acc;
            }
        }
    }

    pub fn apply_gate(&mut self, g: Gate, targets: &[u32]) -> Result<(), DenseError> {
        match g {
            Gate::I | Gate::CI | Gate::CII => return Ok(()),
            Gate::X | Gate::Y | Gate::Z => {
                let p = match g {
                    Gate::X => Pauli::X,
                    Gate::Y => Pauli::Y,
                    _ => Pauli::Z,
                };
                return self.apply_pauli(targets[0], p);
            }
            Gate::H => {
                if let QState::Parked { basis, one } = self.qubits[targets[0] as usize] {
                    let basis = match basis {
                        Basis::Z => Basis::X,
                        Basis::X => Basis::Z,
                    };
                    self.qubits[targets[0] as usize] = QState::Parked { basis, one };
                    return Ok(());
                }
            }
            _ => {}
        }
        // A control parked in |0> makes any controlled gate trivial.
        if g.arity() > 1 && g != Gate::Swap {
            if let QState::Parked {
                basis: Basis::Z,
                one: false,
            } = self.qubits[targets[0] as usize]
            {
                return Ok(());
            }
        }
        let slots = self.activate_all(targets)?;
        match g {
            Gate::CX | Gate::CXI => {
                let (c, t) = (1usize << slots[0], 1usize << slots[1]);
                for i in 0..self.amps.len() {
                    if i & c != 0 && i & t == 0 {
                        self.amps.swap(i, i | t);
                    }
                }
            }
            Gate::CZ => {
                let m = (1usize << slots[0]) | (1usize << slots[1]);
                for (i, a) in self.amps.iter_mut().enumerate() {
                    if i & m == m {
                        *a = -*a;
                    }
                }
            }
            Gate::CXX => {
                let c = 1usize << slots[0];
                let (t1, t2) = (1usize << slots[1], 1usize << slots[2]);
                for i in 0..self.amps.len() {
                    if i & c != 0 && i & t1 == 0 {
                        self.amps.swap(i, i | t1);
                    }
                }
                for i in 0..self.amps.len() {
                    if i & c != 0 && i & t2 == 0 {
                        self.amps.swap(i, i | t2);
                    }
                }
            }
            _ => {
                if let Some(m) = gates::one_qubit(g) {
                    self.apply_1q(slots[0], &m);
                } else {
                    self.apply_dense(&slots, &gates::matrix(g));
                }
            }
        }
        Ok(())
    }

    /// Measures `q` in `basis`, leaving it parked in the outcome eigenstate.
    /// `force` fixes the outcome (used for branching).
    pub fn measure<R: Rng + ?Sized>(
        &mut self,
        q: u32,
        basis: Basis,
        rng: &mut R,
        force: Option<bool>,
    ) -> (bool, f64) {
        match self.qubits[q as usize] {
            QState::Parked { basis: b, one } if b == basis => match force {
                Some(f) if f != one => (f, 0.0),
                _ => (one, 1.0),
            },
            QState::Parked { .. } => {
                let one = force.unwrap_or_else(|| rng.random_bool(0.5));
                self.qubits[q as usize] = QState::Parked { basis, one };
                (one, 0.5)
            }
            QState::Active(s) => {
                if basis == Basis::X {
                    self.apply_1q(s, &gates::one_qubit(Gate::H).unwrap());
                }
                let p1 = self.prob_one(s).clamp(0.0, 1.0);
                let one = force.unwrap_or_else(|| rng.random::<f64>() < p1);
                let p = if one { p1 } else { 1.0 - p1 };
                if p > 0.0 {
                    let norm = 1.0 / p.sqrt();
                    let half = self.amps.len() / 2;
                    let bit = 1usize << s;
                    for k in 0..half {
                        let i = insert_zero(k, s);
                        let (keep, kill) = if one { (i | bit, i) } else { (i, i | bit) };
                        self.amps[keep] *= norm;
                        self.amps[kill] = C::new(0.0, 0.0);
                    }
                    self.remove_slot(s, one);
                } else {
                    // Impossible branch: leave the state, caller discards.
                    self.remove_slot(s, !one);
                }
                self.qubits[q as usize] = QState::Parked { basis, one };
                (one, p)
            }
        }
    }

    /// Ideal Pauli-product measurement; returns (outcome, probability).
    pub fn measure_product<R: Rng + ?Sized>(
        &mut self,
        terms: &[(Pauli, u32)],
        rng: &mut R,
        force: Option<bool>,
    ) -> Result<(bool, f64), DenseError> {
        let (xm, zm, ny) = self.masks(terms)?;
        let e = self.expect_masks(xm, zm, ny).re.clamp(-1.0, 1.0);
        let p1 = (1.0 - e) / 2.0;
        let one = force.unwrap_or_else(|| rng.random::<f64>() < p1);
        let p = if one { p1 } else { 1.0 - p1 };
        if p > 1e-15 {
            let keep = self.amps.clone();
            self.apply_masks(xm, zm, ny);
            let sign = if one { -1.0 } else { 1.0 };
            let norm = 0.5 / p.sqrt();
            for (a, k) in self.amps.iter_mut().zip(keep) {
                *a = (k + *a * sign) * norm;
            }
        }
        Ok((one, p))
    }

    /// Slot masks of a Pauli product, activating parked qubits as needed.
    pub fn masks(&mut self, terms: &[(Pauli, u32)]) -> Result<(usize, usize, u32), DenseError> {
        let qs: Vec<u32> = terms
            .iter()
            .filter(|t| t.0 != Pauli::I)
            .map(|t| t.1)
            .collect();
        let slots = self.activate_all(&qs)?;
        let mut xm = 0;
        let mut zm = 0;
        let mut ny = 0;
        for (&(p, _), s) in terms.iter().filter(|t| t.0 != Pauli::I).zip(slots) {
            let (x, z) = p.bits();
            if x {
                xm |= 1 << s;
            }
            if z {
                zm |= 1 << s;
            }
            if x && z {
                ny += 1;
            }
        }
        Ok((xm, zm, ny))
    }

    /// Resets `q` to |0> or |+> (tracing it out if active).
    pub fn reset<R: Rng + ?Sized>(&mut self, q: u32, basis: Basis, rng: &mut R) {
        if let QState::Active(_) = self.qubits[q as usize] {
            self.measure(q, basis, rng, None);
        }
        self.qubits[q as usize] = QState::Parked { basis, one: false };
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}
