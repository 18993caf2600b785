//! Aaronson-Gottesman stabilizer tableau with exact signs.

use rand::Rng;

use crate::circuit::{Basis, Circuit, Gate, Instruction, Pauli};

use super::clifford::CliffordImage;
use super::pauli::PauliString;
use super::SimError;

#[derive(Clone, Debug)]
pub struct Tableau {
    pub n: usize,
    /// rows[0..n] destabilizers, rows[n..2n] stabilizers.
    rows: Vec<PauliString>,
}

impl Tableau {
    /// |0...0>.
    pub fn new(n: usize) -> Self {
        let mut rows = Vec::with_capacity(2 * n);
        for q in 0..n {
            rows.push(PauliString::single(n, q, Pauli::X));
        }
        for q in 0..n {
            rows.push(PauliString::single(n, q, Pauli::Z));
        }
        Tableau { n, rows }
    }

    pub fn stabilizers(&self) -> &[PauliString] {
        &self.rows[self.n..]
    }

    pub fn destabilizers(&self) -> &[PauliString] {
        &self.rows[..self.n]
    }

    pub fn apply(&mut self, img: &CliffordImage, qs: &[u32]) {
        for r in &mut self.rows {
            img.conjugate(r, qs);
        }
    }

    pub fn apply_gate(&mut self, g: Gate, qs: &[u32]) -> Result<(), SimError> {
        let img = CliffordImage::of(g).ok_or(SimError::NonClifford(g))?;
        for chunk in qs.chunks(g.arity()) {
            self.apply(&img, chunk);
        }
        Ok(())
    }

    /// Applies a Pauli operator (flips the sign of anticommuting rows).
    pub fn apply_pauli(&mut self, p: &PauliString) {
        for r in &mut self.rows {
            if !r.commutes(p) {
                r.negate();
            }
        }
    }

    /// Deterministic outcome of measuring Hermitian `p`, if any.
    /// `Some(true)` means eigenvalue -1.
    pub fn peek(&self, p: &PauliString) -> Option<bool> {
        if self.rows[self.n..].iter().any(|s| !s.commutes(p)) {
            return None;
        }
        let mut acc = PauliString::identity(self.n);
        for i in 0..self.n {
            if !self.rows[i].commutes(p) {
                acc.mul_assign(&self.rows[self.n + i]);
            }
        }
        debug_assert!(acc.same_support_and_type(p));
        Some(acc.phase != p.phase)
    }

    /// Measures Hermitian `p`. Random outcomes are drawn from `choose`.
    /// Returns (outcome, was_random); outcome true means eigenvalue -1.
    pub fn measure(&mut self, p: &PauliString, choose: &mut dyn FnMut() -> bool) -> (bool, bool) {
        let n = self.n;
        let k = match (n..2 * n).find(|&i| !self.rows[i].commutes(p)) {
            Some(k) => k,
            None => return (self.peek(p).expect("commuting measurement"), false),
        };
        let pivot = self.rows[k].clone();
        for i in 0..2 * n {
            if i != k && !self.rows[i].commutes(p) {
                self.rows[i].mul_assign(&pivot);
            }
        }
        let outcome = choose();
        self.rows[k - n] = pivot;
        let mut s = p.clone();
        if outcome {
            s.negate();
        }
        self.rows[k] = s;
        (outcome, true)
    }

    pub fn measure_basis(
        &mut self,
        q: usize,
        basis: Basis,
        choose: &mut dyn FnMut() -> bool,
    ) -> (bool, bool) {
        let pa = match basis {
            Basis::Z => Pauli::Z,
            Basis::X => Pauli::X,
        };
        self.measure(&PauliString::single(self.n, q, pa), choose)
    }

    pub fn reset(&mut self, q: usize, basis: Basis) {
        let (m, _) = self.measure_basis(q, basis, &mut || false);
        if m {
            let flip = match basis {
                Basis::Z => Pauli::X,
                Basis::X => Pauli::Z,
            };
            self.apply_pauli(&PauliString::single(self.n, q, flip));
        }
    }
}

/// Runs the noiseless Clifford part of `c` and returns all measurement
/// results (true = -1 eigenvalue). Noise channels, including deterministic
/// `E(1)` flips, are ignored. Random outcomes come from `rng`, or are 0 when
/// `rng` is `None`.
pub fn simulate_reference<R: Rng>(
    c: &Circuit,
    mut rng: Option<&mut R>,
) -> Result<(Vec<bool>, Tableau), SimError> {
    let n = c.num_qubits();
    let mut t = Tableau::new(n);
    let mut rec: Vec<bool> = Vec::with_capacity(c.num_measurements());
    let mut choose = || match rng.as_mut() {
        Some(r) => r.random_bool(0.5),
        None => false,
    };
    for inst in &c.instructions {
        match inst {
            Instruction::Gate { gate, targets } => t.apply_gate(*gate, targets)?,
            Instruction::Reset { basis, targets } => {
                for &q in targets {
                    t.reset(q as usize, *basis);
                }
            }
            Instruction::Measure {
                basis,
                reset,
                targets,
            } => {
                for &q in targets {
                    let (m, _) = t.measure_basis(q as usize, *basis, &mut choose);
                    rec.push(m);
                    if *reset {
                        t.reset(q as usize, *basis);
                    }
                }
            }
            Instruction::Mpp { products } => {
                for prod in products {
                    let p = PauliString::from_terms(n, prod);
                    let (m, _) = t.measure(&p, &mut choose);
                    rec.push(m);
                }
            }
            Instruction::Feedback { pauli, pairs } => {
                for &(k, q) in pairs {
                    if rec[rec.len() - k as usize] {
                        t.apply_pauli(&PauliString::single(n, q as usize, *pauli));
                    }
                }
            }
            _ => {}
        }
    }
    Ok((rec, t))
}

/// Heisenberg conjugation U P U^dagger of `p` through the unitary circuit `c`.
pub fn conjugate(c: &Circuit, p: &PauliString) -> Result<PauliString, SimError> {
    let mut out = p.clone();
    for inst in &c.instructions {
        match inst {
            Instruction::Gate { gate, targets } => {
                let img = CliffordImage::of(*gate).ok_or(SimError::NonClifford(*gate))?;
                for chunk in targets.chunks(gate.arity()) {
                    img.conjugate(&mut out, chunk);
                }
            }
            Instruction::Tick
            | Instruction::Noise { .. }
            | Instruction::Detector { .. }
            | Instruction::Observable { .. } => {}
            _ => return Err(SimError::NotUnitary),
        }
    }
    Ok(out)
}
