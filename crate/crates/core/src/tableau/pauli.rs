//! Phased Pauli strings stored as i^phase * prod_q X_q^x_q Z_q^z_q.

use std::fmt;

use crate::circuit::{Pauli, PauliTerm};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct PauliString {
    pub n: usize,
    pub xs: Vec<u64>,
    pub zs: Vec<u64>,
    /// Power of i, mod 4.
    pub phase: u8,
}

pub(crate) fn words(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString {
            n,
            xs: vec![0; words(n)],
            zs: vec![0; words(n)],
            phase: 0,
        }
    }

    /// Hermitian Pauli with sign +1 from single-qubit terms.
    pub fn from_terms(n: usize, terms: &[PauliTerm]) -> Self {
        let mut p = Self::identity(n);
        for &(pa, q) in terms {
            let single = Self::single(n, q as usize, pa);
            p = p.mul(&single);
        }
        p
    }

    pub fn single(n: usize, q: usize, pa: Pauli) -> Self {
        let mut p = Self::identity(n);
        let (x, z) = pa.bits();
        p.set_bits(q, x, z);
        if pa == Pauli::Y {
            p.phase = 1;
        }
        p
    }

    /// Parses "+XIZY", "-X_Z" or "iXY" style strings ('_' and 'I' are identity).
    pub fn parse(s: &str) -> Option<Self> {
        let (phase, body) = if let Some(b) = s.strip_prefix("-i") {
            (3u8, b)
        } else if let Some(b) = s.strip_prefix("+i").or_else(|| s.strip_prefix('i')) {
            (1, b)
        } else if let Some(b) = s.strip_prefix('-') {
            (2, b)
        } else {
            (0, s.strip_prefix('+').unwrap_or(s))
        };
        let n = body.chars().count();
        let mut p = Self::identity(n);
        for (q, c) in body.chars().enumerate() {
            let pa = match c {
                'I' | '_' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                _ => return None,
            };
            p = p.mul(&Self::single(n, q, pa));
        }
        p.phase = (p.phase + phase) & 3;
        Some(p)
    }

    pub fn x(&self, q: usize) -> bool {
        self.xs[q / 64] >> (q % 64) & 1 == 1
    }

    pub fn z(&self, q: usize) -> bool {
        self.zs[q / 64] >> (q % 64) & 1 == 1
    }

    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x(q), self.z(q))
    }

    pub fn set_bits(&mut self, q: usize, x: bool, z: bool) {
        let (w, b) = (q / 64, q % 64);
        self.xs[w] = (self.xs[w] & !(1 << b)) | ((x as u64) << b);
        self.zs[w] = (self.zs[w] & !(1 << b)) | ((z as u64) << b);
    }

    pub fn weight(&self) -> usize {
        self.xs
            .iter()
            .zip(&self.zs)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.x(q) || self.z(q)).collect()
    }

    pub fn num_y(&self) -> u32 {
        self.xs
            .iter()
            .zip(&self.zs)
            .map(|(x, z)| (x & z).count_ones())
            .sum()
    }

    /// self * other.
    pub fn mul(&self, other: &PauliString) -> PauliString {
        let mut out = self.clone();
        out.mul_assign(other);
        out
    }

    pub fn mul_assign(&mut self, other: &PauliString) {
        let mut anti = 0u32;
        for w in 0..self.xs.len() {
            anti += (self.zs[w] & other.xs[w]).count_ones();
            self.xs[w] ^= other.xs[w];
            self.zs[w] ^= other.zs[w];
        }
        self.phase = (self.phase + other.phase + 2 * (anti & 1) as u8) & 3;
    }

    pub fn commutes(&self, other: &PauliString) -> bool {
        let mut c = 0u32;
        for w in 0..self.xs.len() {
            c += (self.xs[w] & other.zs[w]).count_ones() + (self.zs[w] & other.xs[w]).count_ones();
        }
        c % 2 == 0
    }

    /// The sign of a Hermitian Pauli: `Some(false)` for +1, `Some(true)` for
    /// -1, `None` if the phase makes it anti-Hermitian.
    pub fn sign(&self) -> Option<bool> {
        match (self.phase as i32 - self.num_y() as i32).rem_euclid(4) {
            0 => Some(false),
            2 => Some(true),
            _ => None,
        }
    }

    /// Same Pauli up to phase.
    pub fn same_support_and_type(&self, other: &PauliString) -> bool {
        self.xs == other.xs && self.zs == other.zs
    }

    pub fn is_identity(&self) -> bool {
        self.xs.iter().all(|&w| w == 0) && self.zs.iter().all(|&w| w == 0)
    }

    pub fn negate(&mut self) {
        self.phase = (self.phase + 2) & 3;
    }

    /// Terms (Pauli, qubit) of the non-identity positions.
    pub fn terms(&self) -> Vec<PauliTerm> {
        self.support()
            .into_iter()
            .map(|q| (self.get(q), q as u32))
            .collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match (self.phase as i32 - self.num_y() as i32).rem_euclid(4) {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(s)?;
        for q in 0..self.n {
            f.write_str(match self.get(q) {
                Pauli::I => "_",
                Pauli::X => "X",
                Pauli::Y => "Y",
                Pauli::Z => "Z",
            })?;
        }
        Ok(())
    }
}
