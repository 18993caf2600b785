//! Small dense GF(2) linear algebra.

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bits {
    pub n: usize,
    pub w: Vec<u64>,
}

impl Bits {
    pub fn zeros(n: usize) -> Self {
        Bits {
            n,
            w: vec![0; n.div_ceil(64).max(1)],
        }
    }

    pub fn from_indices(n: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut b = Self::zeros(n);
        for i in idx {
            b.flip(i);
        }
        b
    }

    pub fn get(&self, i: usize) -> bool {
        self.w[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        if self.get(i) != v {
            self.flip(i);
        }
    }

    pub fn flip(&mut self, i: usize) {
        self.w[i / 64] ^= 1 << (i % 64);
    }

    pub fn xor(&mut self, o: &Bits) {
        for (a, b) in self.w.iter_mut().zip(&o.w) {
            *a ^= b;
        }
    }

    pub fn dot(&self, o: &Bits) -> bool {
        self.w
            .iter()
            .zip(&o.w)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            % 2
            == 1
    }

    pub fn is_zero(&self) -> bool {
        self.w.iter().all(|&x| x == 0)
    }

    pub fn count(&self) -> usize {
        self.w.iter().map(|x| x.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.get(i)).collect()
    }

    fn lowest(&self) -> Option<usize> {
        for (k, &x) in self.w.iter().enumerate() {
            if x != 0 {
                return Some(k * 64 + x.trailing_zeros() as usize);
            }
        }
        None
    }
}

/// Row-reduced span of a list of generators, remembering which generators
/// combine into each pivot row.
#[derive(Clone, Debug)]
pub struct Span {
    n: usize,
    num_gens: usize,
    rows: Vec<(usize, Bits, Bits)>,
}

impl Span {
    pub fn new(gens: &[Bits]) -> Self {
        let n = gens.first().map_or(0, |g| g.n);
        let mut s = Span {
            n,
            num_gens: gens.len(),
            rows: Vec::new(),
        };
        for (i, g) in gens.iter().enumerate() {
            let mut v = g.clone();
            let mut combo = Bits::from_indices(gens.len(), [i]);
            s.reduce(&mut v, &mut combo);
            if let Some(p) = v.lowest() {
                // Keep the basis fully reduced on pivot columns.
                for r in &mut s.rows {
                    if r.1.get(p) {
                        r.1.xor(&v);
                        r.2.xor(&combo);
                    }
                }
                s.rows.push((p, v, combo));
            }
        }
        s
    }

    fn reduce(&self, v: &mut Bits, combo: &mut Bits) {
        for (p, r, c) in &self.rows {
            if v.get(*p) {
                v.xor(r);
                combo.xor(c);
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Generator indices whose XOR equals `v`, if `v` is in the span.
    pub fn express(&self, v: &Bits) -> Option<Vec<usize>> {
        let mut r = v.clone();
        let mut combo = Bits::zeros(self.num_gens);
        self.reduce(&mut r, &mut combo);
        if r.is_zero() {
            Some(combo.ones())
        } else {
            None
        }
    }

    pub fn contains(&self, v: &Bits) -> bool {
        self.express(v).is_some()
    }
}

/// Solves A x = b over GF(2), where `a` lists the rows of A (each of length
/// n). Returns one solution.
pub fn solve(a: &[Bits], b: &[bool]) -> Option<Bits> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.n);
    // Augmented rows: [A | b].
    let mut rows: Vec<Bits> = a
        .iter()
        .zip(b)
        .map(|(r, &bi)| {
            let mut x = Bits::zeros(n + 1);
            for i in r.ones() {
                x.flip(i);
            }
            x.set(n, bi);
            x
        })
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(pr) = (row..m).find(|&r| rows[r].get(col)) else {
            continue;
        };
        rows.swap(row, pr);
        let pivot = rows[row].clone();
        for (r, rr) in rows.iter_mut().enumerate() {
            if r != row && rr.get(col) {
                rr.xor(&pivot);
            }
        }
        pivots.push(col);
        row += 1;
        if row == m {
            break;
        }
    }
    for r in &rows[row..] {
        if r.get(n) {
            return None;
        }
    }
    let mut x = Bits::zeros(n);
    for (r, &c) in pivots.iter().enumerate() {
        x.set(c, rows[r].get(n));
    }
    Some(x)
}

pub fn rank(rows: &[Bits]) -> usize {
    Span::new(rows).rank()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_and_span_agree() {
        let a = vec![
            Bits::from_indices(4, [0, 1]),
            Bits::from_indices(4, [1, 2]),
            Bits::from_indices(4, [2, 3]),
        ];
        let x = solve(&a, &[true, false, true]).unwrap();
        assert!(a[0].dot(&x));
        assert!(!a[1].dot(&x));
        assert!(a[2].dot(&x));
        let s = Span::new(&a);
        assert_eq!(s.rank(), 3);
        assert_eq!(
            s.express(&Bits::from_indices(4, [0, 3])),
            Some(vec![0, 1, 2])
        );
        assert!(!s.contains(&Bits::from_indices(4, [0])));
    }

    #[test]
    fn inconsistent_system() {
        let a = vec![Bits::from_indices(2, [0]), Bits::from_indices(2, [0])];
        assert!(solve(&a, &[true, false]).is_none());
    }
}
