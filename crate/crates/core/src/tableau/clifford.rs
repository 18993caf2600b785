//! Clifford gates as images of the single-qubit generators.

use crate::circuit::Gate;

use super::pauli::PauliString;

/// Images of X_0, Z_0, X_1, Z_1, ... under conjugation U P U^dagger.
#[derive(Clone, Debug)]
pub struct CliffordImage {
    pub arity: usize,
    pub images: Vec<PauliString>,
}

fn img(strs: &[&str]) -> CliffordImage {
    let images: Vec<PauliString> = strs
        .iter()
        .map(|s| PauliString::parse(s).expect("static Pauli literal"))
        .collect();
    CliffordImage {
        arity: images[0].n,
        images,
    }
}

impl CliffordImage {
    pub fn of(g: Gate) -> Option<CliffordImage> {
        use Gate::*;
        Some(match g {
            I => img(&["+X", "+Z"]),
            X => img(&["+X", "-Z"]),
            Y => img(&["-X", "-Z"]),
            Z => img(&["-X", "+Z"]),
            H => img(&["+Z", "+X"]),
            S => img(&["+Y", "+Z"]),
            SDag => img(&["-Y", "+Z"]),
            SqrtX => img(&["+X", "-Y"]),
            SqrtXDag => img(&["+X", "+Y"]),
            HXY => img(&["+Y", "-Z"]),
            HNXY => img(&["-Y", "-Z"]),
            CX => img(&["+XX", "+Z_", "+_X", "+ZZ"]),
            CY => img(&["+XY", "+Z_", "+ZX", "+ZZ"]),
            CZ => img(&["+XZ", "+Z_", "+ZX", "+_Z"]),
            Swap => img(&["+_X", "+_Z", "+X_", "+Z_"]),
            CI => img(&["+X_", "+Z_", "+_X", "+_Z"]),
            CXX => img(&["+XXX", "+Z__", "+_X_", "+ZZ_", "+__X", "+Z_Z"]),
            CXI => img(&["+XX_", "+Z__", "+_X_", "+ZZ_", "+__X", "+__Z"]),
            CII => img(&["+X__", "+Z__", "+_X_", "+_Z_", "+__X", "+__Z"]),
            _ => return None,
        })
    }

    /// Conjugates `p` in place by this gate acting on `qs`.
    pub fn conjugate(&self, p: &mut PauliString, qs: &[u32]) {
        let mut r = PauliString::identity(self.arity);
        let mut any = false;
        for (j, &q) in qs.iter().enumerate() {
            let q = q as usize;
            let (x, z) = (p.x(q), p.z(q));
            if x {
                r.mul_assign(&self.images[2 * j]);
                any = true;
            }
            if z {
                r.mul_assign(&self.images[2 * j + 1]);
                any = true;
            }
        }
        if !any {
            return;
        }
        for (j, &q) in qs.iter().enumerate() {
            p.set_bits(q as usize, r.x(j), r.z(j));
        }
        p.phase = (p.phase + r.phase) & 3;
    }
}
