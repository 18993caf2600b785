//! Gate matrices. Local index bit j belongs to target j; controlled gates
//! use target 0 as the control.

use num_complex::Complex64 as C;

use crate::circuit::Gate;

const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Row-major 2x2.
pub fn one_qubit(g: Gate) -> Option<[C; 4]> {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let w = C::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    Some(match g {
        Gate::I => [o, z, z, o],
        Gate::X => [z, o, o, z],
        Gate::Y => [z, c(0.0, -1.0), c(0.0, 1.0), z],
        Gate::Z => [o, z, z, -o],
        Gate::H => [c(R, 0.0), c(R, 0.0), c(R, 0.0), c(-R, 0.0)],
        Gate::S => [o, z, z, c(0.0, 1.0)],
        Gate::SDag => [o, z, z, c(0.0, -1.0)],
        Gate::SqrtX => [c(0.5, 0.5), c(0.5, -0.5), c(0.5, -0.5), c(0.5, 0.5)],
        Gate::SqrtXDag => [c(0.5, -0.5), c(0.5, 0.5), c(0.5, 0.5), c(0.5, -0.5)],
        Gate::HXY => [z, c(R, -R), c(R, R), z],
        Gate::HNXY => [z, c(R, R), c(R, -R), z],
        Gate::T => [o, z, z, w],
        Gate::TDag => [o, z, z, w.conj()],
        Gate::TX => {
            // H T H
            let h = one_qubit(Gate::H)?;
            let t = one_qubit(Gate::T)?;
            return Some(mul2(&mul2(&h, &t), &h));
        }
        _ => return None,
    })
}

fn mul2(a: &[C; 4], b: &[C; 4]) -> [C; 4] {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

/// Full matrix (row-major, dimension 2^arity) of any gate.
pub fn matrix(g: Gate) -> Vec<C> {
    if let Some(m) = one_qubit(g) {
        return m.to_vec();
    }
    let k = g.arity();
    let dim = 1 << k;
    let from_perm = |f: &dyn Fn(usize) -> usize| {
        let mut m = vec![C::new(0.0, 0.0); dim * dim];
        for col in 0..dim {
            m[f(col) * dim + col] = C::new(1.0, 0.0);
        }
        m
    };
    let controlled = |u: &[C]| {
        let sub = dim / 2;
        let mut m = vec![C::new(0.0, 0.0); dim * dim];
        for a in 0..sub {
            m[(a << 1) * dim + (a << 1)] = C::new(1.0, 0.0);
            for b in 0..sub {
                m[((a << 1) | 1) * dim + ((b << 1) | 1)] = u[a * sub + b];
            }
        }
        m
    };
    match g {
        Gate::CX => from_perm(&|i| if i & 1 == 1 { i ^ 2 } else { i }),
        Gate::CY => controlled(&one_qubit(Gate::Y).unwrap()),
        Gate::CZ => controlled(&one_qubit(Gate::Z).unwrap()),
        Gate::Swap => from_perm(&|i| ((i & 1) << 1) | (i >> 1)),
        Gate::CH => controlled(&one_qubit(Gate::H).unwrap()),
        Gate::CHXY => controlled(&one_qubit(Gate::HXY).unwrap()),
        Gate::CHNXY => controlled(&one_qubit(Gate::HNXY).unwrap()),
        Gate::CI | Gate::CII => from_perm(&|i| i),
        Gate::CCZ => {
            let mut m = from_perm(&|i| i);
            m[7 * 8 + 7] = C::new(-1.0, 0.0);
            m
        }
        Gate::CCX => from_perm(&|i| if i & 3 == 3 { i ^ 4 } else { i }),
        Gate::CSwap => from_perm(&|i| {
            if i & 1 == 1 {
                1 | ((i & 2) << 1) | ((i & 4) >> 1)
            } else {
                i
            }
        }),
        Gate::CXX => from_perm(&|i| if i & 1 == 1 { i ^ 6 } else { i }),
        Gate::CXI => from_perm(&|i| if i & 1 == 1 { i ^ 2 } else { i }),
        Gate::CSwapH => {
            // SWAP * (H (x) H) on the two targets.
            let h = one_qubit(Gate::H).unwrap();
            let mut hh = vec![C::new(0.0, 0.0); 16];
            for r in 0..4 {
                for col in 0..4 {
                    hh[r * 4 + col] = h[(r & 1) * 2 + (col & 1)] * h[(r >> 1) * 2 + (col >> 1)];
                }
            }
            let mut u = vec![C::new(0.0, 0.0); 16];
            for r in 0..4 {
                let sr = ((r & 1) << 1) | (r >> 1);
                for col in 0..4 {
                    u[r * 4 + col] = hh[sr * 4 + col];
                }
            }
            controlled(&u)
        }
        _ => unreachable!("single-qubit gates handled above"),
    }
}
