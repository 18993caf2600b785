use cultivar::circuit::{Channel, Circuit, Gate, Instruction, Pauli, ALL_GATES};
use cultivar::densesim::DenseState;
use cultivar::tableau::{conjugate, simulate_reference, CliffordImage, FrameProgram, PauliString, Tableau};
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ps(s: &str) -> PauliString {
    PauliString::parse(s).unwrap()
}

#[test]
fn conjugation_examples() {
    let hxy = Circuit::parse("H_XY 0").unwrap();
    assert_eq!(conjugate(&hxy, &ps("+X")).unwrap(), PauliString::single(1, 0, Pauli::Y));
    let z = conjugate(&hxy, &ps("+Z")).unwrap();
    assert_eq!(z, ps("-Z"));
    let cz = Circuit::parse("CZ 0 1").unwrap();
    assert_eq!(conjugate(&cz, &ps("+X_")).unwrap(), ps("+XZ"));
    let id = Circuit::parse("TICK").unwrap();
    assert_eq!(conjugate(&id, &ps("+XYZ")).unwrap(), ps("+XYZ"));
    assert!(conjugate(&Circuit::parse("T 0").unwrap(), &ps("+X")).is_err());
    assert!(conjugate(&Circuit::parse("M 0").unwrap(), &ps("+X")).is_err());
}

/// Random-ish product state plus entanglement, fixed per qubit count.
fn scrambled(n: usize) -> DenseState {
    let mut st = DenseState::new(n, n);
    let all: Vec<u32> = (0..n as u32).collect();
    st.activate_all(&all).unwrap();
    for q in 0..n as u32 {
        for g in [Gate::H, Gate::T, Gate::TX, Gate::S, Gate::T][..(q as usize % 3) + 3].iter() {
            st.apply_gate(*g, &[q]).unwrap();
        }
    }
    for q in 1..n as u32 {
        st.apply_gate(Gate::CH, &[q - 1, q]).unwrap();
        st.apply_gate(Gate::T, &[q]).unwrap();
    }
    st
}

fn apply_string(st: &mut DenseState, p: &PauliString) {
    for (pa, q) in p.terms() {
        st.apply_pauli(q, pa).unwrap();
    }
    if p.sign() == Some(true) {
        st.amps.iter_mut().for_each(|a| *a = -*a);
    }
}

fn close(a: &DenseState, b: &DenseState) -> bool {
    a.amps.iter().zip(&b.amps).all(|(x, y)| (x - y).norm() < 1e-12)
}

/// U P = (U P U^dag) U on a generic state, for every Clifford gate and every
/// single-qubit generator, checks the images including sign.
#[test]
fn images_match_dense_matrices() {
    for g in ALL_GATES {
        let Some(img) = CliffordImage::of(g) else {
            continue;
        };
        let k = g.arity();
        let qs: Vec<u32> = (0..k as u32).collect();
        for j in 0..k {
            for pa in [Pauli::X, Pauli::Z, Pauli::Y] {
                let p = PauliString::single(k, j, pa);
                let mut image = p.clone();
                img.conjugate(&mut image, &qs);
                assert!(image.sign().is_some(), "{g:?}");
                let mut a = scrambled(k);
                apply_string(&mut a, &p);
                a.apply_gate(g, &qs).unwrap();
                let mut b = scrambled(k);
                b.apply_gate(g, &qs).unwrap();
                apply_string(&mut b, &image);
                assert!(close(&a, &b), "{g:?}: {p} -> {image}");
            }
        }
    }
}

fn clifford_gates() -> Vec<Gate> {
    ALL_GATES.iter().copied().filter(|g| CliffordImage::of(*g).is_some()).collect()
}

fn random_clifford(n: u32, ops: &[(usize, u32, u32, u32)]) -> Circuit {
    let gates = clifford_gates();
    let mut c = Circuit::new();
    for &(gi, a, b, cq) in ops {
        let g = gates[gi % gates.len()];
        let (a, b, cq) = (a % n, b % n, cq % n);
        let targets = match g.arity() {
            1 => vec![a],
            2 if a != b => vec![a, b],
            3 if a != b && b != cq && a != cq => vec![a, b, cq],
            _ => continue,
        };
        c.push(Instruction::Gate { gate: g, targets });
        c.push(Instruction::Tick);
    }
    if c.num_qubits() < n as usize {
        c.push(Instruction::Gate { gate: Gate::I, targets: vec![n - 1] });
    }
    c
}

fn dense_of(c: &Circuit) -> DenseState {
    let n = c.num_qubits();
    let mut st = DenseState::new(n, n);
    st.activate_all(&(0..n as u32).collect::<Vec<_>>()).unwrap();
    for inst in &c.instructions {
        if let Instruction::Gate { gate, targets } = inst {
            for g in targets.chunks(gate.arity()) {
                st.apply_gate(*gate, g).unwrap();
            }
        }
    }
    st
}

fn expectation(st: &mut DenseState, p: &PauliString) -> C {
    let (xm, zm, ny) = st.masks(&p.terms()).unwrap();
    let v = st.expect_masks(xm, zm, ny);
    if p.sign() == Some(true) {
        -v
    } else {
        v
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    /// Every tableau stabilizer of a random Clifford circuit has expectation
    /// +1 in the dense state.
    #[test]
    fn tableau_agrees_with_dense(ops in prop::collection::vec((0usize..64, 0u32..8, 0u32..8, 0u32..8), 1..60)) {
        let c = random_clifford(8, &ops);
        let (_, t) = simulate_reference::<ChaCha8Rng>(&c, None).unwrap();
        let mut st = dense_of(&c);
        for s in t.stabilizers() {
            let e = expectation(&mut st, s);
            prop_assert!((e - C::new(1.0, 0.0)).norm() < 1e-9, "{s}: {e}");
        }
    }

    #[test]
    fn conjugation_is_a_homomorphism(ops in prop::collection::vec((0usize..64, 0u32..5, 0u32..5, 0u32..5), 1..30),
                                     a in "[IXYZ]{5}", b in "[IXYZ]{5}") {
        let c = random_clifford(5, &ops);
        let (pa, pb) = (ps(&a), ps(&b));
        let ab = conjugate(&c, &pa.mul(&pb)).unwrap();
        let split = conjugate(&c, &pa).unwrap().mul(&conjugate(&c, &pb).unwrap());
        prop_assert_eq!(ab, split);
        prop_assert_eq!(pa.commutes(&pb), conjugate(&c, &pa).unwrap().commutes(&conjugate(&c, &pb).unwrap()));
    }
}

#[test]
fn measurement_distribution_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ops: Vec<(usize, u32, u32, u32)> = (0..40).map(|_| (rng.random_range(0..64), rng.random(), rng.random(), rng.random())).collect();
    let c = random_clifford(8, &ops);
    let st = dense_of(&c);
    let shots = 10_000;
    let mut hist = vec![0usize; 256];
    let (_, t0) = simulate_reference::<ChaCha8Rng>(&c, None).unwrap();
    for _ in 0..shots {
        let mut t = t0.clone();
        let mut bits = 0usize;
        for q in 0..8 {
            let (m, _) = t.measure_basis(q, cultivar::circuit::Basis::Z, &mut || rng.random_bool(0.5));
            bits |= (m as usize) << q;
        }
        hist[bits] += 1;
    }
    // The dense slots were activated in qubit order.
    for (bits, &h) in hist.iter().enumerate() {
        let p = st.amps[bits].norm_sqr();
        let f = h as f64 / shots as f64;
        let sigma = (p * (1.0 - p) / shots as f64).sqrt();
        if p < 1e-12 {
            assert_eq!(h, 0, "outcome {bits:08b} has zero amplitude");
        } else {
            assert!((f - p).abs() < 5.0 * sigma + 1e-9, "{bits:08b}: {f} vs {p}");
        }
    }
}

#[test]
fn peek_and_measure_agree() {
    let mut t = Tableau::new(2);
    t.apply_gate(Gate::H, &[0]).unwrap();
    t.apply_gate(Gate::CX, &[0, 1]).unwrap();
    assert_eq!(t.peek(&ps("+ZZ")), Some(false));
    assert_eq!(t.peek(&ps("+XX")), Some(false));
    assert_eq!(t.peek(&ps("-YY")), Some(false));
    assert_eq!(t.peek(&ps("+Z_")), None);
    let (m, random) = t.measure(&ps("+Z_"), &mut || true);
    assert!(m && random);
    assert_eq!(t.peek(&ps("+_Z")), Some(true));
}

#[test]
fn ghz_parities_are_deterministic() {
    let c = Circuit::parse("R 0 1 2 3 4\nH 0\nCX 0 1\nTICK\nCX 1 2\nTICK\nCX 0 3 2 4\nTICK\nM 3 4").unwrap();
    for seed in 0..8 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (rec, _) = simulate_reference(&c, Some(&mut rng)).unwrap();
        assert_eq!(rec[0], rec[1]);
    }
    let c = Circuit::parse("R 0 1 2\nH 0\nCX 0 1 0 2\nMPP Z0*Z1 Z1*Z2").unwrap();
    let (rec, _) = simulate_reference::<ChaCha8Rng>(&c, None).unwrap();
    assert_eq!(rec, vec![false, false]);
}

#[test]
fn single_depolarizing_fault_rate() {
    let p = 0.03;
    let c = Circuit::parse(&format!("R 0\nTICK\nDEP1({p}) 0\nM 0\nDETECTOR rec[-1]")).unwrap();
    let prog = FrameProgram::compile(&c).unwrap();
    let shots = 1_000_000;
    let s = prog.sample(shots, 17);
    let fired = (0..shots).filter(|&k| s.detector(0, k)).count() as f64 / shots as f64;
    let expect = 2.0 * p / 3.0;
    let sigma = (expect * (1.0 - expect) / shots as f64).sqrt();
    assert!((fired - expect).abs() < 3.0 * sigma, "{fired} vs {expect}");
    let zero = FrameProgram::compile(&Circuit::parse("R 0\nDEP1(0) 0\nM 0\nDETECTOR rec[-1]").unwrap()).unwrap();
    let z = zero.sample(4096, 1);
    assert!((0..4096).all(|k| !z.detector(0, k)));
}

#[test]
fn sampling_is_seed_reproducible() {
    let c = Circuit::parse("R 0 1\nDEP1(0.2) 0 1\nCX 0 1\nDEP2(0.1) 0 1\nM 0 1\nDETECTOR rec[-1]\nDETECTOR rec[-2]").unwrap();
    let prog = FrameProgram::compile(&c).unwrap();
    let a = prog.sample(10_000, 42);
    let b = prog.sample(10_000, 42);
    let other = prog.sample(10_000, 43);
    assert_eq!(a.det, b.det);
    assert_ne!(a.det, other.det);
}

const REPETITION: &str = "\
R 0 1 2 3 4
RX 5
TICK
CX 0 3 1 4
H 5
TICK
CX 1 3 2 4
S 5
TICK
MR 3 4
S 5
DETECTOR rec[-2]
DETECTOR rec[-1]
TICK
CX 0 3 1 4
H 5
TICK
CX 1 3 2 4
H_XY 5
TICK
MR 3 4
H_XY 5
DETECTOR rec[-2] rec[-4]
DETECTOR rec[-1] rec[-3]
TICK
M 0 1 2
MX 5
DETECTOR rec[-4] rec[-3] rec[-6]
DETECTOR rec[-3] rec[-2] rec[-5]
DETECTOR rec[-1]
OBSERVABLE_INCLUDE(0) rec[-2]
";

/// Samples the noisy circuit directly on a tableau, one shot at a time.
fn direct_shot(c: &Circuit, dets: &[Vec<u32>], obs: &[u32], rng: &mut ChaCha8Rng) -> (Vec<bool>, bool) {
    let n = c.num_qubits();
    let mut t = Tableau::new(n);
    let mut rec: Vec<bool> = Vec::new();
    let mut last = vec![0usize; n];
    let flip = |t: &mut Tableau, q: u32, pa: Pauli| t.apply_pauli(&PauliString::single(n, q as usize, pa));
    for inst in &c.instructions {
        match inst {
            Instruction::Gate { gate, targets } => t.apply_gate(*gate, targets).unwrap(),
            Instruction::Reset { basis, targets } => targets.iter().for_each(|&q| t.reset(q as usize, *basis)),
            Instruction::Measure { basis, reset, targets } => {
                for &q in targets {
                    let (m, _) = t.measure_basis(q as usize, *basis, &mut || rng.random_bool(0.5));
                    last[q as usize] = rec.len();
                    rec.push(m);
                    if *reset {
                        t.reset(q as usize, *basis);
                    }
                }
            }
            Instruction::Noise { channel, p, targets } => {
                for g in targets.chunks(channel.arity()) {
                    if !rng.random_bool(*p) {
                        continue;
                    }
                    match channel {
                        Channel::XErr => flip(&mut t, g[0], Pauli::X),
                        Channel::ZErr => flip(&mut t, g[0], Pauli::Z),
                        Channel::MErr => rec[last[g[0] as usize]] ^= true,
                        Channel::Dep1 | Channel::Dep2 | Channel::Dep3 => {
                            let k = rng.random_range(1..1usize << (2 * g.len()));
                            for (j, &q) in g.iter().enumerate() {
                                flip(&mut t, q, Pauli::from_index((k >> (2 * j)) & 3));
                            }
                        }
                        _ => unreachable!(),
                    }
                }
            }
            _ => {}
        }
    }
    let parity = |rs: &[u32]| rs.iter().fold(false, |a, &r| a ^ rec[r as usize]);
    (dets.iter().map(|d| parity(d)).collect(), parity(obs))
}

#[test]
fn frame_sampler_matches_direct_tableau_runs() {
    use cultivar::circuit::{apply_noise, NoiseModel, NoiseParams};
    let c = apply_noise(&Circuit::parse(REPETITION).unwrap(), NoiseModel::Uniform, NoiseParams::new(0.02)).unwrap();
    let prog = FrameProgram::compile(&c).unwrap();
    let nd = prog.num_detectors();
    let frame_shots = 200_000;
    let s = prog.sample(frame_shots, 3);
    let direct_shots = 20_000;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut direct = vec![0usize; nd + 1];
    for _ in 0..direct_shots {
        let (d, o) = direct_shot(&c, &prog.detectors, &prog.observables[0], &mut rng);
        for (i, &b) in d.iter().enumerate() {
            direct[i] += b as usize;
        }
        direct[nd] += o as usize;
    }
    for i in 0..=nd {
        let f = if i < nd {
            (0..frame_shots).filter(|&k| s.detector(i, k)).count()
        } else {
            (0..frame_shots).filter(|&k| s.observable(0, k)).count()
        } as f64
            / frame_shots as f64;
        let g = direct[i] as f64 / direct_shots as f64;
        let sigma = (f * (1.0 - f) / direct_shots as f64 + f * (1.0 - f) / frame_shots as f64).sqrt();
        assert!((f - g).abs() < 4.0 * sigma + 1e-4, "row {i}: frame {f} direct {g}");
        assert!(f > 0.0, "row {i} never fires");
    }
}
