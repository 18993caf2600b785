use cultivar::circuit::{
    apply_erasure, apply_noise, compile_3q, Basis, Channel, Circuit, CircuitError, Gate,
    Instruction, NoiseModel, NoiseParams,
};
use cultivar::densesim::DenseState;
use cultivar::protocol::{build, parse_preset, preset_ids};
use proptest::prelude::*;

fn line_of(e: &CircuitError) -> Option<usize> {
    match e {
        CircuitError::Parse { line, .. } => Some(*line),
        _ => None,
    }
}

#[test]
fn minimal_instructions_parse() {
    let c = Circuit::parse("CX 0 1").unwrap();
    assert_eq!(
        c.instructions,
        vec![Instruction::Gate { gate: Gate::CX, targets: vec![0, 1] }]
    );
    let c = Circuit::parse("DEP3(0.003) 0 1 2").unwrap();
    assert_eq!(
        c.instructions,
        vec![Instruction::Noise { channel: Channel::Dep3, p: 0.003, targets: vec![0, 1, 2] }]
    );
    assert_eq!(Circuit::new().to_text(), "");
    assert_eq!(Circuit::parse("TICK").unwrap().to_text().trim(), "TICK");
}

#[test]
fn malformed_lines_report_their_line() {
    for (text, line) in [
        ("CX 0", 1),
        ("H 0\nFOO 1", 2),
        ("R 0\nDEP1(1.5) 0", 2),
        ("R 0\nM 0\nDETECTOR rec[-2]", 3),
        ("H 0\n\n# comment\nCCZ 0 1", 4),
    ] {
        let e = Circuit::parse(text).unwrap_err();
        assert_eq!(line_of(&e), Some(line), "{text:?}: {e}");
    }
}

#[test]
fn comments_and_metadata() {
    let c = Circuit::parse("#! preset: x\n# nothing\nH 0 # trailing\n").unwrap();
    assert_eq!(c.meta.get("preset").map(String::as_str), Some("x"));
    assert_eq!(c.count("H"), 1);
}

#[test]
fn counts_follow_noise_rules() {
    let one = |text: &str, model, p| apply_noise(&Circuit::parse(text).unwrap(), model, NoiseParams::new(p)).unwrap();
    let c = one("CX 0 1", NoiseModel::Uniform, 1e-3);
    assert_eq!(c.count("DEP2"), 1);
    assert_eq!(c.instructions.len(), 2);
    let c = one("CCZ 0 1 2", NoiseModel::Uniform, 1e-3);
    assert_eq!(c.count("DEP3"), 1);
    assert_eq!(c.count("DEP2"), 2);
    match &c.instructions[1] {
        Instruction::Noise { channel: Channel::Dep3, p, .. } => assert!((p - 3e-3).abs() < 1e-15),
        other => panic!("{other:?}"),
    }
    // An idle qubit picks up DEP1 under the uniform model only.
    let text = "R 0 1\nTICK\nH 0\nTICK\nH 0\nH 1";
    assert_eq!(one(text, NoiseModel::Uniform, 1e-3).count("DEP1"), 4);
    let atom = one(text, NoiseModel::Atom, 1e-3);
    assert_eq!(atom.count("DEP1"), 3);
    for i in &atom.instructions {
        if let Instruction::Noise { channel: Channel::Dep1, p, .. } = i {
            assert!((p - 1e-4).abs() < 1e-15);
        }
    }
    let g = one("R 0\nM 0", NoiseModel::GateOnly, 1e-3);
    assert!(!g.has_noise());
    assert!(matches!(
        apply_noise(&one("H 0", NoiseModel::Uniform, 1e-3), NoiseModel::Uniform, NoiseParams::new(1e-3)),
        Err(CircuitError::NoiseAlreadyPresent)
    ));
}

#[test]
fn noise_audit_on_every_preset() {
    for id in preset_ids() {
        let pre = parse_preset(id).unwrap();
        let c = build(&pre.config).unwrap();
        let n = apply_noise(&c, NoiseModel::Uniform, NoiseParams::new(1e-3)).unwrap();
        let groups = |arity: usize| -> usize {
            c.instructions
                .iter()
                .map(|i| match i {
                    Instruction::Gate { gate, targets } if gate.arity() == arity => targets.len() / arity,
                    _ => 0,
                })
                .sum()
        };
        let (two, three) = (groups(2), groups(3));
        assert_eq!(n.count("DEP3"), three, "{id}");
        assert_eq!(n.count("DEP2"), two + 2 * three, "{id}");
        let meas = c.count("M") + c.count("MX") + c.count("MR") + c.count("MRX");
        assert_eq!(n.count("MERR"), meas, "{id}");
        assert_eq!(n.count("XERR"), c.count("R") + c.count("MR"), "{id}");
        assert_eq!(n.count("ZERR"), c.count("RX") + c.count("MRX"), "{id}");
        assert_eq!(c.count("DEP2"), 0);
        n.validate().unwrap();
        let e = apply_erasure(&n, 2e-3);
        let er = e.count("ERASE1") + e.count("ERASE2") + e.count("ERASE3");
        let pauli = n.count("DEP1") + n.count("DEP2") + n.count("DEP3") + n.count("XERR") + n.count("ZERR");
        assert_eq!(er, pauli, "{id}");
        assert_eq!(apply_erasure(&n, 0.0), n);
    }
}

#[test]
fn cswap_lowering_counts() {
    let c = Circuit::parse("CSWAP 0 1 2").unwrap();
    let l = compile_3q(&c).unwrap();
    assert_eq!((l.count("CCZ"), l.count("CX"), l.count("H"), l.count("CSWAP")), (1, 2, 2, 0));
    let plain = Circuit::parse("H 0\nTICK\nCX 0 1").unwrap();
    assert_eq!(compile_3q(&plain).unwrap(), plain);
    let ccx = compile_3q(&Circuit::parse("CCX 0 1 2").unwrap()).unwrap();
    assert_eq!((ccx.count("CCZ"), ccx.count("H")), (1, 2));
    let cxx = compile_3q(&Circuit::parse("CXX 0 1 2").unwrap()).unwrap();
    assert_eq!(cxx.count("CX"), 2);
}

fn run_unitary(c: &Circuit, prep: &[(Gate, u32)]) -> DenseState {
    let n = c.num_qubits().max(3);
    let mut st = DenseState::new(n, n);
    let all: Vec<u32> = (0..n as u32).collect();
    st.activate_all(&all).unwrap();
    for &(g, q) in prep {
        st.apply_gate(g, &[q]).unwrap();
    }
    for inst in &c.instructions {
        if let Instruction::Gate { gate, targets } = inst {
            st.apply_gate(*gate, targets).unwrap();
        }
    }
    st
}

#[test]
fn lowered_gates_match_dense() {
    let prep = [
        (Gate::H, 0),
        (Gate::T, 0),
        (Gate::H, 1),
        (Gate::TX, 1),
        (Gate::S, 1),
        (Gate::H, 2),
        (Gate::T, 2),
        (Gate::H, 2),
    ];
    for g in ["CSWAP", "CSWAP_H", "CCX", "CXX", "CXI"] {
        let c = Circuit::parse(&format!("{g} 0 1 2")).unwrap();
        let a = run_unitary(&c, &prep);
        let b = run_unitary(&compile_3q(&c).unwrap(), &prep);
        let overlap: num_complex::Complex64 =
            a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-12, "{g}: {overlap}");
    }
}

#[test]
fn erasure_flags_follow_the_binomial_mean() {
    use cultivar::tableau::FrameProgram;
    let mut text = String::from("R 0 1 2 3\nTICK\n");
    for _ in 0..50 {
        text.push_str("CX 0 1 2 3\nDEP2(1e-9) 0 1 2 3\nTICK\n");
    }
    text.push_str("M 0 1 2 3\n");
    let c = Circuit::parse(&text).unwrap();
    let e = 0.01;
    let c = apply_erasure(&c, e);
    let locations = c.count("ERASE2");
    assert_eq!(locations, 100);
    let prog = FrameProgram::compile(&c).unwrap();
    let shots = 20_000;
    let s = prog.sample(shots, 5);
    let mut total = 0usize;
    for k in 0..shots {
        total += (0..s.erased.len() / s.words).filter(|&j| s.erasure(j, k)).count();
    }
    let mean = total as f64 / shots as f64;
    let expect = locations as f64 * e;
    let sigma = (locations as f64 * e * (1.0 - e) / shots as f64).sqrt();
    assert!((mean - expect).abs() < 4.0 * sigma, "{mean} vs {expect} +- {sigma}");
}

fn arb_instruction(nq: u32) -> impl Strategy<Value = Instruction> {
    let gates: Vec<Gate> = cultivar::circuit::ALL_GATES.to_vec();
    let q = 0..nq;
    prop_oneof![
        (prop::sample::select(gates), Just(())).prop_flat_map(move |(g, _)| {
            prop::sample::subsequence((0..nq).collect::<Vec<_>>(), g.arity())
                .prop_shuffle()
                .prop_map(move |targets| Instruction::Gate { gate: g, targets })
        }),
        (prop::bool::ANY, q.clone()).prop_map(|(x, t)| Instruction::Reset {
            basis: if x { Basis::X } else { Basis::Z },
            targets: vec![t],
        }),
        (prop::bool::ANY, prop::bool::ANY, q.clone()).prop_map(|(x, r, t)| Instruction::Measure {
            basis: if x { Basis::X } else { Basis::Z },
            reset: r,
            targets: vec![t],
        }),
        (0.0f64..0.5, q.clone()).prop_map(|(p, t)| Instruction::Noise {
            channel: Channel::Dep1,
            p,
            targets: vec![t],
        }),
        Just(Instruction::Tick),
    ]
}

proptest! {
    #[test]
    fn text_round_trips(insts in prop::collection::vec(arb_instruction(5), 0..40)) {
        let mut c = Circuit::new();
        for i in insts {
            c.push(i);
        }
        let text = c.to_text();
        let back = Circuit::parse(&text).unwrap();
        prop_assert_eq!(back.to_text(), text);
        prop_assert_eq!(back.instructions, c.instructions);
    }
}
