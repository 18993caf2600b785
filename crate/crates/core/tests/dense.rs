use cultivar::densesim::{run_dense, run_trajectory, LogicalSpec, DEFAULT_CAP};
use cultivar::protocol::{build, parse_preset, preset_ids, Variant};

#[test]
fn noiseless_dense_presets_reach_the_target() {
    for id in preset_ids() {
        let p = parse_preset(id).unwrap();
        if p.config.proxy {
            continue;
        }
        let c = build(&p.config).unwrap();
        let spec = LogicalSpec::from_circuit(&c).unwrap();
        let mut kept = 0;
        for seed in 0..8 {
            let (t, _) = run_trajectory(&c, Some(&spec), seed, DEFAULT_CAP).unwrap();
            if p.config.variant != Variant::CX {
                assert!(t.kept, "{id}: seed {seed} discarded by {:?}", t.discarded_by);
            }
            if let Some(f) = t.fidelity {
                kept += 1;
                assert!((f - 1.0).abs() < 1e-9, "{id}: seed {seed} fidelity {f}");
            }
        }
        assert!(kept > 0, "{id}");
        eprintln!("{id}: ok, {kept}/8 kept");
    }
}

#[test]
fn dense_cx_herald_accepts_three_quarters() {
    let c = build(&parse_preset("cx-unrot-d2-dense").unwrap().config).unwrap();
    let r = run_dense(&c, 400, 3, DEFAULT_CAP).unwrap();
    let a = r.acceptance();
    assert!((a - 0.75).abs() < 0.08, "acceptance {a}");
}

#[test]
fn flipped_input_is_always_rejected() {
    for id in ["h-unrot-d2-dense-flip", "hxy-unrot-d3-dense-flip"] {
        let c = build(&parse_preset(id).unwrap().config).unwrap();
        let r = run_dense(&c, 6, 11, DEFAULT_CAP).unwrap();
        assert_eq!(r.kept, 0, "{id}");
    }
}

mod oracle {
    use cultivar::circuit::{Circuit, Coord, Gate, Pauli};
    use cultivar::densesim::{eigencheck, run_trajectory, DenseState, DEFAULT_CAP};
    use cultivar::geometry::{build_patch, PatchKind};
    use cultivar::protocol::{build, parse_preset, Variant};
    use num_complex::Complex64 as C;

    fn coord_text(s: (i64, i64), q: usize) -> String {
        format!("QUBIT_COORDS({}, {}) {q}\n", s.0, s.1)
    }

    /// Transversal logical operator of the unrotated d=3 code, built from
    /// its fold structure.
    fn transversal(v: Variant) -> Circuit {
        let fold = build_patch(PatchKind::Unrotated, 3).unwrap().fold();
        let mut text = String::new();
        let mut gates = String::new();
        let mut q = 0;
        for (i, &a) in fold.diagonal.iter().enumerate() {
            text += &coord_text(a, q);
            let g = match (v, i % 2) {
                (Variant::H, _) => "H",
                (_, 0) => "H_XY",
                _ => "H_NXY",
            };
            gates += &format!("{g} {q}\n");
            q += 1;
        }
        for &(b, c) in &fold.pairs {
            text += &coord_text(b, q);
            text += &coord_text(c, q + 1);
            gates += &match v {
                Variant::H => format!("H {q} {}\nSWAP {q} {}\n", q + 1, q + 1),
                _ => format!("CZ {q} {}\n", q + 1),
            };
            q += 2;
        }
        Circuit::parse(&(text + &gates)).unwrap()
    }

    fn encoded(id: &str) -> (Circuit, DenseState) {
        let c = build(&parse_preset(id).unwrap().config).unwrap();
        let (t, st) = run_trajectory(&c, None, 1, DEFAULT_CAP).unwrap();
        assert!(t.kept);
        (c, st)
    }

    #[test]
    fn physical_t_is_an_h_xy_eigenstate() {
        let mut st = DenseState::new(1, 1);
        st.activate_all(&[0]).unwrap();
        st.apply_gate(Gate::H, &[0]).unwrap();
        st.apply_gate(Gate::T, &[0]).unwrap();
        let op = Circuit::parse("QUBIT_COORDS(0, 0) 0\nH_XY 0").unwrap();
        let e = eigencheck(&op, &st, &[Some(Coord::new(0, 0))]).unwrap();
        assert!((e - C::new(1.0, 0.0)).norm() < 1e-12, "{e}");
        assert!(eigencheck(&Circuit::parse("QUBIT_COORDS(0, 0) 0\nM 0").unwrap(), &st, &[Some(Coord::new(0, 0))]).is_err());
    }

    #[test]
    fn encoded_magic_states_are_logical_eigenstates() {
        for (id, v) in [("hxy-unrot-d3-dense", Variant::HXY), ("h-unrot-d3-dense", Variant::H)] {
            let (c, st) = encoded(id);
            let op = transversal(v);
            let e = eigencheck(&op, &st, &c.coords).unwrap();
            assert!((e - C::new(1.0, 0.0)).norm() < 1e-10, "{id}: {e}");
            // The orthogonal eigenstate: a logical Pauli anticommuting with
            // the operator (Z for H_XY, Y for H).
            let mut bar = st.clone();
            let zl = c.meta_qubits("logical_z").unwrap();
            let xl = c.meta_qubits("logical_x").unwrap();
            for &q in &zl {
                bar.apply_pauli(q, Pauli::Z).unwrap();
            }
            if v == Variant::H {
                for &q in &xl {
                    bar.apply_pauli(q, Pauli::X).unwrap();
                }
            }
            let e = eigencheck(&op, &bar, &c.coords).unwrap();
            assert!((e + C::new(1.0, 0.0)).norm() < 1e-10, "{id} orthogonal: {e}");
        }
    }

    #[test]
    fn trajectories_stay_normalized() {
        use cultivar::circuit::{apply_noise, NoiseModel, NoiseParams};
        let c = build(&parse_preset("hxy-unrot-d3-dense").unwrap().config).unwrap();
        let c = apply_noise(&c, NoiseModel::Uniform, NoiseParams::new(0.02)).unwrap();
        for seed in 0..6 {
            let (_, st) = run_trajectory(&c, None, seed, DEFAULT_CAP).unwrap();
            assert!((st.norm_sqr() - 1.0).abs() < 1e-10, "seed {seed}: {}", st.norm_sqr());
        }
    }

    /// The dense engine runs the Clifford proxies too and, without noise,
    /// keeps every shot exactly as the frame sampler does.
    #[test]
    fn dense_runs_noiseless_proxies() {
        for id in ["h-unrot-d2", "hxy-unrot-d3", "h-unrot-d3", "hxy-rot-d3"] {
            let c = build(&parse_preset(id).unwrap().config).unwrap();
            for seed in 0..3 {
                let (t, st) = run_trajectory(&c, None, seed, DEFAULT_CAP).unwrap();
                assert!(t.kept, "{id} seed {seed}: {:?}", t.discarded_by);
                assert!((st.norm_sqr() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let c = build(&parse_preset("hxy-unrot-d3-dense").unwrap().config).unwrap();
        assert!(run_trajectory(&c, None, 0, 6).is_err());
    }
}
