use cultivar::circuit::{Circuit, DetectorKind};
use cultivar::protocol::{build, parse_preset, preset_ids};
use cultivar::tableau::{simulate_reference, FrameProgram};

#[test]
fn presets_build_and_round_trip() {
    for id in preset_ids() {
        let p = parse_preset(id).unwrap();
        assert_eq!(p.id(), id);
        let c = build(&p.config).unwrap();
        c.validate().unwrap();
        c.validate_time_slices().unwrap_or_else(|e| panic!("{id}: {e}"));
        let back = Circuit::parse(&c.to_text()).unwrap();
        assert_eq!(back, c, "{id}");
    }
}

#[test]
fn noiseless_proxies_are_deterministic() {
    for id in preset_ids() {
        let p = parse_preset(id).unwrap();
        if !p.config.proxy {
            continue;
        }
        let c = build(&p.config).unwrap();
        let prog = FrameProgram::compile(&c).unwrap();
        let s = prog.sample(256, 7);
        let heralded = |k: usize| {
            (0..prog.num_detectors())
                .any(|d| s.detector_kinds[d] == DetectorKind::Herald && s.detector(d, k))
        };
        for d in 0..prog.num_detectors() {
            let fired = (0..256).filter(|&k| s.detector(d, k) && !heralded(k)).count();
            assert_eq!(fired, 0, "{id}: detector {d} fired {fired}/256");
        }
        let coins = (0..256).filter(|&k| heralded(k)).count();
        if p.config.variant == cultivar::protocol::Variant::CX {
            assert!((30..100).contains(&coins), "{id}: {coins}");
        } else {
            assert_eq!(coins, 0);
        }
        for k in 0..256 {
            for o in 0..prog.num_observables() {
                assert!(heralded(k) || !s.observable(o, k), "{id}: observable flipped");
            }
        }
    }
}

/// Detector and observable parities of the reference run are 0, including
/// runs where random outcomes (and hence sign-fix feedback) are drawn at
/// random.
#[test]
fn reference_parities_vanish() {
    use rand::SeedableRng;
    for id in preset_ids() {
        let p = parse_preset(id).unwrap();
        if !p.config.proxy {
            continue;
        }
        let c = build(&p.config).unwrap();
        let prog = FrameProgram::compile(&c).unwrap();
        for seed in 0..4 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (rec, _) = simulate_reference(&c, Some(&mut rng)).unwrap();
            let parity = |recs: &[u32]| recs.iter().fold(false, |a, &r| a ^ rec[r as usize]);
            for (d, recs) in prog.detectors.iter().enumerate() {
                if prog.detector_kinds[d] != DetectorKind::Herald {
                    assert!(!parity(recs), "{id} seed {seed}: detector {d}");
                }
            }
            if p.config.variant != cultivar::protocol::Variant::CX {
                assert!(!parity(&prog.observables[0]), "{id} seed {seed}: observable");
            }
        }
    }
}
