use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cultivar::circuit::{apply_erasure, apply_noise, NoiseParams};
use cultivar::dem::default_taus;
use cultivar::densesim::{self, DEFAULT_CAP};
use cultivar::geometry::PatchKind;
use cultivar::harness::{
    self, csv_header, ExperimentSpec, HarnessError, Manifest, MemorySpec, ResultRow,
};
use cultivar::protocol::{build, parse_preset, preset_ids};
use cultivar::scan::{self, ScanOptions};

#[derive(Parser)]
#[command(name = "cultivar", version, about = "Magic state cultivation workbench")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a preset over a noise grid and write one CSV row per threshold.
    Run(RunArgs),
    /// Exhaustive fault scan of a preset.
    Scan {
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 1)]
        max_weight: usize,
        /// Noise strength used to place fault locations (values are irrelevant).
        #[arg(long, default_value_t = 1e-3)]
        p: f64,
        /// Maximum number of fault combinations (or dense branches).
        #[arg(long)]
        budget: Option<u128>,
    },
    /// Weight-1 scan of GHZ preparation and measurement on n ancillas.
    Ghz {
        #[arg(long, default_value_t = 5)]
        n: usize,
    },
    /// Print a preset circuit in text form.
    DumpCircuit {
        #[arg(long)]
        preset: String,
        /// Insert the preset's noise model at this strength.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        e: f64,
    },
    /// Frontiers over a grid of expanded distances and rounds.
    Sweep {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        p: f64,
        #[arg(long, value_delimiter = ',', default_value = "7,9")]
        d2: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "4,5,6,7")]
        rounds: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gap-post-selected memory: Pauli noise alone against Pauli plus erasure.
    Memory {
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long, default_value = "rot")]
        patch: String,
        #[arg(long, default_value_t = 5e-3)]
        p: f64,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List the registered preset ids.
    Presets,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, required_unless_present = "manifest")]
    preset: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "1e-3")]
    p: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    e: Vec<f64>,
    /// Three-qubit gate noise; defaults to 3p.
    #[arg(long, value_delimiter = ',')]
    p3q: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    #[arg(long)]
    target_errors: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    tau: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1 << 14)]
    batch: usize,
    /// CSV output; stdout when absent. A manifest is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rerun the experiment recorded in a manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

enum Failure {
    /// Findings or a violated property: exit 1.
    Findings,
    Error(String),
    Invariant(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Invariant(m) => Failure::Invariant(m),
            e => Failure::Error(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Error(e.to_string())
    }
}

fn err(e: impl ToString) -> Failure {
    Failure::Error(e.to_string())
}

fn spec_of(a: &RunArgs) -> Result<ExperimentSpec, Failure> {
    if let Some(path) = &a.manifest {
        let text = std::fs::read_to_string(path)?;
        return Ok(Manifest::from_json(&text)?.spec);
    }
    let preset = a.preset.clone().expect("clap enforces --preset");
    let mut spec = ExperimentSpec::new(&preset, &a.p, a.shots);
    spec.e = a.e.clone();
    if !a.p3q.is_empty() {
        spec.p3q = a.p3q.iter().map(|&q| Some(q)).collect();
    }
    spec.target_errors = a.target_errors;
    spec.taus = if a.tau.is_empty() { default_taus() } else { a.tau.clone() };
    spec.seed = a.seed;
    spec.batch = a.batch;
    Ok(spec)
}

fn write_rows(w: &mut dyn Write, rows: &[ResultRow]) -> io::Result<()> {
    for r in rows {
        writeln!(w, "{}", r.to_csv())?;
    }
    w.flush()
}

fn run(a: RunArgs) -> Result<(), Failure> {
    let spec = spec_of(&a)?;
    let mut out: Box<dyn Write> = match &a.out {
        Some(path) => {
            let mut m = path.clone().into_os_string();
            m.push(".manifest.json");
            std::fs::write(&m, Manifest::new(&spec).to_json())?;
            Box::new(BufWriter::new(File::create(path)?))
        }
        None => Box::new(io::stdout().lock()),
    };
    writeln!(out, "{}", csv_header())?;
    let mut io_err = None;
    harness::run_streaming(&spec, |rows| {
        if io_err.is_none() {
            io_err = write_rows(&mut out, rows).err();
        }
    })?;
    match io_err {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn scan_preset(preset: &str, max_weight: usize, p: f64, budget: Option<u128>) -> Result<(), Failure> {
    let pre = parse_preset(preset).map_err(err)?;
    let c = build(&pre.config).map_err(err)?;
    let c = apply_noise(&c, pre.noise, NoiseParams::new(p)).map_err(err)?;
    if c.is_clifford() {
        let mut opts = ScanOptions::new(max_weight);
        if let Some(b) = budget {
            opts.budget = b;
        }
        let r = scan::fault_scan_with(&c, &opts).map_err(err)?;
        print!("{}", r.to_text());
        return if r.is_clean() { Ok(()) } else { Err(Failure::Findings) };
    }
    if max_weight != 1 {
        return Err(err("dense (non-Clifford) scans support weight 1 only"));
    }
    let budget = budget.map_or(1 << 20, |b| b.min(usize::MAX as u128) as usize);
    let found = densesim::fault_scan(&c, DEFAULT_CAP, budget).map_err(err)?;
    println!(
        "dense weight-1 scan: {} fault locations, {} undetected logical",
        densesim::single_faults(&c).len(),
        found.len()
    );
    for (f, b) in &found {
        println!(
            "inst {} group {} pattern {} accept {:.3e} infidelity {:.3e}",
            f.inst, f.group, f.pattern, b.accept, b.infidelity
        );
    }
    if found.is_empty() {
        Ok(())
    } else {
        Err(Failure::Findings)
    }
}

fn ghz(n: usize) -> Result<(), Failure> {
    let r = scan::ghz_one_flag(n).map_err(err)?;
    println!(
        "ghz n={}: {} faults, {} detected, {} benign, {} readout flips, {} bad",
        r.ancillas,
        r.faults,
        r.detected,
        r.benign,
        r.readout_flips,
        r.bad.len()
    );
    for b in &r.bad {
        println!("  {b}");
    }
    if r.one_flag() {
        Ok(())
    } else {
        Err(Failure::Findings)
    }
}

fn dump(preset: &str, p: Option<f64>, e: f64) -> Result<(), Failure> {
    let pre = parse_preset(preset).map_err(err)?;
    let mut c = build(&pre.config).map_err(err)?;
    if let Some(p) = p {
        c = apply_erasure(&apply_noise(&c, pre.noise, NoiseParams::new(p)).map_err(err)?, e);
    }
    print!("{}", c.to_text());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    preset: &str,
    p: f64,
    d2: &[usize],
    rounds: &[usize],
    shots: u64,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut spec = ExperimentSpec::new(preset, &[p], shots);
    spec.seed = seed;
    let r = harness::sweep_d2_rounds(&spec, d2, rounds)?;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    let csv = harness::rows_to_csv(&r.rows);
    match out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    eprintln!(
        "max pairwise deviation: {:.2} sigma (quadrature), bands overlap at {:.2} sigma",
        r.max_deviation_sigma, r.max_band_separation
    );
    Ok(())
}

fn memory(d: usize, rounds: Option<usize>, patch: &str, p: f64, shots: u64, seed: u64) -> Result<(), Failure> {
    let kind = match patch {
        "rot" => PatchKind::Rotated,
        "unrot" => PatchKind::Unrotated,
        other => return Err(err(format!("unknown patch kind {other:?}"))),
    };
    let ms = MemorySpec {
        kind,
        d,
        rounds: rounds.unwrap_or(d),
        p,
        shots,
        seed,
        taus: default_taus(),
    };
    let r = harness::memory_experiment(&ms)?;
    println!("config,tau,rate,infidelity,sigma,kept,errors");
    for (name, pts) in [("pauli", &r.pauli_only), ("mixed", &r.mixed)] {
        for f in pts {
            let na = |x: Option<f64>| x.map_or("NA".to_string(), |v| format!("{v:e}"));
            println!(
                "{name},{},{:e},{},{},{},{}",
                f.tau,
                f.rate,
                na(f.infidelity),
                na(f.sigma),
                f.kept,
                f.errors
            );
        }
    }
    eprintln!("mixed keeps more at matched infidelity: {}", r.mixed_keeps_more_at_matched_if());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    harness::init_threads();
    let res = match cli.cmd {
        Cmd::Run(a) => run(a),
        Cmd::Scan {
            preset,
            max_weight,
            p,
            budget,
        } => scan_preset(&preset, max_weight, p, budget),
        Cmd::Ghz { n } => ghz(n),
        Cmd::DumpCircuit { preset, p, e } => dump(&preset, p, e),
        Cmd::Sweep {
            preset,
            p,
            d2,
            rounds,
            shots,
            seed,
            out,
        } => sweep(&preset, p, &d2, &rounds, shots, seed, out),
        Cmd::Memory {
            d,
            rounds,
            patch,
            p,
            shots,
            seed,
        } => memory(d, rounds, &patch, p, shots, seed),
        Cmd::Presets => {
            preset_ids().iter().for_each(|id| println!("{id}"));
            Ok(())
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Findings) => ExitCode::from(1),
        Err(Failure::Error(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Invariant(m)) => {
            eprintln!("invariant violated: {m}");
            ExitCode::from(3)
        }
    }
}
