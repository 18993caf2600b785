//! Line-oriented text format.
//!
//! ```text
//! #! preset: hxy-rot-d3          metadata
//! QUBIT_COORDS(1, 1) 0
//! RX 0 1                         resets: R RX
//! TICK
//! CX 0 1                         gates, controls first
//! DEP2(0.001) 0 1                noise: DEP1..3 XERR ZERR MERR ERASE1..3
//! M 1                            measures: M MX MR MRX
//! MPP X0*X1 Z2*Z3                ideal Pauli-product measurements
//! E(0.25) Z0 Z1                  correlated Pauli product
//! CX rec[-1] 4                   feedback Pauli (CX/CY/CZ with a record control)
//! DETECTOR(1, 2, 0) rec[-1]      also DETECTOR_PS, DETECTOR_HERALD
//! OBSERVABLE_INCLUDE(0) rec[-2]
//! ```
//!
//! Lines starting with `#` (other than `#!`) and trailing `# ...` are comments.

use num_rational::Rational64;

use super::*;

pub(crate) fn reset_name(b: Basis) -> &'static str {
    match b {
        Basis::Z => "R",
        Basis::X => "RX",
    }
}

pub(crate) fn measure_name(b: Basis, reset: bool) -> &'static str {
    match (b, reset) {
        (Basis::Z, false) => "M",
        (Basis::X, false) => "MX",
        (Basis::Z, true) => "MR",
        (Basis::X, true) => "MRX",
    }
}

pub(crate) fn feedback_name(p: Pauli) -> &'static str {
    match p {
        Pauli::X => "CX",
        Pauli::Y => "CY",
        Pauli::Z => "CZ",
        Pauli::I => "CI",
    }
}

fn fmt_f64_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn fmt_recs(v: &[u32]) -> String {
    v.iter()
        .map(|r| format!(" rec[-{r}]"))
        .collect::<String>()
}

fn fmt_targets(v: &[u32]) -> String {
    v.iter().map(|q| format!(" {q}")).collect()
}

fn fmt_paulis(v: &[PauliTerm]) -> String {
    v.iter()
        .map(|(p, q)| format!("{}{}", p.letter(), q))
        .collect::<Vec<_>>()
        .join("*")
}

pub fn serialize(c: &Circuit) -> String {
    let mut out = String::new();
    for (k, v) in &c.meta {
        out.push_str(&format!("#! {k}: {v}\n"));
    }
    for (q, coord) in c.coords.iter().enumerate() {
        if let Some(coord) = coord {
            out.push_str(&format!("QUBIT_COORDS({coord}) {q}\n"));
        }
    }
    for inst in &c.instructions {
        out.push_str(&format_instruction(inst));
        out.push('\n');
    }
    out
}

pub fn format_instruction(inst: &Instruction) -> String {
    match inst {
        Instruction::Gate { gate, targets } => format!("{}{}", gate.name(), fmt_targets(targets)),
        Instruction::Reset { basis, targets } => {
            format!("{}{}", reset_name(*basis), fmt_targets(targets))
        }
        Instruction::Measure {
            basis,
            reset,
            targets,
        } => format!("{}{}", measure_name(*basis, *reset), fmt_targets(targets)),
        Instruction::Mpp { products } => {
            let mut s = String::from("MPP");
            for p in products {
                s.push(' ');
                s.push_str(&fmt_paulis(p));
            }
            s
        }
        Instruction::Noise {
            channel,
            p,
            targets,
        } => format!("{}({}){}", channel.name(), p, fmt_targets(targets)),
        Instruction::Correlated { p, paulis } => {
            let terms: Vec<String> = paulis
                .iter()
                .map(|(pa, q)| format!(" {}{}", pa.letter(), q))
                .collect();
            format!("E({}){}", p, terms.concat())
        }
        Instruction::Feedback { pauli, pairs } => {
            let mut s = feedback_name(*pauli).to_string();
            for (r, q) in pairs {
                s.push_str(&format!(" rec[-{r}] {q}"));
            }
            s
        }
        Instruction::Detector {
            kind,
            coords,
            records,
        } => format!("{}({}){}", kind.name(), fmt_f64_list(coords), fmt_recs(records)),
        Instruction::Observable { index, records } => {
            format!("OBSERVABLE_INCLUDE({}){}", index, fmt_recs(records))
        }
        Instruction::Tick => "TICK".to_string(),
    }
}

fn err(line: usize, msg: impl Into<String>) -> CircuitError {
    CircuitError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_rational(s: &str) -> Option<Rational64> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Rational64::new(n, d));
    }
    if let Ok(n) = s.parse::<i64>() {
        return Some(Rational64::from_integer(n));
    }
    // Finite decimal such as "-0.5".
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.')?;
    if frac.len() > 15 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let int: i64 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let den = 10i64.pow(frac.len() as u32);
    let num = int * den + if frac.is_empty() { 0 } else { frac.parse::<i64>().ok()? };
    Some(Rational64::new(if neg { -num } else { num }, den))
}

fn parse_qubit(line: usize, s: &str) -> Result<u32, CircuitError> {
    s.parse::<u32>()
        .map_err(|_| err(line, format!("bad qubit target '{s}'")))
}

fn parse_rec(line: usize, s: &str) -> Result<u32, CircuitError> {
    let inner = s
        .strip_prefix("rec[-")
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| err(line, format!("bad record target '{s}'")))?;
    let k: u32 = inner
        .parse()
        .map_err(|_| err(line, format!("bad record target '{s}'")))?;
    if k == 0 {
        return Err(err(line, "record lookback must be at least 1"));
    }
    Ok(k)
}

fn parse_pauli_term(line: usize, s: &str) -> Result<PauliTerm, CircuitError> {
    let mut chars = s.chars();
    let p = match chars.next() {
        Some('X') => Pauli::X,
        Some('Y') => Pauli::Y,
        Some('Z') => Pauli::Z,
        _ => return Err(err(line, format!("bad Pauli target '{s}'"))),
    };
    Ok((p, parse_qubit(line, chars.as_str())?))
}

fn parse_f64(line: usize, s: &str) -> Result<f64, CircuitError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| err(line, format!("bad number '{s}'")))
}

/// Splits `NAME(args) rest` into (name, Some(args), rest).
fn split_head(line: usize, s: &str) -> Result<(&str, Option<&str>, &str), CircuitError> {
    let name_end = s
        .find(|c: char| c == '(' || c.is_whitespace())
        .unwrap_or(s.len());
    let name = &s[..name_end];
    let rest = &s[name_end..];
    if let Some(r) = rest.strip_prefix('(') {
        let close = r
            .find(')')
            .ok_or_else(|| err(line, "unclosed parenthesis"))?;
        Ok((name, Some(&r[..close]), &r[close + 1..]))
    } else {
        Ok((name, None, rest))
    }
}

pub fn parse(text: &str) -> Result<Circuit, CircuitError> {
    let mut c = Circuit::new();
    let mut chk = Checker::default();
    let mut coords: Vec<(u32, Coord)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if let Some(m) = trimmed.strip_prefix("#!") {
            let (k, v) = m
                .split_once(':')
                .ok_or_else(|| err(line, "metadata needs 'key: value'"))?;
            c.meta.insert(k.trim().to_string(), v.trim().to_string());
            continue;
        }
        let body = match trimmed.find('#') {
            Some(pos) => trimmed[..pos].trim(),
            None => trimmed,
        };
        if body.is_empty() {
            continue;
        }
        let (name, args, rest) = split_head(line, body)?;
        let toks: Vec<&str> = rest.split_whitespace().collect();
        let no_args = |args: Option<&str>| -> Result<(), CircuitError> {
            if args.is_some() {
                Err(err(line, format!("{name} takes no parenthesized arguments")))
            } else {
                Ok(())
            }
        };
        let qubits = |toks: &[&str]| -> Result<Vec<u32>, CircuitError> {
            toks.iter().map(|t| parse_qubit(line, t)).collect()
        };
        let inst = match name {
            "QUBIT_COORDS" => {
                let a = args.ok_or_else(|| err(line, "QUBIT_COORDS needs coordinates"))?;
                let parts: Vec<&str> = a.split(',').collect();
                if parts.len() != 2 {
                    return Err(err(line, "QUBIT_COORDS needs exactly two coordinates"));
                }
                let x = parse_rational(parts[0])
                    .ok_or_else(|| err(line, format!("bad coordinate '{}'", parts[0])))?;
                let y = parse_rational(parts[1])
                    .ok_or_else(|| err(line, format!("bad coordinate '{}'", parts[1])))?;
                if toks.len() != 1 {
                    return Err(err(line, "QUBIT_COORDS takes one qubit"));
                }
                coords.push((parse_qubit(line, toks[0])?, Coord::from_ratios(x, y)));
                continue;
            }
            "TICK" => {
                no_args(args)?;
                if !toks.is_empty() {
                    return Err(err(line, "TICK takes no targets"));
                }
                Instruction::Tick
            }
            "R" | "RX" => {
                no_args(args)?;
                Instruction::Reset {
                    basis: if name == "R" { Basis::Z } else { Basis::X },
                    targets: qubits(&toks)?,
                }
            }
            "M" | "MX" | "MR" | "MRX" => {
                no_args(args)?;
                Instruction::Measure {
                    basis: if name.contains('X') { Basis::X } else { Basis::Z },
                    reset: name.starts_with("MR"),
                    targets: qubits(&toks)?,
                }
            }
            "MPP" => {
                no_args(args)?;
                let products = toks
                    .iter()
                    .map(|t| t.split('*').map(|f| parse_pauli_term(line, f)).collect())
                    .collect::<Result<Vec<Vec<PauliTerm>>, _>>()?;
                Instruction::Mpp { products }
            }
            "E" => {
                let p = parse_f64(line, args.ok_or_else(|| err(line, "E needs (p)"))?)?;
                let paulis = toks
                    .iter()
                    .map(|t| parse_pauli_term(line, t))
                    .collect::<Result<Vec<_>, _>>()?;
                Instruction::Correlated { p, paulis }
            }
            "OBSERVABLE_INCLUDE" => {
                let a = args.ok_or_else(|| err(line, "OBSERVABLE_INCLUDE needs (index)"))?;
                let index: u32 = a
                    .trim()
                    .parse()
                    .map_err(|_| err(line, "bad observable index"))?;
                let records = toks
                    .iter()
                    .map(|t| parse_rec(line, t))
                    .collect::<Result<_, _>>()?;
                Instruction::Observable { index, records }
            }
            "DETECTOR" | "DETECTOR_PS" | "DETECTOR_HERALD" => {
                let kind = match name {
                    "DETECTOR" => DetectorKind::Soft,
                    "DETECTOR_PS" => DetectorKind::PostSelect,
                    _ => DetectorKind::Herald,
                };
                let coords = match args {
                    Some(a) if !a.trim().is_empty() => a
                        .split(',')
                        .map(|s| parse_f64(line, s))
                        .collect::<Result<_, _>>()?,
                    _ => Vec::new(),
                };
                let records = toks
                    .iter()
                    .map(|t| parse_rec(line, t))
                    .collect::<Result<_, _>>()?;
                Instruction::Detector {
                    kind,
                    coords,
                    records,
                }
            }
            _ if matches!(name, "CX" | "CY" | "CZ")
                && toks.first().is_some_and(|t| t.starts_with("rec[")) =>
            {
                no_args(args)?;
                if toks.len() % 2 != 0 {
                    return Err(err(line, "feedback needs (record, qubit) pairs"));
                }
                let pauli = match name {
                    "CX" => Pauli::X,
                    "CY" => Pauli::Y,
                    _ => Pauli::Z,
                };
                let pairs = toks
                    .chunks(2)
                    .map(|p| Ok((parse_rec(line, p[0])?, parse_qubit(line, p[1])?)))
                    .collect::<Result<_, CircuitError>>()?;
                Instruction::Feedback { pauli, pairs }
            }
            _ => {
                if let Some(gate) = Gate::from_name(name) {
                    no_args(args)?;
                    Instruction::Gate {
                        gate,
                        targets: qubits(&toks)?,
                    }
                } else if let Some(channel) = Channel::from_name(name) {
                    let p = parse_f64(
                        line,
                        args.ok_or_else(|| err(line, format!("{name} needs (p)")))?,
                    )?;
                    Instruction::Noise {
                        channel,
                        p,
                        targets: qubits(&toks)?,
                    }
                } else {
                    return Err(err(line, format!("unknown instruction '{name}'")));
                }
            }
        };
        chk.check(&inst).map_err(|e| err(line, e.to_string()))?;
        c.push(inst);
    }
    for (q, coord) in coords {
        if c.coords.len() <= q as usize {
            c.coords.resize(q as usize + 1, None);
        }
        c.coords[q as usize] = Some(coord);
    }
    c.validate()?;
    Ok(c)
}
