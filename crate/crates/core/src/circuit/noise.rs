//! Noise insertion passes.

use std::collections::HashMap;

use super::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    /// Depolarizing noise after every gate, reset and measurement, idle noise
    /// on waiting qubits, flipped measurement results.
    Uniform,
    /// Like `Uniform` but without idle noise and with single-qubit gate noise
    /// reduced tenfold.
    Atom,
    /// Depolarizing noise after gates only.
    GateOnly,
}

impl NoiseModel {
    pub fn name(self) -> &'static str {
        match self {
            NoiseModel::Uniform => "uniform",
            NoiseModel::Atom => "atom",
            NoiseModel::GateOnly => "gateonly",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "uniform" => Some(NoiseModel::Uniform),
            "atom" => Some(NoiseModel::Atom),
            "gateonly" => Some(NoiseModel::GateOnly),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseParams {
    pub p: f64,
    /// Strength of the three-qubit depolarizing channel after native
    /// three-qubit gates; defaults to `3p`.
    pub p3q: Option<f64>,
}

impl NoiseParams {
    pub fn new(p: f64) -> Self {
        NoiseParams { p, p3q: None }
    }

    pub fn with_p3q(p: f64, p3q: f64) -> Self {
        NoiseParams { p, p3q: Some(p3q) }
    }
}

fn noise(channel: Channel, p: f64, targets: Vec<u32>) -> Option<Instruction> {
    if p <= 0.0 || targets.is_empty() {
        None
    } else {
        Some(Instruction::Noise {
            channel,
            p,
            targets,
        })
    }
}

fn op_noise(model: NoiseModel, np: NoiseParams, inst: &Instruction) -> Vec<Instruction> {
    let p = np.p;
    let mut out = Vec::new();
    match inst {
        Instruction::Gate { gate, targets } => match gate.arity() {
            1 => {
                let p1 = if model == NoiseModel::Atom { p / 10.0 } else { p };
                out.extend(noise(Channel::Dep1, p1, targets.clone()));
            }
            2 => out.extend(noise(Channel::Dep2, p, targets.clone())),
            _ => {
                out.extend(noise(Channel::Dep3, np.p3q.unwrap_or(3.0 * p).min(63.0 / 64.0), targets.clone()));
                let pairs: Vec<u32> = targets
                    .chunks(3)
                    .flat_map(|g| [g[0], g[1], g[0], g[2]])
                    .collect();
                out.extend(noise(Channel::Dep2, p, pairs));
            }
        },
        Instruction::Reset { basis, targets } if model != NoiseModel::GateOnly => {
            let ch = match basis {
                Basis::Z => Channel::XErr,
                Basis::X => Channel::ZErr,
            };
            out.extend(noise(ch, p, targets.clone()));
        }
        Instruction::Measure {
            basis,
            reset,
            targets,
        } if model != NoiseModel::GateOnly => {
            out.extend(noise(Channel::MErr, p, targets.clone()));
            let after = match (reset, basis) {
                (false, _) => Channel::Dep1,
                (true, Basis::Z) => Channel::XErr,
                (true, Basis::X) => Channel::ZErr,
            };
            out.extend(noise(after, p, targets.clone()));
        }
        _ => {}
    }
    out
}

/// Inserts noise according to `model`. Fails if the circuit already carries
/// noise channels (deterministic `E(1)` flips and `E` coins are allowed).
pub fn apply_noise(
    c: &Circuit,
    model: NoiseModel,
    np: NoiseParams,
) -> Result<Circuit, CircuitError> {
    if c
        .instructions
        .iter()
        .any(|i| matches!(i, Instruction::Noise { .. }))
    {
        return Err(CircuitError::NoiseAlreadyPresent);
    }
    // Split into tick slices and record which slices touch each qubit.
    let mut slices: Vec<Vec<&Instruction>> = vec![Vec::new()];
    for inst in &c.instructions {
        if matches!(inst, Instruction::Tick) {
            slices.push(Vec::new());
        } else {
            slices.last_mut().unwrap().push(inst);
        }
    }
    let nq = c.num_qubits();
    // Per qubit: ordered list of (slice, is_plain_reset).
    let mut events: Vec<Vec<(usize, bool)>> = vec![Vec::new(); nq];
    let mut slice_has_ops = vec![false; slices.len()];
    let mut slice_ideal = vec![false; slices.len()];
    for (s, insts) in slices.iter().enumerate() {
        for inst in insts {
            let is_reset = matches!(inst, Instruction::Reset { .. });
            if matches!(inst, Instruction::Mpp { .. }) {
                slice_ideal[s] = true;
            }
            for q in inst.op_qubits() {
                slice_has_ops[s] = true;
                let ev = &mut events[q as usize];
                if ev.last().map(|e| e.0) != Some(s) {
                    ev.push((s, is_reset));
                }
            }
        }
    }
    let mut idle: HashMap<usize, Vec<u32>> = HashMap::new();
    if model == NoiseModel::Uniform {
        for (q, ev) in events.iter().enumerate() {
            for w in ev.windows(2) {
                let (a, (b, next_is_reset)) = (w[0].0, w[1]);
                if next_is_reset {
                    continue;
                }
                for s in a + 1..b {
                    if slice_has_ops[s] && !slice_ideal[s] {
                        idle.entry(s).or_default().push(q as u32);
                    }
                }
            }
        }
    }
    let mut out = Circuit {
        coords: c.coords.clone(),
        meta: c.meta.clone(),
        instructions: Vec::with_capacity(c.instructions.len() * 2),
    };
    for (s, insts) in slices.iter().enumerate() {
        if s > 0 {
            out.instructions.push(Instruction::Tick);
        }
        for inst in insts {
            out.instructions.push((*inst).clone());
            out.instructions.extend(op_noise(model, np, inst));
        }
        if let Some(mut qs) = idle.remove(&s) {
            qs.sort_unstable();
            out.instructions.extend(noise(Channel::Dep1, np.p, qs));
        }
    }
    Ok(out)
}

/// Adds a heralded erasure channel of strength `e` after every Pauli noise
/// channel acting on qubits (measurement flips excepted).
pub fn apply_erasure(c: &Circuit, e: f64) -> Circuit {
    if e <= 0.0 {
        return c.clone();
    }
    let mut out = Circuit {
        coords: c.coords.clone(),
        meta: c.meta.clone(),
        instructions: Vec::with_capacity(c.instructions.len() * 2),
    };
    for inst in &c.instructions {
        out.instructions.push(inst.clone());
        if let Instruction::Noise {
            channel, targets, ..
        } = inst
        {
            let ch = match channel {
                Channel::Dep1 | Channel::XErr | Channel::ZErr => Some(Channel::Erase1),
                Channel::Dep2 => Some(Channel::Erase2),
                Channel::Dep3 => Some(Channel::Erase3),
                _ => None,
            };
            if let Some(ch) = ch {
                out.instructions.push(Instruction::Noise {
                    channel: ch,
                    p: e,
                    targets: targets.clone(),
                });
            }
        }
    }
    out
}
