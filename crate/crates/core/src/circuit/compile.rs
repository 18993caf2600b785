//! Lowering of three-qubit gates to CCZ plus one- and two-qubit gates.

use super::*;

fn lower(gate: Gate, g: &[u32]) -> Option<Vec<Vec<(Gate, Vec<u32>)>>> {
    let (c, a, b) = (g[0], g[1], g[2]);
    let cswap = || {
        vec![
            vec![(Gate::CX, vec![b, a])],
            vec![(Gate::H, vec![b])],
            vec![(Gate::CCZ, vec![c, a, b])],
            vec![(Gate::H, vec![b])],
            vec![(Gate::CX, vec![b, a])],
        ]
    };
    Some(match gate {
        Gate::CCX => vec![
            vec![(Gate::H, vec![b])],
            vec![(Gate::CCZ, vec![c, a, b])],
            vec![(Gate::H, vec![b])],
        ],
        Gate::CSwap => cswap(),
        Gate::CSwapH => {
            let mut v = vec![vec![(Gate::CH, vec![c, a])], vec![(Gate::CH, vec![c, b])]];
            v.extend(cswap());
            v
        }
        Gate::CXX => vec![vec![(Gate::CX, vec![c, a])], vec![(Gate::CX, vec![c, b])]],
        Gate::CXI => vec![vec![(Gate::CX, vec![c, a])]],
        Gate::CII => vec![],
        _ => return None,
    })
}

/// Rewrites every three-qubit gate other than CCZ into CCZ, CX, CH and H
/// layers, splitting the enclosing tick so each qubit is used at most once per
/// tick. Must run before noise insertion.
pub fn compile_3q(c: &Circuit) -> Result<Circuit, CircuitError> {
    if c
        .instructions
        .iter()
        .any(|i| matches!(i, Instruction::Noise { .. }))
    {
        return Err(CircuitError::NoiseAlreadyPresent);
    }
    let mut out = Circuit {
        coords: c.coords.clone(),
        meta: c.meta.clone(),
        instructions: Vec::new(),
    };
    let mut slice: Vec<Instruction> = Vec::new();
    let flush = |slice: &mut Vec<Instruction>, out: &mut Circuit| {
        let mut base = Vec::new();
        let mut layers: Vec<Vec<(Gate, Vec<u32>)>> = Vec::new();
        for inst in slice.drain(..) {
            match &inst {
                Instruction::Gate { gate, targets } if gate.arity() == 3 => {
                    let mut keep = Vec::new();
                    for g in targets.chunks(3) {
                        match lower(*gate, g) {
                            Some(ls) => {
                                for (k, l) in ls.into_iter().enumerate() {
                                    if layers.len() <= k {
                                        layers.push(Vec::new());
                                    }
                                    layers[k].extend(l);
                                }
                            }
                            None => keep.extend_from_slice(g),
                        }
                    }
                    if !keep.is_empty() {
                        base.push(Instruction::Gate {
                            gate: *gate,
                            targets: keep,
                        });
                    }
                }
                _ => base.push(inst),
            }
        }
        // Layer 0 of the lowered gates shares the tick with everything else.
        let mut first = true;
        let emit_layer = |ops: Vec<(Gate, Vec<u32>)>, out: &mut Circuit| {
            let mut merged: Vec<(Gate, Vec<u32>)> = Vec::new();
            for (g, t) in ops {
                match merged.iter_mut().find(|m| m.0 == g) {
                    Some(m) => m.1.extend(t),
                    None => merged.push((g, t)),
                }
            }
            for (gate, targets) in merged {
                out.instructions.push(Instruction::Gate { gate, targets });
            }
        };
        out.instructions.extend(base);
        for layer in layers {
            if !first {
                out.instructions.push(Instruction::Tick);
            }
            first = false;
            emit_layer(layer, out);
        }
    };
    for inst in &c.instructions {
        if matches!(inst, Instruction::Tick) {
            flush(&mut slice, &mut out);
            out.instructions.push(Instruction::Tick);
        } else {
            slice.push(inst.clone());
        }
    }
    flush(&mut slice, &mut out);
    Ok(out)
}
