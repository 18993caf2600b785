//! Preset ids.
//!
//! Grammar: `{h|hxy|cx}-{rot|unrot}-d{d1}` followed by any of `-d2_{n}`,
//! `-r{n}`, `-{uniform|atom|gateonly}`, `-dense`, `-pk`/`-dc`, `-flip`.
//! Defaults: proxy circuit, uniform noise, no expansion, 10 rounds after an
//! expansion.

use crate::circuit::NoiseModel;
use crate::geometry::PatchKind;

use super::{ProtocolConfig, ProtocolError, Projection, Variant};

#[derive(Clone, Debug, PartialEq)]
pub struct Preset {
    pub config: ProtocolConfig,
    pub noise: NoiseModel,
}

impl Preset {
    /// Canonical id (round-trips through [`parse_preset`]).
    pub fn id(&self) -> String {
        let c = &self.config;
        let mut s = format!("{}-{}-d{}", c.variant.name(), c.kind.name(), c.d1);
        if c.expanded() {
            s += &format!("-d2_{}-r{}", c.d2, c.rounds);
        }
        if self.noise != NoiseModel::Uniform {
            s += &format!("-{}", self.noise.name());
        }
        if !c.proxy {
            s += "-dense";
        }
        if c.projection != ProtocolConfig::new(c.variant, c.kind, c.d1).projection {
            s += &format!("-{}", c.projection.name());
        }
        if c.input_flip {
            s += "-flip";
        }
        s
    }
}

pub fn parse_preset(id: &str) -> Result<Preset, ProtocolError> {
    let bad = || ProtocolError::UnknownPreset(id.to_string());
    let mut parts = id.split('-');
    let variant = match parts.next() {
        Some("h") => Variant::H,
        Some("hxy") => Variant::HXY,
        Some("cx") => Variant::CX,
        _ => return Err(bad()),
    };
    let kind = match parts.next() {
        Some("rot") => PatchKind::Rotated,
        Some("unrot") => PatchKind::Unrotated,
        _ => return Err(bad()),
    };
    let d1: usize = parts
        .next()
        .and_then(|s| s.strip_prefix('d'))
        .and_then(|s| s.parse().ok())
        .ok_or_else(bad)?;
    let mut cfg = ProtocolConfig::new(variant, kind, d1);
    let mut noise = NoiseModel::Uniform;
    let mut rounds = None;
    for part in parts {
        if let Some(n) = part.strip_prefix("d2_") {
            cfg.d2 = n.parse().map_err(|_| bad())?;
        } else if let Some(n) = part.strip_prefix('r').filter(|n| n.parse::<usize>().is_ok()) {
            rounds = Some(n.parse().map_err(|_| bad())?);
        } else if let Some(m) = NoiseModel::from_name(part) {
            noise = m;
        } else {
            match part {
                "dense" => cfg.proxy = false,
                "pk" => cfg.projection = Projection::PhaseKickback,
                "dc" => cfg.projection = Projection::DoubleCheck,
                "flip" => cfg.input_flip = true,
                _ => return Err(bad()),
            }
        }
    }
    if cfg.expanded() {
        cfg.rounds = rounds.unwrap_or(10);
    } else if rounds.is_some_and(|r| r > 0) {
        return Err(bad());
    }
    cfg.validate()?;
    Ok(Preset { config: cfg, noise })
}

/// Registered preset ids. Any id matching the grammar is accepted; this list
/// names the ones exercised by tests and the CLI help.
pub fn preset_ids() -> Vec<&'static str> {
    vec![
        "h-unrot-d2-dense",
        "h-unrot-d3-dense",
        "hxy-unrot-d3-dense",
        "hxy-rot-d3-dense",
        "h-rot-d3-dense",
        "cx-unrot-d2-dense",
        "h-unrot-d2",
        "h-unrot-d2-d2_11-r10",
        "h-unrot-d3",
        "h-unrot-d5",
        "h-rot-d3",
        "h-rot-d5",
        "hxy-unrot-d3",
        "hxy-unrot-d5",
        "hxy-rot-d3",
        "hxy-rot-d5",
        "hxy-rot-d3-d2_7-r7",
        "hxy-rot-d3-d2_9-r7",
        "hxy-rot-d3-d2_7-r10-atom",
        "h-unrot-d3-pk",
        "hxy-rot-d3-pk",
        "cx-unrot-d2",
        "cx-rot-d3",
        "cx-rot-d3-d2_7-r7",
    ]
}
