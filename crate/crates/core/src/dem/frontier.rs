//! Acceptance/infidelity trade-off over gap thresholds.

/// One shot after cultivation post-selection and decoding.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShotOutcome {
    /// Survived every post-selected detector and cultivation-stage erasure.
    pub kept: bool,
    /// Complementary gap (meaningful only for kept shots).
    pub gap: f64,
    /// Decoded logical class differs from the true one.
    pub error: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrontierPoint {
    pub tau: f64,
    /// Kept fraction of all shots (cultivation and gap stages together).
    pub rate: f64,
    /// Errors over kept shots; `None` when nothing was kept.
    pub infidelity: Option<f64>,
    /// sqrt(errors) / kept.
    pub sigma: Option<f64>,
    pub kept: usize,
    pub errors: usize,
}

pub fn default_taus() -> Vec<f64> {
    (0..=12).map(f64::from).collect()
}

/// Frontier over `taus`: a shot survives threshold tau when it was kept by
/// cultivation and its gap is at least tau.
pub fn frontier(shots: &[ShotOutcome], taus: &[f64]) -> Vec<FrontierPoint> {
    let mut acc = FrontierCounts::new(taus);
    shots.iter().for_each(|s| acc.push(s));
    acc.points()
}

/// Streaming per-threshold counts; merging is order independent.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontierCounts {
    pub taus: Vec<f64>,
    pub total: u64,
    pub kept: Vec<u64>,
    pub errors: Vec<u64>,
}

impl FrontierCounts {
    pub fn new(taus: &[f64]) -> Self {
        FrontierCounts {
            taus: taus.to_vec(),
            total: 0,
            kept: vec![0; taus.len()],
            errors: vec![0; taus.len()],
        }
    }

    pub fn push(&mut self, s: &ShotOutcome) {
        self.total += 1;
        if !s.kept {
            return;
        }
        for (i, &tau) in self.taus.iter().enumerate() {
            if s.gap >= tau {
                self.kept[i] += 1;
                self.errors[i] += s.error as u64;
            }
        }
    }

    pub fn merge(&mut self, o: &FrontierCounts) {
        assert_eq!(self.taus, o.taus);
        self.total += o.total;
        for i in 0..self.taus.len() {
            self.kept[i] += o.kept[i];
            self.errors[i] += o.errors[i];
        }
    }

    pub fn points(&self) -> Vec<FrontierPoint> {
        (0..self.taus.len())
            .map(|i| {
                let (kept, errors) = (self.kept[i], self.errors[i]);
                let k = kept as f64;
                FrontierPoint {
                    tau: self.taus[i],
                    rate: if self.total == 0 { 0.0 } else { k / self.total as f64 },
                    infidelity: (kept > 0).then(|| errors as f64 / k),
                    sigma: (kept > 0).then(|| (errors as f64).sqrt() / k),
                    kept: kept as usize,
                    errors: errors as usize,
                }
            })
            .collect()
    }
}
