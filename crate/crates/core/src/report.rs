use serde::{Deserialize, Serialize};

/// Maximum number of witnesses kept per report.
pub const MAX_WITNESSES: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub inputs: String,
    pub residual: f64,
}

/// Outcome of one decidable check, with the inputs that decided it.
///
/// When `value` is false at least one witness has `residual > tolerance`.
/// When it is true the witnesses record the largest residuals seen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredicateReport {
    pub name: String,
    pub value: bool,
    pub tolerance: f64,
    pub witnesses: Vec<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl PredicateReport {
    pub fn new(name: impl Into<String>, value: bool, tolerance: f64) -> Self {
        PredicateReport {
            name: name.into(),
            value,
            tolerance,
            witnesses: Vec::new(),
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn with_witness(mut self, inputs: impl Into<String>, residual: f64) -> Self {
        self.witnesses.push(Witness {
            inputs: inputs.into(),
            residual,
        });
        self
    }

    /// A residual check `residual ≤ tolerance`.
    pub fn threshold(name: impl Into<String>, inputs: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        PredicateReport::new(name, residual <= tolerance, tolerance).with_witness(inputs, residual)
    }
}

/// Collects the largest residuals of a family of checks.
#[derive(Clone, Debug)]
pub(crate) struct WitnessSet {
    tolerance: f64,
    worst: Vec<Witness>,
    violated: bool,
}

impl WitnessSet {
    pub(crate) fn new(tolerance: f64) -> Self {
        WitnessSet {
            tolerance,
            worst: Vec::new(),
            violated: false,
        }
    }

    pub(crate) fn record(&mut self, inputs: impl FnOnce() -> String, residual: f64) {
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        if residual > self.tolerance {
            self.violated = true;
        }
        if self.worst.len() < MAX_WITNESSES || residual > self.worst.last().map_or(0.0, |w| w.residual) {
            let pos = self.worst.partition_point(|w| w.residual >= residual);
            self.worst.insert(
                pos,
                Witness {
                    inputs: inputs(),
                    residual,
                },
            );
            self.worst.truncate(MAX_WITNESSES);
        }
    }

    pub(crate) fn violated(&self) -> bool {
        self.violated
    }

    pub(crate) fn max(&self) -> f64 {
        self.worst.first().map_or(0.0, |w| w.residual)
    }

    pub(crate) fn into_report(self, name: impl Into<String>) -> PredicateReport {
        PredicateReport {
            name: name.into(),
            value: !self.violated,
            tolerance: self.tolerance,
            witnesses: self.worst,
            note: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witness_set_keeps_largest() {
        let mut w = WitnessSet::new(1.0);
        for k in 0..20 {
            w.record(|| format!("k={k}"), k as f64 / 10.0);
        }
        assert!(w.violated());
        assert_eq!(w.max(), 1.9);
        let r = w.into_report("x");
        assert!(!r.value);
        assert_eq!(r.witnesses.len(), MAX_WITNESSES);
        assert_eq!(r.witnesses[0].inputs, "k=19");
        assert!(r.witnesses.iter().any(|w| w.residual > r.tolerance));
    }

    #[test]
    fn nan_counts_as_violation() {
        let mut w = WitnessSet::new(1.0);
        w.record(|| "nan".into(), f64::NAN);
        assert!(w.violated());
    }

    #[test]
    fn report_round_trips() {
        let r = PredicateReport::threshold("check", "a=1", 0.5, 1.0).with_note("n");
        let s = serde_json::to_string(&r).unwrap();
        let back: PredicateReport = serde_json::from_str(&s).unwrap();
        assert_eq!(r, back);
    }
}
