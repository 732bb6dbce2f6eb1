//! Pass/fail reports with worst-case residuals.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

/// Outcome of one checked identity or property.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomOutcome {
    pub pass: bool,
    pub max_residual: f64,
    pub worst_case: IndexMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Named outcomes in insertion order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AxiomReport {
    entries: IndexMap<String, AxiomOutcome>,
}

impl AxiomReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, outcome: AxiomOutcome) {
        self.entries.insert(name.into(), outcome);
    }

    pub fn get(&self, name: &str) -> Option<&AxiomOutcome> {
        self.entries.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &AxiomOutcome)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn all_pass(&self) -> bool {
        self.entries.values().all(|o| o.pass)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.entries.iter().filter(|(_, o)| !o.pass).map(|(k, _)| k.as_str()).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.entries.values().map(|o| o.max_residual).fold(0.0, f64::max)
    }

    /// Appends every entry of `other` under `prefix/name`.
    pub fn extend_prefixed(&mut self, prefix: &str, other: AxiomReport) {
        for (k, v) in other.entries {
            self.entries.insert(format!("{prefix}/{k}"), v);
        }
    }

    /// One line per entry, e.g. `PASS  (c)  max_residual=1.2e-16`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (name, o) in &self.entries {
            let status = if o.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!("{status}  {name}  max_residual={:.3e}", o.max_residual));
            if !o.pass && !o.worst_case.is_empty() {
                let at: Vec<String> = o.worst_case.iter().map(|(k, v)| format!("{k}={v}")).collect();
                out.push_str(&format!("  at {}", at.join(" ")));
            }
            if let Some(note) = &o.note {
                out.push_str(&format!("  ({note})"));
            }
            out.push('\n');
        }
        out
    }
}

/// Running maximum of a residual together with the indices where it was
/// attained. Ties keep the earlier record, so merging per-task trackers in
/// task order is deterministic.
#[derive(Clone, Debug, Default)]
pub struct Residual {
    max: f64,
    worst: Vec<(&'static str, usize)>,
    broken: Option<String>,
}

impl Residual {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, value: f64, at: &[(&'static str, usize)]) {
        let value = if value.is_nan() { f64::INFINITY } else { value };
        if value > self.max || self.worst.is_empty() {
            self.max = value;
            self.worst = at.to_vec();
        }
    }

    /// Marks the check failed regardless of residual.
    pub fn break_with(&mut self, note: impl Into<String>, at: &[(&'static str, usize)]) {
        if self.broken.is_none() {
            self.broken = Some(note.into());
            if self.worst.is_empty() {
                self.worst = at.to_vec();
            }
        }
    }

    pub fn merge(mut self, other: Residual) -> Residual {
        if other.max > self.max || (self.worst.is_empty() && !other.worst.is_empty() && other.max >= self.max) {
            self.max = other.max;
            self.worst = other.worst;
        }
        if self.broken.is_none() {
            self.broken = other.broken;
        }
        self
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    /// Passes when the residual is below `threshold` and nothing broke.
    pub fn outcome(self, threshold: f64) -> AxiomOutcome {
        AxiomOutcome {
            pass: self.broken.is_none() && self.max < threshold,
            max_residual: if self.max.is_finite() { self.max } else { f64::MAX },
            worst_case: self.worst.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            note: self.broken,
        }
    }
}

impl FromIterator<Residual> for Residual {
    fn from_iter<I: IntoIterator<Item = Residual>>(iter: I) -> Self {
        iter.into_iter().fold(Residual::new(), Residual::merge)
    }
}
