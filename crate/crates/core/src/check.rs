//! Pass/fail records for identities and inequalities.

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// Which statement the check exercises.
    pub anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Location of the worst violation (record, node or grid index) if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_index: Option<usize>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckResult {
    /// Passes iff `lhs <= rhs + tolerance`.
    pub fn leq(name: &str, anchor: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            anchor: anchor.to_string(),
            lhs,
            rhs,
            tolerance,
            pass: lhs <= rhs + tolerance,
            worst_index: None,
            detail: String::new(),
        }
    }

    /// Passes iff `|lhs - rhs| <= tolerance`.
    pub fn close(name: &str, anchor: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self {
            pass: (lhs - rhs).abs() <= tolerance,
            ..Self::leq(name, anchor, lhs, rhs, tolerance)
        }
    }

    pub fn with_index(mut self, index: Option<usize>) -> Self {
        self.worst_index = index;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// Marks a failure regardless of the numeric comparison.
    pub fn fail(mut self) -> Self {
        self.pass = false;
        self
    }
}
