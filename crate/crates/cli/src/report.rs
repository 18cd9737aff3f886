//! Summary records and atomic artifact writing.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use kjlab_core::field::{GridSpec, ScalarField};
use kjlab_core::snapshot::encode_scalar;
use kjlab_core::CheckResult;
use serde::Serialize;

use crate::error::{CliError, Result};

/// A check as reported in `summary.json`.
///
/// Rows with `asserted = false` are informational and never affect the exit
/// status.
#[derive(Clone, Debug, Serialize)]
pub struct Row {
    #[serde(flatten)]
    pub check: CheckResult,
    pub asserted: bool,
}

impl Row {
    pub fn asserted(check: CheckResult) -> Self {
        Self {
            check,
            asserted: true,
        }
    }

    pub fn reported(check: CheckResult) -> Self {
        Self {
            check,
            asserted: false,
        }
    }

    pub fn failed(&self) -> bool {
        self.asserted && !self.check.pass
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

impl From<&CliError> for ErrorInfo {
    fn from(e: &CliError) -> Self {
        Self {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub task: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub grid: GridSpec,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Row>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub results: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

impl Summary {
    pub fn new(task: &str, name: Option<String>, grid: GridSpec, seed: u64) -> Self {
        Self {
            task: task.to_string(),
            name,
            grid,
            seed,
            pass: true,
            checks: Vec::new(),
            warnings: Vec::new(),
            results: serde_json::Value::Null,
            error: None,
        }
    }

    pub fn push(&mut self, row: Row) {
        self.pass &= !row.failed();
        self.checks.push(row);
    }

    pub fn extend(&mut self, rows: impl IntoIterator<Item = Row>) {
        rows.into_iter().for_each(|r| self.push(r));
    }

    pub fn set_error(&mut self, e: &CliError) {
        self.pass = false;
        self.error = Some(e.into());
    }

    /// 0 when every asserted check passes, 2 on a failed check, 1 on error.
    pub fn exit_code(&self) -> i32 {
        if self.error.is_some() {
            1
        } else if self.pass {
            0
        } else {
            2
        }
    }
}

/// Output directory whose files appear atomically (written to a temporary
/// sibling, then renamed).
#[derive(Clone, Debug)]
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(CliError::io(root))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let target = self.root.join(name);
        let tmp = self.root.join(format!(".{name}.tmp"));
        let mut file = fs::File::create(&tmp).map_err(CliError::io(&tmp))?;
        file.write_all(bytes).map_err(CliError::io(&tmp))?;
        file.sync_all().map_err(CliError::io(&tmp))?;
        fs::rename(&tmp, &target).map_err(CliError::io(&target))
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_field(&self, name: &str, field: &ScalarField) -> Result<()> {
        self.write_bytes(name, &encode_scalar(field))
    }

    pub fn write_summary(&self, summary: &Summary) -> Result<()> {
        let mut text = serde_json::to_string_pretty(summary)
            .map_err(|e| CliError::Config(format!("cannot serialize summary: {e}")))?;
        text.push('\n');
        self.write_text("summary.json", &text)
    }
}

/// Joins rows of numbers into CSV lines under a header.
pub fn csv_table(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(1, 8).unwrap()
    }

    #[test]
    fn empty_summary_passes() {
        let s = Summary::new("functionals", None, grid(), 0);
        assert!(s.pass);
        assert_eq!(s.exit_code(), 0);
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json["checks"].as_array().unwrap().len(), 0);
    }

    #[test]
    fn failing_check_sets_exit_two() {
        let mut s = Summary::new("flow", None, grid(), 0);
        s.push(Row::asserted(CheckResult::leq("a", "x", 0.0, 1.0, 0.0)));
        s.push(Row::reported(CheckResult::leq("b", "x", 2.0, 1.0, 0.0)));
        assert_eq!(s.exit_code(), 0);
        s.push(Row::asserted(CheckResult::leq("c", "x", 2.0, 1.0, 0.0)));
        assert_eq!(s.exit_code(), 2);
        let json = serde_json::to_value(&s).unwrap();
        let row = &json["checks"][2];
        assert_eq!(row["pass"], false);
        for key in [
            "name",
            "anchor",
            "lhs",
            "rhs",
            "tolerance",
            "pass",
            "asserted",
        ] {
            assert!(row.get(key).is_some(), "{key}");
        }
        s.set_error(&CliError::Config("x".into()));
        assert_eq!(s.exit_code(), 1);
    }

    #[test]
    fn csv_has_one_header() {
        let t = csv_table("a,b", vec![vec![1.0, 2.0], vec![3.0, 0.5]]);
        assert_eq!(t, "a,b\n1e0,2e0\n3e0,5e-1\n");
    }
}
