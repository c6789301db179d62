//! Check records and suite reports, written as JSON lines (one record per check).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{HarnessError, Result};

/// How `lhs` is compared with `rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    /// |lhs − rhs| ≤ tol
    Equal,
    /// lhs ≤ rhs + tol
    AtMost,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check_id: String,
    /// The identity being checked.
    pub anchor: String,
    /// NaN (written as null) when the computation failed.
    #[serde(deserialize_with = "nan_if_null")]
    pub lhs: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub rhs: f64,
    #[serde(deserialize_with = "nan_if_null")]
    pub abs_err: f64,
    pub tol: f64,
    pub pass: bool,
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn nan_if_null<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl CheckRecord {
    /// Runs `f` and records its (lhs, rhs); errors become failed records.
    pub fn run<E: std::fmt::Display>(
        check_id: impl Into<String>,
        anchor: &str,
        cmp: Comparison,
        tol: f64,
        f: impl FnOnce() -> std::result::Result<(f64, f64), E>,
    ) -> Self {
        let start = Instant::now();
        let out = f();
        let seconds = start.elapsed().as_secs_f64();
        let check_id = check_id.into();
        let anchor = anchor.to_string();
        match out {
            Ok((lhs, rhs)) => {
                let abs_err = match cmp {
                    Comparison::Equal => (lhs - rhs).abs(),
                    Comparison::AtMost => (lhs - rhs).max(0.0),
                };
                // NaN compares false, so a non-finite value never passes
                let pass = abs_err <= tol;
                Self { check_id, anchor, lhs, rhs, abs_err, tol, pass, seconds, error: None }
            }
            Err(e) => Self {
                check_id,
                anchor,
                lhs: f64::NAN,
                rhs: f64::NAN,
                abs_err: f64::NAN,
                tol,
                pass: false,
                seconds,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Report {
    pub suite: String,
    pub records: Vec<CheckRecord>,
}

impl Report {
    pub fn new(suite: impl Into<String>, records: Vec<CheckRecord>) -> Self {
        Self { suite: suite.into(), records }
    }

    pub fn passed(&self) -> usize {
        self.records.iter().filter(|r| r.pass).count()
    }

    pub fn failed(&self) -> usize {
        self.records.len() - self.passed()
    }

    pub fn all_pass(&self) -> bool {
        self.failed() == 0
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(suite: &str, text: &str) -> Result<Self> {
        let records = text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect::<std::result::Result<_, _>>()?;
        Ok(Self::new(suite, records))
    }

    /// Writes `<dir>/<suite>.jsonl` and returns its path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        let path = dir.join(format!("{}.jsonl", self.suite));
        let mut f = std::fs::File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
        f.write_all(self.to_jsonl()?.as_bytes()).map_err(|e| HarnessError::io(&path, e))?;
        Ok(path)
    }

    /// Human-readable summary: failing checks, then the totals.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for r in self.records.iter().filter(|r| !r.pass) {
            match &r.error {
                Some(e) => s.push_str(&format!("FAIL {}: {e}\n", r.check_id)),
                None => s.push_str(&format!("FAIL {}: |err| {:.3e} > tol {:.1e} ({})\n", r.check_id, r.abs_err, r.tol, r.anchor)),
            }
        }
        let secs: f64 = self.records.iter().map(|r| r.seconds).sum();
        s.push_str(&format!("{}: {} passed, {} failed ({secs:.1}s)\n", self.suite, self.passed(), self.failed()));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_compare_and_capture_errors() {
        let ok = CheckRecord::run("a", "x = x", Comparison::Equal, 1e-9, || Ok::<_, String>((1.0, 1.0 + 1e-12)));
        assert!(ok.pass);
        let bound = CheckRecord::run("b", "x ≤ y", Comparison::AtMost, 1e-12, || Ok::<_, String>((0.5, 1.0)));
        assert!(bound.pass && bound.abs_err == 0.0);
        let bad = CheckRecord::run("c", "x = y", Comparison::Equal, 1e-9, || Err::<(f64, f64), _>("boom"));
        assert!(!bad.pass);
        assert_eq!(bad.error.as_deref(), Some("boom"));
        let nan = CheckRecord::run("d", "x = y", Comparison::Equal, 1e-9, || Ok::<_, String>((f64::NAN, 0.0)));
        assert!(!nan.pass);
    }

    #[test]
    fn jsonl_round_trip() {
        let recs = vec![
            CheckRecord::run("a", "x", Comparison::Equal, 1e-9, || Ok::<_, String>((0.1, 0.1))),
            CheckRecord::run("b", "y", Comparison::Equal, 1e-9, || Err::<(f64, f64), _>("no")),
        ];
        let rep = Report::new("s", recs);
        let text = rep.to_jsonl().unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.contains("\"lhs\":null"));
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        for key in ["check_id", "anchor", "lhs", "rhs", "abs_err", "tol", "pass", "seconds"] {
            assert!(first.get(key).is_some(), "{key}");
        }
        let back = Report::from_jsonl("s", &text).unwrap();
        assert_eq!(back.records[0], rep.records[0]);
        assert!(back.records[1].lhs.is_nan() && !back.records[1].pass);
    }
}
