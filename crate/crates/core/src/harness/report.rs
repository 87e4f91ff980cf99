//! Verdicts, estimates and the on-disk report layout.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use crate::csvout::{fmt12, write_file, Cell, Csv};
use crate::error::Result;
use crate::stats::Estimate;

/// How a verdict compares its statistic to the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// `|statistic - target| <= tolerance`.
    Within,
    /// `statistic <= target + tolerance`.
    AtMost,
    /// `statistic > target`; the tolerance column is unused.
    Above,
}

impl Rule {
    fn name(self) -> &'static str {
        match self {
            Rule::Within => "within",
            Rule::AtMost => "at-most",
            Rule::Above => "above",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub statistic: f64,
    pub target: f64,
    pub tolerance: f64,
    pub rule: Rule,
    pub pass: bool,
}

impl Verdict {
    pub fn new(name: impl Into<String>, statistic: f64, target: f64, tolerance: f64, rule: Rule) -> Self {
        let pass = match rule {
            Rule::Within => (statistic - target).abs() <= tolerance,
            Rule::AtMost => statistic <= target + tolerance,
            Rule::Above => statistic > target,
        };
        Verdict {
            name: name.into(),
            statistic,
            target,
            tolerance,
            rule,
            pass,
        }
    }

    /// `statistic` in `[lo, hi]`.
    pub fn interval(name: impl Into<String>, statistic: f64, lo: f64, hi: f64) -> Self {
        Verdict::new(name, statistic, 0.5 * (lo + hi), 0.5 * (hi - lo), Rule::Within)
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: statistic {} {} target {} (tolerance {})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            fmt12(self.statistic),
            self.rule.name(),
            fmt12(self.target),
            fmt12(self.tolerance)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedEstimate {
    pub name: String,
    pub value: f64,
    /// Standard error; NaN for deterministic quantities.
    pub se: f64,
}

/// Outcome of one experiment run.
#[derive(Debug, Clone, Default)]
pub struct ReplicationReport {
    pub experiment: String,
    pub config_echo: String,
    pub seed: u64,
    /// Multiplier on the standard error behind every Monte Carlo verdict.
    pub ci_k: f64,
    pub estimates: Vec<NamedEstimate>,
    pub verdicts: Vec<Verdict>,
    pub runtime: Duration,
    /// Relative path to contents, written under the output directory.
    pub files: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

impl ReplicationReport {
    pub fn new(experiment: &str, config_echo: String, seed: u64, ci_k: f64) -> Self {
        ReplicationReport {
            experiment: experiment.to_string(),
            config_echo,
            seed,
            ci_k,
            ..Default::default()
        }
    }

    pub fn estimate(&mut self, name: impl Into<String>, e: Estimate) {
        self.estimates.push(NamedEstimate {
            name: name.into(),
            value: e.value,
            se: e.se,
        });
    }

    pub fn value(&mut self, name: impl Into<String>, value: f64) {
        self.estimates.push(NamedEstimate {
            name: name.into(),
            value,
            se: f64::NAN,
        });
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }

    pub fn file(&mut self, rel: &str, csv: &Csv) {
        self.files.insert(rel.to_string(), csv.as_str().to_string());
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// Human-readable text; `error` marks a run that stopped early.
    pub fn text(&self, error: Option<&str>) -> String {
        let mut s = String::new();
        writeln!(s, "simlab report: {}", self.experiment).unwrap();
        writeln!(s, "base seed: {}", self.seed).unwrap();
        writeln!(s, "confidence: {} standard errors", fmt12(self.ci_k)).unwrap();
        writeln!(s, "runtime: {:.3} s", self.runtime.as_secs_f64()).unwrap();
        if let Some(e) = error {
            writeln!(s, "status: ERROR (partial results) {e}").unwrap();
        }
        s.push_str("\n[config]\n");
        s.push_str(&self.config_echo);
        s.push_str("\n[estimates]\n");
        for e in &self.estimates {
            if e.se.is_nan() {
                writeln!(s, "{} = {}", e.name, fmt12(e.value)).unwrap();
            } else {
                writeln!(s, "{} = {} (se {})", e.name, fmt12(e.value), fmt12(e.se)).unwrap();
            }
        }
        if !self.notes.is_empty() {
            s.push_str("\n[notes]\n");
            for n in &self.notes {
                writeln!(s, "{n}").unwrap();
            }
        }
        s.push_str("\n[verdicts]\n");
        for v in &self.verdicts {
            writeln!(s, "{}", v.line()).unwrap();
        }
        let passed = self.verdicts.iter().filter(|v| v.pass).count();
        writeln!(s, "\n{passed}/{} verdicts passed", self.verdicts.len()).unwrap();
        s
    }

    fn verdicts_csv(&self) -> Csv {
        let mut c = Csv::new(&["name", "statistic", "target", "tolerance", "rule", "pass"]);
        for v in &self.verdicts {
            c.row(&[
                Cell::S(&v.name),
                Cell::F(v.statistic),
                Cell::F(v.target),
                Cell::F(v.tolerance),
                Cell::S(v.rule.name()),
                Cell::U(v.pass as u64),
            ]);
        }
        c
    }

    fn estimates_csv(&self) -> Csv {
        let mut c = Csv::new(&["name", "value", "se"]);
        for e in &self.estimates {
            c.row(&[Cell::S(&e.name), Cell::F(e.value), Cell::F(e.se)]);
        }
        c
    }
}

/// Write `report.txt`, `data/verdicts.csv`, `data/estimates.csv` and every
/// attached file under `dir`.
pub fn emit_report(report: &ReplicationReport, dir: &Path, error: Option<&str>) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| crate::error::SimError::io(dir, e))?;
    for (rel, body) in &report.files {
        write_file(&dir.join(rel), body)?;
    }
    report.verdicts_csv().write(&dir.join("data/verdicts.csv"))?;
    report.estimates_csv().write(&dir.join("data/estimates.csv"))?;
    write_file(&dir.join("report.txt"), &report.text(error))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules() {
        assert!(Verdict::new("a", 1.0, 1.5, 0.5, Rule::Within).pass);
        assert!(!Verdict::new("a", 0.9, 1.5, 0.5, Rule::Within).pass);
        assert!(Verdict::new("a", 2.0, 1.5, 0.5, Rule::AtMost).pass);
        assert!(!Verdict::new("a", 2.1, 1.5, 0.5, Rule::AtMost).pass);
        assert!(!Verdict::new("a", 0.01, 0.01, 0.0, Rule::Above).pass);
        assert!(Verdict::interval("s", -0.5, -0.8, -0.3).pass);
        assert!(!Verdict::interval("s", -0.2, -0.8, -0.3).pass);
    }

    #[test]
    fn empty_report_has_header_and_no_verdicts() {
        let dir = tempfile::tempdir().unwrap();
        let r = ReplicationReport::new("lln", String::new(), 1, 3.0);
        emit_report(&r, dir.path(), None).unwrap();
        let text = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
        assert!(text.starts_with("simlab report: lln"));
        assert!(text.contains("0/0 verdicts passed"));
        let v = std::fs::read_to_string(dir.path().join("data/verdicts.csv")).unwrap();
        assert_eq!(v, "name,statistic,target,tolerance,rule,pass\n");
        assert!(r.all_pass());
    }
}
