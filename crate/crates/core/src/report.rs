//! Per-condition check records and the shared symbolic/numeric residual policy.

use std::fmt;

use serde::Serialize;

use crate::exec;
use crate::expr::Expr;

/// Sampling and tolerance settings shared by the checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { samples: 64, seed: 42, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Symbolic,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
    Skipped,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Skipped => "SKIPPED",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainFailure {
    pub point: Vec<f64>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub label: String,
    pub indices: Vec<usize>,
    pub method: Method,
    /// Scaled residual compared against the tolerance.
    pub residual: f64,
    /// Unscaled max |r| over the points.
    pub max_abs: f64,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub domain_errors: Vec<DomainFailure>,
}

impl Record {
    pub fn skipped(label: impl Into<String>, indices: Vec<usize>) -> Record {
        Record {
            label: label.into(),
            indices,
            method: Method::Symbolic,
            residual: 0.0,
            max_abs: 0.0,
            verdict: Verdict::Skipped,
            domain_errors: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Summary {
    pub enumerated: usize,
    pub skipped: usize,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub tolerance: f64,
    pub samples: usize,
    pub seed: u64,
    pub records: Vec<Record>,
    pub summary: Summary,
    pub passed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, tolerance: f64, samples: usize, seed: u64, records: Vec<Record>) -> CheckReport {
        let mut summary = Summary { enumerated: records.len(), ..Summary::default() };
        for r in &records {
            match r.verdict {
                Verdict::Pass => summary.passed += 1,
                Verdict::Fail => summary.failed += 1,
                Verdict::Inconclusive => summary.inconclusive += 1,
                Verdict::Skipped => summary.skipped += 1,
            }
        }
        let passed = summary.failed == 0 && summary.inconclusive == 0;
        CheckReport { name: name.into(), tolerance, samples, seed, records, summary, passed, warnings: Vec::new() }
    }

    pub fn with_warnings(mut self, warnings: Vec<String>) -> CheckReport {
        self.warnings = warnings;
        self
    }

    /// Records that were actually examined.
    pub fn checked(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| r.verdict != Verdict::Skipped)
    }

    pub fn max_residual(&self) -> f64 {
        self.checked().map(|r| r.residual).fold(0.0, f64::max)
    }

    pub fn all_symbolic(&self) -> bool {
        self.checked().all(|r| r.method == Method::Symbolic)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} (tol {:e}, samples {}, seed {})", self.name, self.tolerance, self.samples, self.seed)?;
        for w in &self.warnings {
            writeln!(f, "  warning: {w}")?;
        }
        for r in &self.records {
            let idx: Vec<String> = r.indices.iter().map(|i| i.to_string()).collect();
            let method = match (r.verdict, r.method) {
                (Verdict::Skipped, _) => "-",
                (_, Method::Symbolic) => "symbolic",
                (_, Method::Numeric) => "numeric",
            };
            writeln!(f, "  {:<18} ({})  {:<8}  {:.3e}  {}", r.label, idx.join(","), method, r.residual, r.verdict)?;
            for d in r.domain_errors.iter().take(3) {
                writeln!(f, "      at {:?}: {}", d.point, d.message)?;
            }
        }
        let s = &self.summary;
        writeln!(
            f,
            "  enumerated {}, skipped {}, passed {}, failed {}, inconclusive {}",
            s.enumerated, s.skipped, s.passed, s.failed, s.inconclusive
        )?;
        write!(f, "  verdict: {}", if self.passed { "PASS" } else { "FAIL" })
    }
}

/// A residual expression that should vanish, with the terms it is scaled against.
#[derive(Debug, Clone)]
pub struct Condition {
    pub label: String,
    pub indices: Vec<usize>,
    pub residual: Expr,
    pub scale: Vec<Expr>,
}

pub enum Candidate {
    Check(Condition),
    Skip { label: String, indices: Vec<usize> },
}

/// Symbolic zero test first, then max|r| / (1 + max|scale|) over the points.
pub fn evaluate(cond: &Condition, points: &[Vec<f64>], tol: f64) -> Record {
    let mut record = Record {
        label: cond.label.clone(),
        indices: cond.indices.clone(),
        method: Method::Symbolic,
        residual: 0.0,
        max_abs: 0.0,
        verdict: Verdict::Pass,
        domain_errors: Vec::new(),
    };
    if cond.residual.is_identically_zero() {
        return record;
    }
    record.method = Method::Numeric;
    let mut max_r: f64 = 0.0;
    let mut max_s: f64 = 0.0;
    let mut good = 0usize;
    'points: for x in points {
        let r = match cond.residual.eval(x) {
            Ok(v) => v,
            Err(e) => {
                record.domain_errors.push(DomainFailure { point: x.clone(), message: e.to_string() });
                continue;
            }
        };
        let mut s_here: f64 = 0.0;
        for s in &cond.scale {
            match s.eval(x) {
                Ok(v) => s_here = s_here.max(v.abs()),
                Err(e) => {
                    record.domain_errors.push(DomainFailure { point: x.clone(), message: e.to_string() });
                    continue 'points;
                }
            }
        }
        max_r = max_r.max(r.abs());
        max_s = max_s.max(s_here);
        good += 1;
    }
    record.max_abs = max_r;
    record.residual = max_r / (1.0 + max_s);
    record.verdict = if good > 0 && record.residual > tol {
        Verdict::Fail
    } else if good == 0 || !record.domain_errors.is_empty() {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    record
}

pub fn evaluate_all(candidates: Vec<Candidate>, points: &[Vec<f64>], tol: f64) -> Vec<Record> {
    exec::map(&candidates, |c| match c {
        Candidate::Check(cond) => evaluate(cond, points, tol),
        Candidate::Skip { label, indices } => Record::skipped(label.clone(), indices.clone()),
    })
}

/// 4th-order central difference of `f` along coordinate `i`.
pub fn central_diff<E>(f: &dyn Fn(&[f64]) -> Result<f64, E>, x: &[f64], i: usize, h: f64) -> Result<f64, E> {
    let mut y = x.to_vec();
    let mut at = |d: f64| {
        y[i] = x[i] + d;
        f(&y)
    };
    let (p2, p1, m1, m2) = (at(2.0 * h)?, at(h)?, at(-h)?, at(-2.0 * h)?);
    Ok((-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h))
}

/// Componentwise [`central_diff`] of a vector-valued `f`.
pub fn central_diff_vec<E>(
    f: &dyn Fn(&[f64]) -> Result<Vec<f64>, E>,
    x: &[f64],
    i: usize,
    h: f64,
) -> Result<Vec<f64>, E> {
    let mut y = x.to_vec();
    let mut at = |d: f64| {
        y[i] = x[i] + d;
        f(&y)
    };
    let (p2, p1, m1, m2) = (at(2.0 * h)?, at(h)?, at(-h)?, at(-2.0 * h)?);
    Ok((0..p2.len()).map(|k| (-p2[k] + 8.0 * p1[k] - 8.0 * m1[k] + m2[k]) / (12.0 * h)).collect())
}

pub const FD_STEP: f64 = 1e-4;
pub const FD_TOL: f64 = 1e-4;

/// Record for one FD comparison: max|est - want| / (1 + max|want|).
pub fn gradient_record(index: usize, x: &[f64], estimate: &[f64], want: &[f64], tol: f64) -> Record {
    let err = estimate.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scale = want.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let residual = err / (1.0 + scale);
    Record {
        label: format!("{:?}", x.iter().map(|v| (v * 1e6).round() / 1e6).collect::<Vec<_>>()),
        indices: vec![index],
        method: Method::Numeric,
        residual,
        max_abs: err,
        verdict: if residual <= tol { Verdict::Pass } else { Verdict::Fail },
        domain_errors: Vec::new(),
    }
}

pub fn failed_record(index: usize, x: &[f64], message: String) -> Record {
    Record {
        label: format!("{x:?}"),
        indices: vec![index],
        method: Method::Numeric,
        residual: f64::NAN,
        max_abs: f64::NAN,
        verdict: Verdict::Inconclusive,
        domain_errors: vec![DomainFailure { point: x.to_vec(), message }],
    }
}
