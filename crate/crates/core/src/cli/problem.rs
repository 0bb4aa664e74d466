//! Problem files: JSON documents with expressions in the `expr` grammar.

use std::path::Path;

use serde::Deserialize;

use crate::expr::{parse, Expr};
use crate::geometry::{CovectorField, MetricField, SymmetricField, VectorField};
use crate::report::CheckOptions;
use crate::riemann_poincare::{FieldInput, RiemannProblem};
use crate::saint_venant::SvProblem;
use crate::sampling::BoxDomain;
use crate::subriemann::{CorankOneStructure, HorizontalField};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Riemannian,
    Subriemannian,
    SaintVenant,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    pub expr: String,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Constants {
    pub c0: f64,
    pub c0_i: Option<Vec<f64>>,
    pub c0_ij: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub quad: f64,
    pub check: f64,
    pub ode: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { quad: 1e-10, check: 1e-8, ode: 1e-12 }
    }
}

fn default_samples() -> usize {
    64
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub mode: Mode,
    pub dim: usize,
    #[serde(default)]
    pub metric: Vec<Entry>,
    #[serde(rename = "V")]
    pub v: Option<Vec<String>>,
    #[serde(rename = "V_tilde")]
    pub v_tilde: Option<Vec<String>>,
    #[serde(rename = "A")]
    pub structure: Option<Vec<String>>,
    pub a: Option<Vec<String>>,
    pub e: Option<Vec<Entry>>,
    pub base: Option<Vec<f64>>,
    #[serde(rename = "box")]
    pub domain: Vec<[f64; 2]>,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub tol: Tolerances,
    pub samples: usize,
    pub seed: u64,
}

impl Settings {
    pub fn check_options(&self) -> CheckOptions {
        CheckOptions { samples: self.samples, seed: self.seed, tol: self.tol.check }
    }
}

#[derive(Debug, Clone)]
pub struct SubRiemannSetup {
    pub structure: CorankOneStructure,
    pub field: HorizontalField,
    pub base: Vec<f64>,
    pub c0: f64,
    pub domain: BoxDomain,
}

#[derive(Debug, Clone)]
pub enum Problem {
    Riemann(RiemannProblem),
    SubRiemann(Box<SubRiemannSetup>),
    SaintVenant(SvProblem),
}

impl Problem {
    pub fn domain(&self) -> &BoxDomain {
        match self {
            Problem::Riemann(p) => p.domain(),
            Problem::SubRiemann(s) => &s.domain,
            Problem::SaintVenant(p) => p.domain(),
        }
    }

    pub fn base(&self) -> &[f64] {
        match self {
            Problem::Riemann(p) => p.base(),
            Problem::SubRiemann(s) => &s.base,
            Problem::SaintVenant(p) => p.base(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.domain().dim()
    }
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("{field}: {msg}"))
}

fn exprs(field: &str, src: &[String], len: usize, vars: usize) -> Result<Vec<Expr>, CliError> {
    if src.len() != len {
        return Err(invalid(field, format!("expected {len} expressions, got {}", src.len())));
    }
    src.iter()
        .enumerate()
        .map(|(k, s)| parse(s, vars).map_err(|e| invalid(&format!("{field}[{}]", k + 1), e)))
        .collect()
}

fn entries(field: &str, src: &[Entry], dim: usize, vars: usize) -> Result<Vec<(usize, usize, Expr)>, CliError> {
    src.iter()
        .enumerate()
        .map(|(k, e)| {
            let name = format!("{field}[{}]", k + 1);
            if e.i == 0 || e.j == 0 || e.i > dim || e.j > dim {
                return Err(invalid(&name, format!("index ({}, {}) outside 1..={dim}", e.i, e.j)));
            }
            let x = parse(&e.expr, vars).map_err(|err| invalid(&name, err))?;
            Ok((e.i.min(e.j), e.i.max(e.j), x))
        })
        .collect()
}

impl ProblemFile {
    pub fn read(path: &Path) -> Result<ProblemFile, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        ProblemFile::parse_str(&text).map_err(|e| match e {
            CliError::Invalid(m) => CliError::Invalid(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse_str(text: &str) -> Result<ProblemFile, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("line {}, column {}: {e}", e.line(), e.column())))
    }

    pub fn build(&self) -> Result<(Problem, Settings), CliError> {
        if self.dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        let ambient = match self.mode {
            Mode::Subriemannian => self.dim + 1,
            _ => self.dim,
        };
        let domain = BoxDomain::new(&self.domain).map_err(|e| invalid("box", e))?;
        if domain.dim() != ambient {
            return Err(invalid("box", format!("expected {ambient} intervals, got {}", domain.dim())));
        }
        let base = self.base.clone().unwrap_or_else(|| vec![0.0; ambient]);
        if base.len() != ambient {
            return Err(invalid("base", format!("expected {ambient} coordinates, got {}", base.len())));
        }
        let metric = if self.metric.is_empty() {
            MetricField::identity(self.dim)
        } else {
            MetricField::from_entries(self.dim, &entries("metric", &self.metric, self.dim, ambient)?).map_err(|e| invalid("metric", e))?
        };
        let unexpected = |name: &str, present: bool| if present { Err(invalid(name, format!("not used in {:?} mode", self.mode))) } else { Ok(()) };
        let problem = match self.mode {
            Mode::Riemannian => {
                unexpected("A", self.structure.is_some())?;
                unexpected("a", self.a.is_some())?;
                unexpected("e", self.e.is_some())?;
                let field = match (&self.v, &self.v_tilde) {
                    (Some(v), None) => FieldInput::Vector(VectorField::new(exprs("V", v, self.dim, ambient)?)),
                    (None, Some(w)) => FieldInput::Covector(CovectorField::new(exprs("V_tilde", w, self.dim, ambient)?)),
                    _ => return Err(invalid("V", "exactly one of V and V_tilde is required")),
                };
                let p = RiemannProblem::new(metric, field, base, domain).map_err(|e| invalid("base", e))?;
                Problem::Riemann(p.with_c0(self.constants.c0))
            }
            Mode::Subriemannian => {
                unexpected("V", self.v.is_some())?;
                unexpected("V_tilde", self.v_tilde.is_some())?;
                unexpected("e", self.e.is_some())?;
                let a_struct = self.structure.as_ref().ok_or_else(|| invalid("A", "required"))?;
                let a_field = self.a.as_ref().ok_or_else(|| invalid("a", "required"))?;
                let g = if self.metric.is_empty() { None } else { Some(metric) };
                let structure = CorankOneStructure::new(exprs("A", a_struct, self.dim, ambient)?, g).map_err(|e| invalid("A", e))?;
                let field = HorizontalField::new(&structure, exprs("a", a_field, self.dim, ambient)?).map_err(|e| invalid("a", e))?;
                domain.check_contains(&base).map_err(|e| invalid("base", e))?;
                Problem::SubRiemann(Box::new(SubRiemannSetup { structure, field, base, c0: self.constants.c0, domain }))
            }
            Mode::SaintVenant => {
                unexpected("V", self.v.is_some())?;
                unexpected("V_tilde", self.v_tilde.is_some())?;
                unexpected("A", self.structure.is_some())?;
                unexpected("a", self.a.is_some())?;
                let e_src = self.e.as_ref().ok_or_else(|| invalid("e", "required"))?;
                let e = entries("e", e_src, self.dim, ambient)?;
                let e = SymmetricField::from_entries(self.dim, &e, |_, _| Expr::zero()).map_err(|err| invalid("e", err))?;
                let c0_i = self.constants.c0_i.clone().unwrap_or_else(|| vec![0.0; self.dim]);
                let c0_ij = self.constants.c0_ij.clone().unwrap_or_else(|| vec![vec![0.0; self.dim]; self.dim]);
                let p = SvProblem::new(metric, e, base, domain).map_err(|err| invalid("base", err))?;
                Problem::SaintVenant(p.with_constants(c0_i, c0_ij).map_err(|err| invalid("constants", err))?)
            }
        };
        Ok((problem, Settings { tol: self.tolerances, samples: self.samples, seed: self.seed }))
    }
}
