//! Metrics, Christoffel symbols, curves and line integrals.

use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use thiserror::Error;

use crate::expr::{DomainError, Expr};
use crate::quadrature::{self, Estimate, QuadratureError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("metric is not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("expected {expected} components, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("index ({i}, {j}) out of range for dimension {dim}")]
    IndexOutOfRange { i: usize, j: usize, dim: usize },
    #[error("curve segments {segment} and {} do not meet (gap {gap:e})", segment + 1)]
    CurveDiscontinuous { segment: usize, gap: f64 },
    #[error("curve has no segments")]
    EmptyCurve,
}

fn upper_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    (i - 1) * (2 * dim - i + 2) / 2 + (j - i)
}

/// Symmetric m×m matrix of expressions; only i ≤ j is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricField {
    dim: usize,
    upper: Vec<Expr>,
}

impl SymmetricField {
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Expr) -> SymmetricField {
        let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 1..=dim {
            for j in i..=dim {
                upper.push(f(i, j).normalize());
            }
        }
        SymmetricField { dim, upper }
    }

    pub fn zero(dim: usize) -> SymmetricField {
        SymmetricField::from_fn(dim, |_, _| Expr::zero())
    }

    /// Entries given as (i, j, expr) with 1-based indices; either triangle
    /// may be used, a later entry overrides an earlier one. Unlisted entries
    /// take `default(i, j)`.
    pub fn from_entries(
        dim: usize,
        entries: &[(usize, usize, Expr)],
        default: impl Fn(usize, usize) -> Expr,
    ) -> Result<SymmetricField, GeometryError> {
        let mut field = SymmetricField::from_fn(dim, default);
        for (i, j, e) in entries {
            if *i == 0 || *j == 0 || *i > dim || *j > dim {
                return Err(GeometryError::IndexOutOfRange { i: *i, j: *j, dim });
            }
            field.upper[upper_index(dim, *i, *j)] = e.normalize();
        }
        Ok(field)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.upper[upper_index(self.dim, i, j)]
    }

    pub fn eval_at(&self, x: &[f64]) -> Result<DMatrix<f64>, DomainError> {
        let m = self.dim;
        let mut out = DMatrix::zeros(m, m);
        for i in 1..=m {
            for j in i..=m {
                let v = self.get(i, j).eval(x)?;
                out[(i - 1, j - 1)] = v;
                out[(j - 1, i - 1)] = v;
            }
        }
        Ok(out)
    }

    /// Entries (i ≤ j) in storage order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Expr)> {
        let m = self.dim;
        (1..=m).flat_map(move |i| (i..=m).map(move |j| (i, j))).zip(&self.upper).map(|((i, j), e)| (i, j, e))
    }
}

/// Riemannian metric g_ij.
#[derive(Debug, Clone)]
pub struct MetricField {
    g: SymmetricField,
    // partials[s-1] holds ∂_s of every stored entry
    partials: OnceLock<Vec<SymmetricField>>,
}

impl PartialEq for MetricField {
    fn eq(&self, other: &Self) -> bool {
        self.g == other.g
    }
}

fn delta(i: usize, j: usize) -> Expr {
    if i == j {
        Expr::one()
    } else {
        Expr::zero()
    }
}

impl MetricField {
    pub fn new(g: SymmetricField) -> MetricField {
        MetricField { g, partials: OnceLock::new() }
    }

    pub fn identity(dim: usize) -> MetricField {
        MetricField::new(SymmetricField::from_fn(dim, delta))
    }

    /// p²·δ_ij.
    pub fn conformal(factor: &Expr, dim: usize) -> MetricField {
        let p2 = factor.powi(2);
        MetricField::new(SymmetricField::from_fn(dim, |i, j| if i == j { p2.clone() } else { Expr::zero() }))
    }

    /// Unlisted entries default to the identity.
    pub fn from_entries(dim: usize, entries: &[(usize, usize, Expr)]) -> Result<MetricField, GeometryError> {
        Ok(MetricField::new(SymmetricField::from_entries(dim, entries, delta)?))
    }

    pub fn dim(&self) -> usize {
        self.g.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        self.g.get(i, j)
    }

    pub fn entries(&self) -> &SymmetricField {
        &self.g
    }

    pub fn is_identity(&self) -> bool {
        self.g.entries().all(|(i, j, e)| *e == delta(i, j).normalize())
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.g.upper.iter().any(|e| e.depends_on(var))
    }

    fn partials(&self) -> &[SymmetricField] {
        self.partials.get_or_init(|| {
            (1..=self.dim())
                .map(|s| SymmetricField { dim: self.dim(), upper: self.g.upper.iter().map(|e| e.diff(s)).collect() })
                .collect()
        })
    }

    /// ∂_s g_ij as an expression.
    pub fn partial(&self, s: usize, i: usize, j: usize) -> &Expr {
        self.partials()[s - 1].get(i, j)
    }

    pub fn matrix_at(&self, x: &[f64]) -> Result<DMatrix<f64>, DomainError> {
        self.g.eval_at(x)
    }

    pub fn cholesky_at(&self, x: &[f64]) -> Result<Cholesky<f64, Dyn>, GeometryError> {
        let m = self.matrix_at(x)?;
        Cholesky::new(m).ok_or_else(|| GeometryError::NotPositiveDefinite { point: x.to_vec() })
    }

    pub fn check_spd(&self, points: &[Vec<f64>]) -> Result<(), GeometryError> {
        for x in points {
            self.cholesky_at(x)?;
        }
        Ok(())
    }
}

/// Numeric g⁻¹(x).
pub fn metric_inverse_at(g: &MetricField, x: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
    Ok(g.cholesky_at(x)?.inverse())
}

/// All Γ^k_ij(x), indexed `[k-1][i-1][j-1]`.
pub fn christoffel_all(g: &MetricField, x: &[f64]) -> Result<Vec<Vec<Vec<f64>>>, GeometryError> {
    let m = g.dim();
    let chol = g.cholesky_at(x)?;
    let mut dg = vec![vec![vec![0.0; m]; m]; m];
    for s in 1..=m {
        for i in 1..=m {
            for j in i..=m {
                let v = g.partial(s, i, j).eval(x)?;
                dg[s - 1][i - 1][j - 1] = v;
                dg[s - 1][j - 1][i - 1] = v;
            }
        }
    }
    let mut out = vec![vec![vec![0.0; m]; m]; m];
    for i in 0..m {
        for j in i..m {
            // first-kind symbols Γ_{s,ij}
            let rhs = DVector::from_fn(m, |s, _| 0.5 * (dg[i][j][s] + dg[j][i][s] - dg[s][i][j]));
            let sol = chol.solve(&rhs);
            for k in 0..m {
                out[k][i][j] = sol[k];
                out[k][j][i] = sol[k];
            }
        }
    }
    Ok(out)
}

/// Γ^k_ij(x).
pub fn christoffel(g: &MetricField, i: usize, j: usize, k: usize, x: &[f64]) -> Result<f64, GeometryError> {
    Ok(christoffel_all(g, x)?[k - 1][i - 1][j - 1])
}

macro_rules! component_field {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(Vec<Expr>);

        impl $name {
            pub fn new(components: Vec<Expr>) -> $name {
                $name(components.iter().map(Expr::normalize).collect())
            }

            pub fn zero(dim: usize) -> $name {
                $name(vec![Expr::zero(); dim])
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            /// 1-based component.
            pub fn get(&self, i: usize) -> &Expr {
                &self.0[i - 1]
            }

            pub fn components(&self) -> &[Expr] {
                &self.0
            }

            pub fn eval_at(&self, x: &[f64]) -> Result<Vec<f64>, DomainError> {
                self.0.iter().map(|e| e.eval(x)).collect()
            }
        }
    };
}

component_field!(CovectorField);
component_field!(VectorField);

/// Smooth piece of a curve, parametrized by x1 = s ∈ [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    position: Vec<Expr>,
    velocity: Vec<Expr>,
}

impl Segment {
    /// Velocity is the exact derivative of `position` in the local parameter.
    pub fn new(position: Vec<Expr>) -> Segment {
        let position: Vec<Expr> = position.iter().map(Expr::normalize).collect();
        let velocity = position.iter().map(|p| p.diff(1)).collect();
        Segment { position, velocity }
    }

    pub fn affine(a: &[f64], b: &[f64]) -> Segment {
        let s = Expr::var(1);
        Segment::new(
            a.iter()
                .zip(b)
                .map(|(&a, &b)| if a == b { Expr::from_f64(a) } else { Expr::from_f64(a) + (Expr::from_f64(b) - Expr::from_f64(a)) * &s })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }

    pub fn position(&self) -> &[Expr] {
        &self.position
    }

    pub fn velocity(&self) -> &[Expr] {
        &self.velocity
    }

    pub fn position_at(&self, s: f64) -> Result<Vec<f64>, DomainError> {
        self.position.iter().map(|e| e.eval(&[s])).collect()
    }

    pub fn velocity_at(&self, s: f64) -> Result<Vec<f64>, DomainError> {
        self.velocity.iter().map(|e| e.eval(&[s])).collect()
    }

    pub fn start(&self) -> Result<Vec<f64>, DomainError> {
        self.position_at(0.0)
    }

    pub fn end(&self) -> Result<Vec<f64>, DomainError> {
        self.position_at(1.0)
    }
}

pub const JUNCTION_TOL: f64 = 1e-12;

/// Piecewise-smooth curve; segment k covers global parameters [k/N, (k+1)/N].
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    dim: usize,
    segments: Vec<Segment>,
}

fn gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

impl Curve {
    pub fn from_segments(segments: Vec<Segment>) -> Result<Curve, GeometryError> {
        let dim = segments.first().ok_or(GeometryError::EmptyCurve)?.dim();
        for (k, w) in segments.windows(2).enumerate() {
            if w[1].dim() != dim {
                return Err(GeometryError::Dimension { expected: dim, got: w[1].dim() });
            }
            let (end, start) = (w[0].end()?, w[1].start()?);
            let scale = 1.0 + end.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let g = gap(&end, &start);
            if g > JUNCTION_TOL * scale {
                return Err(GeometryError::CurveDiscontinuous { segment: k + 1, gap: g });
            }
        }
        Ok(Curve { dim, segments })
    }

    pub fn straight(x0: &[f64], x1: &[f64]) -> Curve {
        Curve { dim: x0.len(), segments: vec![Segment::affine(x0, x1)] }
    }

    /// t ↦ t·x.
    pub fn radial(x: &[f64]) -> Curve {
        Curve::straight(&vec![0.0; x.len()], x)
    }

    /// Straight pieces through the given vertices.
    pub fn polyline(vertices: &[Vec<f64>]) -> Result<Curve, GeometryError> {
        if vertices.len() < 2 {
            return Err(GeometryError::EmptyCurve);
        }
        Curve::from_segments(vertices.windows(2).map(|w| Segment::affine(&w[0], &w[1])).collect())
    }

    /// This curve followed by `other`.
    pub fn then(&self, other: &Curve) -> Result<Curve, GeometryError> {
        let mut segs = self.segments.clone();
        segs.extend(other.segments.iter().cloned());
        Curve::from_segments(segs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn start(&self) -> Result<Vec<f64>, DomainError> {
        self.segments[0].start()
    }

    pub fn end(&self) -> Result<Vec<f64>, DomainError> {
        self.segments[self.segments.len() - 1].end()
    }

    /// Position at global parameter t ∈ [0, 1].
    pub fn point_at(&self, t: f64) -> Result<Vec<f64>, DomainError> {
        let n = self.segments.len();
        let scaled = t.clamp(0.0, 1.0) * n as f64;
        let k = (scaled.floor() as usize).min(n - 1);
        self.segments[k].position_at(scaled - k as f64)
    }
}

/// ∫ Σ_k w_k(γ) γ̇_k over the curve, to absolute tolerance `tol`.
pub fn line_integral_pairing(w: &CovectorField, curve: &Curve, tol: f64) -> Result<Estimate, QuadratureError> {
    if w.dim() != curve.dim() {
        panic!("covector of dimension {} paired with a curve in dimension {}", w.dim(), curve.dim());
    }
    let share = tol / curve.segments.len() as f64;
    let mut total = Estimate::zero();
    let mut x = vec![0.0; w.dim()];
    for seg in &curve.segments {
        let active: Vec<usize> = (0..w.dim()).filter(|&k| !seg.velocity[k].is_const_zero() && !w.0[k].is_const_zero()).collect();
        if active.is_empty() {
            continue;
        }
        let est = quadrature::integrate(
            |s| {
                for (xk, p) in x.iter_mut().zip(&seg.position) {
                    *xk = p.eval(&[s])?;
                }
                let mut acc = 0.0;
                for &k in &active {
                    acc += w.0[k].eval(&x)? * seg.velocity[k].eval(&[s])?;
                }
                Ok(acc)
            },
            0.0,
            1.0,
            share,
        )?;
        total = total.combine(est);
    }
    Ok(total)
}
