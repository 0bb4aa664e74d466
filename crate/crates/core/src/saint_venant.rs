//! Symmetric gradient systems ½(∂_i(g V)_j + ∂_j(g V)_i) = e_ij: the
//! Saint-Venant compatibility test and staged reconstruction of V.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::exec;
use crate::expr::{DomainError, Expr, Point, PointError};
use crate::geometry::{self, Curve, GeometryError, MetricField, SymmetricField};
use crate::ode::{self, OdeError, OdeOptions};
use crate::report::{self, Candidate, CheckOptions, CheckReport, Condition};
use crate::riemann_poincare::check_metric;
use crate::sampling::{self, BoxDomain, BoxError};

pub const RECONSTRUCT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SaintVenantError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Point(#[from] PointError),
    #[error(transparent)]
    Box(#[from] BoxError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("expected {expected} components, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("c0_ij must be antisymmetric; entries ({i},{j}) and ({j},{i}) disagree")]
    NotAntisymmetric { i: usize, j: usize },
    #[error("curve starts at {start:?}, expected the base point {base:?}")]
    CurveStart { start: Vec<f64>, base: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct SvProblem {
    metric: MetricField,
    e: SymmetricField,
    /// de[l][i][k] = ∂_l e_ik, 0-based.
    de: Vec<Vec<Vec<Expr>>>,
    base: Point,
    c0_i: Vec<f64>,
    c0_ij: DMatrix<f64>,
    domain: BoxDomain,
}

impl SvProblem {
    pub fn new(metric: MetricField, e: SymmetricField, base: Vec<f64>, domain: BoxDomain) -> Result<SvProblem, SaintVenantError> {
        let m = metric.dim();
        if e.dim() != m {
            return Err(SaintVenantError::Dimension { expected: m, got: e.dim() });
        }
        if domain.dim() != m {
            return Err(BoxError::Dimension { expected: m, got: domain.dim() }.into());
        }
        let base = Point::new(base, m)?;
        domain.check_contains(&base)?;
        let de = (1..=m)
            .map(|l| (1..=m).map(|i| (1..=m).map(|k| e.get(i, k).diff(l)).collect()).collect())
            .collect();
        Ok(SvProblem { metric, e, de, base, c0_i: vec![0.0; m], c0_ij: DMatrix::zeros(m, m), domain })
    }

    /// Integration constants u_i(x0) = c0_i and p_ij(x0) = c0_ij.
    pub fn with_constants(mut self, c0_i: Vec<f64>, c0_ij: Vec<Vec<f64>>) -> Result<SvProblem, SaintVenantError> {
        let m = self.dim();
        if c0_i.len() != m {
            return Err(SaintVenantError::Dimension { expected: m, got: c0_i.len() });
        }
        if c0_ij.len() != m || c0_ij.iter().any(|r| r.len() != m) {
            return Err(SaintVenantError::Dimension { expected: m, got: c0_ij.len() });
        }
        for i in 0..m {
            for j in i..m {
                if c0_ij[i][j] != -c0_ij[j][i] {
                    return Err(SaintVenantError::NotAntisymmetric { i: i + 1, j: j + 1 });
                }
            }
        }
        self.c0_i = c0_i;
        self.c0_ij = DMatrix::from_fn(m, m, |i, j| c0_ij[i][j]);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn e(&self) -> &SymmetricField {
        &self.e
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn c0_i(&self) -> &[f64] {
        &self.c0_i
    }

    pub fn c0_ij(&self) -> &DMatrix<f64> {
        &self.c0_ij
    }

    /// ∂_l e_ik, 1-based.
    pub fn de(&self, l: usize, i: usize, k: usize) -> &Expr {
        &self.de[l - 1][i - 1][k - 1]
    }

    fn de_at(&self, x: &[f64]) -> Result<Vec<Vec<Vec<f64>>>, DomainError> {
        self.de.iter().map(|a| a.iter().map(|b| b.iter().map(|d| d.eval(x)).collect()).collect()).collect()
    }
}

/// R_ijkl = ∂²_lj e_ik + ∂²_ki e_jl − ∂²_li e_jk − ∂²_jk e_il.
pub fn sv_residual(e: &SymmetricField, i: usize, j: usize, k: usize, l: usize) -> (Expr, [Expr; 4]) {
    let terms = [
        e.get(i, k).diff(l).diff(j),
        e.get(j, l).diff(k).diff(i),
        e.get(j, k).diff(l).diff(i),
        e.get(i, l).diff(j).diff(k),
    ];
    let r = (&terms[0] + &terms[1] - &terms[2] - &terms[3]).normalize();
    (r, terms)
}

fn ordered_pairs(m: usize) -> Vec<(usize, usize)> {
    (1..=m).flat_map(|i| (i + 1..=m).map(move |j| (i, j))).collect()
}

/// Compatibility relations over i<j, k<l, (i,j) ≤ (k,l); the remaining
/// index combinations follow from the symmetries of R.
pub fn sv_check(problem: &SvProblem, opts: &CheckOptions) -> Result<CheckReport, SaintVenantError> {
    let points = sampling::box_points(&problem.domain, opts.samples.max(1), opts.seed);
    check_metric(&problem.metric, &points)?;
    let pairs = ordered_pairs(problem.dim());
    let mut slots = Vec::new();
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for &(k, l) in &pairs[a..] {
            slots.push([i, j, k, l]);
        }
    }
    let candidates = exec::map(&slots, |&[i, j, k, l]| {
        let (residual, terms) = sv_residual(&problem.e, i, j, k, l);
        Candidate::Check(Condition {
            label: "saint-venant".into(),
            indices: vec![i, j, k, l],
            residual,
            scale: terms.to_vec(),
        })
    });
    let records = report::evaluate_all(candidates, &points, opts.tol);
    Ok(CheckReport::new("saint-venant relations", opts.tol, points.len(), opts.seed, records))
}

/// Rates of p_ij and u_i along a curve point y moving with velocity v.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub dp: DMatrix<f64>,
    pub du: Vec<f64>,
}

/// ṗ_ij = (∂_j e_it − ∂_i e_jt) v_t and u̇_i = (p_it + e_it) v_t.
pub fn rates_direct(problem: &SvProblem, p: &DMatrix<f64>, y: &[f64], v: &[f64]) -> Result<Rates, DomainError> {
    let m = problem.dim();
    let de = problem.de_at(y)?;
    let e = problem.e.eval_at(y)?;
    let dp = DMatrix::from_fn(m, m, |i, j| (0..m).map(|t| (de[j][i][t] - de[i][j][t]) * v[t]).sum());
    let du = (0..m).map(|i| (0..m).map(|t| (p[(i, t)] + e[(i, t)]) * v[t]).sum()).collect();
    Ok(Rates { dp, du })
}

/// Same rates through the raised fields W_ij = g^{ls}(∂_j e_is − ∂_i e_js) ∂_l
/// and U_i = g^{ls}(p_is + e_is) ∂_l, paired with v by g.
pub fn rates_raised(problem: &SvProblem, p: &DMatrix<f64>, y: &[f64], v: &[f64]) -> Result<Rates, GeometryError> {
    let m = problem.dim();
    let g = problem.metric.matrix_at(y)?;
    let ginv = geometry::metric_inverse_at(&problem.metric, y)?;
    let de = problem.de_at(y)?;
    let e = problem.e.eval_at(y)?;
    let v = nalgebra::DVector::from_column_slice(v);
    let pair = |lower: nalgebra::DVector<f64>| -> f64 {
        let raised = &ginv * lower;
        (g.clone() * raised).dot(&v)
    };
    let dp = DMatrix::from_fn(m, m, |i, j| pair(nalgebra::DVector::from_fn(m, |s, _| de[j][i][s] - de[i][j][s])));
    let du = (0..m).map(|i| pair(nalgebra::DVector::from_fn(m, |s, _| p[(i, s)] + e[(i, s)]))).collect();
    Ok(Rates { dp, du })
}

/// Components W_ijl of the raised field W_ij at x.
pub fn w_field_at(problem: &SvProblem, i: usize, j: usize, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
    let m = problem.dim();
    let ginv = geometry::metric_inverse_at(&problem.metric, x)?;
    let de = problem.de_at(x)?;
    let lower = nalgebra::DVector::from_fn(m, |s, _| de[j - 1][i - 1][s] - de[i - 1][j - 1][s]);
    Ok((ginv * lower).iter().copied().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// Antisymmetric p_ij(x).
    pub p: DMatrix<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// State layout: p_ij for i<j in lexicographic order, then u_1..u_m.
fn unpack_p(m: usize, state: &[f64], p: &mut DMatrix<f64>) {
    let mut k = 0;
    for i in 0..m {
        for j in i + 1..m {
            p[(i, j)] = state[k];
            p[(j, i)] = -state[k];
            k += 1;
        }
    }
}

/// Reconstruct along the straight segment x0 → x.
pub fn reconstruct(problem: &SvProblem, x: &[f64], tol: f64) -> Result<Reconstruction, SaintVenantError> {
    let x = Point::new(x.to_vec(), problem.dim())?;
    reconstruct_along(problem, &Curve::straight(&problem.base, &x), tol)
}

/// p and u integrated as one coupled ODE along `curve`, then V = g⁻¹ u at
/// the curve's end point.
pub fn reconstruct_along(problem: &SvProblem, curve: &Curve, tol: f64) -> Result<Reconstruction, SaintVenantError> {
    let m = problem.dim();
    if curve.dim() != m {
        return Err(SaintVenantError::Dimension { expected: m, got: curve.dim() });
    }
    let start = curve.start()?;
    if start.iter().zip(problem.base.iter()).any(|(a, b)| (a - b).abs() > geometry::JUNCTION_TOL * (1.0 + b.abs())) {
        return Err(SaintVenantError::CurveStart { start, base: problem.base.to_vec() });
    }
    let x = curve.end()?;
    let npairs = m * (m - 1) / 2;
    let mut state: Vec<f64> = Vec::with_capacity(npairs + m);
    for i in 0..m {
        for j in i + 1..m {
            state.push(problem.c0_ij[(i, j)]);
        }
    }
    state.extend_from_slice(&problem.c0_i);
    let opts = OdeOptions::with_tol(tol);
    for seg in curve.segments() {
        let mut p = DMatrix::zeros(m, m);
        let sol = ode::solve(
            |s, y, dy| {
                let pos = seg.position_at(s)?;
                let vel = seg.velocity_at(s)?;
                unpack_p(m, y, &mut p);
                let r = rates_direct(problem, &p, &pos, &vel)?;
                let mut k = 0;
                for i in 0..m {
                    for j in i + 1..m {
                        dy[k] = r.dp[(i, j)];
                        k += 1;
                    }
                }
                dy[npairs..].copy_from_slice(&r.du);
                Ok(())
            },
            0.0,
            &state,
            1.0,
            &opts,
        )?;
        state = sol.last().to_vec();
    }
    let mut p = DMatrix::zeros(m, m);
    unpack_p(m, &state, &mut p);
    let u = state[npairs..].to_vec();
    let ginv = geometry::metric_inverse_at(&problem.metric, &x)?;
    let v = (ginv * nalgebra::DVector::from_column_slice(&u)).iter().copied().collect();
    Ok(Reconstruction { p, u, v })
}

/// Independent target points reconstruct in parallel.
pub fn reconstruct_many(problem: &SvProblem, xs: &[Vec<f64>], tol: f64) -> Vec<Result<Reconstruction, SaintVenantError>> {
    exec::map(xs, |x| reconstruct(problem, x, tol))
}

/// ½(∂_i(g V)_j + ∂_j(g V)_i) by FD against e_ij, i ≤ j, at each point.
pub fn verify_symmetric_gradient_at<E: std::fmt::Display>(
    problem: &SvProblem,
    v: &(dyn Fn(&[f64]) -> Result<Vec<f64>, E> + Sync),
    points: &[Vec<f64>],
) -> CheckReport {
    let m = problem.dim();
    let lowered = |y: &[f64]| -> Result<Vec<f64>, String> {
        let g = problem.metric.matrix_at(y).map_err(|e| e.to_string())?;
        let vy = v(y).map_err(|e| e.to_string())?;
        Ok((g * nalgebra::DVector::from_column_slice(&vy)).iter().copied().collect())
    };
    let indexed: Vec<(usize, &Vec<f64>)> = points.iter().enumerate().collect();
    let records = exec::map(&indexed, |&(k, x)| {
        let e = match problem.e.eval_at(x) {
            Ok(e) => e,
            Err(err) => return report::failed_record(k + 1, x, err.to_string()),
        };
        let mut grad = Vec::with_capacity(m);
        for i in 0..m {
            match report::central_diff_vec(&lowered, x, i, report::FD_STEP) {
                Ok(d) => grad.push(d),
                Err(msg) => return report::failed_record(k + 1, x, msg),
            }
        }
        let (mut est, mut want) = (Vec::new(), Vec::new());
        for i in 0..m {
            for j in i..m {
                est.push(0.5 * (grad[i][j] + grad[j][i]));
                want.push(e[(i, j)]);
            }
        }
        report::gradient_record(k + 1, x, &est, &want, report::FD_TOL)
    });
    CheckReport::new("symmetric gradient verification", report::FD_TOL, points.len(), 0, records)
}

pub fn verify_symmetric_gradient<E: std::fmt::Display>(
    problem: &SvProblem,
    v: &(dyn Fn(&[f64]) -> Result<Vec<f64>, E> + Sync),
    samples: usize,
    seed: u64,
) -> CheckReport {
    let points = sampling::box_points(&problem.domain.shrink(0.95), samples, seed);
    let mut rep = verify_symmetric_gradient_at(problem, v, &points);
    rep.seed = seed;
    rep
}
