//! Gradient systems ∇_g u = V on a box: curl test and path-integral potential.

use thiserror::Error;

use crate::expr::{DomainError, Expr, Point, PointError};
use crate::geometry::{self, CovectorField, Curve, GeometryError, MetricField, VectorField};
use crate::quadrature::QuadratureError;
pub use crate::report::CheckOptions;
use crate::report::{self, Candidate, CheckReport, Condition};
use crate::exec;
use crate::sampling::{self, BoxDomain, BoxError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiemannError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Point(#[from] PointError),
    #[error(transparent)]
    Box(#[from] BoxError),
    #[error("field has {got} components but the metric has dimension {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("curve runs from {start:?} to {end:?}, expected {want_start:?} to {want_end:?}")]
    CurveEndpointMismatch { start: Vec<f64>, end: Vec<f64>, want_start: Vec<f64>, want_end: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldInput {
    Vector(VectorField),
    Covector(CovectorField),
}

/// Value of a path integral together with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solution {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct RiemannProblem {
    metric: MetricField,
    field: FieldInput,
    lowered: CovectorField,
    base: Point,
    c0: f64,
    domain: BoxDomain,
}

/// Ṽ_j = Σ_k g_jk V_k.
pub fn lower(g: &MetricField, v: &VectorField) -> CovectorField {
    let m = g.dim();
    CovectorField::new(
        (1..=m)
            .map(|j| Expr::sum((1..=m).map(|k| g.get(j, k) * v.get(k)).collect()))
            .collect(),
    )
}

impl RiemannProblem {
    pub fn new(metric: MetricField, field: FieldInput, base: Vec<f64>, domain: BoxDomain) -> Result<RiemannProblem, RiemannError> {
        let m = metric.dim();
        let got = match &field {
            FieldInput::Vector(v) => v.dim(),
            FieldInput::Covector(w) => w.dim(),
        };
        if got != m {
            return Err(RiemannError::Dimension { expected: m, got });
        }
        if domain.dim() != m {
            return Err(BoxError::Dimension { expected: m, got: domain.dim() }.into());
        }
        let base = Point::new(base, m)?;
        domain.check_contains(&base)?;
        let lowered = match &field {
            FieldInput::Vector(v) => lower(&metric, v),
            FieldInput::Covector(w) => w.clone(),
        };
        Ok(RiemannProblem { metric, field, lowered, base, c0: 0.0, domain })
    }

    pub fn with_c0(mut self, c0: f64) -> RiemannProblem {
        self.c0 = c0;
        self
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn field(&self) -> &FieldInput {
        &self.field
    }

    pub fn lowered(&self) -> &CovectorField {
        &self.lowered
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }
}

/// SPD check at the sample points that evaluate; metric domain errors are
/// left to the residual evaluation, which reports them per condition.
pub(crate) fn check_metric(g: &MetricField, points: &[Vec<f64>]) -> Result<(), GeometryError> {
    for x in points {
        match g.cholesky_at(x) {
            Err(GeometryError::Domain(_)) | Ok(_) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// ∂_i Ṽ_j = ∂_j Ṽ_i for every i < j.
pub fn curl_check(problem: &RiemannProblem, opts: &CheckOptions) -> Result<CheckReport, RiemannError> {
    let points = sampling::box_points(&problem.domain, opts.samples.max(1), opts.seed);
    check_metric(&problem.metric, &points)?;
    let w = &problem.lowered;
    let m = problem.dim();
    let mut candidates = Vec::new();
    for i in 1..=m {
        for j in i + 1..=m {
            let dij = w.get(j).diff(i);
            let dji = w.get(i).diff(j);
            candidates.push(Candidate::Check(Condition {
                label: "curl".into(),
                indices: vec![i, j],
                residual: (&dij - &dji).normalize(),
                scale: vec![dij, dji],
            }));
        }
    }
    let records = report::evaluate_all(candidates, &points, opts.tol);
    Ok(CheckReport::new("curl condition", opts.tol, points.len(), opts.seed, records))
}

fn endpoints_match(curve: &Curve, x0: &[f64], x: &[f64], tol: f64) -> Result<(), RiemannError> {
    let (start, end) = (curve.start()?, curve.end()?);
    let close = |a: &[f64], b: &[f64]| {
        a.len() == b.len() && a.iter().zip(b).all(|(p, q)| (p - q).abs() <= tol * (1.0 + q.abs()))
    };
    if close(&start, x0) && close(&end, x) {
        Ok(())
    } else {
        Err(RiemannError::CurveEndpointMismatch { start, end, want_start: x0.to_vec(), want_end: x.to_vec() })
    }
}

/// u(x) = c0 + ∫_γ Σ Ṽ_k dγ_k, γ defaulting to the straight segment x0 → x.
pub fn cv_solve(problem: &RiemannProblem, x: &[f64], curve: Option<&Curve>, tol: f64) -> Result<Solution, RiemannError> {
    let x = Point::new(x.to_vec(), problem.dim())?;
    let straight;
    let curve = match curve {
        Some(c) => {
            endpoints_match(c, &problem.base, &x, geometry::JUNCTION_TOL)?;
            c
        }
        None => {
            straight = Curve::straight(&problem.base, &x);
            &straight
        }
    };
    let est = geometry::line_integral_pairing(&problem.lowered, curve, tol)?;
    Ok(Solution { value: problem.c0 + est.value, error: est.error })
}

/// Compare a 4th-order FD gradient of `u` with Ṽ at the given points.
pub fn verify_gradient_at<E: std::fmt::Display>(
    problem: &RiemannProblem,
    u: &(dyn Fn(&[f64]) -> Result<f64, E> + Sync),
    points: &[Vec<f64>],
) -> CheckReport {
    let indexed: Vec<(usize, &Vec<f64>)> = points.iter().enumerate().collect();
    let records = exec::map(&indexed, |&(k, x)| {
        let want = match problem.lowered.eval_at(x) {
            Ok(w) => w,
            Err(e) => return report::failed_record(k + 1, x, e.to_string()),
        };
        let mut est = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            match report::central_diff(u, x, i, report::FD_STEP) {
                Ok(d) => est.push(d),
                Err(e) => return report::failed_record(k + 1, x, e.to_string()),
            }
        }
        report::gradient_record(k + 1, x, &est, &want, report::FD_TOL)
    });
    CheckReport::new("gradient verification", report::FD_TOL, points.len(), 0, records)
}

/// FD verification at seeded points of the (slightly shrunk) box.
pub fn verify_gradient<E: std::fmt::Display>(
    problem: &RiemannProblem,
    u: &(dyn Fn(&[f64]) -> Result<f64, E> + Sync),
    samples: usize,
    seed: u64,
) -> CheckReport {
    let points = sampling::box_points(&problem.domain.shrink(0.95), samples, seed);
    let mut rep = verify_gradient_at(problem, u, &points);
    rep.seed = seed;
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::report::{Method, Verdict};

    fn p(s: &str, dim: usize) -> Expr {
        parse(s, dim).unwrap()
    }

    fn hyperbolic(dim: usize) -> RiemannProblem {
        let r2 = (1..=dim).map(|i| format!("x{i}^2")).collect::<Vec<_>>().join("+");
        let pf = p(&format!("2/(1-({r2}))"), dim);
        let g = MetricField::conformal(&pf, dim);
        let v = VectorField::new((1..=dim).map(|i| Expr::var(i) / &pf).collect());
        RiemannProblem::new(g, FieldInput::Vector(v), vec![0.0; dim], BoxDomain::cube(dim, -0.5, 0.5)).unwrap()
    }

    fn euclidean(w: &[&str]) -> RiemannProblem {
        let m = w.len();
        let w = CovectorField::new(w.iter().map(|s| p(s, m)).collect());
        RiemannProblem::new(MetricField::identity(m), FieldInput::Covector(w), vec![0.0; m], BoxDomain::cube(m, -2.0, 2.0))
            .unwrap()
    }

    #[test]
    fn lowering_hyperbolic_field_gives_p_x() {
        let prob = hyperbolic(2);
        let pf = p("2/(1-(x1^2+x2^2))", 2);
        for j in 1..=2 {
            assert!((prob.lowered().get(j) - &pf * Expr::var(j)).is_identically_zero());
        }
    }

    #[test]
    fn lowering_trivial_cases() {
        let v = VectorField::new(vec![p("x1*x2", 2), p("sin(x1)", 2)]);
        assert_eq!(lower(&MetricField::identity(2), &v), v_as_covector(&v));
        let z = lower(&hyperbolic(2).metric, &VectorField::zero(2));
        assert!(z.components().iter().all(Expr::is_const_zero));
    }

    fn v_as_covector(v: &VectorField) -> CovectorField {
        CovectorField::new(v.components().to_vec())
    }

    #[test]
    fn hyperbolic_curl_passes_symbolically() {
        for m in [2, 3] {
            let rep = curl_check(&hyperbolic(m), &CheckOptions::default()).unwrap();
            assert!(rep.passed);
            assert!(rep.all_symbolic());
            assert_eq!(rep.summary.enumerated, m * (m - 1) / 2);
        }
    }

    #[test]
    fn rotation_field_fails_with_residual_two() {
        let rep = curl_check(&euclidean(&["-x2", "x1"]), &CheckOptions::default()).unwrap();
        assert!(!rep.passed);
        let r = &rep.records[0];
        assert_eq!((r.indices.clone(), r.method, r.verdict), (vec![1, 2], Method::Numeric, Verdict::Fail));
        assert_eq!(r.max_abs, 2.0);
        // scaled by 1 + max(|∂_1 Ṽ_2|, |∂_2 Ṽ_1|) = 2
        assert_eq!(r.residual, 1.0);
    }

    #[test]
    fn exact_gradient_passes() {
        let rep = curl_check(&euclidean(&["2*x1*x2", "x1^2"]), &CheckOptions::default()).unwrap();
        assert!(rep.passed && rep.all_symbolic());
    }

    #[test]
    fn hyperbolic_solution_at_half() {
        let prob = hyperbolic(2).with_c0(0.75);
        let c = Curve::radial(&[0.5, 0.0]);
        let s = cv_solve(&prob, &[0.5, 0.0], Some(&c), 1e-10).unwrap();
        assert!((s.value - 0.75 - 0.2876820724).abs() < 1e-10);
        assert!(s.error <= 1e-10);
    }

    #[test]
    fn solution_at_base_is_c0() {
        let prob = hyperbolic(3).with_c0(-1.25);
        assert_eq!(cv_solve(&prob, &[0.0; 3], None, 1e-10).unwrap().value, -1.25);
    }

    #[test]
    fn euclidean_potential() {
        let prob = euclidean(&["2*x1*x2", "x1^2"]);
        assert!((cv_solve(&prob, &[1.0, 2.0], None, 1e-10).unwrap().value - 2.0).abs() < 1e-13);
    }

    #[test]
    fn endpoint_mismatch_is_reported() {
        let prob = hyperbolic(2);
        let c = Curve::straight(&[0.0, 0.0], &[0.4, 0.0]);
        assert!(matches!(cv_solve(&prob, &[0.5, 0.0], Some(&c), 1e-10), Err(RiemannError::CurveEndpointMismatch { .. })));
    }

    #[test]
    fn base_outside_box_rejected() {
        let g = MetricField::identity(2);
        let w = CovectorField::zero(2);
        let r = RiemannProblem::new(g, FieldInput::Covector(w), vec![3.0, 0.0], BoxDomain::cube(2, -1.0, 1.0));
        assert!(matches!(r, Err(RiemannError::Box(BoxError::OutsideBox { index: 1 }))));
    }

    #[test]
    fn gradient_verification_on_hyperbolic_ball() {
        let prob = hyperbolic(2);
        let u = |x: &[f64]| cv_solve(&prob, x, None, 1e-12).map(|s| s.value);
        let pts: Vec<Vec<f64>> = sampling::ball_points(2, 0.8, 20, 11);
        let rep = verify_gradient_at(&prob, &u, &pts);
        assert!(rep.passed, "{rep}");
        assert_eq!(rep.summary.passed, 20);
    }

    #[test]
    fn zero_field_verifies() {
        let prob = euclidean(&["0", "0", "0"]);
        let u = |x: &[f64]| cv_solve(&prob, x, None, 1e-12).map(|s| s.value);
        assert!(verify_gradient(&prob, &u, 8, 1).passed);
    }

    #[test]
    fn rotation_field_is_path_dependent() {
        let prob = euclidean(&["-x2", "x1"]);
        let u = |x: &[f64]| cv_solve(&prob, x, None, 1e-12).map(|s| s.value);
        assert!(!verify_gradient(&prob, &u, 8, 1).passed);
        let x = [1.0, 1.0];
        let a = cv_solve(&prob, &x, Some(&Curve::polyline(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap()), 1e-12);
        let b = cv_solve(&prob, &x, Some(&Curve::polyline(&[vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap()), 1e-12);
        assert!((a.unwrap().value - b.unwrap().value - 2.0).abs() < 1e-12);
    }
}
