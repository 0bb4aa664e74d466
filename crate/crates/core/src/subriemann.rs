//! Corank-one structures X_i = ∂_i + A_i ∂_{n+1} on ℝ^{n+1}: compatibility
//! conditions for X_j u = ã_j, horizontal curves and the horizontal path
//! integral.

use std::f64::consts::PI;

use thiserror::Error;

use crate::exec;
use crate::expr::{DomainError, Expr, Number, Point, PointError};
use crate::geometry::{CovectorField, Curve, GeometryError, MetricField, Segment};
use crate::ode::{self, DenseSolution, OdeError, OdeOptions};
use crate::quadrature::{self, Estimate, QuadratureError};
use crate::report::{self, Candidate, CheckOptions, CheckReport, Condition};
use crate::riemann_poincare::{check_metric, Solution};
use crate::sampling::{self, BoxDomain};

pub const ODE_TOL: f64 = 1e-12;
pub const ENDPOINT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StructureError {
    #[error("need at least two horizontal directions, got {0}")]
    RankTooSmall(usize),
    #[error("A_{0} depends on the vertical variable")]
    DependsOnVertical(usize),
    #[error("d_{i}A_{j} - d_{j}A_{i} is not constant: {residual}")]
    NonConstantBracket { i: usize, j: usize, residual: String },
    #[error("all bracket constants vanish; the distribution is integrable")]
    HolonomicDistribution,
    #[error("expected {expected} components, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SubRiemannError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Point(#[from] PointError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("horizontal lift failed: {0}")]
    LiftDivergence(OdeError),
    #[error("lifted curve ends at {got:?}, expected {want:?}")]
    CurveNotHorizontal { got: Vec<f64>, want: Vec<f64> },
    #[error("curve runs from {start:?} to {end:?}, expected {want_start:?} to {want_end:?}")]
    CurveEndpointMismatch { start: Vec<f64>, end: Vec<f64>, want_start: Vec<f64>, want_end: Vec<f64> },
}

impl From<OdeError> for SubRiemannError {
    fn from(e: OdeError) -> Self {
        match e {
            OdeError::Domain(d) => SubRiemannError::Domain(d),
            other => SubRiemannError::LiftDivergence(other),
        }
    }
}

/// Bracket constants c_ij = ∂_i A_j − ∂_j A_i and the pivot pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BracketMatrix {
    n: usize,
    exact: Vec<Vec<Number>>,
    pivot: (usize, usize),
}

impl BracketMatrix {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn exact(&self, i: usize, j: usize) -> &Number {
        &self.exact[i - 1][j - 1]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.exact(i, j).to_f64()
    }

    pub fn expr(&self, i: usize, j: usize) -> Expr {
        Expr::constant(self.exact(i, j).exact().clone())
    }

    pub fn values(&self) -> Vec<Vec<f64>> {
        self.exact.iter().map(|r| r.iter().map(Number::to_f64).collect()).collect()
    }

    /// First lexicographic (i, j) with c_ij ≠ 0.
    pub fn pivot(&self) -> (usize, usize) {
        self.pivot
    }

    pub fn is_antisymmetric(&self) -> bool {
        (1..=self.n).all(|i| (1..=self.n).all(|j| self.exact(i, j).exact() == &-self.exact(j, i).exact().clone()))
    }
}

/// Validate A and compute the bracket constants.
pub fn bracket_matrix(a: &[Expr]) -> Result<BracketMatrix, StructureError> {
    let n = a.len();
    if n < 2 {
        return Err(StructureError::RankTooSmall(n));
    }
    if let Some(i) = a.iter().position(|e| e.depends_on(n + 1)) {
        return Err(StructureError::DependsOnVertical(i + 1));
    }
    let zero = Number::from_i64(0);
    let mut exact = vec![vec![zero.clone(); n]; n];
    let mut pivot = None;
    for i in 1..=n {
        for j in i + 1..=n {
            let c = (a[j - 1].diff(i) - a[i - 1].diff(j)).normalize();
            let Some(value) = c.as_constant().cloned() else {
                return Err(StructureError::NonConstantBracket { i, j, residual: c.to_string() });
            };
            if !value.is_zero() && pivot.is_none() {
                pivot = Some((i, j));
            }
            exact[j - 1][i - 1] = Number::new(-value.exact().clone());
            exact[i - 1][j - 1] = value;
        }
    }
    let pivot = pivot.ok_or(StructureError::HolonomicDistribution)?;
    Ok(BracketMatrix { n, exact, pivot })
}

#[derive(Debug, Clone)]
pub struct CorankOneStructure {
    a: Vec<Expr>,
    metric: MetricField,
    bracket: BracketMatrix,
    warnings: Vec<String>,
}

impl CorankOneStructure {
    /// `metric` is the n×n fiber metric (identity when `None`).
    pub fn new(a: Vec<Expr>, metric: Option<MetricField>) -> Result<CorankOneStructure, StructureError> {
        let a: Vec<Expr> = a.iter().map(Expr::normalize).collect();
        let bracket = bracket_matrix(&a)?;
        let n = a.len();
        let metric = metric.unwrap_or_else(|| MetricField::identity(n));
        if metric.dim() != n {
            return Err(StructureError::Dimension { expected: n, got: metric.dim() });
        }
        let mut warnings = Vec::new();
        if metric.depends_on(n + 1) {
            warnings.push(format!("fiber metric depends on the vertical variable x{}", n + 1));
        }
        Ok(CorankOneStructure { a, metric, bracket, warnings })
    }

    /// Horizontal rank n.
    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.a.len() + 1
    }

    pub fn a(&self, i: usize) -> &Expr {
        &self.a[i - 1]
    }

    pub fn bracket(&self) -> &BracketMatrix {
        &self.bracket
    }

    pub fn c(&self, i: usize, j: usize) -> f64 {
        self.bracket.get(i, j)
    }

    pub fn pivot(&self) -> (usize, usize) {
        self.bracket.pivot
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Metric SPD check at points of the ambient box.
    pub fn check_metric(&self, points: &[Vec<f64>]) -> Result<(), GeometryError> {
        check_metric(&self.metric, points)
    }
}

/// X_i f = ∂_i f + A_i ∂_{n+1} f.
pub fn apply_x(s: &CorankOneStructure, i: usize, f: &Expr) -> Expr {
    let v = f.diff(s.n() + 1);
    if v.is_const_zero() {
        return f.diff(i);
    }
    (f.diff(i) + s.a(i) * v).normalize()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionCounts {
    pub first: u64,
    pub second: u64,
    pub total: u64,
}

/// Number of first-order, second-order and all conditions for rank n.
pub fn condition_counts(n: u64) -> ConditionCounts {
    assert!(n >= 2, "rank must be at least 2");
    let n = n as u128;
    let q = n * (n - 1) / 2;
    let first = q * (q - 1) / 2;
    let second = n * q;
    let total = (n - 1) * n * (n * n + 3 * n - 2);
    assert_eq!(total % 8, 0);
    let total = total / 8;
    assert_eq!(first + second, total);
    ConditionCounts { first: first as u64, second: second as u64, total: total as u64 }
}

/// Unordered pairs of distinct index pairs (i<j) < (k<l), lexicographic.
pub fn first_order_slots(n: usize) -> Vec<((usize, usize), (usize, usize))> {
    let pairs = index_pairs(n);
    let mut out = Vec::new();
    for (p, &a) in pairs.iter().enumerate() {
        for &b in &pairs[p + 1..] {
            out.push((a, b));
        }
    }
    out
}

/// Triples (k, (i<j)).
pub fn second_order_slots(n: usize) -> Vec<(usize, (usize, usize))> {
    (1..=n).flat_map(|k| index_pairs(n).into_iter().map(move |p| (k, p))).collect()
}

fn index_pairs(n: usize) -> Vec<(usize, usize)> {
    (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).collect()
}

/// Horizontal field a = a_i X_i with lowered components ã_j = g_ij a_i.
#[derive(Debug, Clone)]
pub struct HorizontalField {
    a: Vec<Expr>,
    lowered: Vec<Expr>,
}

impl HorizontalField {
    pub fn new(s: &CorankOneStructure, a: Vec<Expr>) -> Result<HorizontalField, StructureError> {
        let n = s.n();
        if a.len() != n {
            return Err(StructureError::Dimension { expected: n, got: a.len() });
        }
        let a: Vec<Expr> = a.iter().map(Expr::normalize).collect();
        let lowered = if s.metric.is_identity() {
            a.clone()
        } else {
            (1..=n)
                .map(|j| Expr::sum((1..=n).map(|i| s.metric.get(i, j) * &a[i - 1]).collect()).normalize())
                .collect()
        };
        Ok(HorizontalField { a, lowered })
    }

    pub fn components(&self) -> &[Expr] {
        &self.a
    }

    /// ã_j, 1-based.
    pub fn lowered(&self, j: usize) -> &Expr {
        &self.lowered[j - 1]
    }

    pub fn lowered_all(&self) -> &[Expr] {
        &self.lowered
    }
}

/// D_ij = X_i ã_j − X_j ã_i for i < j, keyed by position in `index_pairs`.
fn curls(s: &CorankOneStructure, a: &HorizontalField) -> Vec<((usize, usize), Expr)> {
    let pairs = index_pairs(s.n());
    exec::map(&pairs, |&(i, j)| {
        ((i, j), (apply_x(s, i, a.lowered(j)) - apply_x(s, j, a.lowered(i))).normalize())
    })
}

fn curl_of(curls: &[((usize, usize), Expr)], i: usize, j: usize) -> &Expr {
    &curls.iter().find(|(p, _)| *p == (i, j)).expect("pair").1
}

pub fn first_order_candidates(s: &CorankOneStructure, a: &HorizontalField) -> Vec<Candidate> {
    let d = curls(s, a);
    first_order_slots(s.n())
        .into_iter()
        .map(|((i, j), (k, l))| {
            let indices = vec![i, j, k, l];
            let (cij, ckl) = (s.bracket.exact(i, j), s.bracket.exact(k, l));
            if cij.is_zero() && ckl.is_zero() {
                return Candidate::Skip { label: "first-order".into(), indices };
            }
            let lhs = (s.bracket.expr(k, l) * curl_of(&d, i, j)).normalize();
            let rhs = (s.bracket.expr(i, j) * curl_of(&d, k, l)).normalize();
            Candidate::Check(Condition {
                label: "first-order".into(),
                indices,
                residual: (&lhs - &rhs).normalize(),
                scale: vec![lhs, rhs],
            })
        })
        .collect()
}

pub fn second_order_candidates(s: &CorankOneStructure, a: &HorizontalField) -> Vec<Candidate> {
    let d = curls(s, a);
    let vertical = s.n() + 1;
    let slots = second_order_slots(s.n());
    exec::map(&slots, |&(k, (i, j))| {
        let lhs = apply_x(s, k, curl_of(&d, i, j));
        let rhs = (s.bracket.expr(i, j) * a.lowered(k).diff(vertical)).normalize();
        Candidate::Check(Condition {
            label: "second-order".into(),
            indices: vec![k, i, j],
            residual: (&lhs - &rhs).normalize(),
            scale: vec![lhs, rhs],
        })
    })
}

fn run_check(
    name: &str,
    s: &CorankOneStructure,
    candidates: Vec<Candidate>,
    domain: &BoxDomain,
    opts: &CheckOptions,
) -> Result<CheckReport, SubRiemannError> {
    if domain.dim() != s.ambient_dim() {
        return Err(StructureError::Dimension { expected: s.ambient_dim(), got: domain.dim() }.into());
    }
    let points = sampling::box_points(domain, opts.samples.max(1), opts.seed);
    s.check_metric(&points)?;
    let records = report::evaluate_all(candidates, &points, opts.tol);
    Ok(CheckReport::new(name, opts.tol, points.len(), opts.seed, records).with_warnings(s.warnings.clone()))
}

/// c_kl (X_i ã_j − X_j ã_i) = c_ij (X_k ã_l − X_l ã_k).
pub fn compat_first(
    s: &CorankOneStructure,
    a: &HorizontalField,
    domain: &BoxDomain,
    opts: &CheckOptions,
) -> Result<CheckReport, SubRiemannError> {
    run_check("first-order conditions", s, first_order_candidates(s, a), domain, opts)
}

/// X_k (X_i ã_j − X_j ã_i) = c_ij ∂_{n+1} ã_k.
pub fn compat_second(
    s: &CorankOneStructure,
    a: &HorizontalField,
    domain: &BoxDomain,
    opts: &CheckOptions,
) -> Result<CheckReport, SubRiemannError> {
    run_check("second-order conditions", s, second_order_candidates(s, a), domain, opts)
}

/// Ṽ on ℝ^{n+1} with Ṽ_j = ã_j − A_j ã and Ṽ_{n+1} = ã, where
/// ã = (X_{i0} ã_{j0} − X_{j0} ã_{i0}) / c_{i0 j0}.
pub fn lift_system(s: &CorankOneStructure, a: &HorizontalField) -> CovectorField {
    let (i0, j0) = s.pivot();
    let num = apply_x(s, i0, a.lowered(j0)) - apply_x(s, j0, a.lowered(i0));
    let inv_c = Expr::constant(s.bracket.exact(i0, j0).exact().recip());
    let vertical = (num * inv_c).normalize();
    let mut comps: Vec<Expr> = (1..=s.n()).map(|j| (a.lowered(j) - s.a(j) * &vertical).normalize()).collect();
    comps.push(vertical);
    CovectorField::new(comps)
}

/// One smooth piece: horizontal segment plus its lifted vertical coordinate.
#[derive(Debug, Clone)]
pub struct HorizontalPiece {
    segment: Segment,
    lift: DenseSolution,
}

impl HorizontalPiece {
    pub fn segment(&self) -> &Segment {
        &self.segment
    }

    /// Full (n+1)-point at local parameter s.
    pub fn point_at(&self, s: f64) -> Result<Vec<f64>, DomainError> {
        let mut x = self.segment.position_at(s)?;
        x.push(self.lift.eval(s)[0]);
        Ok(x)
    }

    pub fn vertical_start(&self) -> f64 {
        self.lift.initial()[0]
    }

    pub fn vertical_end(&self) -> f64 {
        self.lift.last()[0]
    }

    /// |γ̇_{n+1} − Σ A_k γ̇_k| at s, with γ̇_{n+1} from the interpolant by central difference.
    pub fn horizontality_residual(&self, st: &CorankOneStructure, s: f64) -> Result<f64, DomainError> {
        let h = 1e-5;
        let v = |t: f64| self.lift.eval(t)[0];
        // second-order stencils, one-sided near the ends
        let dv = if s - h < 0.0 {
            (-3.0 * v(s) + 4.0 * v(s + h) - v(s + 2.0 * h)) / (2.0 * h)
        } else if s + h > 1.0 {
            (3.0 * v(s) - 4.0 * v(s - h) + v(s - 2.0 * h)) / (2.0 * h)
        } else {
            (v(s + h) - v(s - h)) / (2.0 * h)
        };
        Ok((dv - vertical_rate(st, &self.segment, s)?).abs())
    }
}

fn vertical_rate(st: &CorankOneStructure, seg: &Segment, s: f64) -> Result<f64, DomainError> {
    let x = seg.position_at(s)?;
    let dx = seg.velocity_at(s)?;
    let mut acc = 0.0;
    for k in 0..st.n() {
        if dx[k] != 0.0 {
            acc += st.a[k].eval(&x)? * dx[k];
        }
    }
    Ok(acc)
}

/// Lift a horizontal-coordinate segment starting at vertical value v0.
fn lift_segment(st: &CorankOneStructure, segment: Segment, v0: f64, ode_tol: f64) -> Result<HorizontalPiece, SubRiemannError> {
    let opts = OdeOptions::with_tol(ode_tol);
    let lift = ode::solve(
        |s, _, dv| {
            dv[0] = vertical_rate(st, &segment, s)?;
            Ok(())
        },
        0.0,
        &[v0],
        1.0,
        &opts,
    )?;
    Ok(HorizontalPiece { segment, lift })
}

/// Piecewise-smooth horizontal curve in ℝ^{n+1}.
#[derive(Debug, Clone)]
pub struct HorizontalCurve {
    start: Vec<f64>,
    pieces: Vec<HorizontalPiece>,
}

impl HorizontalCurve {
    /// Lift every segment of a curve in the horizontal coordinates.
    pub fn lift(st: &CorankOneStructure, horizontal: &Curve, v0: f64, ode_tol: f64) -> Result<HorizontalCurve, SubRiemannError> {
        if horizontal.dim() != st.n() {
            return Err(StructureError::Dimension { expected: st.n(), got: horizontal.dim() }.into());
        }
        let mut start = horizontal.start()?;
        start.push(v0);
        let mut pieces = Vec::with_capacity(horizontal.segments().len());
        let mut v = v0;
        for seg in horizontal.segments() {
            let piece = lift_segment(st, seg.clone(), v, ode_tol)?;
            v = piece.vertical_end();
            pieces.push(piece);
        }
        Ok(HorizontalCurve { start, pieces })
    }

    pub fn pieces(&self) -> &[HorizontalPiece] {
        &self.pieces
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn end(&self) -> Vec<f64> {
        match self.pieces.last() {
            Some(p) => p.point_at(1.0).expect("segment evaluated during lift"),
            None => self.start.clone(),
        }
    }
}

/// Closed circle in the pivot plane through `p`, oriented so that the
/// vertical gain c·(signed area) equals `delta`.
fn correction_loop(st: &CorankOneStructure, p: &[f64], delta: f64) -> Segment {
    let (i0, j0) = st.pivot();
    let c = st.c(i0, j0);
    let r = (delta.abs() / (PI * c.abs())).sqrt();
    let sigma = if (delta > 0.0) == (c > 0.0) { 1.0 } else { -1.0 };
    let theta = Expr::from_f64(2.0 * PI) * Expr::var(1);
    let r_e = Expr::from_f64(r);
    let position = (1..=st.n())
        .map(|k| {
            if k == i0 {
                Expr::from_f64(p[k - 1] - r) + &r_e * theta.cos()
            } else if k == j0 {
                Expr::from_f64(p[k - 1]) + Expr::from_f64(sigma * r) * theta.sin()
            } else {
                Expr::from_f64(p[k - 1])
            }
        })
        .collect();
    Segment::new(position)
}

fn check_end(curve: &HorizontalCurve, x: &[f64]) -> Result<(), SubRiemannError> {
    let end = curve.end();
    if end.iter().zip(x).all(|(a, b)| (a - b).abs() <= ENDPOINT_TOL) {
        Ok(())
    } else {
        Err(SubRiemannError::CurveNotHorizontal { got: end, want: x.to_vec() })
    }
}

/// Straight pieces through `waypoints` (horizontal coordinates, excluding
/// the endpoints), with the vertical correction loop inserted after
/// `loop_after` pieces.
pub fn build_horizontal_polyline(
    st: &CorankOneStructure,
    x0: &[f64],
    waypoints: &[Vec<f64>],
    x: &[f64],
    loop_after: usize,
    ode_tol: f64,
) -> Result<HorizontalCurve, SubRiemannError> {
    let m = st.ambient_dim();
    let x0 = Point::new(x0.to_vec(), m)?;
    let x = Point::new(x.to_vec(), m)?;
    let n = st.n();
    let mut vertices: Vec<Vec<f64>> = vec![x0[..n].to_vec()];
    for w in waypoints {
        if w.len() != n {
            return Err(StructureError::Dimension { expected: n, got: w.len() }.into());
        }
        vertices.push(w.clone());
    }
    vertices.push(x[..n].to_vec());
    vertices.dedup();

    // vertical increments of straight pieces do not depend on where the lift starts
    let mut straight = Vec::new();
    let mut v = x0[n];
    for w in vertices.windows(2) {
        let piece = lift_segment(st, Segment::affine(&w[0], &w[1]), v, ode_tol)?;
        v = piece.vertical_end();
        straight.push(piece);
    }
    let delta = x[n] - v;
    let loop_after = loop_after.min(straight.len());
    let mut pieces = Vec::with_capacity(straight.len() + 1);
    let mut v = x0[n];
    let at_end = loop_after == straight.len();
    for (k, piece) in straight.into_iter().enumerate() {
        if k == loop_after && delta != 0.0 {
            let lp = lift_segment(st, correction_loop(st, &vertices[k], delta), v, ode_tol)?;
            v = lp.vertical_end();
            pieces.push(lp);
        }
        let piece = if v == piece.vertical_start() { piece } else { lift_segment(st, piece.segment, v, ode_tol)? };
        v = piece.vertical_end();
        pieces.push(piece);
    }
    if at_end && delta != 0.0 {
        let lp = lift_segment(st, correction_loop(st, vertices.last().unwrap(), delta), v, ode_tol)?;
        pieces.push(lp);
    }
    let curve = HorizontalCurve { start: x0.into_vec(), pieces };
    check_end(&curve, &x)?;
    Ok(curve)
}

/// Straight horizontal segment followed by one pivot-plane loop.
pub fn build_horizontal_curve(st: &CorankOneStructure, x0: &[f64], x: &[f64], ode_tol: f64) -> Result<HorizontalCurve, SubRiemannError> {
    build_horizontal_polyline(st, x0, &[], x, usize::MAX, ode_tol)
}

/// u(x) = c0 + ∫ Σ_k ã_k(γ) γ̇_k along a horizontal curve x0 → x.
pub fn cv_horizontal_solve(
    st: &CorankOneStructure,
    a: &HorizontalField,
    x0: &[f64],
    x: &[f64],
    curve: Option<&HorizontalCurve>,
    c0: f64,
    tol: f64,
) -> Result<Solution, SubRiemannError> {
    let built;
    let curve = match curve {
        Some(c) => c,
        None => {
            built = build_horizontal_curve(st, x0, x, ODE_TOL)?;
            &built
        }
    };
    let end = curve.end();
    let near = |p: &[f64], q: &[f64], tol: f64| p.len() == q.len() && p.iter().zip(q).all(|(a, b)| (a - b).abs() <= tol);
    if !near(curve.start(), x0, 1e-12) || !near(&end, x, ENDPOINT_TOL) {
        return Err(SubRiemannError::CurveEndpointMismatch {
            start: curve.start().to_vec(),
            end,
            want_start: x0.to_vec(),
            want_end: x.to_vec(),
        });
    }
    let n = st.n();
    let share = tol / curve.pieces.len().max(1) as f64;
    let mut total = Estimate::zero();
    let mut pt = vec![0.0; n + 1];
    let mut vbuf = [0.0];
    for piece in &curve.pieces {
        let active: Vec<usize> =
            (0..n).filter(|&k| !piece.segment.velocity()[k].is_const_zero() && !a.lowered[k].is_const_zero()).collect();
        if active.is_empty() {
            continue;
        }
        let est = quadrature::integrate(
            |s| {
                for (xk, p) in pt.iter_mut().zip(piece.segment.position()) {
                    *xk = p.eval(&[s])?;
                }
                piece.lift.eval_into(s, &mut vbuf);
                pt[n] = vbuf[0];
                let mut acc = 0.0;
                for &k in &active {
                    acc += a.lowered[k].eval(&pt)? * piece.segment.velocity()[k].eval(&[s])?;
                }
                Ok(acc)
            },
            0.0,
            1.0,
            share,
        )?;
        total = total.combine(est);
    }
    Ok(Solution { value: c0 + total.value, error: total.error })
}

/// FD check of X_j u = ã_j at the given ambient points.
pub fn verify_horizontal_gradient_at<E: std::fmt::Display>(
    st: &CorankOneStructure,
    a: &HorizontalField,
    u: &(dyn Fn(&[f64]) -> Result<f64, E> + Sync),
    points: &[Vec<f64>],
) -> CheckReport {
    let n = st.n();
    let indexed: Vec<(usize, &Vec<f64>)> = points.iter().enumerate().collect();
    let records = exec::map(&indexed, |&(k, x)| {
        let fail = |msg: String| report::failed_record(k + 1, x, msg);
        let mut grad = Vec::with_capacity(n + 1);
        for i in 0..=n {
            match report::central_diff(u, x, i, report::FD_STEP) {
                Ok(d) => grad.push(d),
                Err(e) => return fail(e.to_string()),
            }
        }
        let mut est = Vec::with_capacity(n);
        let mut want = Vec::with_capacity(n);
        for j in 1..=n {
            let aj = match st.a(j).eval(x) {
                Ok(v) => v,
                Err(e) => return fail(e.to_string()),
            };
            est.push(grad[j - 1] + aj * grad[n]);
            match a.lowered(j).eval(x) {
                Ok(v) => want.push(v),
                Err(e) => return fail(e.to_string()),
            }
        }
        report::gradient_record(k + 1, x, &est, &want, report::FD_TOL)
    });
    CheckReport::new("horizontal gradient verification", report::FD_TOL, points.len(), 0, records)
}

pub fn verify_horizontal_gradient<E: std::fmt::Display>(
    st: &CorankOneStructure,
    a: &HorizontalField,
    u: &(dyn Fn(&[f64]) -> Result<f64, E> + Sync),
    domain: &BoxDomain,
    samples: usize,
    seed: u64,
) -> CheckReport {
    let points = sampling::box_points(&domain.shrink(0.95), samples, seed);
    let mut rep = verify_horizontal_gradient_at(st, a, u, &points);
    rep.seed = seed;
    rep
}
