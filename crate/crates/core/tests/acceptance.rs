//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::process::Command;
use std::time::Instant;

use curlfree::expr::{parse, Expr};
use curlfree::geometry::{Curve, MetricField, SymmetricField};
use curlfree::report::{CheckOptions, Verdict};
use curlfree::riemann_poincare::{self as rp};
use curlfree::saint_venant::{self as sv, SvProblem};
use curlfree::sampling::{self, BoxDomain};
use curlfree::subriemann::{self as sr, apply_x, CorankOneStructure, HorizontalField};

use common::*;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn hyperbolic_poincare() -> Outcome {
    let start = Instant::now();
    let c0 = 0.75;
    let mut worst: f64 = 0.0;
    for m in [2, 3, 5] {
        let prob = hyperbolic(m, 0.9).with_c0(c0);
        for x in sampling::ball_points(m, 0.9, 100, 11 + m as u64) {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let want = c0 - (1.0 - r2).ln();
            let got = rp::cv_solve(&prob, &x, Some(&Curve::radial(&x)), 1e-12).map_err(|e| e.to_string())?;
            worst = worst.max((got.value - want).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-8, || format!("max error {worst:.2e} > 1e-8"))?;
    ensure(secs < 5.0, || format!("took {secs:.2} s"))?;
    Ok(format!("max |u - (c0 - ln(1-|x|^2))| = {worst:.2e} over 300 points, {secs:.2} s"))
}

fn carnot_example() -> Outcome {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_curlfree"))
        .arg("check")
        .arg(problem_file("carnot.json"))
        .output()
        .map_err(|e| e.to_string())?
        .status;
    ensure(status.code() == Some(0), || format!("check exited with {status}"))?;
    let s = carnot_structure();
    let a = carnot_field(&s);
    let x0 = [0.0; 6];
    let mut worst: f64 = 0.0;
    for x in sampling::box_points(&BoxDomain::cube(6, -1.0, 1.0), 50, 2024) {
        let curve = sr::build_horizontal_curve(&s, &x0, &x, sr::ODE_TOL).map_err(|e| e.to_string())?;
        ensure(curve.pieces().len() == 2, || format!("curve to {x:?} has {} pieces", curve.pieces().len()))?;
        let u = sr::cv_horizontal_solve(&s, &a, &x0, &x, Some(&curve), 0.0, 1e-10).map_err(|e| e.to_string())?;
        worst = worst.max((u.value - carnot_u(&x)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-6, || format!("max error {worst:.2e} > 1e-6"))?;
    ensure(secs < 30.0, || format!("took {secs:.2} s"))?;
    Ok(format!("check exit 0; max error {worst:.2e} over 50 points, {secs:.2} s"))
}

fn path_independence() -> Outcome {
    use rand::Rng;
    let s = carnot_structure();
    let a = carnot_field(&s);
    let x0 = [0.0; 6];
    let mut rng = rng(33);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let x = random_point(&mut rng, 6, 1.0);
        let way: Vec<Vec<f64>> = (0..3).map(|_| random_point(&mut rng, 5, 1.0)).collect();
        let loop_after = rng.gen_range(0..4);
        let poly = sr::build_horizontal_polyline(&s, &x0, &way, &x, loop_after, sr::ODE_TOL).map_err(|e| e.to_string())?;
        let u1 = sr::cv_horizontal_solve(&s, &a, &x0, &x, None, 0.0, 1e-10).map_err(|e| e.to_string())?;
        let u2 = sr::cv_horizontal_solve(&s, &a, &x0, &x, Some(&poly), 0.0, 1e-10).map_err(|e| e.to_string())?;
        worst = worst.max((u1.value - u2.value).abs());
    }
    ensure(worst <= 1e-7, || format!("paths disagree by {worst:.2e}"))?;
    Ok(format!("constructed vs 4-segment polyline: max difference {worst:.2e} at 10 points"))
}

fn heisenberg_reduction() -> Outcome {
    let s = heisenberg();
    let counts = sr::condition_counts(2);
    ensure((counts.first, counts.second) == (0, 2), || format!("counts {counts:?}"))?;
    let mut rng = rng(5);
    let fields: Vec<Vec<Expr>> = std::iter::once(exprs(&["0", "x1^2"], 3))
        .chain((0..5).map(|_| (0..2).map(|_| random_poly(&mut rng, 3, 4, 3)).collect()))
        .collect();
    for comps in fields {
        let a = HorizontalField::new(&s, comps.clone()).map_err(|e| e.to_string())?;
        ensure(sr::first_order_candidates(&s, &a).is_empty(), || "first-order candidates emitted".into())?;
        let second = sr::second_order_candidates(&s, &a);
        ensure(second.len() == 2, || format!("{} second-order candidates", second.len()))?;
        let (a1, a2) = (&comps[0], &comps[1]);
        let x = |i: usize, f: &Expr| apply_x(&s, i, f);
        let bracket = |f: &Expr| Expr::int(4) * f.diff(3);
        // X_1² a_2 − (X_1X_2 + [X_1,X_2]) a_1 and X_2² a_1 − (X_2X_1 + [X_2,X_1]) a_2
        let sub = [
            x(1, &x(1, a2)) - x(1, &x(2, a1)) - bracket(a1),
            x(2, &x(2, a1)) - x(2, &x(1, a2)) + bracket(a2),
        ];
        for (k, cand) in second.iter().enumerate() {
            let curlfree::report::Candidate::Check(c) = cand else {
                return Err("second-order condition skipped".into());
            };
            let sign = if k == 0 { 1 } else { -1 };
            let diff = (&c.residual - Expr::int(sign) * &sub[k]).normalize();
            ensure(diff.is_identically_zero(), || format!("record {:?} differs: {diff}", c.indices))?;
        }
    }
    Ok("0 first-order, 2 second-order; residuals equal the two reduced equations (k=2 with reversed orientation) on 6 fields".into())
}

fn condition_counts() -> Outcome {
    for n in 2u64..=12 {
        let c = sr::condition_counts(n);
        let (n128, s, sp) = (n as u128, c.first as u128, c.second as u128);
        let want_s = (n128 - 2) * (n128 - 1) * n128 * (n128 + 1) / 8;
        let want_sp = (n128 - 1) * n128 * n128 / 2;
        let want_total = (n128 - 1) * n128 * (n128 * n128 + 3 * n128 - 2) / 8;
        ensure(s == want_s && sp == want_sp, || format!("n={n}: got ({s}, {sp}), want ({want_s}, {want_sp})"))?;
        ensure(c.total as u128 == want_total && s + sp == want_total, || format!("n={n}: total {}", c.total))?;
        let slots = (sr::first_order_slots(n as usize).len() as u128, sr::second_order_slots(n as usize).len() as u128);
        ensure(slots == (s, sp), || format!("n={n}: enumerators emit {slots:?}"))?;
    }
    Ok("s_n, s'_n and their sum match for n = 2..12; enumerators agree".into())
}

fn certify(s: &CorankOneStructure, nonzero: &[((usize, usize), i64)]) -> Result<(), String> {
    let n = s.n();
    for i in 1..=n {
        for j in 1..=n {
            let want = nonzero
                .iter()
                .find_map(|&((p, q), c)| match (i, j) {
                    _ if (i, j) == (p, q) => Some(c),
                    _ if (i, j) == (q, p) => Some(-c),
                    _ => None,
                })
                .unwrap_or(0);
            ensure(s.c(i, j) == want as f64, || format!("c_{i}{j} = {}, want {want}", s.c(i, j)))?;
            let defining = s.a(j).diff(i) - s.a(i).diff(j) - Expr::int(want);
            ensure(defining.is_identically_zero(), || format!("d_{i}A_{j} - d_{j}A_{i} - {want} does not normalize to 0"))?;
        }
    }
    Ok(())
}

fn bracket_constants() -> Outcome {
    certify(&carnot_structure(), &[((2, 3), 4), ((4, 5), 2)])?;
    certify(&remark_c(), &[((1, 2), 4), ((3, 4), 2)])?;
    Ok("Carnot c23=4, c45=2; R^5 structure c12=4, c34=2; all others 0, certified symbolically".into())
}

fn saint_venant_example() -> Outcome {
    let p = hyperbolic_factor(2);
    let e = SymmetricField::from_fn(2, |i, j| match (i, j) {
        (1, 1) => Expr::zero(),
        (1, 2) => -Expr::var(1) / &p,
        _ => -(Expr::int(2) * Expr::var(2)) / &p,
    });
    let (c1, c2, c12) = (0.3, -0.2, 0.45);
    let prob = SvProblem::new(MetricField::conformal(&p, 2), e, vec![0.0; 2], BoxDomain::cube(2, -0.8, 0.8))
        .and_then(|pr| pr.with_constants(vec![c1, c2], vec![vec![0.0, c12], vec![-c12, 0.0]]))
        .map_err(|e| e.to_string())?;
    let rep = sv::sv_check(&prob, &CheckOptions::default()).map_err(|e| e.to_string())?;
    ensure(rep.passed && rep.all_symbolic(), || format!("sv_check: {rep}"))?;
    // p²·W_12 from the raised form, against the corrected closed form
    let w1 = prob.de(2, 1, 1) - prob.de(1, 2, 1);
    let w2 = prob.de(2, 1, 2) - prob.de(1, 2, 2);
    let want1 = parse("(1 - (x1^2+x2^2) - 2*x1^2)/2", 2).unwrap();
    ensure((w1 - want1).is_identically_zero() && (w2 + parse("x1*x2", 2).unwrap()).is_identically_zero(), || {
        "W_12 differs from (1/2p^2)(1-|x|^2-2x1^2) d1 - (x1x2/p^2) d2".into()
    })?;
    let mut worst: f64 = 0.0;
    for x in sampling::ball_points(2, 0.8, 50, 77) {
        let r = sv::reconstruct(&prob, &x, 1e-11).map_err(|e| e.to_string())?;
        let (x1, x2) = (x[0], x[1]);
        let pp = 2.0 / (1.0 - x1 * x1 - x2 * x2);
        let p12 = c12 + 0.5 * (x1 - x1.powi(3) - x1 * x2 * x2);
        let u1 = c1 + c12 * x2;
        let u2 = c2 - 0.25 - c12 * x1 + 1.0 / (pp * pp);
        worst = worst.max((r.p[(0, 1)] - p12).abs()).max((r.u[0] - u1).abs()).max((r.u[1] - u2).abs());
    }
    ensure(worst <= 1e-8, || format!("max error {worst:.2e} > 1e-8"))?;
    Ok(format!("symbolic PASS; W_12 re-derived with |x|^2; p12, u1, u2 max error {worst:.2e} at 50 points"))
}

fn oracle_suites() -> Outcome {
    // potential round-trips
    let structures = [(heisenberg(), 7u64), (rank3(), 8), (carnot_structure(), 9)];
    let mut worst: f64 = 0.0;
    let mut instances = 0;
    for (st, seed) in &structures {
        let mut rng = rng(*seed);
        let count = if st.n() == 5 { 6 } else { 7 };
        let dim = st.ambient_dim();
        let domain = BoxDomain::cube(dim, -1.0, 1.0);
        let opts = CheckOptions { samples: 16, seed: 1, tol: 1e-8 };
        for _ in 0..count {
            let u0 = random_poly(&mut rng, dim, 4, 2);
            let a = horizontal_gradient(st, &u0);
            let first = sr::compat_first(st, &a, &domain, &opts).map_err(|e| e.to_string())?;
            let second = sr::compat_second(st, &a, &domain, &opts).map_err(|e| e.to_string())?;
            ensure(first.passed && second.passed, || format!("round-trip checks failed for u0 = {u0}"))?;
            let origin = vec![0.0; dim];
            let c0 = u0.eval(&origin).unwrap();
            for _ in 0..3 {
                let x = random_point(&mut rng, dim, 1.0);
                let u = sr::cv_horizontal_solve(st, &a, &origin, &x, None, c0, 1e-11).map_err(|e| e.to_string())?;
                worst = worst.max((u.value - u0.eval(&x).unwrap()).abs());
            }
            instances += 1;
        }
    }
    ensure(worst <= 1e-7, || format!("round-trip error {worst:.2e} > 1e-7"))?;

    // FD verification of every golden example
    let hyp = hyperbolic(2, 0.5);
    let u = |x: &[f64]| rp::cv_solve(&hyp, x, None, 1e-11).map(|s| s.value);
    let r1 = rp::verify_gradient(&hyp, &u, 20, 42);
    let s = carnot_structure();
    let a = carnot_field(&s);
    let u = |x: &[f64]| sr::cv_horizontal_solve(&s, &a, &[0.0; 6], x, None, 0.0, 1e-11).map(|s| s.value);
    let r2 = sr::verify_horizontal_gradient(&s, &a, &u, &BoxDomain::cube(6, -1.0, 1.0), 20, 42);
    let (svp, _) = curlfree::cli::load(&problem_file("hyperbolic_sv.json")).map_err(|e| e.to_string())?;
    let curlfree::cli::Problem::SaintVenant(svp) = svp else {
        return Err("hyperbolic_sv.json is not a saint_venant file".into());
    };
    let v = |x: &[f64]| sv::reconstruct(&svp, x, 1e-11).map(|r| r.v);
    let r3 = sv::verify_symmetric_gradient_at(&svp, &v, &sampling::ball_points(2, 0.8, 20, 42));
    for r in [&r1, &r2, &r3] {
        ensure(r.passed, || format!("{r}"))?;
    }

    // negative instances
    let tol = 1e-10;
    let mut comps = a.components().to_vec();
    comps[0] = &comps[0] + Expr::var(6);
    let bad = HorizontalField::new(&s, comps).map_err(|e| e.to_string())?;
    let opts = CheckOptions::default();
    let rep = sr::compat_second(&s, &bad, &BoxDomain::cube(6, -1.0, 1.0), &opts).map_err(|e| e.to_string())?;
    ensure(!rep.passed && rep.records.iter().any(|r| r.verdict == Verdict::Fail), || "perturbed Carnot data passed".into())?;
    let x = [0.4, -0.3, 0.7, 0.2, 0.5, -0.6];
    let way = vec![vec![0.9, 0.1, -0.4, 0.3, 0.8]];
    let poly = sr::build_horizontal_polyline(&s, &[0.0; 6], &way, &x, 0, sr::ODE_TOL).map_err(|e| e.to_string())?;
    let d1 = sr::cv_horizontal_solve(&s, &bad, &[0.0; 6], &x, None, 0.0, tol).map_err(|e| e.to_string())?.value
        - sr::cv_horizontal_solve(&s, &bad, &[0.0; 6], &x, Some(&poly), 0.0, tol).map_err(|e| e.to_string())?.value;
    ensure(d1.abs() > 10.0 * tol, || format!("perturbed Carnot paths agree to {d1:.2e}"))?;

    let rot = rp::RiemannProblem::new(
        MetricField::identity(2),
        rp::FieldInput::Covector(curlfree::geometry::CovectorField::new(exprs(&["-x2", "x1"], 2))),
        vec![0.0; 2],
        BoxDomain::cube(2, -1.0, 1.0),
    )
    .map_err(|e| e.to_string())?;
    let rep = rp::curl_check(&rot, &opts).map_err(|e| e.to_string())?;
    ensure(!rep.passed, || "rotation field passed the curl check".into())?;
    let xr = [0.8, 0.6];
    let corner = Curve::polyline(&[vec![0.0, 0.0], vec![0.8, 0.0], xr.to_vec()]).map_err(|e| e.to_string())?;
    let d2 = rp::cv_solve(&rot, &xr, None, tol).map_err(|e| e.to_string())?.value
        - rp::cv_solve(&rot, &xr, Some(&corner), tol).map_err(|e| e.to_string())?.value;
    ensure(d2.abs() > 10.0 * tol, || format!("rotation paths agree to {d2:.2e}"))?;

    Ok(format!(
        "{instances} round-trips (n = 2, 3, 5) max error {worst:.2e}; FD PASS on 3 golden examples; negatives FAIL with path gaps {:.2e}, {:.2e}",
        d1.abs(),
        d2.abs()
    ))
}

fn operator_identity() -> Outcome {
    let structures = [heisenberg(), carnot_structure(), remark_c()];
    let mut rng = rng(99);
    for k in 0..50 {
        let s = &structures[k % 3];
        let vertical = s.ambient_dim();
        let f = random_poly(&mut rng, vertical, 5, 3);
        for i in 1..=s.n() {
            for j in 1..=s.n() {
                let r = apply_x(s, i, &apply_x(s, j, &f)) - apply_x(s, j, &apply_x(s, i, &f))
                    - Expr::from_f64(s.c(i, j)) * f.diff(vertical);
                ensure(r.is_identically_zero(), || format!("[X{i}, X{j}] f - c{i}{j} d f != 0 for f = {f}"))?;
            }
        }
    }
    Ok("[X_i, X_j] f = c_ij d_{n+1} f for 50 random polynomials on 3 structures".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("hyperbolic Poincare potential", hyperbolic_poincare),
        ("Carnot example", carnot_example),
        ("horizontal path independence", path_independence),
        ("Heisenberg reduction", heisenberg_reduction),
        ("condition counts", condition_counts),
        ("bracket constants", bracket_constants),
        ("Saint-Venant hyperbolic example", saint_venant_example),
        ("oracle suites", oracle_suites),
        ("operator identity", operator_identity),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {why}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
