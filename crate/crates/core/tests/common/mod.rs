#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curlfree::expr::{parse, Expr};
use curlfree::geometry::{MetricField, VectorField};
use curlfree::riemann_poincare::{FieldInput, RiemannProblem};
use curlfree::sampling::BoxDomain;
use curlfree::subriemann::{apply_x, CorankOneStructure, HorizontalField};

pub fn problem_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("problems").join(name)
}

pub fn exprs(src: &[&str], dim: usize) -> Vec<Expr> {
    src.iter().map(|s| parse(s, dim).unwrap()).collect()
}

pub fn heisenberg() -> CorankOneStructure {
    CorankOneStructure::new(exprs(&["-2*x2", "2*x1"], 3), None).unwrap()
}

pub fn carnot_structure() -> CorankOneStructure {
    CorankOneStructure::new(exprs(&["0", "-2*x3", "2*x2", "-x5", "x4"], 6), None).unwrap()
}

pub fn remark_c() -> CorankOneStructure {
    CorankOneStructure::new(exprs(&["-2*x2+x1*x4^2", "2*x1", "-x4", "x3+x1^2*x4"], 5), None).unwrap()
}

/// n = 3 structure with a single nonzero bracket c_12 = 2.
pub fn rank3() -> CorankOneStructure {
    CorankOneStructure::new(exprs(&["-x2", "x1", "0"], 4), None).unwrap()
}

pub fn carnot_field(s: &CorankOneStructure) -> HorizontalField {
    let a = exprs(
        &[
            "x3^2*x5",
            "2*x2*x4*x6*(x6-2*x2*x3)",
            "2*x1*x3*x5+4*x2^3*x4*x6",
            "x2^2*x6*(x6-2*x4*x5)",
            "x1*x3^2+2*x2^2*x4^2*x6",
        ],
        6,
    );
    HorizontalField::new(s, a).unwrap()
}

pub fn carnot_u(x: &[f64]) -> f64 {
    x[0] * x[2] * x[2] * x[4] + x[1] * x[1] * x[3] * x[5] * x[5]
}

pub fn hyperbolic_factor(dim: usize) -> Expr {
    let r2 = (1..=dim).map(|i| format!("x{i}^2")).collect::<Vec<_>>().join("+");
    parse(&format!("2/(1-({r2}))"), dim).unwrap()
}

/// ∇_g u = x/p with base 0 on the cube [-half, half]^dim.
pub fn hyperbolic(dim: usize, half: f64) -> RiemannProblem {
    let p = hyperbolic_factor(dim);
    let g = MetricField::conformal(&p, dim);
    let v = VectorField::new((1..=dim).map(|i| Expr::var(i) / &p).collect());
    RiemannProblem::new(g, FieldInput::Vector(v), vec![0.0; dim], BoxDomain::cube(dim, -half, half)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Integer-coefficient polynomial with up to `terms` monomials of degree ≤ `deg` per variable.
pub fn random_poly(rng: &mut ChaCha8Rng, dim: usize, terms: usize, deg: i64) -> Expr {
    let mut f = Expr::zero();
    for _ in 0..rng.gen_range(1..=terms) {
        let mut t = Expr::int(rng.gen_range(-5..=5));
        for v in 1..=dim {
            t = t * Expr::var(v).powi(rng.gen_range(0..=deg));
        }
        f = f + t;
    }
    f.normalize()
}

pub fn random_point(rng: &mut ChaCha8Rng, dim: usize, half: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-half..half)).collect()
}

/// a_i = X_i u0.
pub fn horizontal_gradient(s: &CorankOneStructure, u0: &Expr) -> HorizontalField {
    HorizontalField::new(s, (1..=s.n()).map(|i| apply_x(s, i, u0)).collect()).unwrap()
}
