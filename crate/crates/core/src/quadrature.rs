//! Adaptive composite Gauss–Legendre quadrature.
//!
//! Each panel is integrated with a 15-point rule and compared against the
//! sum over its two halves; panels whose difference exceeds their share of
//! the tolerance are halved again.

use std::sync::OnceLock;

use thiserror::Error;

use crate::expr::DomainError;

pub const GAUSS_POINTS: usize = 15;
pub const MAX_PANELS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("quadrature did not converge within {panels} panels")]
    NoConvergence { panels: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Sum of |two-panel - one-panel| over accepted panels.
    pub error: f64,
    pub panels: usize,
}

impl Estimate {
    pub fn zero() -> Estimate {
        Estimate { value: 0.0, error: 0.0, panels: 0 }
    }

    pub fn combine(self, other: Estimate) -> Estimate {
        Estimate {
            value: self.value + other.value,
            error: self.error + other.error,
            panels: self.panels + other.panels,
        }
    }
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1],
/// by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GAUSS_POINTS))
}

/// Fixed 15-point rule on [a, b].
pub fn gauss15<F>(f: &mut F, a: f64, b: f64) -> Result<f64, DomainError>
where
    F: FnMut(f64) -> Result<f64, DomainError>,
{
    let (nodes, weights) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        acc += w * f(mid + half * x)?;
    }
    Ok(acc * half)
}

/// Pairwise summation in fixed tree order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

/// Integrate `f` over [a, b] to absolute tolerance `tol`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Estimate, QuadratureError>
where
    F: FnMut(f64) -> Result<f64, DomainError>,
{
    if a == b {
        return Ok(Estimate::zero());
    }
    let width = b - a;
    let mut accepted: Vec<f64> = Vec::new();
    let mut errors: Vec<f64> = Vec::new();
    let mut evaluated = 1usize;
    // depth-first, left panel first: accepted values come out in order
    let whole = gauss15(&mut f, a, b)?;
    let mut stack = vec![(a, b, whole)];
    while let Some((lo, hi, coarse)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = gauss15(&mut f, lo, mid)?;
        let right = gauss15(&mut f, mid, hi)?;
        evaluated += 2;
        let fine = left + right;
        let diff = (fine - coarse).abs();
        let share = tol * ((hi - lo) / width).abs();
        if diff <= share || diff <= 4.0 * f64::EPSILON * fine.abs() {
            accepted.push(fine);
            errors.push(diff);
        } else {
            // a panel this narrow cannot be refined meaningfully
            let unresolvable = (hi - lo).abs() <= 1e-14 * width.abs();
            if unresolvable || evaluated + stack.len() * 2 > MAX_PANELS {
                return Err(QuadratureError::NoConvergence { panels: evaluated });
            }
            stack.push((mid, hi, right));
            stack.push((lo, mid, left));
        }
    }
    Ok(Estimate { value: pairwise_sum(&accepted), error: pairwise_sum(&errors), panels: accepted.len() })
}
