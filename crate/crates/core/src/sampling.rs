//! Box domains and seeded low-discrepancy point sets.
//!
//! Points come from the additive recurrence x_k = frac(s + k·α) with α the
//! powers of the inverse generalized golden ratio (R_d sequence) and s a
//! random shift drawn from a seeded ChaCha stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoxError {
    #[error("box has {got} intervals, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("interval {index} is not well formed: [{lo}, {hi}]")]
    Malformed { index: usize, lo: f64, hi: f64 },
    #[error("point lies outside the box at coordinate {index}")]
    OutsideBox { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(bounds: &[[f64; 2]]) -> Result<BoxDomain, BoxError> {
        for (index, &[lo, hi]) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(BoxError::Malformed { index: index + 1, lo, hi });
            }
        }
        Ok(BoxDomain {
            lo: bounds.iter().map(|b| b[0]).collect(),
            hi: bounds.iter().map(|b| b[1]).collect(),
        })
    }

    /// The cube [lo, hi]^dim.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> BoxDomain {
        BoxDomain::new(&vec![[lo, hi]; dim]).expect("cube bounds")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.first_violation(x).is_none()
    }

    pub fn first_violation(&self, x: &[f64]) -> Option<usize> {
        (0..self.dim()).find(|&i| x.get(i).is_none_or(|&v| !(self.lo[i] <= v && v <= self.hi[i])))
    }

    pub fn check_contains(&self, x: &[f64]) -> Result<(), BoxError> {
        if x.len() != self.dim() {
            return Err(BoxError::Dimension { expected: self.dim(), got: x.len() });
        }
        match self.first_violation(x) {
            Some(i) => Err(BoxError::OutsideBox { index: i + 1 }),
            None => Ok(()),
        }
    }

    /// Map a unit-cube point into the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter().enumerate().map(|(i, t)| self.lo[i] + (self.hi[i] - self.lo[i]) * t).collect()
    }

    /// Inner box shrunk towards the center by `factor` in (0, 1].
    pub fn shrink(&self, factor: f64) -> BoxDomain {
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let c = 0.5 * (self.lo[i] + self.hi[i]);
            let r = 0.5 * (self.hi[i] - self.lo[i]) * factor;
            lo.push(c - r);
            hi.push(c + r);
        }
        BoxDomain { lo, hi }
    }
}

/// Generator vector of the R_d sequence: powers of 1/φ_d where φ_d is the
/// positive root of x^(d+1) = x + 1.
fn generator(dim: usize) -> Vec<f64> {
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
    }
    (1..=dim).map(|k| (1.0 / phi).powi(k as i32).fract()).collect()
}

/// `count` points in the unit cube, deterministic in `seed`.
pub fn unit_lattice(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let alpha = generator(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    (1..=count)
        .map(|k| {
            (0..dim)
                .map(|i| (shift[i] + k as f64 * alpha[i]).fract())
                .collect()
        })
        .collect()
}

/// Low-discrepancy points in `domain`.
pub fn box_points(domain: &BoxDomain, count: usize, seed: u64) -> Vec<Vec<f64>> {
    unit_lattice(domain.dim(), count, seed).iter().map(|u| domain.from_unit(u)).collect()
}

/// Points in the Euclidean ball of radius `radius` centered at the origin,
/// by radial rescaling of lattice points in the unit cube.
pub fn ball_points(dim: usize, radius: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            // rejection sampling from the enclosing cube
            loop {
                let p: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let r2: f64 = p.iter().map(|v| v * v).sum();
                if r2 <= 1.0 && r2 > 0.0 {
                    break p.into_iter().map(|v| v * radius).collect();
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_in_seed() {
        let b = BoxDomain::cube(3, -1.0, 1.0);
        assert_eq!(box_points(&b, 10, 7), box_points(&b, 10, 7));
        assert_ne!(box_points(&b, 10, 7), box_points(&b, 10, 8));
    }

    #[test]
    fn points_stay_in_box() {
        let b = BoxDomain::new(&[[0.0, 1.0], [-3.0, -2.0], [5.0, 9.0]]).unwrap();
        for p in box_points(&b, 200, 1) {
            assert!(b.contains(&p));
        }
    }

    #[test]
    fn one_dimensional_points_are_well_spread() {
        let mut pts: Vec<f64> = unit_lattice(1, 64, 3).into_iter().map(|p| p[0]).collect();
        pts.sort_by(f64::total_cmp);
        let max_gap = pts.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        assert!(max_gap < 3.0 / 64.0, "{max_gap}");
    }

    #[test]
    fn generator_solves_defining_equation() {
        for d in 1..6 {
            let g = generator(d);
            let phi = 1.0 / g[0];
            assert!((phi.powi(d as i32 + 1) - phi - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn malformed_boxes_rejected() {
        assert!(BoxDomain::new(&[[1.0, 1.0]]).is_err());
        assert!(BoxDomain::new(&[[0.0, f64::NAN]]).is_err());
        let b = BoxDomain::cube(2, 0.0, 1.0);
        assert_eq!(b.check_contains(&[0.5, 2.0]), Err(BoxError::OutsideBox { index: 2 }));
    }

    #[test]
    fn ball_points_inside_radius() {
        for p in ball_points(3, 0.9, 100, 5) {
            assert!(p.iter().map(|v| v * v).sum::<f64>().sqrt() <= 0.9 + 1e-15);
        }
    }
}
