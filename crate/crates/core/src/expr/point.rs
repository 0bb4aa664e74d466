use std::ops::Deref;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PointError {
    #[error("point has {got} coordinates, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("coordinate {index} is not finite")]
    NonFinite { index: usize },
}

/// Finite coordinates in a chart of fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>, dim: usize) -> Result<Point, PointError> {
        if coords.len() != dim {
            return Err(PointError::Dimension { expected: dim, got: coords.len() });
        }
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return Err(PointError::NonFinite { index: i + 1 });
        }
        Ok(Point(coords))
    }

    pub fn origin(dim: usize) -> Point {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}
