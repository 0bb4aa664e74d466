use std::fmt;

use thiserror::Error;

use super::{Expr, Func, Node};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainErrorKind {
    DivisionByZero,
    LogOfNonPositive,
    SqrtOfNegative,
    NegativeBaseFractionalPower,
    NonFinite,
    MissingCoordinate,
}

impl fmt::Display for DomainErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainErrorKind::DivisionByZero => "division by zero",
            DomainErrorKind::LogOfNonPositive => "logarithm of a non-positive value",
            DomainErrorKind::SqrtOfNegative => "square root of a negative value",
            DomainErrorKind::NegativeBaseFractionalPower => "fractional power of a negative base",
            DomainErrorKind::NonFinite => "non-finite value",
            DomainErrorKind::MissingCoordinate => "point has too few coordinates",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} in `{subexpr}`")]
pub struct DomainError {
    pub kind: DomainErrorKind,
    pub subexpr: String,
}

impl DomainError {
    fn at(kind: DomainErrorKind, e: &Expr) -> DomainError {
        DomainError { kind, subexpr: e.to_string() }
    }
}

pub(super) fn eval(e: &Expr, x: &[f64]) -> Result<f64, DomainError> {
    use DomainErrorKind::*;
    let v = match e.node() {
        Node::Const(c) => return Ok(c.to_f64()),
        Node::Var(i) => {
            return x.get(i - 1).copied().ok_or_else(|| DomainError::at(MissingCoordinate, e));
        }
        Node::Neg(a) => -eval(a, x)?,
        Node::Sum(terms) => {
            let mut acc = 0.0;
            for t in terms {
                acc += eval(t, x)?;
            }
            acc
        }
        Node::Product(factors) => {
            let mut acc = 1.0;
            for f in factors {
                acc *= eval(f, x)?;
            }
            acc
        }
        Node::Quotient(a, b) => {
            let den = eval(b, x)?;
            if den == 0.0 {
                return Err(DomainError::at(DivisionByZero, e));
            }
            eval(a, x)? / den
        }
        Node::Pow(b, p) => {
            let base = eval(b, x)?;
            match p.as_constant().and_then(|c| c.as_i64()) {
                Some(k) if k.unsigned_abs() <= i32::MAX as u64 => {
                    if base == 0.0 && k < 0 {
                        return Err(DomainError::at(DivisionByZero, e));
                    }
                    base.powi(k as i32)
                }
                _ => {
                    let exponent = eval(p, x)?;
                    if base < 0.0 {
                        return Err(DomainError::at(NegativeBaseFractionalPower, e));
                    }
                    if base == 0.0 && exponent < 0.0 {
                        return Err(DomainError::at(DivisionByZero, e));
                    }
                    if exponent == 0.5 {
                        base.sqrt()
                    } else {
                        base.powf(exponent)
                    }
                }
            }
        }
        Node::Func(f, a) => {
            let arg = eval(a, x)?;
            match f {
                Func::Ln => {
                    if arg <= 0.0 {
                        return Err(DomainError::at(LogOfNonPositive, e));
                    }
                    arg.ln()
                }
                Func::Exp => arg.exp(),
                Func::Sqrt => {
                    if arg < 0.0 {
                        return Err(DomainError::at(SqrtOfNegative, e));
                    }
                    arg.sqrt()
                }
                Func::Sin => arg.sin(),
                Func::Cos => arg.cos(),
            }
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DomainError::at(NonFinite, e))
    }
}
