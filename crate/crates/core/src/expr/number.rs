use std::cmp::Ordering;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational constant with a cached double-precision image.
///
/// Equality, ordering and hashing use the exact value only.
#[derive(Clone, Debug)]
pub struct Number {
    exact: BigRational,
    approx: f64,
}

impl Number {
    pub fn new(exact: BigRational) -> Number {
        let approx = ratio_to_f64(&exact);
        Number { exact, approx }
    }

    pub fn from_i64(value: i64) -> Number {
        Number::new(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn from_f64(value: f64) -> Number {
        let exact = BigRational::from_float(value).expect("finite constant");
        Number { exact, approx: value }
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    pub fn to_f64(&self) -> f64 {
        self.approx
    }

    pub fn is_zero(&self) -> bool {
        self.exact.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.exact.is_one()
    }

    pub fn is_integer(&self) -> bool {
        self.exact.is_integer()
    }

    pub fn is_negative(&self) -> bool {
        self.exact.is_negative()
    }

    /// The value as a machine integer, when it is one and fits.
    pub fn as_i64(&self) -> Option<i64> {
        if self.exact.is_integer() {
            self.exact.to_integer().to_i64()
        } else {
            None
        }
    }
}

/// Correctly scaled conversion; `BigRational::to_f64` handles huge
/// numerators/denominators without overflowing to NaN.
pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let n = r.numer().to_f64().unwrap_or(f64::NAN);
    let d = r.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        self.exact == other.exact
    }
}

impl Eq for Number {}

impl PartialOrd for Number {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Number {
    fn cmp(&self, other: &Self) -> Ordering {
        self.exact.cmp(&other.exact)
    }
}

impl Hash for Number {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.exact.hash(state)
    }
}
