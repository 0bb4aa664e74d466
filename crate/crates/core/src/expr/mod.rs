//! Scalar expressions over positional real variables `x1..xm`.
//!
//! An [`Expr`] is an immutable, reference-counted tree. Trees built by the
//! parser or by the arithmetic operators are *raw*; [`Expr::normalize`]
//! maps any tree to a canonical form in which polynomial parts are expanded
//! and collected with exact rational coefficients.

mod diff;
mod display;
mod eval;
mod normal;
mod number;
mod parse;
mod point;

use std::fmt;
use std::ops;
use std::sync::Arc;

use num_rational::BigRational;

pub use eval::{DomainError, DomainErrorKind};
pub use number::Number;
pub use parse::{parse, ParseError};
pub use point::{Point, PointError};

/// Unary functions understood by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Ln,
    Exp,
    Sqrt,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Ln => "ln",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "ln" => Func::Ln,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }
}

/// Node kinds. Variable indices are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Const(Number),
    Var(usize),
    Neg(Expr),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Quotient(Expr, Expr),
    Pow(Expr, Expr),
    Func(Func, Expr),
}

#[derive(Debug)]
struct Inner {
    node: Node,
    // bit k set <=> x_{k+1} occurs; bit 63 doubles as "some index >= 64"
    vars: u64,
}

/// Immutable expression tree. Cloning is cheap.
#[derive(Clone)]
pub struct Expr(Arc<Inner>);

fn var_bit(index: usize) -> u64 {
    1u64 << (index.saturating_sub(1)).min(63)
}

impl Expr {
    pub fn new(node: Node) -> Expr {
        let vars = match &node {
            Node::Const(_) => 0,
            Node::Var(i) => var_bit(*i),
            Node::Neg(a) | Node::Func(_, a) => a.0.vars,
            Node::Sum(xs) | Node::Product(xs) => xs.iter().fold(0, |m, x| m | x.0.vars),
            Node::Quotient(a, b) | Node::Pow(a, b) => a.0.vars | b.0.vars,
        };
        Expr(Arc::new(Inner { node, vars }))
    }

    pub fn node(&self) -> &Node {
        &self.0.node
    }

    pub fn constant(value: BigRational) -> Expr {
        Expr::new(Node::Const(Number::new(value)))
    }

    pub fn int(value: i64) -> Expr {
        Expr::constant(BigRational::from_integer(value.into()))
    }

    /// Exact rational image of a finite float.
    ///
    /// Panics on NaN or infinity.
    pub fn from_f64(value: f64) -> Expr {
        Expr::new(Node::Const(Number::from_f64(value)))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(index: usize) -> Expr {
        assert!(index >= 1, "variables are 1-based");
        Expr::new(Node::Var(index))
    }

    pub fn sum(terms: Vec<Expr>) -> Expr {
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.into_iter().next().unwrap(),
            _ => Expr::new(Node::Sum(terms)),
        }
    }

    pub fn product(factors: Vec<Expr>) -> Expr {
        match factors.len() {
            0 => Expr::one(),
            1 => factors.into_iter().next().unwrap(),
            _ => Expr::new(Node::Product(factors)),
        }
    }

    pub fn pow(&self, exponent: Expr) -> Expr {
        Expr::new(Node::Pow(self.clone(), exponent))
    }

    pub fn powi(&self, exponent: i64) -> Expr {
        self.pow(Expr::int(exponent))
    }

    pub fn apply(func: Func, arg: Expr) -> Expr {
        Expr::new(Node::Func(func, arg))
    }

    pub fn ln(&self) -> Expr {
        Expr::apply(Func::Ln, self.clone())
    }

    pub fn exp(&self) -> Expr {
        Expr::apply(Func::Exp, self.clone())
    }

    pub fn sqrt(&self) -> Expr {
        Expr::apply(Func::Sqrt, self.clone())
    }

    pub fn sin(&self) -> Expr {
        Expr::apply(Func::Sin, self.clone())
    }

    pub fn cos(&self) -> Expr {
        Expr::apply(Func::Cos, self.clone())
    }

    /// The constant value, if this node is a constant.
    pub fn as_constant(&self) -> Option<&Number> {
        match self.node() {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.node(), Node::Const(_))
    }

    /// Structural check for the constant zero (no simplification).
    pub fn is_const_zero(&self) -> bool {
        self.as_constant().is_some_and(Number::is_zero)
    }

    /// Whether `x_index` occurs anywhere in the tree.
    pub fn depends_on(&self, index: usize) -> bool {
        if self.0.vars & var_bit(index) == 0 {
            return false;
        }
        if index < 63 {
            return true;
        }
        self.contains_var_slow(index)
    }

    fn contains_var_slow(&self, index: usize) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(i) => *i == index,
            Node::Neg(a) | Node::Func(_, a) => a.contains_var_slow(index),
            Node::Sum(xs) | Node::Product(xs) => xs.iter().any(|x| x.contains_var_slow(index)),
            Node::Quotient(a, b) | Node::Pow(a, b) => {
                a.contains_var_slow(index) || b.contains_var_slow(index)
            }
        }
    }

    /// Largest variable index occurring in the tree (0 for constants).
    pub fn max_var(&self) -> usize {
        match self.node() {
            Node::Const(_) => 0,
            Node::Var(i) => *i,
            Node::Neg(a) | Node::Func(_, a) => a.max_var(),
            Node::Sum(xs) | Node::Product(xs) => xs.iter().map(Expr::max_var).max().unwrap_or(0),
            Node::Quotient(a, b) | Node::Pow(a, b) => a.max_var().max(b.max_var()),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + match self.node() {
            Node::Const(_) | Node::Var(_) => 0,
            Node::Neg(a) | Node::Func(_, a) => a.size(),
            Node::Sum(xs) | Node::Product(xs) => xs.iter().map(Expr::size).sum(),
            Node::Quotient(a, b) | Node::Pow(a, b) => a.size() + b.size(),
        }
    }

    /// Canonical form: constants folded, sums and products flattened and
    /// sorted, integer powers of sums expanded, like terms collected.
    pub fn normalize(&self) -> Expr {
        normal::normalize(self)
    }

    /// True when the expression is provably identically zero.
    ///
    /// Complete for rational functions of the variables; for expressions with
    /// transcendental parts a `false` answer is inconclusive.
    pub fn is_identically_zero(&self) -> bool {
        normal::is_identically_zero(self)
    }

    /// Exact partial derivative with respect to `x_index`, normalized.
    pub fn diff(&self, index: usize) -> Expr {
        diff::diff(self, index).normalize()
    }

    /// Partial derivative without normalizing the result.
    pub fn diff_raw(&self, index: usize) -> Expr {
        diff::diff(self, index)
    }

    /// Value at `x` (x[0] is `x1`).
    pub fn eval(&self, x: &[f64]) -> Result<f64, DomainError> {
        eval::eval(self, x)
    }

    /// Substitute variables: `x_i` becomes `replacements[i-1]`.
    /// Indices beyond the slice are left untouched.
    pub fn substitute(&self, replacements: &[Expr]) -> Expr {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(i) => replacements.get(i - 1).cloned().unwrap_or_else(|| self.clone()),
            Node::Neg(a) => -a.substitute(replacements),
            Node::Sum(xs) => Expr::new(Node::Sum(xs.iter().map(|x| x.substitute(replacements)).collect())),
            Node::Product(xs) => {
                Expr::new(Node::Product(xs.iter().map(|x| x.substitute(replacements)).collect()))
            }
            Node::Quotient(a, b) => {
                Expr::new(Node::Quotient(a.substitute(replacements), b.substitute(replacements)))
            }
            Node::Pow(a, b) => a.substitute(replacements).pow(b.substitute(replacements)),
            Node::Func(f, a) => Expr::apply(*f, a.substitute(replacements)),
        }
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.node == other.0.node
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return std::cmp::Ordering::Equal;
        }
        self.0.node.cmp(&other.0.node)
    }
}

impl std::hash::Hash for Expr {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.node.hash(state)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl From<i64> for Expr {
    fn from(value: i64) -> Self {
        Expr::int(value)
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $build:expr) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $build(self, rhs)
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $build(self.clone(), rhs.clone())
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $build(self, rhs.clone())
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $build(self.clone(), rhs)
            }
        }
    };
}

binary_op!(Add, add, |a, b| Expr::new(Node::Sum(vec![a, b])));
binary_op!(Sub, sub, |a, b: Expr| Expr::new(Node::Sum(vec![a, -b])));
binary_op!(Mul, mul, |a, b| Expr::new(Node::Product(vec![a, b])));
binary_op!(Div, div, |a, b| Expr::new(Node::Quotient(a, b)));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::new(Node::Neg(self))
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::new(Node::Neg(self.clone()))
    }
}

#[cfg(test)]
mod tests;
