//! Canonical form.
//!
//! An expression is brought to a sum of terms `c * a1^e1 * ... * ak^ek`
//! with exact rational coefficients `c` and exponents `ei`. Atoms are
//! variables, functions of normalized arguments, and *bases*: normalized
//! subexpressions that carry a negative or fractional exponent (for
//! example the denominator `1 - x1^2 - x2^2`). A base whose exponent
//! becomes a positive integer is expanded, so polynomials always end up
//! fully expanded and collected.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Expr, Func, Node};

type Q = BigRational;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Atom {
    Var(usize),
    Base(Expr),
    Func(Func, Expr),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
struct Monomial(Vec<(Atom, Q)>);

impl Monomial {
    fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i].clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j].clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let e = &a[i].1 + &b[j].1;
                    if !e.is_zero() {
                        out.push((a[i].0.clone(), e));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    fn pow(&self, k: &Q) -> Monomial {
        Monomial(self.0.iter().map(|(a, e)| (a.clone(), e * k)).collect())
    }

    /// Bases that must be multiplied out: positive integer exponents, or
    /// integer powers of nonzero constants.
    fn needs_expansion(&self) -> bool {
        self.0.iter().any(|(a, e)| expandable(a, e))
    }
}

fn expandable(atom: &Atom, e: &Q) -> bool {
    match atom {
        Atom::Base(b) => e.is_integer() && (e.is_positive() || b.as_constant().is_some_and(|c| !c.is_zero())),
        _ => false,
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct Poly(BTreeMap<Monomial, Q>);

impl Poly {
    fn zero() -> Poly {
        Poly::default()
    }

    fn constant(c: Q) -> Poly {
        let mut p = Poly::zero();
        p.add_term(Monomial::default(), c);
        p
    }

    fn one() -> Poly {
        Poly::constant(Q::one())
    }

    fn atom(atom: Atom, e: Q) -> Poly {
        term_poly(Q::one(), Monomial(vec![(atom, e)]))
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.0.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get() + &c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    fn add_assign(&mut self, other: &Poly) {
        for (m, c) in &other.0 {
            self.add_term(m.clone(), c.clone());
        }
    }

    fn scale(&self, k: &Q) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, c)| (m.clone(), c * k)).collect())
    }

    fn neg(&self) -> Poly {
        Poly(self.0.iter().map(|(m, c)| (m.clone(), -c)).collect())
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &other.0 {
                let m = ma.mul(mb);
                let c = ca * cb;
                if m.needs_expansion() {
                    out.add_assign(&term_poly(c, m));
                } else {
                    out.add_term(m, c);
                }
            }
        }
        out
    }

    fn single_term(&self) -> Option<(&Monomial, &Q)> {
        if self.0.len() == 1 {
            self.0.iter().next()
        } else {
            None
        }
    }

    fn as_constant(&self) -> Option<Q> {
        if self.is_zero() {
            return Some(Q::zero());
        }
        match self.single_term() {
            Some((m, c)) if m.0.is_empty() => Some(c.clone()),
            _ => None,
        }
    }

    fn pow_int(&self, k: i64) -> Poly {
        if k == 0 {
            return Poly::one();
        }
        if k > 0 {
            let mut result = Poly::one();
            let mut base = self.clone();
            let mut n = k as u64;
            while n > 0 {
                if n & 1 == 1 {
                    result = result.mul(&base);
                }
                n >>= 1;
                if n > 0 {
                    base = base.mul(&base);
                }
            }
            return result;
        }
        if self.is_zero() {
            return Poly::atom(Atom::Base(Expr::zero()), Q::from_integer(k.into()));
        }
        let kq = Q::from_integer(k.into());
        if let Some((m, c)) = self.single_term() {
            return term_poly(rational_powi(c, k), m.pow(&kq));
        }
        let lc = self.0.values().next().unwrap().clone();
        let monic = self.scale(&lc.recip());
        Poly::atom(Atom::Base(to_expr(&monic)), kq).scale(&rational_powi(&lc, k))
    }

    fn pow(&self, q: &Q) -> Poly {
        if q.is_integer() {
            if let Some(k) = q.to_integer().to_i64() {
                return self.pow_int(k);
            }
        }
        if let Some(c) = self.as_constant() {
            if let Some(r) = exact_rational_power(&c, q) {
                return Poly::constant(r);
            }
            return Poly::atom(Atom::Base(Expr::constant(c)), q.clone());
        }
        if let Some((m, c)) = self.single_term() {
            if c.is_one() && m.0.len() == 1 {
                if let (Atom::Var(i), e) = &m.0[0] {
                    // (x^e)^q = x^(e q) holds on the domain when x^e is only
                    // defined for x >= 0, or is odd (x^e >= 0 forces x >= 0)
                    let odd = e.is_integer() && e.to_integer() % BigInt::from(2) != BigInt::zero();
                    if !e.is_integer() || odd {
                        return Poly::atom(Atom::Var(*i), e * q);
                    }
                }
            }
        }
        Poly::atom(Atom::Base(to_expr(self)), q.clone())
    }
}

fn rational_powi(c: &Q, k: i64) -> Q {
    let mut result = Q::one();
    let mut base = if k < 0 { c.recip() } else { c.clone() };
    let mut n = k.unsigned_abs();
    while n > 0 {
        if n & 1 == 1 {
            result *= &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

/// `c^q` when it is rational (c > 0, perfect roots), otherwise `None`.
fn exact_rational_power(c: &Q, q: &Q) -> Option<Q> {
    if !c.is_positive() {
        return None;
    }
    let root = q.denom().to_u32()?;
    let num = c.numer();
    let den = c.denom();
    let rn = num.nth_root(root);
    let rd = den.nth_root(root);
    if num_traits::pow(rn.clone(), root as usize) != *num || num_traits::pow(rd.clone(), root as usize) != *den {
        return None;
    }
    let k = q.numer().to_i64()?;
    Some(rational_powi(&Q::new(rn, rd), k))
}

/// `c * m` with pending bases multiplied out.
fn term_poly(c: Q, m: Monomial) -> Poly {
    if c.is_zero() {
        return Poly::zero();
    }
    if !m.needs_expansion() {
        let mut p = Poly::zero();
        p.add_term(m, c);
        return p;
    }
    let mut kept = Vec::new();
    let mut pending = Vec::new();
    for (a, e) in m.0 {
        if expandable(&a, &e) {
            pending.push((a, e));
        } else {
            kept.push((a, e));
        }
    }
    let mut result = Poly::zero();
    result.add_term(Monomial(kept), c);
    for (a, e) in pending {
        let Atom::Base(b) = a else { unreachable!() };
        let k = e.to_integer().to_i64().expect("exponent fits in i64");
        result = result.mul(&to_poly(&b).pow_int(k));
    }
    result
}

fn func_poly(f: Func, arg: Poly) -> Poly {
    if f == Func::Sqrt {
        return arg.pow(&Q::new(1.into(), 2.into()));
    }
    if let Some(c) = arg.as_constant() {
        match f {
            Func::Ln if c.is_one() => return Poly::zero(),
            Func::Exp | Func::Cos if c.is_zero() => return Poly::one(),
            Func::Sin if c.is_zero() => return Poly::zero(),
            _ => {}
        }
    }
    let arg_expr = to_expr(&arg);
    if let Node::Func(inner, x) = arg_expr.node() {
        match (f, inner) {
            (Func::Ln, Func::Exp) | (Func::Exp, Func::Ln) => return to_poly(x),
            _ => {}
        }
    }
    Poly::atom(Atom::Func(f, arg_expr), Q::one())
}

fn to_poly(e: &Expr) -> Poly {
    match e.node() {
        Node::Const(c) => Poly::constant(c.exact().clone()),
        Node::Var(i) => Poly::atom(Atom::Var(*i), Q::one()),
        Node::Neg(a) => to_poly(a).neg(),
        Node::Sum(terms) => {
            let mut acc = Poly::zero();
            for t in terms {
                acc.add_assign(&to_poly(t));
            }
            acc
        }
        Node::Product(factors) => {
            let mut acc = Poly::one();
            for f in factors {
                if acc.is_zero() {
                    break;
                }
                acc = acc.mul(&to_poly(f));
            }
            acc
        }
        Node::Quotient(a, b) => {
            let num = to_poly(a);
            if num.is_zero() {
                // 0/b stays 0 even when b vanishes somewhere
                return num;
            }
            num.mul(&to_poly(b).pow_int(-1))
        }
        Node::Pow(b, p) => {
            let exponent = to_poly(p);
            match exponent.as_constant() {
                Some(q) => to_poly(b).pow(&q),
                None => {
                    // b^p = exp(p ln b)
                    let log = func_poly(Func::Ln, to_poly(b));
                    func_poly(Func::Exp, exponent.mul(&log))
                }
            }
        }
        Node::Func(f, a) => func_poly(*f, to_poly(a)),
    }
}

fn atom_expr(a: &Atom) -> Expr {
    match a {
        Atom::Var(i) => Expr::var(*i),
        Atom::Base(b) => b.clone(),
        Atom::Func(f, x) => Expr::apply(*f, x.clone()),
    }
}

fn to_expr(p: &Poly) -> Expr {
    let mut terms = Vec::with_capacity(p.0.len());
    for (m, c) in &p.0 {
        let mut factors = Vec::with_capacity(m.0.len() + 1);
        for (a, e) in &m.0 {
            let base = atom_expr(a);
            factors.push(if e.is_one() { base } else { base.pow(Expr::constant(e.clone())) });
        }
        let term = if factors.is_empty() {
            Expr::constant(c.clone())
        } else if c.is_one() {
            Expr::product(factors)
        } else {
            factors.insert(0, Expr::constant(c.clone()));
            Expr::new(Node::Product(factors))
        };
        terms.push(term);
    }
    Expr::sum(terms)
}

pub(super) fn normalize(e: &Expr) -> Expr {
    to_expr(&to_poly(e))
}

pub(super) fn is_identically_zero(e: &Expr) -> bool {
    let p = to_poly(e);
    if p.is_zero() {
        return true;
    }
    // clear integer denominators and look at the numerator
    let mut lowest: BTreeMap<Atom, Q> = BTreeMap::new();
    for m in p.0.keys() {
        for (a, e) in &m.0 {
            if e.is_integer() && e.is_negative() && !matches!(a, Atom::Func(..)) {
                let slot = lowest.entry(a.clone()).or_insert_with(Q::zero);
                if e < slot {
                    *slot = e.clone();
                }
            }
        }
    }
    if lowest.is_empty() {
        return false;
    }
    let multiplier = Monomial(lowest.into_iter().map(|(a, e)| (a, -e)).collect());
    let mut numerator = Poly::zero();
    for (m, c) in &p.0 {
        numerator.add_assign(&term_poly(c.clone(), m.mul(&multiplier)));
    }
    numerator.is_zero()
}
