use std::fmt::{self, Write};

use num_traits::Signed;

use super::{Expr, Node, Number};

// binding strength of the printed form; children below the required
// level get parenthesized
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn level(e: &Expr) -> u8 {
    match e.node() {
        Node::Sum(_) => SUM,
        Node::Product(_) | Node::Quotient(..) => PRODUCT,
        Node::Neg(_) => UNARY,
        Node::Pow(..) => POWER,
        Node::Const(c) if !c.is_integer() || c.is_negative() => ATOM,
        Node::Const(_) | Node::Var(_) | Node::Func(..) => ATOM,
    }
}

fn write_number(out: &mut String, c: &Number) {
    let r = c.exact();
    if r.is_integer() && !r.is_negative() {
        write!(out, "{}", r.numer()).unwrap();
    } else if r.is_integer() {
        write!(out, "({})", r.numer()).unwrap();
    } else {
        write!(out, "({}/{})", r.numer(), r.denom()).unwrap();
    }
}

fn write_at(out: &mut String, e: &Expr, min: u8) {
    if level(e) < min {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

/// A sum child of the form `-t` or `c*rest` with c < 0 prints as `- t`.
fn negated_term(e: &Expr) -> Option<Expr> {
    match e.node() {
        Node::Neg(inner) => Some(inner.clone()),
        Node::Const(c) if c.is_negative() => Some(Expr::constant(-c.exact().clone())),
        Node::Product(fs) => {
            let c = fs.first()?.as_constant()?;
            if !c.is_negative() {
                return None;
            }
            let abs = c.exact().abs();
            let mut rest: Vec<Expr> = Vec::with_capacity(fs.len());
            if abs != num_rational::BigRational::from_integer(1.into()) {
                rest.push(Expr::constant(abs));
            }
            rest.extend(fs[1..].iter().cloned());
            Some(Expr::product(rest))
        }
        _ => None,
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e.node() {
        Node::Const(c) => write_number(out, c),
        Node::Var(i) => write!(out, "x{i}").unwrap(),
        Node::Neg(a) => {
            out.push('-');
            write_at(out, a, POWER);
        }
        Node::Sum(terms) => {
            for (k, t) in terms.iter().enumerate() {
                match (k, negated_term(t)) {
                    (0, _) => write_at(out, t, SUM),
                    (_, Some(pos)) => {
                        out.push_str(" - ");
                        write_at(out, &pos, PRODUCT);
                    }
                    (_, None) => {
                        out.push_str(" + ");
                        write_at(out, t, PRODUCT);
                    }
                }
            }
        }
        Node::Product(factors) => {
            for (k, f) in factors.iter().enumerate() {
                if k > 0 {
                    out.push('*');
                }
                // a quotient is only safe as the leading factor: a*b/c == (a*b)/c
                let min = if k == 0 { PRODUCT } else { UNARY };
                write_at(out, f, min);
            }
        }
        Node::Quotient(a, b) => {
            write_at(out, a, PRODUCT);
            out.push('/');
            write_at(out, b, UNARY);
        }
        Node::Pow(b, x) => {
            write_at(out, b, ATOM);
            out.push('^');
            write_at(out, x, UNARY);
        }
        Node::Func(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_expr(out, a);
            out.push(')');
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_expr(&mut s, self);
        f.write_str(&s)
    }
}

impl Expr {
    /// LaTeX-flavoured rendering used by the `conditions` command.
    pub fn to_latex(&self) -> String {
        let mut out = String::new();
        latex(&mut out, self, 0);
        out
    }
}

fn latex(out: &mut String, e: &Expr, min: u8) {
    let wrap = level(e) < min;
    if wrap {
        out.push_str("\\left(");
    }
    match e.node() {
        Node::Const(c) => {
            let r = c.exact();
            if r.is_integer() {
                write!(out, "{}", r.numer()).unwrap();
            } else {
                let sign = if r.is_negative() { "-" } else { "" };
                write!(out, "{sign}\\frac{{{}}}{{{}}}", r.numer().abs(), r.denom()).unwrap();
            }
        }
        Node::Var(i) => write!(out, "x_{{{i}}}").unwrap(),
        Node::Neg(a) => {
            out.push('-');
            latex(out, a, POWER);
        }
        Node::Sum(terms) => {
            for (k, t) in terms.iter().enumerate() {
                match (k, negated_term(t)) {
                    (0, _) => latex(out, t, SUM),
                    (_, Some(pos)) => {
                        out.push_str(" - ");
                        latex(out, &pos, PRODUCT);
                    }
                    (_, None) => {
                        out.push_str(" + ");
                        latex(out, t, PRODUCT);
                    }
                }
            }
        }
        Node::Product(fs) => {
            for (k, f) in fs.iter().enumerate() {
                if k > 0 {
                    out.push_str(" \\, ");
                }
                latex(out, f, UNARY);
            }
        }
        Node::Quotient(a, b) => {
            out.push_str("\\frac{");
            latex(out, a, 0);
            out.push_str("}{");
            latex(out, b, 0);
            out.push('}');
        }
        Node::Pow(b, x) => {
            latex(out, b, ATOM);
            out.push_str("^{");
            latex(out, x, 0);
            out.push('}');
        }
        Node::Func(f, a) => {
            write!(out, "\\{}\\left(", f.name()).unwrap();
            latex(out, a, 0);
            out.push_str("\\right)");
        }
    }
    if wrap {
        out.push_str("\\right)");
    }
}
