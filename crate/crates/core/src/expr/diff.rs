use super::{Expr, Func, Node};

/// Raw partial derivative; the caller normalizes.
pub(super) fn diff(e: &Expr, i: usize) -> Expr {
    if !e.depends_on(i) {
        return Expr::zero();
    }
    match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Var(j) => {
            if *j == i {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Neg(a) => -diff(a, i),
        Node::Sum(terms) => Expr::sum(
            terms.iter().filter(|t| t.depends_on(i)).map(|t| diff(t, i)).collect(),
        ),
        Node::Product(factors) => {
            let mut terms = Vec::new();
            for (k, f) in factors.iter().enumerate() {
                if !f.depends_on(i) {
                    continue;
                }
                let mut fs = factors.clone();
                fs[k] = diff(f, i);
                terms.push(Expr::product(fs));
            }
            Expr::sum(terms)
        }
        Node::Quotient(a, b) => {
            if !b.depends_on(i) {
                return diff(a, i) / b;
            }
            (diff(a, i) * b - a * diff(b, i)) / b.powi(2)
        }
        Node::Pow(b, p) => {
            if !p.depends_on(i) {
                // p * b^(p-1) * b'
                let reduced = b.pow(p - Expr::one());
                Expr::product(vec![p.clone(), reduced, diff(b, i)])
            } else {
                // b^p * (p' ln b + p b' / b)
                let log_part = diff(p, i) * b.ln();
                let base_part = if b.depends_on(i) {
                    Some(p * diff(b, i) / b)
                } else {
                    None
                };
                let inner = match base_part {
                    Some(bp) => log_part + bp,
                    None => log_part,
                };
                e * inner
            }
        }
        Node::Func(f, a) => {
            let da = diff(a, i);
            let outer = match f {
                Func::Ln => return da / a,
                Func::Exp => e.clone(),
                Func::Sqrt => return da / (Expr::int(2) * e),
                Func::Sin => a.cos(),
                Func::Cos => -a.sin(),
            };
            outer * da
        }
    }
}
