use std::collections::HashMap;

use super::scalar::{ExprKind, ScalarExpr};

/// Partial derivative with respect to `var`, memoized per node so shared
/// subtrees are differentiated once.
pub fn differentiate(e: &ScalarExpr, var: &str) -> ScalarExpr {
    let mut memo = HashMap::new();
    diff_memo(e, var, &mut memo)
}

pub(crate) fn diff_memo(e: &ScalarExpr, var: &str, memo: &mut HashMap<usize, ScalarExpr>) -> ScalarExpr {
    if let Some(d) = memo.get(&e.node_id()) {
        return d.clone();
    }
    let d = match e.kind() {
        ExprKind::Var(name) => {
            if &**name == var {
                ScalarExpr::one()
            } else {
                ScalarExpr::zero()
            }
        }
        ExprKind::Pi | ExprKind::Const(_) | ExprKind::Float(_) => ScalarExpr::zero(),
        ExprKind::Neg(a) => diff_memo(a, var, memo).neg(),
        ExprKind::Add(a, b) => diff_memo(a, var, memo).add(&diff_memo(b, var, memo)),
        ExprKind::Sub(a, b) => diff_memo(a, var, memo).sub(&diff_memo(b, var, memo)),
        ExprKind::Mul(a, b) => {
            let (da, db) = (diff_memo(a, var, memo), diff_memo(b, var, memo));
            da.mul(b).add(&a.mul(&db))
        }
        ExprKind::Div(a, b) => {
            let (da, db) = (diff_memo(a, var, memo), diff_memo(b, var, memo));
            if db.is_zero() {
                da.div(b)
            } else {
                da.mul(b).sub(&a.mul(&db)).div(&b.mul(b))
            }
        }
        ExprKind::Pow(a, b) => {
            let (da, db) = (diff_memo(a, var, memo), diff_memo(b, var, memo));
            if db.is_zero() {
                // d(a^c) = c a^(c-1) da
                b.mul(&a.pow(&b.sub(&ScalarExpr::one()))).mul(&da)
            } else {
                // d(a^b) = a^b (db ln a + b da / a)
                e.mul(&db.mul(&a.ln()).add(&b.mul(&da).div(a)))
            }
        }
        ExprKind::Sqrt(a) => {
            let da = diff_memo(a, var, memo);
            da.div(&ScalarExpr::int(2).mul(e))
        }
        ExprKind::Sin(a) => a.cos().mul(&diff_memo(a, var, memo)),
        ExprKind::Cos(a) => a.sin().mul(&diff_memo(a, var, memo)).neg(),
        ExprKind::Exp(a) => e.mul(&diff_memo(a, var, memo)),
        ExprKind::Ln(a) => diff_memo(a, var, memo).div(a),
    };
    memo.insert(e.node_id(), d.clone());
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::eval::eval_with;

    fn central(e: &ScalarExpr, x: f64) -> f64 {
        let h = 1e-6;
        let vars = vec!["x".to_string()];
        (eval_with(e, &vars, &[x + h]).unwrap() - eval_with(e, &vars, &[x - h]).unwrap()) / (2.0 * h)
    }

    #[test]
    fn matches_finite_differences() {
        let x = ScalarExpr::var("x");
        let exprs = vec![
            x.sin().mul(&x.cos()),
            x.mul(&x).exp().div(&x.add(&ScalarExpr::int(3))),
            x.mul(&x).add(&ScalarExpr::one()).sqrt().ln(),
            x.add(&ScalarExpr::int(2)).pow(&ScalarExpr::int(3)),
            x.add(&ScalarExpr::int(2)).pow(&x),
            x.div(&ScalarExpr::int(2)).cos().neg(),
        ];
        let vars = vec!["x".to_string()];
        for e in &exprs {
            let d = differentiate(e, "x");
            for &p in &[0.3, 0.9, 1.7] {
                let exact = eval_with(&d, &vars, &[p]).unwrap();
                let approx = central(e, p);
                assert!((exact - approx).abs() <= 1e-6 * (1.0 + exact.abs()), "{e}: {exact} vs {approx}");
            }
        }
    }

    #[test]
    fn constant_has_zero_derivative() {
        let e = ScalarExpr::var("y").sin();
        assert!(differentiate(&e, "x").is_zero());
    }
}
