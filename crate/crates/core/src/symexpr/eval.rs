use std::collections::HashMap;

use super::scalar::{rational_to_f64, ExprKind, ScalarExpr};

/// Reason a tree-walking evaluation failed.
#[derive(Clone, Debug, PartialEq)]
pub enum DomainError {
    UnboundVariable(String),
    LogOfNonPositive(f64),
    SqrtOfNegative(f64),
    DivisionByZero,
    NegativeBaseFractionalPower(f64, f64),
}

impl std::fmt::Display for DomainError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DomainError::UnboundVariable(v) => write!(f, "unbound variable `{v}`"),
            DomainError::LogOfNonPositive(x) => write!(f, "ln of non-positive value {x}"),
            DomainError::SqrtOfNegative(x) => write!(f, "sqrt of negative value {x}"),
            DomainError::DivisionByZero => write!(f, "division by zero"),
            DomainError::NegativeBaseFractionalPower(b, e) => write!(f, "{b} raised to fractional power {e}"),
        }
    }
}

/// Reference evaluator in 64-bit floats with per-node memoization.
///
/// One evaluator serves any number of expressions under the same binding,
/// so shared subtrees across matrix elements are computed once.
pub struct Evaluator<'a> {
    env: &'a HashMap<String, f64>,
    memo: HashMap<usize, f64>,
    // Keeps memoized nodes alive so their addresses are not reused.
    pinned: Vec<ScalarExpr>,
}

impl<'a> Evaluator<'a> {
    pub fn new(env: &'a HashMap<String, f64>) -> Self {
        Evaluator { env, memo: HashMap::new(), pinned: Vec::new() }
    }

    pub fn eval(&mut self, e: &ScalarExpr) -> Result<f64, DomainError> {
        if let Some(v) = self.memo.get(&e.node_id()) {
            return Ok(*v);
        }
        let v = match e.kind() {
            ExprKind::Var(name) => {
                *self.env.get(&**name).ok_or_else(|| DomainError::UnboundVariable(name.to_string()))?
            }
            ExprKind::Pi => std::f64::consts::PI,
            ExprKind::Const(c) => rational_to_f64(c),
            ExprKind::Float(bits) => f64::from_bits(*bits),
            ExprKind::Neg(a) => -self.eval(a)?,
            ExprKind::Add(a, b) => self.eval(a)? + self.eval(b)?,
            ExprKind::Sub(a, b) => self.eval(a)? - self.eval(b)?,
            ExprKind::Mul(a, b) => self.eval(a)? * self.eval(b)?,
            ExprKind::Div(a, b) => {
                let (x, y) = (self.eval(a)?, self.eval(b)?);
                if y == 0.0 {
                    return Err(DomainError::DivisionByZero);
                }
                x / y
            }
            ExprKind::Pow(a, b) => {
                let (x, y) = (self.eval(a)?, self.eval(b)?);
                if x < 0.0 && y.fract() != 0.0 {
                    return Err(DomainError::NegativeBaseFractionalPower(x, y));
                }
                x.powf(y)
            }
            ExprKind::Sqrt(a) => {
                let x = self.eval(a)?;
                if x < 0.0 {
                    return Err(DomainError::SqrtOfNegative(x));
                }
                x.sqrt()
            }
            ExprKind::Sin(a) => self.eval(a)?.sin(),
            ExprKind::Cos(a) => self.eval(a)?.cos(),
            ExprKind::Exp(a) => self.eval(a)?.exp(),
            ExprKind::Ln(a) => {
                let x = self.eval(a)?;
                if x <= 0.0 {
                    return Err(DomainError::LogOfNonPositive(x));
                }
                x.ln()
            }
        };
        self.memo.insert(e.node_id(), v);
        self.pinned.push(e.clone());
        Ok(v)
    }
}

/// Evaluate a single expression under `env`.
pub fn eval_scalar(e: &ScalarExpr, env: &HashMap<String, f64>) -> Result<f64, DomainError> {
    Evaluator::new(env).eval(e)
}

/// Evaluate with positional values for `vars`.
pub fn eval_with(e: &ScalarExpr, vars: &[String], values: &[f64]) -> Result<f64, DomainError> {
    let env: HashMap<String, f64> = vars.iter().cloned().zip(values.iter().copied()).collect();
    eval_scalar(e, &env)
}
