use num_traits::CheckedAdd;

use super::ast::{BinOp, Expr, UnitaryDef};
use super::error::{Loc, ParseError, ParseErrorKind};
use crate::symexpr::{ComplexExpr, Rational, ScalarExpr, SymError, UnitaryExprMatrix};

enum Value {
    Scalar(ComplexExpr),
    Matrix { rows: usize, cols: usize, data: Vec<ComplexExpr> },
}

fn unsupported(loc: Loc, msg: impl Into<String>) -> ParseError {
    ParseError::new(ParseErrorKind::UnsupportedConstruct, loc, msg)
}

fn mismatch(loc: Loc, msg: impl Into<String>) -> ParseError {
    ParseError::new(ParseErrorKind::DimensionMismatch, loc, msg)
}

fn sym_err(loc: Loc, e: SymError) -> ParseError {
    unsupported(loc, e.to_string())
}

fn parse_constant(int: &str, frac: Option<&str>) -> ScalarExpr {
    let exact = (|| {
        let mut v = Rational::from_integer(int.parse::<i128>().ok()?);
        if let Some(frac) = frac {
            let digits = frac.parse::<i128>().ok()?;
            let scale = 10i128.checked_pow(u32::try_from(frac.len()).ok()?)?;
            v = v.checked_add(&Rational::new(digits, scale))?;
        }
        Some(v)
    })();
    match exact {
        Some(v) => ScalarExpr::constant(v),
        None => {
            let text = match frac {
                Some(f) => format!("{int}.{f}"),
                None => int.to_string(),
            };
            ScalarExpr::float(text.parse::<f64>().unwrap_or(f64::INFINITY))
        }
    }
}

fn cosh_sinh(b: &ScalarExpr) -> (ScalarExpr, ScalarExpr) {
    let (ep, en) = (b.exp(), b.neg().exp());
    let two = ScalarExpr::int(2);
    (ep.add(&en).div(&two), ep.sub(&en).div(&two))
}

fn complex_sin(z: &ComplexExpr) -> ComplexExpr {
    if z.is_real() {
        return ComplexExpr::real(z.re.sin());
    }
    let (ch, sh) = cosh_sinh(&z.im);
    ComplexExpr::new(z.re.sin().mul(&ch), z.re.cos().mul(&sh))
}

fn complex_cos(z: &ComplexExpr) -> ComplexExpr {
    if z.is_real() {
        return ComplexExpr::real(z.re.cos());
    }
    let (ch, sh) = cosh_sinh(&z.im);
    ComplexExpr::new(z.re.cos().mul(&ch), z.re.sin().mul(&sh).neg())
}

fn is_euler(e: &Expr) -> bool {
    matches!(e, Expr::Var(name, _) if name == "e")
}

fn scalar_pow(base_ast: &Expr, base: &ComplexExpr, exponent: &ComplexExpr, loc: Loc) -> Result<ComplexExpr, ParseError> {
    if is_euler(base_ast) {
        return Ok(exponent.exp());
    }
    base.pow(exponent).map_err(|e| sym_err(loc, e))
}

fn matmul(a: (usize, usize, &[ComplexExpr]), b: (usize, usize, &[ComplexExpr])) -> Vec<ComplexExpr> {
    crate::symexpr::matmul_elements(a.2, b.2, a.0, a.1, b.1)
}

struct Lowerer<'a> {
    params: &'a [String],
}

impl Lowerer<'_> {
    fn scalar(&self, e: &Expr, what: &str) -> Result<ComplexExpr, ParseError> {
        match self.value(e)? {
            Value::Scalar(z) => Ok(z),
            Value::Matrix { .. } => Err(unsupported(e.loc(), format!("{what} must be a scalar, found a matrix"))),
        }
    }

    fn value(&self, e: &Expr) -> Result<Value, ParseError> {
        match e {
            Expr::Var(name, _) => Ok(Value::Scalar(match name.as_str() {
                "i" => ComplexExpr::i(),
                "e" => ComplexExpr::real(ScalarExpr::one().exp()),
                "π" => ComplexExpr::real(ScalarExpr::pi()),
                _ => {
                    debug_assert!(self.params.contains(name));
                    ComplexExpr::real(ScalarExpr::var(name))
                }
            })),
            Expr::Const { int, frac, .. } => Ok(Value::Scalar(ComplexExpr::real(parse_constant(int, frac.as_deref())))),
            Expr::Call { name, args, loc } => {
                let mut zs = Vec::with_capacity(args.len());
                for a in args {
                    match self.value(a)? {
                        Value::Scalar(z) => zs.push(z),
                        Value::Matrix { .. } => {
                            return Err(unsupported(*loc, format!("`{name}` applied to a matrix argument")));
                        }
                    }
                }
                let real_only = |z: &ComplexExpr, f: fn(&ScalarExpr) -> ScalarExpr| {
                    if z.is_real() {
                        Ok(ComplexExpr::real(f(&z.re)))
                    } else {
                        Err(unsupported(*loc, format!("`{name}` of a complex argument")))
                    }
                };
                let one = ComplexExpr::one();
                let out = match name.as_str() {
                    "sin" => complex_sin(&zs[0]),
                    "cos" => complex_cos(&zs[0]),
                    "tan" => complex_sin(&zs[0]).div(&complex_cos(&zs[0])),
                    "sec" => one.div(&complex_cos(&zs[0])),
                    "csc" => one.div(&complex_sin(&zs[0])),
                    "cot" => complex_cos(&zs[0]).div(&complex_sin(&zs[0])),
                    "exp" => zs[0].exp(),
                    "ln" => real_only(&zs[0], ScalarExpr::ln)?,
                    "sqrt" => real_only(&zs[0], ScalarExpr::sqrt)?,
                    "pow" => scalar_pow(&args[0], &zs[0], &zs[1], *loc)?,
                    other => return Err(unsupported(*loc, format!("unknown function `{other}`"))),
                };
                Ok(Value::Scalar(out))
            }
            Expr::Matrix { rows, loc } => {
                let cols = rows[0].len();
                let mut data = Vec::with_capacity(rows.len() * cols);
                for row in rows {
                    if row.len() != cols {
                        return Err(mismatch(*loc, format!("matrix rows have {cols} and {} entries", row.len())));
                    }
                    for item in row {
                        data.push(self.scalar(item, "a matrix entry")?);
                    }
                }
                Ok(Value::Matrix { rows: rows.len(), cols, data })
            }
            Expr::Neg(a, _) => Ok(match self.value(a)? {
                Value::Scalar(z) => Value::Scalar(z.neg()),
                Value::Matrix { rows, cols, data } => {
                    Value::Matrix { rows, cols, data: data.iter().map(ComplexExpr::neg).collect() }
                }
            }),
            Expr::Binary { op, lhs, rhs, loc } => self.binary(*op, lhs, rhs, *loc),
        }
    }

    fn binary(&self, op: BinOp, lhs: &Expr, rhs: &Expr, loc: Loc) -> Result<Value, ParseError> {
        let (a, b) = (self.value(lhs)?, self.value(rhs)?);
        use Value::{Matrix as M, Scalar as S};
        Ok(match (op, a, b) {
            (BinOp::Add, S(x), S(y)) => S(x.add(&y)),
            (BinOp::Sub, S(x), S(y)) => S(x.sub(&y)),
            (BinOp::Mul, S(x), S(y)) => S(x.mul(&y)),
            (BinOp::Div, S(x), S(y)) => S(x.div(&y)),
            (BinOp::Pow, S(x), S(y)) => S(scalar_pow(lhs, &x, &y, loc)?),
            (BinOp::Add | BinOp::Sub, M { rows, cols, data }, M { rows: r2, cols: c2, data: d2 }) => {
                if (rows, cols) != (r2, c2) {
                    return Err(mismatch(loc, format!("cannot combine {rows}x{cols} and {r2}x{c2} matrices")));
                }
                let data = data
                    .iter()
                    .zip(&d2)
                    .map(|(x, y)| if op == BinOp::Add { x.add(y) } else { x.sub(y) })
                    .collect();
                M { rows, cols, data }
            }
            (BinOp::Add | BinOp::Sub, _, _) => {
                return Err(unsupported(loc, format!("`{}` between a scalar and a matrix", op.symbol())));
            }
            (BinOp::Mul, S(x), M { rows, cols, data }) => M { rows, cols, data: data.iter().map(|y| x.mul(y)).collect() },
            (BinOp::Mul, M { rows, cols, data }, S(y)) => M { rows, cols, data: data.iter().map(|x| x.mul(&y)).collect() },
            (BinOp::Mul, M { rows, cols, data }, M { rows: r2, cols: c2, data: d2 }) => {
                if cols != r2 {
                    return Err(mismatch(loc, format!("cannot multiply {rows}x{cols} by {r2}x{c2}")));
                }
                M { rows, cols: c2, data: matmul((rows, cols, &data), (r2, c2, &d2)) }
            }
            (BinOp::Div, M { rows, cols, data }, S(y)) => M { rows, cols, data: data.iter().map(|x| x.div(&y)).collect() },
            (BinOp::Div, _, M { .. }) => return Err(unsupported(loc, "division by a matrix")),
            (BinOp::Pow, M { rows, cols, data }, S(k)) => {
                let k = match (k.is_real(), k.re.as_const()) {
                    (true, Some(c)) if c.is_integer() && !(*c.numer() < 0) => *c.numer(),
                    _ => {
                        return Err(unsupported(
                            loc,
                            "a matrix may only be raised to a constant non-negative integer power",
                        ));
                    }
                };
                if rows != cols {
                    return Err(mismatch(loc, format!("cannot raise a non-square {rows}x{cols} matrix to a power")));
                }
                let mut acc: Vec<ComplexExpr> = (0..rows * rows)
                    .map(|i| if i / rows == i % rows { ComplexExpr::one() } else { ComplexExpr::zero() })
                    .collect();
                for step in 0..k {
                    acc = if step == 0 { data.clone() } else { matmul((rows, rows, &acc), (rows, rows, &data)) };
                }
                M { rows, cols, data: acc }
            }
            (BinOp::Pow, _, M { .. }) => return Err(unsupported(loc, "matrix exponentials are not supported")),
        })
    }
}

/// Lower a body to a square grid of complex expressions.
///
/// A scalar body is a 1×1 matrix.
pub(crate) fn lower_body(body: &Expr, params: &[String]) -> Result<(usize, Vec<ComplexExpr>), ParseError> {
    match (Lowerer { params }).value(body)? {
        Value::Scalar(z) => Ok((1, vec![z])),
        Value::Matrix { rows, cols, data } => {
            if rows != cols {
                return Err(mismatch(body.loc(), format!("body is a non-square {rows}x{cols} matrix")));
            }
            Ok((rows, data))
        }
    }
}

/// Evaluate the body of `def` symbolically into a unitary expression.
pub fn lower_to_symbolic(def: &UnitaryDef) -> Result<UnitaryExprMatrix, ParseError> {
    let (dim, elements) = lower_body(&def.body, &def.params)?;
    let expected: usize = def.radices.iter().product();
    if dim != expected {
        return Err(mismatch(def.loc, format!("body has dimension {dim}, radices give {expected}")));
    }
    UnitaryExprMatrix::new(def.name.clone(), def.radices.clone(), def.params.clone(), elements)
        .map_err(|e| ParseError::new(ParseErrorKind::Syntax, def.loc, e.to_string()))
}


fn collect_names(e: &Expr, out: &mut Vec<String>) {
    match e {
        Expr::Var(name, _) => {
            if !super::ast::RESERVED.contains(&name.as_str()) && !out.contains(name) {
                out.push(name.clone());
            }
        }
        Expr::Const { .. } => {}
        Expr::Call { args, .. } => args.iter().for_each(|a| collect_names(a, out)),
        Expr::Matrix { rows, .. } => rows.iter().flatten().for_each(|a| collect_names(a, out)),
        Expr::Neg(a, _) => collect_names(a, out),
        Expr::Binary { lhs, rhs, .. } => {
            collect_names(lhs, out);
            collect_names(rhs, out);
        }
    }
}

/// Parse and lower a standalone scalar expression. Every identifier other
/// than `i`, `e`, and `π` is a real variable.
pub fn lower_expression(source: &str) -> Result<ComplexExpr, ParseError> {
    let ast = super::parser::parse_expression(source)?;
    let mut params = Vec::new();
    collect_names(&ast, &mut params);
    Lowerer { params: &params }.scalar(&ast, "the expression")
}
