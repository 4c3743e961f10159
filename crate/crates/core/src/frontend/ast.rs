use super::error::Loc;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Functions accepted by the grammar's `function` production.
pub const FUNCTIONS: &[(&str, usize)] =
    &[("cos", 1), ("sin", 1), ("tan", 1), ("sec", 1), ("csc", 1), ("cot", 1), ("ln", 1), ("exp", 1), ("pow", 2), ("sqrt", 1)];

pub const RESERVED: &[&str] = &["i", "e", "π"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Var(String, Loc),
    /// `integer ['.' integer]`, kept as written.
    Const { int: String, frac: Option<String>, loc: Loc },
    Call { name: String, args: Vec<Expr>, loc: Loc },
    Matrix { rows: Vec<Vec<Expr>>, loc: Loc },
    Neg(Box<Expr>, Loc),
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr>, loc: Loc },
}

impl Expr {
    pub fn loc(&self) -> Loc {
        match self {
            Expr::Var(_, loc) | Expr::Neg(_, loc) => *loc,
            Expr::Const { loc, .. } | Expr::Call { loc, .. } | Expr::Matrix { loc, .. } | Expr::Binary { loc, .. } => {
                *loc
            }
        }
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr, loc: Loc) -> Expr {
        Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), loc }
    }
}

/// A parsed and validated `utry` definition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitaryDef {
    pub name: String,
    /// Radices after resolution; all twos when the source omits them.
    pub radices: Vec<usize>,
    /// Whether the source spelled out the radix list.
    pub explicit_radices: bool,
    pub params: Vec<String>,
    pub body: Expr,
    pub loc: Loc,
}
