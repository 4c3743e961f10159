use super::ast::{BinOp, Expr, UnitaryDef, FUNCTIONS, RESERVED};
use super::error::{Loc, ParseError, ParseErrorKind};
use super::lexer::{tokenize, Tok, Token};
use super::lower::lower_body;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

/// Definition as written, before validation.
struct RawDef {
    name: String,
    radices: Option<(Vec<usize>, Loc)>,
    params: Vec<(String, Loc)>,
    body: Expr,
    loc: Loc,
}

fn syntax(loc: Loc, msg: impl Into<String>) -> ParseError {
    ParseError::new(ParseErrorKind::Syntax, loc, msg)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn loc(&self) -> Loc {
        self.toks[self.pos].loc
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, context: &str) -> Result<Loc, ParseError> {
        if self.peek() == &tok {
            Ok(self.bump().loc)
        } else {
            Err(syntax(self.loc(), format!("expected {} {context}, found {}", tok.describe(), self.peek().describe())))
        }
    }

    fn ident(&mut self, context: &str) -> Result<(String, Loc), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let loc = self.bump().loc;
                Ok((s, loc))
            }
            other => Err(syntax(self.loc(), format!("expected identifier {context}, found {}", other.describe()))),
        }
    }

    fn integer(&mut self, context: &str) -> Result<(String, Loc), ParseError> {
        match self.peek().clone() {
            Tok::Int(s) => {
                let loc = self.bump().loc;
                Ok((s, loc))
            }
            other => Err(syntax(self.loc(), format!("expected integer {context}, found {}", other.describe()))),
        }
    }

    fn unitary(&mut self) -> Result<RawDef, ParseError> {
        let loc = self.expect(Tok::Utry, "to start a definition")?;
        let (name, _) = self.ident("after `utry`")?;
        let radices = if self.peek() == &Tok::LAngle {
            let rloc = self.bump().loc;
            let mut rs = Vec::new();
            loop {
                let (digits, iloc) = self.integer("in radix list")?;
                let r: usize = digits.parse().map_err(|_| syntax(iloc, "radix is too large"))?;
                if r < 2 {
                    return Err(syntax(iloc, format!("radix {r} is less than 2")));
                }
                rs.push(r);
                if !self.eat(&Tok::Comma) || self.peek() == &Tok::RAngle {
                    break;
                }
            }
            self.expect(Tok::RAngle, "to close the radix list")?;
            Some((rs, rloc))
        } else {
            None
        };
        self.expect(Tok::LParen, "before the parameter list")?;
        let mut params = Vec::new();
        if self.peek() != &Tok::RParen {
            loop {
                params.push(self.ident("in parameter list")?);
                if !self.eat(&Tok::Comma) || self.peek() == &Tok::RParen {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "to close the parameter list")?;
        self.expect(Tok::LBrace, "before the body")?;
        let body = self.expression()?;
        self.expect(Tok::RBrace, "after the body")?;
        Ok(RawDef { name, radices, params, body, loc })
    }

    fn expression(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            let loc = self.bump().loc;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs, loc);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut negs = Vec::new();
        while self.peek() == &Tok::Tilde {
            negs.push(self.bump().loc);
        }
        let mut lhs = self.factor()?;
        for loc in negs.into_iter().rev() {
            lhs = Expr::Neg(Box::new(lhs), loc);
        }
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            let loc = self.bump().loc;
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs, loc);
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek() == &Tok::Caret {
            let loc = self.bump().loc;
            let exponent = self.factor()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent, loc));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                if self.peek() == &Tok::LParen {
                    self.bump();
                    let args = if self.peek() == &Tok::RParen { Vec::new() } else { self.exprlist(Tok::RParen)? };
                    self.expect(Tok::RParen, "to close the argument list")?;
                    match FUNCTIONS.iter().find(|(f, _)| *f == name) {
                        None => Err(syntax(loc, format!("unknown function `{name}`"))),
                        Some((_, arity)) if *arity != args.len() => Err(syntax(
                            loc,
                            format!("`{name}` takes {arity} argument(s), found {}", args.len()),
                        )),
                        Some(_) => Ok(Expr::Call { name, args, loc }),
                    }
                } else {
                    Ok(Expr::Var(name, loc))
                }
            }
            Tok::Int(int) => {
                self.bump();
                let frac = if self.peek() == &Tok::Dot {
                    self.bump();
                    Some(self.integer("after the decimal point")?.0)
                } else {
                    None
                };
                Ok(Expr::Const { int, frac, loc })
            }
            Tok::LBracket => self.matrix(),
            Tok::LParen => {
                self.bump();
                let e = self.expression()?;
                self.expect(Tok::RParen, "to close the parenthesis")?;
                Ok(e)
            }
            other => Err(syntax(loc, format!("expected an expression, found {}", other.describe()))),
        }
    }

    fn matrix(&mut self) -> Result<Expr, ParseError> {
        let loc = self.expect(Tok::LBracket, "to open a matrix")?;
        let mut rows = Vec::new();
        loop {
            self.expect(Tok::LBracket, "to open a matrix row")?;
            rows.push(self.exprlist(Tok::RBracket)?);
            self.expect(Tok::RBracket, "to close a matrix row")?;
            if !self.eat(&Tok::Comma) || self.peek() == &Tok::RBracket {
                break;
            }
        }
        self.expect(Tok::RBracket, "to close the matrix")?;
        Ok(Expr::Matrix { rows, loc })
    }

    /// `expression { ',' expression } [ ',' ]`, stopping before `close`.
    fn exprlist(&mut self, close: Tok) -> Result<Vec<Expr>, ParseError> {
        let mut out = vec![self.expression()?];
        while self.eat(&Tok::Comma) {
            if self.peek() == &close {
                break;
            }
            out.push(self.expression()?);
        }
        Ok(out)
    }
}

fn check_vars(e: &Expr, params: &[String]) -> Result<(), ParseError> {
    match e {
        Expr::Var(name, loc) => {
            if RESERVED.contains(&name.as_str()) || params.contains(name) {
                Ok(())
            } else {
                Err(syntax(*loc, format!("undeclared variable `{name}`")))
            }
        }
        Expr::Const { .. } => Ok(()),
        Expr::Call { args, .. } => args.iter().try_for_each(|a| check_vars(a, params)),
        Expr::Matrix { rows, .. } => rows.iter().flatten().try_for_each(|a| check_vars(a, params)),
        Expr::Neg(a, _) => check_vars(a, params),
        Expr::Binary { lhs, rhs, .. } => {
            check_vars(lhs, params)?;
            check_vars(rhs, params)
        }
    }
}

fn validate(raw: RawDef) -> Result<UnitaryDef, ParseError> {
    let mut params: Vec<String> = Vec::new();
    for (p, loc) in &raw.params {
        if RESERVED.contains(&p.as_str()) {
            return Err(ParseError::new(
                ParseErrorKind::ReservedVariable,
                *loc,
                format!("`{p}` is reserved and cannot be a parameter"),
            ));
        }
        if params.contains(p) {
            return Err(syntax(*loc, format!("duplicate parameter `{p}`")));
        }
        params.push(p.clone());
    }
    check_vars(&raw.body, &params)?;
    let (dim, _) = lower_body(&raw.body, &params)?;
    let radices = match &raw.radices {
        Some((rs, loc)) => {
            let prod = rs.iter().try_fold(1usize, |acc, &r| acc.checked_mul(r));
            if prod != Some(dim) {
                return Err(ParseError::new(
                    ParseErrorKind::DimensionMismatch,
                    *loc,
                    format!("body has dimension {dim} but the radices multiply to {}", rs.iter().product::<usize>()),
                ));
            }
            rs.clone()
        }
        None => {
            if !dim.is_power_of_two() {
                return Err(ParseError::new(
                    ParseErrorKind::DimensionMismatch,
                    raw.body.loc(),
                    format!("body has dimension {dim}, which is not a power of two; declare radices explicitly"),
                ));
            }
            vec![2; dim.trailing_zeros() as usize]
        }
    };
    Ok(UnitaryDef {
        name: raw.name,
        radices,
        explicit_radices: raw.radices.is_some(),
        params,
        body: raw.body,
        loc: raw.loc,
    })
}

/// Parse every `utry` definition in `source`.
pub fn parse_qgl(source: &str) -> Result<Vec<UnitaryDef>, ParseError> {
    let mut p = Parser { toks: tokenize(source)?, pos: 0 };
    let mut defs = Vec::new();
    while p.peek() != &Tok::Eof {
        let raw = p.unitary()?;
        defs.push(validate(raw)?);
    }
    Ok(defs)
}

/// Parse a source holding exactly one `utry` definition.
pub fn parse_unitary(source: &str) -> Result<UnitaryDef, ParseError> {
    let mut p = Parser { toks: tokenize(source)?, pos: 0 };
    let raw = p.unitary()?;
    if p.peek() != &Tok::Eof {
        return Err(syntax(p.loc(), format!("expected end of input, found {}", p.peek().describe())));
    }
    validate(raw)
}

/// Parse a standalone expression (no surrounding definition).
pub fn parse_expression(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { toks: tokenize(source)?, pos: 0 };
    let e = p.expression()?;
    if p.peek() != &Tok::Eof {
        return Err(syntax(p.loc(), format!("expected end of input, found {}", p.peek().describe())));
    }
    Ok(e)
}
