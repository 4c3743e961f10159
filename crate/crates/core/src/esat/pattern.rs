use num_traits::Zero;

use super::egraph::EGraph;
use super::language::{ENode, Id, Op};
use crate::frontend::{parse_expression, BinOp, Expr};
use crate::symexpr::Rational;

/// A term with holes. Holes are numbered in order of first appearance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pattern {
    Var(usize),
    Node(Op, Vec<Pattern>),
}

/// Most holes a pattern may use.
pub const MAX_HOLES: usize = 8;

/// Hole bindings for one match.
pub type Subst = [Option<Id>; MAX_HOLES];

const HOLE_PREFIX: &str = "__hole_";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad pattern `{text}`: {reason}")]
pub struct PatternError {
    pub text: String,
    pub reason: String,
}

impl Pattern {
    /// Parse infix pattern text such as `sin(?a + ?b)`. Hole names are
    /// resolved through `holes`, which is extended with new names.
    pub fn parse(text: &str, holes: &mut Vec<String>) -> Result<Pattern, PatternError> {
        let err = |reason: String| PatternError { text: text.to_string(), reason };
        let mut src = String::with_capacity(text.len());
        let mut chars = text.chars().peekable();
        while let Some(c) = chars.next() {
            if c == '?' {
                src.push_str(HOLE_PREFIX);
                if !chars.peek().is_some_and(|c| c.is_alphanumeric()) {
                    return Err(err("`?` must be followed by a name".into()));
                }
            } else {
                src.push(c);
            }
        }
        let ast = parse_expression(&src).map_err(|e| err(e.to_string()))?;
        let p = from_ast(&ast, holes).map_err(err)?;
        if holes.len() > MAX_HOLES {
            return Err(err(format!("more than {MAX_HOLES} holes")));
        }
        Ok(p)
    }

    pub fn num_holes(&self) -> usize {
        match self {
            Pattern::Var(v) => v + 1,
            Pattern::Node(_, kids) => kids.iter().map(Pattern::num_holes).max().unwrap_or(0),
        }
    }

    /// All matches of this pattern rooted at class `id`, appended to
    /// `out`. Stops early once `out` holds more than `limit` entries.
    pub fn search_class(&self, g: &EGraph, id: Id, out: &mut Vec<Subst>, limit: usize) {
        let mut todo = vec![(self, g.find(id))];
        ematch(g, &mut todo, &mut [None; MAX_HOLES], out, limit);
    }

    /// Add this pattern's instance under `subst` and return its class.
    pub fn instantiate(&self, g: &mut EGraph, subst: &Subst) -> Id {
        match self {
            Pattern::Var(v) => subst[*v].expect("hole bound by the left-hand side"),
            Pattern::Node(op, kids) => {
                let ids: Vec<Id> = kids.iter().map(|k| k.instantiate(g, subst)).collect();
                g.add(ENode::new(op.clone(), &ids))
            }
        }
    }
}

// Depth-first backtracking over a stack of (pattern, class) obligations.
fn ematch<'p>(
    g: &EGraph,
    todo: &mut Vec<(&'p Pattern, Id)>,
    subst: &mut Subst,
    out: &mut Vec<Subst>,
    limit: usize,
) {
    if out.len() > limit {
        return;
    }
    let Some((pat, id)) = todo.pop() else {
        out.push(*subst);
        return;
    };
    match pat {
        Pattern::Var(v) => match subst[*v] {
            Some(bound) => {
                if g.find(bound) == id {
                    ematch(g, todo, subst, out, limit);
                }
            }
            None => {
                subst[*v] = Some(id);
                ematch(g, todo, subst, out, limit);
                subst[*v] = None;
            }
        },
        Pattern::Node(op, kids) => {
            let nodes = &g.class(id).nodes;
            let kind = op.kind_index();
            let lo = nodes.partition_point(|n| n.op.kind_index() < kind);
            for node in nodes[lo..].iter().take_while(|n| n.op.kind_index() == kind) {
                if node.op != *op {
                    continue;
                }
                let depth = todo.len();
                for (kp, &kid) in kids.iter().zip(node.children()).rev() {
                    todo.push((kp, g.find(kid)));
                }
                ematch(g, todo, subst, out, limit);
                todo.truncate(depth);
            }
        }
    }
    todo.push((pat, id));
}

fn from_ast(e: &Expr, holes: &mut Vec<String>) -> Result<Pattern, String> {
    Ok(match e {
        Expr::Var(name, _) => {
            if let Some(h) = name.strip_prefix(HOLE_PREFIX) {
                let idx = match holes.iter().position(|x| x == h) {
                    Some(i) => i,
                    None => {
                        holes.push(h.to_string());
                        holes.len() - 1
                    }
                };
                Pattern::Var(idx)
            } else if name == "π" {
                Pattern::Node(Op::Pi, vec![])
            } else {
                Pattern::Node(Op::Var(name.as_str().into()), vec![])
            }
        }
        Expr::Const { int, frac, .. } => {
            let mut v = Rational::from_integer(int.parse::<i128>().map_err(|e| e.to_string())?);
            if let Some(f) = frac {
                let digits: i128 = f.parse().map_err(|_| format!("bad constant {int}.{f}"))?;
                v += Rational::new(digits, 10i128.pow(f.len() as u32));
            }
            Pattern::Node(Op::Const(v), vec![])
        }
        Expr::Neg(a, _) => match from_ast(a, holes)? {
            Pattern::Node(Op::Const(c), _) if !c.is_zero() => Pattern::Node(Op::Const(-c), vec![]),
            p => Pattern::Node(Op::Neg, vec![p]),
        },
        Expr::Binary { op, lhs, rhs, .. } => {
            let op = match op {
                BinOp::Add => Op::Add,
                BinOp::Sub => Op::Sub,
                BinOp::Mul => Op::Mul,
                BinOp::Div => Op::Div,
                BinOp::Pow => Op::Pow,
            };
            Pattern::Node(op, vec![from_ast(lhs, holes)?, from_ast(rhs, holes)?])
        }
        Expr::Call { name, args, .. } => {
            let op = Op::from_name(name).ok_or_else(|| format!("function `{name}` is not an e-graph operator"))?;
            let kids = args.iter().map(|a| from_ast(a, holes)).collect::<Result<Vec<_>, _>>()?;
            Pattern::Node(op, kids)
        }
        Expr::Matrix { .. } => return Err("matrices are not allowed in patterns".into()),
    })
}
