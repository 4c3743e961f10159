use std::sync::{Arc, OnceLock};

use num_traits::Zero;

use super::egraph::EGraph;
use super::pattern::{Pattern, Subst};

/// Side condition on a hole binding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Guard {
    Nonzero(usize),
    Positive(usize),
    Const(usize),
    NonConst(usize),
    /// An integer constant of at least 2.
    Int2(usize),
}

impl Guard {
    pub fn holds(&self, g: &EGraph, subst: &Subst) -> bool {
        let data = |v: usize| &g.class(subst[v].expect("guard hole bound")).data;
        match *self {
            Guard::Nonzero(v) => data(v).nonzero || data(v).constant.is_some_and(|c| !c.is_zero()),
            Guard::Positive(v) => data(v).positive,
            Guard::Const(v) => data(v).constant.is_some(),
            Guard::NonConst(v) => data(v).constant.is_none(),
            Guard::Int2(v) => data(v).constant.is_some_and(|c| c.is_integer() && *c.numer() >= 2),
        }
    }
}

/// A directed rewrite `lhs => rhs` applied where all guards hold.
#[derive(Clone, Debug)]
pub struct Rule {
    pub name: String,
    pub lhs: Pattern,
    pub rhs: Pattern,
    pub guards: Vec<Guard>,
    pub holes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("rule file line {line}: {message}")]
pub struct RuleError {
    pub line: usize,
    pub message: String,
}

/// An ordered collection of rewrite rules.
#[derive(Clone, Debug, Default)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

const DEFAULT_RULES: &str = include_str!("default.rules");

impl RuleSet {
    /// Parse rules in the line format
    /// `name: lhs => rhs [if guard, ...]`. A `<=>` arrow adds the reverse
    /// rule as `name-rev`. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<RuleSet, RuleError> {
        let mut rules = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| RuleError { line: idx + 1, message };
            let (name, body) = line.split_once(':').ok_or_else(|| err("expected `name: lhs => rhs`".into()))?;
            let name = name.trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(err(format!("bad rule name `{name}`")));
            }
            let (body, guard_text) = match body.split_once(" if ") {
                Some((b, g)) => (b, Some(g)),
                None => (body, None),
            };
            let (both, lhs_text, rhs_text) = if let Some((l, r)) = body.split_once("<=>") {
                (true, l, r)
            } else if let Some((l, r)) = body.split_once("=>") {
                (false, l, r)
            } else {
                return Err(err("missing `=>`".into()));
            };
            let mut holes = Vec::new();
            let lhs = Pattern::parse(lhs_text.trim(), &mut holes).map_err(|e| err(e.to_string()))?;
            let lhs_holes = holes.len();
            let rhs = Pattern::parse(rhs_text.trim(), &mut holes).map_err(|e| err(e.to_string()))?;
            if holes.len() != lhs_holes {
                return Err(err(format!("hole `?{}` appears only on the right", holes[lhs_holes])));
            }
            let mut guards = Vec::new();
            if let Some(gt) = guard_text {
                for g in gt.split(',') {
                    guards.push(parse_guard(g.trim(), &holes).map_err(err)?);
                }
            }
            if both {
                let mut rev_holes = Vec::new();
                let rl = Pattern::parse(rhs_text.trim(), &mut rev_holes).map_err(|e| err(e.to_string()))?;
                let n = rev_holes.len();
                let rr = Pattern::parse(lhs_text.trim(), &mut rev_holes).map_err(|e| err(e.to_string()))?;
                if rev_holes.len() != n {
                    return Err(err("`<=>` needs the same holes on both sides".into()));
                }
                let rev_guards = match guard_text {
                    Some(gt) => gt.split(',').map(|g| parse_guard(g.trim(), &rev_holes)).collect::<Result<_, _>>().map_err(err)?,
                    None => Vec::new(),
                };
                rules.push(Rule { name: name.to_string(), lhs, rhs, guards, holes });
                rules.push(Rule { name: format!("{name}-rev"), lhs: rl, rhs: rr, guards: rev_guards, holes: rev_holes });
            } else {
                rules.push(Rule { name: name.to_string(), lhs, rhs, guards, holes });
            }
        }
        let mut names = std::collections::HashSet::new();
        for r in &rules {
            if !names.insert(r.name.as_str()) {
                return Err(RuleError { line: 0, message: format!("duplicate rule name `{}`", r.name) });
            }
        }
        Ok(RuleSet { rules })
    }

    /// The built-in algebraic and trigonometric rules.
    pub fn default_rules() -> Arc<RuleSet> {
        static RULES: OnceLock<Arc<RuleSet>> = OnceLock::new();
        RULES.get_or_init(|| Arc::new(RuleSet::parse(DEFAULT_RULES).expect("built-in rules parse"))).clone()
    }

    /// This set followed by the rules in `text`.
    pub fn extended(&self, text: &str) -> Result<RuleSet, RuleError> {
        let extra = RuleSet::parse(text)?;
        let mut rules = self.rules.clone();
        for r in extra.rules {
            if rules.iter().any(|x| x.name == r.name) {
                return Err(RuleError { line: 0, message: format!("duplicate rule name `{}`", r.name) });
            }
            rules.push(r);
        }
        Ok(RuleSet { rules })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    /// Only the named rules, in this set's order.
    pub fn subset(&self, names: &[&str]) -> RuleSet {
        RuleSet { rules: self.rules.iter().filter(|r| names.contains(&r.name.as_str())).cloned().collect() }
    }
}

fn parse_guard(text: &str, holes: &[String]) -> Result<Guard, String> {
    let open = text.find('(').ok_or_else(|| format!("bad guard `{text}`"))?;
    let kind = text[..open].trim();
    let arg = text[open + 1..].trim_end().strip_suffix(')').ok_or_else(|| format!("bad guard `{text}`"))?.trim();
    let hole = arg.strip_prefix('?').ok_or_else(|| format!("guard argument must be a hole, got `{arg}`"))?;
    let v = holes.iter().position(|h| h == hole).ok_or_else(|| format!("guard hole `?{hole}` is not bound"))?;
    Ok(match kind {
        "nonzero" => Guard::Nonzero(v),
        "positive" => Guard::Positive(v),
        "const" => Guard::Const(v),
        "nonconst" => Guard::NonConst(v),
        "int2" => Guard::Int2(v),
        _ => return Err(format!("unknown guard `{kind}`")),
    })
}
