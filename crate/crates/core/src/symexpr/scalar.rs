use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

/// Exact rational constant.
pub type Rational = Ratio<i128>;

/// A real-valued symbolic expression.
///
/// Expressions are immutable and structurally shared. Each node caches a
/// content hash, so equality and hashing are cheap enough to key maps
/// (common-subexpression elimination, e-graph ingestion) on whole trees.
#[derive(Clone)]
pub struct ScalarExpr(Arc<Node>);

struct Node {
    kind: ExprKind,
    hash: u64,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum ExprKind {
    Var(Arc<str>),
    Pi,
    Const(Rational),
    /// A floating-point constant, stored by bit pattern. Never folded.
    Float(u64),
    Neg(ScalarExpr),
    Add(ScalarExpr, ScalarExpr),
    Sub(ScalarExpr, ScalarExpr),
    Mul(ScalarExpr, ScalarExpr),
    Div(ScalarExpr, ScalarExpr),
    Pow(ScalarExpr, ScalarExpr),
    Sqrt(ScalarExpr),
    Sin(ScalarExpr),
    Cos(ScalarExpr),
    Exp(ScalarExpr),
    Ln(ScalarExpr),
}

impl PartialEq for ScalarExpr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.hash == other.0.hash && self.0.kind == other.0.kind)
    }
}

impl Eq for ScalarExpr {}

impl Hash for ScalarExpr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.0.hash);
    }
}

impl fmt::Debug for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Largest |exponent| folded when raising an exact constant to an integer power.
const MAX_FOLD_EXPONENT: i128 = 64;

impl ScalarExpr {
    pub fn from_kind(kind: ExprKind) -> Self {
        let mut h = DefaultHasher::new();
        std::mem::discriminant(&kind).hash(&mut h);
        match &kind {
            ExprKind::Var(name) => name.hash(&mut h),
            ExprKind::Pi => {}
            ExprKind::Const(c) => c.hash(&mut h),
            ExprKind::Float(bits) => bits.hash(&mut h),
            ExprKind::Neg(a)
            | ExprKind::Sqrt(a)
            | ExprKind::Sin(a)
            | ExprKind::Cos(a)
            | ExprKind::Exp(a)
            | ExprKind::Ln(a) => h.write_u64(a.0.hash),
            ExprKind::Add(a, b)
            | ExprKind::Sub(a, b)
            | ExprKind::Mul(a, b)
            | ExprKind::Div(a, b)
            | ExprKind::Pow(a, b) => {
                h.write_u64(a.0.hash);
                h.write_u64(b.0.hash);
            }
        }
        ScalarExpr(Arc::new(Node { kind, hash: h.finish() }))
    }

    #[inline]
    pub fn kind(&self) -> &ExprKind {
        &self.0.kind
    }

    /// Stable content hash.
    #[inline]
    pub fn content_hash(&self) -> u64 {
        self.0.hash
    }

    /// Address of the shared node; identifies a node within one traversal.
    #[inline]
    pub fn node_id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn ptr_eq(&self, other: &ScalarExpr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn var(name: &str) -> Self {
        Self::from_kind(ExprKind::Var(Arc::from(name)))
    }

    pub fn pi() -> Self {
        Self::from_kind(ExprKind::Pi)
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_kind(ExprKind::Const(c))
    }

    pub fn int(v: i128) -> Self {
        Self::constant(Rational::from_integer(v))
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn float(v: f64) -> Self {
        Self::from_kind(ExprKind::Float(v.to_bits()))
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self.kind() {
            ExprKind::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_one())
    }

    fn is_minus_one(&self) -> bool {
        self.as_const().is_some_and(|c| *c == -Rational::one())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self.kind() {
            ExprKind::Var(name) => Some(name),
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<&ScalarExpr> {
        match self.kind() {
            ExprKind::Var(_) | ExprKind::Pi | ExprKind::Const(_) | ExprKind::Float(_) => vec![],
            ExprKind::Neg(a)
            | ExprKind::Sqrt(a)
            | ExprKind::Sin(a)
            | ExprKind::Cos(a)
            | ExprKind::Exp(a)
            | ExprKind::Ln(a) => vec![a],
            ExprKind::Add(a, b)
            | ExprKind::Sub(a, b)
            | ExprKind::Mul(a, b)
            | ExprKind::Div(a, b)
            | ExprKind::Pow(a, b) => vec![a, b],
        }
    }

    // Smart constructors. They fold exact constants and drop additive zeros
    // and multiplicative ones; every rewrite here leaves IEEE results
    // unchanged (up to the sign of zero), so composing expressions with them
    // evaluates exactly like composing the numeric results.

    pub fn neg(&self) -> Self {
        match self.kind() {
            ExprKind::Const(c) => Self::constant(-*c),
            ExprKind::Neg(a) => a.clone(),
            _ => Self::from_kind(ExprKind::Neg(self.clone())),
        }
    }

    pub fn add(&self, rhs: &ScalarExpr) -> Self {
        if let Some(c) = self.fold_with(rhs, |a, b| a.checked_add(b)) {
            return c;
        }
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        Self::from_kind(ExprKind::Add(self.clone(), rhs.clone()))
    }

    pub fn sub(&self, rhs: &ScalarExpr) -> Self {
        if let Some(c) = self.fold_with(rhs, |a, b| a.checked_sub(b)) {
            return c;
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.neg();
        }
        Self::from_kind(ExprKind::Sub(self.clone(), rhs.clone()))
    }

    pub fn mul(&self, rhs: &ScalarExpr) -> Self {
        if let Some(c) = self.fold_with(rhs, |a, b| a.checked_mul(b)) {
            return c;
        }
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        if self.is_one() {
            return rhs.clone();
        }
        if rhs.is_one() {
            return self.clone();
        }
        if self.is_minus_one() {
            return rhs.neg();
        }
        if rhs.is_minus_one() {
            return self.neg();
        }
        Self::from_kind(ExprKind::Mul(self.clone(), rhs.clone()))
    }

    pub fn div(&self, rhs: &ScalarExpr) -> Self {
        if let Some(c) = self.fold_with(rhs, |a, b| if b.is_zero() { None } else { a.checked_div(b) }) {
            return c;
        }
        if rhs.is_one() {
            return self.clone();
        }
        if rhs.is_minus_one() {
            return self.neg();
        }
        if self.is_zero() && rhs.as_const().map_or(true, |c| !c.is_zero()) {
            return Self::zero();
        }
        Self::from_kind(ExprKind::Div(self.clone(), rhs.clone()))
    }

    pub fn pow(&self, rhs: &ScalarExpr) -> Self {
        if rhs.is_zero() {
            return Self::one();
        }
        if rhs.is_one() {
            return self.clone();
        }
        if let Some(c) = self.fold_with(rhs, rational_powi) {
            return c;
        }
        Self::from_kind(ExprKind::Pow(self.clone(), rhs.clone()))
    }

    pub fn sqrt(&self) -> Self {
        if let Some(c) = self.as_const() {
            if let Some(r) = rational_sqrt(c) {
                if exactly_representable(c) && exactly_representable(&r) {
                    return Self::constant(r);
                }
            }
        }
        Self::from_kind(ExprKind::Sqrt(self.clone()))
    }

    pub fn sin(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Self::from_kind(ExprKind::Sin(self.clone()))
    }

    pub fn cos(&self) -> Self {
        if self.is_zero() {
            return Self::one();
        }
        Self::from_kind(ExprKind::Cos(self.clone()))
    }

    pub fn exp(&self) -> Self {
        if self.is_zero() {
            return Self::one();
        }
        Self::from_kind(ExprKind::Exp(self.clone()))
    }

    pub fn ln(&self) -> Self {
        if self.is_one() {
            return Self::zero();
        }
        Self::from_kind(ExprKind::Ln(self.clone()))
    }

    /// Fold two constants when both operands and the result are exactly
    /// representable in single precision, so the folded value is what IEEE
    /// arithmetic would have produced at either precision.
    fn fold_with(&self, rhs: &ScalarExpr, op: impl Fn(&Rational, &Rational) -> Option<Rational>) -> Option<Self> {
        let (a, b) = (self.as_const()?, rhs.as_const()?);
        let c = op(a, b)?;
        (exactly_representable(a) && exactly_representable(b) && exactly_representable(&c)).then(|| Self::constant(c))
    }

    /// Rebuild a node of the same kind over new children, through the smart
    /// constructors.
    pub fn rebuild(&self, children: &[ScalarExpr]) -> Self {
        match self.kind() {
            ExprKind::Var(_) | ExprKind::Pi | ExprKind::Const(_) | ExprKind::Float(_) => self.clone(),
            ExprKind::Neg(_) => children[0].neg(),
            ExprKind::Sqrt(_) => children[0].sqrt(),
            ExprKind::Sin(_) => children[0].sin(),
            ExprKind::Cos(_) => children[0].cos(),
            ExprKind::Exp(_) => children[0].exp(),
            ExprKind::Ln(_) => children[0].ln(),
            ExprKind::Add(..) => children[0].add(&children[1]),
            ExprKind::Sub(..) => children[0].sub(&children[1]),
            ExprKind::Mul(..) => children[0].mul(&children[1]),
            ExprKind::Div(..) => children[0].div(&children[1]),
            ExprKind::Pow(..) => children[0].pow(&children[1]),
        }
    }

    /// Bottom-up rewrite with per-node memoization, so shared subtrees are
    /// visited once.
    pub fn map_bottom_up(&self, f: &mut impl FnMut(&ScalarExpr, &[ScalarExpr]) -> ScalarExpr) -> ScalarExpr {
        let mut memo = HashMap::new();
        self.map_memo(f, &mut memo)
    }

    pub(crate) fn map_memo(
        &self,
        f: &mut impl FnMut(&ScalarExpr, &[ScalarExpr]) -> ScalarExpr,
        memo: &mut HashMap<usize, ScalarExpr>,
    ) -> ScalarExpr {
        if let Some(done) = memo.get(&self.node_id()) {
            return done.clone();
        }
        let kids: Vec<ScalarExpr> = self.children().into_iter().map(|c| c.map_memo(f, memo)).collect();
        let out = f(self, &kids);
        memo.insert(self.node_id(), out.clone());
        out
    }

    /// Free variables in first-appearance (left-to-right, depth-first) order.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen_nodes = std::collections::HashSet::new();
        self.collect_vars(&mut out, &mut seen_nodes);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut Vec<String>, seen: &mut std::collections::HashSet<usize>) {
        if !seen.insert(self.node_id()) {
            return;
        }
        if let ExprKind::Var(name) = self.kind() {
            if !out.iter().any(|v| v.as_str() == &**name) {
                out.push(name.to_string());
            }
            return;
        }
        for c in self.children() {
            c.collect_vars(out, seen);
        }
    }

    pub fn contains_var(&self, name: &str) -> bool {
        self.free_vars().iter().any(|v| v == name)
    }

    /// Replace variables according to `map`.
    pub fn substitute(&self, map: &HashMap<String, ScalarExpr>) -> ScalarExpr {
        self.map_bottom_up(&mut |node, kids| match node.kind() {
            ExprKind::Var(name) => map.get(&**name).cloned().unwrap_or_else(|| node.clone()),
            _ => node.rebuild(kids),
        })
    }

    /// Number of nodes counted as a tree (shared subtrees counted per use).
    pub fn tree_size(&self) -> f64 {
        let mut memo: HashMap<usize, f64> = HashMap::new();
        fn go(e: &ScalarExpr, memo: &mut HashMap<usize, f64>) -> f64 {
            if let Some(v) = memo.get(&e.node_id()) {
                return *v;
            }
            let v = 1.0 + e.children().into_iter().map(|c| go(c, memo)).sum::<f64>();
            memo.insert(e.node_id(), v);
            v
        }
        go(self, &mut memo)
    }

    /// Number of distinct nodes in the shared DAG.
    pub fn dag_size(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            if seen.insert(e.node_id()) {
                stack.extend(e.children());
            }
        }
        seen.len()
    }
}

pub(crate) fn rational_powi(base: &Rational, exp: &Rational) -> Option<Rational> {
    if !exp.is_integer() {
        return None;
    }
    let e = *exp.numer();
    if e.abs() > MAX_FOLD_EXPONENT {
        return None;
    }
    if e < 0 && base.is_zero() {
        return None;
    }
    let mut acc = Rational::one();
    for _ in 0..e.abs() {
        acc = acc.checked_mul(base)?;
    }
    if e < 0 {
        acc = Rational::one().checked_div(&acc)?;
    }
    Some(acc)
}

/// True when `c` is a dyadic rational with a 24-bit numerator, i.e. exact
/// in both f32 and f64.
pub(crate) fn exactly_representable(c: &Rational) -> bool {
    let (n, d) = (*c.numer(), *c.denom());
    n.unsigned_abs() <= 1 << 24 && (d as u128).is_power_of_two() && d <= 1 << 100
}

fn isqrt(v: i128) -> Option<i128> {
    if v < 0 {
        return None;
    }
    let r = (v as f64).sqrt().round() as i128;
    for cand in [r - 1, r, r + 1] {
        if cand >= 0 && cand.checked_mul(cand) == Some(v) {
            return Some(cand);
        }
    }
    None
}

pub(crate) fn rational_sqrt(c: &Rational) -> Option<Rational> {
    if c.is_negative() {
        return None;
    }
    Some(Rational::new(isqrt(*c.numer())?, isqrt(*c.denom())?))
}

pub(crate) fn rational_to_f64(c: &Rational) -> f64 {
    c.numer().to_f64().unwrap_or(f64::NAN) / c.denom().to_f64().unwrap_or(f64::NAN)
}

// Printing uses QGL surface syntax so printed expressions parse back.

fn precedence(e: &ScalarExpr) -> u8 {
    match e.kind() {
        ExprKind::Add(..) | ExprKind::Sub(..) => 1,
        ExprKind::Neg(_) => 2,
        ExprKind::Mul(..) | ExprKind::Div(..) => 3,
        ExprKind::Pow(..) => 4,
        ExprKind::Const(c) if !c.is_integer() => 3,
        ExprKind::Const(c) if c.is_negative() => 2,
        ExprKind::Float(bits) if f64::from_bits(*bits) < 0.0 => 2,
        _ => 5,
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, c: &Rational) -> fmt::Result {
    let (n, d) = (*c.numer(), *c.denom());
    if n < 0 {
        write!(f, "~")?;
    }
    if d == 1 {
        write!(f, "{}", n.abs())
    } else {
        write!(f, "{}/{}", n.abs(), d)
    }
}

fn write_float(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v < 0.0 {
        write!(f, "~")?;
    }
    let a = v.abs();
    let s = format!("{a:?}");
    if s.contains('e') || s.contains("inf") || s.contains("NaN") {
        // QGL has no exponent syntax; fall back to a plain decimal.
        write!(f, "{a:.17}")
    } else {
        write!(f, "{s}")
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &ScalarExpr, min_prec: u8) -> fmt::Result {
    if precedence(e) < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            ExprKind::Var(name) => write!(f, "{name}"),
            ExprKind::Pi => write!(f, "π"),
            ExprKind::Const(c) => write_const(f, c),
            ExprKind::Float(bits) => write_float(f, f64::from_bits(*bits)),
            ExprKind::Neg(a) => {
                write!(f, "~")?;
                // `~` applies to a single factor in the grammar.
                write_child(f, a, 4)
            }
            ExprKind::Add(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " + ")?;
                write_child(f, b, 2)
            }
            ExprKind::Sub(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " - ")?;
                write_child(f, b, 2)
            }
            ExprKind::Mul(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "*")?;
                write_child(f, b, 4)
            }
            ExprKind::Div(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "/")?;
                write_child(f, b, 4)
            }
            ExprKind::Pow(a, b) => {
                write_child(f, a, 5)?;
                write!(f, "^")?;
                write_child(f, b, 4)
            }
            ExprKind::Sqrt(a) => write!(f, "sqrt({a})"),
            ExprKind::Sin(a) => write!(f, "sin({a})"),
            ExprKind::Cos(a) => write!(f, "cos({a})"),
            ExprKind::Exp(a) => write!(f, "exp({a})"),
            ExprKind::Ln(a) => write!(f, "ln({a})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> ScalarExpr {
        ScalarExpr::var("x")
    }

    #[test]
    fn structural_equality_and_hash() {
        let a = x().sin().add(&ScalarExpr::int(2));
        let b = x().sin().add(&ScalarExpr::int(2));
        assert!(!a.ptr_eq(&b));
        assert_eq!(a, b);
        assert_eq!(a.content_hash(), b.content_hash());
        assert_ne!(a, x().cos().add(&ScalarExpr::int(2)));
    }

    #[test]
    fn constant_folding() {
        let six = ScalarExpr::int(2).mul(&ScalarExpr::int(3));
        assert_eq!(six, ScalarExpr::int(6));
        let half = ScalarExpr::int(1).div(&ScalarExpr::int(2));
        assert_eq!(half.as_const(), Some(&Rational::new(1, 2)));
        assert_eq!(ScalarExpr::int(4).sqrt(), ScalarExpr::int(2));
        assert!(matches!(ScalarExpr::int(2).sqrt().kind(), ExprKind::Sqrt(_)));
        assert_eq!(ScalarExpr::int(2).pow(&ScalarExpr::int(-2)).as_const(), Some(&Rational::new(1, 4)));
    }

    #[test]
    fn identities_dropped() {
        assert_eq!(x().add(&ScalarExpr::zero()), x());
        assert_eq!(x().mul(&ScalarExpr::one()), x());
        assert_eq!(x().mul(&ScalarExpr::zero()), ScalarExpr::zero());
        assert_eq!(ScalarExpr::zero().sub(&x()), x().neg());
        assert_eq!(x().neg().neg(), x());
        assert_eq!(ScalarExpr::zero().cos(), ScalarExpr::one());
    }

    #[test]
    fn free_vars_in_order() {
        let e = ScalarExpr::var("b").mul(&ScalarExpr::var("a")).add(&ScalarExpr::var("b").sin());
        assert_eq!(e.free_vars(), vec!["b".to_string(), "a".to_string()]);
    }

    #[test]
    fn printing() {
        let e = x().div(&ScalarExpr::int(2)).sin().mul(&x().neg());
        assert_eq!(e.to_string(), "sin(x/2)*(~x)");
        let s = x().sub(&ScalarExpr::var("y").add(&ScalarExpr::int(1)));
        assert_eq!(s.to_string(), "x - (y + 1)");
    }
}
