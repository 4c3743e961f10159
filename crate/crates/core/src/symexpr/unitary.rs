use std::collections::{HashMap, HashSet};
use std::fmt;

use num_complex::Complex;

use super::complex::ComplexExpr;
use super::diff::diff_memo;
use super::eval::Evaluator;
use super::scalar::ScalarExpr;
use super::SymError;
use crate::matrix::Matrix;

/// A square matrix of complex symbolic expressions over named parameters.
#[derive(Clone, PartialEq, Eq)]
pub struct UnitaryExprMatrix {
    name: String,
    radices: Vec<usize>,
    params: Vec<String>,
    dim: usize,
    elements: Vec<ComplexExpr>,
}

impl UnitaryExprMatrix {
    /// Build from row-major elements. Every free variable must be a parameter.
    pub fn new(
        name: impl Into<String>,
        radices: Vec<usize>,
        params: Vec<String>,
        elements: Vec<ComplexExpr>,
    ) -> Result<Self, SymError> {
        let dim: usize = radices.iter().product();
        if radices.iter().any(|&r| r < 2) {
            if !(radices.is_empty() && dim == 1) {
                return Err(SymError::InvalidRadices(radices));
            }
        }
        if elements.len() != dim * dim {
            return Err(SymError::DimensionMismatch { expected: dim, found: (elements.len() as f64).sqrt() as usize });
        }
        let mut seen = HashSet::new();
        for p in &params {
            if !seen.insert(p.clone()) {
                return Err(SymError::DuplicateParameter(p.clone()));
            }
        }
        let u = UnitaryExprMatrix { name: name.into(), radices, params, dim, elements };
        for v in u.free_vars() {
            if !seen.contains(&v) {
                return Err(SymError::UnknownVariable(v));
            }
        }
        Ok(u)
    }

    pub fn identity(radices: Vec<usize>) -> Self {
        let dim: usize = radices.iter().product();
        let elements =
            (0..dim * dim).map(|k| if k / dim == k % dim { ComplexExpr::one() } else { ComplexExpr::zero() }).collect();
        UnitaryExprMatrix { name: "I".into(), radices, params: vec![], dim, elements }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn num_qudits(&self) -> usize {
        self.radices.len()
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[ComplexExpr] {
        &self.elements
    }

    pub fn get(&self, r: usize, c: usize) -> &ComplexExpr {
        &self.elements[r * self.dim + c]
    }

    /// Replace all elements, keeping name, radices and parameters.
    pub fn with_elements(&self, elements: Vec<ComplexExpr>) -> Self {
        assert_eq!(elements.len(), self.elements.len());
        UnitaryExprMatrix { elements, ..self.clone() }
    }

    /// Free variables across all elements in row-major, real-then-imaginary
    /// first-appearance order.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for e in &self.elements {
            e.re.collect_vars(&mut out, &mut seen);
            e.im.collect_vars(&mut out, &mut seen);
        }
        out
    }

    pub fn is_parameterized(&self) -> bool {
        !self.free_vars().is_empty()
    }

    fn union_params(&self, other: &UnitaryExprMatrix) -> Vec<String> {
        let mut params = self.params.clone();
        for p in &other.params {
            if !params.contains(p) {
                params.push(p.clone());
            }
        }
        params
    }

    /// Symbolic product `self · rhs`.
    pub fn matmul_sym(&self, rhs: &UnitaryExprMatrix) -> Result<Self, SymError> {
        if self.dim != rhs.dim || self.radices != rhs.radices {
            return Err(SymError::DimensionMismatch { expected: self.dim, found: rhs.dim });
        }
        let d = self.dim;
        let elements = matmul_elements(&self.elements, &rhs.elements, d, d, d);
        Ok(UnitaryExprMatrix {
            name: format!("{}·{}", self.name, rhs.name),
            radices: self.radices.clone(),
            params: self.union_params(rhs),
            dim: d,
            elements,
        })
    }

    /// Symbolic Kronecker product `self ⊗ rhs`.
    pub fn kron_sym(&self, rhs: &UnitaryExprMatrix) -> Self {
        let elements = kron_elements(&self.elements, self.dim, &rhs.elements, rhs.dim);
        let mut radices = self.radices.clone();
        radices.extend_from_slice(&rhs.radices);
        UnitaryExprMatrix {
            name: format!("{}⊗{}", self.name, rhs.name),
            radices,
            params: self.union_params(rhs),
            dim: self.dim * rhs.dim,
            elements,
        }
    }

    /// Replace parameters by expressions.
    ///
    /// The new parameter list keeps the original order; a substituted
    /// parameter is replaced in place by the not-yet-listed variables of its
    /// replacement.
    pub fn substitute(&self, map: &HashMap<String, ScalarExpr>) -> Result<Self, SymError> {
        for k in map.keys() {
            if !self.params.contains(k) {
                return Err(SymError::UnknownVariable(k.clone()));
            }
        }
        let mut memo = HashMap::new();
        let mut f = |node: &ScalarExpr, kids: &[ScalarExpr]| match node.as_var() {
            Some(name) => map.get(name).cloned().unwrap_or_else(|| node.clone()),
            None => node.rebuild(kids),
        };
        let elements: Vec<ComplexExpr> = self
            .elements
            .iter()
            .map(|e| ComplexExpr::new(e.re.map_memo(&mut f, &mut memo), e.im.map_memo(&mut f, &mut memo)))
            .collect();
        let mut candidates: Vec<String> = Vec::new();
        for p in &self.params {
            match map.get(p) {
                Some(rep) => {
                    for v in rep.free_vars() {
                        if !candidates.contains(&v) {
                            candidates.push(v);
                        }
                    }
                }
                None => {
                    if !candidates.contains(p) {
                        candidates.push(p.clone());
                    }
                }
            }
        }
        let out = UnitaryExprMatrix { elements, params: vec![], ..self.clone() };
        let free: HashSet<String> = out.free_vars().into_iter().collect();
        let params = candidates.into_iter().filter(|v| free.contains(v)).collect();
        Ok(UnitaryExprMatrix { params, ..out })
    }

    /// Rename parameters positionally; the result keeps all parameters even
    /// if some no longer appear.
    pub fn rename_params(&self, new_names: &[String]) -> Self {
        assert_eq!(new_names.len(), self.params.len());
        let map: HashMap<String, ScalarExpr> =
            self.params.iter().zip(new_names).map(|(old, new)| (old.clone(), ScalarExpr::var(new))).collect();
        let mut memo = HashMap::new();
        let mut f = |node: &ScalarExpr, kids: &[ScalarExpr]| match node.as_var() {
            Some(name) => map.get(name).cloned().unwrap_or_else(|| node.clone()),
            None => node.rebuild(kids),
        };
        let elements = self
            .elements
            .iter()
            .map(|e| ComplexExpr::new(e.re.map_memo(&mut f, &mut memo), e.im.map_memo(&mut f, &mut memo)))
            .collect();
        UnitaryExprMatrix { elements, params: new_names.to_vec(), ..self.clone() }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let d = self.dim;
        let elements = (0..d * d).map(|k| self.elements[(k % d) * d + k / d].conj()).collect();
        UnitaryExprMatrix { name: format!("{}†", self.name), elements, ..self.clone() }
    }

    /// Transpose without conjugation.
    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let elements = (0..d * d).map(|k| self.elements[(k % d) * d + k / d].clone()).collect();
        UnitaryExprMatrix { elements, ..self.clone() }
    }

    /// Lift onto a larger system, acting on `positions` (local qudit `i` at
    /// global qudit `positions[i]`) and as the identity elsewhere. Qudit 0 is
    /// the most significant digit of an index.
    pub fn embed(&self, target_radices: &[usize], positions: &[usize]) -> Result<Self, SymError> {
        if positions.len() != self.radices.len() {
            return Err(SymError::InvalidEmbedding("position count differs from qudit count".into()));
        }
        let mut seen = HashSet::new();
        for (i, &p) in positions.iter().enumerate() {
            if p >= target_radices.len() {
                return Err(SymError::InvalidEmbedding(format!("position {p} out of range")));
            }
            if !seen.insert(p) {
                return Err(SymError::InvalidEmbedding(format!("duplicate position {p}")));
            }
            if target_radices[p] != self.radices[i] {
                return Err(SymError::InvalidEmbedding(format!(
                    "radix {} at position {p} does not match {}",
                    target_radices[p], self.radices[i]
                )));
            }
        }
        let n = target_radices.len();
        let big: usize = target_radices.iter().product();
        let digits = |mut idx: usize| {
            let mut ds = vec![0; n];
            for q in (0..n).rev() {
                ds[q] = idx % target_radices[q];
                idx /= target_radices[q];
            }
            ds
        };
        let local_index = |ds: &[usize]| positions.iter().enumerate().fold(0, |acc, (i, &p)| acc * self.radices[i] + ds[p]);
        let others: Vec<usize> = (0..n).filter(|q| !seen.contains(q)).collect();
        let mut elements = Vec::with_capacity(big * big);
        let row_digits: Vec<Vec<usize>> = (0..big).map(digits).collect();
        for r in 0..big {
            for c in 0..big {
                let (dr, dc) = (&row_digits[r], &row_digits[c]);
                if others.iter().any(|&q| dr[q] != dc[q]) {
                    elements.push(ComplexExpr::zero());
                } else {
                    elements.push(self.get(local_index(dr), local_index(dc)).clone());
                }
            }
        }
        Ok(UnitaryExprMatrix {
            name: self.name.clone(),
            radices: target_radices.to_vec(),
            params: self.params.clone(),
            dim: big,
            elements,
        })
    }

    /// One matrix of partial derivatives per parameter, in parameter order.
    pub fn differentiate(&self) -> Vec<UnitaryExprMatrix> {
        self.params
            .iter()
            .map(|p| {
                let mut memo = HashMap::new();
                let elements = self
                    .elements
                    .iter()
                    .map(|e| ComplexExpr::new(diff_memo(&e.re, p, &mut memo), diff_memo(&e.im, p, &mut memo)))
                    .collect();
                UnitaryExprMatrix { name: format!("d{}/d{p}", self.name), elements, ..self.clone() }
            })
            .collect()
    }

    /// Evaluate numerically in 64-bit floats.
    pub fn eval_numeric(&self, p: &[f64]) -> Result<Matrix<f64>, SymError> {
        if p.len() != self.params.len() {
            return Err(SymError::ParamCount { expected: self.params.len(), found: p.len() });
        }
        let env: HashMap<String, f64> = self.params.iter().cloned().zip(p.iter().copied()).collect();
        let mut ev = Evaluator::new(&env);
        let mut data = Vec::with_capacity(self.elements.len());
        for (k, e) in self.elements.iter().enumerate() {
            let at = |err| SymError::Domain { row: k / self.dim, col: k % self.dim, reason: err };
            let re = ev.eval(&e.re).map_err(at)?;
            let im = ev.eval(&e.im).map_err(at)?;
            data.push(Complex::new(re, im));
        }
        Ok(Matrix::from_vec(self.dim, self.dim, data))
    }

    /// Total expression size, summed over elements as trees.
    pub fn tree_size(&self) -> f64 {
        self.elements.iter().map(|e| e.re.tree_size() + e.im.tree_size()).sum()
    }
}

/// Row-major symbolic product of an `m×k` and a `k×n` element grid.
///
/// Each element sums its products in ascending inner-index order from the
/// first term, matching the numeric accumulation in [`crate::matrix::matmul_into`].
pub fn matmul_elements(a: &[ComplexExpr], b: &[ComplexExpr], m: usize, k: usize, n: usize) -> Vec<ComplexExpr> {
    let mut out = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            let mut acc = ComplexExpr::zero();
            for p in 0..k {
                acc = acc.add(&a[i * k + p].mul(&b[p * n + j]));
            }
            out.push(acc);
        }
    }
    out
}

/// Symbolic Kronecker product of two square grids.
pub fn kron_elements(a: &[ComplexExpr], da: usize, b: &[ComplexExpr], db: usize) -> Vec<ComplexExpr> {
    let d = da * db;
    let mut out = vec![ComplexExpr::zero(); d * d];
    for i1 in 0..da {
        for j1 in 0..da {
            let av = &a[i1 * da + j1];
            for i2 in 0..db {
                for j2 in 0..db {
                    out[(i1 * db + i2) * d + j1 * db + j2] = av.mul(&b[i2 * db + j2]);
                }
            }
        }
    }
    out
}

impl fmt::Display for UnitaryExprMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name: String =
            self.name.chars().map(|c| if c.is_alphanumeric() || c == '_' { c } else { '_' }).collect();
        let name = if name.starts_with(|c: char| c.is_alphabetic() || c == '_') { name } else { format!("_{name}") };
        write!(f, "utry {name}")?;
        if !self.radices.is_empty() {
            let rs: Vec<String> = self.radices.iter().map(|r| r.to_string()).collect();
            write!(f, "<{}>", rs.join(", "))?;
        }
        writeln!(f, "({}) {{", self.params.join(", "))?;
        writeln!(f, "  [")?;
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim).map(|c| self.get(r, c).to_string()).collect();
            writeln!(f, "    [{}],", row.join(", "))?;
        }
        writeln!(f, "  ]")?;
        write!(f, "}}")
    }
}

impl fmt::Debug for UnitaryExprMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
