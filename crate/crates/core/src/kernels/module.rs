use std::collections::HashMap;
use std::marker::PhantomData;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::program::{compile_with, BufferInit, KernelProgram};
use crate::esat::{RuleSet, Simplifier};
use crate::matrix::Matrix;
use crate::scalar::{Precision, RealScalar};
use crate::symexpr::{ComplexExpr, ScalarExpr, UnitaryExprMatrix};

/// Index of an expression in a module.
pub type ExprId = usize;

/// Matrix storage filled by kernels.
pub type MatrixBuffer<R> = Matrix<R>;

/// A unitary expression and its partials after simplification.
#[derive(Clone, Debug)]
pub struct SimplifiedExpr {
    pub unitary: UnitaryExprMatrix,
    pub gradients: Vec<UnitaryExprMatrix>,
}

type ExprKey = (Vec<usize>, Vec<String>, Vec<ComplexExpr>);

fn key_of(u: &UnitaryExprMatrix) -> ExprKey {
    (u.radices().to_vec(), u.params().to_vec(), u.elements().to_vec())
}

// Saturation dominates build time and gate sets repeat across circuits, so
// results under the default configuration are shared per process.
fn default_cache() -> &'static Mutex<HashMap<ExprKey, Arc<SimplifiedExpr>>> {
    static CACHE: OnceLock<Mutex<HashMap<ExprKey, Arc<SimplifiedExpr>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Differentiate, then simplify the real and imaginary parts of the
/// unitary and every partial jointly in one e-graph.
pub fn simplify_with_gradients(s: &Simplifier, u: &UnitaryExprMatrix) -> SimplifiedExpr {
    let grads = u.differentiate();
    let mats: Vec<&UnitaryExprMatrix> = std::iter::once(u).chain(&grads).collect();
    let comps: Vec<ScalarExpr> =
        mats.iter().flat_map(|m| m.elements().iter().flat_map(|e| [e.re.clone(), e.im.clone()])).collect();
    let (out, _) = s.simplify_all(&comps);
    let per = 2 * u.elements().len();
    let rebuild = |m: &UnitaryExprMatrix, chunk: &[ScalarExpr]| {
        m.with_elements(chunk.chunks(2).map(|p| ComplexExpr::new(p[0].clone(), p[1].clone())).collect())
    };
    let mut chunks = out.chunks(per);
    let unitary = rebuild(u, chunks.next().unwrap());
    let gradients = grads.iter().zip(chunks).map(|(g, c)| rebuild(g, c)).collect();
    SimplifiedExpr { unitary, gradients }
}

/// Collects expressions for a module, deduplicated by expression identity.
#[derive(Clone, Debug)]
pub struct ModuleBuilder {
    simplifier: Simplifier,
    use_cache: bool,
    entries: Vec<Arc<SimplifiedExpr>>,
    index: HashMap<ExprKey, ExprId>,
}

impl Default for ModuleBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl ModuleBuilder {
    pub fn new() -> Self {
        ModuleBuilder { simplifier: Simplifier::default(), use_cache: true, entries: vec![], index: HashMap::new() }
    }

    pub fn with_simplifier(simplifier: Simplifier) -> Self {
        let use_cache = Arc::ptr_eq(&simplifier.rules, &RuleSet::default_rules())
            && simplifier.limits == Default::default()
            && simplifier.costs == Default::default();
        ModuleBuilder { simplifier, use_cache, entries: vec![], index: HashMap::new() }
    }

    /// Register `u`, simplifying it with its gradients. Identical
    /// expressions share one id.
    pub fn add(&mut self, u: &UnitaryExprMatrix) -> ExprId {
        let key = key_of(u);
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let simplified = if self.use_cache {
            let hit = default_cache().lock().unwrap().get(&key).cloned();
            hit.unwrap_or_else(|| {
                let s = Arc::new(simplify_with_gradients(&self.simplifier, u));
                default_cache().lock().unwrap().insert(key.clone(), s.clone());
                s
            })
        } else {
            Arc::new(simplify_with_gradients(&self.simplifier, u))
        };
        self.push(key, simplified)
    }

    /// Register `u` as is: the gradients are differentiated but nothing is
    /// simplified.
    pub fn add_unsimplified(&mut self, u: &UnitaryExprMatrix) -> ExprId {
        let key = key_of(u);
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let gradients = u.differentiate();
        self.push(key, Arc::new(SimplifiedExpr { unitary: u.clone(), gradients }))
    }

    fn push(&mut self, key: ExprKey, s: Arc<SimplifiedExpr>) -> ExprId {
        let id = self.entries.len();
        self.entries.push(s);
        self.index.insert(key, id);
        id
    }

    /// The simplified unitary registered under `id`.
    pub fn expr(&self, id: ExprId) -> &UnitaryExprMatrix {
        &self.entries[id].unitary
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Compile every registered expression.
    pub fn build<R: RealScalar>(&self) -> ExpressionModule<R> {
        let entries = self
            .entries
            .iter()
            .map(|s| ModuleEntry {
                dim: s.unitary.dim(),
                num_params: s.unitary.num_params(),
                unitary: compile_with(&s.unitary, BufferInit::Identity),
                gradients: s.gradients.iter().map(|g| compile_with(g, BufferInit::Zero)).collect(),
            })
            .collect();
        ExpressionModule::from_entries(entries)
    }
}

/// Build a module for `exprs`; repeated expressions share an entry.
pub fn build_module<R: RealScalar>(exprs: &[UnitaryExprMatrix]) -> (ExpressionModule<R>, Vec<ExprId>) {
    let mut b = ModuleBuilder::new();
    let ids = exprs.iter().map(|u| b.add(u)).collect();
    (b.build(), ids)
}

/// Compiled kernels of one expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuleEntry {
    pub dim: usize,
    pub num_params: usize,
    pub unitary: KernelProgram,
    /// One per parameter.
    pub gradients: Vec<KernelProgram>,
}

/// Unitary and gradient kernels for a set of expressions, evaluated at
/// precision `R`. Immutable once built.
#[derive(Clone, Debug)]
pub struct ExpressionModule<R: RealScalar> {
    entries: Vec<ModuleEntry>,
    _precision: PhantomData<R>,
}

impl<R: RealScalar> ExpressionModule<R> {
    pub fn from_entries(entries: Vec<ModuleEntry>) -> Self {
        ExpressionModule { entries, _precision: PhantomData }
    }

    pub fn entries(&self) -> &[ModuleEntry] {
        &self.entries
    }

    pub fn entry(&self, id: ExprId) -> &ModuleEntry {
        &self.entries[id]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn precision(&self) -> Precision {
        if R::BITS == 32 {
            Precision::Single
        } else {
            Precision::Double
        }
    }

    /// Evaluate the unitary of `id` into a fresh identity buffer.
    pub fn unitary(&self, id: ExprId, params: &[R]) -> (Matrix<R>, bool) {
        let e = &self.entries[id];
        let mut out = Matrix::identity(e.dim);
        let ok = exec_kernel(&e.unitary, params, &mut out);
        (out, ok)
    }

    /// Evaluate every partial of `id` into fresh zero buffers.
    pub fn gradient(&self, id: ExprId, params: &[R]) -> (Vec<Matrix<R>>, bool) {
        let e = &self.entries[id];
        let mut ok = true;
        let grads = e
            .gradients
            .iter()
            .map(|k| {
                let mut out = Matrix::zeros(e.dim, e.dim);
                ok &= exec_kernel(k, params, &mut out);
                out
            })
            .collect();
        (grads, ok)
    }
}

/// Run `k` into `out`, which must already hold the identity (unitary
/// kernels) or zeros (gradient kernels). Returns false on a domain error,
/// which shows up as a non-finite entry.
pub fn exec_kernel<R: RealScalar>(k: &KernelProgram, params: &[R], out: &mut MatrixBuffer<R>) -> bool {
    assert_eq!(params.len(), k.num_params, "wrong parameter count");
    assert_eq!((out.rows(), out.cols()), (k.dim, k.dim), "buffer shape differs from kernel");
    let mut regs = Vec::with_capacity(k.num_regs);
    k.exec_into(params, out.data_mut(), &mut regs)
}
