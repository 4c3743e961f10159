//! The QVM: executes bytecode over preallocated buffers to evaluate a
//! circuit's unitary and, optionally, all its partial derivatives.

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;

use crate::kernels::{exec_kernel, ExpressionModule, MatrixBuffer};
use crate::matrix::{kron_into, matmul_into, Matrix};
use crate::qcir::ParamBinding;
use crate::qvmc::{Bytecode, Compiled, Instruction, PermError, PermSpec};
use crate::scalar::RealScalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QvmError {
    #[error("expected {expected} parameters, got {found}")]
    ParamCount { expected: usize, found: usize },
    #[error("a kernel hit a domain error; the result holds non-finite values")]
    Domain,
    #[error("gradients were not enabled for this machine")]
    NoGradients,
}

/// `dst` = `src` reshaped, permuted, and reshaped per `spec`.
pub fn frpr_exec<R: RealScalar>(src: &MatrixBuffer<R>, spec: &PermSpec, dst: &mut MatrixBuffer<R>) -> Result<(), PermError> {
    for (shape, want) in [((src.rows(), src.cols()), spec.in_shape), ((dst.rows(), dst.cols()), spec.out_shape)] {
        if shape != want {
            return Err(PermError::Shape { shape, elements: spec.len() });
        }
    }
    spec.apply(src.data(), dst.data_mut())
}

/// Execution counts since construction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub static_executed: usize,
    pub dynamic_executed: usize,
    pub runs: usize,
}

// Gradient bookkeeping for one instruction.
#[derive(Clone, Debug)]
enum GradPlan {
    /// Per slot of the destination: the kernel partials feeding it.
    Write(Vec<Vec<usize>>),
    /// Destination slots equal the source's.
    Same,
    /// Per destination slot: the matching slot of each operand.
    Pair(Vec<(Option<usize>, Option<usize>)>),
}

struct Gradients<R: RealScalar> {
    // Per buffer, one matrix per slot it ever needs.
    banks: Vec<Vec<Matrix<R>>>,
    // Per instruction (static then dynamic): parameters of the result.
    params: Vec<Vec<usize>>,
    plans: Vec<GradPlan>,
    // Which instruction's value each buffer currently holds.
    holder: Vec<Option<usize>>,
    scratch: Matrix<R>,
}

/// A virtual machine instance. Many may share one bytecode and module.
pub struct Qvm<R: RealScalar> {
    bytecode: Arc<Bytecode>,
    module: Arc<ExpressionModule<R>>,
    buffers: Vec<MatrixBuffer<R>>,
    grads: Option<Gradients<R>>,
    warm: bool,
    counters: Counters,
    args: Vec<R>,
    regs: Vec<R>,
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut u: Vec<usize> = a.iter().chain(b).copied().collect();
    u.sort_unstable();
    u.dedup();
    u
}

impl<R: RealScalar> Qvm<R> {
    pub fn new(bytecode: Arc<Bytecode>, module: Arc<ExpressionModule<R>>, gradients: bool) -> Self {
        let grads = gradients.then(|| Self::plan_gradients(&bytecode));
        Qvm { bytecode, module, buffers: Vec::new(), grads, warm: false, counters: Counters::default(), args: vec![], regs: vec![] }
    }

    /// A machine for a compiled circuit, with its own copy of the kernels.
    pub fn from_compiled(c: &Compiled, gradients: bool) -> Self {
        Self::new(Arc::new(c.bytecode.clone()), Arc::new(c.module()), gradients)
    }

    fn plan_gradients(bc: &Bytecode) -> Gradients<R> {
        let mut current: Vec<Vec<usize>> = vec![vec![]; bc.buffers.len()];
        let mut width = vec![0usize; bc.buffers.len()];
        let mut params = Vec::new();
        let mut plans = Vec::new();
        for instr in bc.instructions() {
            let (ps, plan) = match instr {
                Instruction::Write { bindings, .. } => {
                    let mut ps: Vec<usize> = bindings.iter().filter_map(|b| b.var()).collect();
                    ps.sort_unstable();
                    ps.dedup();
                    let feeds = ps
                        .iter()
                        .map(|&p| (0..bindings.len()).filter(|&j| bindings[j] == ParamBinding::Var(p)).collect())
                        .collect();
                    (ps, GradPlan::Write(feeds))
                }
                Instruction::Frpr { src, .. } => (current[*src].clone(), GradPlan::Same),
                Instruction::Matmul { a, b, .. } | Instruction::Kron { a, b, .. } => {
                    let (pa, pb) = (&current[*a], &current[*b]);
                    let ps = union(pa, pb);
                    let slots = ps.iter().map(|p| (pa.binary_search(p).ok(), pb.binary_search(p).ok())).collect();
                    (ps, GradPlan::Pair(slots))
                }
            };
            let d = instr.dst();
            width[d] = width[d].max(ps.len());
            current[d] = ps.clone();
            params.push(ps);
            plans.push(plan);
        }
        let banks = bc
            .buffers
            .iter()
            .zip(&width)
            .map(|(b, &w)| (0..w).map(|_| Matrix::zeros(b.rows, b.cols)).collect())
            .collect();
        let scratch_len = bc.buffers.iter().map(|b| b.rows * b.cols).max().unwrap_or(0);
        Gradients {
            banks,
            params,
            plans,
            holder: vec![None; bc.buffers.len()],
            scratch: Matrix::zeros(1, scratch_len),
        }
    }

    pub fn bytecode(&self) -> &Bytecode {
        &self.bytecode
    }

    pub fn num_params(&self) -> usize {
        self.bytecode.num_params
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn is_warm(&self) -> bool {
        self.warm
    }

    /// Allocate buffers, set kernel targets to the identity and everything
    /// else to zero, and run the static section. Later calls do nothing.
    pub fn warmup(&mut self) {
        if self.warm {
            return;
        }
        self.buffers = self
            .bytecode
            .buffers
            .iter()
            .map(|b| if b.kernel_output { Matrix::identity(b.rows) } else { Matrix::zeros(b.rows, b.cols) })
            .collect();
        let bc = self.bytecode.clone();
        let mut ok = true;
        for (k, instr) in bc.static_code.iter().enumerate() {
            ok &= self.exec(instr, &[], false, k);
            self.counters.static_executed += 1;
        }
        debug_assert!(ok, "constant kernels are finite");
        self.warm = true;
    }

    fn check(&mut self, params: &[R]) -> Result<(), QvmError> {
        if params.len() != self.bytecode.num_params {
            return Err(QvmError::ParamCount { expected: self.bytecode.num_params, found: params.len() });
        }
        self.warmup();
        Ok(())
    }

    fn run(&mut self, params: &[R], grad: bool, mut trace: impl FnMut(usize, &Self)) -> bool {
        let bc = self.bytecode.clone();
        let offset = bc.static_code.len();
        let mut ok = true;
        for (k, instr) in bc.dynamic_code.iter().enumerate() {
            ok &= self.exec(instr, params, grad, offset + k);
            self.counters.dynamic_executed += 1;
            trace(k, self);
        }
        self.counters.runs += 1;
        ok
    }

    /// The circuit unitary at `params`.
    pub fn run_unitary(&mut self, params: &[R]) -> Result<Matrix<R>, QvmError> {
        self.check(params)?;
        let ok = self.run(params, false, |_, _| {});
        let out = self.buffers[self.bytecode.output].clone();
        if ok { Ok(out) } else { Err(QvmError::Domain) }
    }

    /// The unitary and its partial derivative for every circuit parameter.
    pub fn run_unitary_and_grad(&mut self, params: &[R]) -> Result<(Matrix<R>, Vec<Matrix<R>>), QvmError> {
        self.run_unitary_and_grad_traced(params, |_, _| {})
    }

    /// As [`Qvm::run_unitary_and_grad`], calling `trace` after each
    /// dynamic instruction with its index.
    pub fn run_unitary_and_grad_traced(
        &mut self,
        params: &[R],
        trace: impl FnMut(usize, &Self),
    ) -> Result<(Matrix<R>, Vec<Matrix<R>>), QvmError> {
        if self.grads.is_none() {
            return Err(QvmError::NoGradients);
        }
        self.check(params)?;
        let ok = self.run(params, true, trace);
        let out = self.bytecode.output;
        let u = self.buffers[out].clone();
        let partials = (0..self.bytecode.num_params).map(|p| self.partial(out, p)).collect();
        if ok { Ok((u, partials)) } else { Err(QvmError::Domain) }
    }

    /// Contents of buffer `b`.
    pub fn buffer(&self, b: usize) -> &MatrixBuffer<R> {
        &self.buffers[b]
    }

    /// Derivative of buffer `b`'s current contents with respect to
    /// parameter `p`.
    pub fn partial(&self, b: usize, p: usize) -> Matrix<R> {
        let (rows, cols) = (self.buffers[b].rows(), self.buffers[b].cols());
        let Some(g) = &self.grads else { return Matrix::zeros(rows, cols) };
        let slot = g.holder[b].and_then(|i| g.params[i].iter().position(|&q| q == p));
        match slot {
            Some(s) => g.banks[b][s].clone(),
            None => Matrix::zeros(rows, cols),
        }
    }

    fn exec(&mut self, instr: &Instruction, params: &[R], grad: bool, index: usize) -> bool {
        let mut ok = true;
        match instr {
            Instruction::Write { kernel, bindings, dst } => {
                self.args.clear();
                self.args.extend(bindings.iter().map(|b| match *b {
                    ParamBinding::Var(k) => params[k],
                    ParamBinding::Const(v) => R::from_f64_lossy(v),
                }));
                let entry = self.module.entry(*kernel);
                ok &= entry.unitary.exec_into(&self.args, self.buffers[*dst].data_mut(), &mut self.regs);
                if grad {
                    let g = self.grads.as_mut().unwrap();
                    let GradPlan::Write(feeds) = &g.plans[index] else { unreachable!() };
                    for (slot, js) in feeds.iter().enumerate() {
                        let bank = &mut g.banks[*dst][slot];
                        if let [j] = js[..] {
                            ok &= exec_kernel(&entry.gradients[j], &self.args, bank);
                            continue;
                        }
                        // A parameter bound more than once: sum the partials.
                        bank.data_mut().fill(Complex::zero());
                        let n = bank.data().len();
                        for &j in js {
                            let scratch = &mut g.scratch.data_mut()[..n];
                            scratch.fill(Complex::zero());
                            ok &= entry.gradients[j].exec_into(&self.args, scratch, &mut self.regs);
                            for (o, s) in bank.data_mut().iter_mut().zip(scratch.iter()) {
                                *o += *s;
                            }
                        }
                    }
                }
            }
            Instruction::Frpr { src, spec, dst } => {
                let mut out = std::mem::replace(&mut self.buffers[*dst], Matrix::zeros(0, 0));
                spec.apply_unchecked(self.buffers[*src].data(), out.data_mut());
                self.buffers[*dst] = out;
                if grad {
                    let g = self.grads.as_mut().unwrap();
                    let n = g.params[index].len();
                    let mut bank = std::mem::take(&mut g.banks[*dst]);
                    for (s, d) in g.banks[*src][..n].iter().zip(bank.iter_mut()) {
                        spec.apply_unchecked(s.data(), d.data_mut());
                    }
                    g.banks[*dst] = bank;
                }
            }
            Instruction::Matmul { a, b, dst, m, k, n } => {
                let (m, k, n) = (*m, *k, *n);
                let mut out = std::mem::replace(&mut self.buffers[*dst], Matrix::zeros(0, 0));
                matmul_into(self.buffers[*a].data(), self.buffers[*b].data(), out.data_mut(), m, k, n);
                self.buffers[*dst] = out;
                if grad {
                    self.product_rule(index, *a, *b, *dst, m * n, |x, y, o| matmul_into(x, y, o, m, k, n));
                }
            }
            Instruction::Kron { a, b, dst, a_shape, b_shape } => {
                let (sa, sb) = (*a_shape, *b_shape);
                let mut out = std::mem::replace(&mut self.buffers[*dst], Matrix::zeros(0, 0));
                kron_into(self.buffers[*a].data(), sa, self.buffers[*b].data(), sb, out.data_mut());
                self.buffers[*dst] = out;
                if grad {
                    let len = sa.0 * sa.1 * sb.0 * sb.1;
                    self.product_rule(index, *a, *b, *dst, len, |x, y, o| kron_into(x, sa, y, sb, o));
                }
            }
        }
        if let Some(g) = self.grads.as_mut() {
            g.holder[instr.dst()] = Some(index);
        }
        ok
    }

    /// `d(a∘b) = da∘b + a∘db` for each slot of `dst`.
    fn product_rule(
        &mut self,
        index: usize,
        a: usize,
        b: usize,
        dst: usize,
        len: usize,
        op: impl Fn(&[Complex<R>], &[Complex<R>], &mut [Complex<R>]),
    ) {
        let g = self.grads.as_mut().unwrap();
        let GradPlan::Pair(slots) = &g.plans[index] else { unreachable!() };
        let mut bank = std::mem::take(&mut g.banks[dst]);
        let (ua, ub) = (self.buffers[a].data(), self.buffers[b].data());
        for (&(sa, sb), out) in slots.iter().zip(bank.iter_mut()) {
            let out = out.data_mut();
            match (sa, sb) {
                (Some(i), None) => op(g.banks[a][i].data(), ub, out),
                (None, Some(j)) => op(ua, g.banks[b][j].data(), out),
                (Some(i), Some(j)) => {
                    op(g.banks[a][i].data(), ub, out);
                    let scratch = &mut g.scratch.data_mut()[..len];
                    op(ua, g.banks[b][j].data(), scratch);
                    for (o, s) in out.iter_mut().zip(scratch.iter()) {
                        *o += *s;
                    }
                }
                (None, None) => unreachable!("slot without a source"),
            }
        }
        g.banks[dst] = bank;
    }
}
