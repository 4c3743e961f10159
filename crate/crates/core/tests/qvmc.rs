mod common;

use common::circuits::random_circuit;
use common::{max_diff, random_params, rng};
use proptest::prelude::*;
use qudit_core::gates::GateLibrary;
use qudit_core::kernels::ModuleBuilder;
use qudit_core::qcir::generators::{brickwall, Brickwall};
use qudit_core::qcir::{partition, to_unitary_oracle, Circuit, ParamBinding};
use qudit_core::qvmc::*;
use qudit_core::{Matrix, Qvm64};

fn g(name: &str) -> qudit_core::UnitaryExprMatrix {
    GateLibrary::std_gate(name)
}

fn vars(r: std::ops::Range<usize>) -> Vec<ParamBinding> {
    r.map(ParamBinding::Var).collect()
}

fn run(c: &Compiled, params: &[f64]) -> Matrix<f64> {
    Qvm64::from_compiled(c, false).run_unitary(params).unwrap()
}

fn u3_u3_cnot() -> Circuit {
    let mut c = Circuit::qubits(2);
    c.append_gate(&g("U3"), &[0], vars(0..3)).unwrap();
    c.append_gate(&g("U3"), &[1], vars(3..6)).unwrap();
    c.append_gate(&g("CNOT"), &[0, 1], vec![]).unwrap();
    c
}

fn leaves(t: &ExprTree) -> Vec<usize> {
    t.post_order().into_iter().filter(|&i| matches!(t.node(i).kind, NodeKind::Leaf { .. })).collect()
}

#[test]
fn single_gate_is_a_leaf() {
    let mut c = Circuit::qubits(1);
    c.append_gate(&g("U3"), &[0], vars(0..3)).unwrap();
    let out = compile(&c, &CompileOptions::default()).unwrap();
    assert!(matches!(out.tree.root().kind, NodeKind::Leaf { .. }));
    assert!(out.bytecode.static_code.is_empty());
    assert_eq!(out.bytecode.dynamic_code.len(), 1);
    assert!(matches!(out.bytecode.dynamic_code[0], Instruction::Write { .. }));

    let mut k = Circuit::qubits(2);
    k.append_gate(&g("CNOT"), &[0, 1], vec![]).unwrap();
    let out = compile(&k, &CompileOptions::default()).unwrap();
    assert_eq!(out.bytecode.static_code.len(), 1);
    assert!(out.bytecode.dynamic_code.is_empty());
}

#[test]
fn single_qubit_pair_before_cnot_becomes_kron_then_matmul() {
    let c = u3_u3_cnot();
    let mut b = ModuleBuilder::new();
    let t = build_tree(&c, &mut b, &CompileOptions::default()).unwrap();
    let NodeKind::MatMul(l, r) = t.root().kind else { panic!("root is {:?}", t.root().kind) };
    assert!(matches!(t.node(l).kind, NodeKind::Leaf { .. }));
    assert!(matches!(t.node(r).kind, NodeKind::Kron(..)));
    assert_eq!(t.count(|k| matches!(k, NodeKind::Contract { .. })), 0);

    // Gates after the CNOT put the Kron on the left.
    let mut c2 = Circuit::qubits(2);
    c2.append_gate(&g("CNOT"), &[0, 1], vec![]).unwrap();
    c2.append_gate(&g("U3"), &[0], vars(0..3)).unwrap();
    c2.append_gate(&g("U3"), &[1], vars(3..6)).unwrap();
    let t2 = build_tree(&c2, &mut b, &CompileOptions::default()).unwrap();
    let NodeKind::MatMul(l, _) = t2.root().kind else { panic!() };
    assert!(matches!(t2.node(l).kind, NodeKind::Kron(..)));

    let p = random_params(&mut rng(1), 6);
    assert!(max_diff(&t.evaluate(&b, &p), &to_unitary_oracle(&c, &p).unwrap()) <= 1e-12);
}

#[test]
fn special_case_can_be_switched_off() {
    let c = u3_u3_cnot();
    let mut b = ModuleBuilder::new();
    let opts = CompileOptions { kron_threshold: 1, ..CompileOptions::default() };
    let t = build_tree(&c, &mut b, &opts).unwrap();
    assert_eq!(t.count(|k| matches!(k, NodeKind::Kron(..))), 0);
    let p = random_params(&mut rng(2), 6);
    assert!(max_diff(&t.evaluate(&b, &p), &to_unitary_oracle(&c, &p).unwrap()) <= 1e-12);
}

#[test]
fn fusion_collapses_the_two_qubit_block() {
    let c = u3_u3_cnot();
    let out = compile(&c, &CompileOptions::default()).unwrap();
    let NodeKind::Leaf { expr, ref bindings } = out.tree.root().kind else { panic!("not fused") };
    assert_eq!(bindings.len(), 6);
    assert_eq!(out.exprs.expr(expr).dim(), 4);
    let p = random_params(&mut rng(3), 6);
    assert!(max_diff(&run(&out, &p), &to_unitary_oracle(&c, &p).unwrap()) <= 1e-12);
}

#[test]
fn contractions_are_not_fused() {
    let c = brickwall(Brickwall::Thin, 3);
    let out = compile(&c, &CompileOptions::default()).unwrap();
    let t = &out.tree;
    assert!(t.count(|k| matches!(k, NodeKind::Contract { .. })) > 0);
    for i in leaves(t) {
        assert!(t.node(i).qudits().len() <= 2);
    }
    // Nothing above a contraction was replaced.
    let mut root = t.root;
    if let NodeKind::Perm { child, .. } = t.node(root).kind {
        root = child;
    }
    assert!(matches!(t.node(root).kind, NodeKind::Contract { .. }));
}

#[test]
fn fused_and_unfused_agree_on_random_circuits() {
    let mut r = rng(4);
    for _ in 0..30 {
        let c = random_circuit(&mut r, 4, 25, true);
        let p = random_params(&mut r, c.num_params());
        let a = compile(&c, &CompileOptions::default()).unwrap();
        let b = compile(&c, &CompileOptions::unoptimized()).unwrap();
        assert!(max_diff(&a.tree.evaluate(&a.exprs, &p), &b.tree.evaluate(&b.exprs, &p)) <= 1e-12);
        assert!(max_diff(&run(&a, &p), &run(&b, &p)) <= 1e-12);
    }
}

#[test]
fn frpr_fusion_saves_permutations_on_a_ladder() {
    let mut c = Circuit::qubits(4);
    c.append_gate(&g("RZZ"), &[0, 1], vars(0..1)).unwrap();
    c.append_gate(&g("RZZ"), &[1, 2], vars(1..2)).unwrap();
    c.append_gate(&g("RZZ"), &[2, 3], vars(2..3)).unwrap();
    let naive = CompileOptions { fuse: false, fuse_frpr: false, ..CompileOptions::default() };
    let fused = CompileOptions { fuse: false, ..CompileOptions::default() };
    let a = compile(&c, &naive).unwrap();
    let b = compile(&c, &fused).unwrap();
    let junctions = a.tree.count(|k| matches!(k, NodeKind::Contract { .. })) - 1;
    assert!(junctions >= 1);
    assert!(b.bytecode.num_frpr() + junctions <= a.bytecode.num_frpr(), "{} vs {}", b.bytecode.num_frpr(), a.bytecode.num_frpr());
    let p = random_params(&mut rng(5), 3);
    assert!(max_diff(&run(&a, &p), &run(&b, &p)) <= 1e-12);
    assert!(max_diff(&run(&b, &p), &to_unitary_oracle(&c, &p).unwrap()) <= 1e-12);
}

#[test]
fn identity_permutations_are_dropped() {
    let c = brickwall(Brickwall::Thin, 3);
    let out = compile(&c, &CompileOptions::default()).unwrap();
    for i in out.tree.post_order() {
        match &out.tree.node(i).kind {
            NodeKind::Perm { spec, .. } => assert!(!spec.is_identity()),
            NodeKind::Contract { left, right, out, .. } => {
                for s in [left, right, out].into_iter().flatten() {
                    assert!(!s.is_identity());
                }
            }
            _ => {}
        }
    }
}

/// `dst[j] = src[i]` where the output tensor's axis `a` is the input's axis
/// `perm[a]`, computed by explicit multi-index arithmetic.
fn naive_perm(spec: &PermSpec, src: &[u32]) -> Vec<u32> {
    let dims = &spec.dims;
    let n = dims.len();
    let out_dims: Vec<usize> = spec.perm.iter().map(|&a| dims[a]).collect();
    let mut dst = vec![0; src.len()];
    for (j, slot) in dst.iter_mut().enumerate() {
        let mut rem = j;
        let mut out_idx = vec![0; n];
        for a in (0..n).rev() {
            out_idx[a] = rem % out_dims[a];
            rem /= out_dims[a];
        }
        let mut in_idx = vec![0; n];
        for a in 0..n {
            in_idx[spec.perm[a]] = out_idx[a];
        }
        let i = (0..n).fold(0, |acc, a| acc * dims[a] + in_idx[a]);
        *slot = src[i];
    }
    dst
}

fn spec_strategy() -> impl Strategy<Value = PermSpec> {
    prop::collection::vec(1usize..4, 1..6)
        .prop_flat_map(|dims| {
            let n = dims.len();
            (Just(dims), Just((0..n).collect::<Vec<_>>()).prop_shuffle(), 0..=n, 0..=n)
        })
        .prop_map(|(dims, perm, a, b)| {
            let total: usize = dims.iter().product();
            let rows: usize = dims[..a].iter().product();
            let out_rows: usize = perm[..b].iter().map(|&i| dims[i]).product();
            PermSpec::new((rows, total / rows), dims, perm, (out_rows, total / out_rows)).unwrap()
        })
}

fn apply_tagged(spec: &PermSpec, src: &[u32]) -> Vec<u32> {
    use num_complex::Complex64;
    let s: Vec<Complex64> = src.iter().map(|&v| Complex64::new(v as f64, 0.0)).collect();
    let mut d = vec![Complex64::new(0.0, 0.0); s.len()];
    spec.apply(&s, &mut d).unwrap();
    d.iter().map(|z| z.re as u32).collect()
}

proptest! {
    #[test]
    fn perm_apply_matches_naive(spec in spec_strategy()) {
        let src: Vec<u32> = (0..spec.len() as u32).collect();
        prop_assert_eq!(apply_tagged(&spec, &src), naive_perm(&spec, &src));
    }

    #[test]
    fn composed_perm_equals_sequential(first in spec_strategy(), shuffle in any::<prop::sample::Index>()) {
        // A second permutation over the first one's output axes.
        let out_dims = first.out_dims();
        let n = out_dims.len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left(shuffle.index(n.max(1)));
        let total = first.len();
        let rows: usize = perm[..n / 2].iter().map(|&i| out_dims[i]).product();
        let second = PermSpec::new(first.out_shape, out_dims, perm, (rows, total / rows)).unwrap();
        let src: Vec<u32> = (0..total as u32).collect();
        let seq = apply_tagged(&second, &apply_tagged(&first, &src));
        let both = first.then(&second);
        prop_assert_eq!(apply_tagged(&both, &src), seq);
    }
}

#[test]
fn const_prop_marks_parameter_free_subtrees() {
    let mut c = Circuit::qubits(3);
    c.append_gate(&g("CNOT"), &[0, 1], vec![]).unwrap();
    c.append_gate(&g("CNOT"), &[1, 2], vec![]).unwrap();
    c.append_gate(&g("CZ"), &[0, 2], vec![]).unwrap();
    let out = compile(&c, &CompileOptions::unoptimized()).unwrap();
    assert!(out.tree.root().constant);

    let c = u3_u3_cnot();
    let mut b = ModuleBuilder::new();
    let mut t = build_tree(&c, &mut b, &CompileOptions::default()).unwrap();
    const_prop(&mut t);
    let NodeKind::MatMul(cnot, kron) = t.root().kind else { panic!() };
    assert!(t.node(cnot).constant);
    assert!(!t.node(kron).constant);
    assert!(!t.root().constant);
}

/// Free circuit parameters under node `i`, by walking its leaves.
fn free_params(t: &ExprTree, exprs: &ModuleBuilder, i: usize) -> Vec<usize> {
    let node = t.node(i);
    match &node.kind {
        NodeKind::Leaf { expr, bindings } => {
            let u = exprs.expr(*expr);
            let free = u.free_vars();
            u.params()
                .iter()
                .zip(bindings)
                .filter(|(name, _)| free.contains(name))
                .filter_map(|(_, b)| b.var())
                .collect()
        }
        _ => node.children().into_iter().flat_map(|k| free_params(t, exprs, k)).collect(),
    }
}

#[test]
fn const_prop_agrees_with_free_variable_scan() {
    let mut r = rng(6);
    for _ in 0..40 {
        let c = random_circuit(&mut r, 4, 20, true);
        for opts in [CompileOptions::default(), CompileOptions::unoptimized()] {
            let out = compile(&c, &opts).unwrap();
            for i in out.tree.post_order() {
                assert_eq!(out.tree.node(i).constant, free_params(&out.tree, &out.exprs, i).is_empty());
            }
        }
    }
}

#[test]
fn bytecode_is_well_formed_and_matches_the_tree() {
    let mut r = rng(7);
    for _ in 0..30 {
        let c = random_circuit(&mut r, 5, 30, true);
        let p = random_params(&mut r, c.num_params());
        for opts in [CompileOptions::default(), CompileOptions::unoptimized()] {
            let out = compile(&c, &opts).unwrap();
            out.bytecode.validate().unwrap();
            assert_eq!(out.bytecode.dim, c.dim());
            assert!(max_diff(&run(&out, &p), &out.tree.evaluate(&out.exprs, &p)) <= 1e-12);
        }
    }
}

#[test]
fn constant_subtrees_go_to_the_static_section() {
    // CNOT·(U3⊗I) with a constant two-qubit block on the other pair.
    let mut c = Circuit::qubits(3);
    c.append_gate(&g("CNOT"), &[1, 2], vec![]).unwrap();
    c.append_gate(&g("H"), &[1], vec![]).unwrap();
    c.append_gate(&g("CZ"), &[1, 2], vec![]).unwrap();
    c.append_gate(&g("U3"), &[0], vars(0..3)).unwrap();
    c.append_gate(&g("CNOT"), &[0, 1], vec![]).unwrap();
    let out = compile(&c, &CompileOptions::default()).unwrap();
    let bc = &out.bytecode;
    assert!(!bc.static_code.is_empty());
    assert!(!bc.dynamic_code.is_empty());
    for i in &bc.static_code {
        for s in i.sources() {
            assert!(bc.buffers[s].constant);
        }
    }
    let text = bc.to_string();
    assert!(text.starts_with("STATIC:\n"));
    assert!(text.contains("DYNAMIC:\n"));
    assert!(text.lines().any(|l| l.trim_start().starts_with("WRITE k")));

    let off = compile(&c, &CompileOptions { sectioning: false, ..CompileOptions::default() }).unwrap();
    assert!(off.bytecode.static_code.is_empty());
    let p = random_params(&mut rng(8), 3);
    assert_eq!(run(&out, &p), run(&off, &p));
}

#[test]
fn dump_format_lists_every_instruction() {
    let out = compile(&brickwall(Brickwall::Thin, 3), &CompileOptions::unoptimized()).unwrap();
    let text = out.bytecode.to_string();
    let body = text.lines().filter(|l| l.starts_with("  ")).count();
    assert_eq!(body, out.bytecode.static_code.len() + out.bytecode.dynamic_code.len());
    for l in text.lines().filter(|l| l.starts_with("  ")) {
        let l = l.trim_start();
        let ok = (l.starts_with("WRITE k") && l.contains(" -> b"))
            || (l.starts_with("FRPR b") && l.contains(" perm=[") && l.contains(" dims=["))
            || (l.starts_with("MATMUL b") && l.contains(" -> b"))
            || (l.starts_with("KRON b") && l.contains(" -> b"));
        assert!(ok, "{l}");
    }
}

#[test]
fn artifact_round_trips_through_json() {
    let out = compile(&brickwall(Brickwall::Thin, 2), &CompileOptions::default()).unwrap();
    let a = out.artifact();
    let text = serde_json::to_string(&a).unwrap();
    let back: Artifact = serde_json::from_str(&text).unwrap();
    assert_eq!(back.bytecode, a.bytecode);
}

#[test]
fn non_unitary_circuits_are_rejected() {
    let mut c = Circuit::with_clbits(vec![2], 1);
    c.append(qudit_core::qcir::Instruction {
        op: qudit_core::qcir::Operation::Measure,
        qudits: vec![0],
        clbits: vec![0],
    })
    .unwrap();
    assert_eq!(compile(&c, &CompileOptions::default()).unwrap_err(), CompileError::NonUnitary);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn end_to_end_matches_oracle(seed in any::<u64>(), fuse in any::<bool>(), sectioning in any::<bool>()) {
        let mut r = rng(seed);
        let c = random_circuit(&mut r, 5, 40, true);
        let p = random_params(&mut r, c.num_params());
        let opts = CompileOptions { fuse, fuse_frpr: fuse, sectioning, ..CompileOptions::default() };
        let out = compile(&c, &opts).unwrap();
        let err = max_diff(&run(&out, &p), &to_unitary_oracle(&c, &p).unwrap());
        prop_assert!(err <= 1e-10, "error {}", err);
    }
}

#[test]
fn static_buffers_do_not_change_between_runs() {
    let mut r = rng(9);
    for _ in 0..20 {
        let c = random_circuit(&mut r, 4, 30, true);
        let out = compile(&c, &CompileOptions::default()).unwrap();
        let mut vm = Qvm64::from_compiled(&out, false);
        let statics: Vec<usize> = (0..out.bytecode.buffers.len()).filter(|&b| out.bytecode.buffers[b].constant).collect();
        vm.warmup();
        let before: Vec<Matrix<f64>> = statics.iter().map(|&b| vm.buffer(b).clone()).collect();
        for _ in 0..5 {
            let p = random_params(&mut r, c.num_params());
            vm.run_unitary(&p).unwrap();
            for (k, &b) in statics.iter().enumerate() {
                assert_eq!(vm.buffer(b), &before[k]);
            }
        }
    }
}

#[test]
fn greedy_is_within_five_times_the_optimum() {
    for n in [3, 4] {
        let circ = partition(&brickwall(Brickwall::Thin, n), 2).unwrap();
        let mut b = ModuleBuilder::new();
        let t = build_tree(&circ, &mut b, &CompileOptions::default()).unwrap();
        let tensors: Vec<Vec<(usize, usize)>> =
            leaves(&t).into_iter().map(|i| t.node(i).layout.legs.iter().map(|l| (l.edge, l.dim)).collect()).collect();
        let opt = common::contraction::optimal_flops(&tensors);
        let greedy = t.contraction_flops();
        assert!(greedy >= opt);
        assert!(greedy <= 5.0 * opt, "n={n}: greedy {greedy} vs optimum {opt}");
    }
}

#[test]
fn enumerator_on_a_chain() {
    // Matrix chain A(2×3)·B(3×4)·C(4×5): best is (AB)C = 2·(24 + 40).
    let t = vec![vec![(0, 2), (1, 3)], vec![(1, 3), (2, 4)], vec![(2, 4), (3, 5)]];
    assert_eq!(common::contraction::optimal_flops(&t), 2.0 * (24.0 + 40.0));
}
