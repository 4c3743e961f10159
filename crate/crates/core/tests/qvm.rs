mod common;

use std::sync::Arc;

use common::circuits::random_circuit;
use common::{max_diff, random_params, rng};
use num_complex::Complex64;
use proptest::prelude::*;
use qudit_core::gates::GateLibrary;
use qudit_core::qcir::generators::{brickwall, Brickwall};
use qudit_core::qcir::{to_unitary_oracle, Circuit, ParamBinding};
use qudit_core::qvm::{frpr_exec, QvmError};
use qudit_core::qvmc::{compile, CompileOptions, Compiled, PermSpec};
use qudit_core::{Matrix, Qvm32, Qvm64};
use rand::Rng;

fn g(name: &str) -> qudit_core::UnitaryExprMatrix {
    GateLibrary::std_gate(name)
}

fn compiled(c: &Circuit) -> Compiled {
    compile(c, &CompileOptions::default()).unwrap()
}

/// Central differences of the unitary in every parameter.
fn finite_differences(vm: &mut Qvm64, p: &[f64], h: f64) -> Vec<Matrix<f64>> {
    (0..p.len())
        .map(|k| {
            let mut hi = p.to_vec();
            let mut lo = p.to_vec();
            hi[k] += h;
            lo[k] -= h;
            let a = vm.run_unitary(&hi).unwrap();
            let b = vm.run_unitary(&lo).unwrap();
            a.sub(&b).scale(Complex64::new(0.5 / h, 0.0))
        })
        .collect()
}

/// Relative error with an absolute floor for entries near zero.
fn grad_error(a: &Matrix<f64>, b: &Matrix<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).norm() / x.norm().max(y.norm()).max(1.0)).fold(0.0, f64::max)
}

#[test]
fn cnot_circuit_returns_cnot() {
    let mut c = Circuit::qubits(2);
    c.append_gate(&g("CNOT"), &[0, 1], vec![]).unwrap();
    let mut vm = Qvm64::from_compiled(&compiled(&c), false);
    assert_eq!(vm.run_unitary(&[]).unwrap(), g("CNOT").eval_numeric(&[]).unwrap());
}

#[test]
fn constant_circuit_is_ready_after_warmup() {
    let mut c = Circuit::qubits(3);
    c.append_gate(&g("H"), &[0], vec![]).unwrap();
    c.append_gate(&g("CNOT"), &[0, 1], vec![]).unwrap();
    c.append_gate(&g("CNOT"), &[1, 2], vec![]).unwrap();
    c.append_gate(&g("RZ"), &[2], vec![ParamBinding::Const(0.3)]).unwrap();
    let out = compiled(&c);
    assert!(out.bytecode.dynamic_code.is_empty());
    let mut vm = Qvm64::from_compiled(&out, false);
    assert!(!vm.is_warm());
    vm.warmup();
    let expect = to_unitary_oracle(&c, &[]).unwrap();
    assert!(max_diff(vm.buffer(out.bytecode.output), &expect) <= 1e-12);
    let before = vm.buffer(out.bytecode.output).clone();
    assert_eq!(vm.run_unitary(&[]).unwrap(), before);
    vm.warmup();
    assert_eq!(vm.counters().static_executed, out.bytecode.static_code.len());
}

#[test]
fn static_code_runs_once_over_many_runs() {
    let mut c = brickwall(Brickwall::Thin, 3);
    c.append_gate(&g("CNOT"), &[1, 2], vec![]).unwrap();
    c.append_gate(&g("CZ"), &[1, 2], vec![]).unwrap();
    let out = compiled(&c);
    assert!(!out.bytecode.static_code.is_empty());
    let mut vm = Qvm64::from_compiled(&out, false);
    let mut r = rng(12);
    for _ in 0..100 {
        vm.run_unitary(&random_params(&mut r, c.num_params())).unwrap();
    }
    let k = vm.counters();
    assert_eq!(k.static_executed, out.bytecode.static_code.len());
    assert_eq!(k.dynamic_executed, 100 * out.bytecode.dynamic_code.len());
    assert_eq!(k.runs, 100);
}

#[test]
fn repeated_runs_are_bit_identical() {
    let c = brickwall(Brickwall::Thin, 3);
    let mut vm = Qvm64::from_compiled(&compiled(&c), false);
    let mut r = rng(13);
    let p = random_params(&mut r, c.num_params());
    let a = vm.run_unitary(&p).unwrap();
    vm.run_unitary(&random_params(&mut r, c.num_params())).unwrap();
    assert_eq!(vm.run_unitary(&p).unwrap(), a);
}

#[test]
fn brickwalls_match_the_oracle_and_are_unitary() {
    let mut r = rng(14);
    for (variant, n) in [(Brickwall::Thin, 3), (Brickwall::Thick, 3), (Brickwall::Thin, 4)] {
        let c = brickwall(variant, n);
        let mut vm = Qvm64::from_compiled(&compiled(&c), false);
        for _ in 0..3 {
            let p = random_params(&mut r, c.num_params());
            let u = vm.run_unitary(&p).unwrap();
            assert!(max_diff(&u, &to_unitary_oracle(&c, &p).unwrap()) <= 1e-10);
            assert!(u.unitarity_error() <= 1e-9);
        }
    }
}

#[test]
fn wrong_parameter_count_is_an_error() {
    let c = brickwall(Brickwall::Thin, 2);
    let mut vm = Qvm64::from_compiled(&compiled(&c), false);
    assert_eq!(vm.run_unitary(&[0.0]).unwrap_err(), QvmError::ParamCount { expected: c.num_params(), found: 1 });
    assert_eq!(vm.run_unitary_and_grad(&vec![0.0; c.num_params()]).unwrap_err(), QvmError::NoGradients);
}

#[test]
fn machines_share_bytecode_across_threads() {
    let c = brickwall(Brickwall::Thin, 3);
    let out = compiled(&c);
    let bc = Arc::new(out.bytecode.clone());
    let module = Arc::new(out.module::<f64>());
    let p = random_params(&mut rng(15), c.num_params());
    let expect = to_unitary_oracle(&c, &p).unwrap();
    std::thread::scope(|s| {
        for _ in 0..4 {
            let (bc, module, p, expect) = (bc.clone(), module.clone(), &p, &expect);
            s.spawn(move || {
                let mut vm = Qvm64::new(bc, module, true);
                let u = vm.run_unitary(p).unwrap();
                assert!(max_diff(&u, expect) <= 1e-10);
            });
        }
    });
}

#[test]
fn single_and_double_precision_agree() {
    let mut r = rng(16);
    for _ in 0..10 {
        let c = random_circuit(&mut r, 4, 30, true);
        let out = compiled(&c);
        let p = random_params(&mut r, c.num_params());
        let p32: Vec<f32> = p.iter().map(|&x| x as f32).collect();
        let u64 = Qvm64::from_compiled(&out, false).run_unitary(&p).unwrap();
        let u32 = Qvm32::from_compiled(&out, false).run_unitary(&p32).unwrap();
        assert!(max_diff(&u32.cast::<f64>(), &u64) <= 1e-4);
    }
}

#[test]
fn gradients_match_finite_differences_on_brickwalls() {
    let mut r = rng(17);
    for variant in [Brickwall::Thin, Brickwall::Thick] {
        let c = brickwall(variant, 3);
        let out = compiled(&c);
        let mut vm = Qvm64::from_compiled(&out, true);
        let p = random_params(&mut r, c.num_params());
        let (u, grads) = vm.run_unitary_and_grad(&p).unwrap();
        assert!(max_diff(&u, &to_unitary_oracle(&c, &p).unwrap()) <= 1e-10);
        assert_eq!(grads.len(), c.num_params());
        let fd = finite_differences(&mut vm, &p, 1e-6);
        for (k, (a, b)) in grads.iter().zip(&fd).enumerate() {
            assert!(grad_error(a, b) <= 1e-5, "parameter {k}: {}", grad_error(a, b));
        }
    }
}

#[test]
fn gradients_of_random_circuits() {
    let mut r = rng(18);
    for _ in 0..15 {
        let c = random_circuit(&mut r, 4, 25, true);
        for opts in [CompileOptions::default(), CompileOptions::unoptimized()] {
            let out = compile(&c, &opts).unwrap();
            let mut vm = Qvm64::from_compiled(&out, true);
            let p = random_params(&mut r, c.num_params());
            let (_, grads) = vm.run_unitary_and_grad(&p).unwrap();
            let fd = finite_differences(&mut vm, &p, 1e-6);
            for (a, b) in grads.iter().zip(&fd) {
                assert!(grad_error(a, b) <= 1e-5);
            }
        }
    }
}

#[test]
fn constant_circuit_has_zero_gradients() {
    let mut c = Circuit::qubits(2);
    c.append_gate(&g("CNOT"), &[0, 1], vec![]).unwrap();
    c.append_gate(&g("U3"), &[1], vec![ParamBinding::Const(0.1), ParamBinding::Const(0.2), ParamBinding::Const(0.3)])
        .unwrap();
    c.reserve_params(2);
    let mut vm = Qvm64::from_compiled(&compiled(&c), true);
    let (_, grads) = vm.run_unitary_and_grad(&[0.4, 0.5]).unwrap();
    assert_eq!(grads.len(), 2);
    for d in grads {
        assert_eq!(d, Matrix::zeros(4, 4));
    }
}

#[test]
fn shared_parameter_gradient_is_the_sum_of_its_uses() {
    let build = |first: usize, second: usize| {
        let mut c = Circuit::qubits(2);
        c.append_gate(&g("U3"), &[0], vec![ParamBinding::Var(first), ParamBinding::Const(0.7), ParamBinding::Var(2)])
            .unwrap();
        c.append_gate(&g("CNOT"), &[0, 1], vec![]).unwrap();
        c.append_gate(&g("RX"), &[1], vec![ParamBinding::Var(second)]).unwrap();
        c.append_gate(&g("RZZ"), &[0, 1], vec![ParamBinding::Var(first)]).unwrap();
        c.reserve_params(3);
        c
    };
    // Parameter 0 feeds U3, RX, and RZZ; split, RX gets its own.
    let grad = |c: &Circuit, p: &[f64]| Qvm64::from_compiled(&compiled(c), true).run_unitary_and_grad(p).unwrap().1;
    let whole = grad(&build(0, 0), &[0.37, -1.1, 0.25]);
    let parts = grad(&build(0, 1), &[0.37, 0.37, 0.25]);
    assert!(max_diff(&whole[0], &parts[0].add(&parts[1])) <= 1e-12);
    assert_eq!(whole[1], Matrix::zeros(4, 4));
}

#[test]
fn gradient_banks_track_every_buffer() {
    let mut r = rng(19);
    for _ in 0..6 {
        let c = random_circuit(&mut r, 3, 15, true);
        let out = compile(&c, &CompileOptions::unoptimized()).unwrap();
        let n = c.num_params();
        let p = random_params(&mut r, n);
        let h = 1e-6;
        let dsts: Vec<usize> = out.bytecode.dynamic_code.iter().map(|i| i.dst()).collect();
        // Buffer contents after every dynamic instruction.
        let snapshot = |params: &[f64]| {
            let mut vm = Qvm64::from_compiled(&out, true);
            let mut seen = Vec::new();
            vm.run_unitary_and_grad_traced(params, |k, vm| {
                let b = dsts[k];
                seen.push((vm.buffer(b).clone(), (0..n).map(|q| vm.partial(b, q)).collect::<Vec<_>>()));
            })
            .unwrap();
            seen
        };
        let base = snapshot(&p);
        for q in 0..n {
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi[q] += h;
            lo[q] -= h;
            let (a, b) = (snapshot(&hi), snapshot(&lo));
            for k in 0..base.len() {
                let fd = a[k].0.sub(&b[k].0).scale(Complex64::new(0.5 / h, 0.0));
                assert!(grad_error(&base[k].1[q], &fd) <= 1e-4, "instruction {k}, parameter {q}");
            }
        }
    }
}

#[test]
fn frpr_identity_copies() {
    let mut r = rng(20);
    let m = Matrix::from_fn(4, 6, |_, _| Complex64::new(r.gen(), r.gen()));
    let spec = PermSpec::new((4, 6), vec![2, 2, 2, 3], vec![0, 1, 2, 3], (4, 6)).unwrap();
    let mut out = Matrix::zeros(4, 6);
    frpr_exec(&m, &spec, &mut out).unwrap();
    assert_eq!(out, m);
    let mut bad = Matrix::zeros(6, 4);
    assert!(frpr_exec(&m, &spec, &mut bad).is_err());
}

#[test]
fn frpr_swapping_row_and_column_qubits_conjugates_by_swap() {
    let mut r = rng(21);
    let m = Matrix::from_fn(4, 4, |_, _| Complex64::new(r.gen(), r.gen()));
    let spec = PermSpec::new((4, 4), vec![2, 2, 2, 2], vec![1, 0, 3, 2], (4, 4)).unwrap();
    let mut out = Matrix::zeros(4, 4);
    frpr_exec(&m, &spec, &mut out).unwrap();
    let swap = g("SWAP").eval_numeric(&[]).unwrap();
    assert_eq!(out, swap.matmul(&m).matmul(&swap));
}

/// Reshape to a tensor, transpose by explicit index arithmetic, reshape.
fn naive_frpr(m: &Matrix<f64>, spec: &PermSpec) -> Matrix<f64> {
    let dims = &spec.dims;
    let n = dims.len();
    let mut out = Matrix::zeros(spec.out_shape.0, spec.out_shape.1);
    let total: usize = dims.iter().product();
    let mut idx = vec![0usize; n];
    for flat in 0..total {
        let mut rem = flat;
        for a in (0..n).rev() {
            idx[a] = rem % dims[a];
            rem /= dims[a];
        }
        let j = spec.perm.iter().fold(0, |acc, &a| acc * dims[a] + idx[a]);
        out.data_mut()[j] = m.data()[flat];
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn frpr_matches_naive_tensor_oracle(
        dims in prop::collection::vec(1usize..4, 1..7),
        seed in any::<u64>(),
    ) {
        let mut r = rng(seed);
        let n = dims.len();
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, r.gen_range(0..=i));
        }
        let total: usize = dims.iter().product();
        let a = r.gen_range(0..=n);
        let b = r.gen_range(0..=n);
        let rows: usize = dims[..a].iter().product();
        let out_rows: usize = perm[..b].iter().map(|&i| dims[i]).product();
        let spec = PermSpec::new((rows, total / rows), dims, perm, (out_rows, total / out_rows)).unwrap();
        let m = Matrix::from_fn(rows, total / rows, |_, _| Complex64::new(r.gen(), r.gen()));
        let mut out = Matrix::zeros(out_rows, total / out_rows);
        frpr_exec(&m, &spec, &mut out).unwrap();
        prop_assert_eq!(out, naive_frpr(&m, &spec));
    }
}
