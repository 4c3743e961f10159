use num_complex::Complex64;

use super::{Circuit, CircuitError, Operation, ParamBinding};
use crate::matrix::Matrix;

/// Digits of `index` in the mixed radix `radices`, most significant first.
fn digits(mut index: usize, radices: &[usize], out: &mut [usize]) {
    for (d, &r) in out.iter_mut().zip(radices).rev() {
        *d = index % r;
        index /= r;
    }
}

/// Extend `g`, acting on `qudits` (first is most significant), to the full
/// space of `radices` by tensoring with the identity.
pub fn extend_gate(g: &Matrix<f64>, radices: &[usize], qudits: &[usize]) -> Matrix<f64> {
    let dim: usize = radices.iter().product();
    let local: Vec<usize> = qudits.iter().map(|&q| radices[q]).collect();
    let n = radices.len();
    let mut rd = vec![0; n];
    let mut cd = vec![0; n];
    let sub = |d: &[usize]| qudits.iter().zip(&local).fold(0, |acc, (&q, &r)| acc * r + d[q]);
    Matrix::from_fn(dim, dim, |r, c| {
        digits(r, radices, &mut rd);
        digits(c, radices, &mut cd);
        let same_rest = (0..n).all(|q| qudits.contains(&q) || rd[q] == cd[q]);
        if same_rest {
            g.get(sub(&rd), sub(&cd))
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// The circuit unitary as the ordered product of extended gates, in double
/// precision. Fails on measurement, reset, or classical control.
pub fn to_unitary_oracle(c: &Circuit, params: &[f64]) -> Result<Matrix<f64>, CircuitError> {
    if params.len() < c.num_params() {
        return Err(CircuitError::ParamCount { expected: c.num_params(), found: params.len() });
    }
    let mut u = Matrix::identity(c.dim());
    for r in c.iter_dag() {
        let instr = c.instruction(r);
        let values = |ps: &[ParamBinding]| ps.iter().map(|p| p.value(params)).collect::<Vec<f64>>();
        let g = match &instr.op {
            Operation::Gate { gate, params: ps } => c
                .gate_set()
                .get(*gate)
                .ok_or(CircuitError::UnknownGate(*gate))?
                .eval_numeric(&values(ps))
                .map_err(|e| CircuitError::Malformed(e.to_string()))?,
            Operation::Subcircuit { circuit, params: ps } => to_unitary_oracle(circuit, &values(ps))?,
            Operation::Measure => return Err(CircuitError::NonUnitary("measure".into())),
            Operation::Reset => return Err(CircuitError::NonUnitary("reset".into())),
            Operation::ClassicallyControlled { .. } => {
                return Err(CircuitError::NonUnitary("classically controlled".into()))
            }
        };
        let e = extend_gate(&g, c.radices(), &instr.qudits);
        u = e.matmul(&u);
    }
    Ok(u)
}
