//! Gate matrices written out directly from their textbook closed forms.

use num_complex::Complex64;
use qudit_core::Matrix;

use super::c;

fn m(d: usize, v: Vec<Complex64>) -> Matrix<f64> {
    Matrix::from_vec(d, d, v)
}

fn eix(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, x)
}

pub fn u3(t: f64, p: f64, l: f64) -> Matrix<f64> {
    let (cs, sn) = ((t / 2.0).cos(), (t / 2.0).sin());
    m(2, vec![c(cs, 0.0), -eix(l) * sn, eix(p) * sn, eix(p + l) * cs])
}

pub fn u2(p: f64, l: f64) -> Matrix<f64> {
    let s = 1.0 / 2f64.sqrt();
    m(2, vec![c(s, 0.0), -eix(l) * s, eix(p) * s, eix(p + l) * s])
}

pub fn u1(l: f64) -> Matrix<f64> {
    m(2, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), eix(l)])
}

pub fn rx(t: f64) -> Matrix<f64> {
    let (cs, sn) = ((t / 2.0).cos(), (t / 2.0).sin());
    m(2, vec![c(cs, 0.0), c(0.0, -sn), c(0.0, -sn), c(cs, 0.0)])
}

pub fn ry(t: f64) -> Matrix<f64> {
    let (cs, sn) = ((t / 2.0).cos(), (t / 2.0).sin());
    m(2, vec![c(cs, 0.0), c(-sn, 0.0), c(sn, 0.0), c(cs, 0.0)])
}

pub fn rz(t: f64) -> Matrix<f64> {
    m(2, vec![eix(-t / 2.0), c(0.0, 0.0), c(0.0, 0.0), eix(t / 2.0)])
}

pub fn rzz(t: f64) -> Matrix<f64> {
    let mut out = Matrix::zeros(4, 4);
    for (k, s) in [-1.0, 1.0, 1.0, -1.0].into_iter().enumerate() {
        out.set(k, k, eix(s * t / 2.0));
    }
    out
}

pub fn permutation(d: usize, f: impl Fn(usize) -> usize) -> Matrix<f64> {
    let mut out = Matrix::zeros(d, d);
    for col in 0..d {
        out.set(f(col), col, c(1.0, 0.0));
    }
    out
}

pub fn cnot() -> Matrix<f64> {
    permutation(4, |k| if k >= 2 { k ^ 1 } else { k })
}

pub fn swap() -> Matrix<f64> {
    permutation(4, |k| [0, 2, 1, 3][k])
}

pub fn phase3(a: f64, b: f64) -> Matrix<f64> {
    let mut out = Matrix::zeros(3, 3);
    out.set(0, 0, c(1.0, 0.0));
    out.set(1, 1, eix(a));
    out.set(2, 2, eix(b));
    out
}

pub fn csum() -> Matrix<f64> {
    permutation(9, |k| {
        let (a, b) = (k / 3, k % 3);
        a * 3 + (a + b) % 3
    })
}

pub fn hadamard() -> Matrix<f64> {
    let s = 1.0 / 2f64.sqrt();
    m(2, vec![c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
}

/// The gates of the standard figure, each with its closed form.
pub fn figure_gates() -> Vec<(&'static str, usize, fn(&[f64]) -> Matrix<f64>)> {
    vec![
        ("RX", 1, |p| rx(p[0])),
        ("RY", 1, |p| ry(p[0])),
        ("RZ", 1, |p| rz(p[0])),
        ("U1", 1, |p| u1(p[0])),
        ("U2", 2, |p| u2(p[0], p[1])),
        ("U3", 3, |p| u3(p[0], p[1], p[2])),
        ("CNOT", 0, |_| cnot()),
        ("RZZ", 1, |p| rzz(p[0])),
        ("Phase3", 2, |p| phase3(p[0], p[1])),
    ]
}

pub fn pauli_x() -> Matrix<f64> {
    permutation(2, |k| 1 - k)
}

pub fn phase_flip() -> Matrix<f64> {
    m(2, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}
