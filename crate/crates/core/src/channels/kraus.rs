//! Pointwise Kraus operators for the constant-parameter channel families.

use num_complex::Complex64;

use crate::grid::Mat2;
use crate::polarimetry::pauli;

#[inline]
fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

#[inline]
fn diag(a: f64, b: f64) -> Mat2 {
    Mat2::new(c(a), c(0.0), c(0.0), c(b))
}

/// `{√p·I, √(1−p)·σ1}`: `p = 1` leaves the state alone, `p = 0` swaps H and V.
pub fn bit_flip(p: f64) -> [Mat2; 2] {
    let s = pauli();
    [s[0] * c(p.sqrt()), s[1] * c((1.0 - p).sqrt())]
}

/// `{√p·I, √(1−p)·σ3}`.
pub fn phase_flip(p: f64) -> [Mat2; 2] {
    let s = pauli();
    [s[0] * c(p.sqrt()), s[3] * c((1.0 - p).sqrt())]
}

/// `{√(1−3p/4)·I, √(p/4)·σ1, √(p/4)·σ2, √(p/4)·σ3}`, equivalent to
/// `ρ ↦ (p/2)·tr(ρ)·I + (1−p)·ρ`.
pub fn depolarizing(p: f64) -> [Mat2; 4] {
    let s = pauli();
    let a = c((1.0 - 0.75 * p).sqrt());
    let b = c((0.25 * p).sqrt());
    [s[0] * a, s[1] * b, s[2] * b, s[3] * b]
}

/// `{diag(1, √(1−p)), √p·|H⟩⟨V|}`.
pub fn amplitude_damping(p: f64) -> [Mat2; 2] {
    [
        diag(1.0, (1.0 - p).sqrt()),
        Mat2::new(c(0.0), c(p.sqrt()), c(0.0), c(0.0)),
    ]
}

/// `{diag(1, √(1−p)), diag(0, √p)}`.
pub fn phase_damping(p: f64) -> [Mat2; 2] {
    [diag(1.0, (1.0 - p).sqrt()), diag(0.0, p.sqrt())]
}

/// `Σ K ρ K†`.
#[inline]
pub fn conjugate_sum(ops: &[Mat2], rho: &Mat2) -> Mat2 {
    ops.iter().fold(Mat2::zeros(), |acc, k| acc + k * rho * k.adjoint())
}
