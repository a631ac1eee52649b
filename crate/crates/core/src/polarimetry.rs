//! Jones and Mueller calculus.
//!
//! Two Stokes orderings meet here. Mueller matrices use the polarimetric
//! order `(S0, S1, S2, S3)`, related to the Pauli order `(σ0, σ1, σ2, σ3)` by
//! the permutation [`a_matrix`]: `S1 = Tr(ρσ3)`, `S2 = Tr(ρσ1)`,
//! `S3 = Tr(ρσ2)`. The topology code works in Pauli order
//! `(S0, Sx, Sy, Sz)`; [`to_polarimetric`] / [`from_polarimetric`] are the
//! only bridge between the two.

use nalgebra::{Matrix3, Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{out_of_range, Error, Result};
use crate::grid::Mat2;

pub type JonesMatrix = Mat2;
pub type MuellerMatrix = Matrix4<f64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// `[σ0, σ1, σ2, σ3]` = identity, σx, σy, σz.
pub fn pauli() -> [Mat2; 4] {
    [
        Mat2::new(ONE, ZERO, ZERO, ONE),
        Mat2::new(ZERO, ONE, ONE, ZERO),
        Mat2::new(ZERO, -I, I, ZERO),
        Mat2::new(ONE, ZERO, ZERO, -ONE),
    ]
}

/// Pauli-to-Stokes permutation: `S_μ = Σ_ν Aᵀ_{μν} Tr(σ_ν ρ)`.
pub fn a_matrix() -> Matrix4<f64> {
    Matrix4::new(
        1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        0.0, 1.0, 0.0, 0.0,
    )
}

/// Pauli-order Stokes vector `[S0, Sx, Sy, Sz]` of a 2×2 density matrix.
#[inline]
pub fn pauli_stokes(rho: &Mat2) -> [f64; 4] {
    let r11 = rho[(0, 0)].re;
    let r22 = rho[(1, 1)].re;
    let r12 = rho[(0, 1)];
    [r11 + r22, 2.0 * r12.re, -2.0 * r12.im, r11 - r22]
}

/// `[S0, Sx, Sy, Sz]` → `(S0, S1, S2, S3)`.
pub fn to_polarimetric(s: [f64; 4]) -> Vector4<f64> {
    Vector4::new(s[0], s[3], s[1], s[2])
}

/// `(S0, S1, S2, S3)` → `[S0, Sx, Sy, Sz]`.
pub fn from_polarimetric(s: &Vector4<f64>) -> [f64; 4] {
    [s[0], s[2], s[3], s[1]]
}

/// Retarder Jones matrix; an SU(2) element for any real angles.
pub fn jones_retarder(theta: f64, varphi: f64, psi: f64) -> JonesMatrix {
    let (s, c) = (0.5 * theta).sin_cos();
    let sum = 0.5 * (varphi + psi);
    let diff = 0.5 * (varphi - psi);
    Mat2::new(
        Complex64::from_polar(c, -sum),
        Complex64::from_polar(s, -diff),
        -Complex64::from_polar(s, diff),
        Complex64::from_polar(c, sum),
    )
}

/// Diattenuator Jones matrix with eigenvalues `√q`, `√r`.
pub fn jones_diattenuator(theta: f64, psi: f64, q: f64, r: f64) -> Result<JonesMatrix> {
    for (name, v) in [("q", q), ("r", r)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(out_of_range(name, v, "(0, 1]"));
        }
    }
    Ok(diattenuator_unchecked(theta, psi, q, r))
}

#[inline]
pub(crate) fn diattenuator_unchecked(theta: f64, psi: f64, q: f64, r: f64) -> JonesMatrix {
    let a = q.sqrt();
    let b = r.sqrt();
    let (s, c) = theta.sin_cos();
    let off = 0.5 * (a - b) * s;
    Mat2::new(
        Complex64::new(0.5 * (a + b + (a - b) * c), 0.0),
        Complex64::from_polar(off, psi),
        Complex64::from_polar(off, -psi),
        Complex64::new(0.5 * (a + b - (a - b) * c), 0.0),
    )
}

/// `M = ½ Aᵀ T A` with `T_{να} = Tr(σ_ν J σ_α J†)`.
pub fn mueller_from_jones(j: &JonesMatrix) -> Result<MuellerMatrix> {
    let s = pauli();
    let jd = j.adjoint();
    let scale = j.iter().map(|z| z.norm_sqr()).sum::<f64>().max(1.0);
    let mut t = Matrix4::zeros();
    let mut residue = 0.0f64;
    for nu in 0..4 {
        for alpha in 0..4 {
            let tr = (s[nu] * j * s[alpha] * jd).trace();
            residue = residue.max(tr.im.abs());
            t[(nu, alpha)] = tr.re;
        }
    }
    if residue > 1e-12 * scale {
        return Err(Error::ImaginaryResidue {
            what: "Mueller matrix",
            residue,
        });
    }
    let a = a_matrix();
    Ok(0.5 * a.transpose() * t * a)
}

/// `[[1, 0], [0ᵀ, m]]` for a symmetric `m` with eigenvalues in `[−1, 1]`.
pub fn mueller_depolarizer(m: &Matrix3<f64>) -> Result<MuellerMatrix> {
    let asym = (m - m.transpose()).abs().max();
    if asym > 1e-12 {
        return Err(out_of_range("depolarizer asymmetry", asym, "<= 1e-12"));
    }
    let eig = m.symmetric_eigen().eigenvalues;
    if let Some(bad) = eig.iter().find(|e| e.abs() > 1.0 + 1e-12) {
        return Err(out_of_range("depolarizer eigenvalue", *bad, "[-1, 1]"));
    }
    Ok(block(m))
}

/// `[[1, 0], [0ᵀ, R]]`.
pub fn mueller_retarder(rotation: &Matrix3<f64>) -> MuellerMatrix {
    block(rotation)
}

/// Canonical diattenuator Mueller matrix with transmittances `q`, `r`.
pub fn mueller_diattenuator(q: f64, r: f64) -> MuellerMatrix {
    let s = 0.5 * (q + r);
    let d = 0.5 * (q - r);
    let g = (q * r).sqrt();
    Matrix4::new(
        s, d, 0.0, 0.0, //
        d, s, 0.0, 0.0, //
        0.0, 0.0, g, 0.0, //
        0.0, 0.0, 0.0, g,
    )
}

fn block(m: &Matrix3<f64>) -> MuellerMatrix {
    let mut out = Matrix4::identity();
    out.fixed_view_mut::<3, 3>(1, 1).copy_from(m);
    out
}

pub fn apply_mueller(m: &MuellerMatrix, s: &Vector4<f64>) -> Vector4<f64> {
    m * s
}

/// Action of a Mueller matrix on Pauli-order Stokes 3-vectors (the lower
/// 3×3 block after undoing the `A` permutation).
pub fn pauli_rotation_block(m: &MuellerMatrix) -> Matrix3<f64> {
    let a = a_matrix();
    (a * m * a.transpose()).fixed_view::<3, 3>(1, 1).into_owned()
}

/// The Euler-angle rotation matrix in the form usually quoted next to the
/// retarder Jones matrix.
///
/// As printed it is *not* the block that `jones_retarder(θ, φ, ψ)` induces:
/// the Pauli-order block of that retarder equals this matrix evaluated at
/// `(θ, −φ, −ψ)` (see [`retarder_rotation`]).
pub fn euler_display(theta: f64, varphi: f64, psi: f64) -> Matrix3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sf, cf) = varphi.sin_cos();
    let (sp, cp) = psi.sin_cos();
    Matrix3::new(
        ct * cf * cp - sf * sp,
        cp * sf + ct * cf * sp,
        -cf * st,
        -ct * cp * sf - cf * sp,
        cp * cf - ct * sf * sp,
        sf * st,
        cp * st,
        st * sp,
        ct,
    )
}

/// Closed-form rotation of `(Sx, Sy, Sz)` produced by `jones_retarder(θ, φ, ψ)`.
pub fn retarder_rotation(theta: f64, varphi: f64, psi: f64) -> Matrix3<f64> {
    euler_display(theta, -varphi, -psi)
}
