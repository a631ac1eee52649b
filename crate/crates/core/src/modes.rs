//! Laguerre–Gaussian modes and the local polarisation density matrix of the
//! two-photon Skyrmion state.
//!
//! Lengths are in units of the beam waist, so the physical state only ever
//! uses `w0 = 1`; [`lg_mode`] keeps `w0` explicit for reuse.

use std::f64::consts::{PI, SQRT_2, TAU};

use num_complex::Complex64;

use crate::error::{out_of_range, Error, Result};
use crate::grid::{Grid, Mat2, MatrixField};

/// Largest supported |l|; the normalisation uses `ln |l|!` so this is a
/// sanity bound rather than an overflow limit.
pub const MAX_ABS_L: i32 = 30;

/// Per-pixel 2×2 density matrices in the (|H⟩, |V⟩) basis. Traces are not
/// normalised.
pub type DensityField = MatrixField;

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// A p = 0 Laguerre–Gaussian mode with its normalisation precomputed.
#[derive(Clone, Copy, Debug)]
pub struct LgMode {
    l: i32,
    w0: f64,
    prefactor: f64,
}

impl LgMode {
    pub fn new(l: i32, w0: f64) -> Result<Self> {
        if l.abs() > MAX_ABS_L {
            return Err(Error::OamTooLarge(l));
        }
        if !(w0.is_finite() && w0 > 0.0) {
            return Err(out_of_range("w0", w0, "(0, inf)"));
        }
        let m = l.unsigned_abs();
        let prefactor = (0.5 * (2.0f64.ln() - PI.ln() - ln_factorial(m))).exp() / w0;
        Ok(Self { l, w0, prefactor })
    }

    pub fn l(&self) -> i32 {
        self.l
    }

    /// `√(2/(π|l|!))/w0 · (√2ρ/w0)^|l| · e^{−ρ²/w0²} · e^{ilφ}`
    #[inline]
    pub fn eval(&self, rho: f64, phi: f64) -> Complex64 {
        let s = rho / self.w0;
        let radial = self.prefactor * (SQRT_2 * s).powi(self.l.abs()) * (-s * s).exp();
        Complex64::from_polar(radial, self.l as f64 * phi)
    }
}

pub fn lg_mode(l: i32, w0: f64, rho: f64, phi: f64) -> Result<Complex64> {
    if rho.is_nan() || rho < 0.0 {
        return Err(out_of_range("rho", rho, "[0, inf)"));
    }
    Ok(LgMode::new(l, w0)?.eval(rho, phi))
}

/// OAM charges and relative phase of `u^{l1}|H⟩ + e^{iα} u^{l2}|V⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateSpec {
    l1: i32,
    l2: i32,
    alpha: f64,
}

impl StateSpec {
    /// `alpha` is wrapped into `[0, 2π)`.
    pub fn new(l1: i32, l2: i32, alpha: f64) -> Result<Self> {
        for l in [l1, l2] {
            if l.abs() > MAX_ABS_L {
                return Err(Error::OamTooLarge(l));
            }
        }
        if !alpha.is_finite() {
            return Err(out_of_range("alpha", alpha, "finite"));
        }
        let alpha = alpha.rem_euclid(TAU);
        Ok(Self {
            l1,
            l2,
            alpha: if alpha >= TAU { 0.0 } else { alpha },
        })
    }

    pub fn l1(&self) -> i32 {
        self.l1
    }

    pub fn l2(&self) -> i32 {
        self.l2
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Equal charges give a separable, topologically trivial state.
    pub fn is_product_like(&self) -> bool {
        self.l1 == self.l2
    }

    pub fn evaluator(&self) -> StateEvaluator {
        StateEvaluator {
            h: LgMode::new(self.l1, 1.0).expect("validated"),
            v: LgMode::new(self.l2, 1.0).expect("validated"),
            phase: Complex64::from_polar(1.0, self.alpha),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StateEvaluator {
    h: LgMode,
    v: LgMode,
    phase: Complex64,
}

impl StateEvaluator {
    /// Polarisation amplitudes `(u^{l1}, e^{iα}u^{l2})` at `(ρ, φ)`.
    #[inline]
    pub fn amplitudes(&self, rho: f64, phi: f64) -> (Complex64, Complex64) {
        (self.h.eval(rho, phi), self.phase * self.v.eval(rho, phi))
    }

    #[inline]
    pub fn density(&self, rho: f64, phi: f64) -> Mat2 {
        let (a, b) = self.amplitudes(rho, phi);
        Mat2::new(a * a.conj(), a * b.conj(), b * a.conj(), b * b.conj())
    }
}

/// `ρ_B = v v†` at a single point.
pub fn local_density(spec: &StateSpec, rho: f64, phi: f64) -> Mat2 {
    spec.evaluator().density(rho, phi)
}

pub fn build_state(spec: &StateSpec, grid: &Grid) -> DensityField {
    let ev = spec.evaluator();
    let g = *grid;
    DensityField::from_pixels(g, |i, j| {
        let (rho, phi) = g.polar(i, j);
        ev.density(rho, phi)
    })
}

/// Largest |ρ − ρ†| entry.
pub fn hermiticity_residual(m: &Mat2) -> f64 {
    let d = m - m.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues of the Hermitian part, ascending.
pub fn hermitian_eigenvalues(m: &Mat2) -> [f64; 2] {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    let half_tr = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [half_tr - disc, half_tr + disc]
}
