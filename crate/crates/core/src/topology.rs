//! Stokes fields, normalisation to the Poincaré sphere, and the Skyrmion
//! number `N = (1/4π) ∫∫ S̃·(∂ₓS̃ × ∂ᵧS̃) dx dy`.
//!
//! Stokes vectors here are in Pauli order, `(Sx, Sy, Sz) = Tr(ρσ₁), Tr(ρσ₂), Tr(ρσ₃)`.

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::channels::DEFAULT_TRACE_FLOOR;
use crate::error::{Error, Result};
use crate::grid::{Grid, Reduction, ScalarField};
use crate::modes::DensityField;
use crate::polarimetry::pauli_stokes;

pub const DEFAULT_STOKES_FLOOR: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct StokesField {
    pub s0: ScalarField,
    pub sx: ScalarField,
    pub sy: ScalarField,
    pub sz: ScalarField,
}

impl StokesField {
    pub fn grid(&self) -> &Grid {
        self.s0.grid()
    }

    #[inline]
    pub fn vector(&self, k: usize) -> [f64; 3] {
        [self.sx.data()[k], self.sy.data()[k], self.sz.data()[k]]
    }
}

pub fn stokes_from_density(rho: &DensityField) -> Result<StokesField> {
    let max_tr = rho.data().par_iter().map(|m| m.trace().re.abs()).reduce(|| 0.0, f64::max);
    let residue = rho
        .data()
        .par_iter()
        .map(|m| {
            let d = m[(0, 1)] - m[(1, 0)].conj();
            m[(0, 0)].im.abs().max(m[(1, 1)].im.abs()).max(d.norm())
        })
        .reduce(|| 0.0, f64::max);
    if residue > 1e-10 * max_tr.max(f64::MIN_POSITIVE) {
        return Err(Error::ImaginaryResidue {
            what: "Stokes parameters",
            residue,
        });
    }
    let s: Vec<[f64; 4]> = rho.data().par_iter().map(pauli_stokes).collect();
    let g = *rho.grid();
    let component = |c: usize| ScalarField::from_vec(g, s.iter().map(|v| v[c]).collect());
    Ok(StokesField {
        s0: component(0)?,
        sx: component(1)?,
        sy: component(2)?,
        sz: component(3)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizeOptions {
    /// Minimum degree of polarisation `|S⃗|/S0`.
    pub floor: f64,
    /// Minimum `S0` relative to the field maximum (dark pixels).
    pub trace_floor: f64,
}

impl Default for NormalizeOptions {
    fn default() -> Self {
        Self {
            floor: DEFAULT_STOKES_FLOOR,
            trace_floor: DEFAULT_TRACE_FLOOR,
        }
    }
}

/// Unit Stokes vectors with a validity mask; invalid pixels hold `[0, 0, 0]`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitStokesField {
    grid: Grid,
    s: Vec<[f64; 3]>,
    valid: Vec<bool>,
}

impl UnitStokesField {
    /// `f` returns `None` for pixels without a direction; other vectors are
    /// normalised.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(f64, f64) -> Option<[f64; 3]> + Sync,
    {
        let (s, valid) = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let (i, j) = grid.coords(k);
                let (x, y) = grid.point(i, j);
                match f(x, y).and_then(unit) {
                    Some(v) => (v, true),
                    None => ([0.0; 3], false),
                }
            })
            .unzip();
        Self { grid, s, valid }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn vectors(&self) -> &[[f64; 3]] {
        &self.s
    }

    pub fn mask(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Option<[f64; 3]> {
        let k = self.grid.index(i, j);
        self.valid[k].then_some(self.s[k])
    }

    pub fn valid_fraction(&self) -> f64 {
        self.valid.iter().filter(|v| **v).count() as f64 / self.valid.len() as f64
    }

    /// Back to a Stokes field with `S0 = 1` at valid pixels and 0 elsewhere.
    pub fn to_stokes(&self) -> StokesField {
        let g = self.grid;
        let comp = |c: usize| {
            ScalarField::from_vec(g, self.s.iter().map(|v| v[c]).collect()).expect("same grid")
        };
        StokesField {
            s0: ScalarField::from_vec(g, self.valid.iter().map(|v| f64::from(u8::from(*v))).collect())
                .expect("same grid"),
            sx: comp(0),
            sy: comp(1),
            sz: comp(2),
        }
    }

    /// Applies a constant 3×3 matrix to every valid vector (no renormalisation).
    pub fn transformed(&self, m: &Matrix3<f64>) -> Self {
        let s = self
            .s
            .par_iter()
            .map(|v| {
                let w = m * nalgebra::Vector3::new(v[0], v[1], v[2]);
                [w[0], w[1], w[2]]
            })
            .collect();
        Self {
            grid: self.grid,
            s,
            valid: self.valid.clone(),
        }
    }

    /// Plane reflection `x → −x`.
    pub fn mirrored_x(&self) -> Self {
        let g = self.grid;
        self.remap(|i, j| g.index(g.nx() - 1 - i, j))
    }

    /// Exchange of the x and y axes (square grids only).
    pub fn transposed(&self) -> Result<Self> {
        let g = self.grid;
        if g.nx() != g.ny() {
            return Err(Error::Unsupported("transposing a non-square grid".into()));
        }
        Ok(self.remap(|i, j| g.index(j, i)))
    }

    fn remap(&self, source: impl Fn(usize, usize) -> usize + Sync) -> Self {
        let g = self.grid;
        let (s, valid) = (0..g.len())
            .into_par_iter()
            .map(|k| {
                let (i, j) = g.coords(k);
                let src = source(i, j);
                (self.s[src], self.valid[src])
            })
            .unzip();
        Self { grid: g, s, valid }
    }

    /// Bilinear interpolation of the unit vectors at a physical point,
    /// re-normalised; `None` if the point is outside the window or any of
    /// the four surrounding pixels is invalid.
    pub fn sample(&self, x: f64, y: f64) -> Option<[f64; 3]> {
        let g = &self.grid;
        let (fx, fy) = g.locate(x, y);
        if !(fx >= 0.0 && fy >= 0.0) || fx > (g.nx() - 1) as f64 || fy > (g.ny() - 1) as f64 {
            return None;
        }
        let i0 = (fx.floor() as usize).min(g.nx() - 2);
        let j0 = (fy.floor() as usize).min(g.ny() - 2);
        // points within rounding distance of a node take the node's value
        let snap = |t: f64| {
            if t < 1e-9 {
                0.0
            } else if t > 1.0 - 1e-9 {
                1.0
            } else {
                t
            }
        };
        let tx = snap(fx - i0 as f64);
        let ty = snap(fy - j0 as f64);
        let corners = [
            (i0, j0, (1.0 - tx) * (1.0 - ty)),
            (i0 + 1, j0, tx * (1.0 - ty)),
            (i0, j0 + 1, (1.0 - tx) * ty),
            (i0 + 1, j0 + 1, tx * ty),
        ];
        let mut acc = [0.0; 3];
        for (i, j, w) in corners {
            if w == 0.0 {
                continue;
            }
            let v = self.at(i, j)?;
            for c in 0..3 {
                acc[c] += w * v[c];
            }
        }
        unit(acc)
    }
}

#[inline]
fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[inline]
fn unit(v: [f64; 3]) -> Option<[f64; 3]> {
    let m = norm3(&v);
    if m.is_nan() || m <= 1e-300 || !m.is_finite() {
        return None;
    }
    Some(scale_to_unit(v, m))
}

/// Divides by `m` unless the vector is already unit to within rounding, so
/// that normalising twice is bitwise the same as normalising once.
#[inline]
fn scale_to_unit(v: [f64; 3], m: f64) -> [f64; 3] {
    if (m - 1.0).abs() <= 4.0 * f64::EPSILON {
        v
    } else {
        [v[0] / m, v[1] / m, v[2] / m]
    }
}

/// Projects onto the unit sphere. A pixel is valid when it is not dark
/// (`S0 > trace_floor·max S0`) and its degree of polarisation `|S⃗|/S0`
/// exceeds `floor` (so fully mixed pixels, whose `|S⃗|` is pure rounding
/// noise, are excluded). Both tests are scale-free, so renormalising the
/// density pixel by pixel does not change the mask.
pub fn normalize_stokes(s: &StokesField, opts: &NormalizeOptions) -> UnitStokesField {
    let g = *s.grid();
    let n = g.len();
    let max_s0 = s.s0.data().par_iter().cloned().reduce(|| 0.0, f64::max);
    let (vecs, valid) = (0..n)
        .into_par_iter()
        .map(|k| {
            let v = s.vector(k);
            let m = norm3(&v);
            let s0 = s.s0.data()[k];
            let ok = s0 > opts.trace_floor * max_s0
                && m > opts.floor * s0
                && m.is_finite();
            if ok {
                (scale_to_unit(v, m), true)
            } else {
                ([0.0; 3], false)
            }
        })
        .unzip();
    UnitStokesField {
        grid: g,
        s: vecs,
        valid,
    }
}

#[inline]
fn triple(u: &[f64; 3], a: &[f64; 3], b: &[f64; 3]) -> f64 {
    u[0] * (a[1] * b[2] - a[2] * b[1]) + u[1] * (a[2] * b[0] - a[0] * b[2]) + u[2] * (a[0] * b[1] - a[1] * b[0])
}

fn density_with<F>(grid: Grid, value: F) -> ScalarField
where
    F: Fn(usize, usize) -> Option<[f64; 3]> + Sync,
{
    let inv2dx = 0.5 / grid.dx();
    let inv2dy = 0.5 / grid.dy();
    ScalarField::from_pixels(grid, |i, j| {
        if grid.is_boundary(i, j) {
            return 0.0;
        }
        let stencil = (|| {
            Some((
                value(i, j)?,
                value(i + 1, j)?,
                value(i - 1, j)?,
                value(i, j + 1)?,
                value(i, j - 1)?,
            ))
        })();
        match stencil {
            Some((c, e, w, n, s)) => {
                let dx = [(e[0] - w[0]) * inv2dx, (e[1] - w[1]) * inv2dx, (e[2] - w[2]) * inv2dx];
                let dy = [(n[0] - s[0]) * inv2dy, (n[1] - s[1]) * inv2dy, (n[2] - s[2]) * inv2dy];
                triple(&c, &dx, &dy)
            }
            None => 0.0,
        }
    })
}

/// `Σ_z = S̃·(∂ₓS̃ × ∂ᵧS̃)` by central differences. Zero on the outer pixel
/// ring and wherever the five-point stencil touches an invalid pixel.
pub fn skyrmion_density(u: &UnitStokesField) -> ScalarField {
    density_with(u.grid, |i, j| u.at(i, j))
}

/// The same triple product on raw, unnormalised Stokes vectors.
pub fn skyrmion_density_raw(s: &StokesField) -> ScalarField {
    let g = *s.grid();
    density_with(g, |i, j| Some(s.vector(g.index(i, j))))
}

#[derive(Clone, Debug)]
pub struct SkyrmionResult {
    pub n: f64,
    pub density: ScalarField,
    pub valid_fraction: f64,
    /// `(1/4π)∫|Σ_z|`, an upper bound on `|N|`.
    pub abs_n: f64,
}

pub fn skyrmion_number(u: &UnitStokesField, reduction: Reduction) -> Result<SkyrmionResult> {
    let density = skyrmion_density(u);
    let four_pi = 4.0 * std::f64::consts::PI;
    let n = density.integrate(reduction)? / four_pi;
    let abs_n = density.map(|v, _, _| v.abs()).integrate(reduction)? / four_pi;
    Ok(SkyrmionResult {
        n,
        density,
        valid_fraction: u.valid_fraction(),
        abs_n,
    })
}

/// Convenience pipeline: density matrices → Stokes → unit field → `N`.
pub fn skyrmion_number_of(
    rho: &DensityField,
    opts: &NormalizeOptions,
    reduction: Reduction,
) -> Result<SkyrmionResult> {
    let s = stokes_from_density(rho)?;
    skyrmion_number(&normalize_stokes(&s, opts), reduction)
}

fn angle(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    norm3(&c).atan2(d)
}

/// Largest angle (radians) between the unit Stokes vector on a ring of
/// radius `ring_radius` and the ring's mean direction. Samples falling on
/// invalid pixels are skipped; `NaN` means no sample was valid.
pub fn boundary_phi_dependence(u: &UnitStokesField, ring_radius: f64) -> Result<f64> {
    let g = u.grid();
    let limit = g.extent() - g.dx().max(g.dy());
    if !(ring_radius > 0.0 && ring_radius <= limit) {
        return Err(Error::RingOutsideGrid {
            radius: ring_radius,
            extent: g.extent(),
        });
    }
    let count = ((std::f64::consts::TAU * ring_radius / g.dx().min(g.dy())).ceil() as usize).max(64);
    let samples: Vec<[f64; 3]> = (0..count)
        .filter_map(|k| {
            let phi = std::f64::consts::TAU * k as f64 / count as f64;
            u.sample(ring_radius * phi.cos(), ring_radius * phi.sin())
        })
        .collect();
    if samples.is_empty() {
        return Ok(f64::NAN);
    }
    let mut mean = [0.0; 3];
    for v in &samples {
        for c in 0..3 {
            mean[c] += v[c];
        }
    }
    let Some(mean) = unit(mean) else {
        return Ok(std::f64::consts::PI);
    };
    Ok(samples.iter().map(|v| angle(v, &mean)).fold(0.0, f64::max))
}

/// Smooth orientation-preserving maps of the plane used to test coordinate
/// invariance of `N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Warp {
    Identity,
    /// `ρ → ρ(1 + a·e^{−ρ²})`
    Radial { amplitude: f64 },
    /// `(x, y) → (x + k·y, y)`
    Shear { k: f64 },
}

impl Warp {
    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        match *self {
            Warp::Identity => (x, y),
            Warp::Radial { amplitude } => {
                let f = 1.0 + amplitude * (-(x * x + y * y)).exp();
                (x * f, y * f)
            }
            Warp::Shear { k } => (x + k * y, y),
        }
    }

    pub fn jacobian(&self, x: f64, y: f64) -> f64 {
        match *self {
            Warp::Identity | Warp::Shear { .. } => 1.0,
            Warp::Radial { amplitude } => {
                let r2 = x * x + y * y;
                let e = amplitude * (-r2).exp();
                (1.0 + e) * (1.0 + e * (1.0 - 2.0 * r2))
            }
        }
    }

    /// Rejects parameters for which the map is not an orientation-preserving
    /// bijection.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Warp::Identity => Ok(()),
            Warp::Shear { k } if k.is_finite() => Ok(()),
            Warp::Radial { amplitude } if amplitude.is_finite() => {
                // ρ(1 + a e^{−ρ²}) is increasing and positive iff
                // −1 < a and 1 + a e^{−ρ²}(1 − 2ρ²) > 0 everywhere; the
                // latter has its minimum at ρ² = 3/2.
                let min_slope = (1.0 + amplitude).min(1.0 - 2.0 * amplitude * (-1.5f64).exp());
                if amplitude > -1.0 && min_slope > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidWarp(format!(
                        "radial amplitude {amplitude} folds the plane"
                    )))
                }
            }
            _ => Err(Error::InvalidWarp(format!("{self:?}"))),
        }
    }
}

/// Pulls the field back through `warp` (`u'(x) = u(warp(x))`) by bilinear
/// interpolation, re-normalises, and returns `(N_before, N_after)`.
pub fn warp_invariance_check(u: &UnitStokesField, warp: &Warp, reduction: Reduction) -> Result<(f64, f64)> {
    warp.validate()?;
    let before = skyrmion_number(u, reduction)?.n;
    let warped = UnitStokesField::from_fn(*u.grid(), |x, y| {
        let (wx, wy) = warp.apply(x, y);
        u.sample(wx, wy)
    });
    let after = skyrmion_number(&warped, reduction)?.n;
    Ok((before, after))
}

/// `(2√ρ sin kφ, 2√ρ cos kφ, ρ − 1) / (ρ + 1)`: unit norm, south pole at the
/// origin, north pole at infinity, degree `k`.
pub fn stokes_generic_form(k: i32, rho: f64, phi: f64) -> [f64; 3] {
    let d = rho + 1.0;
    let a = 2.0 * rho.sqrt() / d;
    let (s, c) = (k as f64 * phi).sin_cos();
    [a * s, a * c, (rho - 1.0) / d]
}

pub fn generic_form_field(k: i32, grid: &Grid) -> UnitStokesField {
    UnitStokesField::from_fn(*grid, |x, y| {
        let (rho, phi) = crate::grid::to_polar(x, y);
        Some(stokes_generic_form(k, rho, phi))
    })
}
