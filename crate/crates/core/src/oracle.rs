//! Independent reference values.
//!
//! * Closed-form, pre-normalisation Stokes parameters of the state with
//!   `|H⟩ ↔ u^1`, `|V⟩ ↔ u^12` under constant bit-flip, amplitude-damping and
//!   phase-damping noise.
//! * A naive per-pixel operator sum (`brute_force_apply`) and the affine
//!   depolarising map, used to cross-check the field kernels.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{kraus, KrausChannel, NoiseProfile, Range};
use crate::error::{out_of_range, Error, Result};
use crate::grid::{Grid, Mat2};
use crate::modes::{DensityField, StateSpec};
use crate::polarimetry::pauli_stokes;

/// `(l1, l2)` of the state the closed forms describe.
pub const ORACLE_CHARGES: (i32, i32) = (1, 12);

/// Largest grid side accepted by [`brute_force_apply`].
pub const BRUTE_FORCE_MAX_SIDE: usize = 32;

/// `4·√(2/231) / (45π)`
pub fn prefactor() -> f64 {
    4.0 * (2.0f64 / 231.0).sqrt() / (45.0 * PI)
}

/// `12!/2^10`, the integer in the `S_z` closed forms.
pub const SZ_DENOMINATOR: f64 = 467_775.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleFamily {
    BitFlip,
    AmplitudeDamping,
    PhaseDamping,
}

impl OracleFamily {
    pub const ALL: [OracleFamily; 3] = [
        OracleFamily::BitFlip,
        OracleFamily::AmplitudeDamping,
        OracleFamily::PhaseDamping,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OracleFamily::BitFlip => "bit_flip",
            OracleFamily::AmplitudeDamping => "amplitude_damping",
            OracleFamily::PhaseDamping => "phase_damping",
        }
    }

    /// The parameter value at which the channel does nothing.
    pub fn noiseless_p(self) -> f64 {
        match self {
            OracleFamily::BitFlip => 1.0,
            OracleFamily::AmplitudeDamping | OracleFamily::PhaseDamping => 0.0,
        }
    }

    pub fn kraus(self, p: f64) -> [Mat2; 2] {
        match self {
            OracleFamily::BitFlip => kraus::bit_flip(p),
            OracleFamily::AmplitudeDamping => kraus::amplitude_damping(p),
            OracleFamily::PhaseDamping => kraus::phase_damping(p),
        }
    }
}

impl std::str::FromStr for OracleFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OracleFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown oracle family {s:?}")))
    }
}

/// Closed-form `(Sx, Sy, Sz)` before normalisation (`w0 = 1`). The complex
/// displays reduce to real values:
/// `(1 + e^{22iφ})e^{−11iφ} = 2cos 11φ` and
/// `−i(−1 + e^{22iφ})e^{−11iφ} = 2 sin 11φ`.
pub fn analytic_stokes(family: OracleFamily, p: f64, rho: f64, phi: f64) -> Result<[f64; 3]> {
    if !(0.0..=1.0).contains(&p) {
        return Err(out_of_range("p", p, "[0, 1]"));
    }
    if rho.is_nan() || rho < 0.0 {
        return Err(out_of_range("rho", rho, "[0, inf)"));
    }
    let g = (-2.0 * rho * rho).exp();
    let transverse = prefactor() * rho.powi(13) * g;
    let cx = 2.0 * (11.0 * phi).cos();
    let cy = 2.0 * (11.0 * phi).sin();
    let r22 = rho.powi(22);
    let sz_scale = 4.0 * rho * rho * g / (SZ_DENOMINATOR * PI);
    let q = 2.0 * p - 1.0;
    Ok(match family {
        OracleFamily::BitFlip => [
            transverse * cx,
            q * transverse * cy,
            q * sz_scale * (SZ_DENOMINATOR - 2.0 * r22),
        ],
        OracleFamily::AmplitudeDamping => {
            let d = (1.0 - p).sqrt();
            [
                d * transverse * cx,
                d * transverse * cy,
                sz_scale * (2.0 * q * r22 + SZ_DENOMINATOR),
            ]
        }
        OracleFamily::PhaseDamping => {
            let d = (1.0 - p).sqrt();
            [
                d * transverse * cx,
                d * transverse * cy,
                sz_scale * (SZ_DENOMINATOR - 2.0 * r22),
            ]
        }
    })
}

/// The same quantity computed by the library: state assembly, pointwise
/// Kraus sum, Pauli traces.
pub fn pipeline_stokes(family: OracleFamily, p: f64, rho: f64, phi: f64) -> [f64; 3] {
    let spec = StateSpec::new(ORACLE_CHARGES.0, ORACLE_CHARGES.1, 0.0).expect("valid charges");
    let dens = spec.evaluator().density(rho, phi);
    let out = kraus::conjugate_sum(&family.kraus(p), &dens);
    let s = pauli_stokes(&out);
    [s[1], s[2], s[3]]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResidual {
    pub family: OracleFamily,
    pub p: f64,
    pub rho: f64,
    pub phi: f64,
    pub component: &'static str,
    pub pipeline: f64,
    pub analytic: f64,
    pub relative_error: f64,
}

/// Relative pipeline-vs-closed-form errors at `samples` random `(ρ, φ, p)`
/// per family. Components that vanish identically for the drawn `p` are
/// skipped.
pub fn residual_table(samples: usize, seed: u64) -> Vec<OracleResidual> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for family in OracleFamily::ALL {
        for _ in 0..samples {
            let p: f64 = rng.random_range(0.0..1.0);
            let rho: f64 = rng.random_range(0.2..3.5);
            let phi: f64 = rng.random_range(-PI..PI);
            let a = analytic_stokes(family, p, rho, phi).expect("in range");
            let b = pipeline_stokes(family, p, rho, phi);
            for (c, name) in ["sx", "sy", "sz"].into_iter().enumerate() {
                if a[c] == 0.0 {
                    continue;
                }
                rows.push(OracleResidual {
                    family,
                    p,
                    rho,
                    phi,
                    component: name,
                    pipeline: b[c],
                    analytic: a[c],
                    relative_error: (b[c] - a[c]).abs() / a[c].abs(),
                });
            }
        }
    }
    rows
}

/// Reference operator sum with explicit index loops, no renormalisation
/// and no reuse of the library's matrix kernels.
pub fn brute_force_apply(rho: &DensityField, ch: &KrausChannel) -> Result<DensityField> {
    let g = *rho.grid();
    g.ensure_same(ch.grid())?;
    if g.nx() > BRUTE_FORCE_MAX_SIDE || g.ny() > BRUTE_FORCE_MAX_SIDE {
        return Err(Error::Unsupported(format!(
            "brute-force reference limited to {BRUTE_FORCE_MAX_SIDE}x{BRUTE_FORCE_MAX_SIDE} grids"
        )));
    }
    let mut out = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let r = &rho.data()[k];
        let mut acc = [[Complex64::new(0.0, 0.0); 2]; 2];
        for group in ch.groups() {
            for op in &group.operators {
                let e = &op.data()[k];
                for a in 0..2 {
                    for d in 0..2 {
                        let mut s = Complex64::new(0.0, 0.0);
                        for b in 0..2 {
                            for c in 0..2 {
                                s += e[(a, b)] * r[(b, c)] * e[(d, c)].conj();
                            }
                        }
                        acc[a][d] += s * group.weight;
                    }
                }
            }
        }
        out.push(Mat2::new(acc[0][0], acc[0][1], acc[1][0], acc[1][1]));
    }
    DensityField::from_vec(g, out)
}

/// `ρ ↦ (p/2)·tr(ρ)·I + (1 − p)·ρ` with pixel-dependent `p`.
pub fn depolarizing_affine(rho: &DensityField, p: &NoiseProfile) -> Result<DensityField> {
    let pf = p.evaluate("p", rho.grid(), Range::Probability)?;
    rho.zip_map(&pf, |r, &p| {
        let t = r.trace().re;
        let mut out = r * Complex64::new(1.0 - p, 0.0);
        out[(0, 0)] += 0.5 * p * t;
        out[(1, 1)] += 0.5 * p * t;
        out
    })
}

/// Random positive semidefinite matrices `A·A†` with Gaussian-ish entries.
pub fn random_density_field(grid: &Grid, seed: u64) -> DensityField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..grid.len())
        .map(|_| {
            let mut z = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let a = Mat2::new(z(), z(), z(), z());
            a * a.adjoint()
        })
        .collect();
    DensityField::from_vec(*grid, data).expect("length matches grid")
}
