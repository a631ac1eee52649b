//! Position-dependent Kraus channels acting on local polarisation density
//! matrices.
//!
//! Channel parameters come from [`NoiseProfile`]s, are sampled once into
//! per-pixel operator fields, and the resulting [`KrausChannel`] is plain
//! immutable data that can be applied to any state on the same grid.

pub mod kraus;
pub mod profile;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};
use crate::grid::{Grid, Mat2, MatrixField, ScalarField};
use crate::modes::{hermitian_eigenvalues, DensityField};
use crate::polarimetry::{diattenuator_unchecked, jones_retarder};

pub use profile::{NoiseProfile, Range};

/// Relative trace below which a pixel counts as dark and is left
/// unnormalised. Chosen far below double-precision noise on the trace
/// itself: every quantity derived from a dark-ish pixel is a ratio of
/// products of the same tiny amplitudes, which keep full relative precision
/// down to the subnormal range.
pub const DEFAULT_TRACE_FLOOR: f64 = 1e-280;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelFamily {
    Identity,
    Retarder,
    Diattenuator,
    BitFlip,
    PhaseFlip,
    Depolarizing,
    AmplitudeDamping,
    PhaseDamping,
    Convex,
}

impl ChannelFamily {
    pub const ALL_BUILDERS: [ChannelFamily; 7] = [
        ChannelFamily::Retarder,
        ChannelFamily::Diattenuator,
        ChannelFamily::BitFlip,
        ChannelFamily::PhaseFlip,
        ChannelFamily::Depolarizing,
        ChannelFamily::AmplitudeDamping,
        ChannelFamily::PhaseDamping,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelFamily::Identity => "identity",
            ChannelFamily::Retarder => "retarder",
            ChannelFamily::Diattenuator => "diattenuator",
            ChannelFamily::BitFlip => "bit_flip",
            ChannelFamily::PhaseFlip => "phase_flip",
            ChannelFamily::Depolarizing => "depolarizing",
            ChannelFamily::AmplitudeDamping => "amplitude_damping",
            ChannelFamily::PhaseDamping => "phase_damping",
            ChannelFamily::Convex => "convex",
        }
    }

    /// Constant-`p` values at which the family is known to destroy (or
    /// threaten) the winding.
    pub fn singular_points(self) -> &'static [f64] {
        match self {
            ChannelFamily::BitFlip | ChannelFamily::PhaseFlip => &[0.5],
            ChannelFamily::Depolarizing | ChannelFamily::PhaseDamping => &[1.0],
            ChannelFamily::AmplitudeDamping => &[0.5, 1.0],
            _ => &[],
        }
    }

    pub fn is_singular(self, p: f64) -> bool {
        self.singular_points().iter().any(|s| (s - p).abs() < 1e-12)
    }
}

impl fmt::Display for ChannelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Profile-driven description of one channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    Identity,
    Retarder {
        theta: NoiseProfile,
        varphi: NoiseProfile,
        psi: NoiseProfile,
    },
    Diattenuator {
        theta: NoiseProfile,
        psi: NoiseProfile,
        q: NoiseProfile,
        r: NoiseProfile,
    },
    BitFlip {
        p: NoiseProfile,
    },
    PhaseFlip {
        p: NoiseProfile,
    },
    Depolarizing {
        p: NoiseProfile,
    },
    AmplitudeDamping {
        p: NoiseProfile,
    },
    PhaseDamping {
        p: NoiseProfile,
    },
}

impl ChannelSpec {
    pub fn family(&self) -> ChannelFamily {
        match self {
            ChannelSpec::Identity => ChannelFamily::Identity,
            ChannelSpec::Retarder { .. } => ChannelFamily::Retarder,
            ChannelSpec::Diattenuator { .. } => ChannelFamily::Diattenuator,
            ChannelSpec::BitFlip { .. } => ChannelFamily::BitFlip,
            ChannelSpec::PhaseFlip { .. } => ChannelFamily::PhaseFlip,
            ChannelSpec::Depolarizing { .. } => ChannelFamily::Depolarizing,
            ChannelSpec::AmplitudeDamping { .. } => ChannelFamily::AmplitudeDamping,
            ChannelSpec::PhaseDamping { .. } => ChannelFamily::PhaseDamping,
        }
    }

    /// Single-probability families with `p` replaced by a constant.
    pub fn with_constant_p(&self, value: f64) -> Result<ChannelSpec> {
        let p = NoiseProfile::constant(value);
        Ok(match self {
            ChannelSpec::BitFlip { .. } => ChannelSpec::BitFlip { p },
            ChannelSpec::PhaseFlip { .. } => ChannelSpec::PhaseFlip { p },
            ChannelSpec::Depolarizing { .. } => ChannelSpec::Depolarizing { p },
            ChannelSpec::AmplitudeDamping { .. } => ChannelSpec::AmplitudeDamping { p },
            ChannelSpec::PhaseDamping { .. } => ChannelSpec::PhaseDamping { p },
            other => {
                return Err(Error::Unsupported(format!(
                    "{} has no single probability parameter to sweep",
                    other.family()
                )))
            }
        })
    }

    pub fn build(&self, grid: &Grid) -> Result<KrausChannel> {
        match self {
            ChannelSpec::Identity => Ok(KrausChannel::identity(grid)),
            ChannelSpec::Retarder { theta, varphi, psi } => channel_retarder(grid, theta, varphi, psi),
            ChannelSpec::Diattenuator { theta, psi, q, r } => {
                channel_diattenuator(grid, theta, psi, q, r)
            }
            ChannelSpec::BitFlip { p } => channel_bit_flip(grid, p),
            ChannelSpec::PhaseFlip { p } => channel_phase_flip(grid, p),
            ChannelSpec::Depolarizing { p } => channel_depolarizing(grid, p),
            ChannelSpec::AmplitudeDamping { p } => channel_amplitude_damping(grid, p),
            ChannelSpec::PhaseDamping { p } => channel_phase_damping(grid, p),
        }
    }
}

/// A family of Kraus-operator fields sharing one convex weight.
#[derive(Clone, Debug)]
pub struct WeightedGroup {
    pub weight: f64,
    pub operators: Vec<MatrixField>,
}

/// `ε(ρ) = Σᵢ pᵢ Σₗ K⁽ⁱ⁾ₗ ρ K⁽ⁱ⁾ₗ†`, with every `K` varying per pixel.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    name: String,
    family: ChannelFamily,
    grid: Grid,
    groups: Vec<WeightedGroup>,
    trace_preserving: bool,
}

impl KrausChannel {
    pub fn new(
        name: impl Into<String>,
        family: ChannelFamily,
        grid: &Grid,
        groups: Vec<WeightedGroup>,
        trace_preserving: bool,
    ) -> Result<Self> {
        for op in groups.iter().flat_map(|g| g.operators.iter()) {
            grid.ensure_same(op.grid())?;
            if let Some(k) = op
                .data()
                .iter()
                .position(|m| m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())))
            {
                let (i, j) = grid.coords(k);
                return Err(Error::NonFinite {
                    i,
                    j,
                    value: f64::NAN,
                });
            }
        }
        if groups.len() > 1 {
            let total: f64 = groups.iter().map(|g| g.weight).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::WeightSum(total));
            }
        }
        Ok(Self {
            name: name.into(),
            family,
            grid: *grid,
            groups,
            trace_preserving,
        })
    }

    /// The same operator list at every pixel.
    pub fn uniform(
        name: impl Into<String>,
        family: ChannelFamily,
        grid: &Grid,
        ops: &[Mat2],
        trace_preserving: bool,
    ) -> Result<Self> {
        let operators = ops
            .iter()
            .map(|k| MatrixField::from_vec(*grid, vec![*k; grid.len()]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            name,
            family,
            grid,
            vec![WeightedGroup {
                weight: 1.0,
                operators,
            }],
            trace_preserving,
        )
    }

    pub fn identity(grid: &Grid) -> Self {
        Self::uniform("identity", ChannelFamily::Identity, grid, &[Mat2::identity()], true)
            .expect("identity is always valid")
    }

    fn from_pointwise<const K: usize>(
        name: &str,
        family: ChannelFamily,
        grid: &Grid,
        trace_preserving: bool,
        f: impl Fn(usize) -> [Mat2; K] + Sync,
    ) -> Result<Self> {
        let per_pixel: Vec<[Mat2; K]> = (0..grid.len()).into_par_iter().map(&f).collect();
        let operators = (0..K)
            .map(|l| MatrixField::from_vec(*grid, per_pixel.iter().map(|ops| ops[l]).collect()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            name,
            family,
            grid,
            vec![WeightedGroup {
                weight: 1.0,
                operators,
            }],
            trace_preserving,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> ChannelFamily {
        self.family
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn groups(&self) -> &[WeightedGroup] {
        &self.groups
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// The operator sum at pixel `k`, before any renormalisation.
    #[inline]
    pub fn apply_at(&self, k: usize, rho: &Mat2) -> Mat2 {
        let mut out = Mat2::zeros();
        for g in &self.groups {
            let mut part = Mat2::zeros();
            for op in &g.operators {
                let e = &op.data()[k];
                part += e * rho * e.adjoint();
            }
            out += part * num_complex::Complex64::new(g.weight, 0.0);
        }
        out
    }

    /// `Σᵢ pᵢ Σₗ K†K` at pixel `k`.
    pub fn completeness_at(&self, k: usize) -> Mat2 {
        let mut out = Mat2::zeros();
        for g in &self.groups {
            for op in &g.operators {
                let e = &op.data()[k];
                out += e.adjoint() * e * num_complex::Complex64::new(g.weight, 0.0);
            }
        }
        out
    }
}

fn sample(profile: &NoiseProfile, name: &str, grid: &Grid, range: Range) -> Result<ScalarField> {
    profile.evaluate(name, grid, range)
}

pub fn channel_retarder(
    grid: &Grid,
    theta: &NoiseProfile,
    varphi: &NoiseProfile,
    psi: &NoiseProfile,
) -> Result<KrausChannel> {
    let t = sample(theta, "theta", grid, Range::Any)?;
    let f = sample(varphi, "varphi", grid, Range::Any)?;
    let s = sample(psi, "psi", grid, Range::Any)?;
    retarder_from_fields(grid, &t, &f, &s, 1.0)
}

fn retarder_from_fields(
    grid: &Grid,
    theta: &ScalarField,
    varphi: &ScalarField,
    psi: &ScalarField,
    t: f64,
) -> Result<KrausChannel> {
    let (a, b, c) = (theta.data(), varphi.data(), psi.data());
    KrausChannel::from_pointwise("retarder", ChannelFamily::Retarder, grid, true, |k| {
        [jones_retarder(t * a[k], t * b[k], t * c[k])]
    })
}

pub fn channel_diattenuator(
    grid: &Grid,
    theta: &NoiseProfile,
    psi: &NoiseProfile,
    q: &NoiseProfile,
    r: &NoiseProfile,
) -> Result<KrausChannel> {
    let th = sample(theta, "theta", grid, Range::Any)?;
    let ps = sample(psi, "psi", grid, Range::Any)?;
    let qf = sample(q, "q", grid, Range::Transmittance)?;
    let rf = sample(r, "r", grid, Range::Transmittance)?;
    diattenuator_from_fields(grid, &th, &ps, &qf, &rf, 1.0)
}

fn diattenuator_from_fields(
    grid: &Grid,
    theta: &ScalarField,
    psi: &ScalarField,
    q: &ScalarField,
    r: &ScalarField,
    t: f64,
) -> Result<KrausChannel> {
    let (th, ps, qd, rd) = (theta.data(), psi.data(), q.data(), r.data());
    KrausChannel::from_pointwise("diattenuator", ChannelFamily::Diattenuator, grid, false, |k| {
        let qt = (1.0 - t) + t * qd[k];
        let rt = (1.0 - t) + t * rd[k];
        [diattenuator_unchecked(t * th[k], t * ps[k], qt, rt)]
    })
}

macro_rules! probability_channel {
    ($(#[$doc:meta])* $fn_name:ident, $family:expr, $kraus:path, $k:literal) => {
        $(#[$doc])*
        pub fn $fn_name(grid: &Grid, p: &NoiseProfile) -> Result<KrausChannel> {
            let field = sample(p, "p", grid, Range::Probability)?;
            let d = field.data();
            KrausChannel::from_pointwise($family.name(), $family, grid, true, |k| -> [Mat2; $k] {
                $kraus(d[k])
            })
        }
    };
}

probability_channel!(
    /// Bit flip with the "p = 1 is noiseless" convention.
    channel_bit_flip, ChannelFamily::BitFlip, kraus::bit_flip, 2);
probability_channel!(channel_phase_flip, ChannelFamily::PhaseFlip, kraus::phase_flip, 2);
probability_channel!(channel_depolarizing, ChannelFamily::Depolarizing, kraus::depolarizing, 4);
probability_channel!(
    channel_amplitude_damping,
    ChannelFamily::AmplitudeDamping,
    kraus::amplitude_damping,
    2
);
probability_channel!(channel_phase_damping, ChannelFamily::PhaseDamping, kraus::phase_damping, 2);

/// Point `t ∈ [0, 1]` on the straight-line deformation of a retarder or
/// diattenuator to the identity: angles scale by `t`, transmittances move
/// as `(1 − t) + t·q`.
pub fn homotopy_channel(spec: &ChannelSpec, grid: &Grid, t: f64) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&t) {
        return Err(out_of_range("t", t, "[0, 1]"));
    }
    let ch = match spec {
        ChannelSpec::Retarder { theta, varphi, psi } => retarder_from_fields(
            grid,
            &sample(theta, "theta", grid, Range::Any)?,
            &sample(varphi, "varphi", grid, Range::Any)?,
            &sample(psi, "psi", grid, Range::Any)?,
            t,
        )?,
        ChannelSpec::Diattenuator { theta, psi, q, r } => diattenuator_from_fields(
            grid,
            &sample(theta, "theta", grid, Range::Any)?,
            &sample(psi, "psi", grid, Range::Any)?,
            &sample(q, "q", grid, Range::Transmittance)?,
            &sample(r, "r", grid, Range::Transmittance)?,
            t,
        )?,
        other => {
            return Err(Error::Unsupported(format!(
                "homotopy is defined for retarders and diattenuators, not {}",
                other.family()
            )))
        }
    };
    Ok(ch.with_name(format!("{}@t={t}", spec.family())))
}

/// Concatenates the channels' weighted groups. More than four weights is
/// legal but redundant and only logged.
pub fn convex_combine(parts: &[(&KrausChannel, f64)]) -> Result<KrausChannel> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Config("convex combination of zero channels".into()))?;
    if let Some((_, w)) = parts.iter().find(|(_, w)| !(*w >= 0.0 && *w <= 1.0)) {
        return Err(out_of_range("convex weight", *w, "[0, 1]"));
    }
    let total: f64 = parts.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::WeightSum(total));
    }
    if parts.len() > 4 {
        log::warn!(
            "convex combination uses {} weights; four always suffice for a qubit channel",
            parts.len()
        );
    }
    let grid = *first.0.grid();
    let mut groups = Vec::new();
    for (ch, w) in parts {
        grid.ensure_same(ch.grid())?;
        groups.extend(ch.groups.iter().map(|g| WeightedGroup {
            weight: w * g.weight,
            operators: g.operators.clone(),
        }));
    }
    if parts.len() == 1 {
        return Ok((*first.0).clone());
    }
    let names: Vec<&str> = parts.iter().map(|(c, _)| c.name()).collect();
    KrausChannel::new(
        format!("convex({})", names.join(",")),
        ChannelFamily::Convex,
        &grid,
        groups,
        parts.iter().all(|(c, _)| c.is_trace_preserving()),
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApplyOptions {
    /// Divide each pixel by its trace (dark pixels excepted).
    pub renormalize: bool,
    /// Dark-pixel threshold relative to the largest output trace.
    pub trace_floor: f64,
}

impl Default for ApplyOptions {
    fn default() -> Self {
        Self {
            renormalize: true,
            trace_floor: DEFAULT_TRACE_FLOOR,
        }
    }
}

impl ApplyOptions {
    pub fn raw() -> Self {
        Self {
            renormalize: false,
            ..Self::default()
        }
    }
}

/// Applies the channel pixel by pixel, re-symmetrises, and (optionally)
/// normalises every non-dark pixel to unit trace.
pub fn apply_channel(rho: &DensityField, ch: &KrausChannel, opts: &ApplyOptions) -> Result<DensityField> {
    rho.grid().ensure_same(ch.grid())?;
    let data: Vec<Mat2> = rho
        .data()
        .par_iter()
        .enumerate()
        .map(|(k, r)| {
            let out = ch.apply_at(k, r);
            (out + out.adjoint()) * num_complex::Complex64::new(0.5, 0.0)
        })
        .collect();
    let mut out = DensityField::from_vec(*rho.grid(), data)?;
    if opts.renormalize {
        out = renormalize(&out, opts.trace_floor);
    }
    Ok(out)
}

/// Unit-trace version of every pixel whose trace exceeds `floor·max trace`.
pub fn renormalize(rho: &DensityField, floor: f64) -> DensityField {
    let max_tr = rho
        .data()
        .par_iter()
        .map(|m| m.trace().re)
        .reduce(|| 0.0, f64::max);
    let threshold = floor * max_tr;
    rho.map(|m, _, _| {
        let tr = m.trace().re;
        if tr > threshold && tr > 0.0 {
            m.unscale(tr)
        } else {
            *m
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CptpClass {
    TracePreserving,
    TraceDecreasing,
    Invalid,
}

impl fmt::Display for CptpClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CptpClass::TracePreserving => "trace_preserving",
            CptpClass::TraceDecreasing => "trace_decreasing",
            CptpClass::Invalid => "invalid",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CptpReport {
    /// Largest entry of `|Σ pᵢ K†K − I|` over all pixels.
    pub max_deviation: f64,
    /// Largest eigenvalue of `Σ pᵢ K†K` over all pixels.
    pub max_eigenvalue: f64,
    /// Pixel where `max_deviation` occurs.
    pub worst_pixel: (usize, usize),
    pub class: CptpClass,
}

impl CptpReport {
    /// Whether the classification agrees with the channel's own flag.
    pub fn consistent_with(&self, ch: &KrausChannel) -> bool {
        match self.class {
            CptpClass::TracePreserving => true,
            CptpClass::TraceDecreasing => !ch.is_trace_preserving(),
            CptpClass::Invalid => false,
        }
    }
}

pub fn verify_cptp(ch: &KrausChannel, tol: f64) -> CptpReport {
    let grid = *ch.grid();
    let (dev, k_worst, lmax) = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let g = ch.completeness_at(k);
            let dev = (g - Mat2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            (dev, k, hermitian_eigenvalues(&g)[1])
        })
        .reduce(
            || (0.0, 0, f64::NEG_INFINITY),
            |a, b| {
                let (dev, k) = if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    (b.0, b.1)
                } else {
                    (a.0, a.1)
                };
                (dev, k, a.2.max(b.2))
            },
        );
    let class = if dev <= tol {
        CptpClass::TracePreserving
    } else if lmax <= 1.0 + tol {
        CptpClass::TraceDecreasing
    } else {
        CptpClass::Invalid
    };
    CptpReport {
        max_deviation: dev,
        max_eigenvalue: lmax,
        worst_pixel: grid.coords(k_worst),
        class,
    }
}
