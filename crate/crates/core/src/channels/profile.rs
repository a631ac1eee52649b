use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{to_polar, Grid, ScalarField};

/// Smooth scalar function of `(ρ, φ)` feeding a channel parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseProfile {
    Constant {
        value: f64,
    },
    /// `offset + (amplitude + modulation·cos(nφ))·e^{−decay·ρ²}`
    GaussCos {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        #[serde(default)]
        modulation: f64,
        #[serde(default)]
        n: i32,
        #[serde(default = "unit_decay")]
        decay: f64,
    },
    /// `min(1, base + (1 − base)·(ρ/radius)^order)`; reaches exactly 1 at
    /// `ρ = radius` and stays there.
    Cutoff {
        base: f64,
        radius: f64,
        #[serde(default = "default_order")]
        order: i32,
    },
}

fn unit_decay() -> f64 {
    1.0
}

fn default_order() -> i32 {
    8
}

/// Legal interval for a profile's values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Range {
    Any,
    /// `[0, 1]`
    Probability,
    /// `(0, 1]`
    Transmittance,
}

impl Range {
    fn contains(self, v: f64) -> bool {
        match self {
            Range::Any => v.is_finite(),
            Range::Probability => (0.0..=1.0).contains(&v),
            Range::Transmittance => v > 0.0 && v <= 1.0,
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Range::Any => "finite values",
            Range::Probability => "[0, 1]",
            Range::Transmittance => "(0, 1]",
        }
    }
}

impl NoiseProfile {
    pub fn constant(value: f64) -> Self {
        NoiseProfile::Constant { value }
    }

    pub fn gauss_cos(amplitude: f64, modulation: f64, n: i32, decay: f64) -> Self {
        NoiseProfile::GaussCos {
            offset: 0.0,
            amplitude,
            modulation,
            n,
            decay,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, NoiseProfile::Constant { .. })
    }

    #[inline]
    pub fn eval(&self, rho: f64, phi: f64) -> f64 {
        match *self {
            NoiseProfile::Constant { value } => value,
            NoiseProfile::GaussCos {
                offset,
                amplitude,
                modulation,
                n,
                decay,
            } => offset + (amplitude + modulation * (n as f64 * phi).cos()) * (-decay * rho * rho).exp(),
            NoiseProfile::Cutoff {
                base,
                radius,
                order,
            } => (base + (1.0 - base) * (rho / radius).powi(order)).min(1.0),
        }
    }

    pub fn eval_xy(&self, x: f64, y: f64) -> f64 {
        let (rho, phi) = to_polar(x, y);
        self.eval(rho, phi)
    }

    fn check_params(&self) -> Result<()> {
        let ok = match *self {
            NoiseProfile::Constant { value } => value.is_finite(),
            NoiseProfile::GaussCos {
                offset,
                amplitude,
                modulation,
                decay,
                ..
            } => [offset, amplitude, modulation, decay].iter().all(|v| v.is_finite()) && decay >= 0.0,
            NoiseProfile::Cutoff { base, radius, order } => {
                base.is_finite() && radius.is_finite() && radius > 0.0 && order > 0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid profile parameters {self:?}")))
        }
    }

    /// Samples the profile on every pixel, rejecting values outside `range`.
    pub fn evaluate(&self, name: &str, grid: &Grid, range: Range) -> Result<ScalarField> {
        self.check_params()?;
        let g = *grid;
        let field = ScalarField::from_pixels(g, |i, j| {
            let (rho, phi) = g.polar(i, j);
            self.eval(rho, phi)
        });
        if let Some(k) = field.data().iter().position(|v| !range.contains(*v)) {
            let (i, j) = g.coords(k);
            let (x, y) = g.point(i, j);
            return Err(Error::ProfileRange {
                name: name.to_string(),
                range: range.describe().to_string(),
                x,
                y,
                value: field.data()[k],
            });
        }
        Ok(field)
    }
}
