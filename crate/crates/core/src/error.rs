use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grids differ: {0}")]
    GridMismatch(String),

    #[error("non-finite value {value} at pixel (i={i}, j={j})")]
    NonFinite { i: usize, j: usize, value: f64 },

    #[error("|l| = {0} exceeds the supported maximum of {max}", max = crate::modes::MAX_ABS_L)]
    OamTooLarge(i32),

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: String,
        value: f64,
        range: String,
    },

    #[error("profile {name} leaves {range} at (x={x:.4}, y={y:.4}): value {value}")]
    ProfileRange {
        name: String,
        range: String,
        x: f64,
        y: f64,
        value: f64,
    },

    #[error("convex weights sum to {0}, expected 1")]
    WeightSum(f64),

    #[error("imaginary residue {residue:e} in {what}")]
    ImaginaryResidue { what: &'static str, residue: f64 },

    #[error("invalid warp: {0}")]
    InvalidWarp(String),

    #[error("ring radius {radius} does not fit inside a window of half-width {extent}")]
    RingOutsideGrid { radius: f64, extent: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("SKGF format error: {0}")]
    Skgf(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn out_of_range(name: impl Into<String>, value: f64, range: impl Into<String>) -> Error {
    Error::OutOfRange {
        name: name.into(),
        value,
        range: range.into(),
    }
}
