//! Topologically protected two-photon Skyrmion states under local quantum
//! noise.
//!
//! The pipeline is: build the local polarisation density matrix of
//! `u^{l1}|H⟩ + e^{iα}u^{l2}|V⟩` on a grid ([`modes`]), push it through a
//! position-dependent Kraus channel ([`channels`]), read off Stokes vectors
//! and integrate the Skyrmion number ([`topology`]). [`harness`] wires those
//! steps into reproducible experiments.

pub mod channels;
pub mod error;
pub mod grid;
pub mod harness;
pub mod modes;
pub mod oracle;
pub mod polarimetry;
pub mod skgf;
pub mod topology;

pub use channels::{
    apply_channel, convex_combine, homotopy_channel, verify_cptp, ApplyOptions, ChannelFamily, ChannelSpec,
    CptpClass, CptpReport, KrausChannel, NoiseProfile,
};
pub use error::{Error, Result};
pub use grid::{integrate, Field, Grid, Mat2, MatrixField, Reduction, ScalarField};
pub use modes::{build_state, lg_mode, DensityField, StateSpec};
pub use polarimetry::{jones_diattenuator, jones_retarder, mueller_from_jones, JonesMatrix, MuellerMatrix};
pub use skgf::SkgfDump;
pub use topology::{
    normalize_stokes, skyrmion_number, stokes_from_density, NormalizeOptions, SkyrmionResult, StokesField,
    UnitStokesField, Warp,
};
