use crate::channels::{homotopy_channel, verify_cptp, ApplyOptions, ChannelSpec};
use crate::error::Result;
use crate::modes::{build_state, StateSpec};
use crate::topology::{normalize_stokes, skyrmion_number, stokes_from_density, warp_invariance_check, Warp};

use super::config::{ChannelDef, ExperimentConfig};

/// Coordinate changes used by the invariance checks.
pub const COMMITTED_WARPS: [Warp; 2] = [Warp::Radial { amplitude: 0.3 }, Warp::Shear { k: 0.2 }];

const CPTP_TOL: f64 = 1e-10;
const TOPOLOGY_TOL: f64 = 0.02;
const HOMOTOPY_SAMPLES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn within(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

/// CPTP classification of every basic channel block plus the topological
/// invariants of the configured state: normalisation idempotence, mirror
/// antisymmetry, α-independence, warp invariance, and homotopy traces of
/// any retarder/diattenuator blocks.
pub fn verify_suite(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    let grid = cfg.grid()?;
    let opts = cfg.normalize_options();
    let red = cfg.reduction();
    let mut checks = Vec::new();

    for block in &cfg.channels {
        let ch = cfg.build_channel(&block.name, &grid)?;
        let report = verify_cptp(&ch, CPTP_TOL);
        checks.push(Check {
            name: format!("cptp:{}:{}", block.name, report.class),
            value: report.max_deviation,
            tolerance: CPTP_TOL,
            passed: report.consistent_with(&ch),
        });
    }

    let state = cfg.state()?;
    let u = normalize_stokes(&stokes_from_density(&build_state(&state, &grid))?, &opts);
    let n = skyrmion_number(&u, red)?.n;

    let again = normalize_stokes(&u.to_stokes(), &opts);
    let same = again.vectors() == u.vectors() && again.mask() == u.mask();
    checks.push(Check {
        name: "normalization_idempotent".into(),
        value: if same { 0.0 } else { 1.0 },
        tolerance: 0.0,
        passed: same,
    });

    let mirrored = skyrmion_number(&u.mirrored_x(), red)?.n;
    checks.push(Check::within("mirror_antisymmetry", (mirrored + n).abs(), 1e-12));

    let shifted = StateSpec::new(state.l1(), state.l2(), state.alpha() + 1.3)?;
    let u_alpha = normalize_stokes(&stokes_from_density(&build_state(&shifted, &grid))?, &opts);
    let n_alpha = skyrmion_number(&u_alpha, red)?.n;
    checks.push(Check::within("alpha_independence", (n_alpha - n).abs(), 1e-6));

    for warp in COMMITTED_WARPS {
        let (before, after) = warp_invariance_check(&u, &warp, red)?;
        checks.push(Check::within(format!("warp:{warp:?}"), (after - before).abs(), TOPOLOGY_TOL));
    }

    let rho = build_state(&state, &grid);
    let apply = ApplyOptions {
        renormalize: true,
        trace_floor: cfg.run.trace_floor,
    };
    for block in &cfg.channels {
        let spec = match block.definition()? {
            ChannelDef::Basic(s @ (ChannelSpec::Retarder { .. } | ChannelSpec::Diattenuator { .. })) => s,
            _ => continue,
        };
        let mut worst: f64 = 0.0;
        for t in HOMOTOPY_SAMPLES {
            let ch = homotopy_channel(&spec, &grid, t)?;
            let noisy = crate::channels::apply_channel(&rho, &ch, &apply)?;
            let nt = skyrmion_number(&normalize_stokes(&stokes_from_density(&noisy)?, &opts), red)?.n;
            worst = worst.max((nt - n).abs());
        }
        checks.push(Check::within(format!("homotopy:{}", block.name), worst, TOPOLOGY_TOL));
    }
    Ok(checks)
}
