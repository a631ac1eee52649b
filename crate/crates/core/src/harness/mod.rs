//! Experiment orchestration: configs in, CSV rows and field dumps out.
//!
//! Sweep points run one after another; each point parallelises internally
//! over pixels, so rows come out in configuration order.

mod config;
mod output;
mod verify;

use std::time::Instant;

pub use config::{
    ChannelBlock, ChannelDef, ConvexComponent, ExperimentConfig, ExperimentKind, GridConfig, RunConfig,
    StateConfig, TargetOverride, DEFAULT_EXTENT, DEFAULT_RESOLUTION, DEFAULT_TARGETS,
};
pub use output::{fmt_f64, write_oracle_csv, ExperimentResult, ResultRow, CSV_HEADER, ORACLE_HEADER};
pub use verify::{verify_suite, Check, COMMITTED_WARPS};

use crate::channels::{apply_channel, homotopy_channel, ApplyOptions, KrausChannel};
use crate::error::Result;
use crate::grid::{Grid, ScalarField};
use crate::modes::{build_state, StateSpec};
use crate::skgf::SkgfDump;
use crate::topology::{
    boundary_phi_dependence, normalize_stokes, skyrmion_number, stokes_from_density, UnitStokesField,
};

/// Fields behind one row, kept only when dumps are requested.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub label: String,
    pub dumps: Vec<(String, SkgfDump)>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub result: ExperimentResult,
    pub snapshots: Vec<Snapshot>,
}

struct Measurement {
    n_initial: f64,
    n_final: f64,
    valid_fraction: f64,
    boundary_phi: f64,
    snapshot: Option<Vec<(String, SkgfDump)>>,
}

fn unit_components(u: &UnitStokesField) -> Result<[ScalarField; 3]> {
    let g = *u.grid();
    let comp = |c: usize| ScalarField::from_vec(g, u.vectors().iter().map(|v| v[c]).collect());
    Ok([comp(0)?, comp(1)?, comp(2)?])
}

fn dumps_for(prefix: &str, u: &UnitStokesField, density: &ScalarField) -> Result<Vec<(String, SkgfDump)>> {
    let [sx, sy, sz] = unit_components(u)?;
    Ok(vec![
        (format!("{prefix}_stokes"), SkgfDump::from_fields(&[&sx, &sy, &sz])?),
        (format!("{prefix}_density"), SkgfDump::from_fields(&[density])?),
    ])
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    grid: Grid,
    keep_fields: bool,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a ExperimentConfig, keep_fields: bool) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            grid: cfg.grid()?,
            keep_fields,
        })
    }

    fn measure(&self, state: &StateSpec, channel: &KrausChannel, ring: Option<f64>) -> Result<Measurement> {
        let opts = self.cfg.normalize_options();
        let reduction = self.cfg.reduction();
        let rho = build_state(state, &self.grid);
        let u0 = normalize_stokes(&stokes_from_density(&rho)?, &opts);
        let initial = skyrmion_number(&u0, reduction)?;
        let apply = ApplyOptions {
            renormalize: true,
            trace_floor: self.cfg.run.trace_floor,
        };
        let noisy = apply_channel(&rho, channel, &apply)?;
        let u1 = normalize_stokes(&stokes_from_density(&noisy)?, &opts);
        let fin = skyrmion_number(&u1, reduction)?;
        let boundary_phi = match ring {
            Some(r) => boundary_phi_dependence(&u1, r)?,
            None => f64::NAN,
        };
        let snapshot = if self.keep_fields {
            let mut d = dumps_for("initial", &u0, &initial.density)?;
            d.extend(dumps_for("final", &u1, &fin.density)?);
            Some(d)
        } else {
            None
        };
        Ok(Measurement {
            n_initial: initial.n,
            n_final: fin.n,
            valid_fraction: fin.valid_fraction,
            boundary_phi,
            snapshot,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &self,
        out: &mut RunOutput,
        channel: &str,
        sweep_value: f64,
        state: &StateSpec,
        m: Measurement,
        singular: bool,
        started: Instant,
    ) {
        let wall_time = if self.cfg.run.deterministic {
            0.0
        } else {
            started.elapsed().as_secs_f64()
        };
        let experiment = self.cfg.experiment_id();
        if let Some(dumps) = m.snapshot {
            out.snapshots.push(Snapshot {
                label: format!("{experiment}_{:03}", out.result.rows.len()),
                dumps,
            });
        }
        log::info!(
            "{experiment} {channel} value={sweep_value} ({}, {}): N {:.6} -> {:.6}",
            state.l1(),
            state.l2(),
            m.n_initial,
            m.n_final
        );
        out.result.rows.push(ResultRow {
            experiment,
            channel: channel.to_string(),
            sweep_value,
            l1: state.l1(),
            l2: state.l2(),
            n_initial: m.n_initial,
            n_final: m.n_final,
            valid_fraction: m.valid_fraction,
            singular,
            boundary_phi: m.boundary_phi,
            wall_time,
        });
    }

    fn table(&self, ring: Option<f64>) -> Result<RunOutput> {
        let name = &self.cfg.run.channel;
        let channel = self.cfg.build_channel(name, &self.grid)?;
        let mut out = RunOutput::default();
        for &n in &self.cfg.run.targets {
            let started = Instant::now();
            let (l1, l2) = self.cfg.charges_for(n);
            let state = StateSpec::new(l1, l2, self.cfg.state.alpha)?;
            let m = self.measure(&state, &channel, ring)?;
            self.push(&mut out, name, n as f64, &state, m, false, started);
        }
        Ok(out)
    }
}

/// Clean vs noisy `N` for every configured target winding.
pub fn run_topology_table(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    Ok(Context::new(cfg, false)?.table(None)?.result)
}

/// `N` of the configured state for each constant `p` in `sweep_values`.
pub fn run_p_sweep(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    Ok(p_sweep(&Context::new(cfg, false)?)?.result)
}

fn p_sweep(ctx: &Context) -> Result<RunOutput> {
    let name = &ctx.cfg.run.channel;
    let spec = ctx.cfg.spec(name)?;
    let family = spec.family();
    let state = ctx.cfg.state()?;
    let mut out = RunOutput::default();
    for &p in &ctx.cfg.run.sweep_values {
        let started = Instant::now();
        let channel = spec.with_constant_p(p)?.build(&ctx.grid)?.with_name(name.as_str());
        let m = ctx.measure(&state, &channel, None)?;
        ctx.push(&mut out, name, p, &state, m, family.is_singular(p), started);
    }
    Ok(out)
}

/// `N` along the straight-line deformation from the identity to the
/// configured retarder or diattenuator.
pub fn run_homotopy_trace(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    Ok(homotopy(&Context::new(cfg, false)?)?.result)
}

fn homotopy(ctx: &Context) -> Result<RunOutput> {
    let name = &ctx.cfg.run.channel;
    let spec = ctx.cfg.spec(name)?;
    let state = ctx.cfg.state()?;
    let mut out = RunOutput::default();
    for &t in &ctx.cfg.run.t_samples {
        let started = Instant::now();
        let channel = homotopy_channel(&spec, &ctx.grid, t)?;
        let m = ctx.measure(&state, &channel, None)?;
        ctx.push(&mut out, name, t, &state, m, false, started);
    }
    Ok(out)
}

/// Topology table through a depolarizer that saturates at `p = 1` outside
/// a disc, with the boundary φ-dependence diagnostic filled in.
pub fn run_compactification_break(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    Ok(compactify(&Context::new(cfg, false)?)?.result)
}

fn compactify(ctx: &Context) -> Result<RunOutput> {
    ctx.table(Some(ctx.cfg.ring_radius()))
}

/// Single state through the configured channel.
pub fn run_simulation(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    Ok(simulate(&Context::new(cfg, false)?)?.result)
}

fn simulate(ctx: &Context) -> Result<RunOutput> {
    let name = &ctx.cfg.run.channel;
    let channel = ctx.cfg.build_channel(name, &ctx.grid)?;
    let state = ctx.cfg.state()?;
    let started = Instant::now();
    let ring = ctx.cfg.ring_radius();
    let ring = (ring > 0.0 && ring <= ctx.grid.extent() - ctx.grid.dx().max(ctx.grid.dy())).then_some(ring);
    let m = ctx.measure(&state, &channel, ring)?;
    let mut out = RunOutput::default();
    ctx.push(&mut out, name, 0.0, &state, m, false, started);
    Ok(out)
}

/// Dispatches on `run.experiment`; `keep_fields` collects SKGF snapshots
/// (unit Stokes vectors and Skyrmion density, before and after) per row.
pub fn run(cfg: &ExperimentConfig, keep_fields: bool) -> Result<RunOutput> {
    use ExperimentKind::*;
    let ctx = Context::new(cfg, keep_fields)?;
    match cfg.run.experiment {
        Simulate => simulate(&ctx),
        Table => ctx.table(None),
        Sweep => p_sweep(&ctx),
        Homotopy => homotopy(&ctx),
        Compactify => compactify(&ctx),
    }
}
