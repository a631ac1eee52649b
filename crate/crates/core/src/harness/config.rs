use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channels::{convex_combine, ChannelSpec, KrausChannel, DEFAULT_TRACE_FLOOR};
use crate::error::{Error, Result};
use crate::grid::{Grid, Reduction};
use crate::modes::StateSpec;
use crate::topology::{NormalizeOptions, DEFAULT_STOKES_FLOOR};

pub const DEFAULT_RESOLUTION: usize = 512;
pub const DEFAULT_EXTENT: f64 = 5.0;
pub const DEFAULT_TARGETS: [i32; 6] = [-3, -2, -1, 1, 2, 3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub state: StateConfig,
    #[serde(default)]
    pub channels: Vec<ChannelBlock>,
    pub run: RunConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_resolution")]
    pub nx: usize,
    #[serde(default = "default_resolution")]
    pub ny: usize,
    #[serde(default = "default_extent")]
    pub extent: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            nx: DEFAULT_RESOLUTION,
            ny: DEFAULT_RESOLUTION,
            extent: DEFAULT_EXTENT,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    #[serde(default = "one")]
    pub l1: i32,
    #[serde(default)]
    pub l2: i32,
    #[serde(default)]
    pub alpha: f64,
}

impl Default for StateConfig {
    fn default() -> Self {
        Self {
            l1: 1,
            l2: 0,
            alpha: 0.0,
        }
    }
}

/// One named `[[channels]]` entry. Every key other than `name` describes
/// the channel: either a [`ChannelSpec`] (`family = "retarder"`, …) or a
/// convex combination (`family = "convex"`, `components = [...]`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelBlock {
    pub name: String,
    #[serde(flatten)]
    pub body: toml::Table,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvexComponent {
    pub channel: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConvexBody {
    family: String,
    components: Vec<ConvexComponent>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ChannelDef {
    Basic(ChannelSpec),
    Convex(Vec<ConvexComponent>),
}

impl ChannelBlock {
    pub fn new(name: impl Into<String>, spec: &ChannelSpec) -> Self {
        let body = toml::Table::try_from(spec).expect("channel specs serialise to tables");
        Self {
            name: name.into(),
            body,
        }
    }

    pub fn definition(&self) -> Result<ChannelDef> {
        let err = |e: toml::de::Error| Error::Config(format!("channel {:?}: {}", self.name, e.message()));
        match self.body.get("family").and_then(|v| v.as_str()) {
            Some("convex") => {
                let c: ConvexBody = toml::Value::Table(self.body.clone()).try_into().map_err(err)?;
                Ok(ChannelDef::Convex(c.components))
            }
            Some(_) => Ok(ChannelDef::Basic(
                toml::Value::Table(self.body.clone()).try_into().map_err(err)?,
            )),
            None => Err(Error::Config(format!("channel {:?} has no family", self.name))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Simulate,
    Table,
    Sweep,
    Homotopy,
    Compactify,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Table => "table",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Homotopy => "homotopy",
            ExperimentKind::Compactify => "compactify",
        }
    }
}

/// Explicit `(l1, l2)` for a target winding, replacing the default `(N, 0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetOverride {
    pub n: i32,
    pub l1: i32,
    pub l2: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    /// Free-form label written to the `experiment` CSV column.
    #[serde(default)]
    pub id: Option<String>,
    /// Name of the `[[channels]]` block to apply.
    pub channel: String,
    #[serde(default = "default_targets")]
    pub targets: Vec<i32>,
    #[serde(default)]
    pub target_overrides: Vec<TargetOverride>,
    #[serde(default = "default_sweep")]
    pub sweep_values: Vec<f64>,
    #[serde(default = "default_t_samples")]
    pub t_samples: Vec<f64>,
    #[serde(default = "yes")]
    pub deterministic: bool,
    #[serde(default = "default_stokes_floor")]
    pub stokes_floor: f64,
    #[serde(default = "default_trace_floor")]
    pub trace_floor: f64,
    /// Ring for the boundary φ-dependence diagnostic; defaults to
    /// `extent − 0.2`.
    #[serde(default)]
    pub ring_radius: Option<f64>,
    /// CSV file name inside the output directory.
    #[serde(default)]
    pub csv: Option<String>,
}

fn one() -> i32 {
    1
}
fn yes() -> bool {
    true
}
fn default_resolution() -> usize {
    DEFAULT_RESOLUTION
}
fn default_extent() -> f64 {
    DEFAULT_EXTENT
}
fn default_targets() -> Vec<i32> {
    DEFAULT_TARGETS.to_vec()
}
fn default_sweep() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 20.0).collect()
}
fn default_t_samples() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75, 1.0]
}
fn default_stokes_floor() -> f64 {
    DEFAULT_STOKES_FLOOR
}
fn default_trace_floor() -> f64 {
    DEFAULT_TRACE_FLOOR
}

impl ExperimentConfig {
    pub fn from_toml_str(src: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(src)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path)?;
        Self::from_toml_str(&src).map_err(|e| match e {
            Error::Toml(t) => Error::Config(format!("{}: {}", path.display(), t)),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.nx, self.grid.ny, self.grid.extent)
    }

    pub fn state(&self) -> Result<StateSpec> {
        StateSpec::new(self.state.l1, self.state.l2, self.state.alpha)
    }

    pub fn normalize_options(&self) -> NormalizeOptions {
        NormalizeOptions {
            floor: self.run.stokes_floor,
            trace_floor: self.run.trace_floor,
        }
    }

    pub fn reduction(&self) -> Reduction {
        if self.run.deterministic {
            Reduction::Deterministic
        } else {
            Reduction::Unordered
        }
    }

    pub fn experiment_id(&self) -> String {
        self.run
            .id
            .clone()
            .unwrap_or_else(|| self.run.experiment.name().to_string())
    }

    pub fn ring_radius(&self) -> f64 {
        self.run.ring_radius.unwrap_or(self.grid.extent - 0.2)
    }

    /// `(l1, l2)` used for target winding `n`.
    pub fn charges_for(&self, n: i32) -> (i32, i32) {
        self.run
            .target_overrides
            .iter()
            .find(|o| o.n == n)
            .map(|o| (o.l1, o.l2))
            .unwrap_or((n, 0))
    }

    pub fn block(&self, name: &str) -> Result<&ChannelBlock> {
        self.channels
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| Error::Config(format!("no channel named {name:?}")))
    }

    /// The basic spec behind a channel name (convex channels have none).
    pub fn spec(&self, name: &str) -> Result<ChannelSpec> {
        match self.block(name)?.definition()? {
            ChannelDef::Basic(s) => Ok(s),
            ChannelDef::Convex(_) => Err(Error::Unsupported(format!(
                "channel {name:?} is a convex combination"
            ))),
        }
    }

    pub fn build_channel(&self, name: &str, grid: &Grid) -> Result<KrausChannel> {
        let mut cache = HashMap::new();
        self.build_cached(name, grid, &mut cache)
    }

    fn build_cached(
        &self,
        name: &str,
        grid: &Grid,
        cache: &mut HashMap<String, KrausChannel>,
    ) -> Result<KrausChannel> {
        if let Some(ch) = cache.get(name) {
            return Ok(ch.clone());
        }
        let ch = match self.block(name)?.definition()? {
            ChannelDef::Basic(spec) => spec.build(grid)?.with_name(name),
            ChannelDef::Convex(parts) => {
                let built = parts
                    .iter()
                    .map(|c| self.build_cached(&c.channel, grid, cache))
                    .collect::<Result<Vec<_>>>()?;
                let pairs: Vec<(&KrausChannel, f64)> =
                    built.iter().zip(&parts).map(|(ch, c)| (ch, c.weight)).collect();
                convex_combine(&pairs)?.with_name(name)
            }
        };
        cache.insert(name.to_string(), ch.clone());
        Ok(ch)
    }

    /// Structural checks that do not need a grid evaluation.
    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.state()?;
        let mut seen: Vec<&str> = Vec::new();
        for block in &self.channels {
            if seen.contains(&block.name.as_str()) {
                return Err(Error::Config(format!("channel {:?} defined twice", block.name)));
            }
            if let ChannelDef::Convex(parts) = block.definition()? {
                for part in &parts {
                    if !seen.contains(&part.channel.as_str()) {
                        return Err(Error::Config(format!(
                            "convex channel {:?} refers to {:?}, which is not defined before it",
                            block.name, part.channel
                        )));
                    }
                }
                let total: f64 = parts.iter().map(|p| p.weight).sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::WeightSum(total));
                }
            }
            seen.push(&block.name);
        }
        self.block(&self.run.channel)?;
        let run = &self.run;
        if !(run.stokes_floor >= 0.0 && run.trace_floor >= 0.0) {
            return Err(Error::Config("normalisation floors must be non-negative".into()));
        }
        match run.experiment {
            ExperimentKind::Sweep => {
                let spec = self.spec(&run.channel)?;
                for &p in &run.sweep_values {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(Error::Config(format!("sweep value {p} outside [0, 1]")));
                    }
                }
                spec.with_constant_p(0.5)?;
            }
            ExperimentKind::Homotopy => {
                let spec = self.spec(&run.channel)?;
                if !matches!(spec, ChannelSpec::Retarder { .. } | ChannelSpec::Diattenuator { .. }) {
                    return Err(Error::Config(format!(
                        "homotopy needs a retarder or diattenuator, got {}",
                        spec.family()
                    )));
                }
                if let Some(t) = run.t_samples.iter().find(|t| !(0.0..=1.0).contains(*t)) {
                    return Err(Error::Config(format!("t sample {t} outside [0, 1]")));
                }
            }
            ExperimentKind::Compactify => {
                if let ChannelSpec::Depolarizing {
                    p: crate::channels::NoiseProfile::Cutoff { radius, .. },
                } = self.spec(&run.channel)?
                {
                    if radius.is_nan() || radius <= 0.0 {
                        return Err(Error::Config("cutoff radius must be positive".into()));
                    }
                } else {
                    return Err(Error::Config(
                        "compactify needs a depolarizing channel with a cutoff profile".into(),
                    ));
                }
            }
            ExperimentKind::Simulate | ExperimentKind::Table => {}
        }
        if matches!(run.experiment, ExperimentKind::Table | ExperimentKind::Compactify) && run.targets.is_empty() {
            return Err(Error::Config("no target windings listed".into()));
        }
        Ok(())
    }
}
