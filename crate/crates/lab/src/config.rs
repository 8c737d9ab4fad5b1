//! Run configuration: TOML parsing, `--set` overrides, defaults, and
//! validation that names the violated model assumption.

use anyhow::{bail, Context, Result};
use chb_core::evolution::{FlowMode, InitialData, ModelParams, RunSpec};
use chb_core::flow::{ProfileKind, ViscosityProfile};
use chb_core::grid::{Grid2d, ScalarField};
use chb_core::potentials::PotentialSpec;
use chb_core::sources::{ExtensionKind, SourceModel};
use chb_core::stationary::StationaryConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

fn default_nx() -> usize {
    64
}
fn default_extent() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridCfg {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl Default for GridCfg {
    fn default() -> Self {
        Self {
            nx: default_nx(),
            ny: default_nx(),
            lx: default_extent(),
            ly: default_extent(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialCfg {
    /// "double-obstacle" or "log".
    pub kind: String,
    pub delta: f64,
    pub theta: f64,
    pub theta_c: f64,
}

impl Default for PotentialCfg {
    fn default() -> Self {
        Self {
            kind: "double-obstacle".into(),
            delta: 0.01,
            theta: 0.5,
            theta_c: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceCfg {
    pub enabled: bool,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub alpha: f64,
    #[serde(rename = "rho_S")]
    pub rho_s: f64,
    /// Linear-extension reach of the logarithmic drift (log kind only).
    pub r0: f64,
}

impl Default for SourceCfg {
    fn default() -> Self {
        Self {
            enabled: true,
            p: 1.0,
            a: 0.5,
            alpha: 0.25,
            rho_s: 1.0,
            r0: 1.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NutrientCfg {
    #[serde(rename = "K")]
    pub k: f64,
    pub h0: f64,
    pub chi: f64,
}

impl Default for NutrientCfg {
    fn default() -> Self {
        Self {
            k: 1.0,
            h0: 1.0,
            chi: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowCfg {
    /// "brinkman", "darcy", or "off".
    pub mode: String,
    pub nu: f64,
    pub eta0: f64,
    pub eta1: f64,
    pub lambda0: f64,
    /// "constant" or "linear-in-phi".
    pub profile: String,
}

impl Default for FlowCfg {
    fn default() -> Self {
        Self {
            mode: "brinkman".into(),
            nu: 1.0,
            eta0: 1.0,
            eta1: 1.0,
            lambda0: 0.0,
            profile: "constant".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeCfg {
    pub t_end: f64,
    /// Base step; 0 means the default `0.1 min(h)^2`.
    pub dt: f64,
    pub max_steps: usize,
}

impl Default for TimeCfg {
    fn default() -> Self {
        Self {
            t_end: 0.01,
            dt: 0.0,
            max_steps: 100_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialCfg {
    /// "tanh-seed", "uniform", or "random".
    pub kind: String,
    pub radius: f64,
    pub width: f64,
    pub cx: f64,
    pub cy: f64,
    pub value: f64,
    pub amplitude: f64,
}

impl Default for InitialCfg {
    fn default() -> Self {
        Self {
            kind: "tanh-seed".into(),
            radius: 0.25,
            width: 0.1,
            cx: 0.5,
            cy: 0.5,
            value: 0.0,
            amplitude: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputCfg {
    /// Emit a field snapshot every this many steps (0 = final state only).
    pub snapshot_every: usize,
}

impl Default for OutputCfg {
    fn default() -> Self {
        Self { snapshot_every: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StationaryCfg {
    #[serde(rename = "CF")]
    pub c_f: f64,
    pub omega: f64,
    pub tol: f64,
    /// "picard" or "pseudotime".
    pub strategy: String,
    pub max_outer: usize,
    pub horizon: f64,
}

impl Default for StationaryCfg {
    fn default() -> Self {
        Self {
            c_f: -1.0, // negative = auto
            omega: 0.5,
            tol: 1e-9,
            strategy: "picard".into(),
            max_outer: 200,
            horizon: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationCfg {
    pub deltas: Vec<f64>,
}

impl Default for ContinuationCfg {
    fn default() -> Self {
        Self {
            deltas: vec![1e-1, 3e-2, 1e-2],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DarcyLimitCfg {
    pub delta_vs: Vec<f64>,
}

impl Default for DarcyLimitCfg {
    fn default() -> Self {
        Self {
            delta_vs: vec![1e-1, 1e-2, 1e-3],
        }
    }
}

/// Full run configuration (defaults produce the reference growth model with
/// a double-obstacle potential on a 64^2 unit square).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub grid: GridCfg,
    pub potential: PotentialCfg,
    pub source: SourceCfg,
    pub nutrient: NutrientCfg,
    pub flow: FlowCfg,
    pub time: TimeCfg,
    pub initial: InitialCfg,
    pub output: OutputCfg,
    pub stationary: StationaryCfg,
    pub continuation: ContinuationCfg,
    pub darcy_limit: DarcyLimitCfg,
}

/// Apply one `--set key=value` override onto the raw TOML tree.
fn apply_override(root: &mut toml::Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .with_context(|| format!("override '{spec}' is not of the form key=value"))?;
    // Parse the value as TOML scalar/array syntax; bare words become strings.
    let parsed: toml::Value = match format!("v = {raw}").parse::<toml::Value>() {
        Ok(toml::Value::Table(mut t)) => t.remove("v").expect("key v was just written"),
        _ => toml::Value::String(raw.to_string()),
    };
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (idx, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .with_context(|| format!("override path '{path}' crosses a non-table at '{part}'"))?;
        if idx + 1 == parts.len() {
            table.insert((*part).to_string(), parsed);
            return Ok(());
        }
        node = table
            .entry((*part).to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    unreachable!("split never yields an empty path");
}

/// Parse a configuration file (optional) plus `--set` overrides, materialize
/// defaults, and validate against the model assumptions.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut root: toml::Value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read config file {}", p.display()))?;
            text.parse()
                .with_context(|| format!("cannot parse TOML in {}", p.display()))?
        }
        None => toml::Value::Table(Default::default()),
    };
    for o in overrides {
        apply_override(&mut root, o)?;
    }
    let cfg: RunConfig = root
        .try_into()
        .context("configuration does not match the expected schema")?;
    validate(&cfg)?;
    Ok(cfg)
}

/// Validate every cross-field model assumption, naming the offending key.
pub fn validate(cfg: &RunConfig) -> Result<()> {
    if cfg.grid.nx < 4 || cfg.grid.ny < 4 {
        bail!("grid.nx/grid.ny: need at least 4 cells per direction");
    }
    if !(cfg.grid.lx > 0.0 && cfg.grid.ly > 0.0) {
        bail!("grid.lx/grid.ly: domain extents must be positive");
    }
    match cfg.potential.kind.as_str() {
        "double-obstacle" => {
            if !(cfg.potential.delta > 0.0 && cfg.potential.delta < 0.25) {
                bail!(
                    "potential.delta = {}: the double-obstacle regularization requires \
                     delta in (0, 1/4) (admissibility hypothesis of the bound sweep)",
                    cfg.potential.delta
                );
            }
        }
        "log" => {
            let cap = (cfg.potential.theta / (4.0 * cfg.potential.theta_c)).min(1.0);
            if !(cfg.potential.theta > 0.0 && cfg.potential.theta_c > cfg.potential.theta) {
                bail!(
                    "potential.theta/theta_c: the logarithmic potential requires \
                     0 < theta < theta_c (double-well condition)"
                );
            }
            if !(cfg.potential.delta > 0.0 && cfg.potential.delta <= cap) {
                bail!(
                    "potential.delta = {}: the logarithmic regularization requires \
                     delta <= min(1, theta/(4 theta_c)) = {cap} (admissibility hypothesis \
                     of the quadratic-growth bound)",
                    cfg.potential.delta
                );
            }
        }
        other => bail!("potential.kind = '{other}': expected 'double-obstacle' or 'log'"),
    }
    if cfg.source.enabled {
        if !(cfg.source.p > 0.0 && cfg.source.a > 0.0) {
            bail!("source.P/source.A: proliferation and drift scales must be positive");
        }
        if cfg.source.alpha < 0.0 {
            bail!("source.alpha: must be non-negative");
        }
        if cfg.source.rho_s <= cfg.source.alpha.abs() {
            bail!(
                "source.rho_S = {} <= |source.alpha| = {}: violates the (B1) sign \
                 condition f_phi(1) - f_v(1) < 0 (mean-value confinement fails)",
                cfg.source.rho_s,
                cfg.source.alpha.abs()
            );
        }
        if cfg.potential.kind == "log" {
            if !(cfg.source.r0 > 1.0) {
                bail!("source.r0: the logarithmic drift extension requires r0 > 1");
            }
            if cfg.source.alpha > 0.0 && cfg.source.r0 >= cfg.source.rho_s / cfg.source.alpha {
                bail!(
                    "source.r0 = {}: must stay below rho_S/alpha = {} so the drift \
                     interaction keeps its sign",
                    cfg.source.r0,
                    cfg.source.rho_s / cfg.source.alpha
                );
            }
        }
    }
    if !(cfg.nutrient.k > 0.0) {
        bail!("nutrient.K: boundary permeability must be positive");
    }
    if cfg.nutrient.h0 < 0.0 {
        bail!("nutrient.h0: consumption magnitude must be non-negative");
    }
    if cfg.nutrient.chi < 0.0 {
        bail!("nutrient.chi: chemotaxis coefficient must be non-negative");
    }
    match cfg.flow.mode.as_str() {
        "off" => {}
        "brinkman" | "darcy" => {
            if !(cfg.flow.nu > 0.0) {
                bail!("flow.nu: friction coefficient must be positive");
            }
            if cfg.flow.mode == "brinkman" {
                if !(cfg.flow.eta0 > 0.0 && cfg.flow.eta1 >= cfg.flow.eta0) {
                    bail!("flow.eta0/flow.eta1: need 0 < eta0 <= eta1 (viscosity bounds)");
                }
                if cfg.flow.lambda0 < 0.0 {
                    bail!("flow.lambda0: bulk viscosity bound must be non-negative");
                }
                if !matches!(cfg.flow.profile.as_str(), "constant" | "linear-in-phi") {
                    bail!(
                        "flow.profile = '{}': expected 'constant' or 'linear-in-phi'",
                        cfg.flow.profile
                    );
                }
            }
        }
        other => bail!("flow.mode = '{other}': expected 'brinkman', 'darcy', or 'off'"),
    }
    if !(cfg.time.t_end > 0.0) {
        bail!("time.t_end: horizon must be positive");
    }
    if cfg.time.dt < 0.0 {
        bail!("time.dt: time step must be non-negative (0 = default)");
    }
    if !matches!(cfg.initial.kind.as_str(), "tanh-seed" | "uniform" | "random") {
        bail!(
            "initial.kind = '{}': expected 'tanh-seed', 'uniform', or 'random'",
            cfg.initial.kind
        );
    }
    if cfg.initial.kind == "uniform" && cfg.initial.value.abs() >= 1.0 {
        bail!("initial.value: uniform phase must lie strictly inside (-1, 1)");
    }
    if !(cfg.stationary.omega > 0.0 && cfg.stationary.omega <= 1.0) {
        bail!("stationary.omega: Picard damping must lie in (0, 1]");
    }
    if !matches!(cfg.stationary.strategy.as_str(), "picard" | "pseudotime") {
        bail!(
            "stationary.strategy = '{}': expected 'picard' or 'pseudotime'",
            cfg.stationary.strategy
        );
    }
    if cfg
        .continuation
        .deltas
        .windows(2)
        .any(|w| w[1] >= w[0])
    {
        bail!("continuation.deltas: widths must be strictly descending");
    }
    Ok(())
}

/// Grid described by the configuration.
pub fn build_grid(cfg: &RunConfig) -> Result<Grid2d> {
    Ok(Grid2d::new(cfg.grid.nx, cfg.grid.ny, cfg.grid.lx, cfg.grid.ly)?)
}

/// Potential described by the configuration.
pub fn build_potential(cfg: &RunConfig) -> Result<PotentialSpec> {
    Ok(match cfg.potential.kind.as_str() {
        "double-obstacle" => PotentialSpec::double_obstacle(cfg.potential.delta)?,
        _ => PotentialSpec::logarithmic(
            cfg.potential.theta,
            cfg.potential.theta_c,
            cfg.potential.delta,
        )?,
    })
}

/// Source model described by the configuration.
pub fn build_source(cfg: &RunConfig) -> Result<SourceModel> {
    if !cfg.source.enabled {
        return Ok(SourceModel::disabled());
    }
    let kind = match cfg.potential.kind.as_str() {
        "log" => ExtensionKind::Logarithmic { r0: cfg.source.r0 },
        _ => ExtensionKind::Obstacle,
    };
    Ok(SourceModel::example(
        cfg.source.p,
        cfg.source.a,
        cfg.source.alpha,
        cfg.source.rho_s,
        kind,
    )?)
}

/// Flow mode described by the configuration.
pub fn build_flow(cfg: &RunConfig) -> Result<FlowMode> {
    Ok(match cfg.flow.mode.as_str() {
        "off" => FlowMode::Off,
        "darcy" => FlowMode::Darcy { nu: cfg.flow.nu },
        _ => {
            let kind = if cfg.flow.profile == "linear-in-phi" {
                ProfileKind::LinearInPhi
            } else {
                ProfileKind::Constant
            };
            FlowMode::Brinkman {
                nu: cfg.flow.nu,
                profile: ViscosityProfile::new(
                    cfg.flow.eta0,
                    cfg.flow.eta1,
                    cfg.flow.lambda0,
                    kind,
                )?,
            }
        }
    })
}

/// Evolution parameters described by the configuration.
pub fn build_params(cfg: &RunConfig) -> Result<ModelParams> {
    Ok(ModelParams {
        potential: build_potential(cfg)?,
        source: build_source(cfg)?,
        chi: cfg.nutrient.chi,
        nutrient_k: cfg.nutrient.k,
        consumption_h0: cfg.nutrient.h0,
        flow: build_flow(cfg)?,
        newton_tol: 1e-11,
        newton_max_iter: 60,
    })
}

/// Initial phase data described by the configuration.
pub fn build_initial(cfg: &RunConfig, grid: Grid2d) -> InitialData {
    match cfg.initial.kind.as_str() {
        "uniform" => InitialData::Uniform(cfg.initial.value),
        "random" => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(0));
            let amp = cfg.initial.amplitude.min(1.0 - 1e-9);
            let data: Vec<f64> = (0..grid.n_cells())
                .map(|_| rng.gen_range(-amp..amp))
                .collect();
            InitialData::Field(ScalarField { grid, data })
        }
        _ => InitialData::TanhSeed {
            radius: cfg.initial.radius,
            width: cfg.initial.width,
            cx: cfg.initial.cx,
            cy: cfg.initial.cy,
        },
    }
}

/// Full evolution run description.
pub fn build_run_spec(cfg: &RunConfig) -> Result<RunSpec> {
    let grid = build_grid(cfg)?;
    Ok(RunSpec {
        grid,
        params: build_params(cfg)?,
        t_end: cfg.time.t_end,
        dt: if cfg.time.dt > 0.0 {
            Some(cfg.time.dt)
        } else {
            None
        },
        initial: build_initial(cfg, grid),
        record_every: cfg.output.snapshot_every,
        max_steps: cfg.time.max_steps,
    })
}

/// Stationary solver configuration.
pub fn build_stationary(cfg: &RunConfig) -> Result<StationaryConfig> {
    let mut sc = StationaryConfig::new(build_params(cfg)?);
    if cfg.stationary.c_f >= 0.0 {
        sc.c_f = Some(cfg.stationary.c_f);
    }
    sc.omega = cfg.stationary.omega;
    sc.outer_tol = cfg.stationary.tol;
    sc.max_outer = cfg.stationary.max_outer;
    Ok(sc)
}
