//! Run configuration: a JSON file, overridden by command-line flags, resolved
//! into concrete values before any computation starts.

use std::fmt;
use std::path::{Path, PathBuf};

use nlskdv::grid::{default_half_width, DEFAULT_NODES};
use nlskdv::{Grid, GroundOptions, Params, ThresholdOptions, WaveParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Threshold,
    Ground,
    Continue,
    Evolve,
    Energy,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Command::Threshold => "threshold",
            Command::Ground => "ground",
            Command::Continue => "continue",
            Command::Evolve => "evolve",
            Command::Energy => "energy",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationConfig {
    pub beta_target: f64,
    pub steps: usize,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            beta_target: 0.1,
            steps: 4,
        }
    }
}

/// Where the state for `evolve` and `energy` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    /// Ground state computed with the current parameters.
    Ground,
    /// `(U1, V2)`.
    Decoupled,
    /// `(0, V2)`.
    Kdv,
    /// `(U1, 0)`.
    Nls,
    /// `profile.u` and `profile.v` CSV files.
    Files,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Coefficient of the coupling terms in the dispersive system; `+β` makes
    /// stationary profiles traveling waves.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_every: Option<usize>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            k: None,
            omega: None,
            t_final: 5.0,
            dt: None,
            coupling: None,
            sample_every: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: GroundOptions,
    #[serde(default)]
    pub threshold: ThresholdOptions,
    #[serde(default)]
    pub continuation: ContinuationConfig,
    #[serde(default)]
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every field has a default")
    }
}

/// Values given on the command line; each one wins over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub beta: Option<f64>,
    pub half_width: Option<f64>,
    pub n: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<nlskdv::Error> for ConfigError {
    fn from(e: nlskdv::Error) -> Self {
        ConfigError(e.to_string())
    }
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError(format!("config {}: {e}", path.display())))
}

/// A fully resolved configuration together with the objects built from it.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: RunConfig,
    pub command: Command,
    pub params: Params,
    pub grid: Grid,
    pub out: PathBuf,
}

pub const DEFAULT_OUT: &str = "nlskdv-out";

pub fn resolve(
    mut cfg: RunConfig,
    command: Command,
    o: &Overrides,
) -> Result<Resolved, ConfigError> {
    if let Some(c) = cfg.command {
        if c != command {
            return Err(ConfigError(format!(
                "config is for `{c}` but the `{command}` command was run"
            )));
        }
    }
    cfg.command = Some(command);

    let pc = &mut cfg.params;
    pc.lambda1 = o.lambda1.or(pc.lambda1);
    pc.lambda2 = o.lambda2.or(pc.lambda2);
    pc.beta = Some(o.beta.or(pc.beta).unwrap_or(0.0));
    let lambda1 = pc
        .lambda1
        .ok_or_else(|| ConfigError("missing `params.lambda1` (or --lambda1)".into()))?;
    let lambda2 = pc
        .lambda2
        .ok_or_else(|| ConfigError("missing `params.lambda2` (or --lambda2)".into()))?;
    let params = Params::new(lambda1, lambda2, pc.beta.unwrap_or(0.0))?;

    let gc = &mut cfg.grid;
    gc.half_width = Some(
        o.half_width
            .or(gc.half_width)
            .unwrap_or_else(|| default_half_width(lambda1, lambda2)),
    );
    gc.n = Some(o.n.or(gc.n).unwrap_or(DEFAULT_NODES));
    let grid = Grid::new(gc.half_width.unwrap_or_default(), gc.n.unwrap_or_default())?;

    if let Some(seed) = o.seed {
        cfg.seed = seed;
    }
    let out = o
        .out
        .clone()
        .or(cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    cfg.out = Some(out.clone());

    match command {
        Command::Continue => {
            let c = &cfg.continuation;
            if !(c.beta_target.is_finite() && c.beta_target >= 0.0) {
                return Err(ConfigError(format!(
                    "`continuation.beta_target` = {} must be finite and >= 0",
                    c.beta_target
                )));
            }
            if c.steps == 0 {
                return Err(ConfigError(
                    "`continuation.steps` must be at least 1".into(),
                ));
            }
        }
        Command::Evolve | Command::Energy => {
            let default_source = if command == Command::Evolve {
                Source::Ground
            } else {
                Source::Decoupled
            };
            let source = *cfg.profile.source.get_or_insert(default_source);
            if source == Source::Files && (cfg.profile.u.is_none() || cfg.profile.v.is_none()) {
                return Err(ConfigError(
                    "`profile.source` = \"files\" needs both `profile.u` and `profile.v`".into(),
                ));
            }
            if command == Command::Evolve {
                resolve_evolution(&mut cfg.evolution, &params, &grid)?;
            }
        }
        Command::Threshold | Command::Ground => {}
    }

    Ok(Resolved {
        command,
        params,
        grid,
        out,
        config: cfg,
    })
}

fn resolve_evolution(e: &mut EvolutionConfig, p: &Params, grid: &Grid) -> Result<(), ConfigError> {
    let natural = WaveParams::for_params(p)?;
    let k = *e.k.get_or_insert(natural.k());
    let omega = *e.omega.get_or_insert(natural.omega());
    let wave = WaveParams::new(k, omega)?;
    if (wave.lambda1() - p.lambda1).abs() > 1e-12 || (wave.lambda2() - p.lambda2).abs() > 1e-12 {
        return Err(ConfigError(format!(
            "`evolution.k` = {k}, `evolution.omega` = {omega} give lambda1 = {}, lambda2 = {} \
             instead of {}, {}",
            wave.lambda1(),
            wave.lambda2(),
            p.lambda1,
            p.lambda2
        )));
    }
    if !(e.t_final.is_finite() && e.t_final >= 0.0) {
        return Err(ConfigError(format!(
            "`evolution.T` = {} must be finite and >= 0",
            e.t_final
        )));
    }
    let dt = *e.dt.get_or_insert(nlskdv::evolve::default_dt(grid));
    if !(dt.is_finite() && dt > 0.0) {
        return Err(ConfigError(format!(
            "`evolution.dt` = {dt} must be finite and > 0"
        )));
    }
    e.coupling.get_or_insert(p.beta);
    let steps = (e.t_final / dt).round() as usize;
    let every = *e.sample_every.get_or_insert((steps / 100).max(1));
    if every == 0 {
        return Err(ConfigError(
            "`evolution.sample_every` must be at least 1".into(),
        ));
    }
    Ok(())
}
