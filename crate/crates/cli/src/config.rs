//! Experiment configuration: TOML with a schema version and per-experiment sections.

use hypnet_core::mollify::{required_points, Rate};
use hypnet_core::problems::{EpsGridSpec, ProblemKind, ProblemSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Worker threads; 0 or absent means all available.
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub solver: SolverSection,
    pub acoustics: Option<AcousticsSection>,
    pub garding: Option<GardingSection>,
    pub problem: Option<ProblemSpec>,
    pub solve: Option<SolveSection>,
    pub reduce: Option<ReduceSection>,
    pub friedrichs: Option<FriedrichsSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "half")]
    pub safety: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { safety: 0.5 }
    }
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pair {
    pub minus: f64,
    pub plus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Acoustics,
    Random,
}

/// Acoustics with step coefficients across x₁ = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcousticsSection {
    #[serde(default = "one")]
    pub dimension: usize,
    #[serde(default = "family_default")]
    pub family: Family,
    /// Size of the random family (family = "random").
    #[serde(default = "three")]
    pub random_size: usize,
    pub rho: Pair,
    pub speed: Pair,
    pub grid: usize,
    #[serde(default = "eps_single")]
    pub epsilon: f64,
    #[serde(default)]
    pub epsilons: EpsGridSpec,
    #[serde(default)]
    pub rate: Rate,
    #[serde(default = "sixty_four")]
    pub samples_x: usize,
    #[serde(default = "sixty_four")]
    pub samples_xi: usize,
}

fn one() -> usize {
    1
}
fn three() -> usize {
    3
}
fn sixty_four() -> usize {
    64
}
fn eps_single() -> f64 {
    2f64.powi(-6)
}
fn family_default() -> Family {
    Family::Acoustics
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GardingSection {
    #[serde(default = "sixty_four")]
    pub trials: usize,
    #[serde(default = "band")]
    pub band: f64,
}

fn band() -> f64 {
    16.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub epsilon: f64,
    /// Snapshots written at these fractions of the horizon.
    #[serde(default = "final_only")]
    pub snapshots: Vec<f64>,
}

fn final_only() -> Vec<f64> {
    vec![1.0]
}

/// w_tt = c(x)² w_xx with c = base + amplitude·sin x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReduceSection {
    pub grid: usize,
    pub base: f64,
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default = "unit")]
    pub t_end: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "thousand")]
    pub samples: usize,
}

fn unit() -> f64 {
    1.0
}
fn thousand() -> usize {
    1000
}

/// p(x, ξ) = mean + amplitude·cos x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FriedrichsSection {
    pub grid: usize,
    pub mean: f64,
    pub amplitude: f64,
    #[serde(default = "hundred")]
    pub probes: usize,
}

fn hundred() -> usize {
    100
}

fn bad(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn pow2(field: &str, n: usize, min: usize) -> Result<(), CliError> {
    if !n.is_power_of_two() || n < min {
        return Err(bad(field, format!("{n} is not a power of two >= {min}")));
    }
    Ok(())
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(bad(field, format!("{v} must be positive")));
    }
    Ok(())
}

fn epsilon(field: &str, v: f64) -> Result<(), CliError> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(bad(field, format!("{v} outside (0, 1]")));
    }
    Ok(())
}

/// The mollifier at the smallest ε must be resolved by the grid.
fn resolves(field: &str, grid: usize, rate: Rate, eps: impl IntoIterator<Item = f64>) -> Result<(), CliError> {
    let need = eps.into_iter().map(|e| required_points(rate.omega(e))).max().unwrap_or(0);
    if grid < need {
        return Err(bad(field, format!("{grid} points cannot resolve the mollifier; need at least {need}")));
    }
    Ok(())
}

fn core_arg(e: hypnet_core::HypnetError) -> CliError {
    match e {
        hypnet_core::HypnetError::Argument { field, reason } => CliError::Invalid { field, reason },
        other => bad("config", other.to_string()),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(bad(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", cfg.schema_version),
            ));
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(7)
    }

    fn need<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        section.as_ref().ok_or_else(|| bad(name, "section is required by this experiment"))
    }

    pub fn acoustics(&self) -> Result<&AcousticsSection, CliError> {
        Self::need(&self.acoustics, "acoustics")
    }
    pub fn problem(&self) -> Result<&ProblemSpec, CliError> {
        Self::need(&self.problem, "problem")
    }
    pub fn solve(&self) -> Result<&SolveSection, CliError> {
        Self::need(&self.solve, "solve")
    }
    pub fn reduce(&self) -> Result<&ReduceSection, CliError> {
        Self::need(&self.reduce, "reduce")
    }
    pub fn friedrichs(&self) -> Result<&FriedrichsSection, CliError> {
        Self::need(&self.friedrichs, "friedrichs")
    }

    /// Everything the named experiment reads, checked before any computation.
    pub fn validate_for(&self, experiment: &str) -> Result<(), CliError> {
        positive("solver.safety", self.solver.safety)?;
        match experiment {
            "certify-symmetriser" | "garding-probe" => {
                let a = self.acoustics()?;
                if !(a.dimension == 1 || a.dimension == 2) {
                    return Err(bad("acoustics.dimension", "must be 1 or 2"));
                }
                if a.family == Family::Random && (a.dimension != 1 || a.random_size < 2) {
                    return Err(bad("acoustics.random_size", "random family is 1D with size >= 2"));
                }
                for (f, v) in [
                    ("acoustics.rho.minus", a.rho.minus),
                    ("acoustics.rho.plus", a.rho.plus),
                    ("acoustics.speed.minus", a.speed.minus),
                    ("acoustics.speed.plus", a.speed.plus),
                ] {
                    positive(f, v)?;
                }
                pow2("acoustics.grid", a.grid, 8)?;
                epsilon("acoustics.epsilon", a.epsilon)?;
                a.epsilons.validate("acoustics.epsilons").map_err(core_arg)?;
                if let Rate::Power { theta } = a.rate {
                    positive("acoustics.rate.theta", theta)?;
                }
                if a.family == Family::Acoustics {
                    let grid_eps = a.epsilons.grid().map_err(core_arg)?;
                    if experiment == "garding-probe" {
                        resolves("acoustics.grid", a.grid, a.rate, grid_eps.epsilons().iter().copied())?;
                    } else {
                        resolves("acoustics.grid", a.grid, a.rate, [a.epsilon])?;
                    }
                }
                if a.samples_x == 0 || a.samples_xi == 0 {
                    return Err(bad("acoustics.samples_x", "sample counts must be positive"));
                }
                if experiment == "garding-probe" {
                    if a.dimension != 1 {
                        return Err(bad("acoustics.dimension", "the Gårding probe runs in 1D"));
                    }
                    if let Some(g) = &self.garding {
                        if g.trials < 16 {
                            return Err(bad("garding.trials", "need at least 16"));
                        }
                        positive("garding.band", g.band)?;
                    }
                }
            }
            "solve" | "associate" => {
                let p = self.problem()?;
                p.validate().map_err(core_arg)?;
                let space = p.kind == ProblemKind::SpaceJump;
                if space && experiment == "associate" {
                    resolves("problem.grid", p.grid, p.rate, p.epsilon_values())?;
                }
                if experiment == "solve" {
                    let s = self.solve()?;
                    epsilon("solve.epsilon", s.epsilon)?;
                    if space {
                        resolves("problem.grid", p.grid, p.rate, [s.epsilon])?;
                    }
                    if s.snapshots.is_empty() || s.snapshots.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
                        return Err(bad("solve.snapshots", "fractions must lie in (0, 1]"));
                    }
                }
            }
            "reduce-roundtrip" => {
                let r = self.reduce()?;
                pow2("reduce.grid", r.grid, 8)?;
                positive("reduce.base", r.base)?;
                if !(r.amplitude.abs() < r.base) {
                    return Err(bad("reduce.amplitude", "|amplitude| must stay below base"));
                }
                positive("reduce.t_end", r.t_end)?;
                if let Some(dt) = r.dt {
                    positive("reduce.dt", dt)?;
                }
            }
            "friedrichs-demo" => {
                let f = self.friedrichs()?;
                pow2("friedrichs.grid", f.grid, 8)?;
                if f.grid > 256 {
                    return Err(bad("friedrichs.grid", "dense amplitude matrix limited to 256 points"));
                }
                if f.probes == 0 {
                    return Err(bad("friedrichs.probes", "must be positive"));
                }
            }
            other => return Err(CliError::UnknownExperiment(other.to_string())),
        }
        Ok(())
    }
}
