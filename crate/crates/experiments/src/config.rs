//! Sweep configuration: a TOML file with `[sweep]`, `[maze]`, `[estimator]`
//! sections and any number of `[[perturb]]` entries. Anything left out falls
//! back to the scenario's desk-scale preset.

use std::fmt;
use std::str::FromStr;

use serde::Deserialize;
use valueprior::maze::{MazeSpec, PerturbSpec};
use valueprior::{EstimatorConfig, InitMode};

use crate::error::{ExpError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Fig1ValuePrior,
    Fig1Dirichlet,
    Fig2Reduction,
    Fig3Sensitivity,
    Custom,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Fig1ValuePrior,
        Scenario::Fig1Dirichlet,
        Scenario::Fig2Reduction,
        Scenario::Fig3Sensitivity,
        Scenario::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig1ValuePrior => "fig1-value-prior",
            Scenario::Fig1Dirichlet => "fig1-dirichlet",
            Scenario::Fig2Reduction => "fig2-reduction",
            Scenario::Fig3Sensitivity => "fig3-sensitivity",
            Scenario::Custom => "custom",
        }
    }

    /// Estimators a preset scenario runs; `Custom` takes them from the config.
    pub fn default_estimators(self) -> Vec<EstimatorKind> {
        match self {
            Scenario::Fig1ValuePrior | Scenario::Fig3Sensitivity => vec![EstimatorKind::ValuePrior],
            Scenario::Fig1Dirichlet => vec![EstimatorKind::Dirichlet],
            Scenario::Fig2Reduction => vec![EstimatorKind::Reduction],
            Scenario::Custom => Vec::new(),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = ExpError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| ExpError::Config(format!("unknown scenario {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    /// Alternating maximization with known transitions.
    ValuePrior,
    /// Posterior mean under a Dirichlet prior on the modeling MDP's optimal actions.
    Dirichlet,
    /// Empirical frequencies; ignores alpha.
    Mle,
    /// Value prior on the augmented problem with transitions unknown.
    Reduction,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::ValuePrior => "value-prior",
            EstimatorKind::Dirichlet => "dirichlet",
            EstimatorKind::Mle => "mle",
            EstimatorKind::Reduction => "reduction",
        }
    }
}

/// Which `(t, s)` rows enter the RMS error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RmsScope {
    /// Every `(t, s, a)` entry.
    All,
    /// Only rows the true policy reaches with positive probability. Rows no
    /// demonstration can ever reach would otherwise dominate the average.
    #[default]
    MentorVisited,
}

/// A fully resolved sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub maze_spec: MazeSpec,
    pub alphas: Vec<f64>,
    pub dataset_sizes: Vec<usize>,
    pub num_mazes: usize,
    /// Only used by `fig3-sensitivity` (and `custom` when non-empty). The
    /// `seed` field of each entry is ignored; perturbation seeds are derived.
    pub perturb_grid: Vec<PerturbSpec>,
    /// `alpha` and `seed` are overridden per cell.
    pub estimator_config: EstimatorConfig<f64>,
    pub estimators: Vec<EstimatorKind>,
    pub master_seed: u64,
    pub threads: usize,
    /// Record wall-clock time per cell. Off by default so identical sweeps
    /// write identical files.
    pub timing: bool,
    pub rms_scope: RmsScope,
}

pub const DEFAULT_ALPHAS: [f64; 5] = [0.0, 0.1, 1.0, 10.0, 100.0];
pub const DEFAULT_SIZES: [usize; 6] = [1, 2, 5, 10, 20, 50];

/// Swap fractions whose mentors spread over roughly 60–100% of the optimal
/// value on desk-scale mazes, ten policies per level. No Gaussian noise: it
/// flattens the mentor's rows, which lowers the error of any near-uniform
/// estimate and masks the effect of the mentor's value.
pub const DEFAULT_DELTAS: [f64; 6] = [0.0, 0.01, 0.02, 0.03, 0.05, 0.07];
pub const POLICIES_PER_LEVEL: usize = 10;

pub fn default_perturb_grid() -> Vec<PerturbSpec> {
    DEFAULT_DELTAS
        .iter()
        .flat_map(|&delta| {
            std::iter::repeat_n(
                PerturbSpec {
                    delta,
                    sigma2: 0.0,
                    noise_mean: 0.0,
                    seed: 0,
                },
                POLICIES_PER_LEVEL,
            )
        })
        .collect()
}

impl ExperimentConfig {
    /// Desk-scale preset: 10×10 grid, horizon 30, 10 mazes.
    pub fn desk(scenario: Scenario) -> Self {
        let fig3 = scenario == Scenario::Fig3Sensitivity;
        ExperimentConfig {
            scenario,
            maze_spec: MazeSpec::desk(),
            alphas: DEFAULT_ALPHAS.to_vec(),
            dataset_sizes: DEFAULT_SIZES.to_vec(),
            num_mazes: if fig3 { 5 } else { 10 },
            perturb_grid: if fig3 { default_perturb_grid() } else { Vec::new() },
            estimator_config: EstimatorConfig::default(),
            estimators: scenario.default_estimators(),
            master_seed: 0,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
            timing: false,
            rms_scope: RmsScope::MentorVisited,
        }
    }

    /// Switches to the 30×30, horizon-90 mazes and 50 mazes per curve.
    pub fn into_full_scale(mut self) -> Self {
        let seed = self.maze_spec.seed;
        self.maze_spec = MazeSpec {
            seed,
            ..MazeSpec::default()
        };
        if self.scenario != Scenario::Fig3Sensitivity {
            self.num_mazes = 50;
        }
        self
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text)?;
        file.resolve()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ExpError::Config(m.to_string()));
        self.maze_spec.validate()?;
        self.estimator_config.validate()?;
        if self.alphas.is_empty() || self.dataset_sizes.is_empty() || self.estimators.is_empty() {
            return bad("alphas, dataset_sizes and estimators must be non-empty");
        }
        if self.alphas.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return bad("alphas must be finite and non-negative");
        }
        if self.num_mazes == 0 {
            return bad("num_mazes must be positive");
        }
        if self.threads == 0 {
            return bad("threads must be positive");
        }
        if self.scenario == Scenario::Fig3Sensitivity && self.perturb_grid.is_empty() {
            return bad("fig3-sensitivity needs at least one [[perturb]] entry");
        }
        for p in &self.perturb_grid {
            if !(0.0..=1.0).contains(&p.delta) || !(p.sigma2 >= 0.0) || !p.noise_mean.is_finite() {
                return bad("perturb entries need delta in [0, 1], sigma2 >= 0, finite noise_mean");
            }
        }
        Ok(())
    }

    /// Perturbations in effect; a single identity entry when none apply.
    pub fn effective_perturbations(&self) -> Vec<Option<PerturbSpec>> {
        let use_grid = match self.scenario {
            Scenario::Fig3Sensitivity => true,
            Scenario::Custom => !self.perturb_grid.is_empty(),
            _ => false,
        };
        if use_grid {
            self.perturb_grid.iter().cloned().map(Some).collect()
        } else {
            vec![None]
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    maze: MazeSection,
    #[serde(default)]
    estimator: EstimatorSection,
    #[serde(default)]
    perturb: Option<Vec<PerturbSection>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    scenario: Option<Scenario>,
    alphas: Option<Vec<f64>>,
    dataset_sizes: Option<Vec<usize>>,
    num_mazes: Option<usize>,
    master_seed: Option<u64>,
    threads: Option<usize>,
    estimators: Option<Vec<EstimatorKind>>,
    timing: Option<bool>,
    rms_scope: Option<RmsScope>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MazeSection {
    grid_side: Option<usize>,
    slip_prob: Option<f64>,
    obstacle_density: Option<f64>,
    goal_reward: Option<f64>,
    obstacle_magnitude_range: Option<(f64, f64)>,
    horizon: Option<usize>,
    twin_actions: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimatorSection {
    gamma: Option<f64>,
    objective_tol: Option<f64>,
    max_cycles: Option<usize>,
    bisection_tol: Option<f64>,
    init: Option<String>,
    seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerturbSection {
    delta: f64,
    sigma2: f64,
    noise_mean: Option<f64>,
}

impl ConfigFile {
    fn resolve(self) -> Result<ExperimentConfig> {
        let scenario = self.sweep.scenario.unwrap_or(Scenario::Fig1ValuePrior);
        let mut cfg = ExperimentConfig::desk(scenario);
        let s = self.sweep;
        if let Some(v) = s.alphas {
            cfg.alphas = v;
        }
        if let Some(v) = s.dataset_sizes {
            cfg.dataset_sizes = v;
        }
        if let Some(v) = s.num_mazes {
            cfg.num_mazes = v;
        }
        if let Some(v) = s.master_seed {
            cfg.master_seed = v;
        }
        if let Some(v) = s.threads {
            cfg.threads = v;
        }
        if let Some(v) = s.estimators {
            cfg.estimators = v;
        }
        if let Some(v) = s.timing {
            cfg.timing = v;
        }
        if let Some(v) = s.rms_scope {
            cfg.rms_scope = v;
        }

        let m = self.maze;
        let spec = &mut cfg.maze_spec;
        spec.grid_side = m.grid_side.unwrap_or(spec.grid_side);
        spec.slip_prob = m.slip_prob.unwrap_or(spec.slip_prob);
        spec.obstacle_density = m.obstacle_density.unwrap_or(spec.obstacle_density);
        spec.goal_reward = m.goal_reward.unwrap_or(spec.goal_reward);
        spec.obstacle_magnitude_range = m.obstacle_magnitude_range.or(spec.obstacle_magnitude_range);
        spec.horizon = m.horizon.unwrap_or(spec.horizon);
        spec.twin_actions = m.twin_actions.unwrap_or(spec.twin_actions);

        let e = self.estimator;
        let est = &mut cfg.estimator_config;
        est.gamma = e.gamma.unwrap_or(est.gamma);
        est.objective_tol = e.objective_tol.unwrap_or(est.objective_tol);
        est.max_cycles = e.max_cycles.unwrap_or(est.max_cycles);
        est.bisection_tol = e.bisection_tol.unwrap_or(est.bisection_tol);
        est.seed = e.seed.unwrap_or(est.seed);
        if let Some(init) = e.init {
            est.init_mode = init.parse::<InitMode>()?;
        }

        if let Some(grid) = self.perturb {
            cfg.perturb_grid = grid
                .into_iter()
                .map(|p| PerturbSpec {
                    delta: p.delta,
                    sigma2: p.sigma2,
                    noise_mean: p.noise_mean.unwrap_or(PerturbSpec::default().noise_mean),
                    seed: 0,
                })
                .collect();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
