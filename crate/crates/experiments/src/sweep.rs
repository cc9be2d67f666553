//! The sweep driver: mazes × perturbations form units that share a mentor
//! and a dataset; every (unit, size, alpha, estimator) combination is a cell.

use std::time::Instant;

use rayon::prelude::*;
use valueprior::baselines::{dirichlet_with_spec, mle_estimate, DirichletSpec};
use valueprior::estimator::{log_posterior, EstimationResult};
use valueprior::maze::{blind_maze, generate_maze, mentor_policy, perturb_policy, rms_error, MazeSpec, PerturbSpec};
use valueprior::mdp::{occupancy_probabilities, optimal_action_sets, policy_value, sample_trajectories};
use valueprior::reduction::{
    build_augmented_mdp, default_sink_penalty, extract_policy_and_transitions, lift_dataset, AugmentedMdp,
};
use valueprior::{
    alternating_maximize, count_tensor, CountTensor, EstimatorConfig, FiniteHorizonMdp, Policy, TrajectoryDataset,
};

use crate::config::{EstimatorKind, ExperimentConfig, RmsScope};
use crate::error::{ExpError, Result};
use crate::results::ResultRow;
use crate::seeds;

/// Everything the cells of one (maze, perturbation) pair share.
pub struct Unit {
    pub maze_index: usize,
    pub perturb_index: usize,
    pub maze_seed: u64,
    pub policy_seed: u64,
    pub data_seed: u64,
    /// Outcome of building the unit; cells of a failed unit become NaN rows.
    pub built: std::result::Result<UnitData, String>,
}

pub struct UnitData {
    /// The policy being estimated: the mentor, perturbed for sensitivity runs.
    pub truth: Policy<f64>,
    /// The apprentice's modeling MDP (obstacles removed).
    pub model: FiniteHorizonMdp<f64>,
    pub value_fraction: f64,
    /// Trajectories for the largest requested size; smaller sizes are prefixes.
    pub data: TrajectoryDataset,
    pub optimal_sets: Option<Vec<Vec<usize>>>,
    /// `(t, s)` rows scored by the RMS error, flattened `t * |S| + s`.
    pub scored_rows: Vec<bool>,
    pub augmented: Option<AugmentedMdp<f64>>,
}

fn build_unit_data(
    config: &ExperimentConfig,
    maze_seed: u64,
    policy_seed: u64,
    data_seed: u64,
    perturb: Option<&PerturbSpec>,
) -> Result<UnitData> {
    let gamma = config.estimator_config.gamma;
    let spec = MazeSpec {
        seed: maze_seed,
        ..config.maze_spec.clone()
    };
    let maze = generate_maze::<f64>(&spec)?;
    let optimal = mentor_policy(&maze.mdp, gamma, policy_seed);
    let truth = match perturb {
        Some(p) => {
            let p = PerturbSpec {
                seed: seeds::derive(policy_seed, &[seeds::PERTURB]),
                ..p.clone()
            };
            perturb_policy(&optimal, &p)?.0
        }
        None => optimal.clone(),
    };
    let v_opt = policy_value(&maze.mdp, &optimal, gamma)?.0;
    let v_truth = policy_value(&maze.mdp, &truth, gamma)?.0;
    let value_fraction = if v_opt != 0.0 { v_truth / v_opt } else { f64::NAN };

    let scored_rows = match config.rms_scope {
        RmsScope::All => vec![true; maze.mdp.dims().epochs() * maze.mdp.num_states()],
        RmsScope::MentorVisited => {
            let occ = occupancy_probabilities(&maze.mdp, &truth)?;
            (0..maze.mdp.dims().epochs())
                .flat_map(|t| occ.row(t).iter().map(|&p| p > 0.0).collect::<Vec<_>>())
                .collect()
        }
    };
    let model = blind_maze(&maze.mdp);
    let max_m = config.dataset_sizes.iter().copied().max().unwrap_or(0);
    let data = sample_trajectories(&maze.mdp, &truth, max_m, data_seed);

    let optimal_sets = config
        .estimators
        .contains(&EstimatorKind::Dirichlet)
        .then(|| optimal_action_sets(&model, gamma, 1e-9));
    let augmented = if config.estimators.contains(&EstimatorKind::Reduction) {
        let penalty = default_sink_penalty(model.rewards());
        Some(build_augmented_mdp(
            model.num_actions(),
            model.rewards(),
            model.initial_dist(),
            model.horizon(),
            penalty,
        )?)
    } else {
        None
    };
    Ok(UnitData {
        truth,
        model,
        value_fraction,
        data,
        optimal_sets,
        scored_rows,
        augmented,
    })
}

/// Builds every unit of the sweep, in (maze, perturbation) order.
pub fn build_units(config: &ExperimentConfig) -> Vec<Unit> {
    let perturbations = config.effective_perturbations();
    let pairs: Vec<(usize, usize)> = (0..config.num_mazes)
        .flat_map(|i| (0..perturbations.len()).map(move |j| (i, j)))
        .collect();
    pairs
        .into_par_iter()
        .map(|(i, j)| {
            let master = config.master_seed;
            let maze_seed = seeds::derive(master, &[seeds::MAZE, i as u64]);
            let policy_seed = seeds::derive(master, &[seeds::TWIN, i as u64, j as u64]);
            let data_seed = seeds::derive(master, &[seeds::DATA, i as u64, j as u64]);
            let built = build_unit_data(config, maze_seed, policy_seed, data_seed, perturbations[j].as_ref())
                .map_err(|e| e.to_string());
            Unit {
                maze_index: i,
                perturb_index: j,
                maze_seed,
                policy_seed,
                data_seed,
                built,
            }
        })
        .collect()
}

struct Estimate {
    policy: Policy<f64>,
    objective: f64,
    cycles: usize,
}

fn from_result(r: EstimationResult<f64>) -> Estimate {
    Estimate {
        objective: r.final_objective(),
        cycles: r.cycles_run,
        policy: r.policy,
    }
}

fn estimate(
    kind: EstimatorKind,
    unit: &UnitData,
    data: &TrajectoryDataset,
    counts: &CountTensor,
    config: &EstimatorConfig<f64>,
) -> Result<Estimate> {
    let model = &unit.model;
    let baseline = |policy: Policy<f64>| -> Result<Estimate> {
        let objective = log_posterior(model, &policy, counts, config.alpha, config.gamma)?;
        Ok(Estimate {
            policy,
            objective,
            cycles: 0,
        })
    };
    match kind {
        EstimatorKind::ValuePrior => Ok(from_result(alternating_maximize(model, counts, config)?)),
        EstimatorKind::Mle => baseline(mle_estimate(counts)),
        EstimatorKind::Dirichlet => {
            let spec = DirichletSpec {
                alpha: config.alpha,
                optimal_sets: unit.optimal_sets.clone().expect("built with the unit"),
            };
            baseline(dirichlet_with_spec(counts, &spec))
        }
        EstimatorKind::Reduction => {
            let aug = unit.augmented.as_ref().expect("built with the unit");
            let lifted = lift_dataset(data, &aug.maps)?;
            let aug_counts = count_tensor(&lifted, aug.base.dims())?;
            let res = alternating_maximize(&aug.base, &aug_counts, config)?;
            let extracted = extract_policy_and_transitions(&res.policy, &aug.maps)?;
            Ok(Estimate {
                policy: extracted.policy,
                objective: res.final_objective(),
                cycles: res.cycles_run,
            })
        }
    }
}

fn scoped_rms(estimate: &Policy<f64>, truth: &Policy<f64>, rows: &[bool]) -> Result<f64> {
    if rows.iter().all(|&r| r) {
        return Ok(rms_error(estimate, truth)?);
    }
    let n_a = truth.dims().num_actions;
    let (mut sq, mut n) = (0.0, 0usize);
    for (i, _) in rows.iter().enumerate().filter(|e| *e.1) {
        let a = &estimate.as_slice()[i * n_a..(i + 1) * n_a];
        let b = &truth.as_slice()[i * n_a..(i + 1) * n_a];
        sq += a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        n += n_a;
    }
    Ok(if n == 0 { 0.0 } else { (sq / n as f64).sqrt() })
}

/// One unit of work: which unit, which size and alpha, which estimator.
#[derive(Debug, Clone, Copy)]
struct Cell {
    unit: usize,
    size_index: usize,
    alpha_index: usize,
    kind: EstimatorKind,
}

fn run_cell(config: &ExperimentConfig, units: &[Unit], cell: Cell) -> ResultRow {
    let unit = &units[cell.unit];
    let m = config.dataset_sizes[cell.size_index];
    let alpha = if cell.kind == EstimatorKind::Mle { 0.0 } else { config.alphas[cell.alpha_index] };
    let mut row = ResultRow {
        scenario: config.scenario.name().to_string(),
        maze_seed: unit.maze_seed,
        policy_seed: unit.policy_seed,
        data_seed: unit.data_seed,
        estimator: cell.kind.name().to_string(),
        alpha,
        num_trajectories: m,
        mentor_value_fraction: f64::NAN,
        rms: f64::NAN,
        final_objective: f64::NAN,
        cycles: 0,
        wall_millis: 0,
    };
    let data = match &unit.built {
        Ok(d) => d,
        Err(_) => return row,
    };
    row.mentor_value_fraction = data.value_fraction;

    let est_config = EstimatorConfig {
        alpha,
        seed: seeds::derive(
            config.estimator_config.seed,
            &[
                seeds::INIT,
                unit.maze_index as u64,
                unit.perturb_index as u64,
                cell.size_index as u64,
                cell.alpha_index as u64,
            ],
        ),
        ..config.estimator_config.clone()
    };
    let start = Instant::now();
    let outcome = (|| -> Result<(Estimate, f64)> {
        let subset = data.data.prefix(m);
        let counts = count_tensor(&subset, data.model.dims())?;
        let est = estimate(cell.kind, data, &subset, &counts, &est_config)?;
        let rms = scoped_rms(&est.policy, &data.truth, &data.scored_rows)?;
        Ok((est, rms))
    })();
    if let Ok((est, rms)) = outcome {
        row.rms = rms;
        row.final_objective = est.objective;
        row.cycles = est.cycles;
    }
    if config.timing {
        row.wall_millis = start.elapsed().as_millis() as u64;
    }
    row
}

/// Runs the whole sweep on a pool of `config.threads` workers. Rows come back
/// in cell order; write them with [`crate::results::write_results`] for the
/// canonical sort.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| ExpError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        let units = build_units(config);
        let mut cells = Vec::new();
        for u in 0..units.len() {
            for size_index in 0..config.dataset_sizes.len() {
                for &kind in &config.estimators {
                    let n_alpha = if kind == EstimatorKind::Mle { 1 } else { config.alphas.len() };
                    for alpha_index in 0..n_alpha {
                        cells.push(Cell {
                            unit: u,
                            size_index,
                            alpha_index,
                            kind,
                        });
                    }
                }
            }
        }
        cells.into_par_iter().map(|c| run_cell(config, &units, c)).collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Scenario;

    fn tiny(scenario: Scenario) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::desk(scenario);
        cfg.maze_spec.grid_side = 4;
        cfg.maze_spec.horizon = 6;
        cfg.num_mazes = 2;
        cfg.alphas = vec![0.0, 1.0];
        cfg.dataset_sizes = vec![0, 3];
        cfg.threads = 2;
        cfg
    }

    #[test]
    fn row_count() {
        let rows = run_sweep(&tiny(Scenario::Fig1ValuePrior)).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 2);
        assert!(rows.iter().all(|r| r.rms.is_finite() && r.rms >= 0.0));
    }

    #[test]
    fn zero_alpha_value_prior_matches_mle() {
        let mut cfg = tiny(Scenario::Custom);
        cfg.alphas = vec![0.0];
        cfg.dataset_sizes = vec![3, 7];
        cfg.estimators = vec![EstimatorKind::ValuePrior, EstimatorKind::Mle];
        let rows = run_sweep(&cfg).unwrap();
        for pair in rows.chunks(2) {
            assert!((pair[0].rms - pair[1].rms).abs() < 1e-9, "{pair:?}");
        }
    }

    #[test]
    fn unperturbed_fig3_is_at_full_value() {
        let mut cfg = tiny(Scenario::Fig3Sensitivity);
        cfg.perturb_grid = vec![PerturbSpec {
            noise_mean: 0.0,
            ..PerturbSpec::default()
        }];
        let rows = run_sweep(&cfg).unwrap();
        assert!(rows.iter().all(|r| (r.mentor_value_fraction - 1.0).abs() < 1e-12));
    }
}
