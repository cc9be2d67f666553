//! Gridworld mazes with slippery moves, reward obstacles and twin actions,
//! plus mentor construction and the RMS evaluation metric.

use rand::seq::index;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::mdp::{optimal_policy, Dynamics, FiniteHorizonMdp, Kernel, Policy, SparseRow, TieBreak};
use crate::scalar::Scalar;

/// Compass moves in action order; twins repeat the same order.
pub const DIRECTIONS: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

#[derive(Debug, Clone, PartialEq)]
pub struct MazeSpec {
    pub grid_side: usize,
    pub slip_prob: f64,
    pub obstacle_density: f64,
    /// Goal reward `G`.
    pub goal_reward: f64,
    /// Obstacle magnitudes are drawn uniformly from this range; `None` means
    /// `[G/3, G]`.
    pub obstacle_magnitude_range: Option<(f64, f64)>,
    pub horizon: usize,
    pub twin_actions: bool,
    pub seed: u64,
}

impl Default for MazeSpec {
    fn default() -> Self {
        MazeSpec {
            grid_side: 30,
            slip_prob: 0.30,
            obstacle_density: 0.15,
            goal_reward: 100.0,
            obstacle_magnitude_range: None,
            horizon: 90,
            twin_actions: true,
            seed: 0,
        }
    }
}

impl MazeSpec {
    /// The reduced-scale profile: 10×10 grid, horizon 30.
    pub fn desk() -> Self {
        MazeSpec {
            grid_side: 10,
            horizon: 30,
            ..Default::default()
        }
    }

    pub fn magnitude_range(&self) -> (f64, f64) {
        self.obstacle_magnitude_range
            .unwrap_or((self.goal_reward / 3.0, self.goal_reward))
    }

    pub fn num_actions(&self) -> usize {
        if self.twin_actions { 8 } else { 4 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("maze: {m}")));
        if self.grid_side < 2 {
            return bad("grid_side must be at least 2");
        }
        if !(0.0..1.0).contains(&self.slip_prob) {
            return bad("slip_prob must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.obstacle_density) {
            return bad("obstacle_density must lie in [0, 1)");
        }
        if !(self.goal_reward > 0.0) {
            return bad("goal_reward must be positive");
        }
        let (lo, hi) = self.magnitude_range();
        if !(lo >= 0.0 && lo <= hi) {
            return bad("obstacle magnitude range must satisfy 0 <= lo <= hi");
        }
        if self.horizon == 0 {
            return bad("horizon must be positive");
        }
        Ok(())
    }
}

/// A generated maze: its MDP plus the layout needed to draw it.
#[derive(Debug, Clone, PartialEq)]
pub struct Maze<T> {
    pub mdp: FiniteHorizonMdp<T>,
    pub side: usize,
    pub start: usize,
    pub goal: usize,
    /// Obstacle cells, ascending.
    pub obstacles: Vec<usize>,
}

impl<T: Scalar> Maze<T> {
    /// ASCII layout, one row per line: `S` start, `G` goal, `#` obstacle.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.side * (self.side + 1));
        for r in 0..self.side {
            for c in 0..self.side {
                let id = r * self.side + c;
                let ch = if id == self.start {
                    'S'
                } else if id == self.goal {
                    'G'
                } else if self.obstacles.binary_search(&id).is_ok() {
                    '#'
                } else {
                    '.'
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}

fn neighbours(side: usize, cell: usize) -> Vec<usize> {
    DIRECTIONS
        .iter()
        .filter_map(|&d| step(side, cell, d))
        .collect()
}

fn step(side: usize, cell: usize, (dr, dc): (isize, isize)) -> Option<usize> {
    let r = (cell / side) as isize + dr;
    let c = (cell % side) as isize + dc;
    if r < 0 || c < 0 || r >= side as isize || c >= side as isize {
        None
    } else {
        Some(r as usize * side + c as usize)
    }
}

fn move_row<T: Scalar>(side: usize, cell: usize, dir: usize, slip: f64) -> SparseRow<T> {
    let target = step(side, cell, DIRECTIONS[dir]).unwrap_or(cell);
    let mut row: Vec<(usize, f64)> = vec![(target, 1.0 - slip)];
    if slip > 0.0 {
        let nbrs = neighbours(side, cell);
        let share = slip / nbrs.len() as f64;
        row.extend(nbrs.into_iter().map(|n| (n, share)));
    }
    row.sort_by_key(|&(n, _)| n);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for (n, p) in row {
        match merged.last_mut() {
            Some((m, q)) if *m == n => *q += p,
            _ => merged.push((n, p)),
        }
    }
    merged.into_iter().map(|(n, p)| (n, T::lit(p))).collect()
}

/// Builds a maze MDP: start in the top-left corner, absorbing goal in the
/// bottom-right, obstacles with negative reward scattered over the other
/// cells. A move reaches its target with probability `1 − slip` and
/// otherwise lands on a uniformly chosen in-grid neighbour; moves off the
/// grid stay put. Transitions are the same at every epoch.
pub fn generate_maze<T: Scalar>(spec: &MazeSpec) -> Result<Maze<T>> {
    spec.validate()?;
    let side = spec.grid_side;
    let n = side * side;
    let start = 0;
    let goal = n - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let free = n - 2;
    let count = ((spec.obstacle_density * free as f64).round() as usize).min(free);
    let mut obstacles: Vec<usize> = index::sample(&mut rng, free, count)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    obstacles.sort_unstable();

    let (lo, hi) = spec.magnitude_range();
    let mut rewards = vec![T::zero(); n];
    rewards[goal] = T::lit(spec.goal_reward);
    for &cell in &obstacles {
        let mag = if hi > lo { rng.random_range(lo..hi) } else { lo };
        rewards[cell] = T::lit(-mag);
    }

    let n_actions = spec.num_actions();
    let kernel = Kernel::from_fn(n, n_actions, |s, a| {
        if s == goal {
            vec![(goal, T::one())]
        } else {
            move_row(side, s, a % 4, spec.slip_prob)
        }
    });
    let mut p0 = vec![T::zero(); n];
    p0[start] = T::one();
    let mdp = FiniteHorizonMdp::new(spec.horizon, rewards, p0, Dynamics::Stationary(kernel))?;
    Ok(Maze {
        mdp,
        side,
        start,
        goal,
        obstacles,
    })
}

/// The modeling MDP an apprentice sees: every negative (obstacle) reward is
/// zeroed, everything else is kept.
pub fn blind_maze<T: Scalar>(mdp: &FiniteHorizonMdp<T>) -> FiniteHorizonMdp<T> {
    let rewards = mdp.rewards().iter().map(|&r| r.max(T::zero())).collect();
    mdp.with_rewards(rewards).expect("same length")
}

/// Deterministic optimal policy whose ties (always present with twin
/// actions) are broken uniformly at random per `(t, s)`.
pub fn mentor_policy<T: Scalar>(mdp: &FiniteHorizonMdp<T>, gamma: T, twin_seed: u64) -> Policy<T> {
    optimal_policy(mdp, gamma, TieBreak::Random { seed: twin_seed }).0
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbSpec {
    /// Fraction of states whose modal action is swapped.
    pub delta: f64,
    /// Variance of the additive Gaussian noise.
    pub sigma2: f64,
    pub noise_mean: f64,
    pub seed: u64,
}

impl Default for PerturbSpec {
    fn default() -> Self {
        PerturbSpec {
            delta: 0.0,
            sigma2: 0.0,
            noise_mean: 0.5,
            seed: 0,
        }
    }
}

/// Degrades a policy: in `⌊δ |S|⌋` random states the modal action trades
/// mass with a random other action at every epoch, then `N(mean, σ²)` noise
/// is added to every probability, clamped at zero and renormalized.
///
/// Returns the policy and the number of rows that clamped to all-zero and
/// were reset to uniform.
pub fn perturb_policy<T: Scalar>(policy: &Policy<T>, spec: &PerturbSpec) -> Result<(Policy<T>, usize)> {
    if !(0.0..=1.0).contains(&spec.delta) || !(spec.sigma2 >= 0.0) {
        return Err(Error::Config("perturb: delta in [0, 1], sigma2 >= 0".into()));
    }
    let dims = policy.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = policy.clone();

    let swaps = (spec.delta * dims.num_states as f64).floor() as usize;
    let chosen = index::sample(&mut rng, dims.num_states, swaps.min(dims.num_states));
    if dims.num_actions > 1 {
        for s in chosen {
            for t in 0..dims.epochs() {
                let modal = out.modal_action(t, s);
                let mut other = rng.random_range(0..dims.num_actions - 1);
                if other >= modal {
                    other += 1;
                }
                out.row_mut(t, s).swap(modal, other);
            }
        }
    }

    let mut reset = 0;
    if spec.sigma2 > 0.0 || spec.noise_mean != 0.0 {
        let noise = Normal::new(spec.noise_mean, spec.sigma2.sqrt())
            .map_err(|e| Error::Config(format!("perturb noise: {e}")))?;
        for t in 0..dims.epochs() {
            for s in 0..dims.num_states {
                let row = out.row_mut(t, s);
                for p in row.iter_mut() {
                    let x = p.as_f64() + noise.sample(&mut rng);
                    *p = T::lit(x.max(0.0));
                }
                let total: T = row.iter().copied().sum();
                if total > T::zero() {
                    row.iter_mut().for_each(|p| *p /= total);
                } else {
                    let u = T::one() / T::lit(row.len() as f64);
                    row.iter_mut().for_each(|p| *p = u);
                    reset += 1;
                }
            }
        }
    }
    Ok((out, reset))
}

/// Root-mean-square difference over every `(t, s, a)` entry.
pub fn rms_error<T: Scalar>(estimate: &Policy<T>, truth: &Policy<T>) -> Result<T> {
    truth.dims().check_same(&estimate.dims(), "estimate")?;
    let a = estimate.as_slice();
    let b = truth.as_slice();
    let sq = a
        .iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y));
    Ok((sq / T::lit(a.len() as f64)).sqrt())
}
