//! Joint estimation of policy and dynamics when transitions are unknown.
//!
//! The transition probabilities are folded into the policy of an augmented
//! MDP over `S ∪ (S×A) ∪ {sink}` with actions `A ∪ S`. From an original state
//! `s`, action `a` moves deterministically to the pair state `(s, a)`; from
//! `(s, a)`, the "action" `s'` moves to `s'`. Any other combination falls into
//! an absorbing sink carrying a large negative reward. One original step
//! becomes two augmented steps, so the augmented horizon is `2H`.

use crate::dataset::TrajectoryDataset;
use crate::error::{Error, Result};
use crate::mdp::{Dims, Dynamics, FiniteHorizonMdp, Kernel, Policy};
use crate::scalar::Scalar;

/// What an augmented state id stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugState {
    Original(usize),
    Pair(usize, usize),
    Sink,
}

/// What an augmented action id stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugAction {
    Move(usize),
    Land(usize),
}

/// Id layout of the augmented space: original states first, then pairs in
/// `s * |A| + a` order, then the sink; actions `A` first, then `S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugmentedMaps {
    pub num_states: usize,
    pub num_actions: usize,
}

impl AugmentedMaps {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        AugmentedMaps {
            num_states,
            num_actions,
        }
    }

    pub fn num_aug_states(&self) -> usize {
        self.num_states + self.num_states * self.num_actions + 1
    }

    pub fn num_aug_actions(&self) -> usize {
        self.num_actions + self.num_states
    }

    pub fn original(&self, s: usize) -> usize {
        s
    }

    pub fn pair(&self, s: usize, a: usize) -> usize {
        self.num_states + s * self.num_actions + a
    }

    pub fn sink(&self) -> usize {
        self.num_states + self.num_states * self.num_actions
    }

    pub fn move_action(&self, a: usize) -> usize {
        a
    }

    pub fn land_action(&self, s: usize) -> usize {
        self.num_actions + s
    }

    pub fn decode_state(&self, id: usize) -> Option<AugState> {
        let pairs = self.num_states * self.num_actions;
        if id < self.num_states {
            Some(AugState::Original(id))
        } else if id < self.num_states + pairs {
            let k = id - self.num_states;
            Some(AugState::Pair(k / self.num_actions, k % self.num_actions))
        } else if id == self.sink() {
            Some(AugState::Sink)
        } else {
            None
        }
    }

    pub fn decode_action(&self, id: usize) -> Option<AugAction> {
        if id < self.num_actions {
            Some(AugAction::Move(id))
        } else if id < self.num_aug_actions() {
            Some(AugAction::Land(id - self.num_actions))
        } else {
            None
        }
    }

    /// Whether `(state, action)` leads somewhere other than the sink.
    pub fn compatible(&self, state: usize, action: usize) -> bool {
        matches!(
            (self.decode_state(state), self.decode_action(action)),
            (Some(AugState::Original(_)), Some(AugAction::Move(_)))
                | (Some(AugState::Pair(..)), Some(AugAction::Land(_)))
        )
    }

    pub fn aug_dims(&self, horizon: usize) -> Dims {
        Dims::new(self.num_aug_states(), self.num_aug_actions(), 2 * horizon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedMdp<T> {
    pub base: FiniteHorizonMdp<T>,
    pub maps: AugmentedMaps,
    pub sink_penalty: T,
    /// Horizon of the original problem.
    pub horizon: usize,
}

/// `10⁶ · max(1, max_s |R(s)|)`.
pub fn default_sink_penalty<T: Scalar>(rewards: &[T]) -> T {
    let m = rewards.iter().fold(T::one(), |acc, r| acc.max(r.abs()));
    T::lit(1e6) * m
}

/// Builds the deterministic augmented MDP. Pair states earn zero reward and
/// the sink earns `−sink_penalty` per epoch.
pub fn build_augmented_mdp<T: Scalar>(
    num_actions: usize,
    rewards: &[T],
    initial_dist: &[T],
    horizon: usize,
    sink_penalty: T,
) -> Result<AugmentedMdp<T>> {
    if !(sink_penalty > T::zero()) {
        return Err(Error::Config("sink penalty must be positive".into()));
    }
    let num_states = rewards.len();
    if initial_dist.len() != num_states {
        return Err(Error::dim("initial_dist length"));
    }
    if num_actions == 0 {
        return Err(Error::dim("need at least one action"));
    }
    let maps = AugmentedMaps::new(num_states, num_actions);
    let sink = maps.sink();
    let kernel = Kernel::from_fn(maps.num_aug_states(), maps.num_aug_actions(), |st, ac| {
        let next = match (maps.decode_state(st), maps.decode_action(ac)) {
            (Some(AugState::Original(s)), Some(AugAction::Move(a))) => maps.pair(s, a),
            (Some(AugState::Pair(..)), Some(AugAction::Land(s2))) => maps.original(s2),
            _ => sink,
        };
        vec![(next, T::one())]
    });
    let mut aug_rewards = vec![T::zero(); maps.num_aug_states()];
    aug_rewards[..num_states].copy_from_slice(rewards);
    aug_rewards[sink] = -sink_penalty;
    let mut p0 = vec![T::zero(); maps.num_aug_states()];
    p0[..num_states].copy_from_slice(initial_dist);
    let base = FiniteHorizonMdp::new(2 * horizon, aug_rewards, p0, Dynamics::Stationary(kernel))?;
    Ok(AugmentedMdp {
        base,
        maps,
        sink_penalty,
        horizon,
    })
}

/// Unrolls each `(s_t, a_t)` sequence into the `2H + 1` augmented pairs
/// `(s_0, a_0), ((s_0, a_0), s_1), (s_1, a_1), …, (s_H, a_H)`.
pub fn lift_dataset(dataset: &TrajectoryDataset, maps: &AugmentedMaps) -> Result<TrajectoryDataset> {
    let dims = dataset.dims();
    if dims.num_states != maps.num_states || dims.num_actions != maps.num_actions {
        return Err(Error::dim("dataset does not match the augmented maps"));
    }
    let lifted = dataset
        .trajectories()
        .iter()
        .map(|traj| {
            let mut out = Vec::with_capacity(2 * traj.len() - 1);
            for (t, &(s, a)) in traj.iter().enumerate() {
                out.push((maps.original(s), maps.move_action(a)));
                if let Some(&(next, _)) = traj.get(t + 1) {
                    out.push((maps.pair(s, a), maps.land_action(next)));
                }
            }
            out
        })
        .collect();
    TrajectoryDataset::new(maps.aug_dims(dims.horizon), lifted)
}

/// Policy and transition estimates read back from an augmented policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction<T> {
    pub policy: Policy<T>,
    /// `θ̂^t` for `t < H`, one kernel per epoch.
    pub transitions: Vec<Kernel<T>>,
    /// Largest probability placed on sink-leading actions before
    /// renormalization, over every extracted row.
    pub max_sink_mass: T,
}

impl<T: Scalar> Extraction<T> {
    /// The estimated transitions packaged as an MDP with the given rewards and
    /// initial distribution.
    pub fn to_mdp(&self, rewards: Vec<T>, initial_dist: Vec<T>) -> Result<FiniteHorizonMdp<T>> {
        let h = self.policy.dims().horizon;
        let dynamics = if h == 0 {
            let n = rewards.len();
            let a = self.policy.dims().num_actions;
            Dynamics::Stationary(Kernel::from_fn(n, a, |s, _| vec![(s, T::one())]))
        } else {
            Dynamics::TimeVarying(self.transitions.clone())
        };
        FiniteHorizonMdp::new(h, rewards, initial_dist, dynamics)
    }
}

/// `π^t` from original states at augmented epoch `2t`, `θ̂^t` from pair states
/// at `2t + 1`. Mass on sink-leading actions is dropped and rows are
/// renormalized (uniform if nothing is left).
pub fn extract_policy_and_transitions<T: Scalar>(
    aug_policy: &Policy<T>,
    maps: &AugmentedMaps,
) -> Result<Extraction<T>> {
    let adims = aug_policy.dims();
    if adims.num_states != maps.num_aug_states() || adims.num_actions != maps.num_aug_actions() {
        return Err(Error::dim("augmented policy does not match maps"));
    }
    if adims.horizon % 2 != 0 {
        return Err(Error::dim("augmented horizon must be even"));
    }
    let h = adims.horizon / 2;
    let n_s = maps.num_states;
    let n_a = maps.num_actions;
    let mut max_sink_mass = T::zero();

    let mut policy = Policy::uniform(Dims::new(n_s, n_a, h));
    for t in 0..=h {
        for s in 0..n_s {
            let row = aug_policy.row(2 * t, maps.original(s));
            let kept = &row[..n_a];
            let (probs, sink) = renormalize(kept, row);
            max_sink_mass = max_sink_mass.max(sink);
            policy.row_mut(t, s).copy_from_slice(&probs);
        }
    }

    let mut transitions = Vec::with_capacity(h);
    for t in 0..h {
        let mut rows = Vec::with_capacity(n_s * n_a);
        for s in 0..n_s {
            for a in 0..n_a {
                let row = aug_policy.row(2 * t + 1, maps.pair(s, a));
                let kept = &row[n_a..];
                let (probs, sink) = renormalize(kept, row);
                max_sink_mass = max_sink_mass.max(sink);
                rows.push(
                    probs
                        .into_iter()
                        .enumerate()
                        .filter(|&(_, p)| p > T::zero())
                        .collect(),
                );
            }
        }
        transitions.push(Kernel::from_rows(n_s, n_a, rows)?);
    }

    Ok(Extraction {
        policy,
        transitions,
        max_sink_mass,
    })
}

fn renormalize<T: Scalar>(kept: &[T], full: &[T]) -> (Vec<T>, T) {
    let kept_mass: T = kept.iter().copied().sum();
    let full_mass: T = full.iter().copied().sum();
    let sink = (full_mass - kept_mass).max(T::zero());
    if kept_mass > T::zero() {
        (kept.iter().map(|&p| p / kept_mass).collect(), sink)
    } else {
        let u = T::one() / T::lit(kept.len() as f64);
        (vec![u; kept.len()], sink)
    }
}

/// Probability that `aug_policy` assigns to sink-leading actions at `(t, state)`.
pub fn sink_action_mass<T: Scalar>(aug_policy: &Policy<T>, maps: &AugmentedMaps, t: usize, state: usize) -> T {
    aug_policy
        .row(t, state)
        .iter()
        .enumerate()
        .filter(|&(a, _)| !maps.compatible(state, a))
        .fold(T::zero(), |acc, (_, &p)| acc + p)
}
