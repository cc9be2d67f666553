use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dims, FiniteHorizonMdp, OccupancyTable, Policy, ValueTable};
use crate::error::Result;
use crate::scalar::Scalar;

/// How `optimal_policy` resolves actions whose values tie within `1e-9`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieBreak {
    #[default]
    LowestIndex,
    /// Uniform choice among tied actions, one draw per `(t, s)`.
    Random { seed: u64 },
}

/// Evaluates `π` by backward recursion. Returns `Σ_s p⁰_s V⁰_s` and the table.
pub fn policy_value<T: Scalar>(
    mdp: &FiniteHorizonMdp<T>,
    policy: &Policy<T>,
    gamma: T,
) -> Result<(T, ValueTable<T>)> {
    mdp.dims().check_same(&policy.dims(), "policy")?;
    let mut table = ValueTable::terminal(mdp.rewards(), mdp.horizon());
    for t in (0..mdp.horizon()).rev() {
        backup_epoch(mdp, policy, gamma, t, &mut table);
    }
    let scalar = dot(mdp.initial_dist(), table.row(0));
    Ok((scalar, table))
}

/// `V[t] ← R + γ Σ_a π[t] θ[t] V[t+1]` for a single epoch `t < H`.
pub(crate) fn backup_epoch<T: Scalar>(
    mdp: &FiniteHorizonMdp<T>,
    policy: &Policy<T>,
    gamma: T,
    t: usize,
    table: &mut ValueTable<T>,
) {
    let n = mdp.num_states();
    let kernel = mdp.kernel(t);
    let (head, tail) = table.values.split_at_mut((t + 1) * n);
    let next = &tail[..n];
    let cur = &mut head[t * n..];
    for s in 0..n {
        let mut acc = T::zero();
        for (a, &p) in policy.row(t, s).iter().enumerate() {
            if p != T::zero() {
                acc += p * kernel.expect(s, a, next);
            }
        }
        cur[s] = mdp.rewards()[s] + gamma * acc;
    }
}

/// Pushes a state distribution one epoch forward under `π[t]`:
/// `out[s'] = scale · Σ_{s,a} d[s] π[t][s][a] θ[t](s'|s,a)`.
pub(crate) fn propagate<T: Scalar>(
    mdp: &FiniteHorizonMdp<T>,
    policy: &Policy<T>,
    t: usize,
    dist: &[T],
    scale: T,
    out: &mut [T],
) {
    out.iter_mut().for_each(|x| *x = T::zero());
    let kernel = mdp.kernel(t);
    for (s, &d) in dist.iter().enumerate() {
        if d == T::zero() {
            continue;
        }
        for (a, &p) in policy.row(t, s).iter().enumerate() {
            let w = d * p;
            if w == T::zero() {
                continue;
            }
            for &(next, q) in kernel.row(s, a) {
                out[next] += w * q;
            }
        }
    }
    if scale != T::one() {
        out.iter_mut().for_each(|x| *x *= scale);
    }
}

/// Forward recursion for `Pr[s_t = s | π]`, starting from `p⁰`.
pub fn occupancy_probabilities<T: Scalar>(
    mdp: &FiniteHorizonMdp<T>,
    policy: &Policy<T>,
) -> Result<OccupancyTable<T>> {
    mdp.dims().check_same(&policy.dims(), "policy")?;
    let n = mdp.num_states();
    let h = mdp.horizon();
    let mut occ = vec![T::zero(); (h + 1) * n];
    occ[..n].copy_from_slice(mdp.initial_dist());
    for t in 0..h {
        let (head, tail) = occ.split_at_mut((t + 1) * n);
        propagate(mdp, policy, t, &head[t * n..], T::one(), &mut tail[..n]);
    }
    Ok(OccupancyTable {
        num_states: n,
        horizon: h,
        occ,
    })
}

/// `Q[a] = R(s) + γ Σ_{s'} θ[t](s'|s,a) V[t+1][s']` for `t < H`.
pub fn action_values<T: Scalar>(
    mdp: &FiniteHorizonMdp<T>,
    values: &ValueTable<T>,
    gamma: T,
    t: usize,
    s: usize,
) -> Vec<T> {
    let next = values.row(t + 1);
    let kernel = mdp.kernel(t);
    (0..mdp.num_actions())
        .map(|a| mdp.rewards()[s] + gamma * kernel.expect(s, a, next))
        .collect()
}

/// Finite-horizon backward induction. The returned policy is deterministic;
/// the final epoch (no transitions) takes action 0 or a random action,
/// according to `tie_break`, since every action is optimal there.
pub fn optimal_policy<T: Scalar>(
    mdp: &FiniteHorizonMdp<T>,
    gamma: T,
    tie_break: TieBreak,
) -> (Policy<T>, ValueTable<T>) {
    let dims = mdp.dims();
    let tol = T::tol(1e-9);
    let mut rng = match tie_break {
        TieBreak::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        TieBreak::LowestIndex => None,
    };
    let mut choice = vec![0usize; dims.epochs() * dims.num_states];
    let mut table = ValueTable::terminal(mdp.rewards(), mdp.horizon());
    let mut ties = Vec::with_capacity(dims.num_actions);

    let mut pick = |ties: &[usize]| -> usize {
        match rng.as_mut() {
            Some(r) if ties.len() > 1 => ties[r.random_range(0..ties.len())],
            _ => ties[0],
        }
    };

    for s in 0..dims.num_states {
        ties.clear();
        ties.extend(0..dims.num_actions);
        choice[dims.horizon * dims.num_states + s] = pick(&ties);
    }
    for t in (0..dims.horizon).rev() {
        for s in 0..dims.num_states {
            let q = action_values(mdp, &table, gamma, t, s);
            let best = q.iter().copied().fold(T::neg_infinity(), T::max);
            ties.clear();
            ties.extend((0..q.len()).filter(|&a| best - q[a] <= tol));
            choice[t * dims.num_states + s] = pick(&ties);
            table.row_mut(t)[s] = best;
        }
    }
    let policy = Policy::deterministic(dims, |t, s| choice[t * dims.num_states + s]);
    (policy, table)
}

/// Per `(t, s)`, the actions whose value is within `tol` of the best under
/// the optimal value table. Every action is optimal at `t = H`.
pub fn optimal_action_sets<T: Scalar>(
    mdp: &FiniteHorizonMdp<T>,
    gamma: T,
    tol: T,
) -> Vec<Vec<usize>> {
    let Dims {
        num_states,
        num_actions,
        horizon,
    } = mdp.dims();
    let (_, table) = optimal_policy(mdp, gamma, TieBreak::LowestIndex);
    let mut sets = Vec::with_capacity((horizon + 1) * num_states);
    for t in 0..horizon {
        for s in 0..num_states {
            let q = action_values(mdp, &table, gamma, t, s);
            let best = q.iter().copied().fold(T::neg_infinity(), T::max);
            sets.push((0..num_actions).filter(|&a| best - q[a] <= tol).collect());
        }
    }
    for _ in 0..num_states {
        sets.push((0..num_actions).collect());
    }
    sets
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{Dynamics, Kernel};

    fn chain() -> FiniteHorizonMdp<f64> {
        // s0 -> s1 deterministically; s1 absorbing.
        let k = Kernel::from_rows(2, 1, vec![vec![(1, 1.0)], vec![(1, 1.0)]]).unwrap();
        FiniteHorizonMdp::new(1, vec![0.0, 5.0], vec![1.0, 0.0], Dynamics::Stationary(k)).unwrap()
    }

    #[test]
    fn unit_reward_single_state() {
        let k = Kernel::from_rows(1, 2, vec![vec![(0, 1.0)], vec![(0, 1.0)]]).unwrap();
        let mdp = FiniteHorizonMdp::new(2, vec![1.0], vec![1.0], Dynamics::Stationary(k)).unwrap();
        let pi = Policy::from_fn(mdp.dims(), |t, _, a| if (t + a) % 2 == 0 { 0.3 } else { 0.7 });
        let (v, table) = policy_value(&mdp, &pi, 1.0).unwrap();
        assert_eq!(v, 3.0);
        assert_eq!(table.row(2), &[1.0]);
    }

    #[test]
    fn deterministic_chain_value() {
        let mdp = chain();
        let pi = Policy::uniform(mdp.dims());
        assert_eq!(policy_value(&mdp, &pi, 1.0).unwrap().0, 5.0);
    }

    #[test]
    fn occupancy_follows_unique_path() {
        let mdp = chain();
        let occ = occupancy_probabilities(&mdp, &Policy::uniform(mdp.dims())).unwrap();
        assert_eq!(occ.row(0), &[1.0, 0.0]);
        assert_eq!(occ.row(1), &[0.0, 1.0]);
    }

    #[test]
    fn symmetric_mixing_keeps_uniform() {
        let k = Kernel::from_rows(2, 1, vec![vec![(0, 0.5), (1, 0.5)], vec![(0, 0.5), (1, 0.5)]])
            .unwrap();
        let mdp = FiniteHorizonMdp::new(4, vec![0.0, 1.0], vec![0.5, 0.5], Dynamics::Stationary(k))
            .unwrap();
        let occ = occupancy_probabilities(&mdp, &Policy::uniform(mdp.dims())).unwrap();
        for t in 0..=4 {
            assert_eq!(occ.row(t), &[0.5, 0.5]);
        }
    }

    #[test]
    fn optimal_prefers_rewarding_action() {
        // a0 -> s0 (R=0), a1 -> s1 (R=5).
        let k = Kernel::from_rows(
            2,
            2,
            vec![vec![(0, 1.0)], vec![(1, 1.0)], vec![(1, 1.0)], vec![(1, 1.0)]],
        )
        .unwrap();
        let mdp = FiniteHorizonMdp::new(1, vec![0.0, 5.0], vec![1.0, 0.0], Dynamics::Stationary(k))
            .unwrap();
        let (pi, table) = optimal_policy(&mdp, 1.0, TieBreak::LowestIndex);
        assert_eq!(pi.row(0, 0), &[0.0, 1.0]);
        assert_eq!(table.get(0, 0), 5.0);
        // s1 ties at t = 0; lowest index wins.
        assert_eq!(pi.row(0, 1), &[1.0, 0.0]);
        let sets = optimal_action_sets(&mdp, 1.0, 1e-9);
        assert_eq!(sets[0], vec![1]);
        assert_eq!(sets[1], vec![0, 1]);
    }

    #[test]
    fn single_action_optimum_is_its_value() {
        let mdp = chain();
        let (pi, table) = optimal_policy(&mdp, 1.0, TieBreak::Random { seed: 3 });
        let (v, _) = policy_value(&mdp, &pi, 1.0).unwrap();
        assert_eq!(v, table.get(0, 0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mdp = chain();
        let pi = Policy::<f64>::uniform(Dims::new(2, 2, 1));
        assert!(policy_value(&mdp, &pi, 1.0).is_err());
        assert!(occupancy_probabilities(&mdp, &pi).is_err());
    }
}
