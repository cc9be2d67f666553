use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FiniteHorizonMdp, Policy};
use crate::dataset::TrajectoryDataset;
use crate::scalar::Scalar;

/// Draws `count` trajectories of `H + 1` state-action pairs.
///
/// A single ChaCha stream is consumed in trajectory order, so the first `k`
/// trajectories for a seed do not depend on `count`.
pub fn sample_trajectories<T: Scalar>(
    mdp: &FiniteHorizonMdp<T>,
    policy: &Policy<T>,
    count: usize,
    seed: u64,
) -> TrajectoryDataset {
    let dims = mdp.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trajectories = Vec::with_capacity(count);
    for _ in 0..count {
        let mut traj = Vec::with_capacity(dims.epochs());
        let mut s = draw(&mut rng, mdp.initial_dist().iter().copied().enumerate());
        for t in 0..=dims.horizon {
            let a = draw(&mut rng, policy.row(t, s).iter().copied().enumerate());
            traj.push((s, a));
            if t < dims.horizon {
                s = draw(&mut rng, mdp.transition_row(t, s, a).iter().copied());
            }
        }
        trajectories.push(traj);
    }
    TrajectoryDataset::from_trusted(dims, trajectories)
}

/// Inverse-CDF draw over `(outcome, probability)` pairs. Falls back to the
/// last outcome with positive mass if rounding leaves `u` past the total.
fn draw<T: Scalar>(rng: &mut ChaCha8Rng, items: impl Iterator<Item = (usize, T)>) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (id, p) in items {
        let p = p.as_f64();
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = id;
        if u < acc {
            return id;
        }
    }
    last
}
