//! Demonstration trajectories and their sufficient statistics.

use crate::error::{Error, Result};
use crate::mdp::Dims;

/// One demonstration: `H + 1` `(state, action)` pairs.
pub type Trajectory = Vec<(usize, usize)>;

/// A set of demonstrations sharing one horizon and id ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryDataset {
    dims: Dims,
    trajectories: Vec<Trajectory>,
}

impl TrajectoryDataset {
    /// Validates lengths and id ranges against `dims`.
    pub fn new(dims: Dims, trajectories: Vec<Trajectory>) -> Result<Self> {
        for (index, traj) in trajectories.iter().enumerate() {
            check_trajectory(dims, index, traj)?;
        }
        Ok(TrajectoryDataset { dims, trajectories })
    }

    pub(crate) fn from_trusted(dims: Dims, trajectories: Vec<Trajectory>) -> Self {
        TrajectoryDataset { dims, trajectories }
    }

    pub fn empty(dims: Dims) -> Self {
        TrajectoryDataset {
            dims,
            trajectories: Vec::new(),
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// The first `n` trajectories (all of them if `n` exceeds the size).
    pub fn prefix(&self, n: usize) -> Self {
        TrajectoryDataset {
            dims: self.dims,
            trajectories: self.trajectories[..n.min(self.len())].to_vec(),
        }
    }
}

fn check_trajectory(dims: Dims, index: usize, traj: &[(usize, usize)]) -> Result<()> {
    if traj.len() != dims.epochs() {
        return Err(Error::Trajectory {
            index,
            msg: format!("has {} pairs, expected H + 1 = {}", traj.len(), dims.epochs()),
        });
    }
    for (t, &(s, a)) in traj.iter().enumerate() {
        if s >= dims.num_states || a >= dims.num_actions {
            return Err(Error::Trajectory {
                index,
                msg: format!("pair ({s}, {a}) at t={t} out of range"),
            });
        }
    }
    Ok(())
}

/// `K[t][s][a]`: how often action `a` was taken in state `s` at epoch `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTensor {
    dims: Dims,
    counts: Vec<u64>,
    num_trajectories: u64,
}

impl CountTensor {
    pub fn zeros(dims: Dims) -> Self {
        CountTensor {
            dims,
            counts: vec![0; dims.epochs() * dims.num_states * dims.num_actions],
            num_trajectories: 0,
        }
    }

    /// Builds a tensor from raw counts. Every epoch must carry the same total,
    /// which becomes the trajectory count.
    pub fn from_counts(dims: Dims, counts: Vec<u64>) -> Result<Self> {
        let per_epoch = dims.num_states * dims.num_actions;
        if counts.len() != dims.epochs() * per_epoch {
            return Err(Error::dim("count tensor length"));
        }
        let totals: Vec<u64> = counts.chunks(per_epoch).map(|c| c.iter().sum()).collect();
        let m = totals[0];
        if let Some(t) = totals.iter().position(|&x| x != m) {
            return Err(Error::dim(format!(
                "epoch {t} totals {} but epoch 0 totals {m}",
                totals[t]
            )));
        }
        Ok(CountTensor {
            dims,
            counts,
            num_trajectories: m,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn num_trajectories(&self) -> u64 {
        self.num_trajectories
    }

    #[inline]
    pub fn get(&self, t: usize, s: usize, a: usize) -> u64 {
        self.counts[self.offset(t, s) + a]
    }

    #[inline]
    pub fn row(&self, t: usize, s: usize) -> &[u64] {
        let o = self.offset(t, s);
        &self.counts[o..o + self.dims.num_actions]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.counts
    }

    #[inline]
    fn offset(&self, t: usize, s: usize) -> usize {
        (t * self.dims.num_states + s) * self.dims.num_actions
    }
}

/// Tallies `K[t][s][a]` over a dataset, checking ids against `dims`.
pub fn count_tensor(dataset: &TrajectoryDataset, dims: Dims) -> Result<CountTensor> {
    let mut tensor = CountTensor::zeros(dims);
    for (index, traj) in dataset.trajectories().iter().enumerate() {
        check_trajectory(dims, index, traj)?;
        for (t, &(s, a)) in traj.iter().enumerate() {
            let o = tensor.offset(t, s) + a;
            tensor.counts[o] += 1;
        }
    }
    tensor.num_trajectories = dataset.len() as u64;
    Ok(tensor)
}
