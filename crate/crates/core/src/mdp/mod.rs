//! Finite-horizon tabular MDPs and the dynamic-programming primitives built
//! on them.
//!
//! Decision epochs run `t = 0..=H`. Transitions exist for `t = 0..H`; the
//! last epoch only collects reward. Rewards depend on the state alone.

pub(crate) mod dp;
mod sample;

pub use dp::{
    action_values, occupancy_probabilities, optimal_action_sets, optimal_policy, policy_value,
    TieBreak,
};
pub use sample::sample_trajectories;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sizes shared by MDPs, policies and count tensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
}

impl Dims {
    pub fn new(num_states: usize, num_actions: usize, horizon: usize) -> Self {
        Dims {
            num_states,
            num_actions,
            horizon,
        }
    }

    /// Number of decision epochs, `H + 1`.
    pub fn epochs(&self) -> usize {
        self.horizon + 1
    }

    pub(crate) fn check_same(&self, other: &Dims, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::dim(format!(
                "{what}: expected {}x{}x{}, got {}x{}x{} (states x actions x horizon)",
                self.num_states,
                self.num_actions,
                self.horizon,
                other.num_states,
                other.num_actions,
                other.horizon
            )));
        }
        Ok(())
    }
}

/// One sparse next-state distribution: `(next state, probability)` pairs.
pub type SparseRow<T> = Vec<(usize, T)>;

/// Transition kernel for a single epoch, one sparse row per `(s, a)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel<T> {
    num_states: usize,
    num_actions: usize,
    rows: Vec<SparseRow<T>>,
}

impl<T: Scalar> Kernel<T> {
    /// Builds a kernel from `rows[s * num_actions + a]`.
    pub fn from_rows(num_states: usize, num_actions: usize, rows: Vec<SparseRow<T>>) -> Result<Self> {
        if rows.len() != num_states * num_actions {
            return Err(Error::dim(format!(
                "kernel needs {} rows, got {}",
                num_states * num_actions,
                rows.len()
            )));
        }
        Ok(Kernel {
            num_states,
            num_actions,
            rows,
        })
    }

    /// Builds a kernel by calling `f(s, a)` for every pair.
    pub fn from_fn(
        num_states: usize,
        num_actions: usize,
        mut f: impl FnMut(usize, usize) -> SparseRow<T>,
    ) -> Self {
        let mut rows = Vec::with_capacity(num_states * num_actions);
        for s in 0..num_states {
            for a in 0..num_actions {
                rows.push(f(s, a));
            }
        }
        Kernel {
            num_states,
            num_actions,
            rows,
        }
    }

    #[inline]
    pub fn row(&self, s: usize, a: usize) -> &[(usize, T)] {
        &self.rows[s * self.num_actions + a]
    }

    /// `Σ_{s'} θ(s' | s, a) · v[s']`.
    #[inline]
    pub fn expect(&self, s: usize, a: usize, v: &[T]) -> T {
        self.row(s, a)
            .iter()
            .fold(T::zero(), |acc, &(next, p)| acc + p * v[next])
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// Time-indexed transition model. A stationary environment stores one kernel
/// and serves it for every epoch.
#[derive(Debug, Clone, PartialEq)]
pub enum Dynamics<T> {
    Stationary(Kernel<T>),
    TimeVarying(Vec<Kernel<T>>),
}

impl<T: Scalar> Dynamics<T> {
    #[inline]
    pub fn kernel(&self, t: usize) -> &Kernel<T> {
        match self {
            Dynamics::Stationary(k) => k,
            Dynamics::TimeVarying(ks) => &ks[t],
        }
    }
}

/// A finite-horizon MDP with state rewards `R(s)`, initial distribution `p⁰`
/// and sparse time-indexed transitions `θᵗ(s' | s, a)` for `t < H`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteHorizonMdp<T> {
    dims: Dims,
    rewards: Vec<T>,
    initial_dist: Vec<T>,
    dynamics: Dynamics<T>,
}

impl<T: Scalar> FiniteHorizonMdp<T> {
    /// Assembles and validates an MDP.
    pub fn new(
        horizon: usize,
        rewards: Vec<T>,
        initial_dist: Vec<T>,
        dynamics: Dynamics<T>,
    ) -> Result<Self> {
        let mdp = Self::from_parts(horizon, rewards, initial_dist, dynamics)?;
        mdp.validate()?;
        Ok(mdp)
    }

    /// Assembles an MDP checking only shapes; probability invariants are left
    /// to [`FiniteHorizonMdp::validate`].
    pub fn from_parts(
        horizon: usize,
        rewards: Vec<T>,
        initial_dist: Vec<T>,
        dynamics: Dynamics<T>,
    ) -> Result<Self> {
        let num_states = rewards.len();
        if num_states == 0 {
            return Err(Error::dim("MDP needs at least one state"));
        }
        if initial_dist.len() != num_states {
            return Err(Error::dim(format!(
                "initial_dist has {} entries for {} states",
                initial_dist.len(),
                num_states
            )));
        }
        let kernels: Vec<&Kernel<T>> = match &dynamics {
            Dynamics::Stationary(k) => vec![k],
            Dynamics::TimeVarying(ks) => {
                if ks.len() != horizon {
                    return Err(Error::dim(format!(
                        "expected {} transition epochs, got {}",
                        horizon,
                        ks.len()
                    )));
                }
                ks.iter().collect()
            }
        };
        let num_actions = kernels
            .first()
            .map(|k| k.num_actions)
            .unwrap_or_else(|| match &dynamics {
                Dynamics::Stationary(k) => k.num_actions,
                Dynamics::TimeVarying(_) => 0,
            });
        if num_actions == 0 {
            return Err(Error::dim(
                "MDP needs at least one action (time-varying MDPs with H = 0 must use a stationary kernel)",
            ));
        }
        for k in kernels {
            if k.num_states != num_states || k.num_actions != num_actions {
                return Err(Error::dim(format!(
                    "kernel is {}x{}, MDP is {}x{}",
                    k.num_states, k.num_actions, num_states, num_actions
                )));
            }
        }
        Ok(FiniteHorizonMdp {
            dims: Dims::new(num_states, num_actions, horizon),
            rewards,
            initial_dist,
            dynamics,
        })
    }

    /// Checks the probability invariants, reporting the first violation.
    pub fn validate(&self) -> Result<()> {
        let tol = T::tol(1e-12);
        let mut sum = T::zero();
        for (s, &p) in self.initial_dist.iter().enumerate() {
            if !(p >= T::zero()) {
                return Err(Error::InitialDist(format!("entry {s} is {p} (must be >= 0)")));
            }
            sum += p;
        }
        if (sum - T::one()).abs() > tol {
            return Err(Error::InitialDist(format!("sums to {sum}, expected 1")));
        }
        if self.rewards.iter().any(|r| !r.is_finite()) {
            return Err(Error::dim("rewards must be finite"));
        }
        let epochs = match &self.dynamics {
            Dynamics::Stationary(_) => self.dims.horizon.min(1),
            Dynamics::TimeVarying(ks) => ks.len(),
        };
        for t in 0..epochs {
            let kernel = self.dynamics.kernel(t);
            for s in 0..self.dims.num_states {
                for a in 0..self.dims.num_actions {
                    let mut sum = T::zero();
                    for &(next, p) in kernel.row(s, a) {
                        let bad = |msg: String| Error::TransitionRow { t, s, a, msg };
                        if next >= self.dims.num_states {
                            return Err(bad(format!("next state {next} out of range")));
                        }
                        if !(p >= T::zero()) {
                            return Err(bad(format!("probability {p} for next state {next}")));
                        }
                        sum += p;
                    }
                    if (sum - T::one()).abs() > tol {
                        return Err(Error::TransitionRow {
                            t,
                            s,
                            a,
                            msg: format!("sums to {sum}, expected 1"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn num_states(&self) -> usize {
        self.dims.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.dims.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.dims.horizon
    }

    pub fn rewards(&self) -> &[T] {
        &self.rewards
    }

    pub fn initial_dist(&self) -> &[T] {
        &self.initial_dist
    }

    pub fn dynamics(&self) -> &Dynamics<T> {
        &self.dynamics
    }

    /// Transition kernel used between epochs `t` and `t + 1`.
    #[inline]
    pub fn kernel(&self, t: usize) -> &Kernel<T> {
        debug_assert!(t < self.dims.horizon);
        self.dynamics.kernel(t)
    }

    #[inline]
    pub fn transition_row(&self, t: usize, s: usize, a: usize) -> &[(usize, T)] {
        self.kernel(t).row(s, a)
    }

    /// Same dynamics and initial distribution, different rewards.
    pub fn with_rewards(&self, rewards: Vec<T>) -> Result<Self> {
        if rewards.len() != self.dims.num_states {
            return Err(Error::dim("reward vector length"));
        }
        Ok(FiniteHorizonMdp {
            rewards,
            ..self.clone()
        })
    }
}

/// Free-function form of [`FiniteHorizonMdp::validate`].
pub fn validate_mdp<T: Scalar>(mdp: &FiniteHorizonMdp<T>) -> Result<()> {
    mdp.validate()
}

/// Time-indexed stochastic policy `π[t][s][a]`, `t = 0..=H`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy<T> {
    dims: Dims,
    probs: Vec<T>,
}

impl<T: Scalar> Policy<T> {
    pub fn uniform(dims: Dims) -> Self {
        let p = T::one() / T::lit(dims.num_actions as f64);
        Policy {
            dims,
            probs: vec![p; dims.epochs() * dims.num_states * dims.num_actions],
        }
    }

    /// Builds a policy from `f(t, s, a)`. Rows are not validated.
    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut probs = Vec::with_capacity(dims.epochs() * dims.num_states * dims.num_actions);
        for t in 0..dims.epochs() {
            for s in 0..dims.num_states {
                for a in 0..dims.num_actions {
                    probs.push(f(t, s, a));
                }
            }
        }
        Policy { dims, probs }
    }

    /// Deterministic policy taking `choice(t, s)` everywhere.
    pub fn deterministic(dims: Dims, mut choice: impl FnMut(usize, usize) -> usize) -> Self {
        let mut policy = Policy {
            dims,
            probs: vec![T::zero(); dims.epochs() * dims.num_states * dims.num_actions],
        };
        for t in 0..dims.epochs() {
            for s in 0..dims.num_states {
                let a = choice(t, s);
                policy.row_mut(t, s)[a] = T::one();
            }
        }
        policy
    }

    pub fn from_vec(dims: Dims, probs: Vec<T>) -> Result<Self> {
        if probs.len() != dims.epochs() * dims.num_states * dims.num_actions {
            return Err(Error::dim("policy tensor length"));
        }
        Ok(Policy { dims, probs })
    }

    /// Checks that every row is a probability vector (sum within `1e-9`).
    pub fn validate(&self) -> Result<()> {
        let tol = T::tol(1e-9);
        for t in 0..self.dims.epochs() {
            for s in 0..self.dims.num_states {
                let row = self.row(t, s);
                if let Some(p) = row.iter().find(|p| !(**p >= T::zero())) {
                    return Err(Error::PolicyRow {
                        t,
                        s,
                        msg: format!("negative or NaN entry {p}"),
                    });
                }
                let sum: T = row.iter().copied().sum();
                if (sum - T::one()).abs() > tol {
                    return Err(Error::PolicyRow {
                        t,
                        s,
                        msg: format!("sums to {sum}"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    fn offset(&self, t: usize, s: usize) -> usize {
        (t * self.dims.num_states + s) * self.dims.num_actions
    }

    #[inline]
    pub fn get(&self, t: usize, s: usize, a: usize) -> T {
        self.probs[self.offset(t, s) + a]
    }

    #[inline]
    pub fn row(&self, t: usize, s: usize) -> &[T] {
        let o = self.offset(t, s);
        &self.probs[o..o + self.dims.num_actions]
    }

    #[inline]
    pub fn row_mut(&mut self, t: usize, s: usize) -> &mut [T] {
        let o = self.offset(t, s);
        let n = self.dims.num_actions;
        &mut self.probs[o..o + n]
    }

    /// All rows of epoch `t`, flattened `[s][a]`.
    pub fn slice(&self, t: usize) -> &[T] {
        let o = self.offset(t, 0);
        &self.probs[o..o + self.dims.num_states * self.dims.num_actions]
    }

    pub fn slice_mut(&mut self, t: usize) -> &mut [T] {
        let o = self.offset(t, 0);
        let n = self.dims.num_states * self.dims.num_actions;
        &mut self.probs[o..o + n]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.probs
    }

    /// Index of the largest entry of row `(t, s)`, lowest index on ties.
    pub fn modal_action(&self, t: usize, s: usize) -> usize {
        argmax(self.row(t, s))
    }
}

/// Position of the maximum, lowest index on ties.
pub(crate) fn argmax<T: Scalar>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Per-epoch state values `V[t][s]`, with `V[H] = R`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable<T> {
    num_states: usize,
    horizon: usize,
    values: Vec<T>,
}

impl<T: Scalar> ValueTable<T> {
    /// Table with the terminal boundary `V[H] = R` set and zeros elsewhere.
    pub fn terminal(rewards: &[T], horizon: usize) -> Self {
        let n = rewards.len();
        let mut values = vec![T::zero(); (horizon + 1) * n];
        values[horizon * n..].copy_from_slice(rewards);
        ValueTable {
            num_states: n,
            horizon,
            values,
        }
    }

    #[inline]
    pub fn get(&self, t: usize, s: usize) -> T {
        self.values[t * self.num_states + s]
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[T] {
        &self.values[t * self.num_states..(t + 1) * self.num_states]
    }

    #[inline]
    pub fn row_mut(&mut self, t: usize) -> &mut [T] {
        let n = self.num_states;
        &mut self.values[t * n..(t + 1) * n]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }
}

/// State occupancy probabilities `Pr[s_t = s | π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyTable<T> {
    num_states: usize,
    horizon: usize,
    occ: Vec<T>,
}

impl<T: Scalar> OccupancyTable<T> {
    #[inline]
    pub fn get(&self, t: usize, s: usize) -> T {
        self.occ[t * self.num_states + s]
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[T] {
        &self.occ[t * self.num_states..(t + 1) * self.num_states]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_state() -> FiniteHorizonMdp<f64> {
        let k = Kernel::from_rows(1, 1, vec![vec![(0, 1.0)]]).unwrap();
        FiniteHorizonMdp::from_parts(1, vec![1.0], vec![1.0], Dynamics::Stationary(k)).unwrap()
    }

    #[test]
    fn degenerate_mdp_is_valid() {
        assert!(validate_mdp(&one_state()).is_ok());
    }

    #[test]
    fn short_row_reports_its_index() {
        let k0 = Kernel::from_rows(2, 1, vec![vec![(0, 1.0)], vec![(1, 1.0)]]).unwrap();
        let k1 = Kernel::from_rows(2, 1, vec![vec![(0, 1.0)], vec![(0, 0.4), (1, 0.5)]]).unwrap();
        let mdp = FiniteHorizonMdp::from_parts(
            2,
            vec![0.0, 0.0],
            vec![0.5, 0.5],
            Dynamics::TimeVarying(vec![k0, k1]),
        )
        .unwrap();
        match mdp.validate() {
            Err(Error::TransitionRow { t: 1, s: 1, a: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_initial_entry_is_named() {
        let k = Kernel::from_rows(2, 1, vec![vec![(0, 1.0)], vec![(1, 1.0)]]).unwrap();
        let err = FiniteHorizonMdp::new(1, vec![0.0, 0.0], vec![1.5, -0.5], Dynamics::Stationary(k))
            .unwrap_err();
        assert!(matches!(err, Error::InitialDist(_)));
        assert!(err.to_string().contains("initial_dist"));
    }

    #[test]
    fn mismatched_kernel_is_rejected() {
        let k = Kernel::from_rows(1, 1, vec![vec![(0, 1.0)]]).unwrap();
        assert!(FiniteHorizonMdp::from_parts(1, vec![0.0, 0.0], vec![1.0, 0.0], Dynamics::Stationary(k)).is_err());
    }

    #[test]
    fn policy_row_checks() {
        let dims = Dims::new(2, 2, 1);
        let mut p = Policy::<f64>::uniform(dims);
        assert!(p.validate().is_ok());
        p.row_mut(1, 0)[0] = 0.9;
        assert!(matches!(p.validate(), Err(Error::PolicyRow { t: 1, s: 0, .. })));
    }
}
