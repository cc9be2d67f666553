//! Reference estimators: plain maximum likelihood and a Dirichlet prior
//! concentrated on the optimal actions of the modeling MDP.

use crate::dataset::CountTensor;
use crate::error::{Error, Result};
use crate::mdp::{optimal_action_sets, FiniteHorizonMdp, Policy};
use crate::scalar::Scalar;

/// Empirical action frequencies per `(t, s)`; uniform where a state was never
/// visited at that epoch.
pub fn mle_estimate<T: Scalar>(counts: &CountTensor) -> Policy<T> {
    let dims = counts.dims();
    let mut pi = Policy::uniform(dims);
    for t in 0..dims.epochs() {
        for s in 0..dims.num_states {
            let k = counts.row(t, s);
            let total: u64 = k.iter().sum();
            if total == 0 {
                continue;
            }
            let total = T::lit(total as f64);
            for (p, &c) in pi.row_mut(t, s).iter_mut().zip(k) {
                *p = T::lit(c as f64) / total;
            }
        }
    }
    pi
}

/// Dirichlet concentration per `(t, s)`: `α / |A°|` on the optimal set `A°`,
/// zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSpec<T> {
    pub alpha: T,
    /// Optimal actions per `(t, s)`, flattened `t * |S| + s`.
    pub optimal_sets: Vec<Vec<usize>>,
}

impl<T: Scalar> DirichletSpec<T> {
    /// Optimal sets taken from backward induction on `mdp`, counting every
    /// action within `1e-9` of the best.
    pub fn from_mdp(mdp: &FiniteHorizonMdp<T>, alpha: T, gamma: T) -> Result<Self> {
        if !(alpha >= T::zero()) {
            return Err(Error::Config(format!("alpha must be >= 0, got {alpha}")));
        }
        Ok(DirichletSpec {
            alpha,
            optimal_sets: optimal_action_sets(mdp, gamma, T::tol(1e-9)),
        })
    }

    pub fn concentration(&self, index: usize, num_actions: usize) -> Vec<T> {
        let set = &self.optimal_sets[index];
        let mut beta = vec![T::zero(); num_actions];
        if !set.is_empty() {
            let share = self.alpha / T::lit(set.len() as f64);
            for &a in set {
                beta[a] = share;
            }
        }
        beta
    }
}

/// Posterior mean `(K + β) / Σ (K + β)` under the Dirichlet prior. With
/// `α = 0` this is [`mle_estimate`].
pub fn dirichlet_estimate<T: Scalar>(
    counts: &CountTensor,
    mdp: &FiniteHorizonMdp<T>,
    alpha: T,
    gamma: T,
) -> Result<Policy<T>> {
    mdp.dims().check_same(&counts.dims(), "counts")?;
    if alpha == T::zero() {
        return Ok(mle_estimate(counts));
    }
    let spec = DirichletSpec::from_mdp(mdp, alpha, gamma)?;
    Ok(dirichlet_with_spec(counts, &spec))
}

pub fn dirichlet_with_spec<T: Scalar>(counts: &CountTensor, spec: &DirichletSpec<T>) -> Policy<T> {
    let dims = counts.dims();
    let mut pi = Policy::uniform(dims);
    for t in 0..dims.epochs() {
        for s in 0..dims.num_states {
            let beta = spec.concentration(t * dims.num_states + s, dims.num_actions);
            let k = counts.row(t, s);
            let post: Vec<T> = k.iter().zip(&beta).map(|(&c, &b)| T::lit(c as f64) + b).collect();
            let total: T = post.iter().copied().sum();
            if total > T::zero() {
                for (p, x) in pi.row_mut(t, s).iter_mut().zip(post) {
                    *p = x / total;
                }
            }
        }
    }
    pi
}
