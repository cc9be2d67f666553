use crate::dataset::CountTensor;
use crate::error::Result;
use crate::mdp::{policy_value, FiniteHorizonMdp, Policy};
use crate::scalar::Scalar;

/// `Σ_{s,a} K[t][s][a] log π[t][s][a]` for one epoch, with `0 · log 0 = 0`.
/// A positive count on a zero-probability action gives `−∞`.
pub(crate) fn epoch_log_likelihood<T: Scalar>(policy: &Policy<T>, counts: &CountTensor, t: usize) -> T {
    let dims = counts.dims();
    let mut ll = T::zero();
    for s in 0..dims.num_states {
        for (&k, &p) in counts.row(t, s).iter().zip(policy.row(t, s)) {
            if k > 0 {
                if p <= T::zero() {
                    return T::neg_infinity();
                }
                ll += T::lit(k as f64) * p.ln();
            }
        }
    }
    ll
}

/// `Σ K log π` over every epoch.
pub fn log_likelihood<T: Scalar>(policy: &Policy<T>, counts: &CountTensor) -> Result<T> {
    counts.dims().check_same(&policy.dims(), "policy vs counts")?;
    Ok((0..counts.dims().epochs())
        .map(|t| epoch_log_likelihood(policy, counts, t))
        .fold(T::zero(), |a, b| a + b))
}

/// Penalized log-likelihood `Σ K log π + α V(π)`.
pub fn log_posterior<T: Scalar>(
    mdp: &FiniteHorizonMdp<T>,
    policy: &Policy<T>,
    counts: &CountTensor,
    alpha: T,
    gamma: T,
) -> Result<T> {
    let ll = log_likelihood(policy, counts)?;
    if alpha == T::zero() {
        return Ok(ll);
    }
    let (value, _) = policy_value(mdp, policy, gamma)?;
    Ok(ll + alpha * value)
}
