//! The three steps of one inner maximization over `π^τ`.

use super::simplex::{state_simplex_solve, SimplexCase};
use crate::dataset::CountTensor;
use crate::error::{Error, Result};
use crate::mdp::{policy_value, FiniteHorizonMdp, Policy, ValueTable};
use crate::scalar::Scalar;

/// Multipliers and branch bookkeeping from one inner solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverScratch<T> {
    pub tau: usize,
    /// `λ^V[t][s]` for `t ≤ τ` (empty at `τ = H`, where the value term drops out).
    pub lambda_v: Vec<Vec<T>>,
    /// `B[s][a]`, flattened.
    pub b_coeff: Vec<T>,
    pub lambda_pi_state: Vec<T>,
    /// `λ^π[s][a]`, flattened.
    pub lambda_pi_action: Vec<T>,
    /// `K[τ][s][a] > 0`, flattened. Its complement is the zero-count set.
    pub positive_count: Vec<bool>,
    pub cases: Vec<SimplexCase>,
    pub max_root_residual: T,
}

impl<T: Scalar> SolverScratch<T> {
    pub fn num_actions(&self) -> usize {
        self.b_coeff.len() / self.lambda_pi_state.len().max(1)
    }

    pub fn zero_count_set(&self, s: usize) -> Vec<usize> {
        let n = self.num_actions();
        (0..n).filter(|&a| !self.positive_count[s * n + a]).collect()
    }

    pub fn positive_count_set(&self, s: usize) -> Vec<usize> {
        let n = self.num_actions();
        (0..n).filter(|&a| self.positive_count[s * n + a]).collect()
    }
}

/// `λ^V[t]` for `t = 0..=τ`: `α p⁰` pushed forward under `π` with a factor `γ`
/// per epoch, i.e. `α γ^t Pr[s_t = s | π]`.
pub fn forward_multipliers<T: Scalar>(
    mdp: &FiniteHorizonMdp<T>,
    policy: &Policy<T>,
    alpha: T,
    gamma: T,
    tau: usize,
) -> Result<Vec<Vec<T>>> {
    mdp.dims().check_same(&policy.dims(), "policy")?;
    if tau > mdp.horizon() {
        return Err(Error::dim(format!("tau {tau} exceeds horizon {}", mdp.horizon())));
    }
    let mut out = Vec::with_capacity(tau + 1);
    out.push(mdp.initial_dist().iter().map(|&p| alpha * p).collect::<Vec<_>>());
    for t in 1..=tau {
        let mut next = vec![T::zero(); mdp.num_states()];
        crate::mdp::dp::propagate(mdp, policy, t - 1, &out[t - 1], gamma, &mut next);
        out.push(next);
    }
    Ok(out)
}

/// Recomputes `V[t]` for `t = τ, τ−1, …, 0` from the row `V[τ+1]` already in
/// `values`. With `τ ≥ H` every epoch below `H` is refreshed from `V[H] = R`.
pub fn backward_values<T: Scalar>(
    mdp: &FiniteHorizonMdp<T>,
    policy: &Policy<T>,
    gamma: T,
    tau: usize,
    values: &mut ValueTable<T>,
) -> Result<()> {
    mdp.dims().check_same(&policy.dims(), "policy")?;
    if values.horizon() != mdp.horizon() || values.num_states() != mdp.num_states() {
        return Err(Error::dim("value table shape"));
    }
    let top = tau.min(mdp.horizon().saturating_sub(1));
    if mdp.horizon() == 0 {
        return Ok(());
    }
    for t in (0..=top).rev() {
        crate::mdp::dp::backup_epoch(mdp, policy, gamma, t, values);
    }
    Ok(())
}

/// `B[s][a] = γ λ^V[τ][s] Σ_{s'} θ^τ(s'|s,a) V[τ+1][s']` for `τ < H`.
pub fn b_coefficients<T: Scalar>(
    mdp: &FiniteHorizonMdp<T>,
    lambda_v_tau: &[T],
    values: &ValueTable<T>,
    gamma: T,
    tau: usize,
) -> Vec<T> {
    let n_a = mdp.num_actions();
    let kernel = mdp.kernel(tau);
    let next = values.row(tau + 1);
    let mut b = vec![T::zero(); mdp.num_states() * n_a];
    for (s, &lv) in lambda_v_tau.iter().enumerate() {
        if lv == T::zero() {
            continue;
        }
        let scale = gamma * lv;
        for a in 0..n_a {
            b[s * n_a + a] = scale * kernel.expect(s, a, next);
        }
    }
    b
}

/// Step 2 and Step 3 given `λ^V[τ]`: replaces `π^τ` with the maximizer and
/// refreshes `V[0..=τ]`. `values` must hold the current `V[τ+1..=H]`.
pub(crate) fn solve_slice<T: Scalar>(
    mdp: &FiniteHorizonMdp<T>,
    counts: &CountTensor,
    gamma: T,
    bisection_tol: T,
    policy: &mut Policy<T>,
    values: &mut ValueTable<T>,
    lambda_v_tau: &[T],
    tau: usize,
) -> SolverScratch<T> {
    let n_s = mdp.num_states();
    let n_a = mdp.num_actions();
    let h = mdp.horizon();

    let b_coeff = if tau < h {
        b_coefficients(mdp, lambda_v_tau, values, gamma, tau)
    } else {
        vec![T::zero(); n_s * n_a]
    };

    let mut lambda_pi_state = Vec::with_capacity(n_s);
    let mut lambda_pi_action = Vec::with_capacity(n_s * n_a);
    let mut positive_count = Vec::with_capacity(n_s * n_a);
    let mut cases = Vec::with_capacity(n_s);
    let mut max_root_residual = T::zero();

    for s in 0..n_s {
        let k_row = counts.row(tau, s);
        let b_row = &b_coeff[s * n_a..(s + 1) * n_a];
        let sol = state_simplex_solve(k_row, b_row, bisection_tol);
        policy.row_mut(tau, s).copy_from_slice(&sol.probs);
        lambda_pi_state.push(sol.lambda_state);
        lambda_pi_action.extend_from_slice(&sol.lambda_action);
        positive_count.extend(k_row.iter().map(|&k| k > 0));
        cases.push(sol.case);
        max_root_residual = max_root_residual.max(sol.root_residual.abs());
    }

    if tau < h {
        backward_values(mdp, policy, gamma, tau, values).expect("shapes checked by caller");
    }

    SolverScratch {
        tau,
        lambda_v: Vec::new(),
        b_coeff,
        lambda_pi_state,
        lambda_pi_action,
        positive_count,
        cases,
        max_root_residual,
    }
}

/// Exactly maximizes `Σ K log π + α V(π)` over `π^τ` with every other epoch
/// held fixed, updating `policy` in place.
///
/// For `τ = H` the value term does not depend on `π^H`, and the update is the
/// empirical frequency row (uniform where a state has no counts).
pub fn solve_timestep<T: Scalar>(
    mdp: &FiniteHorizonMdp<T>,
    counts: &CountTensor,
    alpha: T,
    gamma: T,
    bisection_tol: T,
    policy: &mut Policy<T>,
    tau: usize,
) -> Result<SolverScratch<T>> {
    mdp.dims().check_same(&counts.dims(), "counts")?;
    let lambda_v = forward_multipliers(mdp, policy, alpha, gamma, tau)?;
    let (_, mut values) = policy_value(mdp, policy, gamma)?;
    let mut scratch = solve_slice(
        mdp,
        counts,
        gamma,
        bisection_tol,
        policy,
        &mut values,
        &lambda_v[tau],
        tau,
    );
    if tau < mdp.horizon() {
        scratch.lambda_v = lambda_v;
    }
    Ok(scratch)
}
