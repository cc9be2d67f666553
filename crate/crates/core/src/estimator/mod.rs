//! MAP estimation of a mentor policy under the value-based prior
//! `P(π) ∝ exp(α V(π))`.
//!
//! The penalized likelihood `L(π) = Σ K log π + α V(π)` is maximized by
//! cycling over epochs `τ = 0..=H`: with every other epoch fixed the Bellman
//! constraints become linear in `π^τ`, and the resulting concave subproblem
//! is solved exactly, state by state, from its KKT conditions. Each inner
//! solve cannot decrease `L`.

mod objective;
mod simplex;
mod steps;

pub use objective::{log_likelihood, log_posterior};
pub use simplex::{simplex_objective, state_simplex_solve, SimplexCase, SimplexSolution};
pub use steps::{
    b_coefficients, backward_values, forward_multipliers, solve_timestep, SolverScratch,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::dataset::CountTensor;
use crate::error::{Error, Result};
use crate::mdp::dp::{dot, propagate};
use crate::mdp::{policy_value, FiniteHorizonMdp, Policy, ValueTable};
use crate::scalar::Scalar;
use objective::epoch_log_likelihood;

/// Starting point for the alternation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    Uniform,
    /// Each row drawn uniformly from the simplex.
    #[default]
    SeededRandom,
    /// `(K + 1) / Σ (K + 1)`.
    SmoothedMle,
}

impl std::str::FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(InitMode::Uniform),
            "seeded-random" | "random" => Ok(InitMode::SeededRandom),
            "smoothed-mle" => Ok(InitMode::SmoothedMle),
            other => Err(Error::Config(format!("unknown init mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig<T> {
    /// Prior weight `α ≥ 0`.
    pub alpha: T,
    /// Discount in `(0, 1]`.
    pub gamma: T,
    /// Stop once a full cycle changes `L` by less than this.
    pub objective_tol: T,
    pub max_cycles: usize,
    /// Final width of the bisection bracket in the per-state solve.
    pub bisection_tol: T,
    pub init_mode: InitMode,
    pub seed: u64,
}

impl<T: Scalar> Default for EstimatorConfig<T> {
    fn default() -> Self {
        EstimatorConfig {
            alpha: T::one(),
            gamma: T::one(),
            objective_tol: T::lit(1e-8),
            max_cycles: 200,
            bisection_tol: T::lit(1e-10),
            init_mode: InitMode::SeededRandom,
            seed: 0,
        }
    }
}

impl<T: Scalar> EstimatorConfig<T> {
    pub fn with_alpha(alpha: T) -> Self {
        EstimatorConfig {
            alpha,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= T::zero()) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be finite and >= 0, got {}", self.alpha)));
        }
        if !(self.gamma > T::zero() && self.gamma <= T::one()) {
            return Err(Error::Config(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if !(self.objective_tol > T::zero()) || !(self.bisection_tol > T::zero()) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.max_cycles == 0 {
            return Err(Error::Config("max_cycles must be positive".into()));
        }
        Ok(())
    }
}

/// First-order optimality residuals of a policy, measured per `(τ, s)` with
/// `B` and `λ^V` recomputed at that policy.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktReport<T> {
    /// Largest spread of `K/π + B` across actions with `π > 1e-6`.
    pub stationarity: T,
    /// Largest `max(0, B_a − λ_s)` over zero-count actions.
    pub dual_violation: T,
    /// Largest `|λ^π_{sa} π_{sa}|` over zero-count actions.
    pub complementary_slackness: T,
}

impl<T: Scalar> KktReport<T> {
    pub fn max_residual(&self) -> T {
        self.stationarity
            .max(self.dual_violation)
            .max(self.complementary_slackness)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult<T> {
    pub policy: Policy<T>,
    /// `L` at the starting policy.
    pub initial_objective: T,
    /// `L` after every inner solve, `H + 1` entries per cycle.
    pub objective_trace: Vec<T>,
    pub cycles_run: usize,
    pub inner_solves: usize,
    pub converged: bool,
    pub kkt: KktReport<T>,
    pub max_kkt_residual: T,
}

impl<T: Scalar> EstimationResult<T> {
    pub fn final_objective(&self) -> T {
        self.objective_trace
            .last()
            .copied()
            .unwrap_or(self.initial_objective)
    }

    /// Largest drop between consecutive objective values (zero when the trace
    /// never decreases).
    pub fn max_decrease(&self) -> T {
        let mut prev = self.initial_objective;
        let mut worst = T::zero();
        for &l in &self.objective_trace {
            worst = worst.max(prev - l);
            prev = l;
        }
        worst
    }
}

/// Builds the starting policy for `mode`.
pub fn initial_policy<T: Scalar>(counts: &CountTensor, mode: InitMode, seed: u64) -> Policy<T> {
    let dims = counts.dims();
    match mode {
        InitMode::Uniform => Policy::uniform(dims),
        InitMode::SmoothedMle => {
            let mut pi = Policy::uniform(dims);
            for t in 0..dims.epochs() {
                for s in 0..dims.num_states {
                    let k = counts.row(t, s);
                    let total = T::lit((k.iter().sum::<u64>() + k.len() as u64) as f64);
                    for (p, &c) in pi.row_mut(t, s).iter_mut().zip(k) {
                        *p = T::lit(c as f64 + 1.0) / total;
                    }
                }
            }
            pi
        }
        InitMode::SeededRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut pi = Policy::uniform(dims);
            for t in 0..dims.epochs() {
                for s in 0..dims.num_states {
                    let row = pi.row_mut(t, s);
                    let mut total = T::zero();
                    for p in row.iter_mut() {
                        let e: f64 = Exp1.sample(&mut rng);
                        *p = T::lit(e.max(f64::MIN_POSITIVE));
                        total += *p;
                    }
                    row.iter_mut().for_each(|p| *p /= total);
                }
            }
            pi
        }
    }
}

/// Cyclic exact maximization of `Σ K log π + α V(π)` over one epoch at a time.
///
/// Non-convergence within `max_cycles` is reported through
/// [`EstimationResult::converged`], not as an error.
pub fn alternating_maximize<T: Scalar>(
    mdp: &FiniteHorizonMdp<T>,
    counts: &CountTensor,
    config: &EstimatorConfig<T>,
) -> Result<EstimationResult<T>> {
    config.validate()?;
    mdp.dims().check_same(&counts.dims(), "counts")?;
    let policy = initial_policy(counts, config.init_mode, config.seed);
    alternating_maximize_from(mdp, counts, config, policy)
}

/// [`alternating_maximize`] from a caller-supplied starting policy.
pub fn alternating_maximize_from<T: Scalar>(
    mdp: &FiniteHorizonMdp<T>,
    counts: &CountTensor,
    config: &EstimatorConfig<T>,
    mut policy: Policy<T>,
) -> Result<EstimationResult<T>> {
    config.validate()?;
    let dims = mdp.dims();
    dims.check_same(&counts.dims(), "counts")?;
    dims.check_same(&policy.dims(), "initial policy")?;
    policy.validate()?;

    let alpha = config.alpha;
    let gamma = config.gamma;
    let h = dims.horizon;

    let (_, mut values) = policy_value(mdp, &policy, gamma)?;
    let mut epoch_ll: Vec<T> = (0..=h).map(|t| epoch_log_likelihood(&policy, counts, t)).collect();
    let objective = |epoch_ll: &[T], values: &ValueTable<T>| -> T {
        let ll = epoch_ll.iter().fold(T::zero(), |a, &b| a + b);
        if alpha == T::zero() {
            ll
        } else {
            ll + alpha * dot(mdp.initial_dist(), values.row(0))
        }
    };

    let initial_objective = objective(&epoch_ll, &values);
    let mut current = initial_objective;
    let mut trace = Vec::with_capacity((h + 1) * config.max_cycles.min(64));
    let mut cycles_run = 0;
    let mut converged = false;
    let mut lambda = vec![T::zero(); dims.num_states];
    let mut lambda_next = vec![T::zero(); dims.num_states];

    while cycles_run < config.max_cycles {
        let cycle_start = current;
        for tau in 0..=h {
            // λ^V[τ] only depends on π^0..π^{τ-1}, all already updated this cycle.
            if tau == 0 {
                for (l, &p) in lambda.iter_mut().zip(mdp.initial_dist()) {
                    *l = alpha * p;
                }
            } else {
                propagate(mdp, &policy, tau - 1, &lambda, gamma, &mut lambda_next);
                std::mem::swap(&mut lambda, &mut lambda_next);
            }
            steps::solve_slice(
                mdp,
                counts,
                gamma,
                config.bisection_tol,
                &mut policy,
                &mut values,
                &lambda,
                tau,
            );
            epoch_ll[tau] = epoch_log_likelihood(&policy, counts, tau);
            current = objective(&epoch_ll, &values);
            trace.push(current);
        }
        cycles_run += 1;
        if (current - cycle_start).abs() < config.objective_tol {
            converged = true;
            break;
        }
    }

    let kkt = kkt_report(mdp, counts, &policy, alpha, gamma)?;
    Ok(EstimationResult {
        policy,
        initial_objective,
        inner_solves: trace.len(),
        objective_trace: trace,
        cycles_run,
        converged,
        max_kkt_residual: kkt.max_residual(),
        kkt,
    })
}

/// Measures how far `policy` is from satisfying every per-epoch KKT system.
pub fn kkt_report<T: Scalar>(
    mdp: &FiniteHorizonMdp<T>,
    counts: &CountTensor,
    policy: &Policy<T>,
    alpha: T,
    gamma: T,
) -> Result<KktReport<T>> {
    let dims = mdp.dims();
    dims.check_same(&counts.dims(), "counts")?;
    let (_, values) = policy_value(mdp, policy, gamma)?;
    let lambda_v = forward_multipliers(mdp, policy, alpha, gamma, dims.horizon)?;
    let support = T::lit(1e-6);
    let mut report = KktReport {
        stationarity: T::zero(),
        dual_violation: T::zero(),
        complementary_slackness: T::zero(),
    };
    let n_a = dims.num_actions;
    for tau in 0..=dims.horizon {
        let b = if tau < dims.horizon {
            b_coefficients(mdp, &lambda_v[tau], &values, gamma, tau)
        } else {
            vec![T::zero(); dims.num_states * n_a]
        };
        for s in 0..dims.num_states {
            let k = counts.row(tau, s);
            let p = policy.row(tau, s);
            let b = &b[s * n_a..(s + 1) * n_a];
            let grads: Vec<T> = (0..n_a)
                .filter(|&a| p[a] > support)
                .map(|a| T::lit(k[a] as f64) / p[a] + b[a])
                .collect();
            let hi = grads.iter().copied().fold(T::neg_infinity(), T::max);
            let lo = grads.iter().copied().fold(T::infinity(), T::min);
            if !grads.is_empty() {
                report.stationarity = report.stationarity.max(hi - lo);
            }
            let lambda_s = if grads.is_empty() {
                b.iter().copied().fold(T::neg_infinity(), T::max)
            } else {
                hi
            };
            for a in (0..n_a).filter(|&a| k[a] == 0) {
                let dual = lambda_s - b[a];
                report.dual_violation = report.dual_violation.max(-dual);
                report.complementary_slackness =
                    report.complementary_slackness.max((dual * p[a]).abs());
            }
        }
    }
    Ok(report)
}
