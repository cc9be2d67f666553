//! Closed-form maximizer of `Σ_a K_a log π_a + Σ_a π_a B_a` over the simplex.
//!
//! With `A⁺` the actions carrying positive counts, stationarity gives
//! `π_a = K_a / (λ − B_a)` on `A⁺` where `λ` solves
//! `Σ_{a∈A⁺} K_a / (λ − B_a) = 1`. The root is found by bisection on the shifted
//! variable `μ = λ − max_{A⁺} B`, whose bracket is `[K_min, |A|·K_max]`.
//! If the root falls below the largest `B` among zero-count actions, the
//! leftover mass goes to that action instead (split evenly over exact ties).

use crate::mdp::argmax;
use crate::scalar::Scalar;

/// Which branch of the closed form produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexCase {
    /// Root of the secular equation dominates every `B_a`.
    Interior,
    /// `λ` clamped to `max_a B_a`; the remainder sits on zero-count action
    /// `a_star` and any zero-count action tied with it.
    Boundary { a_star: usize },
    /// No counts and a non-constant linear objective: a vertex, or the face
    /// spanned by the tied maximizers, with `a_star` the lowest of them.
    Vertex { a_star: usize },
    /// No counts and constant objective: the uniform row.
    Flat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSolution<T> {
    pub probs: Vec<T>,
    /// Multiplier of the sum-to-one constraint.
    pub lambda_state: T,
    /// Multipliers of the non-negativity constraints.
    pub lambda_action: Vec<T>,
    pub case: SimplexCase,
    /// `Σ_{A⁺} K_a / (λ_root − B_a) − 1` at the bisection root (zero when the
    /// root is known in closed form or there is no root to find).
    pub root_residual: T,
}

impl<T: Scalar> SimplexSolution<T> {
    /// Objective value `Σ K log π + Σ π B` with `0 · log 0 = 0`.
    pub fn objective(&self, counts: &[u64], b: &[T]) -> T {
        simplex_objective(counts, b, &self.probs)
    }
}

pub fn simplex_objective<T: Scalar>(counts: &[u64], b: &[T], probs: &[T]) -> T {
    let mut f = T::zero();
    for ((&k, &ba), &p) in counts.iter().zip(b).zip(probs) {
        if k > 0 {
            f += T::lit(k as f64) * p.ln();
        }
        f += p * ba;
    }
    f
}

/// Solves one state's subproblem. `counts` and `b` are indexed by action;
/// `bisection_tol` bounds the final width of the `μ` bracket.
pub fn state_simplex_solve<T: Scalar>(counts: &[u64], b: &[T], bisection_tol: T) -> SimplexSolution<T> {
    let n = counts.len();
    assert_eq!(n, b.len(), "counts and B rows differ in length");
    assert!(n > 0, "empty action set");

    let max_all = b.iter().copied().fold(T::neg_infinity(), T::max);
    let positive: Vec<usize> = (0..n).filter(|&a| counts[a] > 0).collect();

    if positive.is_empty() {
        let min_all = b.iter().copied().fold(T::infinity(), T::min);
        let lambda_action: Vec<T> = b.iter().map(|&ba| max_all - ba).collect();
        if max_all == min_all {
            return SimplexSolution {
                probs: vec![T::one() / T::lit(n as f64); n],
                lambda_state: max_all,
                lambda_action,
                case: SimplexCase::Flat,
                root_residual: T::zero(),
            };
        }
        let a_star = argmax(b);
        let mut probs = vec![T::zero(); n];
        spread(&mut probs, b, counts, max_all, T::one());
        return SimplexSolution {
            probs,
            lambda_state: max_all,
            lambda_action,
            case: SimplexCase::Vertex { a_star },
            root_residual: T::zero(),
        };
    }

    let b_max = positive.iter().map(|&a| b[a]).fold(T::neg_infinity(), T::max);
    // d[a] = B_max − B_a; non-negative on A⁺, possibly negative elsewhere.
    let d: Vec<T> = b.iter().map(|&ba| b_max - ba).collect();
    let k: Vec<T> = counts.iter().map(|&c| T::lit(c as f64)).collect();
    let secular = |mu: T| -> T {
        positive
            .iter()
            .fold(T::zero(), |acc, &a| acc + k[a] / (mu + d[a]))
    };

    let (mu, root_residual) = if positive.iter().all(|&a| d[a] == T::zero()) {
        // Σ K / μ = 1 has the exact root μ = ΣK.
        (positive.iter().map(|&a| k[a]).sum(), T::zero())
    } else {
        let k_min = positive.iter().map(|&a| k[a]).fold(T::infinity(), T::min);
        let k_max = positive.iter().map(|&a| k[a]).fold(T::zero(), T::max);
        let mut lo = k_min;
        let mut hi = T::lit(n as f64) * k_max;
        assert!(
            secular(lo) >= T::one() && secular(hi) <= T::one(),
            "bisection bracket does not straddle the root"
        );
        while hi - lo > bisection_tol {
            let mid = lo + (hi - lo) / T::lit(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            if secular(mid) >= T::one() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mu = lo + (hi - lo) / T::lit(2.0);
        (mu, secular(mu) - T::one())
    };

    let gap = max_all - b_max;
    let mut probs = vec![T::zero(); n];
    let mut lambda_action = vec![T::zero(); n];

    if mu >= gap {
        for &a in &positive {
            probs[a] = k[a] / (mu + d[a]);
        }
        let total: T = probs.iter().copied().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        for a in (0..n).filter(|&a| counts[a] == 0) {
            lambda_action[a] = mu + d[a];
        }
        SimplexSolution {
            probs,
            lambda_state: b_max + mu,
            lambda_action,
            case: SimplexCase::Interior,
            root_residual,
        }
    } else {
        let a_star = argmax(b);
        assert_eq!(counts[a_star], 0, "boundary action must have zero count");
        let mut used = T::zero();
        for &a in &positive {
            probs[a] = k[a] / (gap + d[a]);
            used += probs[a];
        }
        spread(&mut probs, b, counts, max_all, T::one() - used);
        for a in (0..n).filter(|&a| counts[a] == 0) {
            lambda_action[a] = max_all - b[a];
        }
        SimplexSolution {
            probs,
            lambda_state: max_all,
            lambda_action,
            case: SimplexCase::Boundary { a_star },
            root_residual,
        }
    }
}

/// Shares `mass` equally among the zero-count actions whose `B` equals
/// `max_all` exactly. The objective is flat across them, so every split is a
/// maximizer; the even split keeps duplicated actions interchangeable.
fn spread<T: Scalar>(probs: &mut [T], b: &[T], counts: &[u64], max_all: T, mass: T) {
    let tied: Vec<usize> = (0..b.len()).filter(|&a| counts[a] == 0 && b[a] == max_all).collect();
    let share = mass / T::lit(tied.len() as f64);
    for a in tied {
        probs[a] = share;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_b_gives_frequencies() {
        let sol = state_simplex_solve(&[3, 1], &[0.0, 0.0], 1e-10);
        assert_eq!(sol.lambda_state, 4.0);
        assert_eq!(sol.probs, vec![0.75, 0.25]);
        assert_eq!(sol.case, SimplexCase::Interior);
    }

    #[test]
    fn dominant_zero_count_action_takes_remainder() {
        // max_p log p + 10 (1 − p) at p = 0.1.
        let sol = state_simplex_solve::<f64>(&[1, 0], &[0.0, 10.0], 1e-10);
        assert_eq!(sol.case, SimplexCase::Boundary { a_star: 1 });
        assert_eq!(sol.lambda_state, 10.0);
        assert!((sol.probs[0] - 0.1).abs() < 1e-15);
        assert!((sol.probs[1] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn no_counts() {
        let flat = state_simplex_solve::<f64>(&[0, 0, 0], &[2.0, 2.0, 2.0], 1e-10);
        assert_eq!(flat.case, SimplexCase::Flat);
        assert_eq!(flat.probs, vec![1.0 / 3.0; 3]);
        let vertex = state_simplex_solve::<f64>(&[0, 0, 0], &[1.0, 3.0, 3.0], 1e-10);
        assert_eq!(vertex.case, SimplexCase::Vertex { a_star: 1 });
        assert_eq!(vertex.probs, vec![0.0, 0.5, 0.5]);
        assert_eq!(vertex.lambda_action, vec![2.0, 0.0, 0.0]);
    }

    #[test]
    fn interior_with_unequal_b() {
        let counts = [2, 3, 0];
        let b = [0.5f64, 1.5, 0.25];
        let sol = state_simplex_solve(&counts, &b, 1e-12);
        assert_eq!(sol.case, SimplexCase::Interior);
        assert!(sol.root_residual.abs() < 1e-9);
        // Equal Lagrangian gradient on the support.
        let g0 = 2.0 / sol.probs[0] + b[0];
        let g1 = 3.0 / sol.probs[1] + b[1];
        assert!((g0 - g1).abs() < 1e-8);
        assert!((g0 - sol.lambda_state).abs() < 1e-8);
        assert_eq!(sol.probs[2], 0.0);
        assert!(sol.lambda_action[2] > 0.0);
    }

    #[test]
    fn works_in_single_precision() {
        let sol = state_simplex_solve::<f32>(&[4, 1, 0], &[0.0, 2.0, 0.5], 1e-10);
        let s: f32 = sol.probs.iter().sum();
        assert!((s - 1.0).abs() < 1e-6);
    }
}
