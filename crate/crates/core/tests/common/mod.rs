#![allow(dead_code)]

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use valueprior::mdp::{Dynamics, Kernel};
use valueprior::{CountTensor, Dims, FiniteHorizonMdp, Policy};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn simplex_point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Random time-varying MDP with sparse rows of random support.
pub fn random_mdp(rng: &mut ChaCha8Rng, n_s: usize, n_a: usize, h: usize) -> FiniteHorizonMdp<f64> {
    let kernels = (0..h.max(1))
        .map(|_| {
            Kernel::from_fn(n_s, n_a, |_, _| {
                let support = rng.random_range(1..=n_s);
                let mut ids: Vec<usize> = (0..n_s).collect();
                for i in 0..support {
                    let j = rng.random_range(i..n_s);
                    ids.swap(i, j);
                }
                let p = simplex_point(rng, support);
                let mut row: Vec<(usize, f64)> = ids[..support].iter().copied().zip(p).collect();
                row.sort_by_key(|e| e.0);
                row
            })
        })
        .collect::<Vec<_>>();
    let rewards = (0..n_s).map(|_| rng.random_range(-1.0..2.0)).collect();
    let p0 = simplex_point(rng, n_s);
    let dynamics = if h == 0 {
        Dynamics::Stationary(kernels.into_iter().next().unwrap())
    } else {
        Dynamics::TimeVarying(kernels)
    };
    FiniteHorizonMdp::new(h, rewards, p0, dynamics).unwrap()
}

pub fn random_policy(rng: &mut ChaCha8Rng, dims: Dims) -> Policy<f64> {
    let mut probs = Vec::new();
    for _ in 0..dims.epochs() * dims.num_states {
        probs.extend(simplex_point(rng, dims.num_actions));
    }
    Policy::from_vec(dims, probs).unwrap()
}

/// Random counts consistent with `m` trajectories: each epoch distributes `m`
/// visits over state-action cells.
pub fn random_counts(rng: &mut ChaCha8Rng, dims: Dims, m: u64) -> CountTensor {
    let per = dims.num_states * dims.num_actions;
    let mut raw = vec![0u64; dims.epochs() * per];
    for t in 0..dims.epochs() {
        for _ in 0..m {
            raw[t * per + rng.random_range(0..per)] += 1;
        }
    }
    CountTensor::from_counts(dims, raw).unwrap()
}

fn draw(rng: &mut ChaCha8Rng, items: impl Iterator<Item = (usize, f64)>) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in items {
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Independent rollout oracle: returns per-episode undiscounted returns and
/// state visit counts `[t][s]`.
pub fn rollouts(
    mdp: &FiniteHorizonMdp<f64>,
    policy: &Policy<f64>,
    episodes: usize,
    seed: u64,
) -> (Vec<f64>, Vec<Vec<u64>>) {
    let mut rng = rng(seed);
    let h = mdp.horizon();
    let mut visits = vec![vec![0u64; mdp.num_states()]; h + 1];
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut s = draw(&mut rng, mdp.initial_dist().iter().copied().enumerate());
        let mut ret = 0.0;
        for t in 0..=h {
            visits[t][s] += 1;
            ret += mdp.rewards()[s];
            if t < h {
                let a = draw(&mut rng, policy.row(t, s).iter().copied().enumerate());
                s = draw(&mut rng, mdp.transition_row(t, s, a).iter().copied());
            }
        }
        returns.push(ret);
    }
    (returns, visits)
}

pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn simplex_f(k: &[u64], b: &[f64], p: &[f64]) -> f64 {
    let mut f = 0.0;
    for i in 0..k.len() {
        if k[i] > 0 {
            if p[i] <= 0.0 {
                return f64::NEG_INFINITY;
            }
            f += k[i] as f64 * p[i].ln();
        }
        f += p[i] * b[i];
    }
    f
}

/// Maximum of `Σ K log π + Σ π B` over the simplex grid with spacing
/// `1/steps`, for up to three actions. For three actions the objective along
/// each line of constant `π_0` is concave in the grid index, so that inner
/// maximum is found by ternary search over indices.
pub fn simplex_grid_max(k: &[u64], b: &[f64], steps: usize) -> f64 {
    let h = 1.0 / steps as f64;
    match k.len() {
        1 => simplex_f(k, b, &[1.0]),
        2 => (0..=steps)
            .map(|i| {
                let p = i as f64 * h;
                simplex_f(k, b, &[p, 1.0 - p])
            })
            .fold(f64::NEG_INFINITY, f64::max),
        3 => {
            let mut best = f64::NEG_INFINITY;
            for i in 0..=steps {
                let p0 = i as f64 * h;
                let rest = steps - i;
                let at = |j: usize| {
                    let p1 = j as f64 * h;
                    simplex_f(k, b, &[p0, p1, (1.0 - p0 - p1).max(0.0)])
                };
                let (mut lo, mut hi) = (0usize, rest);
                while hi - lo > 2 {
                    let m1 = lo + (hi - lo) / 3;
                    let m2 = hi - (hi - lo) / 3;
                    if at(m1) < at(m2) {
                        lo = m1 + 1;
                    } else {
                        hi = m2;
                    }
                }
                for j in lo..=hi {
                    best = best.max(at(j));
                }
            }
            best
        }
        _ => panic!("grid oracle supports up to three actions"),
    }
}
