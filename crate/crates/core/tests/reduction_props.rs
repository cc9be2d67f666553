mod common;

use common::*;
use proptest::prelude::*;
use valueprior::estimator::forward_multipliers;
use valueprior::mdp::{policy_value, sample_trajectories};
use valueprior::reduction::{
    build_augmented_mdp, default_sink_penalty, extract_policy_and_transitions, lift_dataset, sink_action_mass,
    AugmentedMaps,
};
use valueprior::{alternating_maximize, count_tensor, EstimatorConfig, FiniteHorizonMdp, Policy, TrajectoryDataset};

fn setup(seed: u64, n_s: usize, n_a: usize, h: usize, m: usize) -> (FiniteHorizonMdp<f64>, TrajectoryDataset) {
    let mut r = rng(seed);
    let mdp = random_mdp(&mut r, n_s, n_a, h);
    let pi = random_policy(&mut r, mdp.dims());
    let data = sample_trajectories(&mdp, &pi, m, seed ^ 0xabc);
    (mdp, data)
}

/// Transition counts tallied directly from trajectories: `[t][s][a][s']`.
fn transition_counts(data: &TrajectoryDataset, n_s: usize, n_a: usize, h: usize) -> Vec<u64> {
    let mut out = vec![0u64; h * n_s * n_a * n_s];
    for traj in data.trajectories() {
        for t in 0..h {
            let (s, a) = traj[t];
            let next = traj[t + 1].0;
            out[((t * n_s + s) * n_a + a) * n_s + next] += 1;
        }
    }
    out
}

#[test]
fn lifted_odd_epochs_count_transitions() {
    let (n_s, n_a, h) = (4, 3, 3);
    let (_, data) = setup(1, n_s, n_a, h, 200);
    let maps = AugmentedMaps::new(n_s, n_a);
    let lifted = lift_dataset(&data, &maps).unwrap();
    let counts = count_tensor(&lifted, maps.aug_dims(h)).unwrap();
    let direct = transition_counts(&data, n_s, n_a, h);
    let orig = count_tensor(&data, data.dims()).unwrap();
    for t in 0..h {
        for s in 0..n_s {
            for a in 0..n_a {
                for s2 in 0..n_s {
                    let k = counts.get(2 * t + 1, maps.pair(s, a), maps.land_action(s2));
                    assert_eq!(k, direct[((t * n_s + s) * n_a + a) * n_s + s2]);
                }
            }
        }
    }
    for t in 0..=h {
        for s in 0..n_s {
            for a in 0..n_a {
                assert_eq!(counts.get(2 * t, maps.original(s), maps.move_action(a)), orig.get(t, s, a));
            }
        }
    }
}

#[test]
fn zero_alpha_recovers_empirical_frequencies() {
    for seed in 0..10 {
        let (n_s, n_a, h) = (4, 3, 3);
        let (mdp, data) = setup(100 + seed, n_s, n_a, h, 30);
        let aug = build_augmented_mdp(n_a, mdp.rewards(), mdp.initial_dist(), h, default_sink_penalty(mdp.rewards()))
            .unwrap();
        let lifted = lift_dataset(&data, &aug.maps).unwrap();
        let counts = count_tensor(&lifted, aug.base.dims()).unwrap();
        let cfg = EstimatorConfig { alpha: 0.0, ..EstimatorConfig::default() };
        let res = alternating_maximize(&aug.base, &counts, &cfg).unwrap();
        let ex = extract_policy_and_transitions(&res.policy, &aug.maps).unwrap();
        let direct = transition_counts(&data, n_s, n_a, h);
        for t in 0..h {
            for s in 0..n_s {
                for a in 0..n_a {
                    let cell = &direct[((t * n_s + s) * n_a + a) * n_s..][..n_s];
                    let total: u64 = cell.iter().sum();
                    if total == 0 {
                        continue;
                    }
                    let row = ex.transitions[t].row(s, a);
                    for s2 in 0..n_s {
                        let est = row.iter().find(|e| e.0 == s2).map_or(0.0, |e| e.1);
                        let freq = cell[s2] as f64 / total as f64;
                        assert!((est - freq).abs() <= 1e-12, "t={t} s={s} a={a} s'={s2}: {est} vs {freq}");
                    }
                }
            }
        }
        let orig = count_tensor(&data, data.dims()).unwrap();
        for t in 0..=h {
            for s in 0..n_s {
                let k = orig.row(t, s);
                let total: u64 = k.iter().sum();
                if total == 0 {
                    continue;
                }
                for a in 0..n_a {
                    assert!((ex.policy.get(t, s, a) - k[a] as f64 / total as f64).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn positive_alpha_avoids_sink() {
    for seed in 0..10 {
        let (n_s, n_a, h) = (3, 2, 3);
        let (mdp, data) = setup(200 + seed, n_s, n_a, h, 15);
        let aug = build_augmented_mdp(n_a, mdp.rewards(), mdp.initial_dist(), h, default_sink_penalty(mdp.rewards()))
            .unwrap();
        let lifted = lift_dataset(&data, &aug.maps).unwrap();
        let counts = count_tensor(&lifted, aug.base.dims()).unwrap();
        for alpha in [0.1, 1.0, 10.0] {
            let cfg = EstimatorConfig { alpha, ..EstimatorConfig::default() };
            let res = alternating_maximize(&aug.base, &counts, &cfg).unwrap();
            let occ = forward_multipliers(&aug.base, &res.policy, 1.0, 1.0, 2 * h).unwrap();
            for (t, row) in occ.iter().enumerate().take(2 * h) {
                for (st, &p) in row.iter().enumerate() {
                    if p > 0.0 {
                        let mass = sink_action_mass(&res.policy, &aug.maps, t, st);
                        assert!(mass < 1e-6, "alpha={alpha} t={t} state={st}: {mass}");
                    }
                }
            }
        }
    }
}

#[test]
fn augmented_value_of_lifted_policy_matches_original() {
    let mut r = rng(300);
    let (n_s, n_a, h) = (4, 2, 4);
    let mdp = random_mdp(&mut r, n_s, n_a, h);
    let pi = random_policy(&mut r, mdp.dims());
    let aug = build_augmented_mdp(n_a, mdp.rewards(), mdp.initial_dist(), h, 1e6).unwrap();
    let maps = aug.maps;
    let lifted = Policy::from_fn(aug.base.dims(), |t, st, ac| {
        let uniform = 1.0 / maps.num_aug_actions() as f64;
        if t % 2 == 0 {
            if st < n_s && ac < n_a {
                pi.get(t / 2, st, ac)
            } else if st < n_s {
                0.0
            } else {
                uniform
            }
        } else if (n_s..n_s + n_s * n_a).contains(&st) {
            let (s, a) = ((st - n_s) / n_a, (st - n_s) % n_a);
            if ac >= n_a {
                let s2 = ac - n_a;
                mdp.transition_row(t / 2, s, a).iter().find(|e| e.0 == s2).map_or(0.0, |e| e.1)
            } else {
                0.0
            }
        } else {
            uniform
        }
    });
    lifted.validate().unwrap();
    let (v, _) = policy_value(&mdp, &pi, 1.0).unwrap();
    let (v_aug, _) = policy_value(&aug.base, &lifted, 1.0).unwrap();
    assert!((v - v_aug).abs() < 1e-10, "{v} vs {v_aug}");
    let ex = extract_policy_and_transitions(&lifted, &maps).unwrap();
    assert!(ex.max_sink_mass < 1e-15);
    let rebuilt = ex.to_mdp(mdp.rewards().to_vec(), mdp.initial_dist().to_vec()).unwrap();
    assert!((policy_value(&rebuilt, &ex.policy, 1.0).unwrap().0 - v).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn maps_are_bijective(n_s in 1usize..6, n_a in 1usize..5) {
        let maps = AugmentedMaps::new(n_s, n_a);
        let mut seen = vec![false; maps.num_aug_states()];
        for s in 0..n_s {
            seen[maps.original(s)] = true;
            for a in 0..n_a {
                prop_assert!(!seen[maps.pair(s, a)]);
                seen[maps.pair(s, a)] = true;
            }
        }
        prop_assert!(!seen[maps.sink()]);
        seen[maps.sink()] = true;
        prop_assert!(seen.iter().all(|&x| x));
        for id in 0..maps.num_aug_states() {
            prop_assert!(maps.decode_state(id).is_some());
        }
        prop_assert!(maps.decode_state(maps.num_aug_states()).is_none());
    }

    #[test]
    fn lifted_trajectories_have_doubled_horizon(seed in any::<u64>(), h in 0usize..5) {
        let (_, data) = setup(seed, 3, 2, h, 5);
        let maps = AugmentedMaps::new(3, 2);
        let lifted = lift_dataset(&data, &maps).unwrap();
        prop_assert!(lifted.trajectories().iter().all(|t| t.len() == 2 * h + 1));
        prop_assert_eq!(lifted.dims(), maps.aug_dims(h));
    }
}
