use proptest::prelude::*;
use valueprior::maze::{blind_maze, generate_maze, mentor_policy, perturb_policy, rms_error, MazeSpec, PerturbSpec};
use valueprior::mdp::{action_values, occupancy_probabilities, optimal_policy, policy_value};
use valueprior::TieBreak;

#[test]
fn generated_mazes_validate() {
    for seed in 0..100 {
        let spec = MazeSpec { seed, ..MazeSpec::desk() };
        let maze = generate_maze::<f64>(&spec).unwrap();
        maze.mdp.validate().unwrap();
        assert_eq!(maze.obstacles.len(), (0.15f64 * 98.0).round() as usize);
        assert!(!maze.obstacles.contains(&maze.start) && !maze.obstacles.contains(&maze.goal));
        let row = maze.mdp.transition_row(0, maze.goal, 3);
        assert_eq!(row, &[(maze.goal, 1.0)]);
    }
}

#[test]
fn obstacle_magnitudes_average_two_thirds_of_goal() {
    let mut all = Vec::new();
    for seed in 0..40 {
        let maze = generate_maze::<f64>(&MazeSpec { seed, ..MazeSpec::desk() }).unwrap();
        all.extend(maze.obstacles.iter().map(|&c| -maze.mdp.rewards()[c]));
    }
    assert!(all.iter().all(|&m| (100.0 / 3.0..=100.0).contains(&m)));
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    assert!((mean - 200.0 / 3.0).abs() < 0.1 * 200.0 / 3.0, "mean magnitude {mean}");
}

#[test]
fn slip_spreads_over_in_grid_neighbours() {
    let maze = generate_maze::<f64>(&MazeSpec { seed: 3, ..MazeSpec::desk() }).unwrap();
    // interior cell (2, 2) = 22 moving east lands on 23 with 0.7 plus 0.3/4 per neighbour
    let row = maze.mdp.transition_row(0, 22, 1);
    let p = |c: usize| row.iter().find(|e| e.0 == c).map_or(0.0, |e| e.1);
    assert!((p(23) - (0.7 + 0.075)).abs() < 1e-12);
    for c in [12, 32, 21] {
        assert!((p(c) - 0.075).abs() < 1e-12);
    }
    // twins behave identically
    assert_eq!(maze.mdp.transition_row(0, 22, 5), row);
}

#[test]
fn mentor_reaches_goal_and_is_greedy() {
    for seed in 0..5 {
        let maze = generate_maze::<f64>(&MazeSpec { seed, ..MazeSpec::desk() }).unwrap();
        let mentor = mentor_policy(&maze.mdp, 1.0, seed);
        let occ = occupancy_probabilities(&maze.mdp, &mentor).unwrap();
        assert!(occ.get(30, maze.goal) > 0.5, "goal occupancy {}", occ.get(30, maze.goal));
        let (_, values) = policy_value(&maze.mdp, &mentor, 1.0).unwrap();
        for t in 0..30 {
            for s in 0..100 {
                let q = action_values(&maze.mdp, &values, 1.0, t, s);
                let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let a = mentor.modal_action(t, s);
                assert_eq!(mentor.get(t, s, a), 1.0);
                assert!(q[a] >= best - 1e-9);
            }
        }
    }
}

#[test]
fn blinded_optimum_is_no_better_on_true_maze() {
    for seed in 0..5 {
        let maze = generate_maze::<f64>(&MazeSpec { seed, ..MazeSpec::desk() }).unwrap();
        let blind = blind_maze(&maze.mdp);
        assert!(blind.rewards().iter().all(|&r| r >= 0.0));
        let (pi_blind, _) = optimal_policy(&blind, 1.0, TieBreak::LowestIndex);
        let (pi_true, _) = optimal_policy(&maze.mdp, 1.0, TieBreak::LowestIndex);
        let v_blind = policy_value(&maze.mdp, &pi_blind, 1.0).unwrap().0;
        let v_true = policy_value(&maze.mdp, &pi_true, 1.0).unwrap().0;
        assert!(v_blind <= v_true + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn perturbed_rows_are_distributions(seed in any::<u64>(), delta in 0.0f64..=1.0, sigma2 in 0.0f64..0.5, mean in -0.5f64..0.5) {
        let maze = generate_maze::<f64>(&MazeSpec { seed: seed % 7, grid_side: 4, horizon: 5, ..MazeSpec::desk() }).unwrap();
        let mentor = mentor_policy(&maze.mdp, 1.0, seed);
        let spec = PerturbSpec { delta, sigma2, noise_mean: mean, seed };
        let (noisy, _) = perturb_policy(&mentor, &spec).unwrap();
        noisy.validate().unwrap();
        prop_assert!(rms_error(&noisy, &mentor).unwrap() <= 1.0);
        let (again, _) = perturb_policy(&mentor, &spec).unwrap();
        prop_assert_eq!(noisy, again);
    }

    #[test]
    fn rms_is_a_metric(seed in any::<u64>()) {
        let maze = generate_maze::<f64>(&MazeSpec { seed, grid_side: 3, horizon: 4, ..MazeSpec::desk() }).unwrap();
        let a = mentor_policy(&maze.mdp, 1.0, seed);
        let b = perturb_policy(&a, &PerturbSpec { delta: 0.5, sigma2: 0.1, seed, ..Default::default() }).unwrap().0;
        let c = perturb_policy(&a, &PerturbSpec { delta: 0.2, sigma2: 0.3, seed: seed ^ 1, ..Default::default() }).unwrap().0;
        prop_assert_eq!(rms_error(&a, &a).unwrap(), 0.0);
        prop_assert!((rms_error(&a, &b).unwrap() - rms_error(&b, &a).unwrap()).abs() < 1e-15);
        prop_assert!(rms_error(&a, &c).unwrap() <= rms_error(&a, &b).unwrap() + rms_error(&b, &c).unwrap() + 1e-12);
    }
}
