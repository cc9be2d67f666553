use std::fs;
use std::path::Path;

use valueprior::io;
use valueprior::baselines::mle_estimate;
use valueprior::{count_tensor, FiniteHorizonMdp, Policy};
use valueprior_experiments::cli::run;
use valueprior_experiments::read_results;

fn run_args(args: &[&str]) -> i32 {
    run(std::iter::once("valueprior").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = r#"
[sweep]
alphas = [0.0, 1.0]
dataset_sizes = [2, 5]
num_mazes = 2
master_seed = 11

[maze]
grid_side = 6
horizon = 12
"#;

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    assert_eq!(run_args(&["sweep", "--out", s(&out)]), 1);
    assert_eq!(run_args(&["no-such-command"]), 1);
    assert_eq!(run_args(&["--help"]), 0);
    let missing = dir.path().join("missing.toml");
    assert_eq!(run_args(&["sweep", "--config", s(&missing), "--out", s(&out)]), 2);
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[sweep]\nbogus = 1\n").unwrap();
    assert_eq!(run_args(&["sweep", "--config", s(&bad), "--out", s(&out)]), 1);
}

#[test]
fn gen_maze_sample_estimate_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let mdp_path = dir.path().join("maze.mdp");
    assert_eq!(run_args(&["gen-maze", "--out", s(&mdp_path), "--seed", "3"]), 0);
    let map = fs::read_to_string(dir.path().join("maze.mdp.map")).unwrap();
    assert_eq!(map.lines().filter(|l| !l.is_empty()).count(), 10);
    let mdp: FiniteHorizonMdp<f64> = io::read_mdp(&fs::read_to_string(&mdp_path).unwrap()).unwrap();
    assert_eq!(mdp.horizon(), 30);

    let data_path = dir.path().join("demo.traj");
    assert_eq!(
        run_args(&["sample", "--mdp", s(&mdp_path), "--trajectories", "4", "--seed", "1", "--out", s(&data_path)]),
        0
    );
    let data = io::read_trajectories(&fs::read_to_string(&data_path).unwrap(), mdp.dims()).unwrap();
    assert_eq!(data.len(), 4);

    let report = dir.path().join("report.txt");
    let args = ["estimate", "--mdp", s(&mdp_path), "--data", s(&data_path), "--alpha", "0", "--out", s(&report)];
    assert_eq!(run_args(&args), 0);
    let text = fs::read_to_string(&report).unwrap();
    let policy_text: String = text.lines().filter(|l| l.starts_with("PI")).map(|l| format!("{l}\n")).collect();
    let est: Policy<f64> = io::read_policy(&policy_text, mdp.dims()).unwrap();
    let mle: Policy<f64> = mle_estimate(&count_tensor(&data, mdp.dims()).unwrap());
    for (x, y) in est.as_slice().iter().zip(mle.as_slice()) {
        assert!((x - y).abs() < 1e-12, "{x} vs {y}");
    }
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let one = dir.path().join("one.csv");
    let two = dir.path().join("two.csv");
    assert_eq!(run_args(&["sweep", "--config", s(&cfg), "--out", s(&one), "--threads", "1"]), 0);
    assert_eq!(run_args(&["sweep", "--config", s(&cfg), "--out", s(&two), "--threads", "2"]), 0);
    let a = fs::read(&one).unwrap();
    assert_eq!(a, fs::read(&two).unwrap());
    let rows = read_results(&fs::read_to_string(&one).unwrap()).unwrap();
    // 2 mazes x 2 sizes x 2 alphas, value prior only.
    assert_eq!(rows.len(), 2 * 2 * 2);
    assert!(rows.iter().all(|r| r.rms.is_finite() && r.rms >= 0.0));
}

#[test]
fn unperturbed_sensitivity_mentor_is_optimal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fig3.toml");
    fs::write(
        &cfg,
        format!("{SMALL}\n[[perturb]]\ndelta = 0.0\nsigma2 = 0.0\nnoise_mean = 0.0\n\n[[perturb]]\ndelta = 0.2\nsigma2 = 0.0\nnoise_mean = 0.0\n"),
    )
    .unwrap();
    let out = dir.path().join("fig3.csv");
    let args = ["sweep", "--config", s(&cfg), "--scenario", "fig3-sensitivity", "--trajectories", "2", "--out", s(&out)];
    assert_eq!(run_args(&args), 0);
    let rows = read_results(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(!rows.is_empty());
    for r in &rows {
        assert!(r.mentor_value_fraction <= 1.0 + 1e-9);
    }
    // Units alternate (delta 0, delta 0.2) within each maze.
    let unperturbed: Vec<_> = rows.iter().filter(|r| (r.mentor_value_fraction - 1.0).abs() < 1e-9).collect();
    assert_eq!(unperturbed.len() * 2, rows.len());
}

#[test]
fn example_config_parses() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/example-sweep.toml");
    let cfg = valueprior_experiments::ExperimentConfig::from_toml(&fs::read_to_string(path).unwrap()).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.num_mazes, 3);
}
