//! End-to-end behaviour of the campaign commands on tiny schedules.

use std::fs;
use std::path::Path;
use std::process::Command;

use districtbench_cli::benchmark::{run_dir, ABSOLUTE_EVAL, BEST_CHECKPOINT, FINAL_CHECKPOINT};
use districtbench_cli::config::{AlgorithmEntry, CampaignConfig, DatasetSource, SweepConfig};
use districtbench_cli::evaluate::{cmd_evaluate, EvaluateOptions, Subject};
use districtbench_cli::records::{collect_records, RunManifest, RunStatus, RECORDS_FILE};
use districtbench_cli::report::{self, cmd_report};
use districtbench_cli::{cmd_benchmark, cmd_sweep};
use districtbench_core::control::{AlgorithmConfig, AlgorithmSpec, PpoConfig, Schedule};
use districtbench_core::data::SyntheticSpec;
use districtbench_core::episode::EvalSummary;
use districtbench_core::stats::Block;

fn tiny_schedule() -> Schedule {
    Schedule {
        total_steps: 256,
        eval_interval: 128,
        eval_episodes: 2,
        episode_len: 48,
        seed: 0,
    }
}

fn tiny_ppo() -> AlgorithmSpec {
    AlgorithmSpec::new(
        "ippo",
        AlgorithmConfig::Ippo(PpoConfig {
            actor_hidden: (8, 8),
            critic_hidden: (8, 8),
            rollout_len: 32,
            n_envs: 2,
            ..AlgorithmSpec::ppo_desk()
        }),
    )
}

fn tiny_campaign(out: &Path, algorithms: Vec<AlgorithmEntry>) -> CampaignConfig {
    CampaignConfig {
        output_dir: out.to_path_buf(),
        dataset: DatasetSource::Synthetic {
            synthetic: SyntheticSpec {
                seed: 3,
                n_buildings: 2,
                horizon: 24 * 40,
            },
        },
        algorithms,
        seeds: vec![1, 2],
        schedule: Some(tiny_schedule()),
        workers: 1,
        ..CampaignConfig::default()
    }
}

fn learner_and_rbc() -> Vec<AlgorithmEntry> {
    vec![AlgorithmEntry::Spec(tiny_ppo()), AlgorithmEntry::Preset("rbc".into())]
}

#[test]
fn benchmark_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let a = tiny_campaign(&dir.path().join("a"), learner_and_rbc());
    let b = tiny_campaign(&dir.path().join("b"), learner_and_rbc());
    assert!(cmd_benchmark(&a, None).unwrap().all_completed());
    assert!(cmd_benchmark(&b, None).unwrap().all_completed());
    for alg in ["ippo", "rbc"] {
        for seed in [1, 2] {
            let ra = fs::read(run_dir(&a.output_dir, alg, seed).join(RECORDS_FILE)).unwrap();
            let rb = fs::read(run_dir(&b.output_dir, alg, seed).join(RECORDS_FILE)).unwrap();
            assert!(!ra.is_empty());
            assert_eq!(ra, rb, "{alg} seed {seed} differs between reruns");
        }
    }
}

#[test]
fn run_artifacts_and_absolute_block() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_campaign(dir.path(), learner_and_rbc());
    cmd_benchmark(&cfg, None).unwrap();

    let ippo = run_dir(dir.path(), "ippo", 1);
    assert!(ippo.join(BEST_CHECKPOINT).is_file() && ippo.join(FINAL_CHECKPOINT).is_file());
    let rbc = run_dir(dir.path(), "rbc", 1);
    assert!(!rbc.join(BEST_CHECKPOINT).exists(), "baselines have no checkpoints");

    let abs: EvalSummary = serde_json::from_str(&fs::read_to_string(ippo.join(ABSOLUTE_EVAL)).unwrap()).unwrap();
    assert_eq!(abs.episodes, 10 * tiny_schedule().eval_episodes);

    let manifest = RunManifest::read(&ippo).unwrap();
    assert_eq!(manifest.status, RunStatus::Completed);
    let best = manifest.best_eval_point.unwrap();
    let records = collect_records(dir.path()).unwrap();
    let absolute: Vec<_> = records
        .iter()
        .filter(|r| r.block == Block::Absolute && r.algorithm == "ippo" && r.seed == 1)
        .collect();
    assert!(!absolute.is_empty());
    assert!(absolute.iter().all(|r| r.eval_point == best));
    let points: Vec<u64> = tiny_schedule().eval_points();
    assert!(points.contains(&best));
}

#[test]
fn failed_cell_does_not_stop_the_campaign() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_campaign(dir.path(), vec![AlgorithmEntry::Preset("rbc".into())]);
    // A regular file where a run directory should go.
    let blocked = run_dir(dir.path(), "rbc", 2);
    fs::create_dir_all(blocked.parent().unwrap()).unwrap();
    fs::write(&blocked, "not a directory").unwrap();

    let manifest = cmd_benchmark(&cfg, None).unwrap();
    assert!(!manifest.all_completed());
    let by_seed = |s: u64| manifest.cells.iter().find(|c| c.seed == s).unwrap();
    assert_eq!(by_seed(1).status, RunStatus::Completed);
    assert_eq!(by_seed(2).status, RunStatus::Failed);
    assert!(by_seed(2).error.is_some());
    assert!(dir.path().join("manifest.json").is_file());
}

#[test]
fn single_algorithm_report_emits_notice() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_campaign(&dir.path().join("runs"), vec![AlgorithmEntry::Preset("rbc".into())]);
    cmd_benchmark(&cfg, None).unwrap();
    let out = dir.path().join("report");
    let summary = cmd_report(&cfg.output_dir, &out, 0).unwrap();
    assert_eq!(summary.algorithms, vec!["rbc".to_string()]);
    assert!(summary.notices.iter().any(|n| n.contains("probability of improvement")));
    assert!(report::REPORT_FILES.iter().all(|f| out.join(f).is_file()));
    let pairs = fs::read_to_string(out.join(report::IMPROVEMENT)).unwrap();
    assert_eq!(pairs.lines().count(), 1, "header only");
}

#[test]
fn report_refuses_empty_directory() {
    let dir = tempfile::tempdir().unwrap();
    assert!(cmd_report(dir.path(), &dir.path().join("out"), 0).is_err());
}

#[test]
fn sweep_selects_and_benchmark_uses_selection() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_campaign(dir.path(), vec![AlgorithmEntry::Spec(tiny_ppo())]);
    cfg.sweep = SweepConfig {
        seeds: vec![1, 2],
        configurations: 2,
        schedule: Some(Schedule {
            total_steps: 128,
            eval_interval: 128,
            eval_episodes: 1,
            episode_len: 48,
            seed: 0,
        }),
        ..SweepConfig::default()
    };
    let selections = cmd_sweep(&cfg).unwrap();
    assert_eq!(selections.len(), 1);
    let sel = &selections[0];
    assert_eq!(sel.candidates.len(), 2);
    assert!(sel.candidates.iter().any(|c| c.config_hash == sel.config_hash));
    let best = sel.candidates.iter().map(|c| c.mean_score.unwrap()).fold(f64::INFINITY, f64::min);
    assert_eq!(sel.mean_score, best);

    cfg.seeds = vec![5];
    let manifest = cmd_benchmark(&cfg, Some(&dir.path().join("sweep"))).unwrap();
    assert_eq!(manifest.algorithms[0].config_hash(), sel.config_hash);
}

#[test]
fn evaluate_baseline_with_importance() {
    let dir = tempfile::tempdir().unwrap();
    let mut opts = EvaluateOptions::new(
        Subject::Baseline("rbc".into()),
        DatasetSource::Synthetic {
            synthetic: SyntheticSpec {
                seed: 4,
                n_buildings: 3,
                horizon: 24 * 20,
            },
        },
        dir.path().to_path_buf(),
    );
    opts.episodes = 2;
    opts.episode_len = 48;
    opts.importance_horizon = Some(24);
    let report = cmd_evaluate(&opts).unwrap();
    let imp = report.importance.unwrap();
    assert_eq!(imp.scores.len(), 3);
    assert_eq!(imp.horizon, 24);
    for f in ["evaluation.json", "kpis.csv", "importance_scores.csv", "importance_reward_histogram.csv"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
}

#[test]
fn binary_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_districtbench");
    let data = dir.path().join("data");
    let ok = Command::new(bin)
        .args(["synth-data", "--out", data.to_str().unwrap(), "--buildings", "2", "--hours", "960"])
        .status()
        .unwrap();
    assert!(ok.success());

    let config = dir.path().join("campaign.toml");
    fs::write(
        &config,
        format!(
            r#"
output_dir = "{}"
algorithms = ["rbc", "random"]
seeds = [1, 2]
workers = 1

[dataset]
path = "{}"

[schedule]
total_steps = 96
eval_interval = 48
eval_episodes = 1
episode_len = 48
seed = 0
"#,
            dir.path().join("out").display(),
            data.display()
        ),
    )
    .unwrap();
    let ok = Command::new(bin)
        .args(["benchmark", "--config", config.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(ok.success());

    let report_dir = dir.path().join("report");
    let out = Command::new(bin)
        .args(["report", "--records", dir.path().join("out").to_str().unwrap(), "--out", report_dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(report_dir.join(report::RANKS).is_file());

    let bad = Command::new(bin).args(["evaluate", "--out", dir.path().to_str().unwrap()]).output().unwrap();
    assert!(!bad.status.success(), "a subject is required");
}

#[test]
fn sample_config_parses() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/desk.toml");
    let cfg = CampaignConfig::from_path(&path).unwrap();
    assert_eq!(cfg.seeds.len(), 5);
    assert_eq!(cfg.algorithm_specs().unwrap().len(), 3);
    assert_eq!(cfg.sweep.configurations, 21);
}
