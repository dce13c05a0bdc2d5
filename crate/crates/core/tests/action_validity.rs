//! Every action a trained policy emits lies in [0, 1]^3, whatever the input.

use std::sync::{Arc, OnceLock};

use districtbench_core::control::{
    AlgorithmConfig, AlgorithmSpec, Mode, Policy, PpoConfig, SacConfig, Schedule, train_run,
};
use districtbench_core::data::generate_synthetic_dataset;
use districtbench_core::episode::EnvSpec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const AGENTS: usize = 3;

fn trained() -> &'static [Policy] {
    static POLICIES: OnceLock<Vec<Policy>> = OnceLock::new();
    POLICIES.get_or_init(|| {
        let env = EnvSpec::new(Arc::new(generate_synthetic_dataset(11, AGENTS, 24 * 20).unwrap()));
        let schedule = Schedule {
            total_steps: 192,
            eval_interval: 192,
            eval_episodes: 1,
            episode_len: 48,
            seed: 3,
        };
        let ppo = PpoConfig {
            actor_hidden: (8, 8),
            critic_hidden: (8, 8),
            rollout_len: 32,
            n_envs: 2,
            ..AlgorithmSpec::ppo_desk()
        };
        let sac = SacConfig {
            actor_hidden: (8, 8),
            critic_hidden: (8, 8),
            batch_size: 16,
            learner_start: 64,
            ..AlgorithmSpec::sac_desk()
        };
        let specs = [
            AlgorithmSpec::new("ippo", AlgorithmConfig::Ippo(ppo.clone())),
            AlgorithmSpec::new("mappo", AlgorithmConfig::Mappo(ppo)).with_history(2),
            AlgorithmSpec {
                shared: false,
                ..AlgorithmSpec::new("isac", AlgorithmConfig::Isac(sac))
            },
        ];
        specs
            .iter()
            .map(|s| train_run(s, &env, &schedule, &mut |_| {}).unwrap().checkpoints.pop().unwrap().policy)
            .collect()
    })
}

fn valid(a: f64) -> bool {
    (0.0..=1.0).contains(&a)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn actions_stay_in_unit_cube(
        which in 0usize..3,
        stochastic in any::<bool>(),
        scale in prop_oneof![Just(1.0), Just(1e3), Just(1e8)],
        raw in prop::collection::vec(-1.0f64..1.0, 1..=256),
        seed in any::<u64>(),
    ) {
        let policy = &trained()[which];
        let dim = policy.obs_dim * policy.history;
        let inputs: Vec<Vec<f64>> = (0..AGENTS)
            .map(|i| (0..dim).map(|k| scale * raw[(i * dim + k) % raw.len()]).collect())
            .collect();
        let mode = if stochastic { Mode::Stochastic } else { Mode::Deterministic };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actions = policy.act_inputs(&inputs, mode, &mut rng).unwrap();
        prop_assert_eq!(actions.len(), AGENTS);
        for a in actions {
            prop_assert!(a.to_array().iter().all(|v| valid(*v)), "{:?}", a);
        }
    }
}
