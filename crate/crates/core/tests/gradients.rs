use districtbench_core::control::gradcheck::{check_gradient, FD_STEP};
use districtbench_core::control::{
    ppo_actor_loss, sac_actor_loss, temperature_loss, value_loss, Mlp, PpoActor, SacActor,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const COORDS: usize = 100;
const TOL: f64 = 1e-4;

fn normal(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

fn ppo_instance(seed: u64) -> (PpoActor, Array2<f64>, Array2<f64>, Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut actor = PpoActor::new(5, (8, 6), -0.4, &mut rng);
    // Larger output weights so the loss is not dominated by the entropy term.
    for p in actor.net.params_mut() {
        *p *= 3.0;
    }
    let x = normal(&mut rng, 16, 5);
    let mean = actor.mean(x.view()).unwrap();
    let u = &mean + &(normal(&mut rng, 16, 3) * 0.6);
    let logp = actor.log_prob(&mean, &u);
    let old: Vec<f64> = logp.iter().map(|l| l + rng.random_range(-0.3..0.3)).collect();
    let adv: Vec<f64> = (0..16).map(|_| rng.sample(StandardNormal)).collect();
    (actor, x, u, old, adv)
}

#[test]
fn ppo_actor_network_gradient() {
    for seed in 0..3 {
        let (actor, x, u, old, adv) = ppo_instance(seed);
        let l = ppo_actor_loss(&actor, x.view(), u.view(), &old, &adv, 0.2, 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let c = check_gradient(actor.net.params(), &l.grad_net, COORDS, FD_STEP, &mut rng, |p| {
            let mut a = actor.clone();
            a.net.params_mut().copy_from_slice(p);
            ppo_actor_loss(&a, x.view(), u.view(), &old, &adv, 0.2, 0.01).unwrap().loss
        });
        assert_eq!(c.coords.len(), COORDS);
        assert!(c.max_rel_error < TOL, "seed {seed}: {}", c.max_rel_error);
    }
}

#[test]
fn ppo_actor_log_std_gradient() {
    let (actor, x, u, old, adv) = ppo_instance(7);
    let l = ppo_actor_loss(&actor, x.view(), u.view(), &old, &adv, 0.2, 0.01).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let c = check_gradient(&actor.log_std, &l.grad_log_std, 3, FD_STEP, &mut rng, |p| {
        let mut a = actor.clone();
        a.log_std.copy_from_slice(p);
        ppo_actor_loss(&a, x.view(), u.view(), &old, &adv, 0.2, 0.01).unwrap().loss
    });
    assert!(c.max_rel_error < TOL, "{}", c.max_rel_error);
}

#[test]
fn critic_gradient() {
    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Mlp::new(9, (8, 8), 1, 1.0, &mut rng);
        let x = normal(&mut rng, 20, 9);
        let targets: Vec<f64> = (0..20).map(|_| rng.sample(StandardNormal)).collect();
        let (_, grad) = value_loss(&net, x.view(), &targets).unwrap();
        let c = check_gradient(net.params(), &grad, COORDS, FD_STEP, &mut rng, |p| {
            let mut n = net.clone();
            n.params_mut().copy_from_slice(p);
            value_loss(&n, x.view(), &targets).unwrap().0
        });
        assert!(c.max_rel_error < TOL, "seed {seed}: {}", c.max_rel_error);
    }
}

#[test]
fn sac_actor_gradient() {
    for seed in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actor = SacActor::new(6, (8, 8), -5.0, 2.0, &mut rng);
        let q1 = Mlp::new(9, (8, 8), 1, 1.0, &mut rng);
        let q2 = Mlp::new(9, (8, 8), 1, 1.0, &mut rng);
        let obs = normal(&mut rng, 12, 6);
        let eps = normal(&mut rng, 12, 3);
        let alpha = 0.2;
        let l = sac_actor_loss(&actor, &q1, &q2, obs.view(), eps.view(), alpha).unwrap();
        let c = check_gradient(actor.net.params(), &l.grad, COORDS, FD_STEP, &mut rng, |p| {
            let mut a = actor.clone();
            a.net.params_mut().copy_from_slice(p);
            sac_actor_loss(&a, &q1, &q2, obs.view(), eps.view(), alpha).unwrap().loss
        });
        assert!(c.max_rel_error < TOL, "seed {seed}: {}", c.max_rel_error);
    }
}

#[test]
fn temperature_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..COORDS {
        let log_alpha: f64 = rng.random_range(-3.0..1.0);
        let logp: f64 = rng.random_range(-6.0..3.0);
        let (_, g) = temperature_loss(log_alpha, logp, -3.0);
        let c = check_gradient(&[log_alpha], &[g], 1, FD_STEP, &mut rng, |p| temperature_loss(p[0], logp, -3.0).0);
        assert!(c.max_rel_error < TOL, "{}", c.max_rel_error);
    }
}
