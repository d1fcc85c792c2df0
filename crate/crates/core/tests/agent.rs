use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regmcts_core::agent::{
    run_episode_loop, softmax_kl, softmax_kl_gradient, AgentConfig, TabularSoftmaxPrior,
    VariantFlags,
};
use regmcts_core::env::ChainMdp;
use regmcts_core::search::SearchConfig;
use regmcts_core::simplex::ActionDistribution;

fn random_pair(rng: &mut ChaCha8Rng) -> (ActionDistribution, Vec<f64>) {
    let k = rng.random_range(2..=12);
    let target =
        ActionDistribution::from_weights((0..k).map(|_| rng.random_range(0.01..1.0)).collect())
            .unwrap();
    let logits = (0..k).map(|_| rng.random_range(-3.0..3.0)).collect();
    (target, logits)
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let h = 1e-5;
    for _ in 0..100 {
        let (target, logits) = random_pair(&mut rng);
        let grad = softmax_kl_gradient(&target, &logits);
        for i in 0..logits.len() {
            let mut up = logits.clone();
            let mut down = logits.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (softmax_kl(&target, &up).unwrap() - softmax_kl(&target, &down).unwrap())
                / (2.0 * h);
            let scale = grad[i].abs().max(1e-3);
            assert!(
                (fd - grad[i]).abs() / scale < 1e-5,
                "i={i} fd={fd} analytic={}",
                grad[i]
            );
        }
    }
}

#[test]
fn learning_steps_shrink_the_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..20 {
        let (target, logits) = random_pair(&mut rng);
        let mut prior = TabularSoftmaxPrior::new(target.len(), 0.5).unwrap();
        prior.set_logits(7, logits).unwrap();
        let first = softmax_kl(&target, &prior.logits(7)).unwrap();
        let mut last = f64::INFINITY;
        for _ in 0..500 {
            let loss = prior.learn_step(7, &target).unwrap();
            assert!(loss <= last + 1e-15);
            last = loss;
        }
        assert!(softmax_kl(&target, &prior.logits(7)).unwrap() < 0.1 * first);
        // other states are untouched
        assert_eq!(prior.prior(8), ActionDistribution::uniform(target.len()));
    }
}

#[test]
fn variant_names_round_trip() {
    for flags in VariantFlags::NAMED {
        assert_eq!(flags.name().parse::<VariantFlags>().unwrap(), flags);
    }
    assert_eq!(
        "search+act".parse::<VariantFlags>().unwrap(),
        "act+search".parse().unwrap()
    );
    assert!("greedy".parse::<VariantFlags>().is_err());
}

#[test]
fn episode_loop_is_deterministic_and_learns() {
    let env = ChainMdp::new(6, 0.95, true).unwrap();
    for flags in VariantFlags::NAMED {
        let config = AgentConfig {
            flags,
            search: SearchConfig {
                n_sim: 8,
                ..SearchConfig::default()
            },
            ..AgentConfig::default()
        };
        let (a, prior_a) = run_episode_loop(&env, &config, 30, 4).unwrap();
        let (b, prior_b) = run_episode_loop(&env, &config, 30, 4).unwrap();
        assert_eq!(a, b, "{flags}");
        assert_eq!(prior_a, prior_b);
        assert_eq!(a.episodes.len(), 30);
        assert_eq!(
            a.steps.len(),
            a.episodes.iter().map(|e| e.steps).sum::<usize>()
        );
        assert!(a.returns().iter().all(|r| (0.0..=1.0).contains(r)));
    }
}
