//! Property tests over the simulator, the causal detectors and the
//! empowerment estimators.

use std::sync::Arc;

use imrl_core::agent::{Environment, Observation, ReplayBuffer};
use imrl_core::causal::{independent_components, Detector, Transition};
use imrl_core::empowerment::{average_ranks, blahut_arimoto, spearman, Channel};
use imrl_core::envsim::{EnvConfig, FactoredState, Mechanism, RecEnv};
use imrl_core::rng::{stream, Stream};
use proptest::prelude::*;
use rand::Rng;

fn env_config(seed: u64, categories: usize, base_offset: f64) -> EnvConfig {
    EnvConfig {
        categories,
        item_dim: 3,
        demo_dim: 2,
        num_items: 4 * categories,
        episode_length: 6,
        base_offset,
        seed,
        ..Default::default()
    }
}

/// A state reached after `steps` random recommendations.
fn visited_state(env: &mut RecEnv, rng: &mut impl Rng, steps: usize) -> FactoredState {
    let d = env.config().item_dim;
    let mut s = env.reset();
    for _ in 0..steps {
        let a: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let o = env.step(&s, &a).unwrap();
        if o.done {
            break;
        }
        s = o.next_state;
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn untouched_slots_are_copied_and_age_by_one(seed in 0u64..1000, c in 2usize..6, steps in 0usize..5) {
        let mut env = RecEnv::new(env_config(seed, c, -1.0)).unwrap();
        let mut rng = stream(seed, Stream::Policy);
        let s = visited_state(&mut env, &mut rng, steps);
        let a: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dim = s.encode().len();
        let o = env.step(&s, &a).unwrap();
        let chosen = env.mechanism().catalog().nearest(&a).unwrap().category;
        prop_assert_eq!(o.next_state.encode().len(), dim);
        prop_assert_eq!(o.info.category, chosen);
        for (k, (before, after)) in s.slots.iter().zip(&o.next_state.slots).enumerate() {
            if k == chosen {
                prop_assert_eq!(after.recency, 0);
                prop_assert_eq!(after.feedback, o.reward == 1.0);
            } else {
                prop_assert_eq!(&after.features, &before.features);
                prop_assert_eq!(after.feedback, before.feedback);
                prop_assert_eq!(after.recency, before.recency + 1);
            }
        }
        prop_assert_eq!(&o.next_state.demographic, &s.demographic);
    }

    #[test]
    fn click_probability_rises_with_base_offset(seed in 0u64..1000, b0 in -4.0f64..1.0, db in 0.01f64..2.0) {
        let mut lo = RecEnv::new(env_config(seed, 3, b0)).unwrap();
        let mut hi = RecEnv::new(env_config(seed, 3, b0 + db)).unwrap();
        let s = lo.reset();
        prop_assert_eq!(&hi.reset(), &s);
        let mut rng = stream(seed, Stream::Policy);
        for _ in 0..10 {
            let a: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            prop_assert!(lo.true_click_prob(&s, &a).unwrap() < hi.true_click_prob(&s, &a).unwrap());
        }
    }

    #[test]
    fn oracle_independence_excludes_action_category_and_user(seed in 0u64..1000, c in 1usize..6) {
        let mut env = RecEnv::new(env_config(seed, c, -1.0)).unwrap();
        let mech: Arc<Mechanism> = Arc::clone(env.mechanism());
        let mut rng = stream(seed, Stream::Policy);
        let s = visited_state(&mut env, &mut rng, 3);
        let a: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let chosen = mech.catalog().nearest(&a).unwrap().category;
        let oracle = independent_components(&mech, &s, &a, Detector::Oracle).unwrap();
        let heuristic = independent_components(&mech, &s, &a, Detector::Heuristic).unwrap();
        let expect: Vec<usize> = (0..c).filter(|&k| k != chosen).collect();
        prop_assert_eq!(oracle.indices(), &expect[..]);
        prop_assert_eq!(heuristic.indices(), &expect[..]);
    }

    #[test]
    fn buffer_never_exceeds_capacity(cap in 1usize..20, pushes in 0usize..60) {
        let mut b = ReplayBuffer::new(cap);
        for i in 0..pushes {
            b.push(Transition { s: vec![i as f64], a: vec![0.0], r: 0.0, s_next: vec![0.0], done: false });
        }
        prop_assert_eq!(b.len(), pushes.min(cap));
        if pushes > 0 {
            prop_assert_eq!(b.get(b.len() - 1).s[0], (pushes - 1) as f64);
        }
    }

    #[test]
    fn spearman_is_invariant_to_monotone_transforms(xs in prop::collection::vec(-10.0f64..10.0, 3..30), shift in -5.0f64..5.0) {
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let tx: Vec<f64> = xs.iter().map(|x| (x + shift).exp()).collect();
        if let (Ok(a), Ok(b)) = (spearman(&xs, &ys), spearman(&tx, &ys)) {
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&a));
        }
        let r = average_ranks(&xs).unwrap();
        let n = xs.len() as f64;
        prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn capacity_never_exceeds_log_of_inputs_or_outputs(rows in prop::collection::vec(prop::collection::vec(0.01f64..1.0, 3), 2..5)) {
        let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| { let z: f64 = r.iter().sum(); r.into_iter().map(|v| v / z).collect() }).collect();
        let n = rows.len() as f64;
        let c = blahut_arimoto(&Channel::new(rows).unwrap(), 1e-9, 1_000_000).unwrap().capacity;
        prop_assert!(c >= -1e-12 && c <= n.ln().min(3f64.ln()) + 1e-9);
    }
}

#[test]
fn empirical_click_rate_matches_true_probability() {
    let mut env = RecEnv::new(env_config(5, 3, -1.0)).unwrap();
    let mut rng = stream(5, Stream::Policy);
    let (mut expected, mut clicks, mut n) = (0.0, 0.0, 0usize);
    for _ in 0..4000 {
        let mut s = env.reset_env();
        loop {
            let a: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            expected += env.true_click_prob(&s, &a).unwrap();
            let o = env.step(&s, &a).unwrap();
            clicks += o.reward;
            n += 1;
            s = o.next_state;
            if o.done {
                break;
            }
        }
    }
    // Sum of independent Bernoullis: deviation beyond 5 standard errors of a
    // p = 1/2 coin is vanishingly rare.
    let bound = 5.0 * (0.25 * n as f64).sqrt();
    assert!((clicks - expected).abs() < bound, "clicks {clicks} expected {expected:.1} bound {bound:.1}");
}
