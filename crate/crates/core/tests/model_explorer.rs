mod support;

use std::path::PathBuf;

use proptest::prelude::*;
use rand::Rng;

use safe_imdp::abstraction::{build_imdp_with_bounds, AbstractionOptions, BoundaryMode, Imdp};
use safe_imdp::checker::{evaluate_policy, AdversaryMode, CheckerOptions, Policy};
use safe_imdp::config::{BetaConfig, ExperimentConfig};
use safe_imdp::explorer::{iterative_synthesis, nonviolating_subgraph, Analysis, Outcome};
use safe_imdp::model::{failure_states, Pimdp};
use safe_imdp::scltl::{parse, Fsa};

fn fsa() -> Fsa {
    Fsa::build(&parse("!Haz U Goal").unwrap(), &[support::obs("none")]).unwrap()
}

pub fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::load(&path).unwrap()
}

#[test]
fn product_transitions_follow_the_automaton() {
    let mut rng = support::rng(41);
    let fsa = fsa();
    for _ in 0..50 {
        let imdp = support::random_imdp(&mut rng, 7, 3, false);
        let p = Pimdp::build(&imdp, &fsa).unwrap();
        assert_eq!(support::audit_pimdp(&p).violations, 0);
        let (q0, s0) = p.state(p.initial());
        assert_eq!(q0, imdp.initial);
        assert_eq!(s0, fsa.step(fsa.initial(), &imdp.labels[q0]));
        let mut i = p.initial();
        for _ in 0..200 {
            let (q, s) = p.state(i);
            let acts = p.actions(i);
            let k = rng.random_range(0..acts.len());
            let succ = &acts[k].successors;
            let j = succ[rng.random_range(0..succ.len())].state;
            let (q2, s2) = p.state(j);
            if fsa.is_accepting(s) {
                assert_eq!(j, i, "accepting states absorb");
            } else {
                assert_eq!(acts[k].id, imdp.actions[q][k].target);
                assert!(imdp.actions[q][k].successors.iter().any(|t| t.state == q2));
                assert_eq!(s2, fsa.step(s, &imdp.labels[q2]));
            }
            i = j;
        }
    }
}

fn check_prune_postcondition(imdp: &Imdp) {
    let a = Analysis::new(imdp, &fsa(), &[], &CheckerOptions::default()).unwrap();
    let fail = failure_states(&a.upper.values);
    let (sub, stats) = nonviolating_subgraph(&a.product, &fail);
    let n = a.product.num_states();
    assert!(stats.outer_loops <= n + 1, "{} loops for {n} states", stats.outer_loops);
    for i in 0..n {
        if fail[i] {
            assert!(!sub.is_retained(i));
        }
        if !sub.is_retained(i) {
            continue;
        }
        assert!(!sub.actions[i].is_empty());
        for (_, act) in sub.retained_actions(i) {
            let leak: f64 = act
                .successors
                .iter()
                .filter(|s| !sub.is_retained(s.state))
                .map(|s| s.high)
                .sum();
            assert_eq!(leak, 0.0);
        }
    }
    // Every removed non-failure state really has no safe action.
    for i in (0..n).filter(|&i| !sub.is_retained(i) && !fail[i]) {
        for act in a.product.actions(i) {
            assert!(act.successors.iter().any(|s| s.high > 0.0 && !sub.is_retained(s.state)));
        }
    }
}

#[test]
fn pruning_keeps_only_safe_actions() {
    let mut rng = support::rng(42);
    for _ in 0..200 {
        let n = rng.random_range(2..12);
        check_prune_postcondition(&support::random_imdp(&mut rng, n, 3, false));
    }
}

#[test]
fn pruning_on_grid_abstractions() {
    let p = support::grid(&[5, 5], BoundaryMode::Wall, &[(&[4, 2], "Goal"), (&[2, 1], "Haz"), (&[2, 2], "Haz"), (&[2, 3], "Haz")]);
    for g in [0.0, 0.1, 0.25, 0.4, 0.9] {
        let gammas = vec![vec![g, g]; p.regions().len()];
        let imdp = build_imdp_with_bounds(&p, &gammas, &support::case_noise(), 10, &AbstractionOptions::default()).unwrap();
        assert_eq!(support::audit_imdp(&imdp).violations, 0);
        check_prune_postcondition(&imdp);
    }
}

#[test]
fn synthesized_policy_attains_the_lower_bound() {
    let mut rng = support::rng(43);
    let opts = CheckerOptions {
        epsilon: 1e-12,
        max_sweeps: 1_000_000,
    };
    for _ in 0..60 {
        let imdp = support::random_imdp(&mut rng, 6, 3, false);
        let a = Analysis::new(&imdp, &fsa(), &[], &opts).unwrap();
        let full = a.product.full();
        let target = a.product.accepting().to_vec();
        let v = evaluate_policy(&full, &a.lower_policy, &target, AdversaryMode::Minimizing, &opts).unwrap();
        for i in 0..a.product.num_states() {
            assert!((v.values[i] - a.lower.values[i]).abs() < 1e-6, "state {i}");
        }
        // No other memoryless policy does better anywhere.
        for _ in 0..10 {
            let choices = (0..a.product.num_states())
                .map(|i| Some(rng.random_range(0..a.product.actions(i).len())))
                .collect();
            let other = evaluate_policy(&full, &Policy { choices }, &target, AdversaryMode::Minimizing, &opts).unwrap();
            for i in 0..a.product.num_states() {
                assert!(other.values[i] <= a.lower.values[i] + 1e-6);
            }
        }
    }
}

#[test]
fn zero_error_bounds_collapse_the_bounds() {
    let p = support::grid(&[5, 5], BoundaryMode::Wall, &[(&[4, 2], "Goal"), (&[2, 1], "Haz"), (&[2, 2], "Haz"), (&[2, 3], "Haz")]);
    let gammas = vec![vec![0.0, 0.0]; p.regions().len()];
    let imdp = build_imdp_with_bounds(&p, &gammas, &support::case_noise(), 10, &AbstractionOptions::default()).unwrap();
    let a = Analysis::new(&imdp, &fsa(), &[], &CheckerOptions::default()).unwrap();
    for i in 0..a.product.num_states() {
        for act in a.product.actions(i) {
            assert!(act.successors.iter().all(|s| s.low == s.high));
        }
        assert!((a.lower.values[i] - a.upper.values[i]).abs() < 1e-9);
    }
    assert!((a.p_low() - 1.0).abs() < 1e-9);
}

#[test]
fn zero_error_bounds_need_no_exploration() {
    let mut cfg = config("case_study.toml");
    cfg.learning.beta = BetaConfig::Fixed(0.0);
    let mut sys = cfg.ground_truth().unwrap();
    let r = iterative_synthesis(&cfg, &mut sys).unwrap();
    assert!(matches!(r.outcome, Outcome::Satisfied { .. }), "{:?}", r.outcome.name());
    assert_eq!(r.iterations(), 0);
    assert!(r.trajectory.is_empty());
    assert_eq!(r.data.len(), 0);
}

#[test]
fn enclosed_goal_is_impossible() {
    let cfg = config("enclosed_goal.toml");
    let mut sys = cfg.ground_truth().unwrap();
    let r = iterative_synthesis(&cfg, &mut sys).unwrap();
    assert_eq!(r.outcome, Outcome::Impossible);
    assert!(r.iterations() <= 3);
    assert!(r.reports.last().unwrap().p_high < cfg.specification.p_sat);
}

#[test]
fn small_exact_run_is_reproducible_and_monotone() {
    let cfg = config("small_exact.toml");
    let run = || iterative_synthesis(&cfg, &mut cfg.ground_truth().unwrap()).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.outcome.name(), b.outcome.name());
    assert_eq!(a.trajectory, b.trajectory);
    let u: Vec<f64> = a.reports.iter().map(|r| r.uncertainty).collect();
    assert_eq!(u, b.reports.iter().map(|r| r.uncertainty).collect::<Vec<_>>());
    assert!(u.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{u:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn products_of_random_models_are_valid(seed in 0u64..100_000, n in 1usize..10) {
        let mut rng = support::rng(seed);
        let imdp = support::random_imdp(&mut rng, n, 3, seed % 2 == 0);
        let p = Pimdp::build(&imdp, &fsa()).unwrap();
        prop_assert_eq!(support::audit_pimdp(&p).violations, 0);
        prop_assert!(p.validate().is_ok());
    }
}
