mod common;

use common::{max_gradient_error, Instance};
use tempora::model::gradients;

#[test]
fn analytic_gradients_match_finite_differences() {
    for seed in 0..120 {
        let inst = Instance::random(seed);
        for supervised in [false, true] {
            for beta in [0.0, 0.5, 2.0] {
                let err = max_gradient_error(&inst, supervised, beta);
                assert!(err < 1e-4, "seed {seed} supervised={supervised} beta={beta}: {err:e}");
            }
        }
    }
}

#[test]
fn transition_gradient_vanishes_without_consistency() {
    for seed in 0..20 {
        let inst = Instance::random(1000 + seed);
        let (_, g) = gradients(&inst.pooled, &inst.slices, inst.targets(false), &inst.params).unwrap();
        assert!(g.a.iter().all(|&x| x == 0.0));
    }
}

#[test]
fn loss_splits_into_its_terms() {
    for seed in 0..20 {
        let mut inst = Instance::random(2000 + seed);
        inst.params.beta = 0.75;
        let (loss, _) = gradients(&inst.pooled, &inst.slices, inst.targets(true), &inst.params).unwrap();
        assert_eq!(loss.total, loss.likelihood + loss.consistency);
        assert!(loss.likelihood >= 0.0 && loss.consistency >= 0.0);
    }
}
