#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use qreduce_core::instrument::choi_of_linear_map;
use qreduce_core::observable::OutcomeSet;
use qreduce_core::ops::{trace_distance, ComplexOperator};
use qreduce_core::random::{
    random_density, random_instrument, random_mixed_density, random_observable, rng,
};
use qreduce_core::{ApparatusModel, Instrument};
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_instruments_satisfy_axioms(seed in any::<u64>(), dim in 2usize..5) {
        let mut r = rng(seed);
        let outcomes = r.random_range(1..=dim);
        let ins = random_instrument(&mut r, dim, outcomes);
        let report = ins.verify_axioms();
        prop_assert!(report.passed(), "{:?}", report);
        prop_assert!(report.min_choi_eigenvalue >= -1e-10);

        let rho = random_mixed_density(&mut r, dim);
        let full = ins.apply(&OutcomeSet::full(outcomes), &rho).unwrap();
        prop_assert!((full.trace().re - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn controlled_posteriors_are_prescribed(seed in any::<u64>(), dim in 2usize..5) {
        let mut r = rng(seed);
        let outcomes = r.random_range(1..=dim);
        let obs = random_observable(&mut r, dim, outcomes);
        let family: Vec<_> = (0..outcomes)
            .map(|_| { let k = r.random_range(1..=dim); random_density(&mut r, dim, k) })
            .collect();
        let ins = Instrument::controlled_posterior(&obs, &family).unwrap();
        prop_assert!(ins.verify_axioms().passed());
        for _ in 0..3 {
            let rho = random_mixed_density(&mut r, dim);
            for (a, post) in ins.posterior_family(&rho).unwrap().into_iter().enumerate() {
                if post.probability > 1e-6 {
                    let state = post.state.unwrap();
                    let d = trace_distance(state.operator(), family[a].operator()).unwrap();
                    prop_assert!(d <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn dilation_round_trip(seed in any::<u64>(), dim in 2usize..4) {
        let mut r = rng(seed);
        let outcomes = r.random_range(1..=dim);
        let ins = random_instrument(&mut r, dim, outcomes);
        let model = ApparatusModel::dilate_instrument(&ins).unwrap();
        prop_assert!(model.measures_check(dim * dim).unwrap().passed);
        let back = model.extract_instrument().unwrap();
        prop_assert!(back.choi_distance(&ins).unwrap() <= 1e-9);

        let rho = random_mixed_density(&mut r, dim);
        let direct = ins.outcome_distribution(&rho).unwrap();
        let via = model.measured_distribution(&rho).unwrap();
        for (a, b) in direct.iter().zip(&via) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
        for a in 0..outcomes {
            if direct[a] <= 1e-9 { continue; }
            let s = OutcomeSet::singleton(outcomes, a);
            let target = ins.selective_state(&s, &rho).unwrap();
            let cond = model.conditional_state(&s_probe(&model, a), &rho).unwrap();
            prop_assert!(trace_distance(cond.operator(), target.operator()).unwrap() <= 1e-10);
        }
    }
}

fn s_probe(model: &ApparatusModel, a: usize) -> OutcomeSet {
    let b = model
        .correspondence()
        .iter()
        .position(|c| *c == Some(a))
        .unwrap();
    OutcomeSet::singleton(model.probe().outcome_count(), b)
}

#[test]
fn transpose_map_is_not_completely_positive() {
    let choi = choi_of_linear_map(2, 2, |x: &ComplexOperator| x.transpose());
    let min = choi.eigenvalues_hermitian()[0];
    assert!(min <= -0.9, "{min}");
}
