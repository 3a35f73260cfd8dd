use proptest::prelude::*;
use qreduce_core::observable::OutcomeSet;
use qreduce_core::ops::{
    partial_trace_probe, spectral_decomposition, tensor, trace_distance, ComplexOperator, C64,
};
use qreduce_core::random::{
    random_hermitian, random_mixed_density, random_observable, random_operator, random_state, rng,
};
use qreduce_core::{DensityOperator, Observable};
use rand::Rng;

fn flags(r: &mut impl Rng, n: usize) -> Vec<bool> {
    (0..n).map(|_| r.random_bool(0.5)).collect()
}

// Small Gaussian integers multiply exactly, so entrywise equality is meaningful.
fn integer_operator(r: &mut impl Rng, dim: usize) -> ComplexOperator {
    ComplexOperator::from_fn(dim, |_, _| {
        C64::new(r.random_range(-9..=9) as f64, r.random_range(-9..=9) as f64)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tensor_is_associative(seed in any::<u64>(), da in 1usize..4, db in 1usize..4, dc in 1usize..4) {
        let mut r = rng(seed);
        let (a, b, c) = (integer_operator(&mut r, da), integer_operator(&mut r, db), integer_operator(&mut r, dc));
        let left = tensor(&tensor(&a, &b).unwrap(), &c).unwrap();
        let right = tensor(&a, &tensor(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), dh in 1usize..5, dk in 1usize..5) {
        let mut r = rng(seed);
        let (a, b) = (random_operator(&mut r, dh), random_operator(&mut r, dk));
        let reduced = partial_trace_probe(&tensor(&a, &b).unwrap(), dh, dk).unwrap();
        let expected = a.scale(b.trace());
        prop_assert!((&reduced - &expected).max_abs() <= 1e-12);
    }

    #[test]
    fn spectral_projections_resolve_identity(seed in any::<u64>(), dim in 1usize..6, degenerate in any::<bool>()) {
        let mut r = rng(seed);
        let h = if degenerate {
            random_observable(&mut r, dim, dim.div_ceil(2)).operator()
        } else {
            random_hermitian(&mut r, dim)
        };
        let blocks = spectral_decomposition(&h).unwrap();
        let mut sum = ComplexOperator::zeros(dim);
        for (i, bi) in blocks.iter().enumerate() {
            for (j, bj) in blocks.iter().enumerate() {
                let prod = &bi.projection * &bj.projection;
                let target = if i == j { bi.projection.clone() } else { ComplexOperator::zeros(dim) };
                prop_assert!((&prod - &target).max_abs() <= 1e-10);
            }
            sum = &sum + &bi.projection;
        }
        prop_assert!((&sum - &ComplexOperator::identity(dim)).max_abs() <= 1e-10);
    }

    #[test]
    fn pure_states_validate(seed in any::<u64>(), dim in 1usize..8) {
        let mut r = rng(seed);
        let v = random_state(&mut r, dim);
        prop_assert!(DensityOperator::from_vector(&v).unwrap().validate());
    }

    #[test]
    fn fidelity_ignores_global_phase(seed in any::<u64>(), dim in 1usize..6, theta in 0.0f64..std::f64::consts::TAU) {
        let mut r = rng(seed);
        let rho = random_mixed_density(&mut r, dim);
        let v = random_state(&mut r, dim);
        let f = rho.fidelity_pure(&v).unwrap();
        let g = rho.fidelity_pure(&v.scale(C64::from_polar(1.0, theta))).unwrap();
        prop_assert!((f - g).abs() <= 1e-12);
    }

    #[test]
    fn born_probability_is_additive(seed in any::<u64>(), dim in 2usize..6) {
        let mut r = rng(seed);
        let outcomes = r.random_range(1..=dim);
        let obs = random_observable(&mut r, dim, outcomes);
        let rho = random_mixed_density(&mut r, dim);
        let s = OutcomeSet::from_flags(flags(&mut r, outcomes));
        let t = OutcomeSet::from_flags(flags(&mut r, outcomes)
            .into_iter().zip(s.flags()).map(|(f, &in_s)| f && !in_s).collect());
        let whole = obs.born_probability(&s.union(&t), &rho).unwrap();
        let parts = obs.born_probability(&s, &rho).unwrap() + obs.born_probability(&t, &rho).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12);
    }

    #[test]
    fn event_projections_are_idempotent(seed in any::<u64>(), dim in 1usize..6) {
        let mut r = rng(seed);
        let outcomes = r.random_range(1..=dim);
        let obs = random_observable(&mut r, dim, outcomes);
        let p = obs.projection_of(&OutcomeSet::from_flags(flags(&mut r, outcomes))).unwrap();
        prop_assert!((&(&p * &p) - &p).max_abs() <= 1e-10);
    }

    #[test]
    fn hermitian_roundtrip_through_observable(seed in any::<u64>(), dim in 1usize..6) {
        let mut r = rng(seed);
        let h = random_hermitian(&mut r, dim);
        let obs = Observable::from_hermitian(&h).unwrap();
        prop_assert!(trace_distance(&obs.operator(), &h).unwrap() <= 1e-9 * (1.0 + h.max_abs()));
    }
}
