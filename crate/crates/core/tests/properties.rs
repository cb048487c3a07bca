use num_bigint::BigUint;
use proptest::prelude::*;
use tsallis_core::blockenc::{density_block_encoding, purified_oracle, verify};
use tsallis_core::densityops::{
    affinity_exact, hellinger_exact, random_low_rank_state, trace_distance_exact, tsallis_exact,
    DensityOperator,
};
use tsallis_core::estimators::ParameterSchedule;
use tsallis_core::samplizer::{per_query_charge, SampleLedger};

fn state_pair() -> impl Strategy<Value = (DensityOperator, DensityOperator)> {
    (prop::sample::select(vec![2usize, 4, 8]), any::<u64>(), any::<u64>())
        .prop_flat_map(|(dim, s1, s2)| (Just(dim), 1..=dim, 1..=dim, Just(s1), Just(s2)))
        .prop_map(|(dim, r1, r2, s1, s2)| {
            (
                random_low_rank_state(dim, r1, s1).unwrap(),
                random_low_rank_state(dim, r2, s2).unwrap(),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn affinity_is_a_bounded_symmetric_overlap((rho, sigma) in state_pair(), alpha in 0.05f64..0.95) {
        let a = affinity_exact(&rho, &sigma, alpha).unwrap();
        let b = affinity_exact(&sigma, &rho, 1.0 - alpha).unwrap();
        prop_assert!((0.0..=1.0 + 1e-9).contains(&a));
        prop_assert!((a - b).abs() <= 1e-10);
        prop_assert!((affinity_exact(&rho, &rho, alpha).unwrap() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn tsallis_is_nonnegative_and_faithful((rho, sigma) in state_pair(), alpha in 0.05f64..0.95) {
        prop_assert!(tsallis_exact(&rho, &sigma, alpha).unwrap() >= -1e-9);
        prop_assert!(tsallis_exact(&rho, &rho, alpha).unwrap().abs() <= 1e-8);
    }

    #[test]
    fn hellinger_sandwiches_trace_distance((rho, sigma) in state_pair()) {
        let h = hellinger_exact(&rho, &sigma).unwrap();
        let t = trace_distance_exact(&rho, &sigma).unwrap();
        prop_assert!(h * h <= t + 1e-9);
        prop_assert!(t <= std::f64::consts::SQRT_2 * h + 1e-9);
    }

    #[test]
    fn density_encoding_reproduces_state(dim in prop::sample::select(vec![2usize, 4]), seed in any::<u64>()) {
        let rank = 1 + (seed as usize % dim);
        let rho = random_low_rank_state(dim, rank, seed).unwrap();
        let be = density_block_encoding(&purified_oracle(&rho)).unwrap();
        prop_assert!(verify(&be, rho.matrix()) <= 1e-9);
        prop_assert!(be.unitarity_residual() <= 1e-9);
    }

    #[test]
    fn schedule_tolerances_shrink_with_eps(alpha in 0.05f64..0.95, r in 1usize..=8, eps in 0.02f64..0.5) {
        let coarse = ParameterSchedule::query(alpha, r, eps).unwrap();
        let fine = ParameterSchedule::query(alpha, r, eps / 2.0).unwrap();
        prop_assert!(coarse.alpha_effective >= 0.5);
        prop_assert_eq!(coarse.swapped, alpha < 0.5);
        prop_assert!(fine.delta1 < coarse.delta1);
        prop_assert!(fine.eps2 < coarse.eps2);
        prop_assert!(fine.eps_h < coarse.eps_h);
        let s = ParameterSchedule::sample(alpha, r, eps, 8.0).unwrap();
        prop_assert!(s.delta1 < coarse.delta1);
        prop_assert!(s.k_repetitions.unwrap() as f64 >= 8.0 / (s.eps_h * s.eps_h));
    }

    #[test]
    fn per_query_charge_is_monotone(eps in 1e-6f64..0.3, c0 in 1.0f64..64.0) {
        let a = per_query_charge(eps, c0).unwrap();
        let b = per_query_charge(eps / 2.0, c0).unwrap();
        prop_assert!(b > a);
        let l = (1.0 / eps).ln();
        prop_assert!(a >= BigUint::from((c0 / eps * l * l).floor() as u64));
    }

    #[test]
    fn ledger_scaling_distributes(a in any::<u32>(), b in any::<u32>(), k in 1u128..1u128 << 80) {
        let mut ledger = SampleLedger::default();
        ledger.add(0, &BigUint::from(a));
        ledger.add(1, &BigUint::from(b));
        ledger.scale(k);
        let expect = (BigUint::from(a) + BigUint::from(b)) * BigUint::from(k);
        prop_assert_eq!(ledger.total(), expect);
    }
}
