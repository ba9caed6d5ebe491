use pbn_core::{
    find_leaves, generate_random, reduce, stationary_distribution, GeneratorParams,
    TransitionOperator,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(25))]

    #[test]
    fn kept_marginals_survive_reduction(
        n in 6usize..=10,
        leaves in 2usize..=5,
        density in 0.8f64..2.5,
        seed in any::<u64>(),
        p in prop::sample::select(vec![0.05, 0.1, 0.2]),
    ) {
        let params = GeneratorParams::new(n, density, leaves as f64 / n as f64, 3, 3, seed).with_perturbation(p);
        let m = generate_random(&params).unwrap();
        prop_assert_eq!(find_leaves(&m).len(), leaves);
        let r = reduce(&m).unwrap();

        let full = stationary_distribution(&TransitionOperator::new(&m).unwrap(), 1e-12, 10_000_000).unwrap();
        let kept = stationary_distribution(&TransitionOperator::reduced(&r).unwrap(), 1e-12, 10_000_000).unwrap();

        let mut marginal = vec![0.0; kept.len()];
        for (s, w) in full.iter().enumerate() {
            let idx = r.kept.iter().enumerate().fold(0, |acc, (bit, &node)| acc | ((s >> node) & 1) << bit);
            marginal[idx] += w;
        }
        for (got, want) in marginal.iter().zip(&kept) {
            prop_assert!((got - want).abs() <= 1e-8, "{got} vs {want}");
        }
    }
}
