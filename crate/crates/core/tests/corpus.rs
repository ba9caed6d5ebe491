use pbn_core::{generate_random, partition, reduce, GeneratorParams, GroupingConfig};
use rayon::prelude::*;

#[test]
fn plans_stay_within_budgets() {
    let mut grid = Vec::new();
    for &n in &[50usize, 200, 450, 1000] {
        for &d in &[1.0, 1.6, 3.9, 8.1] {
            for &leaf in &[0.0, 0.3, 0.9] {
                grid.push((n, d, leaf));
            }
        }
    }
    let cfg = GroupingConfig::default();
    grid.par_iter()
        .enumerate()
        .for_each(|(seed, &(n, d, leaf))| {
            let m = generate_random(&GeneratorParams::new(n, d, leaf, 3, 6, seed as u64)).unwrap();
            let r = reduce(&m).unwrap();
            let plan = partition(&r.model, &cfg).unwrap();
            assert_eq!(plan.node_count(), r.model.len());
            assert!(plan.product_sum() <= cfg.theta, "n={n} d={d} leaf={leaf}");
            assert!(
                plan.table_entries() <= cfg.table_budget,
                "n={n} d={d} leaf={leaf}"
            );
            let mut seen: Vec<usize> = plan.groups.iter().flat_map(|g| g.members.clone()).collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..r.model.len()).collect::<Vec<_>>());
        });
}
