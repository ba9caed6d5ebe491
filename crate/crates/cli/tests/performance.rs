//! Grouped simulation of a large, sparse, leaf-heavy network against the
//! per-node simulator.

use pbn_cli::{run_benchmark, BenchmarkConfig, CorpusEntry};
use pbn_core::Method;

#[test]
fn grouped_is_five_times_faster_on_leafy_networks() {
    let corpus = vec![CorpusEntry {
        n: 1000,
        density: 1.8,
        leaf_pct: 0.89,
        seed: 5,
    }];
    let mut cfg = BenchmarkConfig::new(corpus, 1_000_000);
    cfg.methods = vec![Method::Old, Method::Grouped];
    cfg.repeats = 1;
    let records = run_benchmark(&cfg).unwrap();
    let r = &records[0];
    assert!(r.realized_density <= 1.8 + 1e-9);
    let speedup = r.speedup(Method::Grouped, Method::Old).unwrap();
    assert!(speedup >= 5.0, "speedup {speedup:.2}");
}
