//! Command-line driver for `pbn-core` and the benchmark harness behind its
//! `benchmark` subcommand.

pub mod bench;
pub mod cli;

pub use bench::{
    parse_corpus, report, run_benchmark, write_csv, BenchmarkConfig, BenchmarkRecord, CorpusEntry,
    MethodTiming, ReportFiles,
};
pub use cli::{run, simulation_csv, EXIT_MODEL, EXIT_OK, EXIT_RESOURCE, EXIT_USAGE};
