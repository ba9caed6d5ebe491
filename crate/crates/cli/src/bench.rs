//! Timing comparisons of the three simulators on generated networks.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context, Result};
use pbn_core::format::format_probability;
use pbn_core::{
    density, find_leaves, generate_random, rng, simulate, Engine, GeneratorParams, Method,
    PrepareConfig, StatsConfig, Stepper,
};
use rayon::prelude::*;

/// One corpus line: `n density leaf_pct seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusEntry {
    pub n: usize,
    pub density: f64,
    pub leaf_pct: f64,
    pub seed: u64,
}

/// Parses a corpus file; `#` starts a comment.
pub fn parse_corpus(text: &str) -> Result<Vec<CorpusEntry>> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        ensure!(
            fields.len() == 4,
            "corpus line {}: expected `n density leaf_pct seed`",
            i + 1
        );
        let ctx = || format!("corpus line {}", i + 1);
        entries.push(CorpusEntry {
            n: fields[0].parse().with_context(ctx)?,
            density: fields[1].parse().with_context(ctx)?,
            leaf_pct: fields[2].parse().with_context(ctx)?,
            seed: fields[3].parse().with_context(ctx)?,
        });
    }
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub corpus: Vec<CorpusEntry>,
    /// Timed steps per run.
    pub steps: u64,
    pub methods: Vec<Method>,
    /// Untimed steps before each timed run.
    pub warmup: u64,
    /// Runs per (model, method); the median time is kept.
    pub repeats: usize,
    pub prepare: PrepareConfig,
    pub max_functions: usize,
    pub max_parents: usize,
    pub perturbation: f64,
    /// Seed of every simulation run.
    pub sim_seed: u64,
    /// Time distinct models on distinct threads.
    pub parallel: bool,
}

impl BenchmarkConfig {
    pub fn new(corpus: Vec<CorpusEntry>, steps: u64) -> Self {
        BenchmarkConfig {
            corpus,
            steps,
            methods: Method::ALL.to_vec(),
            warmup: 0,
            repeats: 3,
            prepare: PrepareConfig::default(),
            max_functions: 3,
            max_parents: 8,
            perturbation: 0.001,
            sim_seed: 0,
            parallel: false,
        }
    }

    fn validate(&self) -> Result<()> {
        ensure!(!self.methods.is_empty(), "no methods to compare");
        ensure!(
            self.steps >= self.warmup,
            "warmup {} exceeds steps {}",
            self.warmup,
            self.steps
        );
        ensure!(self.repeats >= 1, "need at least one repeat");
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodTiming {
    pub method: Method,
    pub prep_time: Duration,
    pub sim_time: Duration,
}

impl MethodTiming {
    pub fn total(&self) -> Duration {
        self.prep_time + self.sim_time
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRecord {
    pub entry: CorpusEntry,
    pub realized_density: f64,
    pub realized_leaf_pct: f64,
    /// Nodes left after leaf removal.
    pub kept_nodes: usize,
    pub steps: u64,
    pub timings: Vec<MethodTiming>,
}

impl BenchmarkRecord {
    pub fn timing(&self, method: Method) -> Option<&MethodTiming> {
        self.timings.iter().find(|t| t.method == method)
    }

    /// Simulation time of `base` over that of `method`.
    pub fn speedup(&self, method: Method, base: Method) -> Option<f64> {
        let (t, b) = (self.timing(method)?, self.timing(base)?);
        Some(b.sim_time.as_secs_f64() / t.sim_time.as_secs_f64())
    }

    /// As [`BenchmarkRecord::speedup`], with preprocessing counted.
    pub fn speedup_with_prep(&self, method: Method, base: Method) -> Option<f64> {
        let (t, b) = (self.timing(method)?, self.timing(base)?);
        Some(b.total().as_secs_f64() / t.total().as_secs_f64())
    }
}

fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort_unstable();
    xs[xs.len() / 2]
}

fn time_method(
    cfg: &BenchmarkConfig,
    model: &pbn_core::Model,
    method: Method,
) -> Result<MethodTiming> {
    let mut preps = Vec::with_capacity(cfg.repeats);
    let mut sims = Vec::with_capacity(cfg.repeats);
    for _ in 0..cfg.repeats {
        let start = Instant::now();
        let engine = Engine::build(model, method, &cfg.prepare)?;
        preps.push(start.elapsed());

        let mut rng = rng::seeded(cfg.sim_seed);
        let mut state = pbn_core::State::zeros(engine.width());
        if cfg.warmup > 0 {
            state =
                simulate(&engine, &state, cfg.warmup, &mut rng, &StatsConfig::none()).final_state;
        }
        let start = Instant::now();
        let t = simulate(
            &engine,
            &state,
            cfg.steps - cfg.warmup,
            &mut rng,
            &StatsConfig::none(),
        );
        sims.push(start.elapsed());
        std::hint::black_box(t.final_state);
    }
    Ok(MethodTiming {
        method,
        prep_time: median(preps),
        sim_time: median(sims),
    })
}

fn run_entry(cfg: &BenchmarkConfig, entry: CorpusEntry) -> Result<BenchmarkRecord> {
    let params = GeneratorParams::new(
        entry.n,
        entry.density,
        entry.leaf_pct,
        cfg.max_functions,
        cfg.max_parents,
        entry.seed,
    )
    .with_perturbation(cfg.perturbation);
    let model = generate_random(&params)?;
    let leaves = find_leaves(&model).len();
    let timings = cfg
        .methods
        .iter()
        .map(|&m| time_method(cfg, &model, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchmarkRecord {
        entry,
        realized_density: density(&model),
        realized_leaf_pct: leaves as f64 / model.len() as f64,
        kept_nodes: model.len() - leaves,
        steps: cfg.steps,
        timings,
    })
}

/// Generates every corpus model and times each method on it.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<Vec<BenchmarkRecord>> {
    cfg.validate()?;
    if cfg.parallel {
        cfg.corpus.par_iter().map(|&e| run_entry(cfg, e)).collect()
    } else {
        cfg.corpus.iter().map(|&e| run_entry(cfg, e)).collect()
    }
}

pub const CSV_HEADER: [&str; 13] = [
    "n",
    "density",
    "leaf_pct",
    "seed",
    "realized_density",
    "realized_leaf_pct",
    "kept_nodes",
    "steps",
    "method",
    "prep_seconds",
    "sim_seconds",
    "speedup_vs_old",
    "speedup_vs_old_with_prep",
];

fn num(x: f64) -> String {
    format_probability(x)
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Writes the records as CSV, one row per (model, method).
pub fn write_csv<W: std::io::Write>(records: &[BenchmarkRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        for t in &r.timings {
            w.write_record([
                r.entry.n.to_string(),
                num(r.entry.density),
                num(r.entry.leaf_pct),
                r.entry.seed.to_string(),
                num(r.realized_density),
                num(r.realized_leaf_pct),
                r.kept_nodes.to_string(),
                r.steps.to_string(),
                t.method.name().to_string(),
                num(t.prep_time.as_secs_f64()),
                num(t.sim_time.as_secs_f64()),
                opt(r.speedup(t.method, Method::Old)),
                opt(r.speedup_with_prep(t.method, Method::Old)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Files written by [`report`].
#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub csv: PathBuf,
    /// `realized_leaf_pct realized_density speedup` per model and ratio.
    pub plots: Vec<PathBuf>,
}

/// Writes `benchmark.csv` and gnuplot data files into `dir`.
///
/// The data files hold one line per model: reduced over old, grouped over
/// reduced and grouped over old. A ratio is skipped when either method is
/// missing.
pub fn report(records: &[BenchmarkRecord], dir: &Path) -> Result<ReportFiles> {
    if records.is_empty() {
        bail!("no benchmark records to report");
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv = dir.join("benchmark.csv");
    write_csv(
        records,
        fs::File::create(&csv).with_context(|| format!("creating {}", csv.display()))?,
    )?;

    let ratios = [
        ("speedup_reduced_old.dat", Method::Reduced, Method::Old),
        (
            "speedup_grouped_reduced.dat",
            Method::Grouped,
            Method::Reduced,
        ),
        ("speedup_grouped_old.dat", Method::Grouped, Method::Old),
    ];
    let mut plots = Vec::new();
    for (name, method, base) in ratios {
        let lines: Vec<String> = records
            .iter()
            .filter_map(|r| {
                r.speedup(method, base).map(|s| {
                    format!(
                        "{} {} {}",
                        num(100.0 * r.realized_leaf_pct),
                        num(r.realized_density),
                        num(s)
                    )
                })
            })
            .collect();
        if lines.is_empty() {
            continue;
        }
        let path = dir.join(name);
        let body = format!(
            "# leaf_pct density {}_over_{}\n{}\n",
            method,
            base,
            lines.join("\n")
        );
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        plots.push(path);
    }
    Ok(ReportFiles { csv, plots })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(seed: u64, methods: &[Method]) -> BenchmarkRecord {
        BenchmarkRecord {
            entry: CorpusEntry {
                n: 20,
                density: 1.5,
                leaf_pct: 0.3,
                seed,
            },
            realized_density: 1.45,
            realized_leaf_pct: 0.3,
            kept_nodes: 14,
            steps: 1000,
            timings: methods
                .iter()
                .enumerate()
                .map(|(i, &method)| MethodTiming {
                    method,
                    prep_time: Duration::from_micros(10 * i as u64),
                    sim_time: Duration::from_millis(30 / (i as u64 + 1)),
                })
                .collect(),
        }
    }

    #[test]
    fn corpus_lines() {
        let c = parse_corpus("# n d l s\n20 1.5 0.3 1\n\n450 1.6 0.9 7 # leafy\n").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(
            c[1],
            CorpusEntry {
                n: 450,
                density: 1.6,
                leaf_pct: 0.9,
                seed: 7
            }
        );
        assert!(parse_corpus("20 1.5 0.3").is_err());
        assert!(parse_corpus("20 x 0.3 1").is_err());
    }

    #[test]
    fn config_checks() {
        let mut cfg = BenchmarkConfig::new(vec![], 10);
        cfg.warmup = 11;
        assert!(run_benchmark(&cfg).is_err());
        cfg.warmup = 0;
        cfg.methods.clear();
        assert!(run_benchmark(&cfg).is_err());
    }

    #[test]
    fn rows_per_model_and_method() {
        let records: Vec<_> = (0..3)
            .map(|s| record(s, &[Method::Old, Method::Grouped]))
            .collect();
        let mut buf = Vec::new();
        write_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    }

    #[test]
    fn columns_round_trip() {
        let records = vec![record(4, &Method::ALL)];
        let mut buf = Vec::new();
        write_csv(&records, &mut buf).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        for (row, t) in rdr.records().zip(&records[0].timings) {
            let row = row.unwrap();
            let sim: f64 = row[10].parse().unwrap();
            assert!((sim - t.sim_time.as_secs_f64()).abs() <= 1e-12 * sim.abs());
            let speedup: f64 = row[11].parse().unwrap();
            let want = records[0].speedup(t.method, Method::Old).unwrap();
            assert!((speedup - want).abs() <= 1e-11 * want);
            assert_eq!(&row[8], t.method.name());
        }
    }

    #[test]
    fn empty_report_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(report(&[], dir.path()).is_err());
    }

    #[test]
    fn report_writes_plot_data() {
        let dir = tempfile::tempdir().unwrap();
        let files = report(
            &[record(1, &Method::ALL), record(2, &Method::ALL)],
            dir.path(),
        )
        .unwrap();
        assert_eq!(files.plots.len(), 3);
        let dat = fs::read_to_string(&files.plots[2]).unwrap();
        assert_eq!(dat.lines().count(), 3);
    }

    #[test]
    fn tiny_run_is_consistent() {
        let mut cfg = BenchmarkConfig::new(
            vec![CorpusEntry {
                n: 30,
                density: 1.5,
                leaf_pct: 0.5,
                seed: 3,
            }],
            10_000,
        );
        cfg.repeats = 1;
        let records = run_benchmark(&cfg).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!(r.timings.len(), 3);
        for t in &r.timings {
            assert!(t.sim_time > Duration::ZERO);
        }
        assert!(r.timing(Method::Grouped).unwrap().prep_time > Duration::ZERO);
        let s = r.speedup(Method::Grouped, Method::Old).unwrap();
        let old = r.timing(Method::Old).unwrap().sim_time.as_secs_f64();
        let new = r.timing(Method::Grouped).unwrap().sim_time.as_secs_f64();
        assert!((s - old / new).abs() < 1e-12 * s);
    }
}
