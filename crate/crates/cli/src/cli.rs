//! Argument parsing and subcommands.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use pbn_core::format::format_probability;
use pbn_core::grouping::{DEFAULT_MAX_GROUP_PARENTS, DEFAULT_TABLE_BUDGET, DEFAULT_THETA};
use pbn_core::sampling::DEFAULT_PERTURBATION_WIDTH;
use pbn_core::{
    estimate_steady_state, generate_random, parse_model, partition, predict_speedup, reduce, rng,
    serialize_model, simulate, Engine, EstimationRequest, GeneratorParams, GroupingConfig, Method,
    Model, PbnError, Predicate, PrepareConfig, State, StatsConfig, Stepper,
};

use crate::bench::{parse_corpus, report, run_benchmark, BenchmarkConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MODEL: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "pbn",
    version,
    about = "Simulate probabilistic Boolean networks with perturbations"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Random seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Budget on combined functions of multi-function groups.
    #[arg(long, global = true, default_value_t = DEFAULT_THETA)]
    pub theta: u64,
    /// Largest perturbation group width.
    #[arg(long, global = true, default_value_t = DEFAULT_PERTURBATION_WIDTH)]
    pub k: usize,
    /// Cap on the parent union of a group.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_GROUP_PARENTS)]
    pub max_group_parents: usize,
    /// Budget on truth-table entries over all groups.
    #[arg(long, global = true, default_value_t = DEFAULT_TABLE_BUDGET)]
    pub table_budget: u64,
}

impl GlobalOpts {
    fn prepare_config(&self) -> PrepareConfig {
        PrepareConfig {
            grouping: GroupingConfig {
                theta: self.theta,
                max_group_parents: self.max_group_parents,
                table_budget: self.table_budget,
            },
            k_max: self.k,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random network.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        density: f64,
        /// Fraction of nodes that are leaves.
        #[arg(long, default_value_t = 0.0)]
        leaves: f64,
        #[arg(long, default_value_t = 3)]
        max_functions: usize,
        #[arg(long, default_value_t = 8)]
        max_parents: usize,
        #[arg(long, default_value_t = 0.001)]
        perturbation: f64,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Remove leaves and report what is left.
    Reduce {
        #[arg(long)]
        model: PathBuf,
        /// Write the reduced network here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show the update groups of the reduced network.
    Plan {
        #[arg(long)]
        model: PathBuf,
    },
    /// Simulate and report how often each node is 1.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        steps: u64,
        #[arg(long, default_value = "grouped")]
        method: Method,
        /// CSV output file; standard output when absent.
        #[arg(long)]
        report_csv: Option<PathBuf>,
    },
    /// Estimate a steady-state probability.
    Estimate {
        #[arg(long)]
        model: PathBuf,
        /// Conjunction such as `a=1&b=0`.
        #[arg(long)]
        predicate: String,
        #[arg(long, default_value_t = 1e-5)]
        precision: f64,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        #[arg(long, default_value = "grouped")]
        method: Method,
    },
    /// Predict the speedup of the grouped simulator.
    Predict {
        /// Leaf fraction in [0, 1].
        #[arg(long)]
        leaves: f64,
        #[arg(long)]
        density: f64,
    },
    /// Time the simulators on a corpus of generated networks.
    Benchmark {
        /// Lines of `n density leaf_pct seed`.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 10_000_000)]
        steps: u64,
        #[arg(long, value_delimiter = ',', default_value = "old,reduced,grouped")]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 0)]
        warmup: u64,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, default_value_t = 3)]
        max_functions: usize,
        #[arg(long, default_value_t = 8)]
        max_parents: usize,
        #[arg(long, default_value_t = 0.001)]
        perturbation: f64,
        /// Time distinct models on distinct threads.
        #[arg(long)]
        parallel: bool,
        /// Directory for the CSV and plot data.
        #[arg(long, default_value = "benchmark-out")]
        out: PathBuf,
    },
}

fn load_model(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_model(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_or_print(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

/// Per-node statistics of a simulation as CSV. Removed leaves have no row.
pub fn simulation_csv(
    m: &Model,
    engine: &Engine,
    one_counts: &[u64],
    steps: u64,
) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["node", "name", "one_count", "steps", "frequency"])?;
    for node in 0..m.len() {
        if let Some(p) = engine.position(node) {
            let ones = one_counts[p];
            let freq = if steps == 0 {
                0.0
            } else {
                ones as f64 / steps as f64
            };
            w.write_record([
                node.to_string(),
                m.node(node).name.clone(),
                ones.to_string(),
                steps.to_string(),
                format_probability(freq),
            ])?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Generate {
            n,
            density,
            leaves,
            max_functions,
            max_parents,
            perturbation,
            out: path,
        } => {
            let params =
                GeneratorParams::new(n, density, leaves, max_functions, max_parents, g.seed)
                    .with_perturbation(perturbation);
            let m = generate_random(&params)?;
            write_or_print(path.as_deref(), &serialize_model(&m), out)?;
        }
        Command::Reduce { model, out: path } => {
            let m = load_model(&model)?;
            let r = reduce(&m)?;
            writeln!(out, "leaves {}", r.leaf_count())?;
            writeln!(out, "kept {}", r.model.len())?;
            writeln!(out, "t {}", format_probability(r.leaf_no_perturb_prob))?;
            if let Some(p) = path {
                write_or_print(Some(&p), &serialize_model(&r.model), out)?;
            }
        }
        Command::Plan { model } => {
            let m = load_model(&model)?;
            let r = reduce(&m)?;
            let plan = partition(&r.model, &g.prepare_config().grouping)?;
            let sizes: Vec<String> = plan
                .groups
                .iter()
                .map(|gr| gr.members.len().to_string())
                .collect();
            writeln!(out, "groups {}", plan.groups.len())?;
            writeln!(out, "group_sizes {}", sizes.join(" "))?;
            writeln!(out, "product_sum {}", plan.product_sum())?;
            writeln!(out, "table_entries {}", plan.table_entries())?;
            writeln!(out, "max_group_parents {}", plan.effective_max_parents)?;
            writeln!(out, "memory_bytes {}", plan.memory_estimate())?;
        }
        Command::Simulate {
            model,
            steps,
            method,
            report_csv,
        } => {
            let m = load_model(&model)?;
            let engine = Engine::build(&m, method, &g.prepare_config())?;
            let s0 = State::zeros(engine.width());
            let t = simulate(
                &engine,
                &s0,
                steps,
                &mut rng::seeded(g.seed),
                &StatsConfig::ones(),
            );
            let text = simulation_csv(&m, &engine, &t.one_counts, t.steps)?;
            write_or_print(report_csv.as_deref(), &text, out)?;
        }
        Command::Estimate {
            model,
            predicate,
            precision,
            confidence,
            method,
        } => {
            let m = load_model(&model)?;
            let pred = Predicate::parse(&predicate, &m)?;
            let req = EstimationRequest::new(precision, confidence)?;
            let start = Instant::now();
            let engine = Engine::build(&m, method, &g.prepare_config())?;
            let prep = start.elapsed();
            let s0 = State::zeros(engine.width());
            let r = estimate_steady_state(&engine, &s0, &pred, &req, &mut rng::seeded(g.seed))?;
            writeln!(out, "estimate {}", format_probability(r.estimate))?;
            writeln!(out, "sample_size {}", r.sample_size)?;
            writeln!(out, "burn_in {}", r.burn_in)?;
            writeln!(out, "steps {}", r.steps)?;
            writeln!(
                out,
                "preprocessing_seconds {}",
                format_probability(prep.as_secs_f64())
            )?;
            writeln!(
                out,
                "simulation_seconds {}",
                format_probability(r.wall_time.as_secs_f64())
            )?;
            if r.degenerate {
                writeln!(out, "degenerate true")?;
            }
        }
        Command::Predict { leaves, density } => {
            anyhow::ensure!(
                (0.0..=1.0).contains(&leaves) && density > 0.0,
                UsageError("need a leaf fraction in [0,1] and a positive density".into())
            );
            writeln!(
                out,
                "{}",
                format_probability(predict_speedup(leaves, density))
            )?;
        }
        Command::Benchmark {
            corpus,
            steps,
            methods,
            warmup,
            repeats,
            max_functions,
            max_parents,
            perturbation,
            parallel,
            out: dir,
        } => {
            let text = fs::read_to_string(&corpus)
                .with_context(|| format!("reading {}", corpus.display()))?;
            let mut cfg = BenchmarkConfig::new(parse_corpus(&text)?, steps);
            cfg.methods = methods;
            cfg.warmup = warmup;
            cfg.repeats = repeats;
            cfg.max_functions = max_functions;
            cfg.max_parents = max_parents;
            cfg.perturbation = perturbation;
            cfg.parallel = parallel;
            cfg.prepare = g.prepare_config();
            cfg.sim_seed = g.seed;
            let records = run_benchmark(&cfg)?;
            let files = report(&records, &dir)?;
            writeln!(out, "records {}", records.len())?;
            writeln!(out, "csv {}", files.csv.display())?;
            for p in files.plots {
                writeln!(out, "plot {}", p.display())?;
            }
        }
    }
    Ok(())
}

/// An error in how the tool was invoked.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Exit code for an error.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<PbnError>() {
            return match e {
                PbnError::ResourceLimit(_) | PbnError::Infeasible(_) => EXIT_RESOURCE,
                PbnError::InvalidArgument(_) => EXIT_USAGE,
                _ => EXIT_MODEL,
            };
        }
    }
    EXIT_MODEL
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Errors go to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            exit_code(&e)
        }
    }
}
