//! Random networks parameterized by size, density and leaf fraction.
//!
//! Nodes are split into a kept set, which forms the interest set, and a set of
//! leaves. Kept nodes only read kept nodes; the `j`-th leaf reads kept nodes
//! and the leaves before it, so every leaf is removable and the realized leaf
//! count is exactly `round(leaf_pct * n)`. The total parent count is
//! `round(target_density * n)`, spread at random over the functions.

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{PbnError, Result};
use crate::model::{BooleanFunction, Model, Node, MAX_ARITY};
use crate::rng::seeded;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub n: usize,
    pub target_density: f64,
    /// Fraction of nodes that are leaves, in `[0, 1)`.
    pub leaf_pct: f64,
    pub max_functions: usize,
    pub max_parents: usize,
    pub seed: u64,
    pub perturbation: f64,
}

impl GeneratorParams {
    pub fn new(
        n: usize,
        target_density: f64,
        leaf_pct: f64,
        max_functions: usize,
        max_parents: usize,
        seed: u64,
    ) -> Self {
        GeneratorParams {
            n,
            target_density,
            leaf_pct,
            max_functions,
            max_parents,
            seed,
            perturbation: 0.001,
        }
    }

    pub fn with_perturbation(mut self, p: f64) -> Self {
        self.perturbation = p;
        self
    }
}

pub fn generate_random(params: &GeneratorParams) -> Result<Model> {
    let GeneratorParams {
        n,
        target_density,
        leaf_pct,
        max_functions,
        max_parents,
        seed,
        perturbation,
    } = *params;
    if n < 2 {
        return Err(PbnError::InvalidArgument("generator needs n >= 2".into()));
    }
    if max_functions == 0 || max_parents == 0 || max_parents > MAX_ARITY {
        return Err(PbnError::InvalidArgument(format!(
            "need max_functions >= 1 and 1 <= max_parents <= {MAX_ARITY}"
        )));
    }
    if !(0.0..1.0).contains(&leaf_pct) {
        return Err(PbnError::InvalidArgument(format!(
            "leaf fraction {leaf_pct} outside [0,1)"
        )));
    }
    if !(target_density > 0.0 && target_density.is_finite()) {
        return Err(PbnError::InvalidArgument(format!(
            "density {target_density} must be positive"
        )));
    }
    if target_density > (max_parents * max_functions) as f64 {
        return Err(PbnError::Infeasible(format!(
            "density {target_density} exceeds max_parents * max_functions = {}",
            max_parents * max_functions
        )));
    }

    let mut rng = seeded(seed);
    let leaves = ((leaf_pct * n as f64).round() as usize).min(n - 1);
    let kept = n - leaves;

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut kept_ids = order[..kept].to_vec();
    kept_ids.sort_unstable();

    // candidate parents of each node; position in `order` fixes the leaf DAG
    let mut rank = vec![0usize; n];
    for (r, &node) in order.iter().enumerate() {
        rank[node] = r;
    }
    let candidates = |node: usize| -> usize { kept.max(rank[node]) };
    let capacity = |node: usize| max_parents.min(candidates(node));

    let mut counts: Vec<usize> = (0..n)
        .map(|_| rng.random_range(1..=max_functions))
        .collect();
    let total = (target_density * n as f64).round() as usize;
    let mut room: usize = (0..n).map(|i| counts[i] * capacity(i)).sum();
    if room < total {
        let mut grow: Vec<usize> = (0..n).filter(|&i| capacity(i) > 0).collect();
        grow.shuffle(&mut rng);
        for i in grow {
            if room >= total {
                break;
            }
            room += (max_functions - counts[i]) * capacity(i);
            counts[i] = max_functions;
        }
    }
    if room < total {
        return Err(PbnError::Infeasible(format!(
            "{kept} kept nodes cannot carry {total} parent slots"
        )));
    }

    // parent count per function: units dropped on random open slots
    let mut arity: Vec<Vec<usize>> = counts.iter().map(|&c| vec![0; c]).collect();
    let mut open: Vec<(usize, usize)> = (0..n)
        .filter(|&i| capacity(i) > 0)
        .flat_map(|i| (0..counts[i]).map(move |f| (i, f)))
        .collect();
    for _ in 0..total {
        let slot = rng.random_range(0..open.len());
        let (i, f) = open[slot];
        arity[i][f] += 1;
        if arity[i][f] == capacity(i) {
            open.swap_remove(slot);
        }
    }

    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let pool: &[usize] = if rank[i] < kept {
            &kept_ids
        } else {
            &order[..rank[i]]
        };
        let mut functions = Vec::with_capacity(counts[i]);
        for &phi in &arity[i] {
            let mut parents: Vec<usize> = index::sample(&mut rng, pool.len(), phi)
                .into_iter()
                .map(|j| pool[j])
                .collect();
            parents.sort_unstable();
            let rows = 1usize << phi;
            let mut table = vec![0u64; rows.div_ceil(64)];
            for (w, word) in table.iter_mut().enumerate() {
                let bits = (rows - w * 64).min(64);
                *word = rng.random::<u64>()
                    & if bits == 64 {
                        u64::MAX
                    } else {
                        (1 << bits) - 1
                    };
            }
            functions.push(BooleanFunction::new(parents, table)?);
        }
        let weights: Vec<f64> = (0..counts[i])
            .map(|_| rng.random_range(1..=10) as f64)
            .collect();
        let sum: f64 = weights.iter().sum();
        let probs = weights.iter().map(|w| w / sum).collect();
        nodes.push(Node::new(format!("x{i}"), functions, probs));
    }

    Model::new(nodes, perturbation, Some(kept_ids))
}
