//! Exact transition probabilities for small networks.
//!
//! The kernel is built straight from the model: with probability
//! `p^h (1-p)^(n-h)` a step flips a given set of `h > 0` nodes, and otherwise
//! each node independently takes value 1 with the total probability of its
//! functions that output 1. None of the steppers' machinery is reused.

use std::collections::HashMap;

use crate::error::{PbnError, Result};
use crate::model::{Model, State};
use crate::reduction::ReducedModel;
use crate::sampling::AliasTable;

use super::{Draws, Stepper};

/// Largest network for which dense matrices are built.
pub const MAX_EXACT_NODES: usize = 12;

/// Largest network the factored operator accepts.
const MAX_OPERATOR_NODES: usize = 20;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }
}

/// Transition kernel over state indices, stored as the perturbation part
/// (applied bit by bit) plus a sparse update part.
#[derive(Debug, Clone)]
pub struct TransitionOperator {
    n: usize,
    p: f64,
    leaf_no_perturb_prob: f64,
    /// Distribution of the synchronous update from each state.
    update: Vec<Vec<(u32, f64)>>,
}

impl TransitionOperator {
    pub fn new(m: &Model) -> Result<Self> {
        Self::build(m, 1.0)
    }

    /// Kernel of the kept nodes of a reduced network: when no kept node
    /// flips, some leaf still flips with probability `1 - t` and the kept
    /// nodes stay put.
    pub fn reduced(r: &ReducedModel) -> Result<Self> {
        Self::build(&r.model, r.leaf_no_perturb_prob)
    }

    fn build(m: &Model, t: f64) -> Result<Self> {
        let n = m.len();
        if n > MAX_OPERATOR_NODES {
            return Err(PbnError::ResourceLimit(format!(
                "exact kernel limited to {MAX_OPERATOR_NODES} nodes, got {n}"
            )));
        }
        let update = (0..1u64 << n)
            .map(|index| {
                let s = State::from_index(n, index);
                let mut dist = vec![(0u32, 1.0)];
                for (i, node) in m.nodes().iter().enumerate() {
                    let (mut one, mut zero) = (0.0, 0.0);
                    for (f, c) in node.functions.iter().zip(&node.selection_probs) {
                        if f.eval(&s) {
                            one += c;
                        } else {
                            zero += c;
                        }
                    }
                    if zero == 0.0 {
                        dist.iter_mut().for_each(|(x, _)| *x |= 1 << i);
                    } else if one > 0.0 {
                        let ones: Vec<(u32, f64)> =
                            dist.iter().map(|&(x, q)| (x | 1 << i, q * one)).collect();
                        dist.iter_mut().for_each(|(_, q)| *q *= zero);
                        dist.extend(ones);
                    }
                }
                dist
            })
            .collect();
        Ok(TransitionOperator {
            n,
            p: m.perturbation(),
            leaf_no_perturb_prob: t,
            update,
        })
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    fn no_flip(&self) -> f64 {
        (1.0 - self.p).powi(self.n as i32)
    }

    /// Row `s` of the kernel.
    pub fn row(&self, s: usize) -> Vec<f64> {
        let n = self.n as i32;
        let mut row: Vec<f64> = (0..self.dim())
            .map(|to| {
                let h = (s ^ to).count_ones() as i32;
                if h == 0 {
                    0.0
                } else {
                    self.p.powi(h) * (1.0 - self.p).powi(n - h)
                }
            })
            .collect();
        let w = self.no_flip();
        row[s] += w * (1.0 - self.leaf_no_perturb_prob);
        for &(to, q) in &self.update[s] {
            row[to as usize] += w * self.leaf_no_perturb_prob * q;
        }
        row
    }

    pub fn dense(&self) -> DenseMatrix {
        let dim = self.dim();
        DenseMatrix {
            dim,
            data: (0..dim).flat_map(|s| self.row(s)).collect(),
        }
    }

    /// The row vector `x` times the kernel.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (p, q) = (self.p, 1.0 - self.p);
        let mut y = x.to_vec();
        for b in 0..self.n {
            let bit = 1 << b;
            for s in 0..self.dim() {
                if s & bit == 0 {
                    let (a, c) = (y[s], y[s | bit]);
                    y[s] = q * a + p * c;
                    y[s | bit] = p * a + q * c;
                }
            }
        }
        let w = self.no_flip();
        let t = self.leaf_no_perturb_prob;
        for (s, &xs) in x.iter().enumerate() {
            let mass = w * xs;
            y[s] -= mass * t;
            for &(to, q) in &self.update[s] {
                y[to as usize] += mass * t * q;
            }
        }
        y
    }
}

/// Dense kernel of the node-by-node chain on `m`.
pub fn exact_transition_matrix(m: &Model) -> Result<DenseMatrix> {
    if m.len() > MAX_EXACT_NODES {
        return Err(PbnError::ResourceLimit(format!(
            "exact matrix limited to {MAX_EXACT_NODES} nodes, got {}",
            m.len()
        )));
    }
    Ok(TransitionOperator::new(m)?.dense())
}

/// Stationary distribution by power iteration on the lazy chain, stopping
/// once `|xP - x|_1 <= tol`.
pub fn stationary_distribution(
    op: &TransitionOperator,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let dim = op.dim();
    let mut x = vec![1.0 / dim as f64; dim];
    for _ in 0..max_iter {
        let y = op.apply(&x);
        let residual: f64 = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        if residual <= tol {
            return Ok(x);
        }
        let mut next: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        x = next;
    }
    Err(PbnError::ResourceLimit(format!(
        "power iteration did not reach residual {tol} in {max_iter} iterations"
    )))
}

/// Walks every path of random decisions, depth first.
struct Enumerator {
    choices: Vec<usize>,
    widths: Vec<usize>,
    depth: usize,
    prob: f64,
}

impl Enumerator {
    fn choose(&mut self, options: &[(usize, f64)]) -> usize {
        if self.depth == self.choices.len() {
            self.choices.push(0);
            self.widths.push(options.len());
        }
        let (value, q) = options[self.choices[self.depth]];
        self.depth += 1;
        self.prob *= q;
        value
    }

    /// Moves to the next path; false once all are done.
    fn advance(&mut self) -> bool {
        while let Some(c) = self.choices.pop() {
            let w = self.widths.pop().unwrap();
            if c + 1 < w {
                self.choices.push(c + 1);
                self.widths.push(w);
                return true;
            }
        }
        false
    }
}

impl Draws for Enumerator {
    fn perturbed(&mut self, p: f64) -> bool {
        self.choose(&[(1, p), (0, 1.0 - p)]) == 1
    }

    fn pick(&mut self, table: &AliasTable) -> usize {
        self.choose(&table.outcomes())
    }

    fn leaf_perturbed(&mut self, t: f64) -> bool {
        self.choose(&[(1, 1.0 - t), (0, t)]) == 1
    }
}

/// Exact distribution of the engine state after one step from `state`.
pub fn enumerate_step<E: Stepper + ?Sized>(engine: &E, state: &State) -> HashMap<State, f64> {
    let mut out: HashMap<State, f64> = HashMap::new();
    let mut scratch = State::zeros(state.len());
    let mut walk = Enumerator {
        choices: Vec::new(),
        widths: Vec::new(),
        depth: 0,
        prob: 1.0,
    };
    loop {
        walk.depth = 0;
        walk.prob = 1.0;
        let mut s = state.clone();
        engine.step(&mut s, &mut scratch, &mut walk);
        // a shorter path than last time leaves stale deeper choices behind
        walk.choices.truncate(walk.depth);
        walk.widths.truncate(walk.depth);
        *out.entry(s).or_insert(0.0) += walk.prob;
        if !walk.advance() {
            return out;
        }
    }
}

/// Exact one-step distribution of `engine` from the model-order state with
/// index `from`, as a vector over model-order state indices. Every node must
/// be simulated.
pub fn step_row<E: Stepper + ?Sized>(engine: &E, from: u64) -> Result<Vec<f64>> {
    let n = engine.model_len();
    if n > MAX_EXACT_NODES || engine.width() != n {
        return Err(PbnError::InvalidArgument(format!(
            "step rows need at most {MAX_EXACT_NODES} nodes, none removed"
        )));
    }
    let start = engine.encode(&State::from_index(n, from));
    let mut row = vec![0.0; 1 << n];
    let mut model_state = State::zeros(n);
    for (s, q) in enumerate_step(engine, &start) {
        engine.decode_into(&s, &mut model_state);
        row[model_state.index() as usize] += q;
    }
    Ok(row)
}
