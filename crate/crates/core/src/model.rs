//! The network data model: nodes, predictor functions, packed states.

use std::collections::HashSet;
use std::fmt;

use crate::error::{PbnError, Result};

/// Largest supported number of parents of a single predictor function.
pub const MAX_ARITY: usize = 30;

/// Tolerance on the sum of a node's selection probabilities.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// A predictor function stored as a truth table over an ordered parent list.
///
/// Bit `v` of the table is the output when the parent values, read with
/// `parents[0]` as the least-significant bit, encode the integer `v`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BooleanFunction {
    parents: Vec<usize>,
    table: Vec<u64>,
}

impl BooleanFunction {
    /// Builds a function from packed truth-table words. Bits past `2^arity`
    /// must be clear.
    pub fn new(parents: Vec<usize>, table: Vec<u64>) -> Result<Self> {
        if parents.len() > MAX_ARITY {
            return Err(PbnError::InvalidModel(format!(
                "function has {} parents, the limit is {MAX_ARITY}",
                parents.len()
            )));
        }
        let mut seen = HashSet::with_capacity(parents.len());
        if let Some(dup) = parents.iter().find(|p| !seen.insert(**p)) {
            return Err(PbnError::InvalidModel(format!(
                "parent index {dup} listed twice in one function"
            )));
        }
        let rows = 1usize << parents.len();
        let words = rows.div_ceil(64);
        if table.len() != words {
            return Err(PbnError::InvalidModel(format!(
                "truth table has {} words, expected {words}",
                table.len()
            )));
        }
        if rows < 64 && table[0] >> rows != 0 {
            return Err(PbnError::InvalidModel(
                "truth table has bits set past its length".into(),
            ));
        }
        Ok(BooleanFunction { parents, table })
    }

    /// Tabulates `f` over every parent valuation.
    pub fn from_fn(parents: Vec<usize>, f: impl Fn(usize) -> bool) -> Result<Self> {
        if parents.len() > MAX_ARITY {
            return Err(PbnError::InvalidModel(format!(
                "function has {} parents, the limit is {MAX_ARITY}",
                parents.len()
            )));
        }
        let rows = 1usize << parents.len();
        let mut table = vec![0u64; rows.div_ceil(64)];
        for v in 0..rows {
            if f(v) {
                table[v >> 6] |= 1 << (v & 63);
            }
        }
        BooleanFunction::new(parents, table)
    }

    pub fn constant(value: bool) -> Self {
        BooleanFunction {
            parents: Vec::new(),
            table: vec![value as u64],
        }
    }

    /// The identity of a single parent.
    pub fn copy_of(parent: usize) -> Self {
        BooleanFunction {
            parents: vec![parent],
            table: vec![0b10],
        }
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn arity(&self) -> usize {
        self.parents.len()
    }

    pub fn table_words(&self) -> &[u64] {
        &self.table
    }

    /// Output for the parent valuation `v`.
    #[inline]
    pub fn output(&self, v: usize) -> bool {
        (self.table[v >> 6] >> (v & 63)) & 1 == 1
    }

    /// Parent valuation of `s` in this function's parent order.
    #[inline]
    pub fn valuation(&self, s: &State) -> usize {
        self.parents
            .iter()
            .enumerate()
            .fold(0, |v, (j, &p)| v | ((s.get(p) as usize) << j))
    }

    #[inline]
    pub fn eval(&self, s: &State) -> bool {
        self.output(self.valuation(s))
    }

    pub(crate) fn remap_parents(&self, map: impl Fn(usize) -> usize) -> Self {
        BooleanFunction {
            parents: self.parents.iter().map(|&p| map(p)).collect(),
            table: self.table.clone(),
        }
    }
}

impl fmt::Debug for BooleanFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = 1usize << self.arity();
        let bits: String = (0..rows)
            .rev()
            .map(|v| if self.output(v) { '1' } else { '0' })
            .collect();
        write!(f, "BooleanFunction({:?}, {bits})", self.parents)
    }
}

/// `f(s)` for the function `f` and state `s`.
#[inline]
pub fn eval_function(f: &BooleanFunction, s: &State) -> bool {
    f.eval(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub functions: Vec<BooleanFunction>,
    pub selection_probs: Vec<f64>,
}

impl Node {
    pub fn new(
        name: impl Into<String>,
        functions: Vec<BooleanFunction>,
        selection_probs: Vec<f64>,
    ) -> Self {
        Node {
            name: name.into(),
            functions,
            selection_probs,
        }
    }

    /// A node with one predictor function selected with probability 1.
    pub fn single(name: impl Into<String>, f: BooleanFunction) -> Self {
        Node::new(name, vec![f], vec![1.0])
    }

    pub fn function_count(&self) -> usize {
        self.functions.len()
    }

    /// Sorted union of the parents of all predictor functions.
    pub fn parent_union(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .functions
            .iter()
            .flat_map(|f| f.parents().iter().copied())
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    }
}

/// A probabilistic Boolean network with a per-node perturbation rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    nodes: Vec<Node>,
    perturbation: f64,
    interest: Vec<usize>,
}

impl Model {
    /// Validates and builds a model. `interest` of `None` marks every node as
    /// of interest. Selection probabilities within [`PROB_SUM_TOLERANCE`] of 1
    /// are renormalized.
    pub fn new(
        mut nodes: Vec<Node>,
        perturbation: f64,
        interest: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = nodes.len();
        if n == 0 {
            return Err(PbnError::InvalidModel(
                "a model needs at least one node".into(),
            ));
        }
        if !(perturbation > 0.0 && perturbation < 1.0) {
            return Err(PbnError::InvalidModel(format!(
                "perturbation rate {perturbation} is not in (0,1)"
            )));
        }
        let mut names = HashSet::with_capacity(n);
        for node in &mut nodes {
            if !names.insert(node.name.as_str()) {
                return Err(PbnError::DuplicateNode(node.name.clone()));
            }
            if node.functions.is_empty() {
                return Err(PbnError::InvalidModel(format!(
                    "node `{}` has no predictor functions",
                    node.name
                )));
            }
            if node.functions.len() != node.selection_probs.len() {
                return Err(PbnError::InvalidModel(format!(
                    "node `{}` has {} functions but {} probabilities",
                    node.name,
                    node.functions.len(),
                    node.selection_probs.len()
                )));
            }
            if let Some(p) = node
                .selection_probs
                .iter()
                .find(|&&p| !(p > 0.0 && p <= 1.0))
            {
                return Err(PbnError::InvalidModel(format!(
                    "node `{}` has selection probability {p} outside (0,1]",
                    node.name
                )));
            }
            let sum: f64 = node.selection_probs.iter().sum();
            if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
                return Err(PbnError::ProbabilitySum {
                    node: node.name.clone(),
                    sum,
                });
            }
            if sum != 1.0 {
                node.selection_probs.iter_mut().for_each(|p| *p /= sum);
            }
            for f in &node.functions {
                if let Some(&p) = f.parents().iter().find(|&&p| p >= n) {
                    return Err(PbnError::InvalidModel(format!(
                        "node `{}` references parent index {p} of a {n}-node model",
                        node.name
                    )));
                }
            }
        }
        let interest = match interest {
            None => (0..n).collect(),
            Some(mut set) => {
                set.sort_unstable();
                set.dedup();
                if let Some(&i) = set.iter().find(|&&i| i >= n) {
                    return Err(PbnError::InvalidModel(format!(
                        "interest index {i} out of range"
                    )));
                }
                set
            }
        };
        Ok(Model {
            nodes,
            perturbation,
            interest,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn perturbation(&self) -> f64 {
        self.perturbation
    }

    /// Sorted indices of the nodes of interest.
    pub fn interest(&self) -> &[usize] {
        &self.interest
    }

    pub fn is_of_interest(&self, i: usize) -> bool {
        self.interest.binary_search(&i).is_ok()
    }

    pub fn interest_is_everything(&self) -> bool {
        self.interest.len() == self.nodes.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn function_count(&self) -> usize {
        self.nodes.iter().map(Node::function_count).sum()
    }

    /// Same network with a different interest set.
    pub fn with_interest(&self, interest: Option<Vec<usize>>) -> Result<Self> {
        Model::new(self.nodes.clone(), self.perturbation, interest)
    }

    /// Same network with a different perturbation rate.
    pub fn with_perturbation(&self, p: f64) -> Result<Self> {
        Model::new(self.nodes.clone(), p, Some(self.interest.clone()))
    }

    /// Structural equality with selection probabilities compared to `tol`.
    pub fn approx_eq(&self, other: &Model, tol: f64) -> bool {
        self.nodes.len() == other.nodes.len()
            && self.interest == other.interest
            && (self.perturbation - other.perturbation).abs() <= tol
            && self.nodes.iter().zip(&other.nodes).all(|(a, b)| {
                a.name == b.name
                    && a.functions == b.functions
                    && a.selection_probs.len() == b.selection_probs.len()
                    && a.selection_probs
                        .iter()
                        .zip(&b.selection_probs)
                        .all(|(x, y)| (x - y).abs() <= tol)
            })
    }

    /// `children[i]` lists the distinct nodes having `i` as a parent in some
    /// predictor function.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            for p in node.parent_union() {
                children[p].push(i);
            }
        }
        children
    }
}

/// Density: total parent count over all predictor functions divided by the
/// number of nodes.
pub fn density(m: &Model) -> f64 {
    let total: usize = m
        .nodes()
        .iter()
        .flat_map(|n| n.functions.iter())
        .map(BooleanFunction::arity)
        .sum();
    total as f64 / m.len() as f64
}

/// A packed network state. Bit `i` is node `i`, little-endian within and
/// across words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct State {
    words: Vec<u64>,
    len: usize,
}

impl State {
    pub fn zeros(len: usize) -> Self {
        State {
            words: vec![0; len.div_ceil(64).max(1)],
            len,
        }
    }

    /// State whose bits are the low `len` bits of `index`.
    pub fn from_index(len: usize, index: u64) -> Self {
        assert!(len <= 64, "from_index needs len <= 64");
        let mut s = State::zeros(len);
        s.words[0] = if len == 64 {
            index
        } else {
            index & ((1u64 << len) - 1)
        };
        s
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = State::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.words[i >> 6] ^= 1 << (i & 63);
    }

    /// Integer value of the state; only defined for `len <= 64`.
    pub fn index(&self) -> u64 {
        assert!(self.len <= 64, "index needs len <= 64");
        self.words[0]
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    /// Indices of the set bits in ascending order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + bit)
            })
        })
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits: String = (0..self.len)
            .rev()
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect();
        write!(f, "State({bits})")
    }
}
