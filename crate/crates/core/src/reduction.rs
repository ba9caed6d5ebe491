//! Leaf removal.
//!
//! A leaf is a node outside the interest set with no children, either
//! directly or once its leaf children have been removed. Leaves never feed a
//! kept node, so the kept nodes evolve exactly as before provided the step
//! still sees whether any leaf was perturbed. That event has probability
//! `1 - t` with `t = (1 - p)^ℓ`, which makes the check constant-time.

use std::collections::VecDeque;

use crate::error::{PbnError, Result};
use crate::model::{Model, Node};

/// Removable nodes in removal order. Each node has no kept children at the
/// moment it is removed. A node listed among its own parents is never a leaf.
pub fn find_leaves(m: &Model) -> Vec<usize> {
    let n = m.len();
    let parents: Vec<Vec<usize>> = m.nodes().iter().map(Node::parent_union).collect();
    let mut child_count = vec![0usize; n];
    for ps in &parents {
        for &p in ps {
            child_count[p] += 1;
        }
    }

    let mut queue: VecDeque<usize> = (0..n)
        .filter(|&i| child_count[i] == 0 && !m.is_of_interest(i))
        .collect();
    let mut order = Vec::new();
    while let Some(x) = queue.pop_front() {
        order.push(x);
        for &p in &parents[x] {
            child_count[p] -= 1;
            if child_count[p] == 0 && !m.is_of_interest(p) {
                queue.push_back(p);
            }
        }
    }
    order
}

/// A model with its leaves removed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedModel {
    /// The kept nodes, re-indexed in their original relative order.
    pub model: Model,
    /// Original indices of the removed leaves, in removal order.
    pub removed: Vec<usize>,
    /// Original index to reduced index; `None` for leaves.
    pub index_map: Vec<Option<usize>>,
    /// Reduced index to original index.
    pub kept: Vec<usize>,
    /// Probability that no leaf is perturbed in a step, `(1 - p)^ℓ`.
    pub leaf_no_perturb_prob: f64,
}

impl ReducedModel {
    pub fn original_len(&self) -> usize {
        self.index_map.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.removed.len()
    }
}

/// Removes every leaf of `m`.
///
/// Fails only when nothing would survive, which requires an empty interest
/// set.
pub fn reduce(m: &Model) -> Result<ReducedModel> {
    let removed = find_leaves(m);
    let n = m.len();
    if removed.len() == n {
        return Err(PbnError::InvalidModel(
            "every node is a leaf; declare at least one node of interest".into(),
        ));
    }
    let mut is_leaf = vec![false; n];
    removed.iter().for_each(|&i| is_leaf[i] = true);

    let kept: Vec<usize> = (0..n).filter(|&i| !is_leaf[i]).collect();
    let mut index_map = vec![None; n];
    for (r, &o) in kept.iter().enumerate() {
        index_map[o] = Some(r);
    }

    let nodes = kept
        .iter()
        .map(|&o| {
            let node = m.node(o);
            let functions = node
                .functions
                .iter()
                .map(|f| f.remap_parents(|p| index_map[p].expect("kept node has a leaf parent")))
                .collect();
            Node::new(node.name.clone(), functions, node.selection_probs.clone())
        })
        .collect();
    let interest = m
        .interest()
        .iter()
        .map(|&i| index_map[i].expect("interest node removed"))
        .collect();
    let model = Model::new(nodes, m.perturbation(), Some(interest))?;

    Ok(ReducedModel {
        model,
        leaf_no_perturb_prob: (1.0 - m.perturbation()).powi(removed.len() as i32),
        removed,
        index_map,
        kept,
    })
}

/// True when the draw `u` says at least one leaf was perturbed this step.
#[inline]
pub fn check_leaf_perturbation(t: f64, u: f64) -> bool {
    u > t
}
