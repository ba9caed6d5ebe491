//! Constant-time discrete sampling with Walker alias tables, and the shared
//! table used to perturb `k` nodes per draw.

use rand::RngCore;

use crate::error::{PbnError, Result};
use crate::rng::uniform;

/// Largest supported perturbation group width.
pub const MAX_PERTURBATION_WIDTH: usize = 24;

/// Default perturbation group width.
pub const DEFAULT_PERTURBATION_WIDTH: usize = 16;

/// Walker alias table over `0..len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    /// Cut-off of each cell.
    pub fn cutoffs(&self) -> &[f64] {
        &self.prob
    }

    pub fn aliases(&self) -> &[u32] {
        &self.alias
    }

    /// Cell `⌊u1·N⌋`; its own index when `u2` is under the cell's cut-off,
    /// otherwise its alias.
    #[inline]
    pub fn next(&self, u1: f64, u2: f64) -> usize {
        let n = self.prob.len();
        let i = ((u1 * n as f64) as usize).min(n - 1);
        if u2 < self.prob[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }

    #[inline]
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        let u1 = uniform(rng);
        let u2 = uniform(rng);
        self.next(u1, u2)
    }

    /// Probability of every outcome implied by the table cells, with
    /// outcomes of zero mass omitted.
    pub fn outcomes(&self) -> Vec<(usize, f64)> {
        let n = self.prob.len() as f64;
        let mut mass = vec![0.0; self.prob.len()];
        for (i, (&cut, &alias)) in self.prob.iter().zip(&self.alias).enumerate() {
            mass[i] += cut / n;
            mass[alias as usize] += (1.0 - cut) / n;
        }
        mass.into_iter()
            .enumerate()
            .filter(|&(_, m)| m > 0.0)
            .collect()
    }
}

/// Builds an alias table with the small/large worklist construction.
pub fn build_alias(probs: &[f64]) -> Result<AliasTable> {
    if probs.is_empty() {
        return Err(PbnError::InvalidArgument("empty distribution".into()));
    }
    if probs.len() > u32::MAX as usize {
        return Err(PbnError::ResourceLimit("distribution too large".into()));
    }
    if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(PbnError::InvalidArgument(format!(
            "invalid probability {p}"
        )));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(PbnError::InvalidArgument(format!(
            "probabilities sum to {sum}"
        )));
    }

    let n = probs.len();
    let scale = n as f64 / sum;
    let mut scaled: Vec<f64> = probs.iter().map(|p| p * scale).collect();
    let mut prob = vec![1.0; n];
    let mut alias: Vec<u32> = (0..n as u32).collect();
    let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| scaled[i] < 1.0);

    while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
        small.pop();
        prob[s] = scaled[s];
        alias[s] = l as u32;
        scaled[l] = (scaled[l] + scaled[s]) - 1.0;
        if scaled[l] < 1.0 {
            large.pop();
            small.push(l);
        }
    }
    // Leftovers on either list hold mass 1 up to rounding.
    for i in small.into_iter().chain(large) {
        prob[i] = 1.0;
        alias[i] = i as u32;
    }
    Ok(AliasTable { prob, alias })
}

/// Shared perturbation table and mask for perturbing nodes `k` at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationPlan {
    /// Nodes per group.
    pub k: usize,
    /// Number of groups.
    pub groups: usize,
    /// Width of the last group.
    pub last_width: usize,
    /// Bits `0..last_width` set.
    pub mask: u64,
    /// Distribution over the `2^k` flip patterns of one group.
    pub table: AliasTable,
}

impl PerturbationPlan {
    /// Number of nodes covered.
    pub fn width(&self) -> usize {
        self.k * (self.groups - 1) + self.last_width
    }
}

/// Plans grouped perturbation of `n` nodes at rate `p`, at most `k_max` per
/// group. Groups are rebalanced so that only the last one is narrower.
pub fn build_perturbation_plan(n: usize, k_max: usize, p: f64) -> Result<PerturbationPlan> {
    if n == 0 {
        return Err(PbnError::InvalidArgument("no nodes to perturb".into()));
    }
    if !(1..=MAX_PERTURBATION_WIDTH).contains(&k_max) {
        return Err(PbnError::InvalidArgument(format!(
            "perturbation width {k_max} outside 1..={MAX_PERTURBATION_WIDTH}"
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(PbnError::InvalidArgument(format!(
            "perturbation rate {p} is not in (0,1)"
        )));
    }
    let groups = n.div_ceil(k_max);
    let k = n.div_ceil(groups);
    let last_width = n - k * (groups - 1);
    let probs: Vec<f64> = (0..1u64 << k)
        .map(|c| {
            let flips = c.count_ones() as i32;
            p.powi(flips) * (1.0 - p).powi(k as i32 - flips)
        })
        .collect();
    Ok(PerturbationPlan {
        k,
        groups,
        last_width,
        mask: (1u64 << last_width) - 1,
        table: build_alias(&probs)?,
    })
}
