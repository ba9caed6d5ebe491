//! Node grouping for simultaneous update.
//!
//! Nodes with several predictor functions are split into groups whose
//! combined-function counts (the product of the members' function counts)
//! sum to at most `theta`. The group count starts at the lower bound of the
//! AM-GM inequality and grows until the product-greedy partition fits.
//! Single-function nodes need no selection and are packed by shared parents
//! instead. Each combined function of a group gets a truth table indexed by
//! the valuation of the parents its member functions read.

use crate::error::{PbnError, Result};
use crate::model::Model;
use crate::sampling::{build_alias, AliasTable};

pub const DEFAULT_THETA: u64 = 1 << 25;
pub const DEFAULT_MAX_GROUP_PARENTS: usize = 18;
/// Default cap on the total number of combined-table entries of a plan.
pub const DEFAULT_TABLE_BUDGET: u64 = 1 << 22;
/// Combined outputs are packed in a `u32`.
pub const MAX_GROUP_MEMBERS: usize = 32;

/// Smallest `m` with `m * (Π weights)^(1/m) <= theta`, searched in log space
/// over `1..=max(1, weights.len())`.
///
/// No partition into fewer groups can meet the budget. Fails when no `m` in
/// range qualifies, in which case no partition exists at all.
pub fn lower_bound(weights: &[u64], theta: u64) -> Result<usize> {
    let log_prod: f64 = weights.iter().map(|&w| (w as f64).ln()).sum();
    let log_theta = (theta as f64).ln();
    (1..=weights.len().max(1))
        .find(|&m| (m as f64).ln() + log_prod / m as f64 <= log_theta + 1e-12)
        .ok_or_else(|| {
            PbnError::Infeasible(format!(
                "no grouping of {} weights fits theta = {theta}",
                weights.len()
            ))
        })
}

/// Product-greedy multiway partition: items in descending weight order (ties
/// by index) each join the group of smallest current product (ties by group
/// index). Returns `m` lists of indices into `weights`; some may be empty.
pub fn greedy_partition(weights: &[u64], m: usize) -> Vec<Vec<usize>> {
    assert!(m >= 1, "need at least one group");
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].cmp(&weights[a]).then(a.cmp(&b)));
    let mut groups = vec![Vec::new(); m];
    let mut products = vec![1u128; m];
    for item in order {
        let (g, _) = products
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(&b.0)))
            .expect("m >= 1");
        groups[g].push(item);
        products[g] = products[g].saturating_mul(weights[item] as u128);
    }
    groups
}

/// Saturating product of the weights of `group`.
pub fn group_product(weights: &[u64], group: &[usize]) -> u128 {
    group
        .iter()
        .fold(1u128, |acc, &i| acc.saturating_mul(weights[i] as u128))
}

/// Sum over the non-empty groups of their weight products.
pub fn product_sum(weights: &[u64], groups: &[Vec<usize>]) -> u128 {
    groups
        .iter()
        .filter(|g| !g.is_empty())
        .fold(0u128, |acc, g| {
            acc.saturating_add(group_product(weights, g))
        })
}

/// Grows `m` from [`lower_bound`] until the greedy partition's product sum is
/// within `theta`. Empty groups are dropped from the result.
pub fn partition_weights(weights: &[u64], theta: u64) -> Result<Vec<Vec<usize>>> {
    if weights.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(&w) = weights.iter().find(|&&w| w > theta) {
        return Err(PbnError::InvalidArgument(format!(
            "theta = {theta} is smaller than a node with {w} functions"
        )));
    }
    let mut m = lower_bound(weights, theta)?;
    loop {
        let groups = greedy_partition(weights, m);
        if product_sum(weights, &groups) <= theta as u128 {
            return Ok(groups.into_iter().filter(|g| !g.is_empty()).collect());
        }
        if m >= weights.len() {
            return Err(PbnError::Infeasible(format!(
                "even one node per group exceeds theta = {theta}"
            )));
        }
        m += 1;
    }
}

/// Sorted union of two sorted lists.
fn merge_union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn shared_count(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Greedy packing by shared parents: each node joins the group sharing the
/// most parents with it (ties by group index) among groups that stay within
/// `cap` parents and [`MAX_GROUP_MEMBERS`] members; otherwise it opens a new
/// group. A node alone may exceed `cap`.
pub fn pack_by_parents(nodes: &[usize], parents: &[Vec<usize>], cap: usize) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut unions: Vec<Vec<usize>> = Vec::new();
    for &x in nodes {
        let px = &parents[x];
        let best = unions
            .iter()
            .enumerate()
            .filter(|(g, u)| {
                groups[*g].len() < MAX_GROUP_MEMBERS
                    && u.len() + px.len() - shared_count(u, px) <= cap
            })
            .map(|(g, u)| (shared_count(u, px), g))
            .min_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        match best {
            Some((_, g)) => {
                groups[g].push(x);
                unions[g] = merge_union(&unions[g], px);
            }
            None => {
                groups.push(vec![x]);
                unions.push(px.clone());
            }
        }
    }
    groups
}

/// Grouping parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupingConfig {
    /// Budget on the summed combined-function counts of multi-function groups.
    pub theta: u64,
    /// Largest parent union a merged group may have.
    pub max_group_parents: usize,
    /// Budget on the total entries of all combined tables.
    pub table_budget: u64,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        GroupingConfig {
            theta: DEFAULT_THETA,
            max_group_parents: DEFAULT_MAX_GROUP_PARENTS,
            table_budget: DEFAULT_TABLE_BUDGET,
        }
    }
}

/// One combined predictor function of a group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedFunction<'a> {
    /// Union of the parents of the combined member functions, ascending;
    /// entry `v` of the table is the output for the valuation `v` of these
    /// parents, first parent lowest.
    pub parents: &'a [usize],
    /// Member outputs packed bitwise, member 0 lowest.
    pub truth_table: &'a [u32],
    pub selection_prob: f64,
}

impl CombinedFunction<'_> {
    #[inline]
    pub fn output(&self, v: usize) -> u32 {
        self.truth_table[v]
    }
}

/// All combined functions of one group, each with its own parents, stored
/// back to back.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedTable {
    /// Parents of every function, concatenated.
    pub parents: Vec<usize>,
    /// Function `c` reads `parents[parent_offsets[c]..parent_offsets[c + 1]]`.
    pub parent_offsets: Vec<usize>,
    /// Truth tables, concatenated.
    pub outputs: Vec<u32>,
    /// Function `c`'s table starts at `table_offsets[c]`.
    pub table_offsets: Vec<usize>,
    pub probs: Vec<f64>,
}

impl CombinedTable {
    pub fn count(&self) -> usize {
        self.probs.len()
    }

    pub fn function(&self, c: usize) -> CombinedFunction<'_> {
        let parents = &self.parents[self.parent_offsets[c]..self.parent_offsets[c + 1]];
        let start = self.table_offsets[c];
        CombinedFunction {
            parents,
            truth_table: &self.outputs[start..start + (1 << parents.len())],
            selection_prob: self.probs[c],
        }
    }

    pub fn functions(&self) -> impl Iterator<Item = CombinedFunction<'_>> {
        (0..self.count()).map(move |c| self.function(c))
    }
}

/// Function choice of every member for combined function `c`; the first
/// member's choice varies slowest.
pub fn decode_choice(counts: &[usize], mut c: usize) -> Vec<usize> {
    let mut choice = vec![0; counts.len()];
    for (j, &l) in counts.iter().enumerate().rev() {
        choice[j] = c % l;
        c /= l;
    }
    choice
}

/// Visits the parent union of every combined function of `members`, in
/// combined-function order. Stops early when `visit` returns false.
fn for_each_union(members: &[usize], m: &Model, visit: &mut impl FnMut(&[usize]) -> bool) {
    fn rec(
        j: usize,
        members: &[usize],
        m: &Model,
        unions: &mut [Vec<usize>],
        visit: &mut impl FnMut(&[usize]) -> bool,
    ) -> bool {
        if j == members.len() {
            return visit(&unions[j]);
        }
        for f in &m.node(members[j]).functions {
            let (done, rest) = unions.split_at_mut(j + 1);
            rest[0] = merge_union(&done[j], f.parents());
            if !rec(j + 1, members, m, unions, visit) {
                return false;
            }
        }
        true
    }
    let mut unions = vec![Vec::new(); members.len() + 1];
    rec(0, members, m, &mut unions, visit);
}

/// Table entries needed to combine `members`, saturating once past `limit`.
pub fn combined_size(members: &[usize], m: &Model, limit: u128) -> u128 {
    let mut total = 0u128;
    for_each_union(members, m, &mut |u| {
        total = total.saturating_add(1u128 << u.len().min(100));
        total <= limit
    });
    total
}

/// Cartesian product of the members' predictor functions.
///
/// Fails with a resource error when the tables would exceed `entry_limit`.
pub fn combine(members: &[usize], m: &Model, entry_limit: u64) -> Result<CombinedTable> {
    if members.is_empty() || members.len() > MAX_GROUP_MEMBERS {
        return Err(PbnError::InvalidArgument(format!(
            "a group needs 1..={MAX_GROUP_MEMBERS} members, got {}",
            members.len()
        )));
    }
    let entries = combined_size(members, m, entry_limit as u128);
    if entries > entry_limit as u128 {
        return Err(PbnError::ResourceLimit(format!(
            "combining {} nodes needs more than {entry_limit} table entries",
            members.len()
        )));
    }

    let counts: Vec<usize> = members
        .iter()
        .map(|&x| m.node(x).function_count())
        .collect();
    let total: usize = counts.iter().product();
    let mut table = CombinedTable {
        parents: Vec::new(),
        parent_offsets: vec![0],
        outputs: Vec::with_capacity(entries as usize),
        table_offsets: Vec::with_capacity(total),
        probs: Vec::with_capacity(total),
    };
    for c in 0..total {
        let choice = decode_choice(&counts, c);
        let functions: Vec<_> = members
            .iter()
            .zip(&choice)
            .map(|(&x, &f)| &m.node(x).functions[f])
            .collect();
        table.probs.push(
            members
                .iter()
                .zip(&choice)
                .map(|(&x, &f)| m.node(x).selection_probs[f])
                .product(),
        );
        let parents = functions
            .iter()
            .fold(Vec::new(), |u, f| merge_union(&u, f.parents()));
        // bit of each member parent within the combined valuation
        let at: Vec<Vec<usize>> = functions
            .iter()
            .map(|f| {
                f.parents()
                    .iter()
                    .map(|p| parents.binary_search(p).unwrap())
                    .collect()
            })
            .collect();
        table.table_offsets.push(table.outputs.len());
        for v in 0..1usize << parents.len() {
            let mut out = 0u32;
            for (j, (f, at)) in functions.iter().zip(&at).enumerate() {
                let idx = at
                    .iter()
                    .enumerate()
                    .fold(0, |acc, (b, &bit)| acc | (((v >> bit) & 1) << b));
                out |= (f.output(idx) as u32) << j;
            }
            table.outputs.push(out);
        }
        table.parents.extend_from_slice(&parents);
        table.parent_offsets.push(table.parents.len());
    }
    Ok(table)
}

/// One update group.
#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    /// Member node indices, ascending. Member `j` is output bit `j`.
    pub members: Vec<usize>,
    pub combined: CombinedTable,
    /// Selection table over the combined functions; `None` when there is only
    /// one.
    pub alias: Option<AliasTable>,
    /// Whether the members have several predictor functions.
    pub multi_function: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupingPlan {
    /// Multi-function groups first, then single-function groups.
    pub groups: Vec<Group>,
    /// `cum[i]` is the number of nodes in groups `0..i`.
    pub cum: Vec<usize>,
    /// Parent-union cap the packing settled on.
    pub effective_max_parents: usize,
}

impl GroupingPlan {
    pub fn node_count(&self) -> usize {
        self.groups.iter().map(|g| g.members.len()).sum()
    }

    /// Summed combined-function counts of the multi-function groups.
    pub fn product_sum(&self) -> u64 {
        self.groups
            .iter()
            .filter(|g| g.multi_function)
            .map(|g| g.combined.count() as u64)
            .sum()
    }

    pub fn table_entries(&self) -> u64 {
        self.groups
            .iter()
            .map(|g| g.combined.outputs.len() as u64)
            .sum()
    }

    /// Rough heap footprint of tables and alias tables, in bytes.
    pub fn memory_estimate(&self) -> u64 {
        self.groups
            .iter()
            .map(|g| {
                g.combined.outputs.len() as u64 * 4
                    + g.combined.parents.len() as u64 * 8
                    + g.combined.probs.len() as u64 * 24
                    + g.alias.as_ref().map_or(0, |a| a.len() as u64 * 12)
            })
            .sum()
    }

    /// Bit position of each node in a state packed group after group.
    pub fn positions(&self, n: usize) -> Vec<usize> {
        let mut pos = vec![usize::MAX; n];
        for (g, offset) in self.groups.iter().zip(&self.cum) {
            for (j, &x) in g.members.iter().enumerate() {
                pos[x] = offset + j;
            }
        }
        pos
    }
}

/// Partitions every node of `m` into update groups and builds their combined
/// functions.
///
/// When the tables would exceed `cfg.table_budget`, the parent-union cap is
/// lowered step by step until they fit.
pub fn partition(m: &Model, cfg: &GroupingConfig) -> Result<GroupingPlan> {
    let parents: Vec<Vec<usize>> = m.nodes().iter().map(|n| n.parent_union()).collect();
    let (multi, single): (Vec<usize>, Vec<usize>) =
        (0..m.len()).partition(|&i| m.node(i).function_count() > 1);

    if let Some(&x) = single.iter().max_by_key(|&&x| parents[x].len()) {
        if parents[x].len() > cfg.max_group_parents {
            return Err(PbnError::InvalidArgument(format!(
                "node `{}` has {} parents, above max_group_parents = {}",
                m.node(x).name,
                parents[x].len(),
                cfg.max_group_parents
            )));
        }
    }
    let weights: Vec<u64> = multi
        .iter()
        .map(|&x| m.node(x).function_count() as u64)
        .collect();
    let weight_groups: Vec<Vec<usize>> = partition_weights(&weights, cfg.theta)?
        .into_iter()
        .map(|g| g.into_iter().map(|i| multi[i]).collect())
        .collect();

    let mut cap = cfg.max_group_parents;
    let (multi_groups, single_groups) = loop {
        let multi_groups: Vec<Vec<usize>> = weight_groups
            .iter()
            .flat_map(|g| pack_by_parents(g, &parents, cap))
            .collect();
        let single_groups = pack_by_parents(&single, &parents, cap);
        let entries = multi_groups
            .iter()
            .chain(&single_groups)
            .fold(0u128, |acc, g| {
                let left = (cfg.table_budget as u128 + 1).saturating_sub(acc);
                acc.saturating_add(combined_size(g, m, left))
            });
        if entries <= cfg.table_budget as u128 {
            break (multi_groups, single_groups);
        }
        if cap == 0 {
            return Err(PbnError::ResourceLimit(format!(
                "combined tables need {entries} entries even for single nodes, budget {}",
                cfg.table_budget
            )));
        }
        cap -= 1;
    };

    let mut groups = Vec::with_capacity(multi_groups.len() + single_groups.len());
    for (mut members, multi_function) in multi_groups
        .into_iter()
        .map(|g| (g, true))
        .chain(single_groups.into_iter().map(|g| (g, false)))
    {
        members.sort_unstable();
        let combined = combine(&members, m, cfg.table_budget)?;
        let alias = if combined.count() > 1 {
            Some(build_alias(&combined.probs)?)
        } else {
            None
        };
        groups.push(Group {
            members,
            combined,
            alias,
            multi_function,
        });
    }
    let cum = groups
        .iter()
        .scan(0, |acc, g| {
            let start = *acc;
            *acc += g.members.len();
            Some(start)
        })
        .collect();
    Ok(GroupingPlan {
        groups,
        cum,
        effective_max_parents: cap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BooleanFunction, Node, State};
    use crate::rng::{seeded, uniform};

    #[test]
    fn lower_bound_examples() {
        assert_eq!(lower_bound(&[2, 2, 2, 2], 16).unwrap(), 1);
        // m=1: 256 > 30, m=2: 32 > 30, m=3: 19.05 <= 30
        assert_eq!(lower_bound(&[4, 4, 4, 4], 30).unwrap(), 3);
        assert!(lower_bound(&[4, 4, 4, 4], 5).is_err());
    }

    #[test]
    fn greedy_hand_trace() {
        let groups = greedy_partition(&[8, 7, 6, 5, 4], 2);
        assert_eq!(groups, vec![vec![0, 3, 4], vec![1, 2]]);
        let w = [8, 7, 6, 5, 4];
        assert_eq!(group_product(&w, &groups[0]), 160);
        assert_eq!(group_product(&w, &groups[1]), 42);
    }

    #[test]
    fn greedy_edge_counts() {
        let w = [3, 5, 2];
        assert_eq!(greedy_partition(&w, 1), vec![vec![1, 0, 2]]);
        let spread = greedy_partition(&w, 5);
        assert_eq!(spread.iter().filter(|g| g.len() == 1).count(), 3);
        assert_eq!(spread.iter().filter(|g| g.is_empty()).count(), 2);
    }

    #[test]
    fn greedy_is_permutation_invariant() {
        let mut rng = seeded(8);
        for _ in 0..200 {
            let len = 1 + (uniform(&mut rng) * 9.0) as usize;
            let w: Vec<u64> = (0..len)
                .map(|_| 2 + (uniform(&mut rng) * 5.0) as u64)
                .collect();
            let m = 1 + (uniform(&mut rng) * 4.0) as usize;
            let mut perm: Vec<usize> = (0..len).collect();
            perm.reverse();
            let shuffled: Vec<u64> = perm.iter().map(|&i| w[i]).collect();
            let products = |ws: &[u64], gs: Vec<Vec<usize>>| -> Vec<u128> {
                gs.iter().map(|g| group_product(ws, g)).collect()
            };
            assert_eq!(
                products(&w, greedy_partition(&w, m)),
                products(&shuffled, greedy_partition(&shuffled, m))
            );
        }
    }

    /// All partitions of `0..n` into at most `blocks` non-empty blocks.
    fn set_partitions(n: usize, blocks: usize, f: &mut impl FnMut(&[usize])) {
        fn rec(
            i: usize,
            n: usize,
            blocks: usize,
            used: usize,
            label: &mut Vec<usize>,
            f: &mut impl FnMut(&[usize]),
        ) {
            if i == n {
                f(label);
                return;
            }
            for b in 0..(used + 1).min(blocks) {
                label.push(b);
                rec(i + 1, n, blocks, used.max(b + 1), label, f);
                label.pop();
            }
        }
        rec(0, n, blocks, 0, &mut Vec::new(), f);
    }

    #[test]
    fn no_partition_below_lower_bound_fits() {
        let mut rng = seeded(21);
        let mut checked = 0;
        while checked < 50 {
            let len = 1 + (uniform(&mut rng) * 8.0) as usize;
            let w: Vec<u64> = (0..len)
                .map(|_| 2 + (uniform(&mut rng) * 5.0) as u64)
                .collect();
            let prod: u64 = w.iter().product();
            let max_w = *w.iter().max().unwrap();
            let theta = max_w + (uniform(&mut rng) * prod as f64) as u64;
            let Ok(m_hat) = lower_bound(&w, theta) else {
                continue;
            };
            if m_hat > 1 {
                set_partitions(len, m_hat - 1, &mut |label| {
                    let mut products = vec![1u64; m_hat - 1];
                    for (i, &b) in label.iter().enumerate() {
                        products[b] *= w[i];
                    }
                    let used = label.iter().max().unwrap() + 1;
                    let sum: u64 = products[..used].iter().sum();
                    assert!(sum > theta, "{w:?} theta={theta} m_hat={m_hat}");
                });
            }
            if let Ok(groups) = partition_weights(&w, theta) {
                assert!(product_sum(&w, &groups) <= theta as u128);
                assert!(groups.len() >= m_hat);
            }
            checked += 1;
        }
    }

    fn and_or_model() -> Model {
        // x0 = x1 AND x2, x3 = x1 OR x2
        let and = BooleanFunction::new(vec![1, 2], vec![0b1000]).unwrap();
        let or = BooleanFunction::new(vec![1, 2], vec![0b1110]).unwrap();
        Model::new(
            vec![
                Node::single("x0", and),
                Node::single("x1", BooleanFunction::constant(false)),
                Node::single("x2", BooleanFunction::constant(true)),
                Node::single("x3", or),
            ],
            0.01,
            None,
        )
        .unwrap()
    }

    #[test]
    fn combine_and_or() {
        let m = and_or_model();
        let t = combine(&[0, 3], &m, 1 << 20).unwrap();
        assert_eq!(t.function(0).parents, &[1, 2]);
        assert_eq!(t.count(), 1);
        assert_eq!(t.function(0).truth_table, &[0b00, 0b10, 0b10, 0b11]);
    }

    #[test]
    fn combine_single_function_is_identity() {
        let m = and_or_model();
        let t = combine(&[0], &m, 1 << 20).unwrap();
        let f = &m.node(0).functions[0];
        for v in 0..4 {
            assert_eq!(t.function(0).output(v) == 1, f.output(v));
        }
    }

    fn multi_model() -> Model {
        let a = Node::new(
            "a",
            vec![BooleanFunction::copy_of(2), BooleanFunction::constant(true)],
            vec![0.3, 0.7],
        );
        let b = Node::new(
            "b",
            vec![
                BooleanFunction::copy_of(0),
                BooleanFunction::new(vec![0, 2], vec![0b0110]).unwrap(),
                BooleanFunction::constant(false),
            ],
            vec![0.2, 0.5, 0.3],
        );
        let c = Node::single("c", BooleanFunction::copy_of(1));
        Model::new(vec![a, b, c], 0.05, None).unwrap()
    }

    #[test]
    fn combine_products_and_semantics() {
        let m = multi_model();
        let t = combine(&[0, 1], &m, 1 << 20).unwrap();
        assert_eq!(t.count(), 6);
        assert!((t.probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for (c, f) in t.functions().enumerate() {
            let choice = decode_choice(&[2, 3], c);
            let want_prob =
                m.node(0).selection_probs[choice[0]] * m.node(1).selection_probs[choice[1]];
            assert!((f.selection_prob - want_prob).abs() < 1e-15);
            let own: Vec<usize> = [0usize, 1]
                .iter()
                .zip(&choice)
                .fold(Vec::new(), |u, (&x, &k)| {
                    merge_union(&u, m.node(x).functions[k].parents())
                });
            assert_eq!(f.parents, own.as_slice());
            for idx in 0..8u64 {
                let s = State::from_index(3, idx);
                let v = f
                    .parents
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (b, &p)| acc | ((s.get(p) as usize) << b));
                for (j, &x) in [0usize, 1].iter().enumerate() {
                    let want = m.node(x).functions[choice[j]].eval(&s);
                    assert_eq!((f.output(v) >> j) & 1 == 1, want);
                }
            }
        }
        assert!(matches!(
            combine(&[0, 1], &m, 10),
            Err(PbnError::ResourceLimit(_))
        ));
    }

    #[test]
    fn disjoint_pairs_fill_eighteen_parents() {
        // 36 single-function nodes over disjoint parent pairs; the 72 parents
        // are two-function nodes and group separately
        let mut nodes: Vec<Node> = (0..36)
            .map(|i| {
                Node::single(
                    format!("y{i}"),
                    BooleanFunction::new(vec![36 + 2 * i, 37 + 2 * i], vec![0b0110]).unwrap(),
                )
            })
            .collect();
        nodes.extend((0..72).map(|i| {
            Node::new(
                format!("c{i}"),
                vec![
                    BooleanFunction::constant(true),
                    BooleanFunction::constant(false),
                ],
                vec![0.5, 0.5],
            )
        }));
        let m = Model::new(nodes, 0.01, None).unwrap();
        let plan = partition(&m, &GroupingConfig::default()).unwrap();
        let sizes: Vec<usize> = plan
            .groups
            .iter()
            .filter(|g| !g.multi_function)
            .map(|g| g.members.len())
            .collect();
        assert_eq!(sizes, vec![9, 9, 9, 9]);
        assert!(plan.product_sum() <= DEFAULT_THETA);
    }

    #[test]
    fn lone_multi_function_node_at_tight_theta() {
        let m = Model::new(
            vec![
                Node::new(
                    "a",
                    vec![
                        BooleanFunction::copy_of(1),
                        BooleanFunction::constant(true),
                        BooleanFunction::constant(false),
                    ],
                    vec![0.2, 0.3, 0.5],
                ),
                Node::single("b", BooleanFunction::copy_of(0)),
            ],
            0.01,
            None,
        )
        .unwrap();
        let cfg = GroupingConfig {
            theta: 3,
            ..GroupingConfig::default()
        };
        let plan = partition(&m, &cfg).unwrap();
        assert_eq!(plan.groups.len(), 2);
        assert_eq!(plan.groups[0].members, vec![0]);
        assert_eq!(plan.product_sum(), 3);
        let cfg = GroupingConfig {
            theta: 2,
            ..GroupingConfig::default()
        };
        assert!(partition(&m, &cfg).is_err());
    }

    #[test]
    fn plan_invariants() {
        let m = multi_model();
        let plan = partition(&m, &GroupingConfig::default()).unwrap();
        assert_eq!(plan.cum[0], 0);
        assert!(plan.cum.windows(2).all(|w| w[0] < w[1]));
        let mut all: Vec<usize> = plan.groups.iter().flat_map(|g| g.members.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2]);
        assert!(plan.groups[0].multi_function);
        let pos = plan.positions(3);
        assert!(pos.iter().all(|&p| p < 3));
    }

    #[test]
    fn tight_table_budget_lowers_the_cap() {
        let nodes: Vec<Node> = (0..8)
            .map(|i| Node::single(format!("x{i}"), BooleanFunction::copy_of((i + 1) % 8)))
            .collect();
        let m = Model::new(nodes, 0.01, None).unwrap();
        let cfg = GroupingConfig {
            table_budget: 16,
            ..GroupingConfig::default()
        };
        let plan = partition(&m, &cfg).unwrap();
        assert!(plan.table_entries() <= 16);
        assert!(plan.effective_max_parents < DEFAULT_MAX_GROUP_PARENTS);
        let cfg = GroupingConfig {
            table_budget: 15,
            ..GroupingConfig::default()
        };
        assert!(matches!(
            partition(&m, &cfg),
            Err(PbnError::ResourceLimit(_))
        ));
    }
}
