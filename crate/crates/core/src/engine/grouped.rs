use crate::error::Result;
use crate::grouping::{partition, GroupingConfig, GroupingPlan};
use crate::model::{Model, State};
use crate::reduction::{reduce, ReducedModel};
use crate::sampling::{build_perturbation_plan, PerturbationPlan, DEFAULT_PERTURBATION_WIDTH};

use super::{Draws, Stepper};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrepareConfig {
    pub grouping: GroupingConfig,
    /// Largest perturbation group width.
    pub k_max: usize,
}

impl Default for PrepareConfig {
    fn default() -> Self {
        PrepareConfig {
            grouping: GroupingConfig::default(),
            k_max: DEFAULT_PERTURBATION_WIDTH,
        }
    }
}

/// Everything the grouped stepper precomputes.
#[derive(Debug, Clone)]
pub struct PreparedSimulation {
    pub reduced: ReducedModel,
    pub perturbation: PerturbationPlan,
    pub grouping: GroupingPlan,
}

/// Removes leaves, plans grouped perturbation and builds the update groups.
pub fn prepare(m: &Model, cfg: &PrepareConfig) -> Result<PreparedSimulation> {
    let reduced = reduce(m)?;
    let perturbation = build_perturbation_plan(reduced.model.len(), cfg.k_max, m.perturbation())?;
    let grouping = partition(&reduced.model, &cfg.grouping)?;
    Ok(PreparedSimulation {
        reduced,
        perturbation,
        grouping,
    })
}

#[derive(Debug, Clone)]
struct Kernel {
    /// Engine bits of each combined function's parents, laid out like the
    /// group's parent list.
    gather: Vec<usize>,
    offset: usize,
}

/// Stepper that perturbs `k` nodes per draw and updates whole groups.
///
/// Engine bits follow group order: the members of group `i` occupy bits
/// `cum[i]..cum[i + 1]`.
#[derive(Debug, Clone)]
pub struct GroupedEngine {
    prepared: PreparedSimulation,
    positions: Vec<Option<usize>>,
    kernels: Vec<Kernel>,
}

impl GroupedEngine {
    pub fn new(prepared: PreparedSimulation) -> Self {
        let n = prepared.reduced.model.len();
        let reduced_pos = prepared.grouping.positions(n);
        let positions = prepared
            .reduced
            .index_map
            .iter()
            .map(|r| r.map(|r| reduced_pos[r]))
            .collect();
        let kernels = prepared
            .grouping
            .groups
            .iter()
            .zip(&prepared.grouping.cum)
            .map(|(g, &offset)| Kernel {
                gather: g.combined.parents.iter().map(|&p| reduced_pos[p]).collect(),
                offset,
            })
            .collect();
        GroupedEngine {
            prepared,
            positions,
            kernels,
        }
    }

    pub fn prepared(&self) -> &PreparedSimulation {
        &self.prepared
    }
}

#[inline]
fn xor_at(words: &mut [u64], offset: usize, bits: u64) {
    let (w, sh) = (offset >> 6, offset & 63);
    words[w] ^= bits << sh;
    if sh != 0 {
        let spill = bits >> (64 - sh);
        if spill != 0 {
            words[w + 1] ^= spill;
        }
    }
}

#[inline]
fn or_at(words: &mut [u64], offset: usize, bits: u64) {
    let (w, sh) = (offset >> 6, offset & 63);
    words[w] |= bits << sh;
    if sh != 0 {
        let spill = bits >> (64 - sh);
        if spill != 0 {
            words[w + 1] |= spill;
        }
    }
}

impl Stepper for GroupedEngine {
    fn width(&self) -> usize {
        self.prepared.reduced.model.len()
    }

    fn model_len(&self) -> usize {
        self.positions.len()
    }

    fn position(&self, node: usize) -> Option<usize> {
        self.positions[node]
    }

    fn step<D: Draws + ?Sized>(&self, state: &mut State, scratch: &mut State, draws: &mut D) {
        let plan = &self.prepared.perturbation;
        let mut perturbed = false;
        {
            let words = state.words_mut();
            for g in 0..plan.groups {
                let mut c = draws.pick(&plan.table) as u64;
                if g + 1 == plan.groups {
                    c &= plan.mask;
                }
                if c != 0 {
                    xor_at(words, g * plan.k, c);
                    perturbed = true;
                }
            }
        }
        if perturbed {
            return;
        }
        let t = self.prepared.reduced.leaf_no_perturb_prob;
        if t < 1.0 && draws.leaf_perturbed(t) {
            return;
        }

        let words = state.words();
        let out = scratch.words_mut();
        out.fill(0);
        for (group, kernel) in self.prepared.grouping.groups.iter().zip(&self.kernels) {
            let table = &group.combined;
            let c = match &group.alias {
                Some(alias) => draws.pick(alias),
                None => 0,
            };
            let gather = &kernel.gather[table.parent_offsets[c]..table.parent_offsets[c + 1]];
            let mut v = 0usize;
            for (j, &b) in gather.iter().enumerate() {
                v |= (((words[b >> 6] >> (b & 63)) & 1) as usize) << j;
            }
            or_at(
                out,
                kernel.offset,
                table.outputs[table.table_offsets[c] + v] as u64,
            );
        }
        std::mem::swap(state, scratch);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BooleanFunction, Node};
    use crate::sampling::AliasTable;

    struct Fixed(Vec<usize>);

    impl Draws for Fixed {
        fn perturbed(&mut self, _: f64) -> bool {
            unreachable!()
        }
        fn pick(&mut self, _: &AliasTable) -> usize {
            self.0.remove(0)
        }
        fn leaf_perturbed(&mut self, _: f64) -> bool {
            false
        }
    }

    fn identity(n: usize, p: f64) -> Model {
        let nodes = (0..n)
            .map(|i| Node::single(format!("x{i}"), BooleanFunction::copy_of(i)))
            .collect();
        Model::new(nodes, p, None).unwrap()
    }

    #[test]
    fn pattern_in_second_group_lands_at_its_offset() {
        let cfg = PrepareConfig {
            k_max: 2,
            ..PrepareConfig::default()
        };
        let e = GroupedEngine::new(prepare(&identity(4, 0.1), &cfg).unwrap());
        let mut s = State::zeros(4);
        let mut scratch = State::zeros(4);
        e.step(&mut s, &mut scratch, &mut Fixed(vec![0, 0b01]));
        assert_eq!(s.ones().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn last_group_is_masked() {
        // 5 nodes in groups of 3 and 2
        let cfg = PrepareConfig {
            k_max: 3,
            ..PrepareConfig::default()
        };
        let e = GroupedEngine::new(prepare(&identity(5, 0.1), &cfg).unwrap());
        assert_eq!(e.prepared().perturbation.mask, 0b11);
        let mut s = State::zeros(5);
        let mut scratch = State::zeros(5);
        e.step(&mut s, &mut scratch, &mut Fixed(vec![0, 0b111]));
        assert_eq!(s.ones().collect::<Vec<_>>(), vec![3, 4]);
    }

    #[test]
    fn patterns_cross_word_boundaries() {
        let cfg = PrepareConfig {
            k_max: 24,
            ..PrepareConfig::default()
        };
        let e = GroupedEngine::new(prepare(&identity(70, 0.1), &cfg).unwrap());
        let plan = &e.prepared().perturbation;
        assert_eq!((plan.groups, plan.k), (3, 24));
        let mut s = State::zeros(70);
        let mut scratch = State::zeros(70);
        e.step(&mut s, &mut scratch, &mut Fixed(vec![0, 0, 0xFFFFFF]));
        assert_eq!(s.ones().collect::<Vec<_>>(), (48..70).collect::<Vec<_>>());
    }

    #[test]
    fn update_without_perturbation_copies_state() {
        let e = GroupedEngine::new(prepare(&identity(70, 0.1), &PrepareConfig::default()).unwrap());
        let groups = e.prepared().perturbation.groups;
        let mut s = State::zeros(70);
        for i in [0, 5, 63, 64, 69] {
            s.set(i, true);
        }
        let before = s.clone();
        let mut scratch = State::zeros(70);
        e.step(&mut s, &mut scratch, &mut Fixed(vec![0; groups]));
        assert_eq!(s, before);
    }
}
