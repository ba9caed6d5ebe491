use crate::model::{Model, State};
use crate::reduction::ReducedModel;
use crate::sampling::{build_alias, AliasTable};

use super::{Draws, Stepper};

/// Node-by-node stepper, on the full network or on a reduced one.
#[derive(Debug, Clone)]
pub struct NodeEngine {
    model: Model,
    leaf_no_perturb_prob: f64,
    positions: Vec<Option<usize>>,
    selectors: Vec<Option<AliasTable>>,
}

impl NodeEngine {
    /// Simulates every node of `m`.
    pub fn full(m: &Model) -> Self {
        NodeEngine::build(m.clone(), 1.0, (0..m.len()).map(Some).collect())
    }

    /// Simulates the kept nodes, with one draw standing in for the leaves.
    pub fn reduced(r: &ReducedModel) -> Self {
        NodeEngine::build(r.model.clone(), r.leaf_no_perturb_prob, r.index_map.clone())
    }

    fn build(model: Model, leaf_no_perturb_prob: f64, positions: Vec<Option<usize>>) -> Self {
        let selectors = model
            .nodes()
            .iter()
            .map(|node| {
                (node.function_count() > 1)
                    .then(|| build_alias(&node.selection_probs).expect("validated probabilities"))
            })
            .collect();
        NodeEngine {
            model,
            leaf_no_perturb_prob,
            positions,
            selectors,
        }
    }

    /// The network being stepped.
    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn leaf_no_perturb_prob(&self) -> f64 {
        self.leaf_no_perturb_prob
    }
}

impl Stepper for NodeEngine {
    fn width(&self) -> usize {
        self.model.len()
    }

    fn model_len(&self) -> usize {
        self.positions.len()
    }

    fn position(&self, node: usize) -> Option<usize> {
        self.positions[node]
    }

    fn step<D: Draws + ?Sized>(&self, state: &mut State, scratch: &mut State, draws: &mut D) {
        let p = self.model.perturbation();
        let mut perturbed = false;
        for i in 0..self.model.len() {
            if draws.perturbed(p) {
                state.flip(i);
                perturbed = true;
            }
        }
        if perturbed {
            return;
        }
        if self.leaf_no_perturb_prob < 1.0 && draws.leaf_perturbed(self.leaf_no_perturb_prob) {
            return;
        }
        scratch.clear();
        for (i, (node, selector)) in self.model.nodes().iter().zip(&self.selectors).enumerate() {
            let f = match selector {
                Some(table) => &node.functions[draws.pick(table)],
                None => &node.functions[0],
            };
            if f.eval(state) {
                scratch.flip(i);
            }
        }
        std::mem::swap(state, scratch);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BooleanFunction, Node};
    use crate::reduction::reduce;

    /// Replays fixed answers.
    struct Fixed {
        flips: Vec<bool>,
        picks: Vec<usize>,
        leaf: bool,
    }

    impl Draws for Fixed {
        fn perturbed(&mut self, _: f64) -> bool {
            self.flips.remove(0)
        }
        fn pick(&mut self, _: &AliasTable) -> usize {
            self.picks.remove(0)
        }
        fn leaf_perturbed(&mut self, _: f64) -> bool {
            self.leaf
        }
    }

    fn pair() -> Model {
        let and = BooleanFunction::from_fn(vec![0, 1], |v| v == 3).unwrap();
        let or = BooleanFunction::from_fn(vec![0, 1], |v| v != 0).unwrap();
        Model::new(
            vec![
                Node::new("a", vec![and.clone(), or.clone()], vec![0.5, 0.5]),
                Node::single("b", BooleanFunction::copy_of(0)),
                Node::single("leaf", BooleanFunction::copy_of(1)),
            ],
            0.1,
            Some(vec![0, 1]),
        )
        .unwrap()
    }

    #[test]
    fn perturbation_skips_the_update() {
        let e = NodeEngine::full(&pair());
        let mut s = State::from_bits(&[true, false, false]);
        let mut scratch = State::zeros(3);
        let mut d = Fixed {
            flips: vec![false, true, false],
            picks: vec![],
            leaf: false,
        };
        e.step(&mut s, &mut scratch, &mut d);
        assert_eq!(s, State::from_bits(&[true, true, false]));
    }

    #[test]
    fn synchronous_update_uses_picked_function() {
        let e = NodeEngine::full(&pair());
        let mut scratch = State::zeros(3);
        for (pick, a_next) in [(0, false), (1, true)] {
            let mut s = State::from_bits(&[true, false, true]);
            let mut d = Fixed {
                flips: vec![false; 3],
                picks: vec![pick],
                leaf: false,
            };
            e.step(&mut s, &mut scratch, &mut d);
            // b and leaf read the old a and b
            assert_eq!(s, State::from_bits(&[a_next, true, false]));
        }
    }

    #[test]
    fn leaf_flip_freezes_kept_nodes() {
        let r = reduce(&pair()).unwrap();
        let e = NodeEngine::reduced(&r);
        assert_eq!(e.width(), 2);
        assert_eq!(e.position(2), None);
        let mut s = State::from_bits(&[true, false]);
        let mut scratch = State::zeros(2);
        let mut d = Fixed {
            flips: vec![false; 2],
            picks: vec![],
            leaf: true,
        };
        e.step(&mut s, &mut scratch, &mut d);
        assert_eq!(s, State::from_bits(&[true, false]));
    }
}
