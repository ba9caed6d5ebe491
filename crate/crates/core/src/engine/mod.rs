//! Simulators and the machinery shared between them.
//!
//! Three steppers implement [`Stepper`]:
//!
//! * [`NodeEngine::full`] checks perturbation, selects a function and updates
//!   node by node.
//! * [`NodeEngine::reduced`] does the same on the network with its leaves
//!   removed, checking leaf perturbation with one draw.
//! * [`GroupedEngine`] perturbs `k` nodes per draw and updates whole groups
//!   through combined functions.
//!
//! Within one step randomness is consumed in a fixed order: perturbation
//! (node by node, or group 0..g-1), then the leaf check, then function
//! selection (node by node, or group 0..m-1). The leaf check is skipped when
//! a kept node was already perturbed or when there are no leaves.

mod exact;
mod grouped;
mod node;

pub use exact::{
    enumerate_step, exact_transition_matrix, stationary_distribution, step_row, DenseMatrix,
    TransitionOperator, MAX_EXACT_NODES,
};
pub use grouped::{prepare, GroupedEngine, PrepareConfig, PreparedSimulation};
pub use node::NodeEngine;

use std::fmt;
use std::str::FromStr;

use rand::RngCore;

use crate::error::{PbnError, Result};
use crate::model::{Model, State};
use crate::reduction::check_leaf_perturbation;
use crate::rng::uniform;
use crate::sampling::AliasTable;

/// Source of the random decisions made in one step.
pub trait Draws {
    /// Whether a node perturbed at rate `p` flips.
    fn perturbed(&mut self, p: f64) -> bool;
    /// Outcome drawn from an alias table.
    fn pick(&mut self, table: &AliasTable) -> usize;
    /// Whether some leaf flipped, given the no-flip probability `t`.
    fn leaf_perturbed(&mut self, t: f64) -> bool;
}

impl<R: RngCore + ?Sized> Draws for R {
    #[inline]
    fn perturbed(&mut self, p: f64) -> bool {
        uniform(self) < p
    }

    #[inline]
    fn pick(&mut self, table: &AliasTable) -> usize {
        table.sample(self)
    }

    #[inline]
    fn leaf_perturbed(&mut self, t: f64) -> bool {
        check_leaf_perturbation(t, uniform(self))
    }
}

/// A one-step simulator over a packed engine state.
///
/// Engine states need not use model order: [`Stepper::position`] maps a
/// model node to its engine bit, and removed leaves have none.
pub trait Stepper {
    /// Bits in an engine state.
    fn width(&self) -> usize;

    /// Nodes in the original model.
    fn model_len(&self) -> usize;

    fn position(&self, node: usize) -> Option<usize>;

    /// Advances `state` by one step. `scratch` is a buffer of the same width
    /// whose contents are unspecified afterwards.
    fn step<D: Draws + ?Sized>(&self, state: &mut State, scratch: &mut State, draws: &mut D);

    /// Engine state holding the kept nodes of a model-order state.
    fn encode(&self, model_state: &State) -> State {
        let mut s = State::zeros(self.width());
        for node in 0..self.model_len() {
            if let Some(p) = self.position(node) {
                s.set(p, model_state.get(node));
            }
        }
        s
    }

    /// Writes the kept nodes of an engine state into a model-order state.
    fn decode_into(&self, state: &State, model_state: &mut State) {
        for node in 0..self.model_len() {
            if let Some(p) = self.position(node) {
                model_state.set(node, state.get(p));
            }
        }
    }
}

/// Simulation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Node by node on the full network.
    Old,
    /// Node by node on the reduced network.
    Reduced,
    /// Reduction plus grouped perturbation and grouped update.
    Grouped,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Old, Method::Reduced, Method::Grouped];

    pub fn name(self) -> &'static str {
        match self {
            Method::Old => "old",
            Method::Reduced => "reduced",
            Method::Grouped => "grouped",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = PbnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "old" => Ok(Method::Old),
            "reduced" | "reduction" => Ok(Method::Reduced),
            "grouped" | "new" => Ok(Method::Grouped),
            _ => Err(PbnError::InvalidArgument(format!("unknown method `{s}`"))),
        }
    }
}

/// Any of the three steppers.
#[derive(Debug, Clone)]
pub enum Engine {
    Node(NodeEngine),
    Grouped(GroupedEngine),
}

impl Engine {
    pub fn build(m: &Model, method: Method, cfg: &PrepareConfig) -> Result<Engine> {
        Ok(match method {
            Method::Old => Engine::Node(NodeEngine::full(m)),
            Method::Reduced => Engine::Node(NodeEngine::reduced(&crate::reduction::reduce(m)?)),
            Method::Grouped => Engine::Grouped(GroupedEngine::new(prepare(m, cfg)?)),
        })
    }
}

impl Stepper for Engine {
    fn width(&self) -> usize {
        match self {
            Engine::Node(e) => e.width(),
            Engine::Grouped(e) => e.width(),
        }
    }

    fn model_len(&self) -> usize {
        match self {
            Engine::Node(e) => e.model_len(),
            Engine::Grouped(e) => e.model_len(),
        }
    }

    fn position(&self, node: usize) -> Option<usize> {
        match self {
            Engine::Node(e) => e.position(node),
            Engine::Grouped(e) => e.position(node),
        }
    }

    #[inline]
    fn step<D: Draws + ?Sized>(&self, state: &mut State, scratch: &mut State, draws: &mut D) {
        match self {
            Engine::Node(e) => e.step(state, scratch, draws),
            Engine::Grouped(e) => e.step(state, scratch, draws),
        }
    }
}

/// Conjunction of `node = value` literals over model node indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub literals: Vec<(usize, bool)>,
}

impl Predicate {
    pub fn new(literals: Vec<(usize, bool)>) -> Self {
        Predicate { literals }
    }

    /// Parses `name=0|1` literals joined by `&`.
    pub fn parse(text: &str, m: &Model) -> Result<Self> {
        let literals = text
            .split('&')
            .map(|lit| {
                let (name, value) = lit.split_once('=').ok_or_else(|| {
                    PbnError::InvalidArgument(format!("literal `{lit}` is not `name=0|1`"))
                })?;
                let node = m
                    .index_of(name.trim())
                    .ok_or_else(|| PbnError::UnknownNode(name.trim().to_string()))?;
                let value = match value.trim() {
                    "0" => false,
                    "1" => true,
                    other => {
                        return Err(PbnError::InvalidArgument(format!(
                            "literal value `{other}` is not 0 or 1"
                        )))
                    }
                };
                Ok((node, value))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Predicate { literals })
    }

    pub fn eval_model(&self, s: &State) -> bool {
        self.literals.iter().all(|&(node, v)| s.get(node) == v)
    }

    /// Resolves the literals to engine bits. Fails when a literal names a
    /// node the engine removed.
    pub fn bind<E: Stepper + ?Sized>(&self, engine: &E) -> Result<BoundPredicate> {
        let literals = self
            .literals
            .iter()
            .map(|&(node, v)| {
                engine.position(node).map(|p| (p, v)).ok_or_else(|| {
                    PbnError::InvalidArgument(format!(
                        "predicate references node {node}, which was removed as a leaf"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BoundPredicate { literals })
    }
}

/// A predicate over engine bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundPredicate {
    literals: Vec<(usize, bool)>,
}

impl BoundPredicate {
    #[inline]
    pub fn eval(&self, s: &State) -> bool {
        self.literals.iter().all(|&(p, v)| s.get(p) == v)
    }
}

/// Which statistics [`simulate`] accumulates.
#[derive(Debug, Clone, Default)]
pub struct StatsConfig {
    pub count_ones: bool,
    pub predicate: Option<BoundPredicate>,
    pub record_states: bool,
}

impl StatsConfig {
    pub fn none() -> Self {
        StatsConfig::default()
    }

    pub fn ones() -> Self {
        StatsConfig {
            count_ones: true,
            ..StatsConfig::default()
        }
    }
}

/// Running statistics of a trajectory, in engine bit order.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub final_state: State,
    pub steps: u64,
    /// Steps after which each engine bit was 1; empty unless counted.
    pub one_counts: Vec<u64>,
    pub predicate_hits: u64,
    pub states: Vec<State>,
}

impl Trajectory {
    /// Adds the statistics of `other`, keeping `other`'s final state.
    pub fn merge(&mut self, other: &Trajectory) {
        self.steps += other.steps;
        self.predicate_hits += other.predicate_hits;
        if self.one_counts.len() < other.one_counts.len() {
            self.one_counts.resize(other.one_counts.len(), 0);
        }
        for (a, b) in self.one_counts.iter_mut().zip(&other.one_counts) {
            *a += b;
        }
        self.states.extend(other.states.iter().cloned());
        self.final_state = other.final_state.clone();
    }
}

/// Runs `steps` steps from `s0` (an engine state), counting statistics on
/// every state after a step.
pub fn simulate<E, D>(
    engine: &E,
    s0: &State,
    steps: u64,
    draws: &mut D,
    cfg: &StatsConfig,
) -> Trajectory
where
    E: Stepper + ?Sized,
    D: Draws + ?Sized,
{
    let mut state = s0.clone();
    let mut scratch = State::zeros(state.len());
    let mut one_counts = if cfg.count_ones {
        vec![0u64; engine.width()]
    } else {
        Vec::new()
    };
    let mut predicate_hits = 0;
    let mut states = Vec::new();
    for _ in 0..steps {
        engine.step(&mut state, &mut scratch, draws);
        if cfg.count_ones {
            for i in state.ones() {
                one_counts[i] += 1;
            }
        }
        if let Some(pred) = &cfg.predicate {
            predicate_hits += pred.eval(&state) as u64;
        }
        if cfg.record_states {
            states.push(state.clone());
        }
    }
    Trajectory {
        final_state: state,
        steps,
        one_counts,
        predicate_hits,
        states,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BooleanFunction, Node};
    use crate::rng::seeded;

    fn copy_node(p: f64) -> Model {
        Model::new(
            vec![Node::single("x0", BooleanFunction::copy_of(0))],
            p,
            None,
        )
        .unwrap()
    }

    #[test]
    fn zero_steps_is_a_no_op() {
        let m = copy_node(0.5);
        let e = NodeEngine::full(&m);
        let s0 = State::from_bits(&[true]);
        let t = simulate(&e, &s0, 0, &mut seeded(1), &StatsConfig::ones());
        assert_eq!(t.final_state, s0);
        assert_eq!(t.one_counts, vec![0]);
        assert_eq!(t.predicate_hits, 0);
    }

    #[test]
    fn symmetric_chain_frequency() {
        let m = copy_node(0.5);
        for method in Method::ALL {
            let e = Engine::build(&m, method, &PrepareConfig::default()).unwrap();
            let t = simulate(
                &e,
                &State::zeros(1),
                1_000_000,
                &mut seeded(4),
                &StatsConfig::ones(),
            );
            let freq = t.one_counts[0] as f64 / t.steps as f64;
            assert!((freq - 0.5).abs() < 0.002, "{method}: {freq}");
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let m = copy_node(0.3);
        let e = NodeEngine::full(&m);
        let run = || {
            simulate(
                &e,
                &State::zeros(1),
                10_000,
                &mut seeded(42),
                &StatsConfig::ones(),
            )
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn merge_adds_counts() {
        let m = copy_node(0.3);
        let e = NodeEngine::full(&m);
        let mut rng = seeded(9);
        let a = simulate(&e, &State::zeros(1), 500, &mut rng, &StatsConfig::ones());
        let b = simulate(&e, &a.final_state, 700, &mut rng, &StatsConfig::ones());
        let whole = simulate(
            &e,
            &State::zeros(1),
            1200,
            &mut seeded(9),
            &StatsConfig::ones(),
        );
        let mut merged = a.clone();
        merged.merge(&b);
        assert_eq!(merged, whole);
    }

    #[test]
    fn predicate_parsing_and_binding() {
        let m = Model::new(
            vec![
                Node::single("a", BooleanFunction::copy_of(1)),
                Node::single("b", BooleanFunction::copy_of(0)),
                Node::single("leaf", BooleanFunction::copy_of(0)),
            ],
            0.1,
            Some(vec![0, 1]),
        )
        .unwrap();
        let p = Predicate::parse("a=1&b=0", &m).unwrap();
        assert_eq!(p.literals, vec![(0, true), (1, false)]);
        assert!(Predicate::parse("a=2", &m).is_err());
        assert!(Predicate::parse("zz=1", &m).is_err());
        let reduced = NodeEngine::reduced(&crate::reduction::reduce(&m).unwrap());
        assert!(Predicate::parse("leaf=1", &m)
            .unwrap()
            .bind(&reduced)
            .is_err());
        assert!(p.bind(&reduced).is_ok());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("fast".parse::<Method>().is_err());
    }
}
