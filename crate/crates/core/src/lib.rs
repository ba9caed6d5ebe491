//! Fast simulation of probabilistic Boolean networks with perturbations.
//!
//! The structure-based simulator removes leaf nodes that cannot influence the
//! nodes of interest, perturbs nodes `k` at a time from one shared alias
//! table, and updates groups of nodes at once through combined predictor
//! functions. A node-by-node reference simulator, an exact transition-matrix
//! oracle for small networks, and a steady-state estimator sit alongside.

pub mod engine;
pub mod error;
pub mod estimator;
pub mod format;
pub mod generator;
pub mod grouping;
pub mod model;
pub mod reduction;
pub mod rng;
pub mod sampling;

pub use engine::{
    enumerate_step, exact_transition_matrix, prepare, simulate, stationary_distribution, step_row,
    Draws, Engine, GroupedEngine, Method, NodeEngine, Predicate, PrepareConfig, PreparedSimulation,
    StatsConfig, Stepper, Trajectory, TransitionOperator,
};
pub use error::{PbnError, Result};
pub use estimator::{
    estimate_steady_state, estimate_steady_states, marginal_steady_state_exact, predict_speedup,
    EstimationRequest, EstimationResult, SpeedupModel,
};
pub use format::{parse_model, serialize_model};
pub use generator::{generate_random, GeneratorParams};
pub use grouping::{partition, GroupingConfig, GroupingPlan};
pub use model::{density, eval_function, BooleanFunction, Model, Node, State};
pub use reduction::{check_leaf_perturbation, find_leaves, reduce, ReducedModel};
pub use sampling::{build_alias, build_perturbation_plan, AliasTable, PerturbationPlan};
