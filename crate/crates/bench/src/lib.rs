//! Fixture networks shared by the criterion benches.

use pbn_core::{generate_random, GeneratorParams, Model};

/// Sparse network where most nodes are removable leaves.
pub fn leafy() -> Model {
    generate_random(&GeneratorParams::new(450, 1.6, 0.9, 3, 8, 7)).expect("leafy fixture")
}

/// Dense network with almost no leaves.
pub fn dense() -> Model {
    generate_random(&GeneratorParams::new(1000, 7.0, 0.003, 3, 8, 3)).expect("dense fixture")
}
