//! Simulation of adversarial learning of two-ququart maximally entangled
//! states on a programmable 4-mode photonic chip.
//!
//! The generator is a pair of universal 4-mode meshes acting on a Bell pair;
//! the discriminator is a pair of triangular projection circuits whose
//! coincidence at both second ports measures a product projector. Phase
//! noise, shot noise and broken phase shifters can be switched on.

pub mod error;
pub mod linalg;
pub mod mesh;
pub mod noise;
pub mod projector;
pub mod qgan;
pub mod state;

pub use error::{Error, Result};
pub use linalg::{
    distance_up_to_global_phase, haar_random_unitary, tensor_product, ComplexMatrix, ComplexVector, Unitary, C64,
};
pub use mesh::{clements_decompose, identity_phases, mesh_unitary, MeshLayout, MeshPhases};
pub use noise::{DefectMask, NoiseModel, ShotNoise};
pub use projector::{projection_phases, projection_unitary, ququart_from_params, BasisParams, ProjectorPhases};
pub use qgan::{
    measurement_difference, param_shift_grad, train, ConvergenceRule, Game, HalfTurn, MeasurementChannel, Player,
    Termination, TrainingConfig, TrainingTrace,
};
pub use state::{
    bell_state, fidelity, generate_state, random_true_state, Arm, DiscriminatorParams, GeneratorParams, TwoQuquartState,
};
