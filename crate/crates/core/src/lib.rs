//! Limited-precision spiking neural networks trained by a genetic algorithm.
//!
//! - [`srm`]: discrete-time SRM0 simulation of feed-forward networks.
//! - [`genome`]: 6-bit-per-synapse chromosomes and the two weight schemes.
//! - [`evolve`]: the generational GA, objectives and checkpoints.
//! - [`tasks`]: XOR and iris benchmarks, receptive-field coding, k-fold CV.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolve;
pub mod genome;
pub mod srm;
pub mod tasks;

pub use error::{Error, Result};
pub use evolve::{GaConfig, GaRunState, StopReason, Target};
pub use genome::{Chromosome, QuantScheme};
pub use srm::{KernelMode, QuantizedNetwork, SimParams, SpikeTrain, Topology};
pub use tasks::{SpikePattern, SpikeTask};
