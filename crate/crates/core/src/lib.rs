//! Reverse quantum annealing at desk scale.
//!
//! The crate is organised bottom-up:
//!
//! * [`ising`] holds the problem Hamiltonian, classical energies, ground-state
//!   oracles, the heat-bath sampler and a transfer-matrix reference for chains.
//! * [`schedule`] builds the piecewise-linear annealing trajectories
//!   (forward, reverse, reverse with pause).
//! * [`engine`] executes schedules on three backends: exact closed-system
//!   evolution, exact system+environment evolution with two-point energy
//!   measurement, and a spin-vector Monte Carlo surrogate for large chains.
//! * [`thermo`] turns processor energy changes into entropy/heat/work lower
//!   bounds, efficiency bounds, success probability and fidelity.
//! * [`topology`] generates Chimera graphs and one-to-one chain embeddings.
//! * [`harness`] orchestrates sweeps, persists records and renders results.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod harness;
pub mod ising;
pub mod rng;
pub mod schedule;
pub mod stats;
pub mod thermo;
pub mod topology;

pub use engine::{JointEnergyDistribution, RunRecord};
pub use error::{Error, Result};
pub use ising::{IsingModel, SpinConfig};
pub use schedule::{Protocol, ProtocolKind, Schedule};
pub use thermo::{EnergyStats, ThermoReport};
pub use topology::{ChimeraGraph, Embedding};
