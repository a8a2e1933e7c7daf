//! Annealing backends and the records they produce.
//!
//! Three backends share the [`RunRecord`] format:
//!
//! * [`run_exact_closed`]: closed-system Schrodinger evolution (up to 12 spins),
//! * [`run_exact_open`]: processor coupled to a static spin environment with
//!   two-point energy measurement (up to 8 spins in total),
//! * [`run_svmc`]: spin-vector Monte Carlo surrogate for large chains.
//!
//! [`static_exchange`] builds undriven, energy-conserving exchange processes
//! whose joint energy statistics obey the exchange fluctuation relation exactly.
//!
//! Sign conventions consumed by the thermodynamics code: `delta_e1` is the
//! change of the processor's problem energy, `delta_e2` the change of the
//! environment energy; heat absorbed by the processor is `Q = -delta_e2` and
//! work injected by the drive is `W = delta_e1 + delta_e2`.

mod closed;
mod distribution;
mod exchange;
mod open;
pub(crate) mod propagator;
mod svmc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{IsingModel, SpinConfig};
use crate::schedule::ProtocolKind;

pub(crate) use closed::finish_closed;
pub use closed::{
    closed_final_distribution, run_exact_closed, ClosedOptions, FinalDistribution, CONVERGENCE_TV,
};
pub use distribution::{JointEnergyDistribution, ENERGY_MERGE_TOLERANCE};
pub use exchange::{matched_pair, static_exchange, DEFAULT_SWAP_ANGLE};
pub use open::{open_transitions, run_exact_open, OpenOptions, TransitionTable};
pub use svmc::{run_svmc, SvmcOptions};

/// Version tag written into every record line.
pub const RECORD_VERSION: u32 = 1;

/// Tolerance for deciding that a final energy equals the known ground energy.
pub const GROUND_MATCH_TOLERANCE: f64 = 1e-9;

/// Largest model handled by the closed-system backend.
pub const CLOSED_MAX_SPINS: usize = 12;

/// Largest combined system+environment size handled by the open backend.
pub const OPEN_MAX_SPINS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    ExactClosed,
    ExactOpen,
    Svmc,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::ExactClosed => "exact_closed",
            Backend::ExactOpen => "exact_open",
            Backend::Svmc => "svmc",
        }
    }
}

/// Numerical bookkeeping attached to records from the exact backends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Dimensionless time units per microsecond (hbar = 1, unit energy scale).
    pub time_scale: f64,
    pub steps: usize,
    pub norm_error: f64,
    /// Total-variation change of the outcome distribution when `steps` doubles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_tv: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
}

/// One annealing run as persisted in the JSON-lines records file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub record_version: u32,
    pub point: usize,
    pub run: usize,
    pub sample: usize,
    pub backend: Backend,
    pub protocol: ProtocolKind,
    pub tau: f64,
    pub h_scale: f64,
    pub seed: u64,
    pub initial: SpinConfig,
    #[serde(rename = "final")]
    pub final_config: SpinConfig,
    pub e_initial: f64,
    pub e_final: f64,
    pub delta_e1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_e2: Option<f64>,
    pub e_ground: f64,
    pub found_ground: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// Labels copied into a record that the backend itself does not determine.
#[derive(Debug, Clone, PartialEq)]
pub struct RunContext {
    pub protocol: ProtocolKind,
    pub h_scale: f64,
    /// Known ground energy of the problem Hamiltonian.
    pub ground_energy: f64,
    pub seed: u64,
    pub point: usize,
    pub run: usize,
    pub sample: usize,
}

impl RunContext {
    pub fn new(protocol: ProtocolKind, ground_energy: f64) -> Self {
        RunContext {
            protocol,
            h_scale: 0.0,
            ground_energy,
            seed: 0,
            point: 0,
            run: 0,
            sample: 0,
        }
    }

    pub(crate) fn record(
        &self,
        backend: Backend,
        tau: f64,
        model: &IsingModel,
        initial: SpinConfig,
        final_config: SpinConfig,
    ) -> RunRecord {
        let e_initial = model.energy_of(initial.spins());
        let e_final = model.energy_of(final_config.spins());
        RunRecord {
            record_version: RECORD_VERSION,
            point: self.point,
            run: self.run,
            sample: self.sample,
            backend,
            protocol: self.protocol,
            tau,
            h_scale: self.h_scale,
            seed: self.seed,
            initial,
            final_config,
            e_initial,
            e_final,
            delta_e1: e_final - e_initial,
            delta_e2: None,
            e_ground: self.ground_energy,
            found_ground: (e_final - self.ground_energy).abs() <= GROUND_MATCH_TOLERANCE,
            provenance: None,
        }
    }
}

/// Static spin bath coupled to the processor through `X_a X_b` terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    pub model: IsingModel,
    pub coupling_strength: f64,
    /// `(system site, environment site)` pairs.
    pub coupling_pairs: Vec<(usize, usize)>,
}

impl EnvironmentSpec {
    pub fn n_env(&self) -> usize {
        self.model.n()
    }

    pub fn check(&self, n_system: usize) -> Result<()> {
        if !self.coupling_strength.is_finite() {
            return Err(Error::Parameter("coupling strength must be finite".into()));
        }
        for &(a, b) in &self.coupling_pairs {
            if a >= n_system || b >= self.n_env() {
                return Err(Error::Parameter(format!(
                    "coupling pair ({a}, {b}) outside system size {n_system} / environment size {}",
                    self.n_env()
                )));
            }
        }
        Ok(())
    }
}

/// Problem energies of all `2^n` basis states of `model`.
pub(crate) fn basis_energies(model: &IsingModel) -> Vec<f64> {
    (0..1usize << model.n())
        .map(|k| model.energy_of_index(k))
        .collect()
}

/// Draws an index from unnormalised weights using one uniform variate.
pub(crate) fn sample_index(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return k;
        }
    }
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .unwrap_or(weights.len() - 1)
}
