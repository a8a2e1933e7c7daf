use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::propagator::{probabilities, AnnealOperator, Workspace, C64};
use super::{basis_energies, EnvironmentSpec, JointEnergyDistribution, OPEN_MAX_SPINS};
use crate::error::{Error, Result};
use crate::ising::IsingModel;
use crate::schedule::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenOptions {
    pub steps: usize,
    /// Dimensionless time per microsecond.
    pub time_scale: f64,
}

impl OpenOptions {
    pub fn new(steps: usize) -> Self {
        OpenOptions {
            steps,
            time_scale: 1.0,
        }
    }
}

/// Transition probabilities between joint computational basis states.
///
/// Joint index = system bits in the low `n_system` positions, environment
/// bits above them.
#[derive(Debug, Clone)]
pub struct TransitionTable {
    pub n_system: usize,
    pub n_env: usize,
    pub system_energy: Vec<f64>,
    pub env_energy: Vec<f64>,
    /// `rows[m][n] = |<n|U|m>|^2`
    pub rows: Vec<Vec<f64>>,
}

impl TransitionTable {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn split(&self, k: usize) -> (usize, usize) {
        (k & ((1 << self.n_system) - 1), k >> self.n_system)
    }

    /// Product Gibbs weights of `H_p` at `beta1` and `H_E` at `beta2`.
    pub fn gibbs_weights(&self, beta1: f64, beta2: f64) -> Vec<f64> {
        let log_w: Vec<f64> = (0..self.dim())
            .map(|k| {
                let (s, e) = self.split(k);
                -beta1 * self.system_energy[s] - beta2 * self.env_energy[e]
            })
            .collect();
        normalised_exp(&log_w)
    }

    /// Two-point-measurement distribution for a diagonal initial state.
    pub fn joint_distribution(&self, weights: &[f64]) -> JointEnergyDistribution {
        let mut raw = Vec::new();
        for (m, (row, &pm)) in self.rows.iter().zip(weights).enumerate() {
            if pm == 0.0 {
                continue;
            }
            let (ms, me) = self.split(m);
            for (n, &q) in row.iter().enumerate() {
                if q == 0.0 {
                    continue;
                }
                let (ns, ne) = self.split(n);
                raw.push((
                    self.system_energy[ns] - self.system_energy[ms],
                    self.env_energy[ne] - self.env_energy[me],
                    pm * q,
                ));
            }
        }
        JointEnergyDistribution::merge(raw)
    }
}

pub(crate) fn normalised_exp(log_w: &[f64]) -> Vec<f64> {
    let top = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

pub(crate) fn check_joint_size(n_system: usize, n_env: usize) -> Result<()> {
    if n_system + n_env > OPEN_MAX_SPINS {
        return Err(Error::Size {
            what: "joint system+environment spin count",
            actual: n_system + n_env,
            limit: OPEN_MAX_SPINS,
        });
    }
    Ok(())
}

/// Evolves every joint basis state under `H(s(t)) x 1 + 1 x H_E + lambda H_I`.
pub fn open_transitions(
    model: &IsingModel,
    env: &EnvironmentSpec,
    schedule: &Schedule,
    options: &OpenOptions,
) -> Result<TransitionTable> {
    let ns = model.n();
    let ne = env.n_env();
    check_joint_size(ns, ne)?;
    env.check(ns)?;
    if options.steps == 0 {
        return Err(Error::Parameter(
            "at least one time step is required".into(),
        ));
    }
    if schedule.points()[0].1 != 1.0 {
        return Err(Error::Parameter(
            "two-point measurement needs a schedule starting at s = 1".into(),
        ));
    }
    let system_energy = basis_energies(model);
    let env_energy = basis_energies(&env.model);
    let dim = 1usize << (ns + ne);
    let sys_mask = (1usize << ns) - 1;
    let problem: Vec<f64> = (0..dim).map(|k| system_energy[k & sys_mask]).collect();
    let fixed: Vec<f64> = (0..dim).map(|k| env_energy[k >> ns]).collect();
    let drive: Vec<usize> = (0..ns).map(|i| 1usize << i).collect();
    let pairs: Vec<usize> = env
        .coupling_pairs
        .iter()
        .map(|&(a, b)| (1usize << a) | (1usize << (ns + b)))
        .collect();

    let rows: Vec<Vec<f64>> = (0..dim)
        .into_par_iter()
        .map(|m| {
            let mut op = AnnealOperator::new(
                problem.clone(),
                fixed.clone(),
                drive.clone(),
                pairs.clone(),
                env.coupling_strength,
            );
            let mut ws = Workspace::new(dim);
            let mut psi = vec![C64::new(0.0, 0.0); dim];
            psi[m] = C64::new(1.0, 0.0);
            op.evolve(
                schedule,
                options.steps,
                options.time_scale,
                &mut psi,
                &mut ws,
            );
            probabilities(&psi)
        })
        .collect();

    Ok(TransitionTable {
        n_system: ns,
        n_env: ne,
        system_energy,
        env_energy,
        rows,
    })
}

/// Exact joint distribution of processor and environment energy changes.
///
/// The initial state is the product of Gibbs states of `H_p` at `beta1` and
/// `H_E` at `beta2`; both are diagonal in the computational basis, so the first
/// projective measurement leaves a mixture of basis states.
pub fn run_exact_open(
    model: &IsingModel,
    env: &EnvironmentSpec,
    schedule: &Schedule,
    beta1: f64,
    beta2: f64,
    options: &OpenOptions,
) -> Result<JointEnergyDistribution> {
    if !(beta1 >= 0.0 && beta2 >= 0.0) {
        return Err(Error::Parameter(format!(
            "inverse temperatures must be nonnegative, got {beta1}, {beta2}"
        )));
    }
    let table = open_transitions(model, env, schedule, options)?;
    let weights = table.gibbs_weights(beta1, beta2);
    Ok(table.joint_distribution(&weights))
}
