use rand::Rng;
use serde::{Deserialize, Serialize};

use super::propagator::{probabilities, AnnealOperator, Workspace, C64};
use super::{
    basis_energies, sample_index, Backend, Provenance, RunContext, RunRecord, CLOSED_MAX_SPINS,
};
use crate::error::{Error, Result};
use crate::ising::{IsingModel, SpinConfig};
use crate::rng::RandomStream;
use crate::schedule::Schedule;

/// Total-variation threshold of the step-doubling convergence gate.
pub const CONVERGENCE_TV: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedOptions {
    pub steps: usize,
    /// Dimensionless time per microsecond.
    pub time_scale: f64,
    /// Re-run with `2 * steps` and record the outcome total variation.
    pub check_convergence: bool,
}

impl ClosedOptions {
    pub fn new(steps: usize) -> Self {
        ClosedOptions {
            steps,
            time_scale: 1.0,
            check_convergence: true,
        }
    }
}

/// Computational-basis outcome probabilities after an anneal.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalDistribution {
    /// Indexed by basis state (bit `i` set = spin `i` down).
    pub probabilities: Vec<f64>,
    pub norm_error: f64,
}

impl FinalDistribution {
    pub fn total_variation(&self, other: &FinalDistribution) -> f64 {
        0.5 * self
            .probabilities
            .iter()
            .zip(&other.probabilities)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

pub(crate) fn driver_operator(model: &IsingModel) -> AnnealOperator {
    let n = model.n();
    let dim = 1usize << n;
    AnnealOperator::new(
        basis_energies(model),
        vec![0.0; dim],
        (0..n).map(|i| 1usize << i).collect(),
        Vec::new(),
        0.0,
    )
}

/// Initial state for the closed backend.
///
/// A schedule starting at `s = 1` begins in the classical basis state
/// `initial`; one starting at `s = 0` begins in the driver ground state
/// (every spin in the `-1` eigenstate of X).
fn initial_state(schedule: &Schedule, initial: &SpinConfig) -> Result<Vec<C64>> {
    let n = initial.len();
    let dim = 1usize << n;
    let s0 = schedule.points()[0].1;
    if s0 == 1.0 {
        let mut psi = vec![C64::new(0.0, 0.0); dim];
        psi[initial.to_index()] = C64::new(1.0, 0.0);
        Ok(psi)
    } else if s0 == 0.0 {
        let amp = (dim as f64).sqrt().recip();
        Ok((0..dim)
            .map(|k| {
                let sign = if k.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                C64::new(sign * amp, 0.0)
            })
            .collect())
    } else {
        Err(Error::Parameter(format!(
            "closed evolution needs a schedule starting at s = 0 or s = 1, got s = {s0}"
        )))
    }
}

fn check_closed(model: &IsingModel, initial: &SpinConfig, steps: usize) -> Result<()> {
    if model.n() > CLOSED_MAX_SPINS {
        return Err(Error::Size {
            what: "spin count for exact closed evolution",
            actual: model.n(),
            limit: CLOSED_MAX_SPINS,
        });
    }
    if initial.len() != model.n() {
        return Err(Error::Dimension {
            expected: model.n(),
            actual: initial.len(),
        });
    }
    if steps == 0 {
        return Err(Error::Parameter(
            "at least one time step is required".into(),
        ));
    }
    Ok(())
}

/// Outcome distribution of a closed-system anneal with `steps` midpoint slices.
pub fn closed_final_distribution(
    model: &IsingModel,
    schedule: &Schedule,
    initial: &SpinConfig,
    steps: usize,
    time_scale: f64,
) -> Result<FinalDistribution> {
    check_closed(model, initial, steps)?;
    let mut psi = initial_state(schedule, initial)?;
    let mut op = driver_operator(model);
    let mut ws = Workspace::new(psi.len());
    op.evolve(schedule, steps, time_scale, &mut psi, &mut ws);
    let probabilities = probabilities(&psi);
    let norm_error = (probabilities.iter().sum::<f64>() - 1.0).abs();
    Ok(FinalDistribution {
        probabilities,
        norm_error,
    })
}

/// Exact closed-system anneal followed by one computational-basis readout.
pub fn run_exact_closed(
    model: &IsingModel,
    schedule: &Schedule,
    initial: &SpinConfig,
    options: &ClosedOptions,
    ctx: &RunContext,
    rng: &mut RandomStream,
) -> Result<RunRecord> {
    let dist =
        closed_final_distribution(model, schedule, initial, options.steps, options.time_scale)?;
    let (convergence_tv, converged) = if options.check_convergence {
        let fine = closed_final_distribution(
            model,
            schedule,
            initial,
            2 * options.steps,
            options.time_scale,
        )?;
        let tv = dist.total_variation(&fine);
        if tv >= CONVERGENCE_TV {
            log::warn!(
                "closed evolution with {} steps not converged (tv = {tv:.3e})",
                options.steps
            );
        }
        (Some(tv), Some(tv < CONVERGENCE_TV))
    } else {
        (None, None)
    };
    Ok(finish_closed(
        model,
        schedule,
        initial,
        &dist,
        options,
        ctx,
        rng,
        convergence_tv,
        converged,
    ))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn finish_closed(
    model: &IsingModel,
    schedule: &Schedule,
    initial: &SpinConfig,
    dist: &FinalDistribution,
    options: &ClosedOptions,
    ctx: &RunContext,
    rng: &mut RandomStream,
    convergence_tv: Option<f64>,
    converged: Option<bool>,
) -> RunRecord {
    let outcome = sample_index(&dist.probabilities, rng.random::<f64>());
    let final_config = SpinConfig::from_index(outcome, model.n());
    let mut rec = ctx.record(
        Backend::ExactClosed,
        schedule.tau(),
        model,
        initial.clone(),
        final_config,
    );
    rec.provenance = Some(Provenance {
        time_scale: options.time_scale,
        steps: options.steps,
        norm_error: dist.norm_error,
        convergence_tv,
        converged,
    });
    rec
}
