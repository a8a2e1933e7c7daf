//! Spin-vector Monte Carlo: each qubit is a planar rotor with angle `theta`.
//!
//! `E(theta; s) = (1-s) sum_i sin(theta_i)
//!              + s (sum_i h_i cos(theta_i) + sum_ij J_ij cos(theta_i) cos(theta_j))`
//!
//! Proposals draw a fresh angle uniformly from `[0, 2pi)`; acceptance is
//! Metropolis at the device inverse temperature. A pause is simply the
//! extra sweeps spent at constant `s`.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Backend, RunContext, RunRecord};
use crate::error::{Error, Result};
use crate::ising::{IsingModel, SpinConfig};
use crate::rng::RandomStream;
use crate::schedule::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmcOptions {
    pub beta_device: f64,
    pub sweeps_per_slice: usize,
    pub slices: usize,
}

/// Rotor state kept as `(cos, sin)` pairs.
struct Rotors {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Rotors {
    fn from_config(c: &SpinConfig) -> Self {
        Rotors {
            cos: c.spins().iter().map(|&s| f64::from(s)).collect(),
            sin: vec![0.0; c.len()],
        }
    }

    fn sweep(&mut self, model: &IsingModel, s: f64, beta: f64, rng: &mut RandomStream) {
        let drive = 1.0 - s;
        for i in 0..self.cos.len() {
            let (sn, cs) = (rng.random::<f64>() * TAU).sin_cos();
            let field = model
                .neighbors(i)
                .iter()
                .fold(model.h()[i], |acc, &(j, w)| acc + w * self.cos[j]);
            let de = drive * (sn - self.sin[i]) + s * field * (cs - self.cos[i]);
            let u = rng.random::<f64>();
            if de <= 0.0 || u < (-beta * de).exp() {
                self.cos[i] = cs;
                self.sin[i] = sn;
            }
        }
    }

    fn readout(&self) -> SpinConfig {
        let spins = self
            .cos
            .iter()
            .map(|&c| if c < 0.0 { -1 } else { 1 })
            .collect();
        SpinConfig::new(spins).expect("readout spins are +-1")
    }
}

/// Runs the surrogate across `slices` equal time slices, each evaluated at its midpoint.
pub fn run_svmc(
    model: &IsingModel,
    schedule: &Schedule,
    initial: &SpinConfig,
    options: &SvmcOptions,
    ctx: &RunContext,
    rng: &mut RandomStream,
) -> Result<RunRecord> {
    if options.slices == 0 || options.sweeps_per_slice == 0 {
        return Err(Error::Parameter(
            "slices and sweeps_per_slice must be at least 1".into(),
        ));
    }
    if !(options.beta_device >= 0.0) {
        return Err(Error::Parameter(format!(
            "beta_device must be nonnegative, got {}",
            options.beta_device
        )));
    }
    if initial.len() != model.n() {
        return Err(Error::Dimension {
            expected: model.n(),
            actual: initial.len(),
        });
    }
    let mut rotors = Rotors::from_config(initial);
    let tau = schedule.tau();
    let width = tau / options.slices as f64;
    for k in 0..options.slices {
        let s = schedule.at((k as f64 + 0.5) * width);
        for _ in 0..options.sweeps_per_slice {
            rotors.sweep(model, s, options.beta_device, rng);
        }
    }
    Ok(ctx.record(Backend::Svmc, tau, model, initial.clone(), rotors.readout()))
}
