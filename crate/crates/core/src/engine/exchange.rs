use super::open::{check_joint_size, normalised_exp};
use super::propagator::{chebyshev_step, probabilities, EdgeOperator, Workspace, C64};
use super::{basis_energies, EnvironmentSpec, JointEnergyDistribution, ENERGY_MERGE_TOLERANCE};
use crate::error::{Error, Result};
use crate::ising::{bit_spin, IsingModel};

/// Swap angle used by [`matched_pair`] experiments unless overridden.
pub const DEFAULT_SWAP_ANGLE: f64 = std::f64::consts::FRAC_PI_4;

/// A system and an identical environment copy coupled site by site, so every
/// single-spin splitting has a resonant partner. Supports 1 or 2 spins per side.
pub fn matched_pair(n: usize) -> Result<(IsingModel, EnvironmentSpec)> {
    let model = match n {
        1 => IsingModel::new(1, vec![0.5], vec![])?,
        2 => IsingModel::chain_with_field(vec![0.3, -0.2], &[0.7])?,
        _ => {
            return Err(Error::Parameter(format!(
                "matched pairs are defined for 1 or 2 spins per side, got {n}"
            )))
        }
    };
    let env = EnvironmentSpec {
        model: model.clone(),
        coupling_strength: 1.0,
        coupling_pairs: (0..n).map(|i| (i, i)).collect(),
    };
    Ok((model, env))
}

/// Undriven partial swap between system and environment.
///
/// The generator `S` connects joint basis states related by a flip-flop of a
/// coupled pair `(a, b)` (system spin `a` and environment spin `b` antialigned,
/// both flipped) whenever the flip conserves `E_S + E_E`. Such a flip-flop
/// moves one single-spin splitting of the system into the environment, so
/// resonances exist exactly when those splittings match. `S` is real
/// symmetric and block diagonal in total energy, so `U = exp(-i angle S)` is
/// symmetric and commutes with `H_S + H_E`; the two-point-measurement
/// distribution then satisfies the exchange fluctuation relation as an identity.
pub fn static_exchange(
    system: &IsingModel,
    env: &EnvironmentSpec,
    beta1: f64,
    beta2: f64,
    swap_angle: f64,
) -> Result<JointEnergyDistribution> {
    let ns = system.n();
    let ne = env.n_env();
    check_joint_size(ns, ne)?;
    env.check(ns)?;
    if !(beta1 >= 0.0 && beta2 >= 0.0) || !swap_angle.is_finite() {
        return Err(Error::Parameter(
            "need nonnegative betas and a finite swap angle".into(),
        ));
    }
    let es = basis_energies(system);
    let ee = basis_energies(&env.model);
    let dim = 1usize << (ns + ne);
    let sys_mask = (1usize << ns) - 1;
    let split = |k: usize| (k & sys_mask, k >> ns);
    let total = |k: usize| {
        let (s, e) = split(k);
        es[s] + ee[e]
    };

    let mut edges = Vec::new();
    let mut exchanging = 0usize;
    for k in 0..dim {
        let (s, e) = split(k);
        for &(a, b) in &env.coupling_pairs {
            if bit_spin(s, a) == bit_spin(e, b) {
                continue;
            }
            let n = k ^ (1 << a) ^ (1 << (ns + b));
            if n <= k || (total(n) - total(k)).abs() > ENERGY_MERGE_TOLERANCE {
                continue;
            }
            if (es[split(n).0] - es[s]).abs() > ENERGY_MERGE_TOLERANCE {
                exchanging += 1;
            }
            edges.push((k, n));
        }
    }
    if exchanging == 0 {
        return Err(Error::Construction(
            "no resonant system/environment pairs; match the single-spin splittings of the \
             coupled sites so a flip-flop conserves total energy"
                .into(),
        ));
    }

    let op = EdgeOperator::new(dim, &edges);
    let log_w: Vec<f64> = (0..dim)
        .map(|k| {
            let (s, e) = split(k);
            -beta1 * es[s] - beta2 * ee[e]
        })
        .collect();
    let weights = normalised_exp(&log_w);
    let mut ws = Workspace::new(dim);
    let mut raw = Vec::new();
    for m in 0..dim {
        let mut psi = vec![C64::new(0.0, 0.0); dim];
        psi[m] = C64::new(1.0, 0.0);
        chebyshev_step(&op, swap_angle, &mut psi, &mut ws);
        let (ms, me) = split(m);
        for (n, q) in probabilities(&psi).into_iter().enumerate() {
            if q == 0.0 {
                continue;
            }
            let (ns_, ne_) = split(n);
            raw.push((es[ns_] - es[ms], ee[ne_] - ee[me], weights[m] * q));
        }
    }
    Ok(JointEnergyDistribution::merge(raw))
}
