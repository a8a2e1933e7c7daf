//! Classical problem Hamiltonian `H_p = sum_i h_i s_i + sum_(i,j) J_ij s_i s_j`.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// Largest model handled by exhaustive enumeration.
pub const BRUTE_FORCE_MAX_SPINS: usize = 20;

/// Absolute tolerance used to decide energy ties between configurations.
pub const GROUND_TIE_TOLERANCE: f64 = 1e-12;

/// A classical spin configuration with entries in {-1, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.is_empty() {
            return Err(Error::Parameter(
                "spin configuration must be nonempty".into(),
            ));
        }
        if let Some(pos) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::Parameter(format!(
                "spin {pos} has value {}, expected -1 or +1",
                spins[pos]
            )));
        }
        Ok(SpinConfig(spins))
    }

    pub fn all_up(n: usize) -> Self {
        SpinConfig(vec![1; n])
    }

    /// Alternating `+1, -1, +1, ...` pattern (Neel state).
    pub fn alternating(n: usize) -> Self {
        SpinConfig((0..n).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect())
    }

    /// Configuration encoded by the low `n` bits of `index`; a set bit is spin -1.
    pub fn from_index(index: usize, n: usize) -> Self {
        SpinConfig((0..n).map(|i| bit_spin(index, i)).collect())
    }

    /// Inverse of [`SpinConfig::from_index`].
    pub fn to_index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .fold(0, |acc, (i, _)| acc | (1 << i))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn flipped(&self) -> Self {
        SpinConfig(self.0.iter().map(|s| -s).collect())
    }
}

impl TryFrom<Vec<i8>> for SpinConfig {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        SpinConfig::new(v)
    }
}

impl From<SpinConfig> for Vec<i8> {
    fn from(c: SpinConfig) -> Self {
        c.0
    }
}

#[inline]
pub(crate) fn bit_spin(index: usize, site: usize) -> i8 {
    if index >> site & 1 == 1 {
        -1
    } else {
        1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub strength: f64,
}

/// On-disk layout: `{"n": int, "h": [float], "couplings": [[i, j, J]]}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    n: usize,
    h: Vec<f64>,
    couplings: Vec<(usize, usize, f64)>,
}

/// Local fields and sparse pairwise couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct IsingModel {
    n: usize,
    h: Vec<f64>,
    couplings: Vec<Coupling>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl TryFrom<ModelFile> for IsingModel {
    type Error = Error;
    fn try_from(f: ModelFile) -> Result<Self> {
        IsingModel::new(f.n, f.h, f.couplings)
    }
}

impl From<IsingModel> for ModelFile {
    fn from(m: IsingModel) -> Self {
        ModelFile {
            n: m.n,
            h: m.h,
            couplings: m.couplings.iter().map(|c| (c.i, c.j, c.strength)).collect(),
        }
    }
}

impl IsingModel {
    /// Builds a model, normalising each pair to `i < j`.
    ///
    /// Rejects self-couplings, out-of-range indices, duplicated pairs,
    /// non-finite parameters and a field vector of the wrong length.
    pub fn new(n: usize, h: Vec<f64>, couplings: Vec<(usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("model needs at least one spin".into()));
        }
        if h.len() != n {
            return Err(Error::InvalidModel(format!(
                "field vector has {} entries for {n} spins",
                h.len()
            )));
        }
        if let Some(k) = h.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidModel(format!("field h[{k}] is not finite")));
        }
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::with_capacity(couplings.len());
        let mut neighbors = vec![Vec::new(); n];
        for (k, &(a, b, strength)) in couplings.iter().enumerate() {
            if a >= n || b >= n {
                return Err(Error::InvalidModel(format!(
                    "coupling {k} ({a}, {b}) indexes outside [0, {n})"
                )));
            }
            if a == b {
                return Err(Error::InvalidModel(format!(
                    "coupling {k} couples spin {a} to itself"
                )));
            }
            if !strength.is_finite() {
                return Err(Error::InvalidModel(format!("coupling {k} is not finite")));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((i, j)) {
                return Err(Error::InvalidModel(format!(
                    "duplicate coupling ({i}, {j})"
                )));
            }
            out.push(Coupling { i, j, strength });
            neighbors[i].push((j, strength));
            neighbors[j].push((i, strength));
        }
        Ok(IsingModel {
            n,
            h,
            couplings: out,
            neighbors,
        })
    }

    /// Open chain with zero field and bond strengths `bonds[i]` on `(i, i+1)`.
    pub fn chain(bonds: &[f64]) -> Result<Self> {
        Self::chain_with_field(vec![0.0; bonds.len() + 1], bonds)
    }

    pub fn chain_with_field(h: Vec<f64>, bonds: &[f64]) -> Result<Self> {
        let n = h.len();
        if bonds.len() + 1 != n {
            return Err(Error::Dimension {
                expected: n.saturating_sub(1),
                actual: bonds.len(),
            });
        }
        let couplings = bonds
            .iter()
            .enumerate()
            .map(|(i, &j)| (i, i + 1, j))
            .collect();
        Self::new(n, h, couplings)
    }

    /// Uniform chain of `n` spins, all bonds `j`, zero field.
    pub fn uniform_chain(n: usize, j: f64) -> Result<Self> {
        Self::chain(&vec![j; n.saturating_sub(1)])
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    pub fn has_zero_field(&self) -> bool {
        self.h.iter().all(|&x| x == 0.0)
    }

    /// Bond strengths `J_(i,i+1)` if the couplings are exactly the nearest-neighbour chain.
    pub fn chain_bonds(&self) -> Option<Vec<f64>> {
        if self.couplings.len() != self.n - 1 {
            return None;
        }
        let mut bonds = vec![f64::NAN; self.n - 1];
        for c in &self.couplings {
            if c.j != c.i + 1 || !bonds[c.i].is_nan() {
                return None;
            }
            bonds[c.i] = c.strength;
        }
        Some(bonds)
    }

    pub fn is_chain(&self) -> bool {
        self.chain_bonds().is_some()
    }

    /// Copy with `extra` added to every local field.
    pub fn with_added_field(&self, extra: f64) -> Self {
        let mut m = self.clone();
        m.h.iter_mut().for_each(|x| *x += extra);
        m
    }

    /// Copy with every field and coupling multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let h = self.h.iter().map(|x| x * c).collect();
        let couplings = self
            .couplings
            .iter()
            .map(|k| (k.i, k.j, k.strength * c))
            .collect();
        IsingModel::new(self.n, h, couplings).expect("scaling preserves structure")
    }

    /// `lambda_i = h_i + sum_j J_ij s_j`.
    #[inline]
    pub fn local_field(&self, i: usize, spins: &[i8]) -> f64 {
        self.neighbors[i]
            .iter()
            .fold(self.h[i], |acc, &(j, w)| acc + w * f64::from(spins[j]))
    }

    pub(crate) fn energy_of(&self, spins: &[i8]) -> f64 {
        let field: f64 = self
            .h
            .iter()
            .zip(spins)
            .map(|(h, &s)| h * f64::from(s))
            .sum();
        let bonds: f64 = self
            .couplings
            .iter()
            .map(|c| c.strength * f64::from(spins[c.i] * spins[c.j]))
            .sum();
        field + bonds
    }

    /// Problem energy of the basis state with the given bit index.
    pub(crate) fn energy_of_index(&self, index: usize) -> f64 {
        let field: f64 = self
            .h
            .iter()
            .enumerate()
            .map(|(i, h)| h * f64::from(bit_spin(index, i)))
            .sum();
        let bonds: f64 = self
            .couplings
            .iter()
            .map(|c| c.strength * f64::from(bit_spin(index, c.i) * bit_spin(index, c.j)))
            .sum();
        field + bonds
    }

    fn check_len(&self, config: &SpinConfig) -> Result<()> {
        if config.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                actual: config.len(),
            });
        }
        Ok(())
    }
}

/// Classical energy of `config` under `model`.
pub fn energy(model: &IsingModel, config: &SpinConfig) -> Result<f64> {
    model.check_len(config)?;
    Ok(model.energy_of(config.spins()))
}

/// Closed-form ground state of a zero-field chain.
///
/// Starts from `s_0 = +1` and sets `s_(i+1) = -sign(J_i) s_i`; a zero bond keeps the spin.
pub fn analytic_chain_ground(model: &IsingModel) -> Result<(f64, SpinConfig)> {
    let bonds = model
        .chain_bonds()
        .ok_or_else(|| Error::UnsupportedModel("couplings do not form an open chain".into()))?;
    if !model.has_zero_field() {
        return Err(Error::UnsupportedModel(
            "closed-form chain ground state needs h = 0".into(),
        ));
    }
    let mut spins = Vec::with_capacity(model.n());
    spins.push(1i8);
    for &j in &bonds {
        let prev = *spins.last().unwrap();
        spins.push(if j > 0.0 { -prev } else { prev });
    }
    let e = -bonds.iter().map(|j| j.abs()).sum::<f64>();
    Ok((e, SpinConfig(spins)))
}

/// Exhaustive minimum and every configuration within [`GROUND_TIE_TOLERANCE`] of it.
///
/// Configurations are returned in increasing bit-index order.
pub fn brute_force_ground(model: &IsingModel) -> Result<(f64, Vec<SpinConfig>)> {
    let n = model.n();
    if n > BRUTE_FORCE_MAX_SPINS {
        return Err(Error::Size {
            what: "spin count for exhaustive search",
            actual: n,
            limit: BRUTE_FORCE_MAX_SPINS,
        });
    }
    let mut best = f64::INFINITY;
    let mut winners: Vec<usize> = Vec::new();
    let mut spins = vec![1i8; n];
    for index in 0..(1usize << n) {
        for (i, s) in spins.iter_mut().enumerate() {
            *s = bit_spin(index, i);
        }
        let e = model.energy_of(&spins);
        if e < best - GROUND_TIE_TOLERANCE {
            best = e;
            winners.clear();
            winners.push(index);
        } else if (e - best).abs() <= GROUND_TIE_TOLERANCE {
            winners.push(index);
        }
    }
    let configs = winners
        .into_iter()
        .map(|k| SpinConfig::from_index(k, n))
        .collect();
    Ok((best, configs))
}

/// Ground state of an open chain with arbitrary fields by dynamic programming.
pub fn chain_ground(model: &IsingModel) -> Result<(f64, SpinConfig)> {
    let bonds = model
        .chain_bonds()
        .ok_or_else(|| Error::UnsupportedModel("couplings do not form an open chain".into()))?;
    let n = model.n();
    let h = model.h();
    // cost[s] = best energy of sites 0..=i with s_i = s (index 0 -> +1, 1 -> -1)
    let spin = |k: usize| if k == 0 { 1.0 } else { -1.0 };
    let mut cost = [h[0], -h[0]];
    let mut back = vec![[0usize; 2]; n];
    for i in 1..n {
        let mut next = [0.0; 2];
        for cur in 0..2 {
            let via = |prev: usize| cost[prev] + bonds[i - 1] * spin(prev) * spin(cur);
            let (a, b) = (via(0), via(1));
            let pick = if b < a { 1 } else { 0 };
            back[i][cur] = pick;
            next[cur] = a.min(b) + h[i] * spin(cur);
        }
        cost = next;
    }
    let mut k = if cost[1] < cost[0] { 1 } else { 0 };
    let best = cost[k];
    let mut spins = vec![0i8; n];
    for i in (0..n).rev() {
        spins[i] = spin(k) as i8;
        k = back[i][k];
    }
    Ok((best, SpinConfig(spins)))
}

/// Ground energy by the cheapest applicable exact method.
pub fn ground_energy(model: &IsingModel) -> Result<f64> {
    if model.is_chain() {
        return chain_ground(model).map(|(e, _)| e);
    }
    if model.n() <= BRUTE_FORCE_MAX_SPINS {
        return brute_force_ground(model).map(|(e, _)| e);
    }
    Err(Error::UnsupportedModel(format!(
        "no exact ground-state method for a {}-spin non-chain model",
        model.n()
    )))
}

/// One sequential heat-bath sweep over all sites in index order.
#[inline]
pub fn heat_bath_sweep(model: &IsingModel, beta: f64, spins: &mut [i8], rng: &mut RandomStream) {
    for i in 0..spins.len() {
        let lambda = model.local_field(i, spins);
        let p_up = 1.0 / (1.0 + (2.0 * beta * lambda).exp());
        spins[i] = if rng.random::<f64>() < p_up { 1 } else { -1 };
    }
}

/// Draws one configuration from `exp(-beta H_p)` by heat-bath sweeps.
///
/// Starts from a uniformly random configuration and performs `sweeps`
/// sequential passes; site `i` becomes `+1` with probability
/// `1 / (1 + exp(2 beta lambda_i))`.
pub fn gibbs_sample(
    model: &IsingModel,
    beta: f64,
    sweeps: usize,
    rng: &mut RandomStream,
) -> Result<SpinConfig> {
    if !(beta >= 0.0) {
        return Err(Error::Parameter(format!(
            "beta must be nonnegative, got {beta}"
        )));
    }
    if sweeps == 0 {
        return Err(Error::Parameter("at least one sweep is required".into()));
    }
    let mut spins: Vec<i8> = (0..model.n())
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    for _ in 0..sweeps {
        heat_bath_sweep(model, beta, &mut spins, rng);
    }
    Ok(SpinConfig(spins))
}

/// Exact thermal averages of an open chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    /// Site-averaged magnetisation.
    pub magnetization_per_site: f64,
    pub site_magnetization: Vec<f64>,
    /// `<s_i s_(i+1)>` for each bond.
    pub bond_correlation_per_bond: Vec<f64>,
    pub log_partition: f64,
    /// `-ln Z / beta`; `-inf` at `beta = 0`.
    pub free_energy: f64,
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Transfer-matrix evaluation of magnetisations, bond correlations and free energy.
pub fn chain_exact_stats(model: &IsingModel, beta: f64) -> Result<ChainStats> {
    let bonds = model
        .chain_bonds()
        .ok_or_else(|| Error::UnsupportedModel("couplings do not form an open chain".into()))?;
    if !(beta >= 0.0) {
        return Err(Error::Parameter(format!(
            "beta must be nonnegative, got {beta}"
        )));
    }
    let n = model.n();
    let h = model.h();
    const SPINS: [f64; 2] = [1.0, -1.0];
    let site = |i: usize, a: usize| -beta * h[i] * SPINS[a];
    let bond = |i: usize, a: usize, b: usize| -beta * bonds[i] * SPINS[a] * SPINS[b];

    // Log-domain forward messages (including the site's own field) and
    // backward messages (excluding it).
    let mut fwd = vec![[0.0f64; 2]; n];
    fwd[0] = [site(0, 0), site(0, 1)];
    for i in 1..n {
        for b in 0..2 {
            let via = |a: usize| fwd[i - 1][a] + bond(i - 1, a, b);
            fwd[i][b] = log_add_exp(via(0), via(1)) + site(i, b);
        }
    }
    let mut bwd = vec![[0.0f64; 2]; n];
    for i in (0..n - 1).rev() {
        for a in 0..2 {
            let via = |b: usize| bond(i, a, b) + site(i + 1, b) + bwd[i + 1][b];
            bwd[i][a] = log_add_exp(via(0), via(1));
        }
    }
    let log_z = log_add_exp(fwd[n - 1][0], fwd[n - 1][1]);

    let site_magnetization: Vec<f64> = (0..n)
        .map(|i| {
            let up = (fwd[i][0] + bwd[i][0] - log_z).exp();
            let down = (fwd[i][1] + bwd[i][1] - log_z).exp();
            up - down
        })
        .collect();
    let bond_correlation_per_bond = (0..n - 1)
        .map(|i| {
            let mut corr = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    let lp = fwd[i][a] + bond(i, a, b) + site(i + 1, b) + bwd[i + 1][b] - log_z;
                    corr += SPINS[a] * SPINS[b] * lp.exp();
                }
            }
            corr
        })
        .collect();
    let magnetization_per_site = site_magnetization.iter().sum::<f64>() / n as f64;
    let free_energy = if beta > 0.0 {
        -log_z / beta
    } else {
        f64::NEG_INFINITY
    };
    Ok(ChainStats {
        magnetization_per_site,
        site_magnetization,
        bond_correlation_per_bond,
        log_partition: log_z,
        free_energy,
    })
}
