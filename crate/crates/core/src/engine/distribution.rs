use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Energy values closer than this are treated as the same level.
pub const ENERGY_MERGE_TOLERANCE: f64 = 1e-9;

/// Entries lighter than this are dropped after merging.
const PRUNE_BELOW: f64 = 1e-16;

const SUM_TOLERANCE: f64 = 1e-10;

/// Joint distribution `p(dE1, dE2)` of processor and environment energy changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64, f64)>", into = "Vec<(f64, f64, f64)>")]
pub struct JointEnergyDistribution {
    entries: Vec<(f64, f64, f64)>,
}

impl TryFrom<Vec<(f64, f64, f64)>> for JointEnergyDistribution {
    type Error = Error;
    fn try_from(v: Vec<(f64, f64, f64)>) -> Result<Self> {
        JointEnergyDistribution::new(v)
    }
}

impl From<JointEnergyDistribution> for Vec<(f64, f64, f64)> {
    fn from(d: JointEnergyDistribution) -> Self {
        d.entries
    }
}

/// Groups sorted values into runs whose consecutive gaps are within tolerance.
/// Returns, for each input position, the representative (midrange) of its run.
fn cluster(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut rep = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len()
            && values[order[end]] - values[order[end - 1]] <= ENERGY_MERGE_TOLERANCE
        {
            end += 1;
        }
        let mid = 0.5 * (values[order[start]] + values[order[end - 1]]);
        for &k in &order[start..end] {
            rep[k] = mid;
        }
        start = end;
    }
    rep
}

impl JointEnergyDistribution {
    /// Validated distribution: nonnegative, unit total within 1e-10, no duplicate keys.
    pub fn new(entries: Vec<(f64, f64, f64)>) -> Result<Self> {
        if let Some(e) = entries
            .iter()
            .find(|e| !(e.2 >= 0.0) || !e.0.is_finite() || !e.1.is_finite())
        {
            return Err(Error::Parameter(format!(
                "invalid distribution entry {e:?}"
            )));
        }
        let total: f64 = entries.iter().map(|e| e.2).sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::Parameter(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let merged = Self::merge(entries);
        Ok(merged)
    }

    /// Merges raw `(dE1, dE2, p)` triples, clustering energies at
    /// [`ENERGY_MERGE_TOLERANCE`] and summing probabilities per cluster pair.
    pub(crate) fn merge(raw: Vec<(f64, f64, f64)>) -> Self {
        let d1: Vec<f64> = raw.iter().map(|e| e.0).collect();
        let d2: Vec<f64> = raw.iter().map(|e| e.1).collect();
        let r1 = cluster(&d1);
        let r2 = cluster(&d2);
        let mut acc: BTreeMap<(u64, u64), (f64, f64, f64)> = BTreeMap::new();
        for (k, e) in raw.iter().enumerate() {
            let key = (ordered_bits(r1[k]), ordered_bits(r2[k]));
            acc.entry(key).or_insert((r1[k], r2[k], 0.0)).2 += e.2;
        }
        let entries = acc.into_values().filter(|e| e.2 >= PRUNE_BELOW).collect();
        JointEnergyDistribution { entries }
    }

    /// Sorted by `(dE1, dE2)`.
    pub fn entries(&self) -> &[(f64, f64, f64)] {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.2).sum()
    }

    pub fn mean_de1(&self) -> f64 {
        self.entries.iter().map(|e| e.2 * e.0).sum()
    }

    pub fn mean_de2(&self) -> f64 {
        self.entries.iter().map(|e| e.2 * e.1).sum()
    }

    pub fn mean_sq_de1(&self) -> f64 {
        self.entries.iter().map(|e| e.2 * e.0 * e.0).sum()
    }

    /// Marginal of `dE1`, merged at the level tolerance.
    pub fn marginal_de1(&self) -> Vec<(f64, f64)> {
        let m = Self::merge(self.entries.iter().map(|e| (e.0, 0.0, e.2)).collect());
        m.entries.iter().map(|e| (e.0, e.2)).collect()
    }
}

/// Maps an f64 to a u64 whose natural order matches the float order.
fn ordered_bits(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}
