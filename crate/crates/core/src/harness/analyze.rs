use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Beta2Source;
use super::run::{read_points, read_records, PointMeta, POINTS_FILE};
use crate::engine::RunRecord;
use crate::error::{Error, Result};
use crate::ising::SpinConfig;
use crate::schedule::ProtocolKind;
use crate::stats::{mean, standard_error};
use crate::thermo::{
    estimate_beta, exact_sigma, f_gs, p_gs, tur_bounds, BetaEstimate, EnergyStats, ThermoReport,
};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeOptions {
    /// Overrides the inverse temperature stored with each point.
    pub beta1: Option<f64>,
    pub beta2: Beta2Source,
    /// Reference energy for `F_GS`; defaults to each point's ground energy.
    pub e_th: Option<f64>,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            beta1: None,
            beta2: Beta2Source::Estimate,
            e_th: None,
        }
    }
}

/// Entropy production, heat and work computed from an exact distribution,
/// together with the bounds implied by that distribution's own moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactComparison {
    pub beta2: f64,
    pub sigma: f64,
    pub neg_q: f64,
    pub w: f64,
    pub sigma_lb: f64,
    pub neg_q_lb: f64,
    pub w_lb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPointResult {
    pub point: usize,
    pub protocol: ProtocolKind,
    pub tau: f64,
    pub h_scale: f64,
    pub records: usize,
    pub mean_de1: f64,
    pub mean_sq_de1: f64,
    pub se_mean_de1: f64,
    pub se_p_gs: f64,
    pub report: ThermoReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2_estimate: Option<BetaEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactComparison>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub results: Vec<SweepPointResult>,
    pub warnings: Vec<String>,
}

/// Reads `records.jsonl` (and `points.jsonl` beside it, when present) and
/// evaluates every sweep point.
pub fn analyze_file(records_path: &Path, options: &AnalyzeOptions) -> Result<Analysis> {
    let records = read_records(records_path)?;
    let points_path = records_path
        .parent()
        .map(|d| d.join(POINTS_FILE))
        .filter(|p| p.exists());
    let points = match points_path {
        Some(p) => read_points(&p)?,
        None => Vec::new(),
    };
    analyze(&records, &points, options)
}

/// Groups records by (protocol, tau, h_scale) and evaluates each group.
///
/// Groups are reported in order of their first point index. Within a group
/// records are sorted by (point, run, sample) before any summation, so the
/// result does not depend on the order records were written.
pub fn analyze(
    records: &[RunRecord],
    points: &[PointMeta],
    options: &AnalyzeOptions,
) -> Result<Analysis> {
    if let Some(r) = records
        .iter()
        .find(|r| r.record_version != crate::engine::RECORD_VERSION)
    {
        return Err(Error::Records(format!(
            "unsupported record_version {} (point {}, run {})",
            r.record_version, r.point, r.run
        )));
    }
    let meta: HashMap<usize, &PointMeta> = points.iter().map(|p| (p.sweep.point, p)).collect();

    let mut order: Vec<(ProtocolKind, u64, u64)> = Vec::new();
    let mut groups: HashMap<(ProtocolKind, u64, u64), Vec<&RunRecord>> = HashMap::new();
    for r in records {
        let key = (r.protocol, r.tau.to_bits(), r.h_scale.to_bits());
        groups
            .entry(key)
            .or_insert_with(|| {
                order.push(key);
                Vec::new()
            })
            .push(r);
    }
    for g in groups.values_mut() {
        g.sort_by_key(|r| (r.point, r.run, r.sample));
    }
    order.sort_by_key(|k| groups[k][0].point);

    let mut results = Vec::new();
    let mut warnings = Vec::new();
    for key in order {
        let group: Vec<RunRecord> = groups[&key].iter().map(|r| (*r).clone()).collect();
        let first = &group[0];
        match analyze_group(&group, meta.get(&first.point).copied(), options) {
            Ok(r) => results.push(r),
            Err(e @ (Error::NonIdentifiable | Error::Domain(_) | Error::Parameter(_))) => {
                warnings.push(format!(
                    "skipped {} tau={} h={}: {e}",
                    first.protocol.as_str(),
                    first.tau,
                    first.h_scale
                ));
            }
            Err(e) => return Err(e),
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Analysis { results, warnings })
}

fn analyze_group(
    group: &[RunRecord],
    meta: Option<&PointMeta>,
    options: &AnalyzeOptions,
) -> Result<SweepPointResult> {
    let first = &group[0];
    let de1: Vec<f64> = group.iter().map(|r| r.delta_e1).collect();
    let stats = EnergyStats::from_samples(&de1)?;
    let beta1 = options
        .beta1
        .or(meta.map(|m| m.beta1))
        .unwrap_or(super::config::DEFAULT_BETA1);

    let (beta2, beta2_estimate) = match options.beta2 {
        Beta2Source::Fixed(b) => (b, None),
        Beta2Source::Estimate => {
            let meta = meta.ok_or_else(|| {
                Error::Records(format!(
                    "estimating beta2 for point {} needs its model from {POINTS_FILE}",
                    first.point
                ))
            })?;
            let finals: Vec<SpinConfig> = group.iter().map(|r| r.final_config.clone()).collect();
            let est = estimate_beta(&finals, &meta.model)?;
            (est.beta_hat, Some(est))
        }
    };

    let success = p_gs(group)?;
    let e_th = options.e_th.unwrap_or(first.e_ground);
    let fidelity = f_gs(group, e_th)?;
    let mut report = ThermoReport::assemble(&stats, beta1, beta2, success, fidelity)?;
    if let Some(est) = &beta2_estimate {
        if est.at_upper_bound {
            report.flags.push("beta2_at_upper_bracket".into());
        }
        if est.at_lower_bound {
            report.flags.push("beta2_at_lower_bracket".into());
        }
    }
    if group.iter().any(|r| r.e_final > 0.0) {
        report.flags.push("positive_final_energy".into());
    }

    let successes: Vec<f64> = group
        .iter()
        .map(|r| if r.found_ground { 1.0 } else { 0.0 })
        .collect();
    let exact = match meta.and_then(|m| m.exact.as_ref().zip(m.beta2)) {
        Some((dist, env_beta2)) => {
            let moments = EnergyStats::new(dist.mean_de1(), dist.mean_sq_de1(), 1)?;
            let bounds = tur_bounds(&moments, beta1, env_beta2)?;
            Some(ExactComparison {
                beta2: env_beta2,
                sigma: exact_sigma(dist, beta1, env_beta2),
                neg_q: dist.mean_de2(),
                w: dist.mean_de1() + dist.mean_de2(),
                sigma_lb: bounds.sigma_lb,
                neg_q_lb: bounds.neg_q_lb,
                w_lb: bounds.w_lb,
            })
        }
        None => None,
    };

    Ok(SweepPointResult {
        point: first.point,
        protocol: first.protocol,
        tau: first.tau,
        h_scale: first.h_scale,
        records: group.len(),
        mean_de1: mean(&de1),
        mean_sq_de1: stats.mean_sq_de1,
        se_mean_de1: standard_error(&de1),
        se_p_gs: standard_error(&successes),
        report,
        beta2_estimate,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Backend, RECORD_VERSION};

    fn rec(point: usize, run: usize, de: f64, found: bool) -> RunRecord {
        RunRecord {
            record_version: RECORD_VERSION,
            point,
            run,
            sample: 0,
            backend: Backend::Svmc,
            protocol: ProtocolKind::Reverse,
            tau: 2.0,
            h_scale: 0.0,
            seed: 0,
            initial: SpinConfig::all_up(2),
            final_config: SpinConfig::all_up(2),
            e_initial: -1.0,
            e_final: -1.0 + de,
            delta_e1: de,
            delta_e2: None,
            e_ground: -1.0,
            found_ground: found,
            provenance: None,
        }
    }

    fn fixed() -> AnalyzeOptions {
        AnalyzeOptions {
            beta2: Beta2Source::Fixed(2.0),
            ..AnalyzeOptions::default()
        }
    }

    #[test]
    fn order_of_records_does_not_matter() {
        let recs: Vec<RunRecord> = (0..50)
            .map(|k| rec(0, k, ((k * 7919) % 13) as f64 * 0.1 - 0.3, k % 3 == 0))
            .collect();
        let mut rev = recs.clone();
        rev.reverse();
        let a = analyze(&recs, &[], &fixed()).unwrap();
        let b = analyze(&rev, &[], &fixed()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.results[0].records, 50);
    }

    #[test]
    fn mixed_versions_are_rejected() {
        let mut recs = vec![rec(0, 0, 0.1, true), rec(0, 1, 0.2, false)];
        recs[1].record_version = 2;
        assert!(matches!(
            analyze(&recs, &[], &fixed()),
            Err(Error::Records(_))
        ));
    }

    #[test]
    fn estimate_without_models_is_an_error() {
        let recs = vec![rec(0, 0, 0.1, true)];
        assert!(analyze(&recs, &[], &AnalyzeOptions::default()).is_err());
    }

    #[test]
    fn success_standard_error() {
        let recs: Vec<RunRecord> = (0..4).map(|k| rec(0, k, 0.1, k < 2)).collect();
        let a = analyze(&recs, &[], &fixed()).unwrap();
        let r = &a.results[0];
        assert_eq!(r.report.p_gs, 0.5);
        // sample sd of {1,1,0,0} is sqrt(1/3)
        assert!((r.se_p_gs - (1.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    }
}
