use std::collections::HashMap;
use std::fs::{self, File, OpenOptions as FileOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{config_digest, BackendConfig, Beta2Source, ExperimentConfig};
use crate::engine::{
    closed_final_distribution, finish_closed, open_transitions, sample_index, Backend,
    ClosedOptions, FinalDistribution, JointEnergyDistribution, OpenOptions, RunContext, RunRecord,
    SvmcOptions, TransitionTable, CLOSED_MAX_SPINS, CONVERGENCE_TV,
};
use crate::error::{Error, Result};
use crate::ising::{gibbs_sample, ground_energy, IsingModel, SpinConfig};
use crate::rng::{run_seed, stream, RandomStream};
use crate::schedule::{build, Protocol, ProtocolKind, Schedule};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const POINTS_FILE: &str = "points.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// One cell of the (protocol, h_scale, tau) sweep grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub point: usize,
    pub protocol: ProtocolKind,
    pub h_scale: f64,
    pub tau: f64,
}

/// Per-point metadata written next to the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMeta {
    #[serde(flatten)]
    pub sweep: SweepPoint,
    pub backend: Backend,
    pub slices: usize,
    pub model: IsingModel,
    pub schedule: Schedule,
    pub e_ground: f64,
    pub beta1: f64,
    /// Environment inverse temperature (open backend only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    /// Exact joint energy-change distribution (open backend only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<JointEnergyDistribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub point: usize,
    pub run: usize,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct Manifest {
    config_digest: String,
    completed_points: usize,
    records_bytes: u64,
    points_bytes: u64,
    failures: Vec<RunFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub records_path: PathBuf,
    pub points: usize,
    pub records_written: usize,
    /// Points taken over from an earlier, interrupted invocation.
    pub resumed_points: usize,
    pub failures: Vec<RunFailure>,
}

/// Expands the config into its sweep grid: protocol, then h_scale, then tau.
pub fn sweep_points(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    let mut out = Vec::new();
    for &protocol in &cfg.protocols {
        for &h_scale in &cfg.h_scale {
            for &tau in &cfg.tau {
                out.push(SweepPoint {
                    point: out.len(),
                    protocol,
                    h_scale,
                    tau,
                });
            }
        }
    }
    out
}

type ClosedCache = Mutex<HashMap<usize, Arc<(FinalDistribution, Option<f64>)>>>;

enum Prepared {
    Svmc(SvmcOptions),
    Closed {
        options: ClosedOptions,
        cache: ClosedCache,
    },
    Open {
        table: TransitionTable,
        env_model: IsingModel,
        beta2: f64,
    },
}

struct PointJob {
    meta: PointMeta,
    protocol: Protocol,
    prepared: Prepared,
}

fn prepare(cfg: &ExperimentConfig, base: &IsingModel, sp: &SweepPoint) -> Result<PointJob> {
    let protocol = Protocol {
        kind: sp.protocol,
        s_turn: cfg.s_turn,
        pause_fraction: cfg.pause_fraction,
    };
    let schedule = build(&protocol, sp.tau)?;
    let model = if sp.h_scale == 0.0 {
        base.clone()
    } else {
        base.with_added_field(sp.h_scale)
    };
    let e_ground = ground_energy(&model)?;
    let slices = cfg.backend.slices_for(sp.tau);
    let (backend, prepared, beta2, exact) = match &cfg.backend {
        BackendConfig::Svmc {
            beta_device,
            sweeps_per_slice,
            ..
        } => (
            Backend::Svmc,
            Prepared::Svmc(SvmcOptions {
                beta_device: *beta_device,
                sweeps_per_slice: *sweeps_per_slice,
                slices,
            }),
            None,
            None,
        ),
        BackendConfig::ExactClosed {
            time_scale,
            check_convergence,
            ..
        } => {
            if model.n() > CLOSED_MAX_SPINS {
                return Err(Error::Size {
                    what: "closed-system spins",
                    actual: model.n(),
                    limit: CLOSED_MAX_SPINS,
                });
            }
            (
                Backend::ExactClosed,
                Prepared::Closed {
                    options: ClosedOptions {
                        steps: slices,
                        time_scale: *time_scale,
                        check_convergence: *check_convergence,
                    },
                    cache: Mutex::new(HashMap::new()),
                },
                None,
                None,
            )
        }
        BackendConfig::ExactOpen {
            time_scale,
            environment,
            ..
        } => {
            let Beta2Source::Fixed(beta2) = cfg.beta2 else {
                return Err(Error::Parameter(
                    "the exact_open backend needs a numeric beta2".into(),
                ));
            };
            let table = open_transitions(
                &model,
                environment,
                &schedule,
                &OpenOptions {
                    steps: slices,
                    time_scale: *time_scale,
                },
            )?;
            let exact = table.joint_distribution(&table.gibbs_weights(cfg.beta1, beta2));
            (
                Backend::ExactOpen,
                Prepared::Open {
                    table,
                    env_model: environment.model.clone(),
                    beta2,
                },
                Some(beta2),
                Some(exact),
            )
        }
    };
    Ok(PointJob {
        meta: PointMeta {
            sweep: sp.clone(),
            backend,
            slices,
            model,
            schedule,
            e_ground,
            beta1: cfg.beta1,
            beta2,
            exact,
        },
        protocol,
        prepared,
    })
}

/// Exact Boltzmann sample over all `2^n` basis states.
fn exact_gibbs(model: &IsingModel, beta: f64, rng: &mut RandomStream) -> SpinConfig {
    let energies: Vec<f64> = (0..1usize << model.n())
        .map(|k| model.energy_of_index(k))
        .collect();
    let e0 = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|e| (-beta * (e - e0)).exp()).collect();
    SpinConfig::from_index(sample_index(&weights, rng.random::<f64>()), model.n())
}

fn initial_config(
    cfg: &ExperimentConfig,
    job: &PointJob,
    rng: &mut RandomStream,
) -> Result<SpinConfig> {
    match job.prepared {
        Prepared::Svmc(_) => gibbs_sample(&job.meta.model, cfg.beta1, cfg.gibbs_sweeps, rng),
        _ => Ok(exact_gibbs(&job.meta.model, cfg.beta1, rng)),
    }
}

fn run_one(cfg: &ExperimentConfig, job: &PointJob, run: usize) -> Result<Vec<RunRecord>> {
    let sp = &job.meta.sweep;
    let seed = run_seed(cfg.master_seed, sp.point as u64, run as u64);
    let mut rng = stream(seed);
    let mut initial = initial_config(cfg, job, &mut rng)?;
    let mut out = Vec::with_capacity(cfg.samples_per_run);
    for sample in 0..cfg.samples_per_run {
        if sample > 0 && cfg.restart_per_sample {
            initial = initial_config(cfg, job, &mut rng)?;
        }
        let ctx = RunContext {
            protocol: job.protocol.kind,
            h_scale: sp.h_scale,
            ground_energy: job.meta.e_ground,
            seed,
            point: sp.point,
            run,
            sample,
        };
        let model = &job.meta.model;
        let schedule = &job.meta.schedule;
        let rec = match &job.prepared {
            Prepared::Svmc(opts) => {
                crate::engine::run_svmc(model, schedule, &initial, opts, &ctx, &mut rng)?
            }
            Prepared::Closed { options, cache } => {
                let key = initial.to_index();
                let cached = cache.lock().expect("cache lock").get(&key).cloned();
                let entry = match cached {
                    Some(e) => e,
                    None => {
                        let dist = closed_final_distribution(
                            model,
                            schedule,
                            &initial,
                            options.steps,
                            options.time_scale,
                        )?;
                        let tv = if options.check_convergence {
                            let fine = closed_final_distribution(
                                model,
                                schedule,
                                &initial,
                                2 * options.steps,
                                options.time_scale,
                            )?;
                            Some(dist.total_variation(&fine))
                        } else {
                            None
                        };
                        let e = Arc::new((dist, tv));
                        cache.lock().expect("cache lock").insert(key, e.clone());
                        e
                    }
                };
                let (dist, tv) = (&entry.0, entry.1);
                finish_closed(
                    model,
                    schedule,
                    &initial,
                    dist,
                    options,
                    &ctx,
                    &mut rng,
                    tv,
                    tv.map(|t| t < CONVERGENCE_TV),
                )
            }
            Prepared::Open {
                table,
                env_model,
                beta2,
            } => {
                let env = exact_gibbs(env_model, *beta2, &mut rng);
                let m = initial.to_index() | (env.to_index() << table.n_system);
                let n = sample_index(&table.rows[m], rng.random::<f64>());
                let (fs, fe) = (n & ((1 << table.n_system) - 1), n >> table.n_system);
                let mut rec = ctx.record(
                    Backend::ExactOpen,
                    schedule.tau(),
                    model,
                    initial.clone(),
                    SpinConfig::from_index(fs, table.n_system),
                );
                rec.delta_e2 = Some(table.env_energy[fe] - table.env_energy[env.to_index()]);
                rec
            }
        };
        out.push(rec);
    }
    Ok(out)
}

fn read_manifest(dir: &Path) -> Option<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE)).ok()?;
    serde_json::from_str(&text).ok()
}

fn write_manifest(dir: &Path, m: &Manifest) -> Result<()> {
    let path = dir.join(MANIFEST_FILE);
    let tmp = dir.join(format!("{MANIFEST_FILE}.tmp"));
    fs::write(&tmp, serde_json::to_vec_pretty(m)?).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
}

fn open_truncated(path: &Path, len: u64) -> Result<File> {
    let f = FileOptions::new()
        .create(true)
        .truncate(false)
        .read(true)
        .write(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    f.set_len(len).map_err(|e| Error::io(path, e))?;
    let mut f = f;
    use std::io::Seek;
    f.seek(std::io::SeekFrom::End(0))
        .map_err(|e| Error::io(path, e))?;
    Ok(f)
}

/// Executes the sweep and writes `records.jsonl`, `points.jsonl` and
/// `manifest.json` into `out_dir`.
///
/// Records are written in (point, run, sample) order regardless of thread
/// count. Re-running with the same config and directory resumes after the
/// last completed point; a different config starts over.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let base = cfg.model.load()?;
    let digest = config_digest(cfg);
    let mut manifest = match read_manifest(out_dir) {
        Some(m) if m.config_digest == digest => m,
        _ => Manifest {
            config_digest: digest,
            ..Manifest::default()
        },
    };
    let resumed_points = manifest.completed_points;
    let records_path = out_dir.join(RECORDS_FILE);
    let points_path = out_dir.join(POINTS_FILE);
    let mut records_file = open_truncated(&records_path, manifest.records_bytes)?;
    let mut points_file = open_truncated(&points_path, manifest.points_bytes)?;

    let points = sweep_points(cfg);
    let mut written = 0usize;
    for sp in points.iter().skip(manifest.completed_points) {
        log::info!(
            "point {} of {}: {} tau={} h={}",
            sp.point + 1,
            points.len(),
            sp.protocol.as_str(),
            sp.tau,
            sp.h_scale
        );
        let job = prepare(cfg, &base, sp)?;
        let results: Vec<Result<Vec<RunRecord>>> = (0..cfg.runs)
            .into_par_iter()
            .map(|run| run_one(cfg, &job, run))
            .collect();
        let mut buf = Vec::new();
        for (run, res) in results.into_iter().enumerate() {
            match res {
                Ok(recs) => {
                    for r in recs {
                        serde_json::to_writer(&mut buf, &r)?;
                        buf.push(b'\n');
                        written += 1;
                    }
                }
                Err(e) => {
                    log::warn!("point {} run {run} failed: {e}", sp.point);
                    manifest.failures.push(RunFailure {
                        point: sp.point,
                        run,
                        error: e.to_string(),
                    });
                }
            }
        }
        let mut meta_line = serde_json::to_vec(&job.meta)?;
        meta_line.push(b'\n');
        records_file
            .write_all(&buf)
            .map_err(|e| Error::io(&records_path, e))?;
        records_file
            .flush()
            .map_err(|e| Error::io(&records_path, e))?;
        points_file
            .write_all(&meta_line)
            .map_err(|e| Error::io(&points_path, e))?;
        points_file
            .flush()
            .map_err(|e| Error::io(&points_path, e))?;
        manifest.records_bytes += buf.len() as u64;
        manifest.points_bytes += meta_line.len() as u64;
        manifest.completed_points = sp.point + 1;
        write_manifest(out_dir, &manifest)?;
    }
    Ok(RunSummary {
        records_path,
        points: points.len(),
        records_written: written,
        resumed_points,
        failures: manifest.failures,
    })
}

/// Reads a JSON-lines file of records, rejecting unknown record versions.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    read_lines(path, |line, k| {
        let v: serde_json::Value = serde_json::from_str(line)?;
        match v.get("record_version").and_then(|x| x.as_u64()) {
            Some(x) if x == u64::from(crate::engine::RECORD_VERSION) => {}
            Some(x) => {
                return Err(Error::Records(format!(
                    "line {k}: unsupported record_version {x}"
                )))
            }
            None => return Err(Error::Records(format!("line {k}: missing record_version"))),
        }
        Ok(serde_json::from_value(v)?)
    })
}

/// Reads the per-point metadata written by [`run_experiment`].
pub fn read_points(path: &Path) -> Result<Vec<PointMeta>> {
    read_lines(path, |line, _| Ok(serde_json::from_str(line)?))
}

fn read_lines<T>(path: &Path, parse: impl Fn(&str, usize) -> Result<T>) -> Result<Vec<T>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse(&line, k + 1)?);
    }
    Ok(out)
}
