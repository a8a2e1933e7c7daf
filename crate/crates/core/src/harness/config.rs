//! Strict experiment-config schema.
//!
//! ```json
//! {
//!   "model": {"chain": {"n": 300, "j": 1.0}},
//!   "protocols": ["reverse", "reverse_pause"],
//!   "tau": [2, 20, 200],
//!   "h_scale": [0, 0.1, 0.5, 1.0],
//!   "runs": 1000,
//!   "samples_per_run": 10,
//!   "backend": {"kind": "svmc", "beta_device": 3.0},
//!   "beta2": "estimate",
//!   "master_seed": 1
//! }
//! ```
//!
//! `model` is one of `{"inline": <model>}`, `{"file": "path"}` or
//! `{"chain": {"n": N, "j": J}}`. Each `h_scale` value is added to every local
//! field of the base model.

use std::path::{Path, PathBuf};

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use serde_json::{Map, Value};

use crate::engine::EnvironmentSpec;
use crate::error::{Error, Result, Violation};
use crate::ising::IsingModel;
use crate::schedule::{ProtocolKind, DEFAULT_PAUSE_FRACTION, DEFAULT_S_TURN};

pub const DEFAULT_BETA1: f64 = 1.0;
pub const DEFAULT_GIBBS_SWEEPS: usize = 100;
/// Exact-backend time steps per microsecond of anneal time.
pub const DEFAULT_STEPS_PER_US: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    Inline(IsingModel),
    File(PathBuf),
    Chain { n: usize, j: f64 },
}

impl ModelSource {
    pub fn load(&self) -> Result<IsingModel> {
        match self {
            ModelSource::Inline(m) => Ok(m.clone()),
            ModelSource::File(p) => IsingModel::load(p),
            ModelSource::Chain { n, j } => IsingModel::uniform_chain(*n, *j),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendConfig {
    Svmc {
        beta_device: f64,
        sweeps_per_slice: usize,
        slices_per_us: f64,
        min_slices: usize,
    },
    ExactClosed {
        steps_per_us: f64,
        min_steps: usize,
        time_scale: f64,
        check_convergence: bool,
    },
    ExactOpen {
        steps_per_us: f64,
        min_steps: usize,
        time_scale: f64,
        environment: EnvironmentSpec,
    },
}

impl BackendConfig {
    /// Number of time slices used at anneal time `tau`.
    pub fn slices_for(&self, tau: f64) -> usize {
        match self {
            BackendConfig::Svmc {
                slices_per_us,
                min_slices,
                ..
            } => ((tau * slices_per_us).round() as usize)
                .max(*min_slices)
                .max(1),
            BackendConfig::ExactClosed {
                steps_per_us,
                min_steps,
                ..
            }
            | BackendConfig::ExactOpen {
                steps_per_us,
                min_steps,
                ..
            } => ((tau * steps_per_us).ceil() as usize)
                .max(*min_steps)
                .max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta2Source {
    Estimate,
    Fixed(f64),
}

impl Serialize for Beta2Source {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Beta2Source::Estimate => s.serialize_str("estimate"),
            Beta2Source::Fixed(b) => s.serialize_f64(*b),
        }
    }
}

impl std::str::FromStr for Beta2Source {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "estimate" {
            return Ok(Beta2Source::Estimate);
        }
        match s.parse::<f64>() {
            Ok(b) if b > 0.0 && b.is_finite() => Ok(Beta2Source::Fixed(b)),
            _ => Err(Error::Parameter(format!(
                "beta2 must be \"estimate\" or a positive number, got '{s}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub model: ModelSource,
    pub protocols: Vec<ProtocolKind>,
    pub s_turn: f64,
    pub pause_fraction: f64,
    pub tau: Vec<f64>,
    pub h_scale: Vec<f64>,
    pub runs: usize,
    pub samples_per_run: usize,
    /// Draw a fresh initial configuration for every sample instead of reusing
    /// the run's configuration.
    pub restart_per_sample: bool,
    pub backend: BackendConfig,
    pub beta1: f64,
    pub beta2: Beta2Source,
    pub gibbs_sweeps: usize,
    pub master_seed: u64,
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
}

const TOP_KEYS: &[&str] = &[
    "model",
    "protocols",
    "s_turn",
    "pause_fraction",
    "tau",
    "h_scale",
    "runs",
    "samples_per_run",
    "restart_per_sample",
    "backend",
    "beta1",
    "beta2",
    "gibbs_sweeps",
    "master_seed",
    "output_dir",
];

struct Checker {
    violations: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, path: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.to_string(),
            message: message.into(),
        });
    }

    fn keys(&mut self, obj: &Map<String, Value>, allowed: &[&str], base: &str) {
        for k in obj.keys() {
            if !allowed.contains(&k.as_str()) {
                self.push(&format!("{base}/{k}"), "unknown key");
            }
        }
    }

    fn required<'a>(
        &mut self,
        obj: &'a Map<String, Value>,
        key: &str,
        base: &str,
    ) -> Option<&'a Value> {
        let v = obj.get(key);
        if v.is_none() {
            self.push(&format!("{base}/{key}"), "missing required key");
        }
        v
    }

    fn number(&mut self, v: &Value, path: &str) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.push(path, "expected a number");
                None
            }
        }
    }

    fn count(&mut self, v: &Value, path: &str, min: u64) -> Option<usize> {
        match v.as_u64() {
            Some(x) if x >= min => Some(x as usize),
            Some(_) => {
                self.push(path, format!("must be at least {min}"));
                None
            }
            None => {
                self.push(path, "expected a nonnegative integer");
                None
            }
        }
    }

    fn opt_number(&mut self, obj: &Map<String, Value>, key: &str, base: &str, default: f64) -> f64 {
        obj.get(key)
            .and_then(|v| self.number(v, &format!("{base}/{key}")))
            .unwrap_or(default)
    }

    fn opt_count(
        &mut self,
        obj: &Map<String, Value>,
        key: &str,
        base: &str,
        default: usize,
        min: u64,
    ) -> usize {
        obj.get(key)
            .and_then(|v| self.count(v, &format!("{base}/{key}"), min))
            .unwrap_or(default)
    }

    fn opt_bool(&mut self, obj: &Map<String, Value>, key: &str, base: &str, default: bool) -> bool {
        match obj.get(key) {
            None => default,
            Some(Value::Bool(b)) => *b,
            Some(_) => {
                self.push(&format!("{base}/{key}"), "expected a boolean");
                default
            }
        }
    }

    fn object<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a Map<String, Value>> {
        let o = v.as_object();
        if o.is_none() {
            self.push(path, "expected an object");
        }
        o
    }

    fn number_list(&mut self, v: &Value, path: &str) -> Option<Vec<f64>> {
        let Some(arr) = v.as_array() else {
            self.push(path, "expected an array of numbers");
            return None;
        };
        if arr.is_empty() {
            self.push(path, "must not be empty");
        }
        let mut out = Vec::with_capacity(arr.len());
        for (k, x) in arr.iter().enumerate() {
            out.push(self.number(x, &format!("{path}/{k}"))?);
        }
        Some(out)
    }
}

/// Parses and validates a config document, collecting every violation.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let root: Value = serde_json::from_str(text).map_err(|e| {
        Error::Config(vec![Violation {
            path: String::new(),
            message: format!("not valid JSON: {e}"),
        }])
    })?;
    let mut ck = Checker {
        violations: Vec::new(),
    };
    let Some(obj) = ck.object(&root, "") else {
        return Err(Error::Config(ck.violations));
    };
    ck.keys(obj, TOP_KEYS, "");

    let model = ck
        .required(obj, "model", "")
        .and_then(|v| parse_model(&mut ck, v));

    let protocols = ck.required(obj, "protocols", "").and_then(|v| {
        let Some(arr) = v.as_array() else {
            ck.push("/protocols", "expected an array of protocol names");
            return None;
        };
        if arr.is_empty() {
            ck.push("/protocols", "must not be empty");
        }
        let mut out = Vec::new();
        for (k, p) in arr.iter().enumerate() {
            match p.as_str().map(str::parse::<ProtocolKind>) {
                Some(Ok(kind)) => out.push(kind),
                _ => ck.push(
                    &format!("/protocols/{k}"),
                    "expected one of \"forward\", \"reverse\", \"reverse_pause\"",
                ),
            }
        }
        Some(out)
    });

    let s_turn = ck.opt_number(obj, "s_turn", "", DEFAULT_S_TURN);
    if !(s_turn > 0.0 && s_turn <= 1.0) {
        ck.push("/s_turn", "must lie in (0, 1]");
    }
    let pause_fraction = ck.opt_number(obj, "pause_fraction", "", DEFAULT_PAUSE_FRACTION);
    if !(pause_fraction > 0.0 && pause_fraction < 1.0) {
        ck.push("/pause_fraction", "must lie in (0, 1)");
    }

    let tau = ck
        .required(obj, "tau", "")
        .and_then(|v| ck.number_list(v, "/tau"));
    if let Some(t) = &tau {
        for (k, x) in t.iter().enumerate() {
            if !(*x > 0.0) {
                ck.push(&format!("/tau/{k}"), "anneal time must be positive");
            }
        }
    }
    let h_scale = match obj.get("h_scale") {
        Some(v) => ck.number_list(v, "/h_scale"),
        None => Some(vec![0.0]),
    };

    let runs = ck
        .required(obj, "runs", "")
        .and_then(|v| ck.count(v, "/runs", 1));
    let samples_per_run = ck
        .required(obj, "samples_per_run", "")
        .and_then(|v| ck.count(v, "/samples_per_run", 1));
    let restart_per_sample = ck.opt_bool(obj, "restart_per_sample", "", false);

    let beta1 = ck.opt_number(obj, "beta1", "", DEFAULT_BETA1);
    if !(beta1 >= 0.0) {
        ck.push("/beta1", "must be nonnegative");
    }
    let beta2 = match obj.get("beta2") {
        None => Beta2Source::Estimate,
        Some(Value::String(s)) if s == "estimate" => Beta2Source::Estimate,
        Some(v) => match v.as_f64() {
            Some(b) if b > 0.0 && b.is_finite() => Beta2Source::Fixed(b),
            _ => {
                ck.push("/beta2", "expected \"estimate\" or a positive number");
                Beta2Source::Estimate
            }
        },
    };
    let gibbs_sweeps = ck.opt_count(obj, "gibbs_sweeps", "", DEFAULT_GIBBS_SWEEPS, 1);
    let master_seed = match obj.get("master_seed") {
        None => 0,
        Some(v) => v.as_u64().unwrap_or_else(|| {
            ck.push("/master_seed", "expected an unsigned 64-bit integer");
            0
        }),
    };
    let output_dir = match obj.get("output_dir") {
        None => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(_) => {
            ck.push("/output_dir", "expected a path string");
            None
        }
    };

    let backend = ck
        .required(obj, "backend", "")
        .and_then(|v| parse_backend(&mut ck, v));
    if let (Some(BackendConfig::ExactOpen { .. }), Beta2Source::Estimate) = (&backend, beta2) {
        ck.push(
            "/beta2",
            "the exact_open backend prepares the environment at a fixed beta2; give a number",
        );
    }

    if !ck.violations.is_empty() {
        return Err(Error::Config(ck.violations));
    }
    Ok(ExperimentConfig {
        model: model.expect("checked"),
        protocols: protocols.expect("checked"),
        s_turn,
        pause_fraction,
        tau: tau.expect("checked"),
        h_scale: h_scale.expect("checked"),
        runs: runs.expect("checked"),
        samples_per_run: samples_per_run.expect("checked"),
        restart_per_sample,
        backend: backend.expect("checked"),
        beta1,
        beta2,
        gibbs_sweeps,
        master_seed,
        output_dir,
    })
}

fn parse_model(ck: &mut Checker, v: &Value) -> Option<ModelSource> {
    let obj = ck.object(v, "/model")?;
    if obj.len() != 1 {
        ck.push(
            "/model",
            "expected exactly one of \"inline\", \"file\", \"chain\"",
        );
        return None;
    }
    let (key, val) = obj.iter().next().expect("one entry");
    match key.as_str() {
        "inline" => match serde_json::from_value::<IsingModel>(val.clone()) {
            Ok(m) => Some(ModelSource::Inline(m)),
            Err(e) => {
                ck.push("/model/inline", e.to_string());
                None
            }
        },
        "file" => match val.as_str() {
            Some(p) => Some(ModelSource::File(PathBuf::from(p))),
            None => {
                ck.push("/model/file", "expected a path string");
                None
            }
        },
        "chain" => {
            let c = ck.object(val, "/model/chain")?;
            ck.keys(c, &["n", "j"], "/model/chain");
            let n = ck
                .required(c, "n", "/model/chain")
                .and_then(|x| ck.count(x, "/model/chain/n", 1));
            let j = ck.opt_number(c, "j", "/model/chain", 1.0);
            Some(ModelSource::Chain { n: n?, j })
        }
        other => {
            ck.push(&format!("/model/{other}"), "unknown model source");
            None
        }
    }
}

fn parse_backend(ck: &mut Checker, v: &Value) -> Option<BackendConfig> {
    let obj = ck.object(v, "/backend")?;
    let kind = ck.required(obj, "kind", "/backend")?.as_str();
    let b = "/backend";
    match kind {
        Some("svmc") => {
            ck.keys(
                obj,
                &[
                    "kind",
                    "beta_device",
                    "sweeps_per_slice",
                    "slices_per_us",
                    "min_slices",
                ],
                b,
            );
            let beta_device = ck
                .required(obj, "beta_device", b)
                .and_then(|x| ck.number(x, "/backend/beta_device"));
            if beta_device.is_some_and(|x| x < 0.0) {
                ck.push("/backend/beta_device", "must be nonnegative");
            }
            let sweeps_per_slice = ck.opt_count(obj, "sweeps_per_slice", b, 1, 1);
            let slices_per_us = ck.opt_number(obj, "slices_per_us", b, 1.0);
            if !(slices_per_us > 0.0) {
                ck.push("/backend/slices_per_us", "must be positive");
            }
            let min_slices = ck.opt_count(obj, "min_slices", b, 1, 1);
            Some(BackendConfig::Svmc {
                beta_device: beta_device?,
                sweeps_per_slice,
                slices_per_us,
                min_slices,
            })
        }
        Some("exact_closed") => {
            ck.keys(
                obj,
                &[
                    "kind",
                    "steps_per_us",
                    "min_steps",
                    "time_scale",
                    "check_convergence",
                ],
                b,
            );
            let (steps_per_us, min_steps, time_scale) = exact_common(ck, obj);
            let check_convergence = ck.opt_bool(obj, "check_convergence", b, true);
            Some(BackendConfig::ExactClosed {
                steps_per_us,
                min_steps,
                time_scale,
                check_convergence,
            })
        }
        Some("exact_open") => {
            ck.keys(
                obj,
                &[
                    "kind",
                    "steps_per_us",
                    "min_steps",
                    "time_scale",
                    "environment",
                ],
                b,
            );
            let (steps_per_us, min_steps, time_scale) = exact_common(ck, obj);
            let environment = ck.required(obj, "environment", b).and_then(|e| {
                serde_json::from_value::<EnvironmentSpec>(e.clone())
                    .map_err(|err| ck.push("/backend/environment", err.to_string()))
                    .ok()
            })?;
            Some(BackendConfig::ExactOpen {
                steps_per_us,
                min_steps,
                time_scale,
                environment,
            })
        }
        _ => {
            ck.push(
                "/backend/kind",
                "expected one of \"svmc\", \"exact_closed\", \"exact_open\"",
            );
            None
        }
    }
}

fn exact_common(ck: &mut Checker, obj: &Map<String, Value>) -> (f64, usize, f64) {
    let b = "/backend";
    let steps_per_us = ck.opt_number(obj, "steps_per_us", b, DEFAULT_STEPS_PER_US);
    if !(steps_per_us > 0.0) {
        ck.push("/backend/steps_per_us", "must be positive");
    }
    let min_steps = ck.opt_count(obj, "min_steps", b, 16, 1);
    let time_scale = ck.opt_number(obj, "time_scale", b, 1.0);
    if !(time_scale > 0.0) {
        ck.push("/backend/time_scale", "must be positive");
    }
    (steps_per_us, min_steps, time_scale)
}

/// Reads a config file; relative model paths resolve against its directory.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&text)?;
    if let ModelSource::File(p) = &cfg.model {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.model = ModelSource::File(dir.join(p));
            }
        }
    }
    Ok(cfg)
}

/// 64-bit FNV-1a digest of the canonical config serialisation.
pub fn config_digest(cfg: &ExperimentConfig) -> String {
    let canon = serde_json::to_vec(cfg).expect("config serialises");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in canon {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    format!("{h:016x}")
}

impl Serialize for Violations<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for v in self.0 {
            map.serialize_entry(&v.path, &v.message)?;
        }
        map.end()
    }
}

/// Serialises violations as a `{path: message}` object.
pub struct Violations<'a>(pub &'a [Violation]);
