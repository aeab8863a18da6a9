//! Flat `key = value` run configuration with dotted keys.
//!
//! ```text
//! # comment
//! lattice.n = 64
//! lattice.h = 0.09375
//! ```
//!
//! Unknown keys and malformed values are errors naming the key.

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use hopfion_core::ansatz::AnsatzParams;
use hopfion_core::continuation::{self, ContinuationSchedule};
use hopfion_core::lattice::LatticeSpec;
use hopfion_core::optimizer::OptimizerConfig;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub h: f64,
    pub charge: i32,
    pub core_radius: f64,
    pub sharpness: f64,
    pub memory_depth: usize,
    pub tolerance_factor: f64,
    pub max_iterations: usize,
    pub max_step: f64,
    pub coarse_step: f64,
    pub refine_threshold: f64,
    pub fine_step: f64,
    pub directory: PathBuf,
    /// Write a volume every this many records; 0 disables.
    pub vtk_every: usize,
    /// Keep a numbered checkpoint every this many records, besides the
    /// rolling one; 0 disables.
    pub checkpoint_every: usize,
    /// Relative paths are taken inside `directory`.
    pub csv_path: PathBuf,
    /// 0 means all available cores.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let opt = OptimizerConfig::default();
        let ansatz = AnsatzParams::default();
        RunConfig {
            n: 64,
            h: 0.09375,
            charge: ansatz.charge,
            core_radius: ansatz.core_radius,
            sharpness: ansatz.profile_sharpness,
            memory_depth: opt.memory_depth,
            tolerance_factor: opt.grad_tolerance_factor,
            max_iterations: opt.max_iterations,
            max_step: opt.max_step,
            coarse_step: 0.02,
            refine_threshold: 0.9,
            fine_step: 0.005,
            directory: PathBuf::from("out"),
            vtk_every: 0,
            checkpoint_every: 0,
            csv_path: PathBuf::from("records.csv"),
            threads: 0,
        }
    }
}

/// Every key, in serialisation order.
pub const KEYS: &[&str] = &[
    "lattice.n",
    "lattice.h",
    "ansatz.charge",
    "ansatz.core_radius",
    "ansatz.sharpness",
    "optimizer.memory_depth",
    "optimizer.tolerance_factor",
    "optimizer.max_iterations",
    "optimizer.max_step",
    "schedule.coarse_step",
    "schedule.refine_threshold",
    "schedule.fine_step",
    "output.directory",
    "output.vtk_every",
    "output.checkpoint_every",
    "output.csv_path",
    "threads",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| err(format!("{key}: cannot parse {value:?}")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key.trim() {
            "lattice.n" => self.n = parse_value(key, v)?,
            "lattice.h" => self.h = parse_value(key, v)?,
            "ansatz.charge" => self.charge = parse_value(key, v)?,
            "ansatz.core_radius" => self.core_radius = parse_value(key, v)?,
            "ansatz.sharpness" => self.sharpness = parse_value(key, v)?,
            "optimizer.memory_depth" => self.memory_depth = parse_value(key, v)?,
            "optimizer.tolerance_factor" => self.tolerance_factor = parse_value(key, v)?,
            "optimizer.max_iterations" => self.max_iterations = parse_value(key, v)?,
            "optimizer.max_step" => self.max_step = parse_value(key, v)?,
            "schedule.coarse_step" => self.coarse_step = parse_value(key, v)?,
            "schedule.refine_threshold" => self.refine_threshold = parse_value(key, v)?,
            "schedule.fine_step" => self.fine_step = parse_value(key, v)?,
            "output.directory" => self.directory = PathBuf::from(v),
            "output.vtk_every" => self.vtk_every = parse_value(key, v)?,
            "output.checkpoint_every" => self.checkpoint_every = parse_value(key, v)?,
            "output.csv_path" => self.csv_path = PathBuf::from(v),
            "threads" => self.threads = parse_value(key, v)?,
            other => return Err(err(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` assignments in order.
    pub fn apply<'a>(&mut self, assignments: impl IntoIterator<Item = &'a str>) -> Result<(), ConfigError> {
        for a in assignments {
            let (k, v) = a.split_once('=').ok_or_else(|| err(format!("expected key=value, got {a:?}")))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(k, v).map_err(|e| err(format!("line {}: {}", lineno + 1, e.0)))?;
        }
        Ok(cfg)
    }

    fn get(&self, key: &str) -> String {
        match key {
            "lattice.n" => self.n.to_string(),
            "lattice.h" => self.h.to_string(),
            "ansatz.charge" => self.charge.to_string(),
            "ansatz.core_radius" => self.core_radius.to_string(),
            "ansatz.sharpness" => self.sharpness.to_string(),
            "optimizer.memory_depth" => self.memory_depth.to_string(),
            "optimizer.tolerance_factor" => self.tolerance_factor.to_string(),
            "optimizer.max_iterations" => self.max_iterations.to_string(),
            "optimizer.max_step" => self.max_step.to_string(),
            "schedule.coarse_step" => self.coarse_step.to_string(),
            "schedule.refine_threshold" => self.refine_threshold.to_string(),
            "schedule.fine_step" => self.fine_step.to_string(),
            "output.directory" => self.directory.display().to_string(),
            "output.vtk_every" => self.vtk_every.to_string(),
            "output.checkpoint_every" => self.checkpoint_every.to_string(),
            "output.csv_path" => self.csv_path.display().to_string(),
            "threads" => self.threads.to_string(),
            _ => unreachable!("key list and accessor out of sync: {key}"),
        }
    }

    /// The config in the same format `parse` reads. Floats are written in
    /// shortest round-trip form, so parsing the output gives back `self`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            writeln!(out, "{key} = {}", self.get(key)).expect("writing to a String");
        }
        out
    }

    pub fn lattice(&self) -> Result<LatticeSpec, ConfigError> {
        LatticeSpec::centered(self.n, self.h).map_err(|e| err(format!("lattice.n/lattice.h: {e}")))
    }

    pub fn ansatz(&self) -> Result<AnsatzParams, ConfigError> {
        let p = AnsatzParams { charge: self.charge, core_radius: self.core_radius, profile_sharpness: self.sharpness };
        p.validate(&self.lattice()?).map_err(|e| err(format!("ansatz.charge/ansatz.core_radius/ansatz.sharpness: {e}")))?;
        Ok(p)
    }

    pub fn optimizer(&self) -> Result<OptimizerConfig, ConfigError> {
        let opt = OptimizerConfig {
            memory_depth: self.memory_depth,
            grad_tolerance_factor: self.tolerance_factor,
            max_iterations: self.max_iterations,
            max_step: self.max_step,
            ..OptimizerConfig::default()
        };
        opt.validate().map_err(|e| err(format!("optimizer: {e}")))?;
        Ok(opt)
    }

    pub fn schedule(&self) -> Result<ContinuationSchedule, ConfigError> {
        continuation::default_schedule(self.coarse_step, self.refine_threshold, self.fine_step)
            .map_err(|e| err(format!("schedule.coarse_step/refine_threshold/fine_step: {e}")))
    }

    /// Checks every section at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.ansatz()?;
        self.optimizer()?;
        self.schedule()?;
        Ok(())
    }

    pub fn csv_file(&self) -> PathBuf {
        self.directory.join(&self.csv_path)
    }
}
