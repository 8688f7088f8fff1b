//! TOML run configuration with dotted-path overrides.
//!
//! ```toml
//! seed = 7
//!
//! [basis]
//! dim = 1
//! modes = 32
//! lengths = [3.141592653589793]
//!
//! [physics]
//! k = 1.0
//! p = 2.0
//! nonlinearity = { kind = "odd_polynomial", coeffs = [0.0, 1.0] }
//! h = { type = "modal_list", modes = [{ k = [1], value = 0.5 }] }
//!
//! [step]
//! dt = 0.01
//!
//! [run]
//! T = 10.0
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::{BasisSpec, SpectralBasis};
use crate::error::{Error, Result};
use crate::experiments::{canonical_digest, random_state, SweepConfig};
use crate::integrator::{Observers, ResolventProblem, StepConfig};
use crate::model::{FieldContext, FieldSpec, PhysicsConfig, PhysicsSpec, State};
use crate::strategies::Strategies;

/// The configuration used when none is given on the command line.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/nonlinear_forced.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub basis: BasisSpec,
    pub physics: PhysicsSpec,
    pub step: StepConfig,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolvent: Option<ResolventSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(default = "one")]
    pub record_stride: usize,
    #[serde(default)]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub epsilon: f64,
    /// Defaults to half the mode count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_cutoff: Option<usize>,
}

fn one() -> usize {
    1
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            t_final: 1.0,
            record_stride: 1,
            snapshot_stride: 0,
            epsilon: 0.0,
            tail_cutoff: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// `|k|^{-1}`-decaying random data with the given `H¹₀ × L²` norm.
    Random { norm: f64 },
    /// Position and velocity given as fields.
    Fields {
        #[serde(default)]
        u: FieldSpec,
        #[serde(default)]
        v: FieldSpec,
    },
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Random { norm: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSection {
    /// Number of trajectories.
    pub count: usize,
    pub times: Vec<f64>,
    /// Every initial state has this `H¹₀ × L²` norm.
    #[serde(default = "unit")]
    pub norm: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventSection {
    #[serde(default)]
    pub f0: FieldSpec,
    #[serde(default)]
    pub f1: FieldSpec,
    #[serde(default = "resolvent_tol")]
    pub tol: f64,
}

fn resolvent_tol() -> f64 {
    1e-10
}

/// Seed offsets so the stochastic fields of one run are independent.
const SEED_INITIAL_U: u64 = 0x5851_f42d;
const SEED_INITIAL_V: u64 = 0x4c95_7f2d;
const SEED_RESOLVENT: u64 = 0x1405_7b7e;

/// Everything built from a config, ready to integrate.
#[derive(Debug)]
pub struct Setup {
    pub basis: SpectralBasis,
    pub physics: PhysicsConfig,
    pub initial: State,
}

impl RunConfig {
    /// Parses `text`, applies `KEY=VALUE` overrides and checks the result.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let config: RunConfig = if overrides.is_empty() {
            // straight from the text so errors keep their line numbers
            toml::from_str(text).map_err(|e| Error::config(e.to_string()))?
        } else {
            let mut value: toml::Value = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
            for o in overrides {
                apply_override(&mut value, o)?;
            }
            value.try_into().map_err(|e: toml::de::Error| Error::config(e.to_string()))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text, overrides).map_err(|e| match e {
            Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn default_config() -> Self {
        RunConfig::parse(DEFAULT_CONFIG, &[]).expect("bundled default config is valid")
    }

    pub fn validate(&self) -> Result<()> {
        self.step.validate()?;
        let r = &self.run;
        if !(r.t_final.is_finite() && r.t_final >= 0.0) {
            return Err(Error::config(format!("run.T must be finite and >= 0, got {}", r.t_final)));
        }
        if let Some(cut) = r.tail_cutoff {
            if cut >= self.mode_count() {
                return Err(Error::config(format!(
                    "run.tail_cutoff = {cut} must be below the mode count {}",
                    self.mode_count()
                )));
            }
        }
        if let InitialSpec::Random { norm } = self.initial {
            if !(norm.is_finite() && norm >= 0.0) {
                return Err(Error::config(format!("initial.norm must be finite and >= 0, got {norm}")));
            }
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        if let Some(p) = &self.pair {
            if p.count < 2 {
                return Err(Error::config("pair.count must be at least 2"));
            }
            if p.times.is_empty() || p.times[0] < 0.0 || p.times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::config("pair.times must be nonnegative and strictly increasing"));
            }
        }
        if let Some(r) = &self.resolvent {
            if !(r.tol > 0.0) {
                return Err(Error::config("resolvent.tol must be positive"));
            }
        }
        Ok(())
    }

    fn mode_count(&self) -> usize {
        self.basis.modes.pow(self.basis.dim as u32)
    }

    /// Digest of the resolved configuration; equal for configs that differ
    /// only in key order or formatting.
    pub fn digest(&self) -> Result<String> {
        canonical_digest(self)
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        self
    }

    pub fn observers(&self) -> Observers {
        Observers {
            record_stride: self.run.record_stride,
            snapshot_stride: self.run.snapshot_stride,
            epsilon: self.run.epsilon,
            tail_cutoff: self.run.tail_cutoff.unwrap_or(self.mode_count() / 2),
        }
    }

    /// Builds basis, physics and initial state. `base_dir` anchors relative
    /// paths such as kernel matrix files.
    pub fn build(&self, strategies: &Strategies, base_dir: &Path) -> Result<Setup> {
        let basis = self.basis.build()?;
        let physics = PhysicsConfig::from_spec(&self.physics, &basis, strategies, base_dir, self.seed)?;
        let initial = self.initial_state(&basis, strategies)?;
        Ok(Setup {
            basis,
            physics,
            initial,
        })
    }

    pub fn initial_state(&self, basis: &SpectralBasis, strategies: &Strategies) -> Result<State> {
        match &self.initial {
            InitialSpec::Random { norm } => random_state(basis, self.seed, *norm),
            InitialSpec::Fields { u, v } => {
                let ctx = |salt| FieldContext {
                    basis,
                    seed: self.seed ^ salt,
                };
                let a = u.build(&strategies.fields, &ctx(SEED_INITIAL_U))?;
                let b = v.build(&strategies.fields, &ctx(SEED_INITIAL_V))?;
                State::new(a, b, 0.0)
            }
        }
    }

    /// Initial states of the pair experiment: independent random draws of
    /// equal norm.
    pub fn pair_states(&self, basis: &SpectralBasis) -> Result<Vec<State>> {
        let pair = self.pair.as_ref().ok_or_else(|| Error::config("config has no [pair] section"))?;
        (0..pair.count as u64)
            .map(|i| random_state(basis, self.seed.wrapping_add(i), pair.norm))
            .collect()
    }

    pub fn resolvent_problem(&self, basis: &SpectralBasis, strategies: &Strategies) -> Result<(ResolventProblem, f64)> {
        let r = self
            .resolvent
            .as_ref()
            .ok_or_else(|| Error::config("config has no [resolvent] section"))?;
        let ctx = |salt: u64| FieldContext {
            basis,
            seed: self.seed ^ SEED_RESOLVENT ^ salt,
        };
        let problem = ResolventProblem {
            f0: r.f0.build(&strategies.fields, &ctx(0))?,
            f1: r.f1.build(&strategies.fields, &ctx(1))?,
        };
        Ok((problem, r.tol))
    }
}

/// Directory that relative paths in a config file are resolved against.
pub fn base_dir_of(config_path: Option<&Path>) -> PathBuf {
    config_path
        .and_then(Path::parent)
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Sets `a.b.c = value` in a TOML tree, creating tables on the way. The
/// value is read as a TOML literal, falling back to a bare string.
pub fn apply_override(root: &mut toml::Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override '{assignment}' is not KEY=VALUE")))?;
    let path = path.trim();
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(Error::config(format!("override '{assignment}' has an empty key")));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));

    let keys: Vec<&str> = path.split('.').collect();
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::config(format!("override '{path}': '{key}' is not inside a table")))?;
        node = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let last = keys[keys.len() - 1];
    node.as_table_mut()
        .ok_or_else(|| Error::config(format!("override '{path}': parent of '{last}' is not a table")))?
        .insert(last.to_string(), value);
    Ok(())
}
