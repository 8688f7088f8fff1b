//! Empirical absorbing radius from trajectories started at growing scales.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::SpectralBasis;
use crate::error::{Error, Result};
use crate::integrator::{integrate, Observers, StepConfig};
use crate::model::field::wavenumber_magnitude;
use crate::model::{PhysicsConfig, State};

/// Tail suprema count as settled when the later half of the window does not
/// exceed the earlier half by more than this factor.
const SETTLE_TOLERANCE: f64 = 1.05;

/// Random state with `|k|^{-1}` spectral decay in both `√λ·u` and `u_t`,
/// scaled to the given `H¹₀ × L²` norm.
pub fn random_state(basis: &SpectralBasis, seed: u64, norm: f64) -> Result<State> {
    if !(norm.is_finite() && norm >= 0.0) {
        return Err(Error::Input(format!("target norm must be finite and >= 0, got {norm}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = basis.mode_count();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for j in 0..n {
        let decay = wavenumber_magnitude(basis, j).recip();
        let xi: f64 = StandardNormal.sample(&mut rng);
        let eta: f64 = StandardNormal.sample(&mut rng);
        a[j] = xi * decay / basis.eigenvalues()[j].sqrt();
        b[j] = eta * decay;
    }
    let mut state = State { a, b, time: 0.0 };
    let current = state.phase_norm(basis);
    if current > 0.0 {
        let s = norm / current;
        state.a.iter_mut().chain(state.b.iter_mut()).for_each(|v| *v *= s);
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Multipliers applied to the base initial state.
    pub scales: Vec<f64>,
    #[serde(rename = "T")]
    pub t_final: f64,
    /// Start of the tail window; defaults to `T/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
}

impl SweepConfig {
    pub fn burn_in(&self) -> f64 {
        self.burn_in.unwrap_or(0.5 * self.t_final)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scales.len() < 2 {
            return Err(Error::config("sweep needs at least two scales"));
        }
        if self.scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::config("sweep scales must be positive"));
        }
        let b = self.burn_in();
        if !(self.t_final.is_finite() && self.t_final > 0.0 && b >= 0.0 && b < self.t_final) {
            return Err(Error::config(format!(
                "sweep needs 0 <= burn_in < T, got burn_in = {b}, T = {}",
                self.t_final
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleOutcome {
    pub scale: f64,
    pub initial_norm: f64,
    /// `sup ‖(u, u_t)‖` over `[burn_in, T]`.
    pub tail_sup: f64,
    /// Suprema over the earlier and later halves of the tail window.
    pub early_sup: f64,
    pub late_sup: f64,
    pub settled: bool,
    /// Earliest recorded time after which the norm stays within the
    /// settling tolerance of `tail_sup`.
    pub settling_time: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingReport {
    pub burn_in: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub outcomes: Vec<ScaleOutcome>,
    /// Empirical absorbing radius, only when every trajectory settled.
    pub radius: Option<f64>,
    /// `max/min` of the tail suprema, when all trajectories completed.
    pub spread: Option<f64>,
    pub conclusive: bool,
}

/// Runs one trajectory per scale from `scale·base`, in parallel, and
/// summarises the tail suprema. Per-trajectory failures are recorded and
/// make the report inconclusive; they do not stop the sweep.
pub fn dissipativity_sweep(
    basis: &SpectralBasis,
    config: &PhysicsConfig,
    base: &State,
    sweep: &SweepConfig,
    step_config: &StepConfig,
) -> Result<AbsorbingReport> {
    sweep.validate()?;
    step_config.validate()?;
    base.check(basis)?;
    let burn_in = sweep.burn_in();
    let outcomes = sweep
        .scales
        .par_iter()
        .map(|&scale| run_scale(basis, config, base, scale, sweep.t_final, burn_in, step_config))
        .collect::<Result<Vec<_>>>()?;

    let completed = outcomes.iter().all(|o| o.failure.is_none() && o.tail_sup.is_finite());
    let conclusive = completed && outcomes.iter().all(|o| o.settled);
    let sups = outcomes.iter().map(|o| o.tail_sup);
    let max = sups.clone().fold(f64::NEG_INFINITY, f64::max);
    let min = sups.fold(f64::INFINITY, f64::min);
    Ok(AbsorbingReport {
        burn_in,
        t_final: sweep.t_final,
        radius: conclusive.then_some(max),
        spread: (completed && min > 0.0).then(|| max / min),
        conclusive,
        outcomes,
    })
}

fn run_scale(
    basis: &SpectralBasis,
    config: &PhysicsConfig,
    base: &State,
    scale: f64,
    t_final: f64,
    burn_in: f64,
    step_config: &StepConfig,
) -> Result<ScaleOutcome> {
    let mut state0 = base.clone();
    state0.a.iter_mut().chain(state0.b.iter_mut()).for_each(|v| *v *= scale);
    let observers = Observers {
        record_stride: 1,
        snapshot_stride: 0,
        epsilon: 0.0,
        tail_cutoff: 0,
    };
    let traj = integrate(basis, config, &state0, t_final, step_config, &observers)?;
    let t0 = state0.time;
    let mid = burn_in + 0.5 * (t_final - burn_in);
    let mut early: f64 = 0.0;
    let mut late: f64 = 0.0;
    for r in &traj.records {
        let t = r.t - t0;
        if t < burn_in {
            continue;
        }
        let norm = r.phase_norm();
        if t <= mid {
            early = early.max(norm);
        }
        if t >= mid {
            late = late.max(norm);
        }
    }
    let tail_sup = early.max(late);
    let failure = traj.failure.clone();
    let settled = failure.is_none() && late <= SETTLE_TOLERANCE * early;
    let settling_time = if failure.is_none() {
        let bound = SETTLE_TOLERANCE * tail_sup;
        let last_above = traj.records.iter().rposition(|r| r.phase_norm() > bound);
        match last_above {
            None => traj.records.first().map(|r| r.t),
            Some(i) => traj.records.get(i + 1).map(|r| r.t),
        }
    } else {
        None
    };
    Ok(ScaleOutcome {
        scale,
        initial_norm: state0.phase_norm(basis),
        tail_sup: if failure.is_none() { tail_sup } else { f64::NAN },
        early_sup: early,
        late_sup: late,
        settled,
        settling_time,
        failure,
    })
}
