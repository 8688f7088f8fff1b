//! Pairwise distances `E^{n,m}(T)` between trajectories from a bounded set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::SpectralBasis;
use crate::energy::pair_energy;
use crate::error::{Error, Result};
use crate::integrator::{integrate, Observers, StepConfig};
use crate::model::{PhysicsConfig, State};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub times: Vec<f64>,
    /// `matrices[i][n][m] = E^{n,m}(times[i])`; NaN where a trajectory failed.
    pub matrices: Vec<Vec<Vec<f64>>>,
    /// Minimum over pairs `n ≠ m` at each time.
    pub min_per_time: Vec<f64>,
    /// Failure diagnostic per trajectory.
    pub failures: Vec<Option<String>>,
}

impl PairReport {
    /// True when the minimum pair energy never increases between the
    /// requested times.
    pub fn min_is_decreasing(&self) -> bool {
        self.min_per_time.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Evolves each initial state through the increasing `times` (in parallel,
/// one task per trajectory) and tabulates `E^{n,m}` at each time.
pub fn pair_contraction_experiment(
    basis: &SpectralBasis,
    config: &PhysicsConfig,
    states: &[State],
    times: &[f64],
    step_config: &StepConfig,
) -> Result<PairReport> {
    if states.len() < 2 {
        return Err(Error::Input("pair experiment needs at least two initial states".into()));
    }
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input("pair times must be nonnegative and strictly increasing".into()));
    }
    for s in states {
        s.check(basis)?;
    }
    step_config.validate()?;

    let runs: Vec<(Vec<Option<State>>, Option<String>)> = states
        .par_iter()
        .map(|s0| sample_at(basis, config, s0, times, step_config))
        .collect::<Result<_>>()?;

    let n = states.len();
    let mut matrices = Vec::with_capacity(times.len());
    let mut min_per_time = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        let mut m = vec![vec![0.0; n]; n];
        let mut min = f64::INFINITY;
        for p in 0..n {
            for q in (p + 1)..n {
                let e = match (&runs[p].0[i], &runs[q].0[i]) {
                    (Some(x), Some(y)) => pair_energy(basis, x, y)?,
                    _ => f64::NAN,
                };
                m[p][q] = e;
                m[q][p] = e;
                if !e.is_nan() {
                    min = min.min(e);
                }
            }
            if runs[p].0[i].is_none() {
                m[p][p] = f64::NAN;
            }
        }
        matrices.push(m);
        min_per_time.push(if min.is_finite() { min } else { f64::NAN });
    }
    Ok(PairReport {
        times: times.to_vec(),
        matrices,
        min_per_time,
        failures: runs.into_iter().map(|r| r.1).collect(),
    })
}

fn sample_at(
    basis: &SpectralBasis,
    config: &PhysicsConfig,
    state0: &State,
    times: &[f64],
    step_config: &StepConfig,
) -> Result<(Vec<Option<State>>, Option<String>)> {
    let mut out = Vec::with_capacity(times.len());
    let mut state = state0.clone();
    let mut elapsed = 0.0;
    for &t in times {
        let traj = integrate(basis, config, &state, t - elapsed, step_config, &Observers::none())?;
        if let Some(f) = traj.failure {
            out.resize(times.len(), None);
            return Ok((out, Some(f)));
        }
        state = traj.final_state;
        elapsed = t;
        out.push(Some(state.clone()));
    }
    Ok((out, None))
}
