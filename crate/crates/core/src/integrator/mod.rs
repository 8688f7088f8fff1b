//! Time evolution by operator splitting, and the stationary resolvent solve.
//!
//! The flow is split into three pieces, each solved exactly or by a
//! self-adjoint one-step map:
//!
//! * the source kick `b′ = h − f(u) + Ψ(b)` with `u` frozen,
//! * the nonlocal damping `b′ = −k‖b‖^p b`, whose implicit equations reduce
//!   to one scalar root along the direction of `b`,
//! * the free wave `a′ = b, b′ = −λa`, an exact rotation per mode.
//!
//! Schemes compose these pieces and are registered by name; see [`scheme`].

mod resolvent;
mod root;
pub mod scheme;

use serde::{Deserialize, Serialize};

pub use resolvent::{
    accretivity_form, resolvent_solve, resolvent_solve_from, BracketStart, ResolventProblem,
    ResolventSolution,
};
pub use scheme::{Scheme, SchemeRegistry};

use crate::basis::{norm, SpectralBasis};
use crate::energy::{energy, residual_from_parts, tail_energy_fraction};
use crate::error::{Error, Result};
use crate::experiments::ObservationRecord;
use crate::model::{source_modal_into, PhysicsConfig, State};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub dt: f64,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_radial_tol")]
    pub radial_tol: f64,
    #[serde(default = "default_radial_max_iter")]
    pub radial_max_iter: usize,
}

fn default_scheme() -> String {
    "strang".into()
}
fn default_radial_tol() -> f64 {
    1e-13
}
fn default_radial_max_iter() -> usize {
    200
}

impl StepConfig {
    pub fn new(dt: f64) -> Self {
        StepConfig {
            dt,
            scheme: default_scheme(),
            radial_tol: default_radial_tol(),
            radial_max_iter: default_radial_max_iter(),
        }
    }

    pub fn with_scheme(mut self, scheme: &str) -> Self {
        self.scheme = scheme.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::config(format!("step.dt must be positive, got {}", self.dt)));
        }
        if !(self.radial_tol > 0.0) {
            return Err(Error::config(format!("step.radial_tol must be positive, got {}", self.radial_tol)));
        }
        if self.radial_max_iter == 0 {
            return Err(Error::config("step.radial_max_iter must be at least 1"));
        }
        Ok(())
    }

    pub fn solver(&self) -> RadialSolver {
        RadialSolver {
            tol: self.radial_tol,
            max_iter: self.radial_max_iter,
        }
    }
}

/// Tolerances for the scalar root solves inside a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSolver {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RadialSolver {
    fn default() -> Self {
        StepConfig::new(1.0).solver()
    }
}

/// Solves `ρ(1 + cρ^p) = r` for `ρ ≥ 0`.
///
/// This is the radial part of `v + c‖v‖^p v = r`: any solution is parallel
/// to `r`, and the scalar map is strictly increasing, so the root is unique
/// and lies in `[0, r]`.
pub fn radial_damping_solve(r_norm: f64, c: f64, p: f64, tol: f64, max_iter: usize) -> Result<f64> {
    if !(r_norm >= 0.0 && r_norm.is_finite()) {
        return Err(Error::Input(format!("radial solve needs a finite r >= 0, got {r_norm}")));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::Input(format!("radial solve needs a finite c >= 0, got {c}")));
    }
    if !(p > 0.0) {
        return Err(Error::Input(format!("radial solve needs p > 0, got {p}")));
    }
    if r_norm == 0.0 || c == 0.0 {
        return Ok(r_norm);
    }
    let eval = |rho: f64| {
        let rp = rho.powf(p);
        (rho * (1.0 + c * rp) - r_norm, 1.0 + c * (p + 1.0) * rp)
    };
    // the map is convex, so Newton from the right end never overshoots
    let (rho, iterations) = root::increasing_root(eval, 0.0, r_norm, r_norm, max_iter)?;
    let residual = eval(rho).0;
    if residual.abs() > tol * (1.0 + r_norm) {
        return Err(Error::RootNotConverged {
            iterations,
            lo: rho,
            hi: rho,
            residual,
        });
    }
    Ok(rho)
}

/// Implicit Euler step of `b′ = −k‖b‖^p b` over `tau`: returns the unique
/// `v` with `v + kτ‖v‖^p v = b`. Never increases the norm.
pub fn damping_substep(
    basis: &SpectralBasis,
    config: &PhysicsConfig,
    b: &[f64],
    tau: f64,
    solver: &RadialSolver,
) -> Result<Vec<f64>> {
    if !(tau >= 0.0) {
        return Err(Error::Input(format!("damping substep needs tau >= 0, got {tau}")));
    }
    let r = basis.l2_norm(b)?;
    let mut out = b.to_vec();
    scale_to_damped(&mut out, r, config.k * tau, config.p, solver)?;
    Ok(out)
}

fn scale_to_damped(b: &mut [f64], r: f64, c: f64, p: f64, solver: &RadialSolver) -> Result<()> {
    if r == 0.0 || c == 0.0 {
        return Ok(());
    }
    let rho = radial_damping_solve(r, c, p, solver.tol, solver.max_iter)?;
    let factor = rho / r;
    b.iter_mut().for_each(|v| *v *= factor);
    Ok(())
}

/// Everything a scheme needs to advance a state.
pub struct System<'a> {
    pub basis: &'a SpectralBasis,
    pub physics: &'a PhysicsConfig,
    pub solver: RadialSolver,
}

/// Scratch buffers reused across steps.
#[derive(Debug, Clone)]
pub struct Workspace {
    grid: Vec<f64>,
    modal: Vec<f64>,
    modal2: Vec<f64>,
    modal3: Vec<f64>,
}

impl Workspace {
    pub fn new(basis: &SpectralBasis) -> Self {
        let n = basis.mode_count();
        Workspace {
            grid: vec![0.0; basis.grid_len()],
            modal: vec![0.0; n],
            modal2: vec![0.0; n],
            modal3: vec![0.0; n],
        }
    }
}

impl System<'_> {
    /// `c = h − P f(u)` into `work.modal`.
    fn source_constant(&self, state: &State, work: &mut Workspace) {
        source_modal_into(self.physics, self.basis, &state.a, &mut work.grid, &mut work.modal);
        for (c, h) in work.modal.iter_mut().zip(&self.physics.h) {
            *c = h - *c;
        }
    }

    /// Kick with `f`, `h` and `Ψ` all frozen at the substep start.
    pub(crate) fn kick_frozen(&self, state: &mut State, tau: f64, work: &mut Workspace) {
        self.source_constant(state, work);
        self.physics.kernel.apply_into(&state.b, &mut work.modal2);
        for ((b, c), k) in state.b.iter_mut().zip(&work.modal).zip(&work.modal2) {
            *b += tau * (c + k);
        }
    }

    /// Kick with `u` frozen (exact for `f`, `h`) and `Ψ` by the implicit
    /// midpoint rule `b′ = b + τc + (τ/2)Ψ(b + b′)`, which is self-adjoint.
    /// The linear system is solved by fixed-point iteration, a contraction
    /// whenever `τ‖K‖/2 < 1`.
    pub(crate) fn kick_midpoint(&self, state: &mut State, tau: f64, work: &mut Workspace) -> Result<()> {
        self.source_constant(state, work);
        let kernel = &self.physics.kernel;
        if kernel.is_zero() {
            for (b, c) in state.b.iter_mut().zip(&work.modal) {
                *b += tau * c;
            }
            return Ok(());
        }
        // rhs = b + τc + (τ/2)Ψ(b), iterate b′ ← rhs + (τ/2)Ψ(b′)
        kernel.apply_into(&state.b, &mut work.modal2);
        let rhs: Vec<f64> = state
            .b
            .iter()
            .zip(&work.modal)
            .zip(&work.modal2)
            .map(|((b, c), k)| b + tau * c + 0.5 * tau * k)
            .collect();
        let mut current: Vec<f64> = rhs.iter().zip(&work.modal2).map(|(r, k)| r + 0.5 * tau * k).collect();
        for _ in 0..self.solver.max_iter {
            kernel.apply_into(&current, &mut work.modal3);
            let mut change: f64 = 0.0;
            let mut size: f64 = 0.0;
            for ((x, r), k) in current.iter_mut().zip(&rhs).zip(&work.modal3) {
                let next = r + 0.5 * tau * k;
                change = change.max((next - *x).abs());
                size = size.max(next.abs());
                *x = next;
            }
            if change <= self.solver.tol * (1.0 + size) {
                state.b.copy_from_slice(&current);
                return Ok(());
            }
        }
        Err(Error::Numerical(format!(
            "anti-damping midpoint iteration did not converge (tau*|K|/2 = {:e})",
            0.5 * tau * kernel.hs_norm()
        )))
    }

    pub(crate) fn damp_euler(&self, state: &mut State, tau: f64) -> Result<()> {
        let r = norm(&state.b);
        scale_to_damped(&mut state.b, r, self.physics.k * tau, self.physics.p, &self.solver)
    }

    /// Implicit midpoint for the damping: `m = damping_substep(b, τ/2)`,
    /// `b′ = 2m − b`. Self-adjoint and norm-nonincreasing.
    pub(crate) fn damp_midpoint(&self, state: &mut State, tau: f64) -> Result<()> {
        let r = norm(&state.b);
        let c = self.physics.k * 0.5 * tau;
        if r == 0.0 || c == 0.0 {
            return Ok(());
        }
        let rho = radial_damping_solve(r, c, self.physics.p, self.solver.tol, self.solver.max_iter)?;
        let factor = 2.0 * rho / r - 1.0;
        state.b.iter_mut().for_each(|v| *v *= factor);
        Ok(())
    }

    /// Exact flow of `a′ = b, b′ = −λa` over `dt`, mode by mode.
    pub(crate) fn rotate(&self, state: &mut State, dt: f64) {
        for ((a, b), lambda) in state.a.iter_mut().zip(state.b.iter_mut()).zip(self.basis.eigenvalues()) {
            let omega = lambda.sqrt();
            let (s, c) = (omega * dt).sin_cos();
            let (a0, b0) = (*a, *b);
            *a = a0 * c + b0 * s / omega;
            *b = -a0 * omega * s + b0 * c;
        }
    }
}

/// Advances `state` by one step of `step_config.scheme`.
pub fn step(
    basis: &SpectralBasis,
    config: &PhysicsConfig,
    state: &State,
    step_config: &StepConfig,
) -> Result<State> {
    step_with(&scheme::builtin_registry(), basis, config, state, step_config)
}

pub fn step_with(
    schemes: &SchemeRegistry,
    basis: &SpectralBasis,
    config: &PhysicsConfig,
    state: &State,
    step_config: &StepConfig,
) -> Result<State> {
    step_config.validate()?;
    state.check(basis)?;
    config.check(basis)?;
    let scheme = (schemes.get(&step_config.scheme)?)();
    let sys = System {
        basis,
        physics: config,
        solver: step_config.solver(),
    };
    let mut next = state.clone();
    scheme.advance(&sys, &mut next, step_config.dt, &mut Workspace::new(basis))?;
    next.time = state.time + step_config.dt;
    Ok(next)
}

/// What to sample while integrating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observers {
    /// Record every `record_stride` steps (and the final state); 0 disables.
    pub record_stride: usize,
    /// Keep a full state every `snapshot_stride` steps (and the final
    /// state); 0 disables.
    pub snapshot_stride: usize,
    /// `ε` of the recorded `V_ε`.
    pub epsilon: f64,
    /// Cutoff of the recorded tail energy fraction.
    pub tail_cutoff: usize,
}

impl Observers {
    pub fn every_step(basis: &SpectralBasis) -> Self {
        Observers {
            record_stride: 1,
            snapshot_stride: 0,
            epsilon: 0.0,
            tail_cutoff: basis.mode_count() / 2,
        }
    }

    pub fn none() -> Self {
        Observers {
            record_stride: 0,
            snapshot_stride: 0,
            epsilon: 0.0,
            tail_cutoff: 0,
        }
    }

    pub fn with_snapshots(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub records: Vec<ObservationRecord>,
    pub snapshots: Vec<State>,
    pub final_state: State,
    pub steps: usize,
    /// Diagnostic of a numerical failure; the trajectory is then partial.
    pub failure: Option<String>,
}

impl Trajectory {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

/// Number of steps and the final step length covering a duration.
pub fn step_plan(duration: f64, dt: f64) -> (usize, f64) {
    if duration <= 0.0 {
        return (0, dt);
    }
    let n = ((duration / dt) - 1e-9).ceil().max(1.0) as usize;
    let last = duration - (n - 1) as f64 * dt;
    (n, last)
}

/// Integrates from `state0` over a duration `t_final`.
///
/// Configuration errors are returned as `Err`; a numerical failure mid-run
/// stops the integration and is reported in [`Trajectory::failure`] along
/// with everything recorded up to that point.
pub fn integrate(
    basis: &SpectralBasis,
    config: &PhysicsConfig,
    state0: &State,
    t_final: f64,
    step_config: &StepConfig,
    observers: &Observers,
) -> Result<Trajectory> {
    integrate_with(&scheme::builtin_registry(), basis, config, state0, t_final, step_config, observers)
}

pub fn integrate_with(
    schemes: &SchemeRegistry,
    basis: &SpectralBasis,
    config: &PhysicsConfig,
    state0: &State,
    t_final: f64,
    step_config: &StepConfig,
    observers: &Observers,
) -> Result<Trajectory> {
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::Input(format!("integration time must be finite and >= 0, got {t_final}")));
    }
    step_config.validate()?;
    state0.check(basis)?;
    config.check(basis)?;
    if observers.record_stride > 0 && observers.tail_cutoff >= basis.mode_count() {
        return Err(Error::config(format!(
            "tail cutoff {} must be below the mode count {}",
            observers.tail_cutoff,
            basis.mode_count()
        )));
    }
    let scheme = (schemes.get(&step_config.scheme)?)();
    if step_config.dt * config.kernel.hs_norm() >= 1.0 {
        log::warn!(
            "dt * |K| = {:.3} >= 1: anti-damping is resolved poorly at this step size",
            step_config.dt * config.kernel.hs_norm()
        );
    }
    let sys = System {
        basis,
        physics: config,
        solver: step_config.solver(),
    };
    let mut work = Workspace::new(basis);
    let (n_steps, last_dt) = step_plan(t_final, step_config.dt);
    let t0 = state0.time;

    let mut traj = Trajectory {
        records: Vec::new(),
        snapshots: Vec::new(),
        final_state: state0.clone(),
        steps: 0,
        failure: None,
    };
    let wants = |stride: usize, i: usize| stride > 0 && (i.is_multiple_of(stride) || i == n_steps);

    let mut prev_energy = None;
    if wants(observers.record_stride, 0) {
        let (rec, e) = observe(basis, config, state0, None, observers, step_config.dt)?;
        traj.records.push(rec);
        prev_energy = Some((e, 0));
    }
    if wants(observers.snapshot_stride, 0) {
        traj.snapshots.push(state0.clone());
    }

    let mut state = state0.clone();
    for i in 1..=n_steps {
        let dt = if i == n_steps { last_dt } else { step_config.dt };
        let record_now = wants(observers.record_stride, i);
        let before = record_now.then(|| state.clone());
        if let Err(e) = scheme.advance(&sys, &mut state, dt, &mut work) {
            traj.failure = Some(format!("step {i} at t = {}: {e}", state.time));
            break;
        }
        state.time = if i == n_steps { t0 + t_final } else { t0 + i as f64 * step_config.dt };
        if !state.is_finite() {
            traj.failure = Some(format!("state became non-finite at step {i} (t = {})", state.time));
            break;
        }
        traj.steps = i;
        if let Some(before) = before {
            // energy of the previous step is needed for the residual
            let e_before = match prev_energy {
                Some((e, idx)) if idx + 1 == i => e,
                _ => energy(basis, config, &before)?.total,
            };
            let (rec, e) = observe(basis, config, &state, Some((&before, e_before)), observers, dt)?;
            traj.records.push(rec);
            prev_energy = Some((e, i));
        }
        if wants(observers.snapshot_stride, i) {
            traj.snapshots.push(state.clone());
        }
    }
    traj.final_state = state;
    Ok(traj)
}

fn observe(
    basis: &SpectralBasis,
    config: &PhysicsConfig,
    state: &State,
    before: Option<(&State, f64)>,
    observers: &Observers,
    dt: f64,
) -> Result<(ObservationRecord, f64)> {
    let e = energy(basis, config, state)?;
    let resid = match before {
        Some((prev, e_prev)) => residual_from_parts(basis, config, e_prev, e.total, prev, state, dt)?,
        None => 0.0,
    };
    let cross = observers.epsilon * crate::basis::dot(&state.b, &state.a);
    let rec = ObservationRecord {
        t: state.time,
        energy: e,
        l2_u: norm(&state.a),
        l2_v: norm(&state.b),
        h1_u: basis.grad_norm_sq(&state.a).sqrt(),
        v_eps: e.total + cross,
        resid,
        tail_frac: tail_energy_fraction(basis, state, observers.tail_cutoff)?,
    };
    Ok((rec, e.total))
}

#[cfg(test)]
mod tests;
