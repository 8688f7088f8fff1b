//! Scalar functionals and inequality audits along trajectories.

use serde::{Deserialize, Serialize};

use crate::basis::{dot, norm, SpectralBasis};
use crate::error::{check_len, Error, Result};
use crate::model::{forcing_integral, potential_integral, PhysicsConfig, State};

/// `ℰ(u, u_t) = ½‖u_t‖² + ½‖∇u‖² + ∫F(u) − ∫hu`, split by term.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub elastic: f64,
    pub potential: f64,
    pub forcing: f64,
    pub total: f64,
}

pub fn energy(basis: &SpectralBasis, config: &PhysicsConfig, state: &State) -> Result<EnergyBreakdown> {
    state.check(basis)?;
    let kinetic = 0.5 * dot(&state.b, &state.b);
    let elastic = 0.5 * basis.grad_norm_sq(&state.a);
    let potential = potential_integral(config, basis, &state.a)?;
    let forcing = -forcing_integral(config, basis, &state.a)?;
    Ok(EnergyBreakdown {
        kinetic,
        elastic,
        potential,
        forcing,
        total: kinetic + elastic + potential + forcing,
    })
}

/// `V_ε = ℰ + ε(u_t, u)`.
pub fn lyapunov(basis: &SpectralBasis, config: &PhysicsConfig, state: &State, epsilon: f64) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::Input(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let e = energy(basis, config, state)?;
    Ok(e.total + epsilon * dot(&state.b, &state.a))
}

/// Largest `ε` with `|ε(u_t,u)| ≤ (1/16)(1 − μ₀/λ₁)(‖u_t‖² + ‖∇u‖²)` for
/// every state: `ε₀ = (1/8)(1 − μ₀/λ₁)√λ₁`.
pub fn epsilon_ceiling(basis: &SpectralBasis, mu0: f64) -> Result<f64> {
    epsilon_ceiling_for(basis.lambda1(), mu0)
}

pub fn epsilon_ceiling_for(lambda1: f64, mu0: f64) -> Result<f64> {
    if !(mu0 > 0.0 && mu0 < lambda1) {
        return Err(Error::Input(format!("mu0 must lie in (0, lambda1 = {lambda1}), got {mu0}")));
    }
    Ok(0.125 * (1.0 - mu0 / lambda1) * lambda1.sqrt())
}

/// Default `μ₀`: midpoint of `(max(0, −μ), λ₁)`.
pub fn default_mu0(lambda1: f64, mu: f64) -> Result<f64> {
    let lo = (-mu).max(0.0);
    if !(lo < lambda1) {
        return Err(Error::Input(format!(
            "no admissible mu0: need -mu < lambda1, got mu = {mu}, lambda1 = {lambda1}"
        )));
    }
    Ok(0.5 * (lo + lambda1))
}

/// `dℰ/dt` predicted by the energy identity: `−k‖b‖^{p+2} + (Ψb, b)`.
pub fn dissipation_rate(basis: &SpectralBasis, config: &PhysicsConfig, b: &[f64]) -> Result<f64> {
    let nb = basis.l2_norm(b)?;
    let damping = if nb == 0.0 { 0.0 } else { config.k * nb.powf(config.p + 2.0) };
    let anti = if config.kernel.is_zero() { 0.0 } else { dot(&config.kernel.apply(b)?, b) };
    Ok(anti - damping)
}

/// `|Δℰ/dt − ½(rate(before) + rate(after))|` over one step.
pub fn energy_identity_residual(
    basis: &SpectralBasis,
    config: &PhysicsConfig,
    before: &State,
    after: &State,
    dt: f64,
) -> Result<f64> {
    let e0 = energy(basis, config, before)?.total;
    let e1 = energy(basis, config, after)?.total;
    residual_from_parts(basis, config, e0, e1, before, after, dt)
}

pub(crate) fn residual_from_parts(
    basis: &SpectralBasis,
    config: &PhysicsConfig,
    e0: f64,
    e1: f64,
    before: &State,
    after: &State,
    dt: f64,
) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::Input(format!("dt must be positive, got {dt}")));
    }
    let rate = 0.5 * (dissipation_rate(basis, config, &before.b)? + dissipation_rate(basis, config, &after.b)?);
    Ok(((e1 - e0) / dt - rate).abs())
}

/// Which lower bound of the monotonicity inequality applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotonicityBranch {
    /// `q ≥ 2`: `C‖x−y‖^q`.
    Power,
    /// `1 < q < 2`: `C‖x−y‖²/(‖x‖+‖y‖)^{2−q}`.
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub exponent: f64,
    /// `(‖x‖^{q−2}x − ‖y‖^{q−2}y, x − y)`.
    pub lhs: f64,
    pub branch: MonotonicityBranch,
    /// `lhs / denominator`; 0 when the denominator vanishes.
    pub ratio: f64,
    pub pass: bool,
}

pub fn monotonicity_check(x: &[f64], y: &[f64], q: f64) -> Result<MonotonicityReport> {
    check_len("monotonicity pair", x.len(), y.len())?;
    if !(q > 1.0) {
        return Err(Error::Input(format!("exponent must exceed 1, got {q}")));
    }
    let (nx, ny) = (norm(x), norm(y));
    if nx == 0.0 && ny == 0.0 {
        return Err(Error::Input("monotonicity check needs (x, y) != (0, 0)".into()));
    }
    let scale = |n: f64| if n == 0.0 { 0.0 } else { n.powf(q - 2.0) };
    let (sx, sy) = (scale(nx), scale(ny));
    let mut lhs = 0.0;
    let mut dist2 = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let d = xi - yi;
        lhs += (sx * xi - sy * yi) * d;
        dist2 += d * d;
    }
    let (branch, denom) = if q >= 2.0 {
        (MonotonicityBranch::Power, dist2.sqrt().powf(q))
    } else {
        (MonotonicityBranch::Weighted, dist2 / (nx + ny).powf(2.0 - q))
    };
    let ratio = if denom > 0.0 { lhs / denom } else { 0.0 };
    let tolerance = 1e-14 * (nx + ny).powf(q);
    Ok(MonotonicityReport {
        exponent: q,
        lhs,
        branch,
        ratio,
        pass: lhs >= -tolerance,
    })
}

/// `E^{n,m} = ½(‖∇(u⁽ⁿ⁾−u⁽ᵐ⁾)‖² + ‖u_t⁽ⁿ⁾−u_t⁽ᵐ⁾‖²)`.
pub fn pair_energy(basis: &SpectralBasis, a: &State, b: &State) -> Result<f64> {
    a.check(basis)?;
    b.check(basis)?;
    let mut total = 0.0;
    for (j, lambda) in basis.eigenvalues().iter().enumerate() {
        let du = a.a[j] - b.a[j];
        let dv = a.b[j] - b.b[j];
        total += lambda * du * du + dv * dv;
    }
    Ok(0.5 * total)
}

/// Share of `Σ ½(λ_j a_j² + b_j²)` carried by modes past `cutoff`
/// (1-based mode positions `> cutoff`). Zero for the zero state.
pub fn tail_energy_fraction(basis: &SpectralBasis, state: &State, cutoff: usize) -> Result<f64> {
    state.check(basis)?;
    if cutoff >= basis.mode_count() {
        return Err(Error::Input(format!(
            "cutoff {cutoff} must be below the mode count {}",
            basis.mode_count()
        )));
    }
    let mut head = 0.0;
    let mut tail = 0.0;
    for (j, lambda) in basis.eigenvalues().iter().enumerate() {
        let e = 0.5 * (lambda * state.a[j] * state.a[j] + state.b[j] * state.b[j]);
        if j < cutoff {
            head += e;
        } else {
            tail += e;
        }
    }
    let total = head + tail;
    Ok(if total > 0.0 { tail / total } else { 0.0 })
}

/// Fitted form of the energy lower bound
/// `ℰ ≥ (1/8)(1 − μ₀/λ₁)(‖u_t‖² + ‖∇u‖²) − C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichBound {
    pub mu0: f64,
    pub lambda1: f64,
    pub constant: f64,
}

impl SandwichBound {
    pub fn coercive_part(&self, basis: &SpectralBasis, state: &State) -> f64 {
        0.125 * (1.0 - self.mu0 / self.lambda1) * (dot(&state.b, &state.b) + basis.grad_norm_sq(&state.a))
    }

    /// Smallest `C` making the bound hold on every state in `states`.
    pub fn fit(
        basis: &SpectralBasis,
        config: &PhysicsConfig,
        mu0: f64,
        states: &[State],
    ) -> Result<SandwichBound> {
        let mut bound = SandwichBound {
            mu0,
            lambda1: basis.lambda1(),
            constant: 0.0,
        };
        for s in states {
            let gap = bound.coercive_part(basis, s) - energy(basis, config, s)?.total;
            bound.constant = bound.constant.max(gap);
        }
        Ok(bound)
    }

    /// `ℰ − (coercive part − C)`; nonnegative when the bound holds.
    pub fn margin(&self, basis: &SpectralBasis, config: &PhysicsConfig, state: &State) -> Result<f64> {
        Ok(energy(basis, config, state)?.total - (self.coercive_part(basis, state) - self.constant))
    }
}
