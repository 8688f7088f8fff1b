//! Stationary problem `(I + A)U = F` for the damped wave operator
//! `A(u, v) = (−v, −Δu + k‖v‖^p v)` on the energy space `H¹₀ × L²`.
//!
//! Eliminating `u = v + f₀` leaves `(1 + λ_j + kσ^p) v_j = f₁_j − λ_j f₀_j`
//! with `σ = ‖v‖`, a single monotone scalar equation for `σ`.

use serde::{Deserialize, Serialize};

use super::root::increasing_root;
use crate::basis::{dot, norm, SpectralBasis};
use crate::error::{Error, Result};
use crate::model::{PhysicsConfig, State};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventProblem {
    pub f0: Vec<f64>,
    pub f1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventSolution {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `‖v‖`.
    pub sigma: f64,
    /// `‖u − v − f₀‖` in `H¹₀`.
    pub residual_position: f64,
    /// `‖v − Δu + k‖v‖^p v − f₁‖` in `L²`.
    pub residual_velocity: f64,
    pub iterations: usize,
    /// Requested bound on both residual components.
    pub tol: f64,
}

impl ResolventSolution {
    pub fn residual(&self) -> f64 {
        self.residual_position.max(self.residual_velocity)
    }

    pub fn within_tolerance(&self) -> bool {
        self.residual() <= self.tol
    }
}

const MAX_ITER: usize = 200;

/// How the scalar root search is initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BracketStart {
    /// `[0, ‖g‖/(1 + λ₁)]`, which always contains the root.
    Analytic,
    /// `[0, 1]`, doubled until it contains the root.
    Expanding,
}

pub fn resolvent_solve(
    basis: &SpectralBasis,
    config: &PhysicsConfig,
    problem: &ResolventProblem,
    tol: f64,
) -> Result<ResolventSolution> {
    resolvent_solve_from(basis, config, problem, BracketStart::Analytic, tol)
}

pub fn resolvent_solve_from(
    basis: &SpectralBasis,
    config: &PhysicsConfig,
    problem: &ResolventProblem,
    start: BracketStart,
    tol: f64,
) -> Result<ResolventSolution> {
    if !(tol > 0.0) {
        return Err(Error::config(format!("resolvent tolerance must be positive, got {tol}")));
    }
    let n = basis.mode_count();
    crate::error::check_len("resolvent f0", n, problem.f0.len())?;
    crate::error::check_len("resolvent f1", n, problem.f1.len())?;
    if problem.f0.iter().chain(&problem.f1).any(|x| !x.is_finite()) {
        return Err(Error::Input("resolvent data must be finite".into()));
    }
    let lambda = basis.eigenvalues();
    let g: Vec<f64> = (0..n).map(|j| problem.f1[j] - lambda[j] * problem.f0[j]).collect();
    let (k, p) = (config.k, config.p);

    // phi(σ) = σ − ‖v(σ)‖ is increasing, with phi(0) ≤ 0
    let phi = |sigma: f64| {
        let damp = k * sigma.powf(p);
        let (mut vv, mut dvv) = (0.0, 0.0);
        for (gj, lj) in g.iter().zip(lambda) {
            let d = 1.0 + lj + damp;
            vv += gj * gj / (d * d);
            dvv += gj * gj / (d * d * d);
        }
        let vn = vv.sqrt();
        let dsigma = if sigma > 0.0 { k * p * sigma.powf(p - 1.0) } else { 0.0 };
        let slope = if vn > 0.0 { 1.0 + dsigma * dvv / vn } else { 1.0 };
        (sigma - vn, slope)
    };

    let (sigma, iterations) = if norm(&g) == 0.0 {
        (0.0, 0)
    } else {
        let hi = match start {
            BracketStart::Analytic => norm(&g) / (1.0 + basis.lambda1()),
            BracketStart::Expanding => {
                let mut hi = 1.0;
                while phi(hi).0 < 0.0 {
                    hi *= 2.0;
                    if !hi.is_finite() {
                        return Err(Error::Numerical("resolvent bracket expansion overflowed".into()));
                    }
                }
                hi
            }
        };
        increasing_root(phi, 0.0, hi, hi, MAX_ITER)?
    };

    let damp = k * sigma.powf(p);
    let v: Vec<f64> = g.iter().zip(lambda).map(|(gj, lj)| gj / (1.0 + lj + damp)).collect();
    let u: Vec<f64> = v.iter().zip(&problem.f0).map(|(v, f)| v + f).collect();

    let pos: Vec<f64> = (0..n).map(|j| u[j] - v[j] - problem.f0[j]).collect();
    let vnorm = norm(&v);
    let c = k * vnorm.powf(p);
    let vel: Vec<f64> = (0..n)
        .map(|j| v[j] + lambda[j] * u[j] + c * v[j] - problem.f1[j])
        .collect();
    Ok(ResolventSolution {
        residual_position: basis.grad_norm_sq(&pos).sqrt(),
        residual_velocity: norm(&vel),
        u,
        v,
        sigma: vnorm,
        iterations,
        tol,
    })
}

/// `(A(U₁) − A(U₂), U₁ − U₂)` in `H¹₀ × L²`, evaluated term by term.
pub fn accretivity_form(basis: &SpectralBasis, config: &PhysicsConfig, first: &State, second: &State) -> Result<f64> {
    first.check(basis)?;
    second.check(basis)?;
    let lambda = basis.eigenvalues();
    let du: Vec<f64> = first.a.iter().zip(&second.a).map(|(x, y)| x - y).collect();
    let dv: Vec<f64> = first.b.iter().zip(&second.b).map(|(x, y)| x - y).collect();
    let c1 = config.k * norm(&first.b).powf(config.p);
    let c2 = config.k * norm(&second.b).powf(config.p);
    // position part: (−(v₁ − v₂), u₁ − u₂) in H¹₀
    let position: f64 = (0..du.len()).map(|j| -dv[j] * du[j] * lambda[j]).sum();
    // velocity part: (−Δ(u₁ − u₂) + k(‖v₁‖^p v₁ − ‖v₂‖^p v₂), v₁ − v₂)
    let elastic: f64 = (0..du.len()).map(|j| lambda[j] * du[j] * dv[j]).sum();
    let damping: Vec<f64> = first.b.iter().zip(&second.b).map(|(x, y)| c1 * x - c2 * y).collect();
    Ok(position + elastic + dot(&damping, &dv))
}
