//! Audit of the weak formulation along stored snapshots.
//!
//! For a test function `ψ = φ_j` the identity reads
//!
//! ```text
//! (u_t(t), ψ) = (u_t(0), ψ) + ∫₀ᵗ [ (Ψ(u_t), ψ) + (h, ψ) − (∇u, ∇ψ)
//!                                  − k‖u_t‖^p (u_t, ψ) − (f(u), ψ) ] dτ
//! ```
//!
//! and every inner product is a single modal coefficient.

use crate::basis::{norm, SpectralBasis};
use crate::error::{Error, Result};
use crate::model::{antidamping, nonlinearity_apply, PhysicsConfig, State};

/// Largest mismatch of the identity over the test modes and snapshot times,
/// divided by the largest single term. Time integrals use the trapezoid rule
/// over the snapshots, which need not be equally spaced.
pub fn weak_form_residual(
    basis: &SpectralBasis,
    config: &PhysicsConfig,
    snapshots: &[State],
    test_modes: &[usize],
) -> Result<f64> {
    if snapshots.len() < 3 {
        return Err(Error::Input(format!(
            "weak-form audit needs at least 3 snapshots, got {}",
            snapshots.len()
        )));
    }
    let n = basis.mode_count();
    if let Some(&j) = test_modes.iter().find(|&&j| j >= n) {
        return Err(Error::Input(format!("test mode {j} is outside the basis ({n} modes)")));
    }
    for s in snapshots {
        s.check(basis)?;
    }
    if snapshots.windows(2).any(|w| w[1].time <= w[0].time) {
        return Err(Error::Input("snapshot times must be strictly increasing".into()));
    }

    // integrands of the separate terms, per snapshot and test mode
    let lambda = basis.eigenvalues();
    let mut terms: Vec<[Vec<f64>; 5]> = Vec::with_capacity(snapshots.len());
    for s in snapshots {
        let kernel = antidamping(config, basis, &s.b)?;
        let source = nonlinearity_apply(config, basis, &s.a)?;
        let c = config.damping_coefficient(norm(&s.b));
        let pick = |f: &dyn Fn(usize) -> f64| test_modes.iter().map(|&j| f(j)).collect::<Vec<_>>();
        terms.push([
            pick(&|j| kernel[j]),
            pick(&|j| config.h[j]),
            pick(&|j| -lambda[j] * s.a[j]),
            pick(&|j| -c * s.b[j]),
            pick(&|j| -source[j]),
        ]);
    }

    let mut integrals = vec![[0.0; 5]; test_modes.len()];
    let mut scale: f64 = 0.0;
    let mut worst: f64 = 0.0;
    let first = &snapshots[0];
    for i in 1..snapshots.len() {
        let dt = snapshots[i].time - snapshots[i - 1].time;
        for (m, &j) in test_modes.iter().enumerate() {
            for (k, acc) in integrals[m].iter_mut().enumerate() {
                *acc += 0.5 * dt * (terms[i - 1][k][m] + terms[i][k][m]);
            }
            let lhs = snapshots[i].b[j];
            let rhs = first.b[j] + integrals[m].iter().sum::<f64>();
            worst = worst.max((lhs - rhs).abs());
            scale = integrals[m]
                .iter()
                .chain([&lhs, &first.b[j]])
                .fold(scale, |acc, v| acc.max(v.abs()));
        }
    }
    Ok(if scale > 0.0 { worst / scale } else { 0.0 })
}
