//! Property checks run by `nlwave verify`, registered by name.

use std::fmt::Debug;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::{dot, SpectralBasis};
use crate::energy::{energy_identity_residual, monotonicity_check};
use crate::error::Result;
use crate::experiments::random_state;
use crate::integrator::{accretivity_form, damping_substep, radial_damping_solve, step, StepConfig};
use crate::model::{validate_assumptions, PhysicsConfig, State};
use crate::registry::Registry;

/// Inputs shared by all checks.
pub struct VerifyContext<'a> {
    pub basis: &'a SpectralBasis,
    pub physics: &'a PhysicsConfig,
    pub step: &'a StepConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub trait Check: Send + Sync + Debug {
    fn name(&self) -> &'static str;
    fn run(&self, ctx: &VerifyContext<'_>) -> Result<CheckOutcome>;
}

pub type CheckFactory = fn() -> Box<dyn Check>;
pub type CheckRegistry = Registry<CheckFactory>;

pub fn builtin_registry() -> CheckRegistry {
    CheckRegistry::new("check")
        .with("monotonicity", || Box::new(Monotonicity))
        .with("parseval_poincare", || Box::new(ParsevalPoincare))
        .with("accretivity", || Box::new(Accretivity))
        .with("radial_oracles", || Box::new(RadialOracles))
        .with("energy_identity_order", || Box::new(EnergyIdentityOrder))
        .with("assumptions", || Box::new(Assumptions))
}

/// Runs every registered check in name order. A check that errors counts
/// as failed, with the error as its detail.
pub fn run_all(registry: &CheckRegistry, ctx: &VerifyContext<'_>) -> Vec<CheckOutcome> {
    registry
        .iter()
        .map(|(name, make)| {
            make().run(ctx).unwrap_or_else(|e| CheckOutcome {
                name: name.to_string(),
                passed: false,
                detail: format!("error: {e}"),
            })
        })
        .collect()
}

fn outcome(name: &str, passed: bool, detail: String) -> Result<CheckOutcome> {
    Ok(CheckOutcome {
        name: name.into(),
        passed,
        detail,
    })
}

#[derive(Debug)]
struct Monotonicity;

impl Check for Monotonicity {
    fn name(&self) -> &'static str {
        "monotonicity"
    }

    fn run(&self, ctx: &VerifyContext<'_>) -> Result<CheckOutcome> {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let mut worst = f64::INFINITY;
        let mut failures = 0;
        for &q in &[1.5, 2.5, 3.0, 4.0] {
            for &dim in &[2usize, 16] {
                for _ in 0..2000 {
                    let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let y: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let r = monotonicity_check(&x, &y, q)?;
                    if !r.pass {
                        failures += 1;
                    }
                    worst = worst.min(r.ratio);
                }
            }
        }
        outcome(
            self.name(),
            failures == 0 && worst > 0.0,
            format!("{failures} violations, min ratio {worst:.3e}"),
        )
    }
}

#[derive(Debug)]
struct ParsevalPoincare;

impl Check for ParsevalPoincare {
    fn name(&self) -> &'static str {
        "parseval_poincare"
    }

    fn run(&self, ctx: &VerifyContext<'_>) -> Result<CheckOutcome> {
        let basis = ctx.basis;
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ 1);
        let mut parseval: f64 = 0.0;
        let mut poincare_ok = true;
        for _ in 0..50 {
            let a: Vec<f64> = (0..basis.mode_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let grid = basis.to_physical(&a)?;
            let q = basis.quadrature(&grid.iter().map(|u| u * u).collect::<Vec<_>>())?;
            let l2 = dot(&a, &a);
            parseval = parseval.max((q - l2).abs() / l2.max(f64::MIN_POSITIVE));
            poincare_ok &= basis.grad_norm(&a)?.powi(2) >= basis.lambda1() * l2 * (1.0 - 1e-12);
        }
        outcome(
            self.name(),
            parseval < 1e-12 && poincare_ok,
            format!("Parseval rel. error {parseval:.2e}, Poincare {}", if poincare_ok { "holds" } else { "violated" }),
        )
    }
}

#[derive(Debug)]
struct Accretivity;

impl Check for Accretivity {
    fn name(&self) -> &'static str {
        "accretivity"
    }

    fn run(&self, ctx: &VerifyContext<'_>) -> Result<CheckOutcome> {
        let mut worst = f64::INFINITY;
        for i in 0..200u64 {
            let s1 = random_state(ctx.basis, ctx.seed.wrapping_add(2 * i), 1.0 + i as f64 * 0.05)?;
            let s2 = random_state(ctx.basis, ctx.seed.wrapping_add(2 * i + 1), 1.0)?;
            let form = accretivity_form(ctx.basis, ctx.physics, &s1, &s2)?;
            let scale = s1.phase_norm(ctx.basis).max(s2.phase_norm(ctx.basis)).powf(ctx.physics.p + 2.0).max(1.0);
            worst = worst.min(form / scale);
        }
        // contractivity of the damping substep on the same samples
        let mut grew = false;
        for i in 0..200u64 {
            let s = random_state(ctx.basis, ctx.seed.wrapping_add(1000 + i), 0.1 * (i + 1) as f64)?;
            let out = damping_substep(ctx.basis, ctx.physics, &s.b, 0.5, &ctx.step.solver())?;
            grew |= dot(&out, &out) > dot(&s.b, &s.b);
        }
        outcome(
            self.name(),
            worst >= -1e-12 && !grew,
            format!("min normalized form {worst:.3e}, damping substep contractive: {}", !grew),
        )
    }
}

#[derive(Debug)]
struct RadialOracles;

impl Check for RadialOracles {
    fn name(&self) -> &'static str {
        "radial_oracles"
    }

    fn run(&self, ctx: &VerifyContext<'_>) -> Result<CheckOutcome> {
        let (tol, iters) = (ctx.step.radial_tol, ctx.step.radial_max_iter);
        let exact = radial_damping_solve(2.0, 1.0, 2.0, tol, iters)?;
        let mut worst: f64 = (exact - 1.0).abs();
        for i in 0..40 {
            for j in 0..25 {
                let c = 10f64.powf(-3.0 + 6.0 * i as f64 / 39.0);
                let r = 10f64.powf(-3.0 + 6.0 * j as f64 / 24.0);
                let closed = 2.0 * r / (1.0 + (1.0 + 4.0 * c * r).sqrt());
                let rho = radial_damping_solve(r, c, 1.0, tol, iters)?;
                worst = worst.max((rho - closed).abs() / closed.max(1.0));
            }
        }
        outcome(self.name(), worst <= 1e-12, format!("max deviation from closed forms {worst:.2e}"))
    }
}

#[derive(Debug)]
struct EnergyIdentityOrder;

impl EnergyIdentityOrder {
    fn residual(ctx: &VerifyContext<'_>, state0: &State, dt: f64) -> Result<f64> {
        let cfg = StepConfig {
            dt,
            ..ctx.step.clone()
        };
        let mut state = state0.clone();
        let mut worst: f64 = 0.0;
        let steps = (0.2 / dt).round() as usize;
        for _ in 0..steps {
            let next = step(ctx.basis, ctx.physics, &state, &cfg)?;
            worst = worst.max(energy_identity_residual(ctx.basis, ctx.physics, &state, &next, dt)?);
            state = next;
        }
        Ok(worst)
    }
}

impl Check for EnergyIdentityOrder {
    fn name(&self) -> &'static str {
        "energy_identity_order"
    }

    fn run(&self, ctx: &VerifyContext<'_>) -> Result<CheckOutcome> {
        let state0 = random_state(ctx.basis, ctx.seed, 1.0)?;
        let dts = [0.02, 0.01, 0.005];
        let r: Vec<f64> = dts
            .iter()
            .map(|&dt| Self::residual(ctx, &state0, dt))
            .collect::<Result<_>>()?;
        if r[2] < 1e-11 {
            return outcome(self.name(), true, format!("residual at round-off level ({:.2e})", r[2]));
        }
        let order = (r[0] / r[2]).log2() / 2.0;
        outcome(
            self.name(),
            order >= 1.7,
            format!("residuals {:.2e} {:.2e} {:.2e}, order {order:.2}", r[0], r[1], r[2]),
        )
    }
}

#[derive(Debug)]
struct Assumptions;

impl Check for Assumptions {
    fn name(&self) -> &'static str {
        "assumptions"
    }

    fn run(&self, ctx: &VerifyContext<'_>) -> Result<CheckOutcome> {
        let report = validate_assumptions(ctx.physics, ctx.basis, 10.0, 2001)?;
        let detail = if report.warnings.is_empty() {
            format!(
                "mu estimate {:.3e} > -lambda1 = {:.3e}, growth constant {:.3e}",
                report.mu_estimate, -report.lambda1, report.growth_constant
            )
        } else {
            report.warnings.join("; ")
        };
        outcome(self.name(), report.passed(), detail)
    }
}
