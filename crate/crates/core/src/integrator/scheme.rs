//! Splitting schemes, selected by name.

use std::fmt::Debug;

use super::{System, Workspace};
use crate::error::Result;
use crate::model::State;
use crate::registry::Registry;

/// One-step map of the full flow.
pub trait Scheme: Send + Sync + Debug {
    fn name(&self) -> &'static str;

    /// Advances `state.a`, `state.b` by `dt`. The caller owns `state.time`.
    fn advance(&self, sys: &System<'_>, state: &mut State, dt: f64, work: &mut Workspace) -> Result<()>;
}

pub type SchemeFactory = fn() -> Box<dyn Scheme>;
pub type SchemeRegistry = Registry<SchemeFactory>;

pub fn builtin_registry() -> SchemeRegistry {
    SchemeRegistry::new("scheme")
        .with("strang", || Box::new(Strang))
        .with("strang_euler", || Box::new(StrangEuler))
        .with("lie", || Box::new(Lie))
}

/// Symmetric Strang splitting built from self-adjoint pieces, second order:
/// half kick (midpoint in `Ψ`), half damping (implicit midpoint), full
/// rotation, then the same halves in reverse order.
#[derive(Debug, Clone, Copy)]
pub struct Strang;

impl Scheme for Strang {
    fn name(&self) -> &'static str {
        "strang"
    }

    fn advance(&self, sys: &System<'_>, state: &mut State, dt: f64, work: &mut Workspace) -> Result<()> {
        let half = 0.5 * dt;
        sys.kick_midpoint(state, half, work)?;
        sys.damp_midpoint(state, half)?;
        sys.rotate(state, dt);
        sys.damp_midpoint(state, half)?;
        sys.kick_midpoint(state, half, work)
    }
}

/// Strang ordering with an explicit frozen kick and implicit Euler damping
/// half steps. Unconditionally damping-stable, but the pieces are not
/// self-adjoint and the composition is only first order.
#[derive(Debug, Clone, Copy)]
pub struct StrangEuler;

impl Scheme for StrangEuler {
    fn name(&self) -> &'static str {
        "strang_euler"
    }

    fn advance(&self, sys: &System<'_>, state: &mut State, dt: f64, work: &mut Workspace) -> Result<()> {
        let half = 0.5 * dt;
        sys.kick_frozen(state, half, work);
        sys.damp_euler(state, half)?;
        sys.rotate(state, dt);
        sys.damp_euler(state, half)?;
        sys.kick_frozen(state, half, work);
        Ok(())
    }
}

/// Kick, damp, rotate once each. First order, cheapest.
#[derive(Debug, Clone, Copy)]
pub struct Lie;

impl Scheme for Lie {
    fn name(&self) -> &'static str {
        "lie"
    }

    fn advance(&self, sys: &System<'_>, state: &mut State, dt: f64, work: &mut Workspace) -> Result<()> {
        sys.kick_frozen(state, dt, work);
        sys.damp_euler(state, dt)?;
        sys.rotate(state, dt);
        Ok(())
    }
}
