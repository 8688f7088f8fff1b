//! Long-time experiments on the discrete flow and their on-disk format.

mod pair;
mod persist;
mod sweep;
mod weak;

use serde::{Deserialize, Serialize};

pub use pair::{pair_contraction_experiment, PairReport};
pub use persist::{
    canonical_digest, load_manifest, load_records, persist_run, read_snapshot, write_records,
    write_snapshot, RunManifest, CODE_VERSION, RECORD_HEADER, SNAPSHOT_MAGIC,
};
pub use sweep::{dissipativity_sweep, random_state, AbsorbingReport, ScaleOutcome, SweepConfig};
pub use weak::weak_form_residual;

use crate::energy::EnergyBreakdown;

/// One row of `records.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub t: f64,
    pub energy: EnergyBreakdown,
    pub l2_u: f64,
    pub l2_v: f64,
    /// `‖∇u‖`.
    pub h1_u: f64,
    pub v_eps: f64,
    /// Energy identity residual of the step ending at `t`; 0 for the first row.
    pub resid: f64,
    pub tail_frac: f64,
}

impl ObservationRecord {
    /// `‖(u, u_t)‖` in `H¹₀ × L²`.
    pub fn phase_norm(&self) -> f64 {
        self.h1_u.hypot(self.l2_v)
    }

    pub(crate) fn columns(&self) -> [f64; 12] {
        let e = &self.energy;
        [
            self.t,
            e.total,
            e.kinetic,
            e.elastic,
            e.potential,
            e.forcing,
            self.l2_u,
            self.l2_v,
            self.h1_u,
            self.v_eps,
            self.resid,
            self.tail_frac,
        ]
    }

    pub(crate) fn from_columns(c: [f64; 12]) -> Self {
        ObservationRecord {
            t: c[0],
            energy: EnergyBreakdown {
                total: c[1],
                kinetic: c[2],
                elastic: c[3],
                potential: c[4],
                forcing: c[5],
            },
            l2_u: c[6],
            l2_v: c[7],
            h1_u: c[8],
            v_eps: c[9],
            resid: c[10],
            tail_frac: c[11],
        }
    }
}
