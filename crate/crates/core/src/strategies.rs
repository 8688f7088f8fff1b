//! Named strategy families, looked up at runtime from config strings.

use crate::integrator::scheme::{self, SchemeRegistry};
use crate::model::field::{self, FieldRegistry};
use crate::model::kernel::{self, KernelRegistry};
use crate::model::nonlinearity::{self, NonlinearityRegistry};
use crate::verify::{self, CheckRegistry};

#[derive(Debug)]
pub struct Strategies {
    pub nonlinearities: NonlinearityRegistry,
    pub kernels: KernelRegistry,
    pub fields: FieldRegistry,
    pub schemes: SchemeRegistry,
    pub checks: CheckRegistry,
}

impl Strategies {
    pub fn builtin() -> Self {
        Strategies {
            nonlinearities: nonlinearity::builtin_registry(),
            kernels: kernel::builtin_registry(),
            fields: field::builtin_registry(),
            schemes: scheme::builtin_registry(),
            checks: verify::builtin_registry(),
        }
    }
}

impl Default for Strategies {
    fn default() -> Self {
        Strategies::builtin()
    }
}
