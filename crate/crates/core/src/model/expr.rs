//! Small wrapper over `meval` for pointwise expressions in config files.

use std::fmt;

use meval::{Context, Expr};

use crate::error::{Error, Result};

thread_local! {
    static BUILTINS: Context<'static> = Context::new();
}

/// A parsed real-valued expression of up to two named variables.
#[derive(Clone)]
pub struct ScalarExpr {
    source: String,
    expr: Expr,
    vars: [&'static str; 2],
}

impl ScalarExpr {
    /// Parses `source` over the variables `vars` (unused names are allowed).
    /// The expression is probed once so that unknown identifiers are
    /// reported at load time rather than mid-simulation.
    pub fn parse(source: &str, vars: [&'static str; 2]) -> Result<Self> {
        let expr: Expr = source
            .parse()
            .map_err(|e| Error::config(format!("cannot parse expression '{source}': {e}")))?;
        let parsed = ScalarExpr {
            source: source.to_owned(),
            expr,
            vars,
        };
        parsed.try_eval(0.5, 0.25)?;
        Ok(parsed)
    }

    fn try_eval(&self, a: f64, b: f64) -> Result<f64> {
        BUILTINS
            .with(|ctx| {
                self.expr
                    .eval_with_context(((self.vars[0], a), ((self.vars[1], b), ctx)))
            })
            .map_err(|e| Error::config(format!("cannot evaluate '{}': {e}", self.source)))
    }

    /// Evaluates at `(a, b)`. Parsing already checked every identifier, so the
    /// only runtime failures left are domain errors, which surface as NaN.
    pub fn eval(&self, a: f64, b: f64) -> f64 {
        self.try_eval(a, b).unwrap_or(f64::NAN)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl fmt::Debug for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarExpr({:?})", self.source)
    }
}
