//! Pointwise source laws `f` with their primitives `F(s) = ∫₀ˢ f`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::expr::ScalarExpr;
use crate::error::{Error, Result};
use crate::registry::Registry;

/// A pointwise nonlinearity. Implementations must supply the exact
/// primitive; the energy audit depends on it.
pub trait Nonlinearity: Send + Sync + fmt::Debug {
    fn value(&self, s: f64) -> f64;

    /// `F(s) = ∫₀ˢ f(r) dr`, so `F(0) = 0`.
    fn primitive(&self, s: f64) -> f64;

    /// `f′(s)`. The default is a central difference.
    fn derivative(&self, s: f64) -> f64 {
        let h = 1e-6 * s.abs().max(1.0);
        (self.value(s + h) - self.value(s - h)) / (2.0 * h)
    }

    /// Identically zero laws let callers skip the pseudo-spectral round trip.
    fn is_zero(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub kind: String,
    /// `odd_polynomial`: `f(s) = Σ_i coeffs[i]·s^(2i+1)`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coeffs: Vec<f64>,
    /// Space dimension used only in the growth exponent `2/(N−2)`.
    #[serde(rename = "N", default = "default_analytic_dim")]
    pub analytic_dim: u32,
    /// Claimed `liminf f′`, compared against the sampled estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// `custom_pointwise`: expressions in the variable `s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primitive: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivative: Option<String>,
}

fn default_analytic_dim() -> u32 {
    3
}

impl Default for NonlinearitySpec {
    fn default() -> Self {
        NonlinearitySpec {
            kind: "zero".into(),
            coeffs: Vec::new(),
            analytic_dim: default_analytic_dim(),
            mu: None,
            f: None,
            primitive: None,
            derivative: None,
        }
    }
}

impl NonlinearitySpec {
    pub fn odd_polynomial(coeffs: &[f64]) -> Self {
        NonlinearitySpec {
            kind: "odd_polynomial".into(),
            coeffs: coeffs.to_vec(),
            ..Default::default()
        }
    }
}

/// The source term of the equation: a law plus its bookkeeping constants.
#[derive(Debug, Clone)]
pub struct SourceTerm {
    pub kind: String,
    pub law: Arc<dyn Nonlinearity>,
    pub analytic_dim: u32,
    pub claimed_margin: Option<f64>,
}

impl SourceTerm {
    pub fn zero() -> Self {
        SourceTerm::new("zero", Arc::new(Zero))
    }

    pub fn new(kind: impl Into<String>, law: Arc<dyn Nonlinearity>) -> Self {
        SourceTerm {
            kind: kind.into(),
            law,
            analytic_dim: default_analytic_dim(),
            claimed_margin: None,
        }
    }

    pub fn odd_polynomial(coeffs: &[f64]) -> Self {
        SourceTerm::new("odd_polynomial", Arc::new(OddPolynomial::new(coeffs.to_vec())))
    }

    pub fn from_spec(spec: &NonlinearitySpec, registry: &NonlinearityRegistry) -> Result<Self> {
        if spec.analytic_dim < 3 {
            return Err(Error::config(format!(
                "nonlinearity.N must be at least 3, got {}",
                spec.analytic_dim
            )));
        }
        let law = (registry.get(&spec.kind)?)(spec)?;
        let at_zero = law.primitive(0.0);
        if at_zero.abs() > 1e-12 {
            return Err(Error::config(format!(
                "nonlinearity primitive must vanish at 0, got F(0) = {at_zero}"
            )));
        }
        Ok(SourceTerm {
            kind: spec.kind.clone(),
            law,
            analytic_dim: spec.analytic_dim,
            claimed_margin: spec.mu,
        })
    }

    /// `2/(N−2)`.
    pub fn growth_exponent(&self) -> f64 {
        2.0 / (self.analytic_dim as f64 - 2.0)
    }
}

pub type NonlinearityFactory = fn(&NonlinearitySpec) -> Result<Arc<dyn Nonlinearity>>;
pub type NonlinearityRegistry = Registry<NonlinearityFactory>;

pub fn builtin_registry() -> NonlinearityRegistry {
    NonlinearityRegistry::new("nonlinearity")
        .with("zero", |_| Ok(Arc::new(Zero)))
        .with("odd_polynomial", |spec| {
            if spec.coeffs.is_empty() {
                return Err(Error::config("odd_polynomial needs at least one coefficient"));
            }
            Ok(Arc::new(OddPolynomial::new(spec.coeffs.clone())))
        })
        .with("custom_pointwise", |spec| Ok(Arc::new(Pointwise::from_spec(spec)?)))
}

#[derive(Debug, Clone, Copy)]
pub struct Zero;

impl Nonlinearity for Zero {
    fn value(&self, _: f64) -> f64 {
        0.0
    }
    fn primitive(&self, _: f64) -> f64 {
        0.0
    }
    fn derivative(&self, _: f64) -> f64 {
        0.0
    }
    fn is_zero(&self) -> bool {
        true
    }
}

/// `f(s) = Σ_i c_i s^(2i+1)`.
#[derive(Debug, Clone)]
pub struct OddPolynomial {
    coeffs: Vec<f64>,
}

impl OddPolynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        OddPolynomial { coeffs }
    }

    // Horner in s², times s^lead.
    fn horner(&self, s2: f64, scale: impl Fn(usize) -> f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (i, c)| acc * s2 + c * scale(i))
    }
}

impl Nonlinearity for OddPolynomial {
    fn value(&self, s: f64) -> f64 {
        s * self.horner(s * s, |_| 1.0)
    }

    fn primitive(&self, s: f64) -> f64 {
        let s2 = s * s;
        s2 * self.horner(s2, |i| 1.0 / (2 * i + 2) as f64)
    }

    fn derivative(&self, s: f64) -> f64 {
        self.horner(s * s, |i| (2 * i + 1) as f64)
    }

    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }
}

/// Law given by expressions in `s` for `f`, `F` and optionally `f′`.
#[derive(Debug, Clone)]
pub struct Pointwise {
    value: ScalarExpr,
    primitive: ScalarExpr,
    derivative: Option<ScalarExpr>,
}

impl Pointwise {
    pub fn from_spec(spec: &NonlinearitySpec) -> Result<Self> {
        let parse = |src: &Option<String>, what: &str| -> Result<ScalarExpr> {
            let src = src.as_deref().ok_or_else(|| {
                Error::config(format!("custom_pointwise nonlinearity needs '{what}'"))
            })?;
            ScalarExpr::parse(src, ["s", "_"])
        };
        Ok(Pointwise {
            value: parse(&spec.f, "f")?,
            primitive: parse(&spec.primitive, "primitive")?,
            derivative: spec
                .derivative
                .as_deref()
                .map(|d| ScalarExpr::parse(d, ["s", "_"]))
                .transpose()?,
        })
    }
}

impl Nonlinearity for Pointwise {
    fn value(&self, s: f64) -> f64 {
        self.value.eval(s, 0.0)
    }

    fn primitive(&self, s: f64) -> f64 {
        self.primitive.eval(s, 0.0)
    }

    fn derivative(&self, s: f64) -> f64 {
        match &self.derivative {
            Some(d) => d.eval(s, 0.0),
            None => {
                let h = 1e-6 * s.abs().max(1.0);
                (self.value(s + h) - self.value(s - h)) / (2.0 * h)
            }
        }
    }
}
