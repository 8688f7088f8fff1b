//! Modal fields from config: forcing `h`, initial data, resolvent data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::expr::ScalarExpr;
use crate::basis::SpectralBasis;
use crate::error::{Error, Result};
use crate::registry::Registry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(rename = "type")]
    pub kind: String,
    /// `modal_list`: coefficients by wavenumber.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<ModeValue>,
    /// `pointwise_expr`: expression in `x` (and `y` in 2D).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    /// `random`: coefficient scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// `random`: coefficients decay like `|k|^(-decay)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeValue {
    pub k: Vec<usize>,
    pub value: f64,
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::zero()
    }
}

impl FieldSpec {
    pub fn zero() -> Self {
        FieldSpec {
            kind: "zero".into(),
            modes: Vec::new(),
            expr: None,
            amplitude: None,
            decay: None,
        }
    }

    pub fn modal(entries: &[(&[usize], f64)]) -> Self {
        FieldSpec {
            kind: "modal_list".into(),
            modes: entries
                .iter()
                .map(|(k, value)| ModeValue {
                    k: k.to_vec(),
                    value: *value,
                })
                .collect(),
            ..FieldSpec::zero()
        }
    }

    pub fn build(&self, registry: &FieldRegistry, ctx: &FieldContext<'_>) -> Result<Vec<f64>> {
        let field = (registry.get(&self.kind)?)(self, ctx)?;
        if field.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(format!("{} field has non-finite coefficients", self.kind)));
        }
        Ok(field)
    }
}

pub struct FieldContext<'a> {
    pub basis: &'a SpectralBasis,
    /// Seed for stochastic fields; callers derive distinct seeds per field.
    pub seed: u64,
}

pub type FieldFactory = fn(&FieldSpec, &FieldContext<'_>) -> Result<Vec<f64>>;
pub type FieldRegistry = Registry<FieldFactory>;

pub fn builtin_registry() -> FieldRegistry {
    FieldRegistry::new("field")
        .with("zero", |_, ctx| Ok(vec![0.0; ctx.basis.mode_count()]))
        .with("modal_list", modal_list)
        .with("pointwise_expr", pointwise)
        .with("random", random)
}

fn modal_list(spec: &FieldSpec, ctx: &FieldContext<'_>) -> Result<Vec<f64>> {
    let mut out = vec![0.0; ctx.basis.mode_count()];
    for entry in &spec.modes {
        let j = ctx.basis.mode_index(&entry.k).ok_or_else(|| {
            Error::config(format!("mode {:?} is not retained by the basis", entry.k))
        })?;
        out[j] += entry.value;
    }
    Ok(out)
}

fn pointwise(spec: &FieldSpec, ctx: &FieldContext<'_>) -> Result<Vec<f64>> {
    let src = spec
        .expr
        .as_deref()
        .ok_or_else(|| Error::config("pointwise_expr field needs 'expr'"))?;
    let e = ScalarExpr::parse(src, ["x", "y"])?;
    ctx.basis.to_modal(&ctx.basis.sample(|x, y| e.eval(x, y)))
}

fn random(spec: &FieldSpec, ctx: &FieldContext<'_>) -> Result<Vec<f64>> {
    let amplitude = spec.amplitude.unwrap_or(1.0);
    let decay = spec.decay.unwrap_or(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    Ok((0..ctx.basis.mode_count())
        .map(|j| {
            let z: f64 = StandardNormal.sample(&mut rng);
            amplitude * z * wavenumber_magnitude(ctx.basis, j).powf(-decay)
        })
        .collect())
}

/// `|k|` of mode `j`.
pub fn wavenumber_magnitude(basis: &SpectralBasis, j: usize) -> f64 {
    let [k1, k2] = basis.wavenumber(j);
    ((k1 * k1 + k2 * k2) as f64).sqrt()
}
