//! Physics of `u_tt − Δu + k‖u_t‖^p u_t + f(u) = Ψ(u_t) + h` with Dirichlet
//! boundary conditions, in modal coordinates.

pub mod expr;
pub mod field;
pub mod kernel;
pub mod nonlinearity;

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use field::{FieldContext, FieldSpec, ModeValue};
pub use kernel::{Kernel, KernelSpec, SeparableTerm, SeparableTermSpec};
pub use nonlinearity::{Nonlinearity, NonlinearitySpec, SourceTerm};

use crate::basis::{dot, norm, SpectralBasis};
use crate::error::{check_len, Error, Result};
use crate::strategies::Strategies;

/// Phase point `(u, u_t)` in modal coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    /// Coefficients of `u`.
    pub a: Vec<f64>,
    /// Coefficients of `u_t`.
    pub b: Vec<f64>,
    pub time: f64,
}

impl State {
    pub fn zeros(n: usize) -> Self {
        State {
            a: vec![0.0; n],
            b: vec![0.0; n],
            time: 0.0,
        }
    }

    pub fn new(a: Vec<f64>, b: Vec<f64>, time: f64) -> Result<Self> {
        check_len("state velocity", a.len(), b.len())?;
        let s = State { a, b, time };
        if !s.is_finite() {
            return Err(Error::Input("state has non-finite entries".into()));
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.time.is_finite() && self.a.iter().chain(&self.b).all(|v| v.is_finite())
    }

    pub fn check(&self, basis: &SpectralBasis) -> Result<()> {
        check_len("state position", basis.mode_count(), self.a.len())?;
        check_len("state velocity", basis.mode_count(), self.b.len())
    }

    /// `‖(u, u_t)‖_{H¹₀×L²} = (‖∇u‖² + ‖u_t‖²)^½`.
    pub fn phase_norm(&self, basis: &SpectralBasis) -> f64 {
        (basis.grad_norm_sq(&self.a) + dot(&self.b, &self.b)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSpec {
    pub k: f64,
    pub p: f64,
    #[serde(default)]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub h: FieldSpec,
    #[serde(default)]
    pub nonlinearity: NonlinearitySpec,
}

#[derive(Debug, Clone)]
pub struct PhysicsConfig {
    /// Damping gain. `k = 0` is accepted as the conservative control case.
    pub k: f64,
    /// Damping exponent, `p > 0`.
    pub p: f64,
    pub kernel: Kernel,
    /// Modal coefficients of the forcing.
    pub h: Vec<f64>,
    pub source: SourceTerm,
}

impl PhysicsConfig {
    pub fn new(k: f64, p: f64, kernel: Kernel, h: Vec<f64>, source: SourceTerm) -> Result<Self> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::config(format!("physics.k must be finite and nonnegative, got {k}")));
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::config(format!("physics.p must be positive, got {p}")));
        }
        check_len("forcing", kernel.dim(), h.len())?;
        Ok(PhysicsConfig {
            k,
            p,
            kernel,
            h,
            source,
        })
    }

    /// No damping, kernel, source or forcing.
    pub fn free(n: usize) -> Self {
        PhysicsConfig::new(0.0, 1.0, Kernel::zero(n), vec![0.0; n], SourceTerm::zero()).unwrap()
    }

    pub fn from_spec(
        spec: &PhysicsSpec,
        basis: &SpectralBasis,
        strategies: &Strategies,
        base_dir: &Path,
        seed: u64,
    ) -> Result<Self> {
        let kernel = (strategies.kernels.get(&spec.kernel.kind)?)(
            &spec.kernel,
            &kernel::KernelContext { basis, base_dir },
        )?;
        let h = spec.h.build(
            &strategies.fields,
            &FieldContext {
                basis,
                seed: seed ^ 0x6a09_e667,
            },
        )?;
        let source = SourceTerm::from_spec(&spec.nonlinearity, &strategies.nonlinearities)?;
        PhysicsConfig::new(spec.k, spec.p, kernel, h, source)
    }

    pub fn check(&self, basis: &SpectralBasis) -> Result<()> {
        check_len("physics kernel", basis.mode_count(), self.kernel.dim())
    }

    /// `k‖b‖^p`, the scalar damping coefficient.
    pub fn damping_coefficient(&self, b_norm: f64) -> f64 {
        if b_norm == 0.0 {
            0.0
        } else {
            self.k * b_norm.powf(self.p)
        }
    }
}

/// `k‖b‖^p b`.
pub fn damping(config: &PhysicsConfig, basis: &SpectralBasis, b: &[f64]) -> Result<Vec<f64>> {
    let c = config.damping_coefficient(basis.l2_norm(b)?);
    Ok(b.iter().map(|v| c * v).collect())
}

/// `Ψ(b)` in modal form.
pub fn antidamping(config: &PhysicsConfig, basis: &SpectralBasis, b: &[f64]) -> Result<Vec<f64>> {
    check_len("velocity", basis.mode_count(), b.len())?;
    config.kernel.apply(b)
}

/// Modal coefficients of `f(u)`, evaluated pointwise on the dealiased grid.
pub fn nonlinearity_apply(config: &PhysicsConfig, basis: &SpectralBasis, a: &[f64]) -> Result<Vec<f64>> {
    check_len("position", basis.mode_count(), a.len())?;
    let mut out = vec![0.0; a.len()];
    let mut grid = vec![0.0; basis.grid_len()];
    source_modal_into(config, basis, a, &mut grid, &mut out);
    Ok(out)
}

pub(crate) fn source_modal_into(
    config: &PhysicsConfig,
    basis: &SpectralBasis,
    a: &[f64],
    grid: &mut [f64],
    out: &mut [f64],
) {
    let law = &config.source.law;
    if law.is_zero() {
        out.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    basis.synthesize(a, grid);
    grid.iter_mut().for_each(|u| *u = law.value(*u));
    basis.analyze(grid, out);
}

/// `∫_Ω F(u) dx` by grid quadrature.
pub fn potential_integral(config: &PhysicsConfig, basis: &SpectralBasis, a: &[f64]) -> Result<f64> {
    let law = &config.source.law;
    if law.is_zero() {
        check_len("position", basis.mode_count(), a.len())?;
        return Ok(0.0);
    }
    let grid = basis.to_physical(a)?;
    Ok(basis.cell_volume() * grid.iter().map(|u| law.primitive(*u)).sum::<f64>())
}

/// `∫_Ω h u dx`.
pub fn forcing_integral(config: &PhysicsConfig, basis: &SpectralBasis, a: &[f64]) -> Result<f64> {
    basis.inner(&config.h, a)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// Smallest `M` with `|f′(s)| ≤ M(|s|^{2/(N−2)} + 1)` on the samples.
    pub growth_constant: f64,
    pub growth_exponent: f64,
    /// `min f′` over the outer half `S/2 ≤ |s| ≤ S` of the sample range.
    pub mu_estimate: f64,
    pub lambda1: f64,
    /// `μ̂ > −λ₁`.
    pub dissipative: bool,
    /// `k > 0` and `p > 0`.
    pub parameters_positive: bool,
    pub warnings: Vec<String>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.dissipative && self.parameters_positive
    }
}

/// Samples the structural hypotheses on `f`, `k`, `p` over `[−S, S]`.
/// Violations are reported, never raised.
pub fn validate_assumptions(
    config: &PhysicsConfig,
    basis: &SpectralBasis,
    sample_range: f64,
    sample_count: usize,
) -> Result<AssumptionReport> {
    if !(sample_range.is_finite() && sample_range > 0.0) {
        return Err(Error::Input(format!("sample range must be positive, got {sample_range}")));
    }
    if sample_count < 2 {
        return Err(Error::Input("need at least two samples".into()));
    }
    let law = &config.source.law;
    let exponent = config.source.growth_exponent();
    let lambda1 = basis.lambda1();
    let mut growth: f64 = 0.0;
    let mut mu = f64::INFINITY;
    for i in 0..sample_count {
        let s = -sample_range + 2.0 * sample_range * i as f64 / (sample_count - 1) as f64;
        let d = law.derivative(s);
        growth = growth.max(d.abs() / (s.abs().powf(exponent) + 1.0));
        if s.abs() >= 0.5 * sample_range {
            mu = mu.min(d);
        }
    }

    let mut warnings = Vec::new();
    let parameters_positive = config.k > 0.0 && config.p > 0.0;
    if !parameters_positive {
        warnings.push(format!("damping parameters must be positive (k = {}, p = {})", config.k, config.p));
    }
    let dissipative = mu > -lambda1;
    if !dissipative {
        warnings.push(format!(
            "estimated liminf f' = {mu} does not exceed -lambda1 = {}",
            -lambda1
        ));
    }
    if let Some(claimed) = config.source.claimed_margin {
        if claimed > mu + 1e-9 * (1.0 + mu.abs()) {
            warnings.push(format!("claimed mu = {claimed} exceeds sampled estimate {mu}"));
        }
    }
    if !growth.is_finite() {
        warnings.push("f' is not finite on the sample range".into());
    }
    Ok(AssumptionReport {
        growth_constant: growth,
        growth_exponent: exponent,
        mu_estimate: mu,
        lambda1,
        dissipative,
        parameters_positive,
        warnings,
    })
}

/// Largest observed ratio
/// `‖f(u₁)−f(u₂)‖ / ((‖∇u₁‖^γ + ‖∇u₂‖^γ + 1)·‖∇(u₁−u₂)‖)`, `γ = 2/(N−2)`,
/// over `pairs` random pairs with `‖∇u_i‖ ≤ radius`.
pub fn lipschitz_audit(
    config: &PhysicsConfig,
    basis: &SpectralBasis,
    radius: f64,
    pairs: usize,
    seed: u64,
) -> Result<f64> {
    let n = basis.mode_count();
    let gamma = config.source.growth_exponent();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut a: Vec<f64> = (0..n)
            .map(|j| rng.gen_range(-1.0..1.0) / (j + 1) as f64)
            .collect();
        let g = basis.grad_norm_sq(&a).sqrt();
        let target = radius * rng.gen_range(0.0..1.0_f64);
        if g > 0.0 {
            a.iter_mut().for_each(|v| *v *= target / g);
        }
        a
    };
    let mut worst: f64 = 0.0;
    for i in 0..pairs {
        let u1 = draw(&mut rng);
        // every other pair is a near-diagonal perturbation probing the local constant
        let u2 = if i % 2 == 0 {
            draw(&mut rng)
        } else {
            let eps = 10f64.powf(rng.gen_range(-6.0..-1.0));
            let d = draw(&mut rng);
            u1.iter().zip(&d).map(|(x, y)| x + eps * y).collect()
        };
        let diff: Vec<f64> = u1.iter().zip(&u2).map(|(x, y)| x - y).collect();
        let dg = basis.grad_norm_sq(&diff).sqrt();
        if dg == 0.0 {
            continue;
        }
        let f1 = nonlinearity_apply(config, basis, &u1)?;
        let f2 = nonlinearity_apply(config, basis, &u2)?;
        let df: Vec<f64> = f1.iter().zip(&f2).map(|(x, y)| x - y).collect();
        let denom = (basis.grad_norm_sq(&u1).sqrt().powf(gamma) + basis.grad_norm_sq(&u2).sqrt().powf(gamma) + 1.0) * dg;
        worst = worst.max(norm(&df) / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use approx::assert_relative_eq;

    use super::*;

    fn sine_basis(m: usize) -> SpectralBasis {
        SpectralBasis::new(1, m, &[PI]).unwrap()
    }

    fn with_source(n: usize, k: f64, p: f64, source: SourceTerm) -> PhysicsConfig {
        PhysicsConfig::new(k, p, Kernel::zero(n), vec![0.0; n], source).unwrap()
    }

    /// Coefficient of `sin(mx)` on (0,π).
    fn sin_coeff() -> f64 {
        (PI / 2.0).sqrt()
    }

    #[test]
    fn parameter_validation() {
        let n = 3;
        assert!(PhysicsConfig::new(1.0, 0.0, Kernel::zero(n), vec![0.0; n], SourceTerm::zero()).is_err());
        assert!(PhysicsConfig::new(-1.0, 2.0, Kernel::zero(n), vec![0.0; n], SourceTerm::zero()).is_err());
        assert!(PhysicsConfig::new(1.0, 2.0, Kernel::zero(n), vec![0.0; 2], SourceTerm::zero()).is_err());
    }

    #[test]
    fn damping_examples() {
        let basis = sine_basis(4);
        let cfg = with_source(4, 1.0, 2.0, SourceTerm::zero());
        assert_eq!(damping(&cfg, &basis, &[0.0; 4]).unwrap(), vec![0.0; 4]);

        let unit = [0.6, 0.0, 0.8, 0.0];
        let out = damping(&cfg, &basis, &unit).unwrap();
        for (a, b) in out.iter().zip(&unit) {
            assert_relative_eq!(*a, *b, epsilon = 1e-15);
        }

        // b = 2·mode 1: ‖b‖ = 2, k‖b‖^p = 4
        let out = damping(&cfg, &basis, &[2.0, 0.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(out[0], 8.0, epsilon = 1e-14);
    }

    #[test]
    fn damping_is_radial_and_monotone() {
        let basis = sine_basis(6);
        let cfg = with_source(6, 1.7, 1.3, SourceTerm::zero());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10_000 {
            let b1: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let b2: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let d1 = damping(&cfg, &basis, &b1).unwrap();
            let d2 = damping(&cfg, &basis, &b2).unwrap();
            let cos = dot(&d1, &b1) / (norm(&d1) * norm(&b1));
            assert!((cos - 1.0).abs() < 1e-14);
            let diff_d: Vec<f64> = d1.iter().zip(&d2).map(|(x, y)| x - y).collect();
            let diff_b: Vec<f64> = b1.iter().zip(&b2).map(|(x, y)| x - y).collect();
            assert!(dot(&diff_d, &diff_b) >= -1e-12);
        }
    }

    #[test]
    fn cubic_of_sine_projects_onto_first_and_third_mode() {
        // sin³x = (3 sin x − sin 3x)/4
        let basis = sine_basis(5);
        let cfg = with_source(5, 1.0, 2.0, SourceTerm::odd_polynomial(&[0.0, 1.0]));
        let mut a = vec![0.0; 5];
        a[0] = sin_coeff();
        let f = nonlinearity_apply(&cfg, &basis, &a).unwrap();
        let want = [0.75 * sin_coeff(), 0.0, -0.25 * sin_coeff(), 0.0, 0.0];
        for (x, y) in f.iter().zip(want) {
            assert_relative_eq!(*x, y, epsilon = 1e-13);
        }
    }

    #[test]
    fn linear_and_zero_laws() {
        let basis = sine_basis(7);
        let a: Vec<f64> = (0..7).map(|j| 1.0 / (j + 1) as f64).collect();
        let lin = with_source(7, 1.0, 2.0, SourceTerm::odd_polynomial(&[1.0]));
        let out = nonlinearity_apply(&lin, &basis, &a).unwrap();
        for (x, y) in out.iter().zip(&a) {
            assert_relative_eq!(*x, *y, epsilon = 1e-13);
        }
        let zero = with_source(7, 1.0, 2.0, SourceTerm::zero());
        assert_eq!(nonlinearity_apply(&zero, &basis, &a).unwrap(), vec![0.0; 7]);
        assert_eq!(potential_integral(&zero, &basis, &a).unwrap(), 0.0);
    }

    #[test]
    fn potential_examples() {
        let basis = sine_basis(4);
        let mut a = vec![0.0; 4];
        a[0] = sin_coeff();
        let lin = with_source(4, 1.0, 2.0, SourceTerm::odd_polynomial(&[1.0]));
        assert_relative_eq!(potential_integral(&lin, &basis, &a).unwrap(), PI / 4.0, epsilon = 1e-14);
        let cubic = with_source(4, 1.0, 2.0, SourceTerm::odd_polynomial(&[0.0, 1.0]));
        assert_relative_eq!(
            potential_integral(&cubic, &basis, &a).unwrap(),
            3.0 * PI / 32.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn potential_matches_independent_quadrature() {
        // Simpson's rule on a fine grid, independent of the sine grid
        let basis = sine_basis(6);
        let cubic = with_source(6, 1.0, 2.0, SourceTerm::odd_polynomial(&[0.3, 1.0]));
        let a = [0.4, -0.2, 0.1, 0.05, 0.0, -0.03];
        let u = |x: f64| -> f64 {
            a.iter()
                .enumerate()
                .map(|(j, c)| c * (2.0 / PI).sqrt() * ((j + 1) as f64 * x).sin())
                .sum()
        };
        let big_f = |s: f64| 0.15 * s * s + s.powi(4) / 4.0;
        let n = 20_000;
        let h = PI / n as f64;
        let simpson: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * big_f(u(i as f64 * h))
            })
            .sum::<f64>()
            * h
            / 3.0;
        assert_relative_eq!(potential_integral(&cubic, &basis, &a).unwrap(), simpson, max_relative = 1e-10);
    }

    #[test]
    fn assumption_report_examples() {
        let basis = sine_basis(4);
        let zero = with_source(4, 1.0, 2.0, SourceTerm::zero());
        let r = validate_assumptions(&zero, &basis, 10.0, 2001).unwrap();
        assert_eq!(r.growth_constant, 0.0);
        assert_eq!(r.mu_estimate, 0.0);
        assert!(r.passed());

        // |3s²| ≤ M(s² + 1): the sampled maximum approaches 3 from below
        let cubic = with_source(4, 1.0, 2.0, SourceTerm::odd_polynomial(&[0.0, 1.0]));
        let r = validate_assumptions(&cubic, &basis, 10.0, 2001).unwrap();
        assert!(r.growth_constant <= 3.0 && r.growth_constant > 2.95, "{}", r.growth_constant);
        assert!(r.mu_estimate >= 0.0);
        assert!(r.passed());

        let lambda1 = basis.lambda1();
        let anti = with_source(4, 1.0, 2.0, SourceTerm::odd_polynomial(&[-2.0 * lambda1]));
        let r = validate_assumptions(&anti, &basis, 10.0, 101).unwrap();
        assert_relative_eq!(r.mu_estimate, -2.0 * lambda1);
        assert!(!r.dissipative);
        assert!(!r.warnings.is_empty());

        let conservative = PhysicsConfig::free(4);
        assert!(!validate_assumptions(&conservative, &basis, 1.0, 3).unwrap().passed());
        assert!(validate_assumptions(&zero, &basis, 0.0, 3).is_err());
        assert!(validate_assumptions(&zero, &basis, 1.0, 1).is_err());
    }

    #[test]
    fn lipschitz_ratio_is_finite_and_stable() {
        let basis = sine_basis(16);
        let cubic = with_source(16, 1.0, 2.0, SourceTerm::odd_polynomial(&[0.0, 1.0]));
        let once = lipschitz_audit(&cubic, &basis, 3.0, 1000, 4).unwrap();
        let twice = lipschitz_audit(&cubic, &basis, 3.0, 2000, 4).unwrap();
        assert!(once.is_finite() && once > 0.0);
        assert!(twice >= once && twice <= 1.5 * once, "{once} vs {twice}");
    }

    #[test]
    fn state_shape_checks() {
        assert!(State::new(vec![0.0; 3], vec![0.0; 2], 0.0).is_err());
        assert!(State::new(vec![f64::NAN], vec![0.0], 0.0).is_err());
        let basis = sine_basis(3);
        assert!(State::zeros(4).check(&basis).is_err());
        let mut s = State::zeros(3);
        s.a[0] = 1.0;
        s.b[1] = 2.0;
        assert_relative_eq!(s.phase_norm(&basis), 5.0_f64.sqrt(), epsilon = 1e-14);
    }
}
