use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::basis::dot;
use crate::experiments::random_state;
use crate::model::{Kernel, SeparableTerm, SourceTerm};

fn sine_basis(m: usize) -> SpectralBasis {
    SpectralBasis::new(1, m, &[PI]).unwrap()
}

fn nonlinear_config(basis: &SpectralBasis) -> PhysicsConfig {
    let n = basis.mode_count();
    let left = basis.sample(|x, _| x.sin());
    let right = basis.sample(|x, _| (2.0 * x).sin());
    let kernel = Kernel::separable(
        basis,
        &[SeparableTerm {
            weight: 0.3,
            left,
            right,
        }],
    )
    .unwrap();
    let mut h = vec![0.0; n];
    h[0] = 0.5;
    PhysicsConfig::new(1.0, 2.0, kernel, h, SourceTerm::odd_polynomial(&[0.0, 1.0])).unwrap()
}

#[test]
fn radial_solve_examples() {
    assert_eq!(radial_damping_solve(0.0, 3.0, 2.0, 1e-13, 200).unwrap(), 0.0);
    assert_eq!(radial_damping_solve(2.0, 1.0, 2.0, 1e-13, 200).unwrap(), 1.0);
    assert_eq!(radial_damping_solve(2.5, 0.0, 2.0, 1e-13, 200).unwrap(), 2.5);
    assert!(radial_damping_solve(-1.0, 1.0, 2.0, 1e-13, 200).is_err());
    assert!(radial_damping_solve(1.0, 1.0, 0.0, 1e-13, 200).is_err());
}

#[test]
fn radial_solve_matches_quadratic_formula() {
    // ρ + cρ² = r  ⇒  ρ = 2r / (1 + √(1 + 4cr))
    for i in 0..40 {
        for j in 0..25 {
            let c = 10f64.powf(-4.0 + 8.0 * i as f64 / 39.0);
            let r = 10f64.powf(-4.0 + 8.0 * j as f64 / 24.0);
            let closed = 2.0 * r / (1.0 + (1.0 + 4.0 * c * r).sqrt());
            let rho = radial_damping_solve(r, c, 1.0, 1e-13, 200).unwrap();
            assert!((rho - closed).abs() <= 1e-12 * closed.max(1.0), "c={c} r={r}: {rho} vs {closed}");
        }
    }
}

#[test]
fn radial_solve_reports_exhaustion() {
    let err = radial_damping_solve(1e6, 1e3, 3.0, 1e-13, 2).unwrap_err();
    assert!(matches!(err, Error::RootNotConverged { iterations: 2, .. }), "{err}");
}

#[test]
fn damping_substep_examples() {
    let basis = sine_basis(4);
    let cfg = PhysicsConfig::new(1.0, 2.0, Kernel::zero(4), vec![0.0; 4], SourceTerm::zero()).unwrap();
    let solver = RadialSolver::default();
    assert_eq!(damping_substep(&basis, &cfg, &[0.0; 4], 1.0, &solver).unwrap(), vec![0.0; 4]);
    let b = [0.3, -1.2, 0.0, 0.7];
    assert_eq!(damping_substep(&basis, &cfg, &b, 0.0, &solver).unwrap(), b.to_vec());

    // ‖b‖ = 2 with kτ = 1, p = 2 gives ρ = 1
    let b = [1.2, 0.0, -1.6, 0.0];
    let v = damping_substep(&basis, &cfg, &b, 1.0, &solver).unwrap();
    assert_relative_eq!(norm(&v), 1.0, epsilon = 1e-15);
    for (x, y) in v.iter().zip(&b) {
        assert_relative_eq!(*x, 0.5 * y, epsilon = 1e-15);
    }
    // v solves v + kτ‖v‖^p v = b
    let c = norm(&v).powi(2);
    for (x, y) in v.iter().zip(&b) {
        assert_relative_eq!(x + c * x, *y, epsilon = 1e-14);
    }
}

proptest! {
    #[test]
    fn damping_substep_contracts(
        b in prop::collection::vec(-50.0..50.0f64, 6),
        tau in 0.0..5.0f64,
        k in 0.0..3.0f64,
        p in 0.1..6.0f64,
    ) {
        let basis = sine_basis(6);
        let cfg = PhysicsConfig::new(k, p, Kernel::zero(6), vec![0.0; 6], SourceTerm::zero()).unwrap();
        let v = damping_substep(&basis, &cfg, &b, tau, &RadialSolver::default()).unwrap();
        prop_assert!(norm(&v) <= norm(&b) * (1.0 + 1e-15));
        // parallel to b
        prop_assert!((dot(&v, &b) - norm(&v) * norm(&b)).abs() <= 1e-12 * (1.0 + dot(&b, &b)));
    }

    #[test]
    fn radial_root_satisfies_equation(r in 0.0..1e4f64, c in 0.0..1e3f64, p in 0.05..8.0f64) {
        let rho = radial_damping_solve(r, c, p, 1e-13, 200).unwrap();
        prop_assert!((0.0..=r).contains(&rho));
        prop_assert!((rho * (1.0 + c * rho.powf(p)) - r).abs() <= 1e-13 * (1.0 + r));
    }
}

#[test]
fn zero_state_is_equilibrium() {
    let basis = sine_basis(8);
    let cfg = PhysicsConfig::new(1.0, 2.0, Kernel::zero(8), vec![0.0; 8], SourceTerm::odd_polynomial(&[0.0, 1.0])).unwrap();
    let s = step(&basis, &cfg, &State::zeros(8), &StepConfig::new(0.1)).unwrap();
    assert_eq!(s.a, vec![0.0; 8]);
    assert_eq!(s.b, vec![0.0; 8]);
    assert_relative_eq!(s.time, 0.1);
}

#[test]
fn single_mode_returns_after_one_period() {
    let basis = SpectralBasis::new(1, 4, &[2.0]).unwrap();
    let cfg = PhysicsConfig::free(4);
    let omega = basis.lambda1().sqrt();
    let n = 1000;
    let step_config = StepConfig::new(2.0 * PI / omega / n as f64);
    let s0 = State::new(vec![0.7, 0.0, 0.0, 0.0], vec![-0.2, 0.0, 0.0, 0.0], 0.0).unwrap();
    let traj = integrate(&basis, &cfg, &s0, 2.0 * PI / omega, &step_config, &Observers::none()).unwrap();
    assert_eq!(traj.steps, n);
    assert!((traj.final_state.a[0] - 0.7).abs() < 1e-10);
    assert!((traj.final_state.b[0] + 0.2).abs() < 1e-10);
}

#[test]
fn zero_duration_keeps_initial_state() {
    let basis = sine_basis(4);
    let s0 = random_state(&basis, 1, 1.0).unwrap();
    let obs = Observers::every_step(&basis).with_snapshots(1);
    let traj = integrate(&basis, &PhysicsConfig::free(4), &s0, 0.0, &StepConfig::new(0.1), &obs).unwrap();
    assert_eq!(traj.snapshots, vec![s0.clone()]);
    assert_eq!(traj.records.len(), 1);
    assert_eq!(traj.final_state, s0);
    assert_eq!(traj.records[0].resid, 0.0);
}

#[test]
fn integration_lands_exactly_on_final_time() {
    let basis = sine_basis(4);
    let s0 = random_state(&basis, 1, 1.0).unwrap();
    let obs = Observers::every_step(&basis);
    let traj = integrate(&basis, &PhysicsConfig::free(4), &s0, 1.05, &StepConfig::new(0.1), &obs).unwrap();
    assert_eq!(traj.steps, 11);
    assert_eq!(traj.final_state.time, 1.05);
    assert!(traj.records.windows(2).all(|w| w[1].t > w[0].t));
    assert_eq!(traj.records.last().unwrap().t, 1.05);
    assert_eq!(step_plan(1.0, 0.1), (10, 1.0 - 9.0 * 0.1));
}

#[test]
fn free_wave_conserves_energy() {
    let basis = sine_basis(16);
    let s0 = random_state(&basis, 4, 1.0).unwrap();
    let cfg = PhysicsConfig::free(16);
    let traj = integrate(&basis, &cfg, &s0, 10.0, &StepConfig::new(0.01), &Observers::none()).unwrap();
    let e0 = energy(&basis, &cfg, &s0).unwrap().total;
    let e1 = energy(&basis, &cfg, &traj.final_state).unwrap().total;
    assert!(((e1 - e0) / e0).abs() < 1e-12);
}

#[test]
fn damped_free_wave_loses_energy() {
    let basis = sine_basis(8);
    let cfg = PhysicsConfig::new(0.8, 1.5, Kernel::zero(8), vec![0.0; 8], SourceTerm::zero()).unwrap();
    let s0 = random_state(&basis, 2, 1.0).unwrap();
    let obs = Observers::every_step(&basis);
    let traj = integrate(&basis, &cfg, &s0, 5.0, &StepConfig::new(0.01), &obs).unwrap();
    let e = |i: usize| traj.records[i].energy.total;
    assert!(e(traj.records.len() - 1) < e(0));
    // energy never increases along the damped flow
    for w in traj.records.windows(2) {
        assert!(w[1].energy.total <= w[0].energy.total + 1e-12);
    }
}

#[test]
fn antidamped_energy_grows_at_most_linearly() {
    // fit C on [0, 20] from the upper envelope, then check it on [20, 40]
    let basis = sine_basis(12);
    let mut m = vec![0.0; 144];
    m[0] = 0.5;
    let kernel = Kernel::from_modal_matrix(12, m).unwrap();
    let cfg = PhysicsConfig::new(1.0, 2.0, kernel, vec![0.0; 12], SourceTerm::odd_polynomial(&[0.0, 1.0])).unwrap();
    let s0 = random_state(&basis, 8, 0.05).unwrap();
    let mut obs = Observers::every_step(&basis);
    obs.record_stride = 10;
    let traj = integrate(&basis, &cfg, &s0, 40.0, &StepConfig::new(0.01), &obs).unwrap();
    let e0 = traj.records[0].energy.total;
    let slope = traj
        .records
        .iter()
        .filter(|r| r.t > 0.0 && r.t <= 20.0)
        .map(|r| (r.energy.total - e0) / r.t)
        .fold(0.0, f64::max);
    assert!(slope > 0.0, "anti-damping should pump energy in at first");
    for r in traj.records.iter().filter(|r| r.t > 20.0) {
        assert!(r.energy.total <= e0 + slope * r.t, "t = {}: {} > {}", r.t, r.energy.total, e0 + slope * r.t);
    }
}

/// Max energy identity residual over `[0, t]`.
fn max_residual(scheme: &str, basis: &SpectralBasis, cfg: &PhysicsConfig, s0: &State, dt: f64, t: f64) -> f64 {
    let obs = Observers::every_step(basis);
    let traj = integrate(basis, cfg, s0, t, &StepConfig::new(dt).with_scheme(scheme), &obs).unwrap();
    traj.records.iter().map(|r| r.resid).fold(0.0, f64::max)
}

fn observed_order(scheme: &str) -> f64 {
    let basis = sine_basis(32);
    let cfg = nonlinear_config(&basis);
    let s0 = random_state(&basis, 3, 1.0).unwrap();
    let r1 = max_residual(scheme, &basis, &cfg, &s0, 1e-2, 1.0);
    let r3 = max_residual(scheme, &basis, &cfg, &s0, 2.5e-3, 1.0);
    (r1 / r3).log2() / 2.0
}

#[test]
fn strang_residual_is_second_order() {
    let order = observed_order("strang");
    assert!((1.7..=2.3).contains(&order), "order {order}");
}

#[test]
fn frozen_kick_variant_is_first_order() {
    let order = observed_order("strang_euler");
    assert!((0.7..=1.3).contains(&order), "order {order}");
}

#[test]
fn global_error_is_second_order() {
    let basis = sine_basis(16);
    let cfg = nonlinear_config(&basis);
    let s0 = random_state(&basis, 6, 1.0).unwrap();
    let run = |dt: f64| {
        integrate(&basis, &cfg, &s0, 1.0, &StepConfig::new(dt), &Observers::none())
            .unwrap()
            .final_state
    };
    let reference = run(1e-4);
    let err = |s: &State| {
        let d = State {
            a: s.a.iter().zip(&reference.a).map(|(x, y)| x - y).collect(),
            b: s.b.iter().zip(&reference.b).map(|(x, y)| x - y).collect(),
            time: 0.0,
        };
        d.phase_norm(&basis)
    };
    let e1 = err(&run(1e-2));
    let e2 = err(&run(5e-3));
    let order = (e1 / e2).log2();
    assert!((1.7..=2.3).contains(&order), "order {order}");
}

#[test]
fn steps_are_deterministic() {
    let basis = sine_basis(16);
    let cfg = nonlinear_config(&basis);
    let s0 = random_state(&basis, 9, 3.0).unwrap();
    let obs = Observers::every_step(&basis);
    let a = integrate(&basis, &cfg, &s0, 2.0, &StepConfig::new(0.01), &obs).unwrap();
    let b = integrate(&basis, &cfg, &s0, 2.0, &StepConfig::new(0.01), &obs).unwrap();
    assert_eq!(a.final_state, b.final_state);
    assert_eq!(a.records, b.records);
}

#[test]
fn unknown_scheme_is_a_config_error() {
    let basis = sine_basis(4);
    let err = step(&basis, &PhysicsConfig::free(4), &State::zeros(4), &StepConfig::new(0.1).with_scheme("rk4")).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert!(err.to_string().contains("strang"));
}

#[test]
fn blow_up_is_reported_with_partial_trajectory() {
    // anti-focusing source f(s) = −s³ drives the solution to infinity
    let basis = sine_basis(4);
    let cfg = PhysicsConfig::new(0.0, 1.0, Kernel::zero(4), vec![0.0; 4], SourceTerm::odd_polynomial(&[0.0, -1.0])).unwrap();
    let s0 = State::new(vec![3.0, 0.0, 0.0, 0.0], vec![3.0, 0.0, 0.0, 0.0], 0.0).unwrap();
    let traj = integrate(&basis, &cfg, &s0, 50.0, &StepConfig::new(0.01), &Observers::every_step(&basis)).unwrap();
    assert!(!traj.succeeded());
    assert!(traj.steps < 5000);
    assert!(!traj.records.is_empty());
}

#[test]
fn resolvent_zero_data() {
    let basis = sine_basis(8);
    let cfg = nonlinear_config(&basis);
    let p = ResolventProblem {
        f0: vec![0.0; 8],
        f1: vec![0.0; 8],
    };
    let s = resolvent_solve(&basis, &cfg, &p, 1e-10).unwrap();
    assert_eq!(s.u, vec![0.0; 8]);
    assert_eq!(s.v, vec![0.0; 8]);
    assert_eq!(s.sigma, 0.0);
}

#[test]
fn resolvent_without_damping_is_diagonal() {
    let basis = sine_basis(8);
    let cfg = PhysicsConfig::free(8);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f0: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let f1: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let s = resolvent_solve(&basis, &cfg, &ResolventProblem { f0: f0.clone(), f1: f1.clone() }, 1e-12).unwrap();
    for j in 0..8 {
        let lambda = basis.eigenvalues()[j];
        let v = (f1[j] - lambda * f0[j]) / (lambda + 1.0);
        assert_relative_eq!(s.v[j], v, epsilon = 1e-14, max_relative = 1e-13);
        assert_relative_eq!(s.u[j], v + f0[j], epsilon = 1e-14, max_relative = 1e-13);
    }
    assert!(s.within_tolerance());
}

#[test]
fn resolvent_brackets_agree() {
    let basis = sine_basis(32);
    for &p in &[0.5, 2.0, 5.0] {
        let cfg = PhysicsConfig::new(1.0, p, Kernel::zero(32), vec![0.0; 32], SourceTerm::zero()).unwrap();
        for seed in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
            let problem = ResolventProblem {
                f0: (0..32).map(|j| scale * rng.gen_range(-1.0..1.0) / (j + 1) as f64).collect(),
                f1: (0..32).map(|_| scale * rng.gen_range(-1.0..1.0)).collect(),
            };
            let a = resolvent_solve_from(&basis, &cfg, &problem, BracketStart::Analytic, 1e-10).unwrap();
            let b = resolvent_solve_from(&basis, &cfg, &problem, BracketStart::Expanding, 1e-10).unwrap();
            assert!(a.within_tolerance(), "p={p} residual {}", a.residual());
            assert!((a.sigma - b.sigma).abs() <= 1e-12 * a.sigma.max(1.0));
        }
    }
}

#[test]
fn resolvent_rejects_bad_input() {
    let basis = sine_basis(4);
    let cfg = PhysicsConfig::free(4);
    let p = ResolventProblem {
        f0: vec![0.0; 3],
        f1: vec![0.0; 4],
    };
    assert!(matches!(resolvent_solve(&basis, &cfg, &p, 1e-10), Err(Error::Shape { .. })));
    let p = ResolventProblem {
        f0: vec![0.0; 4],
        f1: vec![f64::NAN, 0.0, 0.0, 0.0],
    };
    assert!(resolvent_solve(&basis, &cfg, &p, 1e-10).is_err());
}

#[test]
fn accretivity_on_random_pairs() {
    let basis = sine_basis(16);
    for &p in &[0.5, 1.0, 2.0, 4.0] {
        let cfg = PhysicsConfig::new(1.3, p, Kernel::zero(16), vec![0.0; 16], SourceTerm::zero()).unwrap();
        for seed in 0..200u64 {
            let s1 = random_state(&basis, 2 * seed, 0.1 + seed as f64 * 0.05).unwrap();
            let s2 = random_state(&basis, 2 * seed + 1, 1.0).unwrap();
            let form = accretivity_form(&basis, &cfg, &s1, &s2).unwrap();
            let scale = (s1.phase_norm(&basis) + s2.phase_norm(&basis)).powf(p + 2.0);
            assert!(form >= -1e-12 * scale.max(1.0), "p={p}: {form}");
        }
    }
}

#[test]
fn kernel_step_warns_but_runs() {
    let basis = sine_basis(4);
    let kernel = Kernel::from_modal_matrix(4, (0..16).map(|i| if i % 5 == 0 { 20.0 } else { 0.0 }).collect()).unwrap();
    let cfg = PhysicsConfig::new(1.0, 2.0, kernel, vec![0.0; 4], SourceTerm::zero()).unwrap();
    let s0 = random_state(&basis, 1, 1e-3).unwrap();
    // dt·‖K‖ = 2, but the half-step midpoint iteration still contracts
    let traj = integrate(&basis, &cfg, &s0, 0.1, &StepConfig::new(0.05), &Observers::none()).unwrap();
    assert!(traj.succeeded());
}
