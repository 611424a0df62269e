use std::f64::consts::PI;

use gatebath::bath::BathSpec;
use gatebath::dissipators::{lambda_in_gate, PulseSpec};
use gatebath::operators::{coupling_operator, BlochState, ModelSpec, Op2};
use gatebath::pulseopt::{
    lambda_general_pulse, lambda_general_pulse_with, nelder_mead, optimize, GateWorkspace, OptOptions, PulseShape,
    COEFF_BOUND,
};
use gatebath::Exec;

const PRINTED: [f64; 7] = [-1.06, 0.44, -0.12, 0.11, -0.24, -0.30, 0.38];

fn model(xi: f64) -> ModelSpec {
    ModelSpec::new(1.0, xi, 0.0).unwrap()
}

fn workspace(lambda2: f64, s: f64, tp: f64) -> GateWorkspace {
    let m = model(0.0);
    let b = BathSpec::new(lambda2, s, 1.0, 0.0).unwrap();
    GateWorkspace::new(&m, &b, &Op2::sz(), tp, GateWorkspace::default_steps(&m, &b, tp), Exec::default()).unwrap()
}

#[test]
fn square_shape_reproduces_in_gate_dissipator() {
    for (xi, temp) in [(1.0, 0.0), (2.0, 0.2)] {
        let m = model(xi);
        let b = BathSpec::new(1.0, 1.0, 1.0, temp).unwrap();
        let p = PulseSpec::square(PI / 2.0, 20.0);
        for t in [0.0, 0.5, 5.0, 13.3, 20.0] {
            let shaped = lambda_general_pulse(&m, &b, &p, t).unwrap();
            let exact = lambda_in_gate(&m, &b, &p, t).unwrap();
            let err = (shaped - exact).max_abs();
            assert!(err < 1e-6, "xi={xi} T={temp} t={t}: {err:e}");
        }
    }
}

#[test]
fn zero_coupling_gives_zero_dissipator() {
    let m = model(1.0);
    let b = BathSpec::new(0.0, 0.5, 1.0, 0.0).unwrap();
    let mut p = PulseSpec::square(PI / 2.0, 50.0);
    p.fourier = Some(PRINTED.to_vec());
    for t in [0.0, 10.0, 50.0] {
        assert_eq!(lambda_general_pulse(&m, &b, &p, t).unwrap().max_abs(), 0.0);
    }
    assert_eq!(workspace(0.0, 0.5, 50.0).objective(&PulseShape::square(PI / 2.0, 50.0)).unwrap(), 0.0);
}

#[test]
fn shaped_pulse_matches_brute_force_quadrature() {
    // direct adaptive-free oracle: fine trapezoid of the defining integral
    let m = model(1.5);
    let b = BathSpec::new(1.0, 1.0, 1.0, 0.0).unwrap();
    let mut p = PulseSpec::square(PI, 10.0);
    p.fourier = Some(vec![0.3, -0.5, 0.2]);
    let shape = PulseShape::from_spec(&p).unwrap();
    let a = coupling_operator(&m);
    let t = 7.0;
    let n = 200_000;
    let h = t / n as f64;
    let us = |t: f64, tau: f64| {
        gatebath::operators::free_propagator(&m, t)
            * gatebath::operators::gate_unitary(shape.angle(t) - shape.angle(tau))
            * gatebath::operators::free_propagator(&m, -tau)
    };
    let mut integral = Op2::zero();
    for k in 0..=n {
        let tau = k as f64 * h;
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        let u = us(t, tau);
        let c = gatebath::bath::bcf(&b, t - tau).unwrap();
        integral += (u * a * u.dagger()).scale(c * (w * h));
    }
    let lsm = gatebath::dissipators::lambda_static(&m, &b, 1e9).unwrap();
    let lst = gatebath::dissipators::lambda_static(&m, &b, t).unwrap();
    let ur = gatebath::operators::free_propagator(&m, t)
        * gatebath::operators::gate_unitary(shape.angle(t))
        * gatebath::operators::free_propagator(&m, -t);
    let oracle = ur.conjugate(&(lsm - lst)) + integral;
    let got = lambda_general_pulse_with(&m, &b, &p, &a, t).unwrap();
    assert!((got - oracle).max_abs() < 1e-6, "{:e}", (got - oracle).max_abs());
}

#[test]
fn objective_scales_linearly_with_coupling() {
    let shape = PulseShape::square(PI / 2.0, 200.0).with_coeffs(&PRINTED);
    let lo = workspace(1e-5, 0.5, 200.0).objective(&shape).unwrap();
    let hi = workspace(1e-3, 0.5, 200.0).objective(&shape).unwrap();
    assert!(lo > 0.0);
    assert!((hi / lo - 100.0).abs() < 1e-9, "{}", hi / lo);
}

#[test]
fn printed_coefficients_beat_square_pulse_sub_ohmic() {
    let ws = workspace(1e-5, 0.5, 200.0);
    let square = PulseShape::square(PI / 2.0, 200.0);
    let base = ws.objective(&square).unwrap();
    let shaped = ws.objective(&square.with_coeffs(&PRINTED)).unwrap();
    assert!(base > 0.0);
    assert!(shaped < base, "shaped {shaped:e} vs square {base:e}");
}

#[test]
fn shaped_drive_keeps_net_angle() {
    let shape = PulseShape::square(PI / 2.0, 200.0).with_coeffs(&PRINTED);
    assert!((shape.angle(200.0) - PI / 2.0).abs() < 1e-12);
    let n = 20_000;
    let h = 200.0 / n as f64;
    let area: f64 = (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            w * h * shape.epsilon(k as f64 * h)
        })
        .sum();
    assert!((area - PI / 2.0).abs() < 1e-6);
}

#[test]
fn coupling_free_gate_is_the_ideal_rotation() {
    let ws = workspace(0.0, 1.0, 40.0);
    let shape = PulseShape::square(PI / 2.0, 40.0).with_coeffs(&[0.4, -0.2]);
    let end = ws.end_state(&shape, &BlochState::ground()).unwrap();
    assert!((end.n[0]).abs() < 1e-8 && (end.n[1] + 1.0).abs() < 1e-8 && end.n[2].abs() < 1e-8, "{:?}", end.n);
}

#[test]
fn linearized_update_is_first_order_exact() {
    let shape = PulseShape::square(PI / 2.0, 100.0).with_coeffs(&PRINTED);
    let ideal = [0.0, -1.0, 0.0];
    let mut ratios = Vec::new();
    for l2 in [1e-4, 2e-4] {
        let ws = workspace(l2, 0.5, 100.0);
        let full = ws.end_state(&shape, &BlochState::ground()).unwrap();
        let lin = ws.linearized_end_state(&shape, &BlochState::ground()).unwrap();
        let shift: f64 = (0..3).map(|i| (full.n[i] - ideal[i]).abs()).fold(0.0, f64::max);
        let miss: f64 = (0..3).map(|i| (full.n[i] - lin.n[i]).abs()).fold(0.0, f64::max);
        assert!(shift > 1e-4);
        assert!(miss < 0.05 * shift, "l2={l2}: miss {miss:e} vs shift {shift:e}");
        ratios.push(miss);
    }
    // the residual is second order in the coupling
    assert!((ratios[1] / ratios[0] - 4.0).abs() < 0.5, "{ratios:?}");
}

#[test]
fn nelder_mead_finds_box_constrained_minimum() {
    let opts = OptOptions { budget: 4000, ..OptOptions::default() };
    let target = [0.5, -1.2, 3.0];
    let f = |x: &[f64]| x.iter().zip(&target).map(|(a, b)| (a - b).powi(2) * 1e-5).sum::<f64>();
    let r = nelder_mead(f, &[0.0, 0.0, 0.0], &opts);
    assert!((r.a[0] - 0.5).abs() < 1e-3 && (r.a[1] + 1.2).abs() < 1e-3, "{:?}", r.a);
    assert!((r.a[2] - COEFF_BOUND).abs() < 1e-3);
    assert!(r.a.iter().all(|x| x.abs() <= COEFF_BOUND));
}

#[test]
fn optimum_is_a_fixed_point() {
    let opts = OptOptions { budget: 400, restarts: 1, ..OptOptions::default() };
    let f = |x: &[f64]| 1.0 + (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.7).powi(2);
    let r = nelder_mead(f, &[0.3, -0.7], &opts);
    assert!(r.converged);
    assert!((r.a[0] - 0.3).abs() < 1e-3 && (r.a[1] + 0.7).abs() < 1e-3);
}

#[test]
fn optimizer_reduces_objective_and_is_coupling_independent() {
    let tp = 60.0;
    let opts = OptOptions { budget: 300, restarts: 2, ..OptOptions::default() };
    let shape = PulseShape::square(PI / 2.0, tp);
    let init = [0.0; 3];
    let a = workspace(1e-5, 0.5, tp);
    let b = workspace(1e-3, 0.5, tp);
    let ra = optimize(&a, &shape, &init, &opts, Exec::Sequential).unwrap();
    let rb = optimize(&b, &shape, &init, &opts, Exec::Parallel).unwrap();
    assert!(ra.objective < a.objective(&shape).unwrap());
    assert!(ra.a.iter().all(|x| x.abs() <= COEFF_BOUND));
    for (x, y) in ra.a.iter().zip(&rb.a) {
        assert!((x - y).abs() < 1e-6, "{:?} vs {:?}", ra.a, rb.a);
    }
}
