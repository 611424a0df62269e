use std::f64::consts::PI;

use gatebath::bath::{bcf, gamma_t, BathSpec};
use gatebath::dissipators::*;
use gatebath::operators::{coupling_operator, free_propagator, gate_unitary, ModelSpec, Op2, C64};
use gatebath::quad;
use proptest::prelude::*;

fn model(xi: f64) -> ModelSpec {
    ModelSpec::new(1.0, xi, 0.0).unwrap()
}

fn bath(s: f64, temp: f64) -> BathSpec {
    BathSpec::new(0.02, s, 1.0, temp).unwrap()
}

/// `int_0^{t+h} C(tau) U(t, t - tau) A U(t, t - tau)^dagger dtau` with
/// `U(t, u) = e^{-i H0 t} R_x(theta(t) - theta(u)) e^{i H0 u}`.
fn brute(m: &ModelSpec, b: &BathSpec, theta: &dyn Fn(f64) -> f64, t: f64, h: f64, breaks: &[f64]) -> Op2 {
    let a = coupling_operator(m);
    let integrand = |tau: f64| {
        let u = t - tau;
        let prop = free_propagator(m, t) * gate_unitary(theta(t) - theta(u)) * free_propagator(m, -u);
        prop.conjugate(&a).scale(bcf(b, tau).unwrap())
    };
    let mut pts = vec![0.0];
    for &x in breaks {
        let tau = t - x;
        if tau > 0.0 && tau < t + h {
            pts.push(tau);
        }
    }
    pts.push(t + h);
    pts.sort_by(f64::total_cmp);
    let mut out = Op2::zero();
    for w in pts.windows(2) {
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] += quad::integrate(|tau| integrand(tau).0[i][j], w[0], w[1], 1e-14, 1e-12).unwrap();
            }
        }
    }
    out
}

fn static_at(m: &ModelSpec, b: &BathSpec, t: f64) -> Op2 {
    lambda_static(m, b, t).unwrap()
}

fn nonet(m: &ModelSpec, b: &BathSpec, wp: f64, t: f64) -> Nonet {
    let f = nonet_frequencies(m, wp);
    let mut g = [[C64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = gamma_t(b, f[i][j], t).unwrap().complex();
        }
    }
    g
}

fn close(x: &Op2, y: &Op2, tol: f64) -> bool {
    (*x - *y).max_abs() <= tol
}

#[test]
fn static_matches_quadrature() {
    for &(xi, s, temp) in &[(0.0, 1.0, 0.0), (1.3, 0.5, 0.0), (2.0, 1.0, 0.3)] {
        let (m, b) = (model(xi), bath(s, temp));
        for &t in &[0.5, 3.0, 20.0] {
            let l = static_at(&m, &b, t);
            let o = brute(&m, &b, &|_| 0.0, t, 0.0, &[]);
            assert!(close(&l, &o, 1e-8), "xi={xi} s={s} T={temp} t={t}: {l:?} vs {o:?}");
        }
    }
    assert!(static_at(&model(1.0), &bath(1.0, 0.0), 0.0).max_abs() == 0.0);
}

#[test]
fn static_approaches_markov() {
    let b = bath(1.0, 0.0);
    let m = model(0.0);
    let d = static_at(&m, &b, 1e3) - lambda_markov(&m, &b).unwrap();
    assert!(d.max_abs() < 1e-6, "{}", d.max_abs());
    // the zero-frequency part approaches its limit only as 2 lambda^2 / t
    let m = model(1.0);
    let d = static_at(&m, &b, 1e3) - lambda_markov(&m, &b).unwrap();
    assert!(d.max_abs() < 1.01 * 0.5 * 2.0 * 0.02 / 1e3, "{}", d.max_abs());
    let zero = BathSpec::new(0.0, 1.0, 1.0, 0.0).unwrap();
    assert_eq!(lambda_markov(&m, &zero).unwrap().max_abs(), 0.0);
}

#[test]
fn instant_dp_matches_quadrature_with_finite_horizon() {
    let h = 25.0;
    let theta = PI / 2.0;
    for &(xi, s) in &[(1.0, 1.0), (2.5, 0.5)] {
        let (m, b) = (model(xi), bath(s, 0.0));
        for &t in &[0.0, 0.7, 6.0] {
            let lsm = static_at(&m, &b, t + h);
            let l = instant_dp_from(&m, theta, t, &lsm, &static_at(&m, &b, t));
            let o = brute(&m, &b, &|u| if u >= 0.0 { theta } else { 0.0 }, t, h, &[0.0]);
            assert!(close(&l, &o, 1e-8), "xi={xi} t={t}");
        }
    }
}

#[test]
fn in_gate_matches_quadrature_with_finite_horizon() {
    let h = 25.0;
    for &(xi, s, wp) in &[(1.3, 1.0, 0.37), (4.0, 0.5, 2.2), (0.0, 1.0, 1.0)] {
        let (m, b) = (model(xi), bath(s, 0.0));
        let a = coupling_operator(&m);
        for &t in &[0.3, 2.0, 9.0] {
            let lsm = static_at(&m, &b, t + h);
            let l = in_gate_from(&m, &a, wp, t, &nonet(&m, &b, wp, t), &lsm);
            let o = brute(&m, &b, &|u| wp * u.max(0.0), t, h, &[0.0]);
            assert!(close(&l, &o, 1e-8), "xi={xi} wp={wp} t={t}: {l:?} vs {o:?}");
        }
    }
}

#[test]
fn post_gate_matches_quadrature_with_finite_horizon() {
    let h = 25.0;
    for &(xi, s, theta, tp) in &[(1.3, 1.0, PI / 2.0, 2.0), (4.0, 0.5, PI, 5.0), (2.0, 1.0, 2.0 * PI, 0.4)] {
        let (m, b) = (model(xi), bath(s, 0.0));
        let a = coupling_operator(&m);
        let p = PulseSpec::square(theta, tp);
        let wp = p.omega_p();
        for &t in &[tp, tp + 0.8, tp + 7.0] {
            let lsm = static_at(&m, &b, t + h);
            let l = post_gate_from(&m, &a, &p, t, &nonet(&m, &b, wp, t), &nonet(&m, &b, wp, t - tp), &lsm);
            let o = brute(&m, &b, &|u| (wp * u).clamp(0.0, theta), t, h, &[0.0, tp]);
            assert!(close(&l, &o, 1e-8), "theta={theta} tp={tp} t={t}");
        }
    }
}

#[test]
fn instant_dp_limits() {
    let (m, b) = (model(4.0), bath(1.0, 0.0));
    let p = PulseSpec::instantaneous(PI / 2.0);
    let lsm = lambda_markov(&m, &b).unwrap();
    let uc = gate_unitary(PI / 2.0);
    assert!(close(&lambda_instant_dp(&m, &b, &p, 0.0).unwrap(), &uc.conjugate(&lsm), 1e-15));
    let id = PulseSpec::instantaneous(0.0);
    for &t in &[0.0, 1.0, 10.0] {
        assert!(close(&lambda_instant_dp(&m, &b, &id, t).unwrap(), &lsm, 1e-15));
    }
    let m0 = model(0.0);
    let lsm0 = lambda_markov(&m0, &b).unwrap();
    assert!(close(&lambda_instant_dp(&m0, &b, &p, 2e3).unwrap(), &lsm0, 1e-6));
}

#[test]
fn in_gate_starts_from_markov() {
    let (m, b) = (model(2.0), bath(1.0, 0.0));
    let p = PulseSpec::square(PI / 2.0, 10.0);
    let l = lambda_in_gate(&m, &b, &p, 0.0).unwrap();
    assert!(close(&l, &lambda_markov(&m, &b).unwrap(), 1e-15));
}

#[test]
fn fast_pulse_reproduces_instantaneous_gate() {
    let (m, b) = (model(4.0), bath(1.0, 0.0));
    let theta = PI / 2.0;
    let p = PulseSpec::square(theta, theta / 1e4);
    let inst = PulseSpec::instantaneous(theta);
    let mut worst: f64 = 0.0;
    for k in 0..=50 {
        let t = k as f64;
        let fast = lambda_post_gate(&m, &b, &p, p.tau_p2 + t).unwrap();
        let ideal = lambda_instant_dp(&m, &b, &inst, t).unwrap();
        worst = worst.max((fast - ideal).max_abs());
    }
    assert!(worst < 1e-3, "{worst}");
}

#[test]
fn continuity_at_pulse_end() {
    for &(theta, tp) in &[(PI / 2.0, 1.0), (PI, 30.0), (2.0 * PI, 200.0)] {
        let (m, b) = (model(4.0), bath(1.0, 0.0));
        let p = PulseSpec::square(theta, tp);
        let inside = lambda_in_gate(&m, &b, &p, tp).unwrap();
        let after = lambda_post_gate(&m, &b, &p, tp).unwrap();
        assert!(close(&inside, &after, 1e-8), "theta={theta} tp={tp}");
    }
}

#[test]
fn post_pulse_term_vanishes() {
    let (m, b) = (model(4.0), bath(1.0, 0.0));
    let p = PulseSpec::square(PI / 2.0, 1.0);
    let late = lambda_post_pulse(&m, &b, &p, 1.0 + 1e3).unwrap();
    assert!(late.max_abs() < 1e-6, "{}", late.max_abs());
    let inst = PulseSpec::instantaneous(PI / 2.0);
    assert_eq!(lambda_post_pulse(&m, &b, &inst, 3.0).unwrap().max_abs(), 0.0);
}

#[test]
fn phase_restrictions() {
    let m = ModelSpec::new(1.0, 1.0, 0.3).unwrap();
    let b = bath(1.0, 0.0);
    let p = PulseSpec::square(PI / 2.0, 1.0);
    assert!(matches!(lambda_in_gate(&m, &b, &p, 0.5), Err(gatebath::Error::Unsupported(_))));
    assert!(lambda_in_gate(&model(1.0), &b, &p, 1.5).is_err());
}

#[test]
fn sub_ohmic_thermal_markov_limit_is_rejected() {
    let (m, b) = (model(1.0), bath(0.5, 0.2));
    assert!(lambda_markov(&m, &b).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pulse_part_is_continuous_and_decays(theta in 0.1f64..7.0, tp in 0.2f64..50.0, xi in 0.0f64..4.0) {
        let (m, b) = (model(xi), bath(1.0, 0.0));
        let p = PulseSpec::square(theta, tp);
        let inside = lambda_in_gate(&m, &b, &p, tp).unwrap();
        let after = lambda_post_gate(&m, &b, &p, tp).unwrap();
        prop_assert!(close(&inside, &after, 1e-8));
    }
}
