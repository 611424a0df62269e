use std::f64::consts::PI;

use gatebath::bath::{gamma_t, spectral_asymptotic, BathSpec};
use gatebath::dissipators::*;
use gatebath::generators::*;
use gatebath::operators::{c, coupling_operator, free_generator, Generator4, ModelSpec, Op2, C64};
use proptest::prelude::*;

fn diff(a: &Generator4, b: &Generator4) -> f64 {
    (*a - *b).max_abs()
}

fn triplet(v: [f64; 6]) -> Triplet {
    [c(v[0], v[1]), c(v[2], v[3]), c(v[4], v[5])]
}

#[test]
fn zero_dissipator_gives_zero_generator() {
    let a = coupling_operator(&ModelSpec::new(1.0, 2.0, 0.0).unwrap());
    assert_eq!(dissipative_generator(&Op2::zero(), &a).unwrap(), Generator4::zero());
}

#[test]
fn markov_closed_form_matches_generic() {
    for &xi in &[0.0, 1.0, 4.0] {
        let m = ModelSpec::new(1.0, xi, 0.0).unwrap();
        for &temp in &[0.0, 0.3] {
            let b = BathSpec::new(0.02, 1.0, 1.0, temp).unwrap();
            let g = markov_generator(&m, &b).unwrap();
            let cf = markov_generator_closed_form(&m, &b).unwrap();
            assert!(diff(&g, &cf) < 1e-12);
        }
    }
}

#[test]
fn markov_zero_temperature_pattern() {
    // J_{-Delta} = J_0 = 0 at zero temperature
    let m = ModelSpec::new(1.0, 2.0, 0.0).unwrap();
    let b = BathSpec::new(0.02, 1.0, 1.0, 0.0).unwrap();
    let g = markov_generator(&m, &b).unwrap().0;
    let jd = spectral_asymptotic(&b, 1.0).unwrap().j;
    let expect = [[-jd * 2.0, 0.0, 0.0, jd * 2.0], [0.0, 0.0, -jd, 0.0], [jd, 0.0, 0.0, -jd]];
    for (row, e) in [1, 3].iter().zip([0, 2]) {
        for j in [0, 3] {
            assert!((g[*row][j] - 0.5 * expect[e][j]).abs() < 1e-12);
        }
    }
    assert!((g[2][2] + 0.5 * jd).abs() < 1e-12);
    assert_eq!(g[1][1], 0.0);
}

#[test]
fn free_generator_has_delta_block() {
    let g = free_generator(&ModelSpec::new(1.7, 0.0, 0.0).unwrap()).0;
    assert_eq!(g[1][2], 1.7);
    assert_eq!(g[2][1], -1.7);
}

#[test]
fn markov_rates_and_frequency() {
    let b = BathSpec::new(0.002, 1.0, 1.0, 0.0).unwrap();
    let jd = spectral_asymptotic(&b, 1.0).unwrap().j;
    let sd = spectral_asymptotic(&b, 1.0).unwrap().s;
    let smd = spectral_asymptotic(&b, -1.0).unwrap().s;
    let mut t2 = Vec::new();
    for &xi in &[0.0, 1.0, 4.0] {
        let m = ModelSpec::new(1.0, xi, 0.0).unwrap();
        let r = markov_rates(&m, &b).unwrap();
        assert!((r.t1_inv - jd / 2.0).abs() < 1e-14);
        assert!((r.t2_inv - jd / 4.0).abs() < 1e-14);
        assert!((r.omega - coherence_frequency(1.0, jd, sd, smd)).abs() < 1e-8);
        t2.push(1.0 / r.t2_inv);
    }
    assert!((t2[0] - 865.0).abs() / 865.0 < 0.01);
    assert!(t2.iter().all(|x| (x - t2[0]).abs() < 1e-9));
}

#[test]
fn static_closed_form_on_time_grid() {
    let m = ModelSpec::new(1.0, 2.5, 0.0).unwrap();
    let b = BathSpec::new(0.02, 0.7, 1.0, 0.1).unwrap();
    let a = coupling_operator(&m);
    for k in 0..20 {
        let t = 0.37 * k as f64 + 0.05 * (k * k) as f64;
        let g = lambda_static(&m, &b, t).unwrap();
        let f = triplet_frequencies(&m);
        let tr = [0, 1, 2].map(|i| gamma_t(&b, f[i], t).unwrap().complex());
        let cf = static_generator_closed_form(m.xi, &tr);
        assert!(diff(&dissipative_generator(&g, &a).unwrap(), &cf) < 1e-12);
    }
}

#[test]
fn pure_dephasing_is_leading_order() {
    let m = ModelSpec::new(1.0, 1.0, 0.0).unwrap();
    let g = static_generator_closed_form(m.xi, &triplet([0.0, 0.0, 0.3, 0.0, 0.0, 0.0]));
    let pd = pure_dephasing_generator(1.0, 0.3);
    assert!((g.0[1][1] - pd.0[1][1]).abs() < 1e-15 && (g.0[2][2] - pd.0[2][2]).abs() < 1e-15);
}

#[test]
fn decomposition_sum_matches_direct_construction() {
    let m = ModelSpec::new(1.0, 4.0, 0.0).unwrap();
    let b = BathSpec::new(0.02, 1.0, 1.0, 0.0).unwrap();
    let p = PulseSpec::instantaneous(PI / 2.0);
    let a = coupling_operator(&m);
    for &t in &[0.0, 1.0, 10.0, 100.0] {
        let parts = dp_generator_decomposition(&m, &b, &p, t).unwrap();
        let direct = dissipative_generator(&lambda_instant_dp(&m, &b, &p, t).unwrap(), &a).unwrap();
        assert!(diff(&parts.sum(), &direct) < 1e-8, "t={t}");
    }
    let zero = BathSpec::new(0.0, 1.0, 1.0, 0.0).unwrap();
    let parts = dp_generator_decomposition(&m, &zero, &p, 3.0).unwrap();
    assert!(parts.parts().iter().all(|g| g.max_abs() == 0.0));
    assert!(dp_generator_decomposition(&m, &b, &PulseSpec::instantaneous(PI), 1.0).is_err());
}

#[test]
fn trig_factors_at_origin() {
    assert_eq!(trig_factors(0.0), (0.5, 0.0, 1.0, 0.0));
}

#[test]
fn coarse_grained_closed_form_matches_phase_average() {
    let m = ModelSpec::new(1.0, 1.7, 0.0).unwrap();
    let b = BathSpec::new(0.02, 1.0, 1.0, 0.0).unwrap();
    let p = PulseSpec::instantaneous(PI / 2.0);
    for &t in &[0.5, 5.0, 60.0] {
        let cg = coarse_grained_generators(&m, &b, &p, t).unwrap();
        let f = triplet_frequencies(&m);
        let st = [0, 1, 2].map(|i| gamma_t(&b, f[i], t).unwrap().complex());
        let sm = markov_triplet(&m, &b).unwrap();
        let cf = coarse_grained_closed_form(m.xi, &st, &sm);
        assert!(diff(&cg.pre, &cf.pre) < 1e-12, "pre t={t}");
        assert!(diff(&cg.post, &cf.post) < 1e-12, "post t={t}");
    }
}

#[test]
fn coarse_grained_table_entries() {
    // D_34 of the pre-gate generator is -xi^2 dJ_0 with and without coarse graining
    let xi = 2.0;
    let st = triplet([0.01, 0.02, 0.03, -0.04, 0.05, 0.06]);
    let sm = triplet([0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let cf = coarse_grained_closed_form(xi, &st, &sm);
    assert!((cf.pre.0[2][3] - xi * xi * 0.03).abs() < 1e-15);
    let same = coarse_grained_closed_form(xi, &sm, &sm);
    assert_eq!(same.pre.max_abs(), 0.0);
}

fn finite(v: f64) -> bool {
    v.is_finite()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generic_construction_has_zero_first_row(
        re in proptest::array::uniform4(-1.0f64..1.0), im in proptest::array::uniform4(-1.0f64..1.0),
        xi in -3.0f64..3.0, phi in 0.0f64..6.3,
    ) {
        let lam = Op2::new(c(re[0], im[0]), c(re[1], im[1]), c(re[2], im[2]), c(re[3], im[3]));
        let a = coupling_operator(&ModelSpec::new(1.0, xi, phi).unwrap());
        let g = dissipative_generator(&lam, &a).unwrap();
        prop_assert!(g.0[0].iter().all(|x| *x == 0.0));
        prop_assert!(g.0.iter().flatten().all(|x| finite(*x)));
    }

    #[test]
    fn decomposition_holds_for_random_spectra(
        v in proptest::array::uniform6(-1.0f64..1.0), w in proptest::array::uniform6(-1.0f64..1.0),
        xi in -3.0f64..3.0, t in 0.0f64..50.0,
    ) {
        let m = ModelSpec::new(1.0, xi, 0.0).unwrap();
        let a = coupling_operator(&m);
        let (st, sm) = (triplet(v), triplet(w));
        let lam = instant_dp_from(&m, PI / 2.0, t, &static_from(&a, &sm), &static_from(&a, &st));
        let direct = dissipative_generator(&lam, &a).unwrap();
        let parts = dp_decomposition_from(xi, t, &st, &sm);
        prop_assert!(diff(&parts.sum(), &direct) < 1e-12);
        let cg = coarse_grained_from(&m, PI / 2.0, &st, &sm).unwrap();
        let cf = coarse_grained_closed_form(xi, &st, &sm);
        prop_assert!(diff(&cg.total(), &cf.total()) < 1e-12);
    }

    #[test]
    fn coherence_block_eigenvalues_match_closed_frequency(j in 0.0f64..0.3, sd in -0.2f64..0.2, smd in -0.2f64..0.2, xi in 0.0f64..4.0) {
        let tr: Triplet = [c(0.0, smd), C64::new(0.0, -0.1), c(j, sd)];
        let total = free_generator(&ModelSpec::new(1.0, xi, 0.0).unwrap()) + static_generator_closed_form(xi, &tr);
        let ev = coherence_eigenvalues(&total);
        prop_assert!((ev[0].im.abs() - coherence_frequency(1.0, j, sd, smd)).abs() < 1e-8);
        prop_assert!((ev[0].re + j / 4.0).abs() < 1e-12);
    }
}
