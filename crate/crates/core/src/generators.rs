//! Bloch-basis dissipative generators.
//!
//! `dissipative_generator` is the generic construction used everywhere in
//! production. The closed-form matrices in this module (static, Markov,
//! pure dephasing, the seven-term decomposition of the dynamically prepared
//! generator and the coarse-grained pair) are kept as independent
//! cross-checks of that construction. All closed forms assume `phi = 0`.

use std::f64::consts::PI;

use crate::bath::BathSpec;
use crate::dissipators::{markov_triplet, static_from, PulseSpec, Triplet};
use crate::error::{Error, Result};
use crate::operators::{
    bloch_basis_transform, coupling_operator, free_generator, free_propagator, gate_unitary, kron, ModelSpec, Generator4,
    Op2, Super4, C64,
};

/// `D = L* (x) A + A* (x) L - 1 (x) A L - A* L* (x) 1`, in the Bloch basis.
pub fn dissipative_generator(lambda: &Op2, a: &Op2) -> Result<Generator4> {
    if !a.is_hermitian(1e-12 * a.max_abs().max(1.0)) {
        return Err(Error::config("coupling operator must be Hermitian"));
    }
    if !lambda.is_finite() {
        return Err(Error::numerical("dissipator has non-finite entries"));
    }
    let id = Op2::identity();
    let terms: [Super4; 4] = [
        kron(&lambda.conj(), a),
        kron(&a.conj(), lambda),
        kron(&id, &(*a * *lambda)),
        kron(&(a.conj() * lambda.conj()), &id),
    ];
    let mut s = terms[0];
    for i in 0..4 {
        for j in 0..4 {
            s[i][j] += terms[1][i][j] - terms[2][i][j] - terms[3][i][j];
        }
    }
    bloch_basis_transform(&s)
}

/// Bloch-basis matrix of `exp(t D_free)`: rotation of `(nx, ny)` by the free precession.
pub fn free_rotation(m: &ModelSpec, t: f64) -> Generator4 {
    let (s, co) = (m.delta * t).sin_cos();
    Generator4([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, co, s, 0.0],
        [0.0, -s, co, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ])
}

/// Interaction-picture form `R(-t) D R(t)` of a Schrodinger-picture generator.
pub fn to_interaction_frame(g: &Generator4, m: &ModelSpec, t: f64) -> Generator4 {
    free_rotation(m, -t).matmul(g).matmul(&free_rotation(m, t))
}

fn g4(rows: [[f64; 4]; 3]) -> Generator4 {
    Generator4([[0.0; 4], rows[0], rows[1], rows[2]])
}

/// Static generator for spectral values `[Gamma_-Delta, Gamma_0, Gamma_Delta]`.
pub fn static_generator_closed_form(xi: f64, g: &Triplet) -> Generator4 {
    let (jm, j0, jp) = (g[0].re, g[1].re, g[2].re);
    let (sm, s0, sp) = (g[0].im, g[1].im, g[2].im);
    g4([
        [-(jp - jm) * xi, -2.0 * j0 * xi * xi, 0.0, (jp + jm) * xi],
        [(sp + sm - 2.0 * s0) * xi, sm - sp, -2.0 * j0 * xi * xi - jp - jm, (sm - sp) * xi],
        [jp - jm, 2.0 * j0 * xi, 0.0, -jp - jm],
    ])
    .scale(0.5)
}

/// Leading-order pure-dephasing generator `diag(0, -xi^2 J0, -xi^2 J0, 0)`.
pub fn pure_dephasing_generator(xi: f64, j0: f64) -> Generator4 {
    let d = -xi * xi * j0;
    g4([[0.0, d, 0.0, 0.0], [0.0, 0.0, d, 0.0], [0.0; 4]])
}

/// Markov generator from the asymptotic spectral values (closed form, `phi = 0`).
pub fn markov_generator_closed_form(m: &ModelSpec, b: &BathSpec) -> Result<Generator4> {
    Ok(static_generator_closed_form(m.xi, &markov_triplet(m, b)?))
}

/// Markov generator through the generic construction.
pub fn markov_generator(m: &ModelSpec, b: &BathSpec) -> Result<Generator4> {
    let a = coupling_operator(m);
    dissipative_generator(&static_from(&a, &markov_triplet(m, b)?), &a)
}

/// Relaxation and decoherence rates plus the damped precession frequency of the
/// Markov dynamics (free + dissipative generator).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarkovRates {
    pub t1_inv: f64,
    pub t2_inv: f64,
    pub omega: f64,
}

/// Eigenvalues of the `(nx, ny)` block of a total generator.
pub fn coherence_eigenvalues(total: &Generator4) -> [C64; 2] {
    let g = &total.0;
    let (a, b, c, d) = (g[1][1], g[1][2], g[2][1], g[2][2]);
    let mean = 0.5 * (a + d);
    let disc = C64::new(0.25 * (a - d) * (a - d) + b * c, 0.0).sqrt();
    [C64::new(mean, 0.0) + disc, C64::new(mean, 0.0) - disc]
}

pub fn markov_rates(m: &ModelSpec, b: &BathSpec) -> Result<MarkovRates> {
    let total = free_generator(m) + markov_generator(m, b)?;
    let ev = coherence_eigenvalues(&total);
    Ok(MarkovRates {
        t1_inv: -total.0[3][3],
        t2_inv: -ev[0].re,
        omega: ev[0].im.abs(),
    })
}

/// Closed-form damped precession frequency at `phi = 0` and zero temperature.
pub fn coherence_frequency(delta: f64, j_delta: f64, s_delta: f64, s_minus_delta: f64) -> f64 {
    delta * (1.0 + (s_delta - s_minus_delta) / (2.0 * delta) - j_delta * j_delta / (16.0 * delta * delta)).sqrt()
}

/// Seven pieces of the dynamically prepared generator after a `pi/2` x-gate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DpDecomposition {
    /// static generator without its zero-frequency entries
    pub br: Generator4,
    pub d1_plus: Generator4,
    pub d1_minus: Generator4,
    /// zero-frequency entries of the static generator
    pub d2: Generator4,
    pub d3_minus: Generator4,
    pub d3_plus: Generator4,
    pub d4: Generator4,
}

impl DpDecomposition {
    pub fn parts(&self) -> [Generator4; 7] {
        [self.br, self.d1_plus, self.d1_minus, self.d2, self.d3_minus, self.d3_plus, self.d4]
    }

    pub fn sum(&self) -> Generator4 {
        self.parts().iter().fold(Generator4::zero(), |acc, g| acc + *g)
    }
}

/// Trigonometric factors `(M, N, G, H)` at phase `Delta t`.
pub fn trig_factors(delta_t: f64) -> (f64, f64, f64, f64) {
    let (s2, c2) = (2.0 * delta_t).sin_cos();
    let (s1, c1) = delta_t.sin_cos();
    (0.5 * c2, 0.5 * s2, c1, s1)
}

/// Decomposition from static (`st`) and asymptotic (`sm`) spectral triplets.
pub fn dp_decomposition_from(xi: f64, delta_t: f64, st: &Triplet, sm: &Triplet) -> DpDecomposition {
    let (mm, nn, gg, hh) = trig_factors(delta_t);
    let d: Vec<C64> = (0..3).map(|k| sm[k] - st[k]).collect();
    let (djm, dj0, djp) = (d[0].re, d[1].re, d[2].re);
    let (dsm, ds0, dsp) = (d[0].im, d[1].im, d[2].im);
    let (jm, j0, jp) = (st[0].re, st[1].re, st[2].re);
    let (s_m, s0, s_p) = (st[0].im, st[1].im, st[2].im);
    let x2 = xi * xi;

    let br = g4([
        [-(jp - jm) * xi, 0.0, 0.0, (jp + jm) * xi],
        [(s_p + s_m) * xi, s_m - s_p, -jp - jm, (s_m - s_p) * xi],
        [jp - jm, 0.0, 0.0, -jp - jm],
    ])
    .scale(0.5);
    let d2 = g4([[0.0, -x2 * j0, 0.0, 0.0], [-xi * s0, 0.0, -x2 * j0, 0.0], [0.0, xi * j0, 0.0, 0.0]]);

    let d1 = |sg: f64, j: f64, s: f64| {
        g4([
            [-sg * xi * j, 0.0, 0.0, xi * j],
            [xi * s, -sg * s, -j, -sg * xi * s],
            [sg * j, 0.0, 0.0, -j],
        ])
        .scale(0.25)
    };

    let d3_plus = g4([
        [xi * (djp * mm + dsp * nn), xi * (dsp * gg - djp * hh), 0.0, xi * (djp * mm + dsp * nn)],
        [
            -djp * (gg + xi * nn) - dsp * (hh - xi * mm),
            dsp * mm - djp * nn,
            -djp * (mm + xi * hh) - dsp * (nn - xi * gg),
            -xi * (djp * nn - dsp * mm),
        ],
        [-djp * mm - dsp * nn, -dsp * gg + djp * hh, 0.0, -djp * mm - dsp * nn],
    ])
    .scale(0.5);
    let d3_minus = g4([
        [xi * (-djm * mm + dsm * nn), -xi * (dsm * gg + djm * hh), 0.0, xi * (djm * mm - dsm * nn)],
        [
            djm * (gg + xi * nn) - dsm * (hh - xi * mm),
            -dsm * mm - djm * nn,
            -djm * (mm + xi * hh) + dsm * (nn - xi * gg),
            -xi * (djm * nn + dsm * mm),
        ],
        [djm * mm - dsm * nn, dsm * gg + djm * hh, 0.0, -djm * mm + dsm * nn],
    ])
    .scale(0.5);
    let d4 = g4([
        [x2 * ds0 * gg, 0.0, 0.0, -x2 * dj0 * hh],
        [-x2 * ds0 * hh, -xi * dj0 * gg, xi * dj0 * hh, -x2 * dj0 * gg],
        [-xi * ds0 * gg, 0.0, 0.0, xi * dj0 * hh],
    ]);

    DpDecomposition {
        br,
        d1_plus: d1(1.0, djp, dsp),
        d1_minus: d1(-1.0, djm, dsm),
        d2,
        d3_minus,
        d3_plus,
        d4,
    }
}

fn check_half_pi(m: &ModelSpec, p: &PulseSpec) -> Result<()> {
    if (p.theta - 0.5 * PI).abs() > 1e-12 || m.phi != 0.0 {
        return Err(Error::Unsupported(
            "closed-form decomposition exists only for the pi/2 x-gate with phi = 0".into(),
        ));
    }
    Ok(())
}

/// Decomposition of the instantaneous-gate dynamically prepared generator at post-gate time `t`.
pub fn dp_generator_decomposition(m: &ModelSpec, b: &BathSpec, p: &PulseSpec, t: f64) -> Result<DpDecomposition> {
    check_half_pi(m, p)?;
    let st = static_triplet(m, b, t)?;
    let sm = markov_triplet(m, b)?;
    Ok(dp_decomposition_from(m.xi, m.delta * t, &st, &sm))
}

fn static_triplet(m: &ModelSpec, b: &BathSpec, t: f64) -> Result<Triplet> {
    let f = crate::dissipators::triplet_frequencies(m);
    let mut g = [C64::new(0.0, 0.0); 3];
    for (slot, w) in g.iter_mut().zip(f) {
        *slot = crate::bath::gamma_t(b, w, t)?.complex();
    }
    Ok(g)
}

/// Interaction-picture generators with the oscillating terms removed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoarseGrained {
    /// contribution of the pre-gate correlations
    pub pre: Generator4,
    /// static part
    pub post: Generator4,
}

impl CoarseGrained {
    pub fn total(&self) -> Generator4 {
        self.pre + self.post
    }
}

const PHASE_SAMPLES: usize = 16;

/// Phase average of the interaction-picture generators with frozen spectral values.
///
/// Every entry is a trigonometric polynomial of degree at most 4 in the free
/// phase, so the 16-point average is the exact constant term.
pub fn coarse_grained_from(m: &ModelSpec, theta: f64, st: &Triplet, sm: &Triplet) -> Result<CoarseGrained> {
    let a = coupling_operator(m);
    let lst = static_from(&a, st);
    let lsm = static_from(&a, sm);
    let post_s = dissipative_generator(&lst, &a)?;
    let uc = gate_unitary(theta);
    let mut pre = Generator4::zero();
    let mut post = Generator4::zero();
    for k in 0..PHASE_SAMPLES {
        let phase = 2.0 * PI * k as f64 / PHASE_SAMPLES as f64;
        let t = phase / m.delta;
        let u = free_propagator(m, t) * uc * free_propagator(m, -t);
        let pre_s = dissipative_generator(&u.conjugate(&(lsm - lst)), &a)?;
        pre += to_interaction_frame(&pre_s, m, t);
        post += to_interaction_frame(&post_s, m, t);
    }
    let w = 1.0 / PHASE_SAMPLES as f64;
    Ok(CoarseGrained { pre: pre.scale(w), post: post.scale(w) })
}

pub fn coarse_grained_generators(m: &ModelSpec, b: &BathSpec, p: &PulseSpec, t: f64) -> Result<CoarseGrained> {
    check_half_pi(m, p)?;
    let st = static_triplet(m, b, t)?;
    let sm = markov_triplet(m, b)?;
    coarse_grained_from(m, p.theta, &st, &sm)
}

/// Closed-form coarse-grained pair for the `pi/2` x-gate.
pub fn coarse_grained_closed_form(xi: f64, st: &Triplet, sm: &Triplet) -> CoarseGrained {
    let (jm, j0, jp) = (st[0].re, st[1].re, st[2].re);
    let (s_m, s_p) = (st[0].im, st[2].im);
    let x2 = xi * xi;
    let diag = -2.0 * x2 * j0 - 0.5 * (jp + jm);
    let post = g4([
        [0.0, diag, 0.5 * (s_p - s_m), 0.0],
        [0.0, 0.5 * (s_m - s_p), diag, 0.0],
        [jp - jm, 0.0, 0.0, -jm - jp],
    ])
    .scale(0.5);
    let d: Vec<C64> = (0..3).map(|k| sm[k] - st[k]).collect();
    let (djm, dj0, djp) = (d[0].re, d[1].re, d[2].re);
    let (dsm, ds0, dsp) = (d[0].im, d[1].im, d[2].im);
    let pre = g4([
        [x2 * ds0 + 0.25 * (dsp + dsm), 0.0, 0.25 * (dsp - dsm), 0.0],
        [0.25 * (djm - djp), 0.0, -0.25 * (djp + djm), -x2 * dj0],
        [0.25 * (djp - djm), 0.25 * (dsm - dsp), 0.25 * (djp + djm), -0.25 * (djp + djm)],
    ]);
    CoarseGrained { pre, post }
}
