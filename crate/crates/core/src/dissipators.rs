//! Filtered coupling operators `Lambda(t)` for every gate protocol.
//!
//! All builders come in two forms: a `*_from` function that assembles `Lambda`
//! from already evaluated spectral values (used by the integrator, which reads
//! them from tables), and a convenience wrapper that evaluates the spectral
//! values directly.
//!
//! Time origins: in-gate and post-gate times are measured from the pulse
//! start `tau_p1`; instantaneous-gate times from the gate instant.

use serde::{Deserialize, Serialize};

use crate::bath::{gamma_t, spectral_asymptotic, BathSpec};
use crate::error::{Error, Result};
use crate::operators::{cis, coupling_operator, free_propagator, gate_unitary, sigma_decomposition, ModelSpec, Op2, C64, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DissipatorKind {
    StaticNonMarkov,
    StaticMarkov,
    InstantGateDP,
    InGate,
    PostGatePulse,
    GeneralPulse,
}

/// x-rotation by `theta` applied over `[tau_p1, tau_p2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub theta: f64,
    pub tau_p1: f64,
    pub tau_p2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier: Option<Vec<f64>>,
}

impl PulseSpec {
    pub fn instantaneous(theta: f64) -> Self {
        PulseSpec { theta, tau_p1: 0.0, tau_p2: 0.0, fourier: None }
    }

    pub fn square(theta: f64, duration: f64) -> Self {
        PulseSpec { theta, tau_p1: 0.0, tau_p2: duration, fourier: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_p2 >= self.tau_p1) || !self.theta.is_finite() || !self.tau_p1.is_finite() || !self.tau_p2.is_finite() {
            return Err(Error::config(format!(
                "pulse needs finite theta and tau_p2 >= tau_p1, got theta={}, window=[{}, {}]",
                self.theta, self.tau_p1, self.tau_p2
            )));
        }
        if let Some(a) = &self.fourier {
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::config("fourier coefficients must be finite"));
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.tau_p2 - self.tau_p1
    }

    pub fn is_instantaneous(&self) -> bool {
        self.duration() == 0.0
    }

    /// Gate operating frequency `theta / duration` (infinite for instantaneous gates).
    pub fn omega_p(&self) -> f64 {
        if self.is_instantaneous() {
            f64::INFINITY
        } else {
            self.theta / self.duration()
        }
    }
}

/// Spectral values at `-Delta, 0, +Delta`.
pub type Triplet = [C64; 3];

/// Spectral values at `nu Delta + mu omega_p`, indexed `[nu + 1][mu + 1]`.
pub type Nonet = [[C64; 3]; 3];

pub fn triplet_frequencies(m: &ModelSpec) -> [f64; 3] {
    [-m.delta, 0.0, m.delta]
}

pub fn nonet_frequencies(m: &ModelSpec, omega_p: f64) -> [[f64; 3]; 3] {
    let mut f = [[0.0; 3]; 3];
    for (i, nu) in [-1.0, 0.0, 1.0].iter().enumerate() {
        for (j, mu) in [-1.0, 0.0, 1.0].iter().enumerate() {
            f[i][j] = nu * m.delta + mu * omega_p;
        }
    }
    f
}

pub fn triplet_of(nonet: &Nonet) -> Triplet {
    [nonet[0][1], nonet[1][1], nonet[2][1]]
}

/// Fourier components of `e^{-i H0 u} A e^{i H0 u} = sum_nu B_nu e^{i nu Delta u}`, indexed `nu + 1`.
pub fn fourier_components(a: &Op2) -> [Op2; 3] {
    let [a0, ap, am, az] = sigma_decomposition(a);
    [
        Op2::sminus().scale(am),
        Op2::identity().scale(a0) + Op2::sz().scale(az),
        Op2::splus().scale(ap),
    ]
}

/// `sum_nu B_nu Gamma_{nu Delta}`
pub fn static_from(a: &Op2, g: &Triplet) -> Op2 {
    let b = fourier_components(a);
    b[0].scale(g[0]) + b[1].scale(g[1]) + b[2].scale(g[2])
}

fn eval_triplet(m: &ModelSpec, b: &BathSpec, t: f64) -> Result<Triplet> {
    let f = triplet_frequencies(m);
    Ok([
        gamma_t(b, f[0], t)?.complex(),
        gamma_t(b, f[1], t)?.complex(),
        gamma_t(b, f[2], t)?.complex(),
    ])
}

fn eval_nonet(m: &ModelSpec, b: &BathSpec, omega_p: f64, t: f64) -> Result<Nonet> {
    let f = nonet_frequencies(m, omega_p);
    let mut g = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = gamma_t(b, f[i][j], t)?.complex();
        }
    }
    Ok(g)
}

/// Asymptotic spectral triplet; errors if a rate diverges.
pub fn markov_triplet(m: &ModelSpec, b: &BathSpec) -> Result<Triplet> {
    let f = triplet_frequencies(m);
    let mut g = [ZERO; 3];
    for (slot, w) in g.iter_mut().zip(f) {
        let v = spectral_asymptotic(b, w)?;
        if !(v.j.is_finite() && v.s.is_finite()) {
            return Err(Error::numerical(format!(
                "asymptotic rate at omega={w} diverges (sub-Ohmic bath at finite temperature); use a finite pre-gate horizon"
            )));
        }
        *slot = v.complex();
    }
    Ok(g)
}

pub fn lambda_static(m: &ModelSpec, b: &BathSpec, t: f64) -> Result<Op2> {
    Ok(static_from(&coupling_operator(m), &eval_triplet(m, b, t)?))
}

pub fn lambda_markov(m: &ModelSpec, b: &BathSpec) -> Result<Op2> {
    Ok(static_from(&coupling_operator(m), &markov_triplet(m, b)?))
}

/// `U_c(-t) [Lsm - Lst] U_c(-t)^dagger + Lst`
pub fn instant_dp_from(m: &ModelSpec, theta: f64, t: f64, lsm: &Op2, lst: &Op2) -> Op2 {
    let u = free_propagator(m, t) * gate_unitary(theta) * free_propagator(m, -t);
    u.conjugate(&(*lsm - *lst)) + *lst
}

pub fn lambda_instant_dp(m: &ModelSpec, b: &BathSpec, p: &PulseSpec, t: f64) -> Result<Op2> {
    let lsm = lambda_markov(m, b)?;
    let lst = lambda_static(m, b, t)?;
    Ok(instant_dp_from(m, p.theta, t, &lsm, &lst))
}

/// Projectors onto the drive axis `m_t = cos(Delta t) x - sin(Delta t) y` seen in the lab frame.
fn axis_projectors(m: &ModelSpec, t: f64) -> (Op2, Op2) {
    let (s, co) = (m.delta * t).sin_cos();
    let n = Op2::sx().scale_re(co) - Op2::sy().scale_re(s);
    let id = Op2::identity();
    ((id + n).scale_re(0.5), (id - n).scale_re(0.5))
}

/// `sum_{nu, mu} M_{nu mu}(t) e^{i mu' phase} G_{nu mu}` for a drive of frequency `omega_p`
/// started at time 0 and seen at lab time `t`; `mu' = sign(mu)`.
pub fn drive_integral_from(m: &ModelSpec, a: &Op2, t: f64, phase: f64, g: &Nonet) -> Op2 {
    let (pp, pm) = axis_projectors(m, t);
    let b = fourier_components(a);
    let ep = cis(phase);
    let em = cis(-phase);
    let mut out = Op2::zero();
    for nu in 0..3 {
        let bn = b[nu];
        out += (pp * bn * pp + pm * bn * pm).scale(g[nu][1]);
        out += (pm * bn * pp).scale(g[nu][2] * ep);
        out += (pp * bn * pm).scale(g[nu][0] * em);
    }
    out
}

/// `e^{-i H0 t} R_x(alpha) e^{i H0 t}`
fn rotated_drive(m: &ModelSpec, alpha: f64, t: f64) -> Op2 {
    free_propagator(m, t) * gate_unitary(alpha) * free_propagator(m, -t)
}

/// In-gate dissipator at elapsed time `t` after the pulse start.
pub fn in_gate_from(m: &ModelSpec, a: &Op2, omega_p: f64, t: f64, g: &Nonet, lsm: &Op2) -> Op2 {
    let lst = static_from(a, &triplet_of(g));
    let ur = rotated_drive(m, omega_p * t, t);
    ur.conjugate(&(*lsm - lst)) + drive_integral_from(m, a, t, 0.0, g)
}

pub fn lambda_in_gate(m: &ModelSpec, b: &BathSpec, p: &PulseSpec, t: f64) -> Result<Op2> {
    p.validate()?;
    if m.phi != 0.0 {
        return Err(Error::Unsupported("in-gate dissipator is derived for phi = 0".into()));
    }
    if p.is_instantaneous() {
        return Err(Error::config("in-gate dissipator needs a pulse of finite duration"));
    }
    let el = t - p.tau_p1;
    if el < 0.0 || t > p.tau_p2 + 1e-12 * p.tau_p2.abs().max(1.0) {
        return Err(Error::config(format!("time {t} lies outside the pulse window [{}, {}]", p.tau_p1, p.tau_p2)));
    }
    let wp = p.omega_p();
    let g = eval_nonet(m, b, wp, el)?;
    let lsm = lambda_markov(m, b)?;
    Ok(in_gate_from(m, &coupling_operator(m), wp, el, &g, &lsm))
}

/// Pulse part of the post-gate dissipator: `g1 = Gamma(t - tau_p1)`, `g2 = Gamma(t - tau_p2)`,
/// `t` measured from the pulse start.
pub fn post_pulse_from(m: &ModelSpec, a: &Op2, p: &PulseSpec, t: f64, g1: &Nonet, g2: &Nonet) -> Op2 {
    let mut dg = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            dg[i][j] = g1[i][j] - g2[i][j];
        }
    }
    let phase = -p.omega_p() * (t - p.duration());
    drive_integral_from(m, a, t, phase, &dg)
}

/// Full post-gate dissipator, `t` measured from the pulse start.
pub fn post_gate_from(m: &ModelSpec, a: &Op2, p: &PulseSpec, t: f64, g1: &Nonet, g2: &Nonet, lsm: &Op2) -> Op2 {
    let lst_free = static_from(a, &triplet_of(g2));
    let lst_all = static_from(a, &triplet_of(g1));
    let uc = rotated_drive(m, p.theta, t);
    lst_free + post_pulse_from(m, a, p, t, g1, g2) + uc.conjugate(&(*lsm - lst_all))
}

fn check_post(m: &ModelSpec, p: &PulseSpec, t: f64) -> Result<()> {
    p.validate()?;
    if m.phi != 0.0 {
        return Err(Error::Unsupported("post-gate pulse dissipator is derived for phi = 0".into()));
    }
    if t < p.tau_p2 {
        return Err(Error::config(format!("post-gate time {t} precedes pulse end {}", p.tau_p2)));
    }
    Ok(())
}

/// `Lambda_dp-pulse(t)` for `t >= tau_p2` (zero for instantaneous gates).
pub fn lambda_post_pulse(m: &ModelSpec, b: &BathSpec, p: &PulseSpec, t: f64) -> Result<Op2> {
    check_post(m, p, t)?;
    if p.is_instantaneous() {
        return Ok(Op2::zero());
    }
    let wp = p.omega_p();
    let g1 = eval_nonet(m, b, wp, t - p.tau_p1)?;
    let g2 = eval_nonet(m, b, wp, t - p.tau_p2)?;
    Ok(post_pulse_from(m, &coupling_operator(m), p, t - p.tau_p1, &g1, &g2))
}

/// Full post-gate `Lambda(t)` for `t >= tau_p2`.
pub fn lambda_post_gate(m: &ModelSpec, b: &BathSpec, p: &PulseSpec, t: f64) -> Result<Op2> {
    check_post(m, p, t)?;
    let lsm = lambda_markov(m, b)?;
    if p.is_instantaneous() {
        let lst = lambda_static(m, b, t - p.tau_p2)?;
        return Ok(instant_dp_from(m, p.theta, t - p.tau_p2, &lsm, &lst));
    }
    let wp = p.omega_p();
    let g1 = eval_nonet(m, b, wp, t - p.tau_p1)?;
    let g2 = eval_nonet(m, b, wp, t - p.tau_p2)?;
    Ok(post_gate_from(m, &coupling_operator(m), p, t - p.tau_p1, &g1, &g2, &lsm))
}

/// Pre-gate dissipator of a system equilibrated since the infinite past.
pub fn lambda_pre_gate(m: &ModelSpec, b: &BathSpec) -> Result<Op2> {
    lambda_markov(m, b)
}
