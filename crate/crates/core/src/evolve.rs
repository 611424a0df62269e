//! Master-equation integration across the pre-gate, in-gate and post-gate phases.
//!
//! The Bloch vector is propagated in the interaction picture of `H0`, where
//! the free precession is removed exactly and only the slow dissipative
//! generator (plus the constant drive during a pulse) is left for RK4.
//! Schrodinger-picture output is recovered by rotating the recorded states.
//!
//! Times are measured from the start of the gate (`tau_p1` is the origin of
//! the trajectory clock); the gate ends at `tau_p2 - tau_p1`.

use serde::{Deserialize, Serialize};

use crate::bath::{gamma_t, spectral_asymptotic, BathSpec, GammaTable, Grid, ThermalKernel};
use crate::dissipators::{
    drive_integral_from, in_gate_from, instant_dp_from, markov_triplet, nonet_frequencies, post_gate_from, static_from, triplet_frequencies,
    Nonet, PulseSpec, Triplet,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::generators::{
    coarse_grained_from, dissipative_generator, free_rotation, pure_dephasing_generator, to_interaction_frame,
};
use crate::pulseopt::{GateWorkspace, PulseShape};
use crate::operators::{
    commutator_generator, coupling_operator, Coupling, free_generator, gate_unitary, rotation_matrix, BlochState, Generator4,
    ModelSpec, Op2, C64, ZERO,
};

const ZERO_TRIPLET: Triplet = [ZERO; 3];

/// Which dissipator drives the post-gate dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// bath coupled at the (instantaneous) gate
    Factorized,
    /// asymptotic spectra throughout; a finite pulse uses the Markovian in-gate dissipator
    Markov,
    /// instantaneous gate on the correlated equilibrium state
    InstantDp,
    /// finite pulse: in-gate dissipator then post-gate dissipator
    Pulse,
    /// instantaneous gate, phase-averaged interaction-picture generators
    CoarseGrained,
    /// leading-order pure dephasing with a factorized start
    PureDephasing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    #[default]
    Schrodinger,
    Interaction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub model: ModelSpec,
    pub bath: BathSpec,
    pub pulse: PulseSpec,
    pub protocol: Protocol,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "one")]
    pub record_stride: usize,
    #[serde(default)]
    pub frame: Frame,
    /// Bath coupled a finite time before the gate instead of in the infinite past.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre_gate_horizon: Option<f64>,
    /// State before the gate; defaults to the pre-gate equilibrium.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<BlochState>,
    #[serde(default)]
    pub coupling: Coupling,
}

fn one() -> usize {
    1
}

impl SimConfig {
    pub fn new(model: ModelSpec, bath: BathSpec, pulse: PulseSpec, protocol: Protocol, t_end: f64) -> Self {
        SimConfig {
            model,
            bath,
            pulse,
            protocol,
            t_end,
            dt: 0.01,
            record_stride: 1,
            frame: Frame::Schrodinger,
            pre_gate_horizon: None,
            initial: None,
            coupling: Coupling::Model,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.bath.validate()?;
        self.pulse.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("dt must be positive, got {}", self.dt)));
        }
        let mut limit = 0.02 * 2.0 * std::f64::consts::PI / self.model.delta;
        let wp = self.pulse.omega_p();
        if self.has_drive() && wp != 0.0 {
            limit = limit.min(0.02 * 2.0 * std::f64::consts::PI / wp.abs());
        }
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::config(format!("dt = {} exceeds the resolution limit {limit}", self.dt)));
        }
        if !(self.t_end >= self.pulse.duration()) || !self.t_end.is_finite() {
            return Err(Error::config(format!(
                "t_end = {} must be finite and cover the pulse (duration {})",
                self.t_end,
                self.pulse.duration()
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::config("record_stride must be at least 1"));
        }
        if let Some(h) = self.pre_gate_horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::config(format!("pre_gate_horizon must be positive, got {h}")));
            }
        }
        if let Some(s) = &self.initial {
            if s.norm() > 1.0 + 1e-9 {
                return Err(Error::config("initial Bloch vector lies outside the unit ball"));
            }
        }
        if self.is_shaped() {
            if !self.is_pulse() {
                return Err(Error::Unsupported("shaped pulses and sigma_z coupling need the pulse protocol with a finite gate".into()));
            }
            if (self.t_end - self.pulse.duration()).abs() > 1e-9 * self.t_end.max(1.0) {
                return Err(Error::Unsupported("shaped-pulse runs stop at the end of the gate; set t_end to the pulse duration".into()));
            }
        }
        if matches!(self.protocol, Protocol::CoarseGrained | Protocol::PureDephasing | Protocol::Pulse) && self.model.phi != 0.0 {
            return Err(Error::Unsupported(format!("{:?} runs are derived for phi = 0", self.protocol)));
        }
        Ok(())
    }

    /// Gate integrated through the convolution workspace instead of the square-pulse tables.
    fn is_shaped(&self) -> bool {
        self.pulse.fourier.is_some() || self.coupling != Coupling::Model
    }

    fn is_pulse(&self) -> bool {
        self.protocol == Protocol::Pulse && !self.pulse.is_instantaneous()
    }

    /// Whether the gate is integrated as a finite drive rather than applied at once.
    fn has_drive(&self) -> bool {
        matches!(self.protocol, Protocol::Pulse | Protocol::Markov) && !self.pulse.is_instantaneous()
    }
}

/// Recorded samples; `bloch` is expressed in `frame`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub frame: Frame,
    pub times: Vec<f64>,
    pub bloch: Vec<BlochState>,
    pub eps_min: Vec<f64>,
    /// end of the gate on the trajectory clock
    pub gate_end: f64,
    pub delta: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Bloch vectors in the requested frame.
    pub fn in_frame(&self, frame: Frame) -> Vec<BlochState> {
        if frame == self.frame {
            return self.bloch.clone();
        }
        let sign = if frame == Frame::Interaction { -1.0 } else { 1.0 };
        let m = ModelSpec { delta: self.delta, xi: 0.0, phi: 0.0 };
        self.times
            .iter()
            .zip(&self.bloch)
            .map(|(t, b)| BlochState::from_vec4(&free_rotation(&m, sign * t).apply(&b.to_vec4())))
            .collect()
    }

    /// `|n_perp|`, identical in both frames.
    pub fn perp(&self) -> Vec<f64> {
        self.bloch.iter().map(|b| b.perp()).collect()
    }

    /// Samples at or after the end of the gate.
    pub fn post_gate_range(&self) -> std::ops::Range<usize> {
        let start = self.times.partition_point(|t| *t < self.gate_end - 1e-12);
        start..self.times.len()
    }
}

/// Solve for the stationary Bloch vector of a trace-preserving generator.
pub fn null_state(g: &Generator4) -> Result<BlochState> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = g.0[i + 1][j + 1];
        }
        m[i][3] = -g.0[i + 1][0];
    }
    let scale = g.max_abs().max(1e-300);
    for col in 0..3 {
        let piv = (col..3).max_by(|a, b| m[*a][col].abs().total_cmp(&m[*b][col].abs())).unwrap_or(col);
        if m[piv][col].abs() <= 1e-12 * scale {
            return Err(Error::numerical("stationary state is not unique (degenerate null space)"));
        }
        m.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for k in col..4 {
                    m[r][k] -= f * m[col][k];
                }
            }
        }
    }
    Ok(BlochState::new(m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]))
}

/// Pre-gate equilibrium: stationary state of the free plus Markov generator.
pub fn asymptotic_state(m: &ModelSpec, b: &BathSpec) -> Result<BlochState> {
    let a = coupling_operator(m);
    let d = dissipative_generator(&static_from(&a, &markov_triplet(m, b)?), &a)?;
    null_state(&(free_generator(m) + d))
}

/// Equilibrium reached when the bath was coupled a time `horizon` before the gate,
/// approximated by the stationary state of the generator frozen at that age.
pub fn horizon_state(m: &ModelSpec, b: &BathSpec, horizon: f64) -> Result<BlochState> {
    let a = coupling_operator(m);
    let f = triplet_frequencies(m);
    let mut g = ZERO_TRIPLET;
    for (slot, w) in g.iter_mut().zip(f) {
        *slot = gamma_t(b, w, horizon)?.complex();
    }
    let d = dissipative_generator(&static_from(&a, &g), &a)?;
    null_state(&(free_generator(m) + d))
}

/// Asymptotic spectra at `nu Delta + mu omega_p`; errors if any rate diverges.
pub fn markov_nonet(m: &ModelSpec, b: &BathSpec, omega_p: f64) -> Result<Nonet> {
    let f = nonet_frequencies(m, omega_p);
    let mut g = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let v = spectral_asymptotic(b, f[i][j])?;
            if !(v.j.is_finite() && v.s.is_finite()) {
                return Err(Error::numerical(format!("asymptotic rate at omega={} diverges", f[i][j])));
            }
            g[i][j] = v.complex();
        }
    }
    Ok(g)
}

/// Spectral tables on the half-step grid.
struct Spectra {
    /// `[nu][mu]` tables; only the `mu = 0` column is filled without a pulse
    nonet: Vec<Vec<Option<GammaTable>>>,
    horizon: Option<Vec<GammaTable>>,
}

impl Spectra {
    fn build(cfg: &SimConfig, half: f64, n_half: usize, exec: Exec) -> Result<Self> {
        let b = &cfg.bath;
        let grid = Grid::new(0.0, half, n_half);
        let thermal = !b.is_zero_temperature() && b.lambda2 > 0.0;
        let kernel = if thermal { Some(ThermalKernel::build(b, grid, exec)) } else { None };
        let wp = if cfg.is_pulse() { cfg.pulse.omega_p() } else { 0.0 };
        let freqs = nonet_frequencies(&cfg.model, wp);
        let mut wanted = Vec::new();
        for (i, row) in freqs.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                if j == 1 || cfg.is_pulse() {
                    wanted.push((i, j, *w));
                }
            }
        }
        let tables = exec.try_map(&wanted, |(_, _, w)| GammaTable::build(b, *w, grid, kernel.as_ref(), Exec::Sequential))?;
        let mut nonet: Vec<Vec<Option<GammaTable>>> = vec![vec![None, None, None], vec![None, None, None], vec![None, None, None]];
        for ((i, j, _), t) in wanted.into_iter().zip(tables) {
            nonet[i][j] = Some(t);
        }
        let horizon = match cfg.pre_gate_horizon {
            Some(h) => {
                let hg = Grid::new(h, half, n_half);
                let hk = if thermal { Some(ThermalKernel::build(b, hg, exec)) } else { None };
                let f = triplet_frequencies(&cfg.model);
                Some(exec.try_map(&f, |w| GammaTable::build(b, *w, hg, hk.as_ref(), Exec::Sequential))?)
            }
            None => None,
        };
        Ok(Spectra { nonet, horizon })
    }

    fn triplet(&self, k: usize) -> Triplet {
        let get = |i: usize| self.nonet[i][1].as_ref().map_or(C64::new(0.0, 0.0), |t| t.get(k));
        [get(0), get(1), get(2)]
    }

    fn nonet(&self, k: usize) -> [[C64; 3]; 3] {
        let mut g = [[C64::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                if let Some(t) = &self.nonet[i][j] {
                    g[i][j] = t.get(k);
                }
            }
        }
        g
    }

    fn horizon_triplet(&self, k: usize) -> Option<Triplet> {
        self.horizon.as_ref().map(|h| [h[0].get(k), h[1].get(k), h[2].get(k)])
    }
}

/// Linear map from spectral triplets to the coarse-grained generators.
struct CoarseBasis {
    pre: Vec<Generator4>,
    post: Vec<Generator4>,
}

impl CoarseBasis {
    fn build(m: &ModelSpec, theta: f64) -> Result<Self> {
        let mut pre = Vec::with_capacity(6);
        let mut post = Vec::with_capacity(6);
        for k in 0..6 {
            let mut e = ZERO_TRIPLET;
            e[k / 2] = if k % 2 == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 1.0) };
            pre.push(coarse_grained_from(m, theta, &ZERO_TRIPLET, &e)?.pre);
            post.push(coarse_grained_from(m, theta, &e, &e)?.post);
        }
        Ok(CoarseBasis { pre, post })
    }

    fn eval(&self, st: &Triplet, sm: &Triplet) -> Generator4 {
        let mut g = Generator4::zero();
        for k in 0..6 {
            let pick = |t: &Triplet| if k % 2 == 0 { t[k / 2].re } else { t[k / 2].im };
            g += self.pre[k].scale(pick(sm) - pick(st));
            g += self.post[k].scale(pick(st));
        }
        g
    }
}

/// Interaction-picture generator as a function of half-step index.
struct Dynamics<'a> {
    cfg: &'a SimConfig,
    a: Op2,
    half: f64,
    spectra: Option<Spectra>,
    lsm: Option<(Triplet, Op2)>,
    drive: Generator4,
    gate_half_steps: usize,
    coarse: Option<CoarseBasis>,
    /// asymptotic spectra for the Markovian in-gate dissipator
    markov_nonet: Option<Nonet>,
}

impl<'a> Dynamics<'a> {
    fn lsm(&self, k: usize) -> (Triplet, Op2) {
        match self.spectra.as_ref().and_then(|s| s.horizon_triplet(k)) {
            Some(t) => (t, static_from(&self.a, &t)),
            None => self.lsm.expect("Markov dissipator available without horizon"),
        }
    }

    /// Generator at half-step `k`; `in_gate` selects the in-gate branch on the boundary.
    fn generator(&self, k: usize, in_gate: bool) -> Result<Generator4> {
        let cfg = self.cfg;
        let m = &cfg.model;
        let u = k as f64 * self.half;
        let sp = self.spectra.as_ref();
        let schrodinger = |lam: Op2| -> Result<Generator4> {
            Ok(to_interaction_frame(&dissipative_generator(&lam, &self.a)?, m, u))
        };
        match cfg.protocol {
            Protocol::Factorized => schrodinger(static_from(&self.a, &sp.expect("tables").triplet(k))),
            Protocol::Markov if in_gate => {
                let g = self.markov_nonet.as_ref().expect("Markov spectra");
                Ok(schrodinger(drive_integral_from(m, &self.a, u, 0.0, g))? + self.drive)
            }
            Protocol::Markov => schrodinger(self.lsm(k).1),
            Protocol::PureDephasing => {
                let j0 = sp.expect("tables").triplet(k)[1].re;
                Ok(pure_dephasing_generator(m.xi, j0))
            }
            Protocol::CoarseGrained => {
                let st = sp.expect("tables").triplet(k);
                let (sm, _) = self.lsm(k);
                Ok(self.coarse.as_ref().expect("coarse basis").eval(&st, &sm))
            }
            Protocol::InstantDp => {
                let st = static_from(&self.a, &sp.expect("tables").triplet(k));
                schrodinger(instant_dp_from(m, cfg.pulse.theta, u, &self.lsm(k).1, &st))
            }
            Protocol::Pulse if !cfg.is_pulse() => {
                let st = static_from(&self.a, &sp.expect("tables").triplet(k));
                schrodinger(instant_dp_from(m, cfg.pulse.theta, u, &self.lsm(k).1, &st))
            }
            Protocol::Pulse => {
                let s = sp.expect("tables");
                let lsm = self.lsm(k).1;
                if in_gate {
                    let lam = in_gate_from(m, &self.a, cfg.pulse.omega_p(), u, &s.nonet(k), &lsm);
                    Ok(schrodinger(lam)? + self.drive)
                } else {
                    let g2 = s.nonet(k - self.gate_half_steps);
                    let mut p = cfg.pulse.clone();
                    p.tau_p2 -= p.tau_p1;
                    p.tau_p1 = 0.0;
                    schrodinger(post_gate_from(m, &self.a, &p, u, &s.nonet(k), &g2, &lsm))
                }
            }
        }
    }
}

fn rk4_step(v: &[f64; 4], h: f64, g0: &Generator4, g1: &Generator4, g2: &Generator4) -> [f64; 4] {
    let add = |x: &[f64; 4], y: &[f64; 4], s: f64| [x[0] + s * y[0], x[1] + s * y[1], x[2] + s * y[2], x[3] + s * y[3]];
    let k1 = g0.apply(v);
    let k2 = g1.apply(&add(v, &k1, 0.5 * h));
    let k3 = g1.apply(&add(v, &k2, 0.5 * h));
    let k4 = g2.apply(&add(v, &k3, h));
    let mut out = *v;
    for i in 1..4 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Step size actually used: `dt` shrunk so the pulse spans a whole number of steps.
pub fn effective_dt(cfg: &SimConfig) -> f64 {
    let tp = cfg.pulse.duration();
    if cfg.has_drive() {
        tp / (tp / cfg.dt).ceil()
    } else {
        cfg.dt
    }
}

/// State right before the gate.
pub fn pre_gate_state(cfg: &SimConfig) -> Result<BlochState> {
    if let Some(s) = cfg.initial {
        return Ok(s);
    }
    if cfg.protocol == Protocol::PureDephasing || cfg.bath.lambda2 == 0.0 || cfg.coupling == Coupling::SigmaZ {
        return Ok(BlochState::ground());
    }
    match cfg.pre_gate_horizon {
        Some(h) => horizon_state(&cfg.model, &cfg.bath, h),
        None => asymptotic_state(&cfg.model, &cfg.bath),
    }
}

pub fn integrate(cfg: &SimConfig) -> Result<Trajectory> {
    integrate_with(cfg, Exec::default())
}

pub fn integrate_with(cfg: &SimConfig, exec: Exec) -> Result<Trajectory> {
    cfg.validate()?;
    if cfg.is_shaped() {
        return integrate_shaped(cfg, exec);
    }
    let m = &cfg.model;
    let h = effective_dt(cfg);
    let steps = (cfg.t_end / h - 1e-9).ceil().max(1.0) as usize;
    let half = 0.5 * h;
    let n_half = 2 * steps;
    let gate_steps = if cfg.has_drive() { (cfg.pulse.duration() / h).round() as usize } else { 0 };

    let needs_tables = !matches!(cfg.protocol, Protocol::Markov) || cfg.pre_gate_horizon.is_some();
    let spectra = if needs_tables { Some(Spectra::build(cfg, half, n_half, exec)?) } else { None };
    let a = coupling_operator(m);
    let lsm = if cfg.pre_gate_horizon.is_none() {
        let t = markov_triplet(m, &cfg.bath)?;
        Some((t, static_from(&a, &t)))
    } else {
        None
    };
    let coarse = if cfg.protocol == Protocol::CoarseGrained { Some(CoarseBasis::build(m, cfg.pulse.theta)?) } else { None };
    let wp = if cfg.has_drive() { cfg.pulse.omega_p() } else { 0.0 };
    let markov_nonet = if cfg.protocol == Protocol::Markov && cfg.has_drive() {
        Some(markov_nonet(m, &cfg.bath, wp)?)
    } else {
        None
    };
    let dyn_ = Dynamics {
        cfg,
        a,
        half,
        spectra,
        lsm,
        drive: commutator_generator(&Op2::sx().scale_re(0.5 * wp)),
        gate_half_steps: 2 * gate_steps,
        coarse,
        markov_nonet,
    };

    let pre = pre_gate_state(cfg)?;
    let start = if cfg.has_drive() {
        pre
    } else {
        BlochState::from_vec4(&rotation_matrix(&gate_unitary(cfg.pulse.theta)).apply(&pre.to_vec4()))
    };

    let mut traj = Trajectory {
        frame: cfg.frame,
        times: Vec::with_capacity(steps / cfg.record_stride + 2),
        bloch: Vec::with_capacity(steps / cfg.record_stride + 2),
        eps_min: Vec::with_capacity(steps / cfg.record_stride + 2),
        gate_end: gate_steps as f64 * h,
        delta: m.delta,
    };
    let record = |traj: &mut Trajectory, t: f64, v: &[f64; 4]| -> Result<()> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::numerical(format!("state diverged at t = {t}")));
        }
        let n = match cfg.frame {
            Frame::Interaction => BlochState::from_vec4(v),
            Frame::Schrodinger => BlochState::from_vec4(&free_rotation(m, t).apply(v)),
        };
        traj.times.push(t);
        traj.eps_min.push(n.eps_min());
        traj.bloch.push(n);
        Ok(())
    };

    let mut v = start.to_vec4();
    record(&mut traj, 0.0, &v)?;
    let mut g_prev = dyn_.generator(0, gate_steps > 0)?;
    for j in 0..steps {
        let in_gate = j < gate_steps;
        let g0 = if j == gate_steps && gate_steps > 0 { dyn_.generator(2 * j, false)? } else { g_prev };
        let g1 = dyn_.generator(2 * j + 1, in_gate)?;
        let g2 = dyn_.generator(2 * j + 2, in_gate)?;
        v = rk4_step(&v, h, &g0, &g1, &g2);
        g_prev = g2;
        if (j + 1) % cfg.record_stride == 0 || j + 1 == steps {
            record(&mut traj, (j + 1) as f64 * h, &v)?;
        }
    }
    Ok(traj)
}

fn integrate_shaped(cfg: &SimConfig, exec: Exec) -> Result<Trajectory> {
    let m = &cfg.model;
    let h = effective_dt(cfg);
    let steps = (cfg.pulse.duration() / h).round() as usize;
    let a = cfg.coupling.operator(m);
    let ws = GateWorkspace::new(m, &cfg.bath, &a, cfg.pulse.duration(), 2 * steps, exec)?;
    let shape = PulseShape::from_spec(&cfg.pulse)?;
    let states = ws.evolve(&shape, &pre_gate_state(cfg)?)?;
    let mut traj = Trajectory {
        frame: cfg.frame,
        times: Vec::new(),
        bloch: Vec::new(),
        eps_min: Vec::new(),
        gate_end: steps as f64 * h,
        delta: m.delta,
    };
    for (j, v) in states.iter().enumerate() {
        if j % cfg.record_stride != 0 && j != steps {
            continue;
        }
        let t = j as f64 * h;
        let n = match cfg.frame {
            Frame::Interaction => BlochState::from_vec4(v),
            Frame::Schrodinger => BlochState::from_vec4(&free_rotation(m, t).apply(v)),
        };
        traj.times.push(t);
        traj.eps_min.push(n.eps_min());
        traj.bloch.push(n);
    }
    Ok(traj)
}

/// Largest change of any recorded component when the step is halved.
pub fn convergence_check(cfg: &SimConfig) -> Result<f64> {
    let coarse = integrate(cfg)?;
    let mut fine_cfg = cfg.clone();
    fine_cfg.dt = effective_dt(cfg) / 2.0;
    fine_cfg.record_stride = cfg.record_stride * 2;
    let fine = integrate(&fine_cfg)?;
    let mut worst: f64 = 0.0;
    for (a, b) in coarse.bloch.iter().zip(&fine.bloch) {
        for i in 0..3 {
            worst = worst.max((a.n[i] - b.n[i]).abs());
        }
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub min_eps: f64,
    pub t_min: f64,
    pub first_negative: Option<f64>,
    pub max_norm: f64,
    pub pass: bool,
}

pub const POSITIVITY_THRESHOLD: f64 = -0.02;

pub fn positivity_audit(traj: &Trajectory) -> AuditReport {
    let mut min_eps = f64::INFINITY;
    let mut t_min = 0.0;
    let mut first_negative = None;
    let mut max_norm: f64 = 0.0;
    for ((t, e), b) in traj.times.iter().zip(&traj.eps_min).zip(&traj.bloch) {
        if *e < min_eps {
            min_eps = *e;
            t_min = *t;
        }
        if *e < 0.0 && first_negative.is_none() {
            first_negative = Some(*t);
        }
        max_norm = max_norm.max(b.norm());
    }
    AuditReport { min_eps, t_min, first_negative, max_norm, pass: min_eps >= POSITIVITY_THRESHOLD }
}

/// Moving average over `window` samples (centered, shrinking at the edges).
pub fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(w / 2);
            let hi = (i + w - w / 2).min(x.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Coherence dip followed by a revival.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub t_min: f64,
    pub min: f64,
    pub t_max: f64,
    pub max: f64,
}

impl Recovery {
    pub fn amplitude(&self) -> f64 {
        (self.max - self.min) / self.min
    }
}

/// Strongest dip-then-revival of the period-averaged `|n_perp|` after the gate.
///
/// The envelope is a doubled one-period moving average; a revival must peak at
/// least one period after its dip. Returns the pair maximizing `max / min`.
pub fn coherence_recovery(traj: &Trajectory) -> Option<Recovery> {
    let range = traj.post_gate_range();
    if range.len() < 3 {
        return None;
    }
    let times = &traj.times[range.clone()];
    let perp: Vec<f64> = traj.perp()[range].to_vec();
    let dt = times[1] - times[0];
    let period = 2.0 * std::f64::consts::PI / traj.delta;
    let w = (period / dt).round().max(1.0) as usize;
    let smooth = moving_average(&moving_average(&perp, w), w);
    let mut best: Option<Recovery> = None;
    let mut best_ratio = 1.0;
    // running minimum over samples at least one period before the candidate maximum
    let mut run_min = (f64::INFINITY, times[0]);
    for i in 0..smooth.len() {
        if i >= w {
            let j = i - w;
            if smooth[j] < run_min.0 {
                run_min = (smooth[j], times[j]);
            }
        }
        if run_min.0 > 0.0 && run_min.0.is_finite() {
            let ratio = smooth[i] / run_min.0;
            if ratio > best_ratio {
                best_ratio = ratio;
                best = Some(Recovery { t_min: run_min.1, min: run_min.0, t_max: times[i], max: smooth[i] });
            }
        }
    }
    best
}

/// Intercept of `ln(nz_inf - nz)` over `window` with the slope fixed to `-rate`.
pub fn relaxation_intercept(traj: &Trajectory, nz_inf: f64, rate: f64, window: (f64, f64)) -> Result<f64> {
    let (t0, t1) = window;
    if t0 >= t1 || traj.times.last().copied().unwrap_or(0.0) < t1 {
        return Err(Error::config(format!("fit window [{t0}, {t1}] lies outside the trajectory")));
    }
    let mut acc = 0.0;
    let mut n = 0usize;
    for (t, b) in traj.times.iter().zip(&traj.bloch) {
        if *t >= t0 && *t <= t1 {
            let gap = nz_inf - b.n[2];
            if gap <= 0.0 {
                return Err(Error::numerical(format!("population crossed its asymptote at t = {t}")));
            }
            acc += gap.ln() + rate * t;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::config("fit window contains no samples"));
    }
    Ok(acc / n as f64)
}

/// Time lag of the population relaxation relative to a reference trajectory.
///
/// Both trajectories are measured from the end of their gates.
pub fn relaxation_delay(traj: &Trajectory, reference: &Trajectory, nz_inf: f64, rate: f64, window: (f64, f64)) -> Result<f64> {
    let shift = |tr: &Trajectory| Trajectory {
        times: tr.times.iter().map(|t| t - tr.gate_end).collect(),
        ..tr.clone()
    };
    let c = relaxation_intercept(&shift(traj), nz_inf, rate, window)?;
    let c_ref = relaxation_intercept(&shift(reference), nz_inf, rate, window)?;
    Ok((c - c_ref) / rate)
}
