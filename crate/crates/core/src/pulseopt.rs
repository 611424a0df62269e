//! Shaped x-pulses and the search for shapes that minimise gate-induced dissipation.
//!
//! The drive is `eps(t) sigma_x / 2` in the interaction picture of `H0`, with
//! `eps(t) = omega_p + sum_n a_n (n pi / tau_p) cos(n pi t / tau_p)`. Every
//! cosine term integrates to zero over the window, so the net angle stays
//! `theta` whatever the coefficients. Because the drive axis is fixed, the
//! gate propagator is an x-rotation by `theta(t) - theta(tau)` and the memory
//! integral of the in-gate dissipator reduces to a causal convolution with the
//! bath correlation function, evaluated here by FFT with Gregory end weights.
//!
//! Times are measured from the pulse start.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::bath::{bcf, BathSpec};
use crate::dissipators::{markov_triplet, static_from, PulseSpec};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::generators::{dissipative_generator, to_interaction_frame};
use crate::operators::{
    commutator_generator, coupling_operator, free_propagator, gate_unitary, rotation_matrix, BlochState, Generator4,
    ModelSpec, Op2, C64, ZERO,
};

/// Number of cosine coefficients in the pulse parametrisation.
pub const N_COEFFS: usize = 7;
/// Box constraint `|a_n| <= COEFF_BOUND` used by the optimiser.
pub const COEFF_BOUND: f64 = 2.0;

/// Fourier-shaped x-pulse of total angle `theta` over `[0, duration]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseShape {
    pub theta: f64,
    pub duration: f64,
    pub a: Vec<f64>,
}

impl PulseShape {
    pub fn square(theta: f64, duration: f64) -> Self {
        PulseShape { theta, duration, a: Vec::new() }
    }

    pub fn from_spec(p: &PulseSpec) -> Result<Self> {
        p.validate()?;
        if p.is_instantaneous() {
            return Err(Error::config("a shaped pulse needs a finite duration"));
        }
        Ok(PulseShape { theta: p.theta, duration: p.duration(), a: p.fourier.clone().unwrap_or_default() })
    }

    pub fn with_coeffs(&self, a: &[f64]) -> Self {
        PulseShape { a: a.to_vec(), ..self.clone() }
    }

    pub fn omega_p(&self) -> f64 {
        self.theta / self.duration
    }

    /// Accumulated rotation angle `theta(t)`.
    pub fn angle(&self, t: f64) -> f64 {
        let x = PI * t / self.duration;
        self.omega_p() * t + self.a.iter().enumerate().map(|(i, an)| an * ((i + 1) as f64 * x).sin()).sum::<f64>()
    }

    /// Drive amplitude `eps(t) = d theta / dt`.
    pub fn epsilon(&self, t: f64) -> f64 {
        let x = PI * t / self.duration;
        self.omega_p()
            + self
                .a
                .iter()
                .enumerate()
                .map(|(i, an)| {
                    let k = (i + 1) as f64 * PI / self.duration;
                    an * k * ((i + 1) as f64 * x).cos()
                })
                .sum::<f64>()
    }
}

const GREGORY: [f64; 3] = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];

/// Weights of the closed Newton-Cotes rule on `k + 1` points, `k < 5`.
fn low_order_weights(k: usize) -> &'static [f64] {
    match k {
        1 => &[0.5, 0.5],
        2 => &[1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0],
        3 => &[3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0],
        4 => &[14.0 / 45.0, 64.0 / 45.0, 24.0 / 45.0, 64.0 / 45.0, 14.0 / 45.0],
        _ => &[],
    }
}

/// Precomputed bath and free-evolution data for gates on a fixed window and grid.
///
/// The grid is `t_k = k h`, `k = 0..=n` with `n` even, `h = duration / n`.
pub struct GateWorkspace {
    pub model: ModelSpec,
    pub a: Op2,
    pub duration: f64,
    pub h: f64,
    pub n: usize,
    corr: Vec<C64>,
    corr_hat: Vec<C64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `e^{-i H0 t_k}`
    free: Vec<Op2>,
    /// `e^{i H0 t_k} A e^{-i H0 t_k}`
    a_int: Vec<Op2>,
    /// `Lambda_SM - Lambda_static(t_k)`
    pre: Vec<Op2>,
}

impl std::fmt::Debug for GateWorkspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GateWorkspace").field("duration", &self.duration).field("n", &self.n).finish()
    }
}

impl GateWorkspace {
    /// `n` is rounded up to an even number of intervals.
    pub fn new(m: &ModelSpec, b: &BathSpec, a: &Op2, duration: f64, n: usize, exec: Exec) -> Result<Self> {
        m.validate()?;
        b.validate()?;
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::config(format!("gate duration must be positive, got {duration}")));
        }
        if !a.is_hermitian(1e-12 * a.max_abs().max(1.0)) {
            return Err(Error::config("coupling operator must be Hermitian"));
        }
        let n = (n.max(2) + 1) / 2 * 2;
        let h = duration / n as f64;
        let corr = exec.try_map_range(n + 1, |k| bcf(b, k as f64 * h))?;
        let len = (2 * (n + 1)).next_power_of_two();
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        let mut corr_hat = vec![ZERO; len];
        corr_hat[..=n].copy_from_slice(&corr);
        fwd.process(&mut corr_hat);

        let free: Vec<Op2> = (0..=n).map(|k| free_propagator(m, k as f64 * h)).collect();
        let a_int: Vec<Op2> = free.iter().map(|u| u.dagger() * *a * *u).collect();
        let lsm = if b.lambda2 == 0.0 { Op2::zero() } else { static_from(a, &markov_triplet(m, b)?) };
        let mut ws = GateWorkspace {
            model: *m,
            a: *a,
            duration,
            h,
            n,
            corr,
            corr_hat,
            fwd,
            inv,
            free,
            a_int,
            pre: Vec::new(),
        };
        let stat = ws.memory_integral(&ws.a_int);
        ws.pre = stat.iter().zip(&ws.free).map(|(i0, u)| lsm - u.conjugate(i0)).collect();
        Ok(ws)
    }

    /// Grid spacing chosen for a bath and gate: resolves `Delta`, `omega_c` and the pulse.
    pub fn default_steps(m: &ModelSpec, b: &BathSpec, duration: f64) -> usize {
        let h = (0.05 / m.delta).min(0.05 / b.omega_c).min(duration / 200.0);
        (duration / h).ceil() as usize
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    /// `h sum_j w_j C(t_k - t_j) f_j` for every `k`.
    fn convolve(&self, f: &[C64]) -> Vec<C64> {
        let n = self.n;
        let len = self.corr_hat.len();
        let mut buf = vec![ZERO; len];
        buf[..=n].copy_from_slice(f);
        self.fwd.process(&mut buf);
        for (x, c) in buf.iter_mut().zip(&self.corr_hat) {
            *x *= c;
        }
        self.inv.process(&mut buf);
        let scale = 1.0 / len as f64;
        let c = &self.corr;
        (0..=n)
            .map(|k| {
                if k < 5 {
                    let w = low_order_weights(k);
                    return w.iter().enumerate().map(|(j, wj)| c[k - j] * f[j] * *wj).sum::<C64>() * self.h;
                }
                let mut s = buf[k] * scale;
                for (i, g) in GREGORY.iter().enumerate() {
                    s += (c[k - i] * f[i] + c[i] * f[k - i]) * (g - 1.0);
                }
                s * self.h
            })
            .collect()
    }

    /// Entrywise `int_0^{t_k} C(t_k - tau) B(tau) d tau`.
    fn memory_integral(&self, b: &[Op2]) -> Vec<Op2> {
        let mut out = vec![Op2::zero(); self.n + 1];
        for r in 0..2 {
            for s in 0..2 {
                let f: Vec<C64> = b.iter().map(|x| x.0[r][s]).collect();
                for (o, v) in out.iter_mut().zip(self.convolve(&f)) {
                    o.0[r][s] = v;
                }
            }
        }
        out
    }

    /// Schrodinger-picture `Lambda(t_k)` during the shaped gate.
    pub fn lambda(&self, shape: &PulseShape) -> Vec<Op2> {
        let angles: Vec<f64> = (0..=self.n).map(|k| shape.angle(self.time(k))).collect();
        let rot: Vec<Op2> = angles.iter().map(|th| gate_unitary(*th)).collect();
        let b: Vec<Op2> = rot.iter().zip(&self.a_int).map(|(r, ai)| r.dagger().conjugate(ai)).collect();
        let mem = self.memory_integral(&b);
        (0..=self.n)
            .map(|k| {
                let w = self.free[k] * rot[k];
                let ur = w * self.free[k].dagger();
                ur.conjugate(&self.pre[k]) + w.conjugate(&mem[k])
            })
            .collect()
    }

    /// Interaction-picture dissipative generators on the grid.
    pub fn generators(&self, shape: &PulseShape) -> Result<Vec<Generator4>> {
        self.lambda(shape)
            .iter()
            .enumerate()
            .map(|(k, lam)| Ok(to_interaction_frame(&dissipative_generator(lam, &self.a)?, &self.model, self.time(k))))
            .collect()
    }

    /// Composite-Simpson `int_0^tau_p D^I(t) dt`.
    pub fn integrated_generator(&self, shape: &PulseShape) -> Result<Generator4> {
        let g = self.generators(shape)?;
        let mut acc = Generator4::zero();
        for (k, gk) in g.iter().enumerate() {
            let w = if k == 0 || k == self.n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += gk.scale(w);
        }
        Ok(acc.scale(self.h / 3.0))
    }

    /// Norm of the dissipation accumulated over the gate.
    pub fn objective(&self, shape: &PulseShape) -> Result<f64> {
        Ok(self.integrated_generator(shape)?.frobenius())
    }

    /// RK4 through the gate with step `2h`; returns interaction-picture states at `t_{2j}`.
    pub fn evolve(&self, shape: &PulseShape, initial: &BlochState) -> Result<Vec<[f64; 4]>> {
        let d = self.generators(shape)?;
        let g: Vec<Generator4> = d
            .iter()
            .enumerate()
            .map(|(k, dk)| *dk + commutator_generator(&Op2::sx().scale_re(0.5 * shape.epsilon(self.time(k)))))
            .collect();
        let step = 2.0 * self.h;
        let mut v = initial.to_vec4();
        let mut out = Vec::with_capacity(self.n / 2 + 1);
        out.push(v);
        for j in 0..self.n / 2 {
            let (g0, g1, g2) = (&g[2 * j], &g[2 * j + 1], &g[2 * j + 2]);
            let add = |x: &[f64; 4], y: &[f64; 4], s: f64| {
                [x[0] + s * y[0], x[1] + s * y[1], x[2] + s * y[2], x[3] + s * y[3]]
            };
            let k1 = g0.apply(&v);
            let k2 = g1.apply(&add(&v, &k1, 0.5 * step));
            let k3 = g1.apply(&add(&v, &k2, 0.5 * step));
            let k4 = g2.apply(&add(&v, &k3, step));
            for i in 1..4 {
                v[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::numerical(format!("gate evolution diverged at t = {}", self.time(2 * j + 2))));
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Interaction-picture state at the end of the gate.
    pub fn end_state(&self, shape: &PulseShape, initial: &BlochState) -> Result<BlochState> {
        let traj = self.evolve(shape, initial)?;
        Ok(BlochState::from_vec4(traj.last().expect("non-empty trajectory")))
    }

    /// First-order end state: the state is frozen in the frame co-rotating with the drive
    /// and the dissipator integrated against it.
    pub fn linearized_end_state(&self, shape: &PulseShape, initial: &BlochState) -> Result<BlochState> {
        let d = self.generators(shape)?;
        let v0 = initial.to_vec4();
        let mut acc = [0.0; 4];
        for (k, dk) in d.iter().enumerate() {
            let w = if k == 0 || k == self.n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let th = shape.angle(self.time(k));
            let back = rotation_matrix(&gate_unitary(-th));
            let fwd = rotation_matrix(&gate_unitary(th));
            let dv = back.matmul(dk).apply(&fwd.apply(&v0));
            for i in 0..4 {
                acc[i] += w * self.h / 3.0 * dv[i];
            }
        }
        let mut v = v0;
        for i in 1..4 {
            v[i] += acc[i];
        }
        Ok(BlochState::from_vec4(&rotation_matrix(&gate_unitary(shape.theta)).apply(&v)))
    }
}

/// `Lambda(t)` for a Fourier-shaped pulse with the coupling of `m`; `t` from the pulse start.
pub fn lambda_general_pulse(m: &ModelSpec, b: &BathSpec, p: &PulseSpec, t: f64) -> Result<Op2> {
    lambda_general_pulse_with(m, b, p, &coupling_operator(m), t)
}

/// As `lambda_general_pulse` for an arbitrary Hermitian coupling; the step is halved once
/// and the two results must agree to `1e-6` relative.
pub fn lambda_general_pulse_with(m: &ModelSpec, b: &BathSpec, p: &PulseSpec, a: &Op2, t: f64) -> Result<Op2> {
    if m.phi != 0.0 {
        return Err(Error::Unsupported("shaped-pulse dissipator is derived for phi = 0".into()));
    }
    let shape = PulseShape::from_spec(p)?;
    if !(0.0..=shape.duration * (1.0 + 1e-12)).contains(&t) {
        return Err(Error::config(format!("time {t} lies outside the pulse window [0, {}]", shape.duration)));
    }
    if t == 0.0 {
        let lsm = if b.lambda2 == 0.0 { Op2::zero() } else { static_from(a, &markov_triplet(m, b)?) };
        return Ok(lsm);
    }
    let h = (0.02 / m.delta).min(0.02 / b.omega_c);
    let n = ((t / h).ceil() as usize).max(2);
    let at = |n: usize| -> Result<Op2> {
        let ws = GateWorkspace::new(m, b, a, t, n, Exec::default())?;
        // the grid ends at t; the shape keeps its own clock
        let lam = ws.lambda(&shape);
        Ok(*lam.last().expect("non-empty grid"))
    };
    let coarse = at(n)?;
    let fine = at(2 * n)?;
    let err = (fine - coarse).max_abs();
    let scale = fine.max_abs().max(b.lambda2 * 1e-3);
    if err > 1e-6 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::numerical(format!("shaped-pulse quadrature did not converge at t = {t} (estimate {err:e})")));
    }
    Ok(fine)
}

/// Nelder-Mead settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptOptions {
    /// objective evaluations per start
    pub budget: usize,
    /// number of starts: the supplied one plus random points in the box
    pub restarts: usize,
    pub seed: u64,
    pub bound: f64,
    pub initial_step: f64,
    /// relative spread of simplex values at convergence
    pub ftol: f64,
    /// simplex diameter at convergence
    pub xtol: f64,
}

impl Default for OptOptions {
    fn default() -> Self {
        OptOptions { budget: 1500, restarts: 5, seed: 7, bound: COEFF_BOUND, initial_step: 0.25, ftol: 1e-9, xtol: 1e-5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub a: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// index of the start that produced the result
    pub start: usize,
}

/// Box-projected Nelder-Mead from `x0`.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &OptOptions) -> OptResult {
    let dim = x0.len();
    let clamp = |x: &mut Vec<f64>| {
        for v in x.iter_mut() {
            *v = v.clamp(-opts.bound, opts.bound);
        }
    };
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let mut start = x0.to_vec();
    clamp(&mut start);
    let f0 = eval(&start, &mut evals);
    simplex.push((start.clone(), f0));
    for i in 0..dim {
        let mut x = start.clone();
        x[i] += if x[i] + opts.initial_step <= opts.bound { opts.initial_step } else { -opts.initial_step };
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while evals < opts.budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        let spread = (worst - best).abs();
        let diam = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= opts.ftol * best.abs().max(f64::MIN_POSITIVE) && diam <= opts.xtol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / dim as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = centroid.iter().zip(&simplex[dim].0).map(|(c, w)| c + t * (c - w)).collect();
            clamp(&mut x);
            x
        };
        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = eval(&xe, &mut evals);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let x = along(rho * alpha);
            let fx = eval(&x, &mut evals);
            (x, fx)
        } else {
            let x = along(-rho);
            let fx = eval(&x, &mut evals);
            (x, fx)
        };
        if fc < fr.min(worst) {
            simplex[dim] = (xc, fc);
            continue;
        }
        let x0 = simplex[0].0.clone();
        for (x, fx) in simplex[1..].iter_mut() {
            for (v, b) in x.iter_mut().zip(&x0) {
                *v = b + sigma * (*v - b);
            }
            *fx = eval(x, &mut evals);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (a, objective) = simplex.swap_remove(0);
    OptResult { a, objective, iterations, evaluations: evals, converged, start: 0 }
}

/// Starting points: `init` followed by seeded uniform draws from the box.
pub fn starting_points(init: &[f64], opts: &OptOptions) -> Vec<Vec<f64>> {
    let mut starts = vec![init.to_vec()];
    for i in 1..opts.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(i as u64);
        starts.push((0..init.len()).map(|_| rng.gen_range(-opts.bound..=opts.bound)).collect());
    }
    starts
}

/// Minimise the gate objective over the cosine coefficients, restarts run through `exec`.
pub fn optimize(ws: &GateWorkspace, shape: &PulseShape, init: &[f64], opts: &OptOptions, exec: Exec) -> Result<OptResult> {
    if opts.budget < 100 {
        return Err(Error::config(format!("optimisation budget must be at least 100, got {}", opts.budget)));
    }
    if init.is_empty() || init.iter().any(|x| !x.is_finite()) {
        return Err(Error::config("initial coefficients must be finite and non-empty"));
    }
    let starts = starting_points(init, opts);
    let results = exec.map_range(starts.len(), |i| {
        let mut r = nelder_mead(|a| ws.objective(&shape.with_coeffs(a)).unwrap_or(f64::INFINITY), &starts[i], opts);
        r.start = i;
        r
    });
    let best = results
        .into_iter()
        .min_by(|a, b| a.objective.total_cmp(&b.objective).then(a.start.cmp(&b.start)))
        .expect("at least one start");
    if !best.objective.is_finite() {
        return Err(Error::numerical("objective was not finite at any explored point"));
    }
    Ok(best)
}
