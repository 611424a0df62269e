//! Pulse-length sweeps that locate the relaxation and dephasing crossovers.
//!
//! Every finite pulse is compared with a Markovian run using the same pulse,
//! so dissipation during the gate itself is not mistaken for memory effects.
//! Post-gate times are measured from the end of the pulse.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bath::BathSpec;
use crate::dissipators::PulseSpec;
use crate::error::{Error, Result};
use crate::evolve::{asymptotic_state, integrate_with, relaxation_delay, Protocol, SimConfig, Trajectory};
use crate::exec::Exec;
use crate::generators::markov_rates;
use crate::operators::ModelSpec;

/// Step for a run: resolves the drive and never exceeds `cap`.
pub fn sweep_dt(p: &PulseSpec, cap: f64) -> f64 {
    let wp = p.omega_p();
    if wp.is_finite() && wp != 0.0 {
        (0.02 * 2.0 * PI / wp.abs()).min(cap)
    } else {
        cap
    }
}

fn run(m: &ModelSpec, b: &BathSpec, p: PulseSpec, protocol: Protocol, after: f64, dt_cap: f64) -> Result<Trajectory> {
    let mut c = SimConfig::new(*m, *b, p.clone(), protocol, p.duration() + after);
    c.dt = sweep_dt(&p, dt_cap);
    integrate_with(&c, Exec::Sequential)
}

/// First `x` where `y` falls to `level`, linear in `ln x` between samples.
pub fn first_crossing(xs: &[f64], ys: &[f64], level: f64) -> Option<f64> {
    for i in 1..xs.len().min(ys.len()) {
        let (y0, y1) = (ys[i - 1], ys[i]);
        if y0 > level && y1 <= level {
            let f = (y0 - level) / (y0 - y1);
            let (l0, l1) = (xs[i - 1].ln(), xs[i].ln());
            return Some((l0 + f * (l1 - l0)).exp());
        }
    }
    None
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayPoint {
    pub tau_p: f64,
    pub delay: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelaySweep {
    /// delay of the instantaneous gate on a factorized state
    pub factorized: f64,
    pub instant_dp: f64,
    pub points: Vec<DelayPoint>,
    /// pulse length where the delay drops to half the factorized value
    pub crossover: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayOptions {
    pub theta: f64,
    /// fit window after the gate
    pub window: (f64, f64),
    pub dt_cap: f64,
}

impl Default for DelayOptions {
    fn default() -> Self {
        DelayOptions { theta: PI, window: (50.0, 200.0), dt_cap: 0.05 }
    }
}

/// Relaxation delay of the dynamically prepared state against pulse length.
pub fn relaxation_delay_sweep(m: &ModelSpec, b: &BathSpec, taus: &[f64], opts: DelayOptions, exec: Exec) -> Result<DelaySweep> {
    if taus.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::config("sweep pulse lengths must be positive"));
    }
    let rates = markov_rates(m, b)?;
    let nz_inf = asymptotic_state(m, b)?.n[2];
    let after = opts.window.1 + 50.0;
    let inst = PulseSpec::instantaneous(opts.theta);
    let reference = run(m, b, inst.clone(), Protocol::Markov, after, opts.dt_cap)?;
    let delay = |tr: &Trajectory, rf: &Trajectory| relaxation_delay(tr, rf, nz_inf, rates.t1_inv, opts.window);
    let factorized = delay(&run(m, b, inst.clone(), Protocol::Factorized, after, opts.dt_cap)?, &reference)?;
    let instant_dp = delay(&run(m, b, inst, Protocol::InstantDp, after, opts.dt_cap)?, &reference)?;
    let points = exec.try_map(taus, |tp| {
        let p = PulseSpec::square(opts.theta, *tp);
        let tr = run(m, b, p.clone(), Protocol::Pulse, after, opts.dt_cap)?;
        let rf = run(m, b, p, Protocol::Markov, after, opts.dt_cap)?;
        Ok::<_, Error>(DelayPoint { tau_p: *tp, delay: delay(&tr, &rf)? })
    })?;
    let xs: Vec<f64> = points.iter().map(|p| p.tau_p).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.delay).collect();
    let crossover = first_crossing(&xs, &ys, 0.5 * factorized);
    Ok(DelaySweep { factorized, instant_dp, points, crossover })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherencePoint {
    pub tau_p: f64,
    /// `|n_perp|` of the dynamically prepared run at each probe time
    pub prepared: Vec<f64>,
    /// same-pulse Markovian reference
    pub markov: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceSweep {
    pub probe_times: Vec<f64>,
    /// instantaneous gate, factorized start
    pub factorized: Vec<f64>,
    /// instantaneous gate, Markovian
    pub markov_instant: Vec<f64>,
    pub points: Vec<CoherencePoint>,
    /// pulse length where the mean gap to the Markov curve halves
    pub crossover: Option<f64>,
}

impl CoherenceSweep {
    /// Mean Markov-minus-prepared gap per pulse length.
    pub fn gaps(&self) -> Vec<f64> {
        self.points.iter().map(|p| mean_gap(&p.markov, &p.prepared)).collect()
    }

    pub fn instant_gap(&self) -> f64 {
        mean_gap(&self.markov_instant, &self.factorized)
    }
}

fn mean_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x - y).sum::<f64>() / a.len().max(1) as f64
}

fn perp_at(tr: &Trajectory, t: f64) -> f64 {
    let i = tr.times.partition_point(|x| *x < tr.gate_end + t - 1e-9).min(tr.len() - 1);
    tr.bloch[i].perp()
}

/// Post-gate coherence against pulse length at fixed probe times.
pub fn coherence_crossover_sweep(
    m: &ModelSpec,
    b: &BathSpec,
    theta: f64,
    taus: &[f64],
    probe_times: &[f64],
    dt_cap: f64,
    exec: Exec,
) -> Result<CoherenceSweep> {
    if taus.iter().any(|t| !(*t > 0.0)) || probe_times.is_empty() || probe_times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::config("coherence sweep needs positive pulse lengths and non-negative probe times"));
    }
    let after = probe_times.iter().cloned().fold(0.0, f64::max) + 1.0;
    let probe = |tr: &Trajectory| probe_times.iter().map(|t| perp_at(tr, *t)).collect::<Vec<f64>>();
    let inst = PulseSpec::instantaneous(theta);
    let factorized = probe(&run(m, b, inst.clone(), Protocol::Factorized, after, dt_cap)?);
    let markov_instant = probe(&run(m, b, inst, Protocol::Markov, after, dt_cap)?);
    let points = exec.try_map(taus, |tp| {
        let p = PulseSpec::square(theta, *tp);
        let prepared = probe(&run(m, b, p.clone(), Protocol::Pulse, after, dt_cap)?);
        let markov = probe(&run(m, b, p, Protocol::Markov, after, dt_cap)?);
        Ok::<_, Error>(CoherencePoint { tau_p: *tp, prepared, markov })
    })?;
    let mut sweep = CoherenceSweep { probe_times: probe_times.to_vec(), factorized, markov_instant, points, crossover: None };
    let xs: Vec<f64> = sweep.points.iter().map(|p| p.tau_p).collect();
    sweep.crossover = first_crossing(&xs, &sweep.gaps(), 0.5 * sweep.instant_gap());
    Ok(sweep)
}
