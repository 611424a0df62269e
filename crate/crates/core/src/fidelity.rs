//! Phase fidelity against pure targets on the Bloch sphere.
//!
//! `F = 1 - D(rho, rho_t)` with `D` the trace distance. For a pure target
//! `n_t` this is `1 - |n - n_t| / 2`, maximised by the target along `n`, so
//! `F_max = 1 - |1 - |n|| / 2`. Scans evaluate the state at the end of the
//! pulse in the interaction picture of `H0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{integrate_with, pre_gate_state, Frame, SimConfig};
use crate::exec::Exec;
use crate::operators::{devectorize, gate_unitary, rotation_matrix, BlochState, Op2};

/// `D = (1/2) sum |eig(rho - target)|`, equal to half the sum of singular values.
pub fn trace_distance(rho: &Op2, target: &Op2) -> f64 {
    let d = *rho - *target;
    let h = (d + d.dagger()).scale_re(0.5);
    let [a, b] = h.hermitian_eigenvalues();
    0.5 * (a.abs() + b.abs())
}

pub fn fidelity(rho: &Op2, target: &Op2) -> f64 {
    1.0 - trace_distance(rho, target)
}

/// Pure state with polar angle `theta` and azimuth `phi`.
pub fn target_state(theta: f64, phi: f64) -> BlochState {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    BlochState::new(st * cp, st * sp, ct)
}

/// `1 - |n - n_t| / 2` for a pure target.
pub fn bloch_fidelity(n: &BlochState, target: &BlochState) -> f64 {
    1.0 - 0.5 * (0..3).map(|i| (n.n[i] - target.n[i]).powi(2)).sum::<f64>().sqrt()
}

/// Largest fidelity over all pure targets.
pub fn max_fidelity(n: &BlochState) -> f64 {
    1.0 - 0.5 * (1.0 - n.norm()).abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapResolution {
    pub n_theta: usize,
    pub n_phi: usize,
    /// angular tolerance of the refinement
    pub tol: f64,
}

impl Default for MapResolution {
    fn default() -> Self {
        MapResolution { n_theta: 181, n_phi: 361, tol: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityMap {
    pub theta_grid: Vec<f64>,
    pub phi_grid: Vec<f64>,
    /// `values[i][j]` at `(theta_grid[i], phi_grid[j])`
    pub values: Vec<Vec<f64>>,
    pub f_max: f64,
    pub theta_m: f64,
    pub phi_m: f64,
}

impl FidelityMap {
    /// Values below `ratio * f_max` raised to that floor.
    pub fn clipped(&self, ratio: f64) -> Vec<Vec<f64>> {
        let floor = ratio * self.f_max;
        self.values.iter().map(|row| row.iter().map(|v| v.max(floor)).collect()).collect()
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Grid evaluation over `theta in [0, pi]`, `phi in (-pi, pi]` followed by
/// alternating golden-section refinement around the grid maximum.
pub fn fidelity_map(rho: &Op2, res: MapResolution, exec: Exec) -> Result<FidelityMap> {
    if res.n_theta < 2 || res.n_phi < 2 || !(res.tol > 0.0) {
        return Err(Error::config("fidelity map needs at least 2x2 points and a positive tolerance"));
    }
    let pi = std::f64::consts::PI;
    let theta_grid: Vec<f64> = (0..res.n_theta).map(|i| pi * i as f64 / (res.n_theta - 1) as f64).collect();
    let phi_grid: Vec<f64> = (0..res.n_phi).map(|j| -pi + 2.0 * pi * (j + 1) as f64 / res.n_phi as f64).collect();
    let at = |th: f64, ph: f64| fidelity(rho, &devectorize(&target_state(th, ph)));
    let values: Vec<Vec<f64>> = exec.map(&theta_grid, |th| phi_grid.iter().map(|ph| at(*th, *ph)).collect());

    let (mut bi, mut bj) = (0, 0);
    for (i, row) in values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if *v > values[bi][bj] {
                bi = i;
                bj = j;
            }
        }
    }
    let dth = theta_grid[1] - theta_grid[0];
    let dph = phi_grid[1] - phi_grid[0];
    let (mut th, mut ph) = (theta_grid[bi], phi_grid[bj]);
    for _ in 0..50 {
        let th_new = golden_max(|x| at(x, ph), (th - dth).max(0.0), (th + dth).min(pi), res.tol);
        let ph_new = golden_max(|y| at(th_new, y), ph - dph, ph + dph, res.tol);
        let moved = (th_new - th).abs().max((ph_new - ph).abs());
        th = th_new;
        ph = ph_new;
        if moved < res.tol {
            break;
        }
    }
    let ph = if ph <= -pi { ph + 2.0 * pi } else if ph > pi { ph - 2.0 * pi } else { ph };
    let refined = at(th, ph);
    let f_max = refined.max(values[bi][bj]);
    let (theta_m, phi_m) = if refined >= values[bi][bj] { (th, ph) } else { (theta_grid[bi], phi_grid[bj]) };
    Ok(FidelityMap { theta_grid, phi_grid, values, f_max, theta_m, phi_m })
}

/// One point of a rotation-angle scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub theta: f64,
    pub tau_p: f64,
    /// fidelity to the ideally rotated pre-gate state
    pub fidelity: f64,
    pub f_max: f64,
    pub theta_m: f64,
    pub phi_m: f64,
    pub state: BlochState,
}

/// End-of-pulse interaction-picture state of `cfg` with the gate angle and duration replaced.
pub fn end_of_pulse(template: &SimConfig, theta: f64, tau_p: f64, exec: Exec) -> Result<ScanPoint> {
    let mut cfg = template.clone();
    cfg.pulse.theta = theta;
    cfg.pulse.tau_p2 = cfg.pulse.tau_p1 + tau_p;
    cfg.t_end = tau_p;
    cfg.frame = Frame::Interaction;
    cfg.record_stride = usize::MAX;
    let traj = integrate_with(&cfg, exec)?;
    let n = *traj.bloch.last().expect("trajectory has samples");
    let pre = pre_gate_state(&cfg)?;
    let ideal = BlochState::from_vec4(&rotation_matrix(&gate_unitary(theta)).apply(&pre.to_vec4()));
    let norm = ideal.norm();
    let target = if norm > 0.0 { BlochState::new(ideal.n[0] / norm, ideal.n[1] / norm, ideal.n[2] / norm) } else { BlochState::ground() };
    let (theta_m, phi_m) = angles(&n);
    Ok(ScanPoint { theta, tau_p, fidelity: bloch_fidelity(&n, &target), f_max: max_fidelity(&n), theta_m, phi_m, state: n })
}

fn angles(n: &BlochState) -> (f64, f64) {
    let r = n.norm();
    if r == 0.0 {
        return (0.0, 0.0);
    }
    ((n.n[2] / r).clamp(-1.0, 1.0).acos(), n.n[1].atan2(n.n[0]))
}

/// Fidelity at the end of the pulse for each rotation angle.
pub fn fidelity_scan_theta(template: &SimConfig, thetas: &[f64], exec: Exec) -> Result<Vec<ScanPoint>> {
    let tp = template.pulse.duration();
    exec.try_map(thetas, |th| end_of_pulse(template, *th, tp, Exec::Sequential))
}

/// `surface[i][j]` at `(taus[i], thetas[j])`.
pub fn fidelity_scan_tp_theta(template: &SimConfig, taus: &[f64], thetas: &[f64], exec: Exec) -> Result<Vec<Vec<ScanPoint>>> {
    let nt = thetas.len();
    let flat = exec.try_map_range(taus.len() * nt, |k| end_of_pulse(template, thetas[k % nt], taus[k / nt], Exec::Sequential))?;
    Ok(flat.chunks(nt.max(1)).map(|c| c.to_vec()).collect())
}
