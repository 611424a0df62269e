//! Bath correlation functions and time-dependent spectral densities.
//!
//! `Gamma_omega(t) = int_0^t e^{i omega tau} C(tau) d tau = J_omega(t) + i S_omega(t)`
//! for a (sub-)Ohmic spectral density `J(w) = 2 pi lambda^2 w^s w_c^{1-s} e^{-w/w_c}`.
//!
//! At zero temperature `C(tau) = 2 lambda^2 w_c^{1-s} Gamma(s+1) (1/w_c + i tau)^{-s-1}`
//! and `Gamma_omega(t)` has a closed form in the scaled incomplete gamma
//! function. The thermal part of `C` is expanded in the Bose series
//! `coth(x/2) - 1 = 2 sum_k e^{-k x}`, which gives
//! `C_T(tau) = 4 lambda^2 w_c^{1-s} Gamma(s+1) sum_{k>=1} Re (p_k - i tau)^{-s-1}`
//! with `p_k = 1/w_c + k beta`; the sum is truncated at `K` and closed with an
//! Euler-Maclaurin tail.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::operators::{c, cis, C64, I, ZERO};
use crate::quad;
use crate::special::{gamma, scaled_upper_gamma};

/// Coupling `lambda2`, spectral exponent `s`, cutoff `omega_c`, temperature `k_B T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    pub lambda2: f64,
    pub s: f64,
    pub omega_c: f64,
    pub temperature: f64,
}

impl BathSpec {
    pub fn new(lambda2: f64, s: f64, omega_c: f64, temperature: f64) -> Result<Self> {
        let b = BathSpec { lambda2, s, omega_c, temperature };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda2 >= 0.0
            && self.s > 0.0
            && self.omega_c > 0.0
            && self.temperature >= 0.0
            && [self.lambda2, self.s, self.omega_c, self.temperature].iter().all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!(
                "bath requires lambda2 >= 0, s > 0, omega_c > 0, T >= 0; got {self:?}"
            )))
        }
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    pub fn is_zero_temperature(&self) -> bool {
        self.temperature == 0.0
    }

    /// Same bath with unit coupling; every spectral quantity scales linearly in `lambda2`.
    pub fn unit_coupling(&self) -> BathSpec {
        BathSpec { lambda2: 1.0, ..*self }
    }

    fn prefactor(&self) -> f64 {
        2.0 * self.lambda2 * self.omega_c.powf(1.0 - self.s) * gamma(self.s + 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct SpectralValue {
    pub j: f64,
    pub s: f64,
}

impl SpectralValue {
    pub fn complex(&self) -> C64 {
        c(self.j, self.s)
    }
    pub fn from_complex(z: C64) -> Self {
        SpectralValue { j: z.re, s: z.im }
    }
}

/// Zero-temperature spectral density `J(omega)`.
pub fn spectral_density(b: &BathSpec, omega: f64) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    2.0 * PI * b.lambda2 * omega.powf(b.s) * b.omega_c.powf(1.0 - b.s) * (-omega / b.omega_c).exp()
}

/// Bose occupation `1/(e^{beta w} - 1)`.
pub fn bose(b: &BathSpec, omega: f64) -> f64 {
    if b.is_zero_temperature() {
        return 0.0;
    }
    1.0 / (b.beta() * omega).exp_m1()
}

/// Converged `Gamma_omega(t -> inf)`.
///
/// At finite temperature and `s < 1` the zero-frequency rate diverges and
/// `J` is returned as `+inf`.
pub fn spectral_asymptotic(b: &BathSpec, omega: f64) -> Result<SpectralValue> {
    b.validate()?;
    if b.lambda2 == 0.0 {
        return Ok(SpectralValue::default());
    }
    let zero_t = zero_t_asymptotic(b, omega)?;
    if b.is_zero_temperature() {
        return Ok(zero_t);
    }
    let thermal = thermal_asymptotic(b, omega)?;
    Ok(SpectralValue { j: zero_t.j + thermal.j, s: zero_t.s + thermal.s })
}

/// `-omega/omega_c` placed on the side of the cut fixed by `omega + i0`.
fn w0(b: &BathSpec, omega: f64) -> C64 {
    let x = -omega / b.omega_c;
    if omega > 0.0 {
        c(x, -0.0)
    } else {
        c(x, 0.0)
    }
}

const OMEGA_ZERO: f64 = 1e-12;

fn zero_t_asymptotic(b: &BathSpec, omega: f64) -> Result<SpectralValue> {
    if omega.abs() <= OMEGA_ZERO * b.omega_c {
        // -2 i lambda^2 w_c Gamma(s)
        return Ok(SpectralValue { j: 0.0, s: -2.0 * b.lambda2 * b.omega_c * gamma(b.s) });
    }
    let q = scaled_upper_gamma(c(-b.s, 0.0), w0(b, omega))?;
    let pref = b.prefactor() * b.omega_c.powf(b.s);
    Ok(SpectralValue { j: spectral_density(b, omega), s: -pref * q.re })
}

const BOSE_TERMS: usize = 48;

fn thermal_asymptotic(b: &BathSpec, omega: f64) -> Result<SpectralValue> {
    let beta = b.beta();
    let s = b.s;
    let w = omega.abs();
    let j = if w <= OMEGA_ZERO * b.omega_c {
        if s > 1.0 {
            0.0
        } else if s == 1.0 {
            2.0 * PI * b.lambda2 / beta
        } else {
            f64::INFINITY
        }
    } else {
        let jn = 2.0 * PI * b.lambda2 * w.powf(s) * b.omega_c.powf(1.0 - s) * (-w / b.omega_c).exp();
        jn * bose(b, w)
    };
    if omega.abs() <= OMEGA_ZERO * b.omega_c {
        return Ok(SpectralValue { j, s: 0.0 });
    }
    // S_T = 2 pref sum_k (1/2) p_k^{-s} Re[Q(-s, w p_k) - Q(-s, -w p_k)], pref = 2 lambda^2 w_c^{1-s} Gamma(s+1)
    let a = c(-s, 0.0);
    let h = |p: f64, sign: f64| -> Result<f64> {
        let z = sign * omega * p;
        Ok(p.powf(-s) * scaled_upper_gamma(a, c(z, 0.0))?.re)
    };
    let g = |p: f64| -> Result<f64> { Ok(0.5 * (h(p, 1.0)? - h(p, -1.0)?)) };
    let p_of = |k: f64| 1.0 / b.omega_c + k * beta;
    let mut sum = 0.0;
    for k in 1..BOSE_TERMS {
        sum += g(p_of(k as f64))?;
    }
    // Euler-Maclaurin tail from K; with h(p) = p^{-s} Q(-s, w p):
    // h' = w h - p^{-s-1}, h'' = w h' + (s+1) p^{-s-2}, h''' = w h'' - (s+1)(s+2) p^{-s-3}
    let pk = p_of(BOSE_TERMS as f64);
    let derivs = |sign: f64| -> Result<[f64; 4]> {
        let wv = sign * omega;
        let h0 = h(pk, sign)?;
        let h1 = wv * h0 - pk.powf(-s - 1.0);
        let h2 = wv * h1 + (s + 1.0) * pk.powf(-s - 2.0);
        let h3 = wv * h2 - (s + 1.0) * (s + 2.0) * pk.powf(-s - 3.0);
        Ok([h0, h1, h2, h3])
    };
    let dp = derivs(1.0)?;
    let dm = derivs(-1.0)?;
    let gk: Vec<f64> = (0..4).map(|i| 0.5 * (dp[i] - dm[i])).collect();
    // int_{p_K}^inf g dp = [2 p_K^{-s}/s - h_+(p_K) - h_-(p_K)] / (2 w), from h' = w h - p^{-s-1}
    let integral = (2.0 * pk.powf(-s) / s - dp[0] - dm[0]) / (2.0 * beta * omega);
    let tail = integral + 0.5 * gk[0] - beta * gk[1] / 12.0 + beta.powi(3) * gk[3] / 720.0;
    sum += tail;
    Ok(SpectralValue { j, s: 2.0 * b.prefactor() * sum })
}

/// Zero-temperature correlation function.
pub fn bcf_zero_t(b: &BathSpec, tau: f64) -> C64 {
    b.prefactor() * c(1.0 / b.omega_c, tau).powf(-b.s - 1.0)
}

/// Thermal part of the correlation function (real and even in `tau`).
pub fn bcf_thermal(b: &BathSpec, tau: f64) -> f64 {
    if b.is_zero_temperature() || b.lambda2 == 0.0 {
        return 0.0;
    }
    let beta = b.beta();
    let s = b.s;
    let p_of = |k: f64| 1.0 / b.omega_c + k * beta;
    let f = |k: f64, m: f64| c(p_of(k), -tau).powf(-m).re;
    let mut sum = 0.0;
    for k in 1..BOSE_TERMS {
        sum += f(k as f64, s + 1.0);
    }
    let kk = BOSE_TERMS as f64;
    let integral = f(kk, s) / (s * beta);
    let d1 = -(s + 1.0) * beta * f(kk, s + 2.0);
    let d3 = -(s + 1.0) * (s + 2.0) * (s + 3.0) * beta.powi(3) * f(kk, s + 4.0);
    sum += integral + 0.5 * f(kk, s + 1.0) - d1 / 12.0 + d3 / 720.0;
    2.0 * b.prefactor() * sum
}

/// Bath correlation function `C(tau)`, with `C(-tau) = C(tau)*`.
pub fn bcf(b: &BathSpec, tau: f64) -> Result<C64> {
    b.validate()?;
    Ok(bcf_zero_t(b, tau) + bcf_thermal(b, tau))
}

/// Zero-temperature `Gamma_omega(t)` in closed form.
pub fn gamma_t_zero_t(b: &BathSpec, omega: f64, t: f64) -> Result<C64> {
    if t == 0.0 || b.lambda2 == 0.0 {
        return Ok(ZERO);
    }
    let wc = b.omega_c;
    let s = b.s;
    let u = c(1.0, wc * t);
    if omega.abs() <= OMEGA_ZERO * wc {
        return Ok(-2.0 * I * b.lambda2 * wc * gamma(s) * (1.0 - u.powf(-s)));
    }
    let a = c(-s, 0.0);
    let z0 = w0(b, omega);
    let x = -omega / wc;
    // w1 = w0 - i omega t, kept on the same side of the cut as w0
    let z1 = c(x, x * wc * t);
    let q0 = scaled_upper_gamma(a, z0)?;
    let q1 = scaled_upper_gamma(a, z1)?;
    let pref = -I * b.prefactor() * wc.powf(s);
    Ok(pref * (q0 - cis(omega * t) * u.powf(-s) * q1))
}

/// `Gamma_omega(t)`; finite temperatures add the Bose-series part by quadrature.
pub fn gamma_t(b: &BathSpec, omega: f64, t: f64) -> Result<SpectralValue> {
    b.validate()?;
    if t < 0.0 || !t.is_finite() {
        return Err(Error::config(format!("gamma_t requires finite t >= 0, got {t}")));
    }
    let mut g = gamma_t_zero_t(b, omega, t)?;
    if !b.is_zero_temperature() && t > 0.0 {
        g += thermal_integral(b, omega, 0.0, t)?;
    }
    Ok(SpectralValue::from_complex(g))
}

fn thermal_integral(b: &BathSpec, omega: f64, t0: f64, t1: f64) -> Result<C64> {
    let scale = b.prefactor().max(1e-300);
    quad::integrate(|tau| cis(omega * tau) * bcf_thermal(b, tau), t0, t1, 1e-14 * scale, 1e-11)
}

/// `Gamma_omega(t1) - Gamma_omega(t2)`.
pub fn delta_gamma(b: &BathSpec, omega: f64, t1: f64, t2: f64) -> Result<SpectralValue> {
    if !(t1 >= t2 && t2 >= 0.0) {
        return Err(Error::config(format!("delta_gamma requires t1 >= t2 >= 0, got {t1}, {t2}")));
    }
    let g1 = gamma_t(b, omega, t1)?.complex();
    let g2 = gamma_t(b, omega, t2)?.complex();
    Ok(SpectralValue::from_complex(g1 - g2))
}

/// Uniform time grid `t0 + j h`, `j = 0..=n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub t0: f64,
    pub h: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(t0: f64, h: f64, n: usize) -> Self {
        Grid { t0, h, n }
    }
    pub fn at(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.h
    }
}

/// Thermal correlation sampled at three Gauss points per grid interval; shared by every frequency.
#[derive(Clone, Debug)]
pub struct ThermalKernel {
    grid: Grid,
    nodes: Vec<[f64; 3]>,
}

impl ThermalKernel {
    pub fn build(b: &BathSpec, grid: Grid, exec: Exec) -> Self {
        let nodes = exec.map_range(grid.n, |j| {
            let a = grid.at(j);
            let mut v = [0.0; 3];
            for (slot, (x, _)) in v.iter_mut().zip(quad::GL3.iter()) {
                *slot = bcf_thermal(b, a + x * grid.h);
            }
            v
        });
        ThermalKernel { grid, nodes }
    }
}

/// `Gamma_omega` tabulated on a uniform grid.
#[derive(Clone, Debug)]
pub struct GammaTable {
    pub omega: f64,
    pub grid: Grid,
    values: Vec<C64>,
}

impl GammaTable {
    /// Build the table; `kernel` must be supplied (on the same grid) at finite temperature.
    pub fn build(b: &BathSpec, omega: f64, grid: Grid, kernel: Option<&ThermalKernel>, exec: Exec) -> Result<Self> {
        if grid.t0 < 0.0 || grid.h <= 0.0 {
            return Err(Error::config("gamma table grid must start at t0 >= 0 with h > 0"));
        }
        let mut values = exec.try_map_range(grid.n + 1, |j| gamma_t_zero_t(b, omega, grid.at(j)))?;
        if !b.is_zero_temperature() && b.lambda2 > 0.0 {
            let k = kernel.ok_or_else(|| Error::config("finite-temperature table needs a thermal kernel"))?;
            if k.grid != grid {
                return Err(Error::config("thermal kernel grid does not match table grid"));
            }
            let mut acc = if grid.t0 > 0.0 { thermal_integral(b, omega, 0.0, grid.t0)? } else { ZERO };
            values[0] += acc;
            for (j, nodes) in k.nodes.iter().enumerate() {
                let a = grid.at(j);
                let mut piece = ZERO;
                for (cv, (x, w)) in nodes.iter().zip(quad::GL3.iter()) {
                    piece += cis(omega * (a + x * grid.h)) * (cv * w);
                }
                acc += piece * grid.h;
                values[j + 1] += acc;
            }
        }
        Ok(GammaTable { omega, grid, values })
    }

    pub fn get(&self, j: usize) -> C64 {
        self.values[j]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
