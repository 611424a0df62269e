//! 2x2 operator algebra, the Bloch basis and the superoperator transform.
//!
//! Conventions: `H0 = -(delta/2) sigma_z`, so `|0>` is the ground state with
//! `n_z = +1`. `sigma_+ = |0><1| = (sigma_x + i sigma_y)/2`. Superoperators act
//! on column-stacked density matrices, basis `|0><0|, |1><0|, |0><1|, |1><1|`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Unit-modulus phase `e^{i x}`.
#[inline]
pub fn cis(x: f64) -> C64 {
    let (s, co) = x.sin_cos();
    C64::new(co, s)
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Op2(pub [[C64; 2]; 2]);

impl Op2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Op2([[a, b], [c, d]])
    }
    pub fn zero() -> Self {
        Op2([[ZERO; 2]; 2])
    }
    pub fn identity() -> Self {
        Op2::new(ONE, ZERO, ZERO, ONE)
    }
    pub fn sx() -> Self {
        Op2::new(ZERO, ONE, ONE, ZERO)
    }
    pub fn sy() -> Self {
        Op2::new(ZERO, -I, I, ZERO)
    }
    pub fn sz() -> Self {
        Op2::new(ONE, ZERO, ZERO, -ONE)
    }
    pub fn splus() -> Self {
        Op2::new(ZERO, ONE, ZERO, ZERO)
    }
    pub fn sminus() -> Self {
        Op2::new(ZERO, ZERO, ONE, ZERO)
    }
    /// `a0 I + ax sx + ay sy + az sz`
    pub fn from_pauli(a0: C64, ax: C64, ay: C64, az: C64) -> Self {
        Op2::new(a0 + az, ax - I * ay, ax + I * ay, a0 - az)
    }
    /// Components `(a0, ax, ay, az)` with `M = a0 I + a.sigma`.
    pub fn pauli_components(&self) -> [C64; 4] {
        let m = &self.0;
        [
            (m[0][0] + m[1][1]) * 0.5,
            (m[0][1] + m[1][0]) * 0.5,
            (m[1][0] - m[0][1]) * 0.5 * (-I),
            (m[0][0] - m[1][1]) * 0.5,
        ]
    }
    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Op2::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }
    pub fn conj(&self) -> Self {
        let m = &self.0;
        Op2::new(m[0][0].conj(), m[0][1].conj(), m[1][0].conj(), m[1][1].conj())
    }
    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }
    pub fn scale(&self, k: C64) -> Self {
        let m = &self.0;
        Op2::new(m[0][0] * k, m[0][1] * k, m[1][0] * k, m[1][1] * k)
    }
    pub fn scale_re(&self, k: f64) -> Self {
        self.scale(C64::new(k, 0.0))
    }
    /// `self * x * self^dagger`
    pub fn conjugate(&self, x: &Op2) -> Op2 {
        *self * *x * self.dagger()
    }
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }
    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }
    pub fn is_hermitian(&self, tol: f64) -> bool {
        (*self - self.dagger()).max_abs() <= tol
    }
    /// Eigenvalues of a Hermitian matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let m = &self.0;
        let a = m[0][0].re;
        let d = m[1][1].re;
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + m[0][1].norm_sqr()).sqrt();
        [mean - r, mean + r]
    }
    /// `exp(-i (angle/2) n.sigma)` for a unit axis `n`.
    pub fn su2(angle: f64, axis: [f64; 3]) -> Self {
        let (s, co) = (0.5 * angle).sin_cos();
        let [nx, ny, nz] = axis;
        Op2::new(
            c(co, -s * nz),
            c(-s * ny, -s * nx),
            c(s * ny, -s * nx),
            c(co, s * nz),
        )
    }
    pub fn rx(angle: f64) -> Self {
        Op2::su2(angle, [1.0, 0.0, 0.0])
    }
}

impl Add for Op2 {
    type Output = Op2;
    fn add(self, o: Op2) -> Op2 {
        let (a, b) = (&self.0, &o.0);
        Op2::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl AddAssign for Op2 {
    fn add_assign(&mut self, o: Op2) {
        *self = *self + o;
    }
}

impl Sub for Op2 {
    type Output = Op2;
    fn sub(self, o: Op2) -> Op2 {
        self + (-o)
    }
}

impl Neg for Op2 {
    type Output = Op2;
    fn neg(self) -> Op2 {
        self.scale_re(-1.0)
    }
}

impl Mul for Op2 {
    type Output = Op2;
    fn mul(self, o: Op2) -> Op2 {
        let (a, b) = (&self.0, &o.0);
        Op2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Mul<C64> for Op2 {
    type Output = Op2;
    fn mul(self, k: C64) -> Op2 {
        self.scale(k)
    }
}

impl Mul<f64> for Op2 {
    type Output = Op2;
    fn mul(self, k: f64) -> Op2 {
        self.scale_re(k)
    }
}

/// Qubit splitting, longitudinal/transverse coupling ratio and transverse phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub delta: f64,
    pub xi: f64,
    pub phi: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec { delta: 1.0, xi: 0.0, phi: 0.0 }
    }
}

impl ModelSpec {
    pub fn new(delta: f64, xi: f64, phi: f64) -> Result<Self> {
        let m = ModelSpec { delta, xi, phi };
        m.validate()?;
        Ok(m)
    }
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::config(format!("delta must be positive, got {}", self.delta)));
        }
        if !self.xi.is_finite() || !self.phi.is_finite() {
            return Err(Error::config("xi and phi must be finite"));
        }
        Ok(())
    }
    pub fn hamiltonian(&self) -> Op2 {
        Op2::sz().scale_re(-0.5 * self.delta)
    }
}

/// `A = (sigma_x cos phi + sigma_y sin phi + xi sigma_z) / 2`
pub fn coupling_operator(m: &ModelSpec) -> Op2 {
    let (s, co) = m.phi.sin_cos();
    Op2::from_pauli(ZERO, c(0.5 * co, 0.0), c(0.5 * s, 0.0), c(0.5 * m.xi, 0.0))
}

/// System operator coupled to the bath.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// `coupling_operator(m)`
    #[default]
    Model,
    /// bare `sigma_z` (pure dephasing channel)
    SigmaZ,
}

impl Coupling {
    pub fn operator(self, m: &ModelSpec) -> Op2 {
        match self {
            Coupling::Model => coupling_operator(m),
            Coupling::SigmaZ => Op2::sz(),
        }
    }
}

/// Coefficients `(a0, a+, a-, az)` of `A = a0 I + a+ sigma_+ + a- sigma_- + az sigma_z`.
pub fn sigma_decomposition(a: &Op2) -> [C64; 4] {
    let m = &a.0;
    [(m[0][0] + m[1][1]) * 0.5, m[0][1], m[1][0], (m[0][0] - m[1][1]) * 0.5]
}

/// `e^{-i H0 t} = exp(+i delta t sigma_z / 2)`
pub fn free_propagator(m: &ModelSpec, t: f64) -> Op2 {
    let h = 0.5 * m.delta * t;
    Op2::new(cis(h), ZERO, ZERO, cis(-h))
}

/// `exp(-i theta sigma_x / 2)`
pub fn gate_unitary(theta: f64) -> Op2 {
    Op2::rx(theta)
}

/// `U_c(x) = e^{i H0 x} U_c e^{-i H0 x}`
pub fn interaction_rotation(m: &ModelSpec, theta: f64, x: f64) -> Op2 {
    free_propagator(m, -x) * gate_unitary(theta) * free_propagator(m, x)
}

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochState {
    pub n: [f64; 3],
}

impl BlochState {
    pub fn new(nx: f64, ny: f64, nz: f64) -> Self {
        BlochState { n: [nx, ny, nz] }
    }
    pub fn ground() -> Self {
        BlochState::new(0.0, 0.0, 1.0)
    }
    pub fn norm(&self) -> f64 {
        self.n.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
    pub fn perp(&self) -> f64 {
        self.n[0].hypot(self.n[1])
    }
    /// Four-component vector `(1, nx, ny, nz)`.
    pub fn to_vec4(&self) -> [f64; 4] {
        [1.0, self.n[0], self.n[1], self.n[2]]
    }
    pub fn from_vec4(v: &[f64; 4]) -> Self {
        BlochState::new(v[1] / v[0], v[2] / v[0], v[3] / v[0])
    }
    /// Smallest eigenvalue of the density matrix, `(1 - |n|)/2`.
    pub fn eps_min(&self) -> f64 {
        0.5 * (1.0 - self.norm())
    }
}

pub fn vectorize(rho: &Op2) -> Result<BlochState> {
    let tr = rho.trace();
    if (tr - ONE).norm() > 1e-10 {
        return Err(Error::config(format!("density matrix trace must be 1, got {tr}")));
    }
    let p = rho.pauli_components();
    Ok(BlochState::new(2.0 * p[1].re, 2.0 * p[2].re, 2.0 * p[3].re))
}

pub fn devectorize(b: &BlochState) -> Op2 {
    let [x, y, z] = b.n;
    Op2::from_pauli(c(0.5, 0.0), c(0.5 * x, 0.0), c(0.5 * y, 0.0), c(0.5 * z, 0.0))
}

/// Dense 4x4 real matrix acting on `(1, nx, ny, nz)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Generator4(pub [[f64; 4]; 4]);

impl Generator4 {
    pub fn zero() -> Self {
        Generator4([[0.0; 4]; 4])
    }
    pub fn identity() -> Self {
        let mut g = Self::zero();
        for i in 0..4 {
            g.0[i][i] = 1.0;
        }
        g
    }
    pub fn apply(&self, v: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, row) in self.0.iter().enumerate() {
            out[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2] + row[3] * v[3];
        }
        out
    }
    pub fn matmul(&self, o: &Generator4) -> Generator4 {
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = (0..4).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Generator4(out)
    }
    pub fn transpose(&self) -> Generator4 {
        let mut out = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = self.0[j][i];
            }
        }
        Generator4(out)
    }
    pub fn scale(&self, k: f64) -> Generator4 {
        let mut out = self.0;
        out.iter_mut().flatten().for_each(|x| *x *= k);
        Generator4(out)
    }
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }
    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }
}

impl Add for Generator4 {
    type Output = Generator4;
    fn add(self, o: Generator4) -> Generator4 {
        let mut out = self.0;
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] += o.0[i][j];
            }
        }
        Generator4(out)
    }
}

impl AddAssign for Generator4 {
    fn add_assign(&mut self, o: Generator4) {
        *self = *self + o;
    }
}

impl Sub for Generator4 {
    type Output = Generator4;
    fn sub(self, o: Generator4) -> Generator4 {
        self + o.scale(-1.0)
    }
}

pub type Super4 = [[C64; 4]; 4];

/// Kronecker product `a (x) b` with the column-stacking convention `vec(B X A^T) = (A (x) B) vec X`.
pub fn kron(a: &Op2, b: &Op2) -> Super4 {
    let mut out = [[ZERO; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + k][2 * j + l] = a.0[i][j] * b.0[k][l];
                }
            }
        }
    }
    out
}

const SQ: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Maps the column-stacked vector of `rho` onto `(1, nx, ny, nz)/sqrt(2)` coordinates.
fn bloch_u() -> Super4 {
    [
        [c(SQ, 0.0), ZERO, ZERO, c(SQ, 0.0)],
        [ZERO, c(SQ, 0.0), c(0.0, SQ), ZERO],
        [ZERO, c(SQ, 0.0), c(0.0, -SQ), ZERO],
        [c(SQ, 0.0), ZERO, ZERO, c(-SQ, 0.0)],
    ]
}

/// `U^dagger S U`, checked to be real with a vanishing first row.
pub fn bloch_basis_transform(s: &Super4) -> Result<Generator4> {
    let u = bloch_u();
    let mut out = [[0.0; 4]; 4];
    let mut resid: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = ZERO;
            for k in 0..4 {
                if u[k][i] == ZERO {
                    continue;
                }
                for l in 0..4 {
                    if u[l][j] != ZERO {
                        acc += u[k][i].conj() * s[k][l] * u[l][j];
                    }
                }
            }
            resid = resid.max(acc.im.abs());
            scale = scale.max(acc.re.abs());
            out[i][j] = acc.re;
        }
    }
    let tol = 1e-10 * scale.max(1.0);
    if resid > tol {
        return Err(Error::numerical(format!(
            "generator has imaginary residue {resid:e}; dissipator is malformed"
        )));
    }
    let row0 = out[0].iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if row0 > 1e-12 * scale.max(1.0) {
        return Err(Error::numerical(format!("generator first row is {row0:e}, not zero")));
    }
    out[0] = [0.0; 4];
    Ok(Generator4(out))
}

/// Bloch-basis matrix of `rho -> U rho U^dagger`.
pub fn rotation_matrix(u: &Op2) -> Generator4 {
    let basis = [Op2::identity(), Op2::sx(), Op2::sy(), Op2::sz()];
    let mut out = [[0.0; 4]; 4];
    for (j, sj) in basis.iter().enumerate() {
        let rot = u.conjugate(sj);
        for (i, si) in basis.iter().enumerate() {
            out[i][j] = 0.5 * (*si * rot).trace().re;
        }
    }
    Generator4(out)
}

/// Bloch-basis generator of `-i[H, .]`.
pub fn commutator_generator(h: &Op2) -> Generator4 {
    let p = h.pauli_components();
    let (hx, hy, hz) = (p[1].re, p[2].re, p[3].re);
    // d n / dt = 2 h x n
    Generator4([
        [0.0; 4],
        [0.0, 0.0, -2.0 * hz, 2.0 * hy],
        [0.0, 2.0 * hz, 0.0, -2.0 * hx],
        [0.0, -2.0 * hy, 2.0 * hx, 0.0],
    ])
}

/// Free-evolution generator for `H0`.
pub fn free_generator(m: &ModelSpec) -> Generator4 {
    commutator_generator(&m.hamiltonian())
}
