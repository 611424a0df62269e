//! Adaptive Gauss-Kronrod quadrature for complex-valued integrands.

use crate::error::{Error, Result};
use crate::operators::{C64, ZERO};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> (C64, f64) {
    let h = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(mid - x) + f(mid + x);
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

/// Integrate `f` over `[a, b]` to `max(abs_tol, rel_tol |I|)`.
pub fn integrate<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<C64> {
    if a == b {
        return Ok(ZERO);
    }
    let mut stack = vec![(a, b, gk15(&mut f, a, b))];
    let mut done = ZERO;
    let mut evals = 1usize;
    let (mut total, mut err) = (stack[0].2 .0, stack[0].2 .1);
    while err > abs_tol.max(rel_tol * total.norm()) {
        // bisect the interval with the largest error estimate
        let (idx, _) = stack
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .expect("non-empty stack");
        let (lo, hi, (val, e)) = stack.swap_remove(idx);
        let m = 0.5 * (lo + hi);
        if evals > 200_000 || m <= lo || m >= hi {
            return Err(Error::numerical(format!(
                "adaptive quadrature on [{a}, {b}] did not converge (error estimate {err:e})"
            )));
        }
        let left = gk15(&mut f, lo, m);
        let right = gk15(&mut f, m, hi);
        evals += 2;
        total += left.0 + right.0 - val;
        err += left.1 + right.1 - e;
        stack.push((lo, m, left));
        stack.push((m, hi, right));
        if stack.len() > 4096 {
            // retire the best-converged pieces to bound memory
            stack.sort_by(|x, y| y.2 .1.total_cmp(&x.2 .1));
            for (_, _, (v, _)) in stack.drain(2048..) {
                done += v;
            }
            total = done + stack.iter().map(|s| s.2 .0).sum::<C64>();
        }
        if err.is_nan() {
            return Err(Error::numerical("quadrature produced NaN"));
        }
    }
    Ok(done + stack.iter().map(|s| s.2 .0).sum::<C64>())
}

/// Integrate over `[a, inf)` through the substitution `x = a + u/(1-u)`.
pub fn integrate_to_inf<F: FnMut(f64) -> C64>(mut f: F, a: f64, abs_tol: f64, rel_tol: f64) -> Result<C64> {
    integrate(
        |u| {
            if u >= 1.0 {
                return ZERO;
            }
            let w = 1.0 - u;
            f(a + u / w) / (w * w)
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// Three-point Gauss-Legendre nodes and weights on `[0, 1]`.
pub const GL3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];
