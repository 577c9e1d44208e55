//! Numeric fallbacks shared by the time-scale machinery and the test
//! oracles: monotone bisection, central differences, and adaptive Simpson
//! quadrature.

use crate::{Error, Result};

/// Absolute tolerance for monotone bisection.
pub const BISECT_TOL: f64 = 1e-12;

/// Relative tolerance target for adaptive quadrature.
pub const QUAD_REL_TOL: f64 = 1e-10;

/// Solve `f(x) = target` for increasing `f` on `[0, ∞)` by bracket doubling
/// followed by bisection to [`BISECT_TOL`] absolute width.
pub fn bisect_increasing<F: Fn(f64) -> f64>(f: F, target: f64) -> Result<f64> {
    if !target.is_finite() {
        return Err(Error::NonConvergent(format!(
            "bisection target {target} is not finite"
        )));
    }
    let f0 = f(0.0);
    if target <= f0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut guard = 0;
    while f(hi) < target {
        hi *= 2.0;
        guard += 1;
        if guard > 1100 {
            return Err(Error::NonConvergent(format!(
                "bisection bracket for target {target} did not close"
            )));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        if hi - lo <= BISECT_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Derivative of `f` at `x ≥ 0` by central differences, falling back to a
/// one-sided stencil near the domain boundary.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let step = f64::EPSILON.cbrt() * x.abs().max(1.0);
    let lo = (x - step).max(0.0);
    let hi = x + step;
    (f(hi) - f(lo)) / (hi - lo)
}

/// Integrate `f` over `[a, b]` with adaptive Simpson refinement down to
/// [`QUAD_REL_TOL`] relative error.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<f64> {
    adaptive_simpson_tol(f, a, b, QUAD_REL_TOL)
}

/// Integrate `f` over `[a, b]` with a caller-chosen relative tolerance.
pub fn adaptive_simpson_tol<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a.is_nan() || b.is_nan() || a >= b {
        return Err(Error::NonConvergent(format!(
            "quadrature interval [{a}, {b}] is not ordered"
        )));
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    // The absolute budget scales with a first estimate of the integral so
    // the relative target is met without stalling on near-zero integrals.
    let eps = rel_tol * whole.abs().max(1e-300);
    simpson_step(f, a, b, fa, fm, fb, whole, eps.max(1e-16 * rel_tol), 60)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * eps {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::NonConvergent(format!(
            "adaptive quadrature exhausted refinement depth on [{a}, {b}]"
        )));
    }
    let half = 0.5 * eps;
    Ok(simpson_step(f, a, m, fa, flm, fm, left, half, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, half, depth - 1)?)
}

/// Neumaier compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sum of a slice after sorting ascending. Permutation-invariant down to the
/// last bit, which the trajectory shuffles rely on.
pub fn sorted_sum(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("NaN in summation"));
    let mut acc = CompensatedSum::default();
    for &v in values.iter() {
        acc.add(v);
    }
    acc.value()
}
