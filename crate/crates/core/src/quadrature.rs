//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};
use crate::math::abs;

const MAX_DEPTH: u32 = 200;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` with adaptive
/// Simpson refinement (Richardson-corrected panels).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut exhausted = false;
    let value = refine(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut exhausted);
    if exhausted {
        return Err(Error::IterationBudget {
            what: "adaptive Simpson",
            iterations: MAX_DEPTH as usize,
        });
    }
    if !value.is_finite() {
        return Err(Error::NonFinite("quadrature"));
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    exhausted: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if abs(delta) <= 15.0 * tol.max(f64::EPSILON * abs(left + right)) {
        return left + right + delta / 15.0;
    }
    if lm <= a || rm >= b {
        // interval exhausted at floating-point resolution
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *exhausted = true;
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, exhausted)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, exhausted)
}
