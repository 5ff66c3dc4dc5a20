//! Rescaling, relative errors against the self-similar solution, residuals of
//! the mass equation, and pointwise checks of the global bound and of
//! comparison. Evaluators are plain closures `(t, coordinate) -> value`.

use alloc::vec::Vec;

use crate::error::{positive, Error, Result};
use crate::exact::{profile, self_similar_mass, MobilityExponent, SelfSimilarParams};
use crate::math::{abs, exp, ln, pow_nonneg, powf, round};

/// Floor under `F_M` and `G_M` in relative errors.
pub const PROFILE_FLOOR: f64 = 1e-300;

/// Slack allowed by the pointwise checks.
pub const CHECK_TOLERANCE: f64 = 1e-10;

/// `n` points from `a` to `b` inclusive, evenly spaced.
pub fn linear_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` points from `a > 0` to `b` inclusive, evenly spaced in `ln`.
pub fn geometric_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    linear_grid(ln(a), ln(b), n).into_iter().map(exp).collect()
}

/// Piecewise-linear reading of a row sampled at `j h`; clamps past the end.
pub fn interpolate_uniform(row: &[f64], h: f64, x: f64) -> f64 {
    let last = row.len() - 1;
    let pos = x / h;
    if pos <= 0.0 {
        return row[0];
    }
    if pos >= last as f64 {
        return row[last];
    }
    let j = pos as usize;
    let frac = pos - j as f64;
    row[j] + frac * (row[j + 1] - row[j])
}

/// `true` if every entry is strictly below the one before.
pub fn is_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// `w(t, y) = t^{1/alpha} u(t, t^{1/(d alpha)} y)` sampled on a `y` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledProfile {
    pub t: f64,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
}

/// Rescales `u(t, |x|)` at time `t`.
pub fn rescale_profile(
    u: impl Fn(f64, f64) -> f64,
    alpha: MobilityExponent,
    d: u32,
    t: f64,
    y_grid: &[f64],
) -> Result<RescaledProfile> {
    positive("t", t)?;
    let a = alpha.get();
    let amplitude = powf(t, 1.0 / a);
    let stretch = powf(t, 1.0 / (d as f64 * a));
    let w = y_grid.iter().map(|&y| amplitude * u(t, stretch * y)).collect();
    Ok(RescaledProfile {
        t,
        y: y_grid.to_vec(),
        w,
    })
}

/// `sup |w - F_M| / F_M` over grid points with `|y| >= y_min`.
pub fn relative_error_profile(
    u: impl Fn(f64, f64) -> f64,
    mass: f64,
    alpha: MobilityExponent,
    d: u32,
    t: f64,
    y_grid: &[f64],
    y_min: f64,
) -> Result<f64> {
    let params = SelfSimilarParams::new(alpha.get(), mass, d)?;
    let kept: Vec<f64> = y_grid.iter().copied().filter(|y| abs(*y) >= y_min).collect();
    let rescaled = rescale_profile(u, alpha, d, t, &kept)?;
    Ok(rescaled
        .y
        .iter()
        .zip(&rescaled.w)
        .map(|(&y, &w)| {
            let f = profile(&params, abs(y)).max(PROFILE_FLOOR);
            abs(w - f) / f
        })
        .fold(0.0, f64::max))
}

/// `sup_{kappa >= kappa0} |m(t, t^{1/alpha} kappa) - G_M(kappa)| / G_M(kappa)`
/// for a mass evaluator `m(t, rho)`.
pub fn mass_rel_error(
    m: impl Fn(f64, f64) -> f64,
    mass: f64,
    alpha: MobilityExponent,
    t: f64,
    kappa_grid: &[f64],
    kappa0: f64,
) -> Result<f64> {
    positive("t", t)?;
    positive("kappa0", kappa0)?;
    let params = SelfSimilarParams::new(alpha.get(), mass, 1)?;
    let scale = powf(t, 1.0 / alpha.get());
    Ok(kappa_grid
        .iter()
        .filter(|k| **k >= kappa0)
        .map(|&k| {
            let g = self_similar_mass(&params, k).max(PROFILE_FLOOR);
            abs(m(t, scale * k) - g) / g
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalBoundReport {
    pub holds: bool,
    /// Largest `m / ((alpha t)^{-1/alpha} rho)` seen (`rho > 0` only).
    pub worst_ratio: f64,
    /// Largest `m - (alpha t)^{-1/alpha} rho`.
    pub worst_excess: f64,
}

/// Checks `m(t, rho) <= (alpha t)^{-1/alpha} rho` on `(t, rho)` samples with
/// `t > 0`, up to [`CHECK_TOLERANCE`].
pub fn check_global_bound(
    m: impl Fn(f64, f64) -> f64,
    alpha: MobilityExponent,
    samples: &[(f64, f64)],
) -> Result<GlobalBoundReport> {
    let a = alpha.get();
    let mut worst_ratio: f64 = 0.0;
    let mut worst_excess = f64::NEG_INFINITY;
    for &(t, rho) in samples {
        positive("t", t)?;
        let bound = powf(a * t, -1.0 / a) * rho;
        let value = m(t, rho);
        if !value.is_finite() {
            return Err(Error::NonFinite("mass sample"));
        }
        worst_excess = worst_excess.max(value - bound);
        if rho > 0.0 {
            worst_ratio = worst_ratio.max(value / bound);
        }
    }
    Ok(GlobalBoundReport {
        holds: worst_excess <= CHECK_TOLERANCE,
        worst_ratio,
        worst_excess,
    })
}

/// Same check for a stored row at time `t` on nodes `j h`.
pub fn row_global_bound(row: &[f64], h: f64, alpha: MobilityExponent, t: f64) -> Result<GlobalBoundReport> {
    let samples: Vec<(f64, f64)> = (0..row.len()).map(|j| (t, j as f64 * h)).collect();
    check_global_bound(|_, rho| row[round(rho / h) as usize], alpha, &samples)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualNorms {
    pub sup: f64,
    pub l1: f64,
}

/// Centred-difference residual of `m_t + m ((m_rho)_+)^alpha` at interior
/// points of `rows[n][j] = m(t0 + n h_t, j h_rho)`.
pub fn residual_mass_eq(rows: &[Vec<f64>], h_t: f64, h_rho: f64, alpha: MobilityExponent) -> Result<ResidualNorms> {
    positive("h_t", h_t)?;
    positive("h_rho", h_rho)?;
    if rows.len() < 3 || rows.iter().any(|r| r.len() < 3 || r.len() != rows[0].len()) {
        return Err(Error::GridTooSmall("need a 3x3 rectangular grid"));
    }
    let a = alpha.get();
    let mut sup: f64 = 0.0;
    let mut l1 = 0.0;
    for n in 1..rows.len() - 1 {
        for j in 1..rows[n].len() - 1 {
            let m = rows[n][j];
            let m_t = (rows[n + 1][j] - rows[n - 1][j]) / (2.0 * h_t);
            let m_rho = (rows[n][j + 1] - rows[n][j - 1]) / (2.0 * h_rho);
            let r = abs(m_t + m * pow_nonneg(m_rho.max(0.0), a));
            sup = sup.max(r);
            l1 += r * h_t * h_rho;
        }
    }
    Ok(ResidualNorms { sup, l1 })
}

/// `true` iff `upper >= lower - 1e-10` at every `(t, x)` sample.
pub fn comparison_test(
    upper: impl Fn(f64, f64) -> f64,
    lower: impl Fn(f64, f64) -> f64,
    samples: &[(f64, f64)],
) -> bool {
    samples
        .iter()
        .all(|&(t, x)| upper(t, x) >= lower(t, x) - CHECK_TOLERANCE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{friendly_giant, self_similar_u, GiantDatum};
    use approx::assert_relative_eq;

    fn half() -> MobilityExponent {
        MobilityExponent::new(0.5).unwrap()
    }

    #[test]
    fn grids() {
        assert_eq!(linear_grid(0.0, 1.0, 3), alloc::vec![0.0, 0.5, 1.0]);
        let g = geometric_grid(1.0, 100.0, 3);
        assert_relative_eq!(g[1], 10.0, max_relative = 1e-14);
        assert!(linear_grid(0.0, 1.0, 0).is_empty());
    }

    #[test]
    fn interpolation() {
        let row = [0.0, 1.0, 4.0];
        assert_eq!(interpolate_uniform(&row, 0.5, 0.25), 0.5);
        assert_eq!(interpolate_uniform(&row, 0.5, 0.75), 2.5);
        assert_eq!(interpolate_uniform(&row, 0.5, 7.0), 4.0);
        assert_eq!(interpolate_uniform(&row, 0.5, -1.0), 0.0);
    }

    #[test]
    fn self_similar_rescales_to_profile() {
        let p = SelfSimilarParams::new(0.5, 2.0, 2).unwrap();
        let y = linear_grid(0.0, 3.0, 31);
        let u = |t: f64, x: f64| self_similar_u(&p, t, x).unwrap();
        for &t in &[1.0, 37.0] {
            let err = relative_error_profile(u, 2.0, p.alpha, 2, t, &y, 0.0).unwrap();
            assert!(err < 1e-12, "{err}");
        }
        assert!(rescale_profile(u, p.alpha, 2, 0.0, &y).is_err());
    }

    #[test]
    fn giant_rescales_to_constant() {
        let a = MobilityExponent::new(0.3).unwrap();
        let u = |t: f64, _x: f64| friendly_giant(GiantDatum::Infinite, a, t).unwrap();
        let prof = rescale_profile(u, a, 1, 5.0, &[0.0, 1.0, 10.0]).unwrap();
        for w in prof.w {
            assert_relative_eq!(w, powf(0.3, -1.0 / 0.3), max_relative = 1e-13);
        }
    }

    #[test]
    fn self_similar_mass_has_no_error() {
        let p = SelfSimilarParams::new(0.5, 1.0, 1).unwrap();
        let m = |t: f64, rho: f64| self_similar_mass(&p, rho * powf(t, -2.0));
        let k = geometric_grid(0.1, 100.0, 20);
        assert!(mass_rel_error(m, 1.0, half(), 10.0, &k, 0.1).unwrap() < 1e-14);
    }

    #[test]
    fn linear_mass_meets_global_bound() {
        let a = half();
        let m = |t: f64, rho: f64| powf(a.get() * t, -2.0) * rho;
        let samples: Vec<(f64, f64)> = [(0.5, 1.0), (2.0, 3.0), (1.0, 0.0)].to_vec();
        let r = check_global_bound(m, a, &samples).unwrap();
        assert!(r.holds);
        assert_relative_eq!(r.worst_ratio, 1.0, max_relative = 1e-14);
        assert!(check_global_bound(|_, _| 0.0, a, &samples).unwrap().holds);
        assert!(!check_global_bound(|t, rho| 2.0 * m(t, rho), a, &samples).unwrap().holds);
    }

    #[test]
    fn linear_mass_has_small_residual() {
        let a = half();
        let m = |t: f64, rho: f64| powf(0.5 * t, -2.0) * rho;
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|n| (0..5).map(|j| m(1.0 + n as f64 * 1e-3, j as f64 * 0.1)).collect())
            .collect();
        let r = residual_mass_eq(&rows, 1e-3, 0.1, a).unwrap();
        assert!(r.sup < 1e-4, "{}", r.sup);
        assert!(residual_mass_eq(&rows[..2], 1e-3, 0.1, a).is_err());
    }

    #[test]
    fn comparison_of_ordered_and_equal() {
        let s = [(1.0, 0.5), (2.0, 3.0)];
        assert!(comparison_test(|t, x| t + x, |t, x| t + x, &s));
        assert!(comparison_test(|t, x| t + x + 1.0, |t, x| t + x, &s));
        assert!(!comparison_test(|t, x| t + x, |t, x| t + x + 1.0, &s));
    }
}
