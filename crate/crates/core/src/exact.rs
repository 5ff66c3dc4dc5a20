//! Closed-form solutions: the friendly giant, the self-similar family `U_M`
//! with its profile `F_M` and mass function `G_M`, the `alpha -> 1` vortex,
//! plus a numerical ODE oracle for the profile.
//!
//! Every quantity here is parameterised by the total mass `M`; the free
//! integration constant of the profile never appears.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{non_negative, positive, Error, Result};
use crate::math::{abs, exp, ln, pow_nonneg, powf};
use crate::quadrature::adaptive_simpson;

/// The mobility exponent `alpha` of `gamma(u) = u^alpha`, restricted to `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MobilityExponent(f64);

impl MobilityExponent {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::AlphaOutOfRange(alpha))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `p = 1 / (1 - alpha)`, the power with `F = w^p`.
    pub fn p(self) -> f64 {
        1.0 / (1.0 - self.0)
    }

    /// `alpha / (1 - alpha)`.
    pub fn q(self) -> f64 {
        self.0 / (1.0 - self.0)
    }

    /// Time exponent of self-similarity, `1 / alpha`.
    pub fn gamma(self) -> f64 {
        1.0 / self.0
    }

    /// Space exponent of self-similarity in dimension `d`, `1 / (alpha d)`.
    pub fn beta(self, d: u32) -> f64 {
        1.0 / (self.0 * d as f64)
    }
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: u32) -> f64 {
    // omega_d = 2 pi / d * omega_{d-2}
    let (mut omega, mut k) = if d.is_multiple_of(2) { (1.0, 0) } else { (2.0, 1) };
    while k < d {
        k += 2;
        omega *= 2.0 * PI / k as f64;
    }
    omega
}

/// `rho = omega_d r^d`.
pub fn volume_coord(r: f64, d: u32) -> f64 {
    unit_ball_volume(d) * powf(r, d as f64)
}

/// Inverse of [`volume_coord`].
pub fn radius_coord(rho: f64, d: u32) -> f64 {
    powf(rho / unit_ball_volume(d), 1.0 / d as f64)
}

/// Parameters of the self-similar solution of total mass `M` in `R^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfSimilarParams {
    pub alpha: MobilityExponent,
    pub mass: f64,
    pub dim: u32,
    pub omega: f64,
}

impl SelfSimilarParams {
    pub fn new(alpha: f64, mass: f64, dim: u32) -> Result<Self> {
        let alpha = MobilityExponent::new(alpha)?;
        positive("mass", mass)?;
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                value: 0.0,
                reason: "dimension must be at least 1",
            });
        }
        Ok(Self {
            alpha,
            mass,
            dim,
            omega: unit_ball_volume(dim),
        })
    }

    /// Same parameters with another total mass.
    pub fn with_mass(self, mass: f64) -> Result<Self> {
        Self::new(self.alpha.get(), mass, self.dim)
    }

    /// `F_M(0) = alpha^{-1/alpha}`.
    pub fn peak(&self) -> f64 {
        let a = self.alpha.get();
        powf(a, -1.0 / a)
    }

    /// Profile written in the volume variable `kappa = omega_d |y|^d`.
    pub fn profile_in_volume(&self, kappa: f64) -> f64 {
        let a = self.alpha.get();
        let x = kappa / (a * self.mass);
        powf(pow_nonneg(x, self.alpha.q()) + a, -1.0 / a)
    }
}

/// Sup-norm of the datum of a spatially constant solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GiantDatum {
    Finite(f64),
    /// The global supersolution `(alpha t)^{-1/alpha}`, unbounded at `t = 0`.
    Infinite,
}

/// Spatially constant solution `(u0^{-alpha} + alpha t)^{-1/alpha}`.
pub fn friendly_giant(datum: GiantDatum, alpha: MobilityExponent, t: f64) -> Result<f64> {
    non_negative("t", t)?;
    let a = alpha.get();
    match datum {
        GiantDatum::Infinite => {
            if t == 0.0 {
                Err(Error::UnboundedAtZero)
            } else {
                Ok(powf(a * t, -1.0 / a))
            }
        }
        GiantDatum::Finite(u0) => {
            non_negative("u0_sup", u0)?;
            if u0 == 0.0 {
                if t == 0.0 {
                    Err(Error::UndefinedAtZero)
                } else {
                    Ok(0.0)
                }
            } else {
                Ok(powf(powf(u0, -a) + a * t, -1.0 / a))
            }
        }
    }
}

/// Self-similar profile `F_M(|y|)`.
pub fn profile(params: &SelfSimilarParams, y_abs: f64) -> f64 {
    params.profile_in_volume(params.omega * powf(y_abs, params.dim as f64))
}

/// Self-similar solution `U_M(t, x)`.
pub fn self_similar_u(params: &SelfSimilarParams, t: f64, x_abs: f64) -> Result<f64> {
    positive("t", t)?;
    let a = params.alpha.get();
    let scale = powf(t, -1.0 / a);
    let kappa = params.omega * powf(x_abs, params.dim as f64) * scale;
    Ok(scale * params.profile_in_volume(kappa))
}

/// `U_M(t, .)` evaluated at a volume coordinate.
pub fn self_similar_u_volume(params: &SelfSimilarParams, t: f64, rho: f64) -> Result<f64> {
    positive("t", t)?;
    let scale = powf(t, -1.0 / params.alpha.get());
    Ok(scale * params.profile_in_volume(rho * scale))
}

/// Mass function of the profile, `G_M(kappa)`, the integral of `F_M` over the
/// ball of volume `kappa`.
///
/// Evaluated through its antiderivative
/// `G_M(kappa) = M (1 + alpha (kappa / (alpha M))^{-q})^{1 - 1/alpha}`,
/// `q = alpha / (1 - alpha)`.
pub fn self_similar_mass(params: &SelfSimilarParams, kappa: f64) -> f64 {
    if kappa <= 0.0 {
        return 0.0;
    }
    if kappa == f64::INFINITY {
        return params.mass;
    }
    let a = params.alpha.get();
    let x = kappa / (a * params.mass);
    let inner = 1.0 + a * powf(x, -params.alpha.q());
    params.mass * powf(inner, 1.0 - 1.0 / a)
}

/// Mass of `U_M(t, .)` in the ball of volume `rho`: `G_M(rho t^{-1/alpha})`.
pub fn self_similar_mass_at(params: &SelfSimilarParams, t: f64, rho: f64) -> Result<f64> {
    positive("t", t)?;
    Ok(self_similar_mass(
        params,
        rho * powf(t, -1.0 / params.alpha.get()),
    ))
}

/// `alpha -> 1` limit: the expanding vortex `1/t` on the ball of volume `M t`.
pub fn vortex_limit_u(mass: f64, d: u32, t: f64, x_abs: f64) -> Result<f64> {
    positive("t", t)?;
    if volume_coord(x_abs, d) <= mass * t {
        Ok(1.0 / t)
    } else {
        Ok(0.0)
    }
}

/// Quadrature of `F_M` over `R^d` to absolute tolerance `tol`.
///
/// Adaptive Simpson in `s = ln rho` on `[rho_lo, rho_star]`, plain Simpson on
/// `[0, rho_lo]`, and the binomial series of the power tail integrated in
/// closed form beyond `rho_star`.
pub fn profile_total_mass(params: &SelfSimilarParams, tol: f64) -> Result<f64> {
    positive("tol", tol)?;
    let a = params.alpha.get();
    let q = params.alpha.q();
    let scale = a * params.mass;
    let d = params.dim;
    let f = |rho: f64| profile(params, radius_coord(rho, d));

    // alpha x*^{-q} = 1/20 keeps the tail series geometric with ratio 1/20
    let x_star = powf(20.0 * a, 1.0 / q);
    let rho_star = x_star * scale;
    let rho_lo = 1e-6 * rho_star.min(scale);

    let head = adaptive_simpson(f, 0.0, rho_lo, tol / 8.0)?;
    let body = adaptive_simpson(
        |s| {
            let rho = exp(s);
            f(rho) * rho
        },
        ln(rho_lo),
        ln(rho_star),
        tol / 8.0,
    )?;

    // (x^q + a)^{-1/a} = sum_k binom(-1/a, k) a^k x^{-(q+1) - k q}
    let mut tail = 0.0;
    let mut coeff = 1.0;
    let ratio = a * powf(x_star, -q);
    let mut power = powf(x_star, -q);
    for k in 0..200 {
        let term = coeff * power / (q * (k + 1) as f64);
        tail += term;
        if abs(term) * scale < tol * 1e-3 {
            break;
        }
        coeff *= (-1.0 / a - k as f64) / (k + 1) as f64;
        power *= ratio;
    }
    Ok(head + body + scale * tail)
}

/// Right-hand side of the profile ODE `r w'(r) = alpha d w^p - d w`.
pub fn profile_ode_rhs(params: &SelfSimilarParams, w: f64) -> f64 {
    let a = params.alpha.get();
    let d = params.dim as f64;
    d * w * (a * pow_nonneg(w, params.alpha.p() - 1.0) - 1.0)
}

/// Corner value `w_* = alpha^{-(1-alpha)/alpha}` of the profile ODE.
pub fn profile_ode_equilibrium(alpha: MobilityExponent) -> f64 {
    let a = alpha.get();
    powf(a, -(1.0 - a) / a)
}

/// Profile sampled by integrating its ODE.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileOracle {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Step in `ln r` of the accepted integration.
    pub step: f64,
}

const ORACLE_SAMPLES: usize = 256;
const ORACLE_SEED: f64 = 1e-9;
const ORACLE_HALVINGS: usize = 10;

/// Integrates `r w' = alpha d w^p - d w` out of the corner `w_*` and returns
/// `F = w^p` on `256` radii in `(0, r_max]`, mass-normalised to `M`.
///
/// In `s = ln r` the ODE is autonomous, so every trajectory in `(0, w_*)` is a
/// translate of one solution; the translate is fixed by the total mass. The
/// step in `s` is halved until two successive runs agree within `tol / 10`.
pub fn profile_ode_oracle(params: &SelfSimilarParams, r_max: f64, tol: f64) -> Result<ProfileOracle> {
    positive("r_max", r_max)?;
    positive("tol", tol)?;
    let radii: Vec<f64> = (1..=ORACLE_SAMPLES)
        .map(|i| r_max * i as f64 / ORACLE_SAMPLES as f64)
        .collect();
    let mut step = 1e-2;
    let mut previous = ode_profile_samples(params, &radii, step)?;
    for _ in 0..ORACLE_HALVINGS {
        step *= 0.5;
        let current = ode_profile_samples(params, &radii, step)?;
        let worst = previous
            .iter()
            .zip(&current)
            .map(|(a, b)| abs(a - b) / abs(*b).max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        if worst < 0.1 * tol {
            return Ok(ProfileOracle {
                radii,
                values: current,
                step,
            });
        }
        previous = current;
    }
    Err(Error::IterationBudget {
        what: "profile ODE oracle",
        iterations: ORACLE_HALVINGS,
    })
}

fn ode_profile_samples(params: &SelfSimilarParams, radii: &[f64], h: f64) -> Result<Vec<f64>> {
    let a = params.alpha.get();
    let p = params.alpha.p();
    let d = params.dim as f64;
    let growth = d * (p - 1.0);
    let w_star = profile_ode_equilibrium(params.alpha);
    let rhs = |w: f64| profile_ode_rhs(params, w);
    let w0 = w_star * (1.0 - ORACLE_SEED);
    let s0 = 0.0;

    // mass of F = w^p in the volume variable: dQ/ds = omega d e^{ds} w^p
    let density = |s: f64, w: f64| params.omega * d * exp(d * s + p * ln(w));
    let head = params.omega * exp(d * s0) * powf(w_star, p) * (1.0 - p * ORACLE_SEED * d / (d + growth));

    let mut s = s0;
    let mut w = w0;
    let mut mass = head;
    let max_steps = (1e4 / h) as usize;
    let mut steps = 0;
    while a * powf(w, p - 1.0) > 1e-13 {
        let (w_next, dq) = rk4_profile_step(&rhs, &density, s, w, h);
        w = w_next;
        mass += dq;
        s += h;
        steps += 1;
        if !w.is_finite() || w <= 0.0 {
            return Err(Error::NonFinite("profile ODE"));
        }
        if steps > max_steps {
            return Err(Error::IterationBudget {
                what: "profile ODE mass",
                iterations: steps,
            });
        }
    }
    mass += params.omega * exp(d * s + p * ln(w)) / (p - 1.0);

    // w_M(s) = w_1(s - shift)
    let shift = ln(params.mass / mass) / d;
    let mut out = Vec::with_capacity(radii.len());
    let mut s = s0;
    let mut w = w0;
    for &r in radii {
        let target = ln(r) - shift;
        if target <= s0 {
            let lin = w_star * (1.0 - ORACLE_SEED * exp(growth * (target - s0)));
            out.push(powf(lin, p));
            continue;
        }
        while s < target {
            let dt = h.min(target - s);
            let (w_next, _) = rk4_profile_step(&rhs, &|_, _| 0.0, s, w, dt);
            w = w_next;
            s += dt;
        }
        out.push(powf(w, p));
    }
    Ok(out)
}

fn rk4_profile_step(
    rhs: &impl Fn(f64) -> f64,
    density: &impl Fn(f64, f64) -> f64,
    s: f64,
    w: f64,
    h: f64,
) -> (f64, f64) {
    let k1 = rhs(w);
    let q1 = density(s, w);
    let w2 = w + 0.5 * h * k1;
    let k2 = rhs(w2);
    let q2 = density(s + 0.5 * h, w2);
    let w3 = w + 0.5 * h * k2;
    let k3 = rhs(w3);
    let q3 = density(s + 0.5 * h, w3);
    let w4 = w + h * k3;
    let k4 = rhs(w4);
    let q4 = density(s + h, w4);
    (
        w + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4),
        h / 6.0 * (q1 + 2.0 * q2 + 2.0 * q3 + q4),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn half() -> MobilityExponent {
        MobilityExponent::new(0.5).unwrap()
    }

    #[test]
    fn alpha_bounds() {
        assert!(MobilityExponent::new(0.0).is_err());
        assert!(MobilityExponent::new(1.0).is_err());
        assert_eq!(MobilityExponent::new(1.5), Err(Error::AlphaOutOfRange(1.5)));
        let a = MobilityExponent::new(0.25).unwrap();
        assert_relative_eq!(a.p(), 4.0 / 3.0);
        assert_relative_eq!(a.gamma(), 4.0);
        assert_relative_eq!(a.beta(2), 2.0);
    }

    #[test]
    fn unit_ball_volumes() {
        assert_relative_eq!(unit_ball_volume(1), 2.0);
        assert_relative_eq!(unit_ball_volume(2), PI);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, max_relative = 1e-15);
        assert_relative_eq!(unit_ball_volume(4), PI * PI / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn coordinates() {
        assert_relative_eq!(volume_coord(2.0, 1), 4.0);
        assert_relative_eq!(volume_coord(1.0, 2), PI);
        for &r in &[0.0, 1e-3, 0.7, 3.0, 1e4] {
            for d in 1..4 {
                assert_relative_eq!(radius_coord(volume_coord(r, d), d), r, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn friendly_giant_values() {
        let a = half();
        assert_relative_eq!(friendly_giant(GiantDatum::Finite(1.0), a, 0.0).unwrap(), 1.0);
        assert_relative_eq!(friendly_giant(GiantDatum::Infinite, a, 1.0).unwrap(), 4.0);
        assert_relative_eq!(friendly_giant(GiantDatum::Finite(1.0), a, 6.0).unwrap(), 0.0625);
        assert_eq!(friendly_giant(GiantDatum::Infinite, a, 0.0), Err(Error::UnboundedAtZero));
        assert_eq!(friendly_giant(GiantDatum::Finite(0.0), a, 0.0), Err(Error::UndefinedAtZero));
        assert_eq!(friendly_giant(GiantDatum::Finite(0.0), a, 2.0), Ok(0.0));
    }

    #[test]
    fn profile_values() {
        let p = SelfSimilarParams::new(0.5, 1.0, 1).unwrap();
        assert_relative_eq!(profile(&p, 0.0), 4.0);
        assert_relative_eq!(profile(&p, 0.25), 4.0 / 9.0, max_relative = 1e-15);
        let p3 = SelfSimilarParams::new(0.3, 7.0, 3).unwrap();
        assert_relative_eq!(profile(&p3, 0.0), powf(0.3, -1.0 / 0.3), max_relative = 1e-15);
    }

    #[test]
    fn profile_tail_asymptotics() {
        let p = SelfSimilarParams::new(0.4, 2.0, 2).unwrap();
        let y = 1e5;
        let tail = powf(0.4 * 2.0 / (p.omega * y * y), 1.0 / 0.6);
        assert_relative_eq!(profile(&p, y), tail, max_relative = 1e-6);
    }

    #[test]
    fn self_similar_at_unit_time_is_profile() {
        let p = SelfSimilarParams::new(0.6, 3.0, 2).unwrap();
        for &x in &[0.0, 0.1, 1.0, 4.0] {
            assert_relative_eq!(self_similar_u(&p, 1.0, x).unwrap(), profile(&p, x), max_relative = 1e-14);
        }
        let unit = SelfSimilarParams::new(0.5, 1.0, 1).unwrap();
        assert_relative_eq!(self_similar_u(&unit, 1.0, 0.0).unwrap(), 4.0);
        assert!(self_similar_u(&unit, 0.0, 1.0).is_err());
        for &t in &[0.1, 1.0, 17.0] {
            assert_relative_eq!(
                self_similar_u(&p, t, 0.0).unwrap(),
                powf(t, -1.0 / 0.6) * powf(0.6, -1.0 / 0.6),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn self_similar_mass_values() {
        let p = SelfSimilarParams::new(0.5, 1.0, 1).unwrap();
        assert_eq!(self_similar_mass(&p, 0.0), 0.0);
        assert_relative_eq!(self_similar_mass(&p, 0.25), 0.5, max_relative = 1e-15);
        // closed form for alpha = 1/2: (M/2)(2 - 1/(2 kappa/M + 1/2))
        for &k in &[1e-3, 0.1, 2.0, 50.0] {
            let closed = 0.5 * (2.0 - 1.0 / (2.0 * k + 0.5));
            assert_relative_eq!(self_similar_mass(&p, k), closed, max_relative = 1e-14);
        }
        assert_relative_eq!(self_similar_mass(&p, 1e12), 1.0, max_relative = 1e-11);
    }

    #[test]
    fn self_similar_mass_matches_quadrature() {
        for &(alpha, mass) in &[(0.25, 0.5), (0.5, 1.0), (0.75, 5.0)] {
            let p = SelfSimilarParams::new(alpha, mass, 1).unwrap();
            for &k in &[0.05, 0.5, 3.0] {
                let quad = adaptive_simpson(|s| p.profile_in_volume(s), 0.0, k, 1e-13).unwrap();
                assert_relative_eq!(self_similar_mass(&p, k), quad, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn vortex_limit() {
        assert_eq!(vortex_limit_u(1.0, 1, 1.0, 0.0).unwrap(), 1.0);
        assert_eq!(vortex_limit_u(1.0, 1, 1.0, 1.0).unwrap(), 0.0);
        assert!(vortex_limit_u(1.0, 1, 0.0, 0.0).is_err());
        // (1/t) times support volume M t
        for &t in &[0.5, 2.0, 9.0] {
            let r = radius_coord(3.0 * t, 2);
            assert_eq!(vortex_limit_u(3.0, 2, t, r * (1.0 - 1e-12)).unwrap(), 1.0 / t);
            assert_eq!(vortex_limit_u(3.0, 2, t, r * (1.0 + 1e-12)).unwrap(), 0.0);
        }
    }

    #[test]
    fn equilibrium_of_profile_ode() {
        let p = SelfSimilarParams::new(0.5, 1.0, 1).unwrap();
        let w = profile_ode_equilibrium(p.alpha);
        assert_relative_eq!(w, 2.0);
        assert!(profile_ode_rhs(&p, w).abs() < 1e-15);
        assert!(profile_ode_rhs(&p, 0.5 * w) < 0.0);
    }

    #[test]
    fn total_mass_quadrature() {
        let p = SelfSimilarParams::new(0.5, 1.0, 1).unwrap();
        let m = profile_total_mass(&p, 1e-10).unwrap();
        assert!((m - 1.0).abs() < 1e-8, "{m}");
    }

    #[test]
    fn ode_oracle_matches_closed_form() {
        let p = SelfSimilarParams::new(0.5, 1.0, 1).unwrap();
        let oracle = profile_ode_oracle(&p, 5.0, 1e-7).unwrap();
        let worst = oracle
            .radii
            .iter()
            .zip(&oracle.values)
            .map(|(&r, &f)| ((f - profile(&p, r)) / profile(&p, r)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
    }
}
