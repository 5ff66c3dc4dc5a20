//! Shocks for piecewise data: the generalised Rankine-Hugoniot speed
//! `S' = m [u^alpha] / [u]`, fixed-step RK4 shock paths, the two-bump
//! scenario, the mass-conserving spurious solution for square data, and the
//! Lax-Oleinik admissibility check.

use alloc::vec::Vec;

use crate::characteristics::{square_rarefaction_m, square_rarefaction_u};
use crate::error::{non_negative, positive, Error, Result};
use crate::exact::MobilityExponent;
use crate::math::{abs, ceil, exp, exp_m1, ln, ln_1p, pow_nonneg, powf};
use crate::quadrature::adaptive_simpson;

/// Shock speed `m (u+^alpha - u-^alpha) / (u+ - u-)`.
///
/// Continuous across `u+ = u-`, where it equals `alpha u^{alpha-1} m`. With one
/// state zero it reduces to `m u^{alpha-1}` of the other.
pub fn rh_speed(m: f64, u_plus: f64, u_minus: f64, alpha: MobilityExponent) -> Result<f64> {
    non_negative("m", m)?;
    non_negative("u_plus", u_plus)?;
    non_negative("u_minus", u_minus)?;
    let a = alpha.get();
    let (hi, lo) = if u_plus >= u_minus {
        (u_plus, u_minus)
    } else {
        (u_minus, u_plus)
    };
    if hi == 0.0 {
        return Ok(0.0);
    }
    if lo == 0.0 {
        return Ok(m * powf(hi, a - 1.0));
    }
    // lo^{a-1} ((1+x)^a - 1)/x with x = hi/lo - 1
    let x = hi / lo - 1.0;
    let quotient = if x == 0.0 { a } else { exp_m1(a * ln_1p(x)) / x };
    Ok(m * powf(lo, a - 1.0) * quotient)
}

/// A sampled shock curve `t -> S(t)` on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockPath {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    /// Right-hand side evaluated at each sample.
    pub speeds: Vec<f64>,
    pub step: f64,
    /// Richardson estimate of the global error from a half-step rerun.
    pub error_estimate: f64,
}

impl ShockPath {
    /// Cubic Hermite interpolation of the path; clamps outside the sampled range.
    pub fn position_at(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.positions[0];
        }
        if t >= self.times[n - 1] {
            return self.positions[n - 1];
        }
        let k = (((t - self.times[0]) / self.step) as usize).min(n - 2);
        let h = self.times[k + 1] - self.times[k];
        let s = (t - self.times[k]) / h;
        let (p0, p1) = (self.positions[k], self.positions[k + 1]);
        let (m0, m1) = (self.speeds[k] * h, self.speeds[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * p0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * p1 + (s3 - s2) * m1
    }

    /// `S'` from fourth-order finite differences of the positions alone.
    pub fn differentiated_speeds(&self) -> Vec<f64> {
        let p = &self.positions;
        let n = p.len();
        let h = self.step;
        if n < 5 {
            return self.speeds.clone();
        }
        (0..n)
            .map(|k| {
                if k >= 2 && k + 2 < n {
                    (p[k - 2] - 8.0 * p[k - 1] + 8.0 * p[k + 1] - p[k + 2]) / (12.0 * h)
                } else if k < 2 {
                    let q = &p[k..k + 5];
                    (-25.0 * q[0] + 48.0 * q[1] - 36.0 * q[2] + 16.0 * q[3] - 3.0 * q[4]) / (12.0 * h)
                } else {
                    let q = &p[k - 4..=k];
                    (25.0 * q[4] - 48.0 * q[3] + 36.0 * q[2] - 16.0 * q[1] + 3.0 * q[0]) / (12.0 * h)
                }
            })
            .collect()
    }
}

fn rk4_pass<F>(rhs: &mut F, s0: f64, t_end: f64, steps: usize) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let h = t_end / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut positions = Vec::with_capacity(steps + 1);
    let mut s = s0;
    times.push(0.0);
    positions.push(s);
    for n in 0..steps {
        let t = n as f64 * h;
        let k1 = rhs(t, s)?;
        let k2 = rhs(t + 0.5 * h, s + 0.5 * h * k1)?;
        let k3 = rhs(t + 0.5 * h, s + 0.5 * h * k2)?;
        let k4 = rhs(t + h, s + h * k3)?;
        s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !s.is_finite() {
            return Err(Error::NonFinite("shock position"));
        }
        times.push((n + 1) as f64 * h);
        positions.push(s);
    }
    Ok((times, positions))
}

/// Classical fixed-step RK4 for `S' = rhs(t, S)`, `S(0) = s0`, on `[0, t_end]`.
///
/// The step is shrunk to `t_end / ceil(t_end / h)` so the grid is uniform and
/// ends at `t_end`.
pub fn rk4_integrate<F>(mut rhs: F, s0: f64, t_end: f64, h: f64) -> Result<ShockPath>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    positive("h", h)?;
    positive("t_end", t_end)?;
    if !s0.is_finite() {
        return Err(Error::NonFinite("initial shock position"));
    }
    let steps = ceil(t_end / h - 1e-9).max(1.0) as usize;
    let (times, positions) = rk4_pass(&mut rhs, s0, t_end, steps)?;
    let (_, fine) = rk4_pass(&mut rhs, s0, t_end, 2 * steps)?;
    let error_estimate = positions
        .iter()
        .enumerate()
        .map(|(k, s)| abs(s - fine[2 * k]))
        .fold(0.0, f64::max)
        * 16.0
        / 15.0;
    let speeds = times
        .iter()
        .zip(&positions)
        .map(|(&t, &s)| rhs(t, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(ShockPath {
        times,
        positions,
        speeds,
        step: t_end / steps as f64,
        error_estimate,
    })
}

/// A weak solution pasted from two classical solutions along a shock.
pub trait ShockedSolution {
    fn alpha(&self) -> MobilityExponent;
    /// Density of the classical solution left of the shock.
    fn left_u(&self, t: f64, rho: f64) -> f64;
    /// Density of the classical solution right of the shock.
    fn right_u(&self, t: f64, rho: f64) -> f64;
    /// Mass function of the left solution.
    fn left_m(&self, t: f64, rho: f64) -> f64;
    /// Mass function of the right solution.
    fn right_m(&self, t: f64, rho: f64) -> f64;
}

/// Rankine-Hugoniot residual `|S' [u] - m [u^alpha]|` at every sample, with
/// `S'` differentiated from the sampled positions and `m` taken from the
/// right solution. Vanishes only if the path, the jump relation and mass
/// continuity across the shock are all consistent.
pub fn rh_residuals(sol: &impl ShockedSolution, path: &ShockPath) -> Vec<f64> {
    let a = sol.alpha().get();
    path.differentiated_speeds()
        .iter()
        .zip(path.times.iter().zip(&path.positions))
        .map(|(&speed, (&t, &s))| {
            let ul = sol.left_u(t, s);
            let ur = sol.right_u(t, s);
            let m = sol.right_m(t, s);
            abs(speed * (ul - ur) - m * (pow_nonneg(ul, a) - pow_nonneg(ur, a)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilitySample {
    pub t: f64,
    /// `alpha m u_left^{alpha-1}` (`+inf` when `u_left = 0`).
    pub left_speed: f64,
    pub shock_speed: f64,
    pub right_speed: f64,
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub samples: Vec<AdmissibilitySample>,
}

impl AdmissibilityReport {
    pub fn all_admissible(&self) -> bool {
        self.samples.iter().all(|s| s.admissible)
    }

    pub fn none_admissible(&self) -> bool {
        self.samples.iter().all(|s| !s.admissible)
    }
}

/// Lax-Oleinik check `alpha m u_l^{alpha-1} >= S' >= alpha m u_r^{alpha-1}`
/// along the path, with `0^{alpha-1} = +inf`.
pub fn lax_oleinik_check(sol: &impl ShockedSolution, path: &ShockPath) -> AdmissibilityReport {
    let a = sol.alpha().get();
    let samples = path
        .times
        .iter()
        .zip(&path.positions)
        .zip(&path.speeds)
        .map(|((&t, &s), &shock_speed)| {
            let m = sol.left_m(t, s);
            let char_speed = |u: f64| {
                if u == 0.0 {
                    f64::INFINITY
                } else {
                    a * m * powf(u, a - 1.0)
                }
            };
            let left_speed = char_speed(sol.left_u(t, s));
            let right_speed = char_speed(sol.right_u(t, s));
            let slack = 1e-12 * abs(shock_speed).max(1.0);
            let admissible = left_speed >= shock_speed - slack && shock_speed >= right_speed - slack;
            AdmissibilitySample {
                t,
                left_speed,
                shock_speed,
                right_speed,
                admissible,
            }
        })
        .collect();
    AdmissibilityReport { samples }
}

/// Mass-conserving weak solution for `u0 = c0` on `[0, L)`: a flat state
/// `(c0^{-alpha} + alpha t)^{-1/alpha}` cut off by a shock at
/// `S(t) = L c0 (c0^{-alpha} + alpha t)^{1/alpha}`, with `u = 0` beyond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpuriousSquare {
    pub c0: f64,
    pub length: f64,
    pub alpha: MobilityExponent,
}

pub fn spurious_square(c0: f64, length: f64, alpha: MobilityExponent) -> Result<SpuriousSquare> {
    positive("c0", c0)?;
    positive("length", length)?;
    Ok(SpuriousSquare { c0, length, alpha })
}

impl SpuriousSquare {
    fn clock(&self, t: f64) -> f64 {
        let a = self.alpha.get();
        powf(self.c0, -a) + a * t
    }

    pub fn flat_value(&self, t: f64) -> f64 {
        powf(self.clock(t), -1.0 / self.alpha.get())
    }

    pub fn shock(&self, t: f64) -> f64 {
        self.length * self.c0 * powf(self.clock(t), 1.0 / self.alpha.get())
    }

    pub fn u(&self, t: f64, rho: f64) -> f64 {
        if rho < self.shock(t) {
            self.flat_value(t)
        } else {
            0.0
        }
    }

    pub fn m(&self, t: f64, rho: f64) -> f64 {
        self.flat_value(t) * rho.min(self.shock(t))
    }

    /// RK4 path of `S' = S / (c0^{-alpha} + alpha t)`, `S(0) = L`.
    pub fn path(&self, t_end: f64, h: f64) -> Result<ShockPath> {
        rk4_integrate(|t, s| Ok(s / self.clock(t)), self.length, t_end, h)
    }
}

impl ShockedSolution for SpuriousSquare {
    fn alpha(&self) -> MobilityExponent {
        self.alpha
    }
    fn left_u(&self, t: f64, _rho: f64) -> f64 {
        self.flat_value(t)
    }
    fn right_u(&self, _t: f64, _rho: f64) -> f64 {
        0.0
    }
    fn left_m(&self, t: f64, rho: f64) -> f64 {
        self.flat_value(t) * rho
    }
    fn right_m(&self, _t: f64, _rho: f64) -> f64 {
        self.c0 * self.length
    }
}

/// Datum `c1 on [0, 1) + c2 on [a, b)` with `1 < a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBumpParams {
    pub c1: f64,
    pub c2: f64,
    pub a: f64,
    pub b: f64,
    pub alpha: MobilityExponent,
}

impl TwoBumpParams {
    pub fn new(c1: f64, c2: f64, a: f64, b: f64, alpha: MobilityExponent) -> Result<Self> {
        positive("c1", c1)?;
        positive("c2", c2)?;
        if !(a > 1.0 && b > a && b.is_finite()) {
            return Err(Error::InvalidData("two bumps need 1 < a < b"));
        }
        Ok(Self { c1, c2, a, b, alpha })
    }

    pub fn total_mass(&self) -> f64 {
        self.c1 + self.c2 * (self.b - self.a)
    }

    pub fn sup_norm(&self) -> f64 {
        self.c1.max(self.c2)
    }

    pub fn initial_density(&self, rho: f64) -> f64 {
        if (0.0..1.0).contains(&rho) {
            self.c1
        } else if rho >= self.a && rho < self.b {
            self.c2
        } else {
            0.0
        }
    }

    pub fn initial_mass(&self, rho: f64) -> f64 {
        self.c1 * rho.clamp(0.0, 1.0) + self.c2 * (rho.clamp(self.a, self.b) - self.a)
    }

    /// Rarefaction of the first bump.
    pub fn left_u(&self, t: f64, rho: f64) -> f64 {
        square_rarefaction_u(self.c1, 1.0, self.alpha, t, rho).unwrap_or(f64::NAN)
    }

    pub fn left_m(&self, t: f64, rho: f64) -> f64 {
        square_rarefaction_m(self.c1, 1.0, self.alpha, t, rho).unwrap_or(f64::NAN)
    }

    /// Foot in `[a, b]` of the flat characteristic of the second bump through
    /// `rho`, or `None` once `rho` is in its fan.
    fn right_flat_foot(&self, t: f64, rho: f64) -> Option<f64> {
        let a = self.alpha.get();
        let drift = a * powf(self.c2, a - 1.0) * t;
        let rho0 = (rho - drift * (self.c1 - self.c2 * self.a)) / (1.0 + a * powf(self.c2, a) * t);
        (rho0 <= self.b).then_some(rho0)
    }

    fn right_fan_eta_pow(&self, t: f64, rho: f64) -> f64 {
        // eta^alpha with eta = ((rho - b)/(alpha M t))^{1/(alpha-1)}
        let ratio = (rho - self.b) / (self.alpha.get() * self.total_mass() * t);
        exp(-self.alpha.q() * ln(ratio))
    }

    /// Classical solution generated by the second bump (flat zone and fan),
    /// carrying the first bump's mass `c1` at its foot `a`.
    pub fn right_u(&self, t: f64, rho: f64) -> f64 {
        let a = self.alpha.get();
        if t == 0.0 {
            return if rho >= self.a && rho < self.b { self.c2 } else { 0.0 };
        }
        match self.right_flat_foot(t, rho) {
            Some(_) => powf(powf(self.c2, -a) + a * t, -1.0 / a),
            None => {
                let eta_pow = self.right_fan_eta_pow(t, rho);
                pow_nonneg(1.0 / eta_pow + a * t, -1.0 / a)
            }
        }
    }

    pub fn right_m(&self, t: f64, rho: f64) -> f64 {
        let a = self.alpha.get();
        if t == 0.0 {
            return self.c1 + self.c2 * (rho.clamp(self.a, self.b) - self.a);
        }
        match self.right_flat_foot(t, rho) {
            Some(rho0) => {
                (self.c1 + self.c2 * (rho0 - self.a)) * powf(1.0 + a * powf(self.c2, a) * t, 1.0 - 1.0 / a)
            }
            None => self.total_mass() * powf(1.0 + a * self.right_fan_eta_pow(t, rho) * t, 1.0 - 1.0 / a),
        }
    }

    /// Right-hand side of the shock ODE; fails once `S` falls behind the
    /// first characteristic of the second bump.
    pub fn shock_rhs(&self, t: f64, s: f64) -> Result<f64> {
        if !s.is_finite() {
            return Err(Error::NonFinite("shock position"));
        }
        if t > 0.0 {
            if let Some(rho0) = self.right_flat_foot(t, s) {
                if rho0 < self.a * (1.0 - 1e-12) {
                    return Err(Error::StepTooLarge { t });
                }
            }
        } else if s < self.a * (1.0 - 1e-12) {
            return Err(Error::StepTooLarge { t });
        }
        rh_speed(self.left_m(t, s), self.left_u(t, s), self.right_u(t, s), self.alpha)
    }
}

/// Solved two-bump scenario: the RK4 shock path and the pasted solution.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBumpSolution {
    pub params: TwoBumpParams,
    pub path: ShockPath,
}

/// Integrates the shock of the two-bump datum from `S(0) = a` to `t_end`.
pub fn two_bump_solve(params: TwoBumpParams, t_end: f64, h: f64) -> Result<TwoBumpSolution> {
    let path = rk4_integrate(|t, s| params.shock_rhs(t, s), params.a, t_end, h)?;
    Ok(TwoBumpSolution { params, path })
}

impl TwoBumpSolution {
    pub fn shock_at(&self, t: f64) -> f64 {
        self.path.position_at(t)
    }

    pub fn u(&self, t: f64, rho: f64) -> f64 {
        if rho < self.shock_at(t) {
            self.params.left_u(t, rho)
        } else {
            self.params.right_u(t, rho)
        }
    }

    pub fn m(&self, t: f64, rho: f64) -> f64 {
        if rho < self.shock_at(t) {
            self.params.left_m(t, rho)
        } else {
            self.params.right_m(t, rho)
        }
    }

    /// Total mass at time `t` by quadrature of the pasted density on
    /// `[0, R]`, plus the right solution's mass beyond `R`.
    pub fn quadrature_mass(&self, t: f64, tol: f64) -> Result<f64> {
        let s = self.shock_at(t);
        let left = adaptive_simpson(|r| self.params.left_u(t, r), 0.0, s, tol)?;
        let far = 1e6 * self.params.b;
        let right = adaptive_simpson(
            |x| {
                let r = s + exp(x);
                self.params.right_u(t, r) * (r - s)
            },
            ln(1e-12 * s),
            ln(far - s),
            tol,
        )?;
        // [s, s + 1e-12 s] carries at most sup u times its width
        let sliver = self.params.right_u(t, s) * 1e-12 * s;
        let beyond = self.params.total_mass() - self.params.right_m(t, far);
        Ok(left + sliver + right + beyond)
    }
}

impl ShockedSolution for TwoBumpParams {
    fn alpha(&self) -> MobilityExponent {
        self.alpha
    }
    fn left_u(&self, t: f64, rho: f64) -> f64 {
        TwoBumpParams::left_u(self, t, rho)
    }
    fn right_u(&self, t: f64, rho: f64) -> f64 {
        TwoBumpParams::right_u(self, t, rho)
    }
    fn left_m(&self, t: f64, rho: f64) -> f64 {
        TwoBumpParams::left_m(self, t, rho)
    }
    fn right_m(&self, t: f64, rho: f64) -> f64 {
        TwoBumpParams::right_m(self, t, rho)
    }
}
