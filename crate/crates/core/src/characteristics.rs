//! Exact solutions for radially non-increasing data by generalised
//! characteristics.
//!
//! The datum `u0` is piecewise constant in the volume coordinate, so `m0` is
//! piecewise linear and every characteristic formula is closed form. A foot
//! `(rho0, eta0)` moves along the straight line
//!
//! ```text
//!     rho(t) = rho0 + alpha m0(rho0) eta0^{alpha - 1} t
//! ```
//!
//! and carries `u = (eta0^{-alpha} + alpha t)^{-1/alpha}`. At each jump of
//! `u0`, `eta0` sweeps the whole jump interval and the resulting lines form a
//! rarefaction fan; the last jump down to zero fans out to infinity.
//!
//! Feet are ordered by increasing `rho0`, then decreasing `eta0`. The image
//! `P_t` is strictly increasing in that order, so inversion reduces to a
//! binary search over pieces followed by a closed-form solve inside one piece.

use alloc::vec::Vec;

use crate::error::{non_negative, positive, Error, Result};
use crate::exact::MobilityExponent;
use crate::math::{exp, ln, pow_nonneg, powf};

/// Non-increasing step datum `u0` over the volume coordinate.
///
/// Cell `i` carries `values[i]` on `[edges[i], edges[i + 1])`; `u0` vanishes
/// beyond the last edge and on the leading gap `[0, edges[0])`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialInitialData {
    edges: Vec<f64>,
    values: Vec<f64>,
    masses: Vec<f64>,
}

impl RadialInitialData {
    pub fn new(edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if edges.len() != values.len() + 1 {
            return Err(Error::InvalidData("need exactly one more edge than values"));
        }
        if edges.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::InvalidData("non-finite edge or value"));
        }
        if edges[0] < 0.0 {
            return Err(Error::InvalidData("negative leading edge"));
        }
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidData("edges must be strictly increasing"));
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidData("negative density"));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidData("values must be non-increasing"));
        }
        let mut edges = edges;
        let mut values = values;
        while values.last() == Some(&0.0) {
            values.pop();
            edges.pop();
        }
        let mut masses = Vec::with_capacity(edges.len());
        masses.push(0.0);
        for (i, v) in values.iter().enumerate() {
            let m = masses[i] + v * (edges[i + 1] - edges[i]);
            masses.push(m);
        }
        Ok(Self {
            edges,
            values,
            masses,
        })
    }

    /// `c0` on `[0, L)`.
    pub fn square(c0: f64, length: f64) -> Result<Self> {
        positive("c0", c0)?;
        positive("length", length)?;
        Self::new(alloc::vec![0.0, length], alloc::vec![c0])
    }

    /// Steps of a non-increasing density `f` on `[0, rho_end]`: `n` equal
    /// cells valued at their midpoints.
    pub fn sampled<F: Fn(f64) -> f64>(f: F, rho_end: f64, n: usize) -> Result<Self> {
        positive("rho_end", rho_end)?;
        if n == 0 {
            return Err(Error::InvalidData("need at least one cell"));
        }
        let h = rho_end / n as f64;
        let edges = (0..=n).map(|i| i as f64 * h).collect();
        let values = (0..n).map(|i| f((i as f64 + 0.5) * h)).collect();
        Self::new(edges, values)
    }

    /// The triangle `(1 - rho)_+` sampled on `n` cells.
    pub fn triangle(n: usize) -> Result<Self> {
        Self::sampled(|r| (1.0 - r).max(0.0), 1.0, n)
    }

    /// The same datum translated right by `b`, leaving `u0 = 0` on `[0, b)`.
    pub fn with_gap(&self, b: f64) -> Result<Self> {
        positive("gap", b)?;
        if self.gap() > 0.0 {
            return Err(Error::InvalidData("datum already has a leading gap"));
        }
        Ok(Self {
            edges: self.edges.iter().map(|e| e + b).collect(),
            values: self.values.clone(),
            masses: self.masses.clone(),
        })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Width of the leading gap.
    pub fn gap(&self) -> f64 {
        self.edges[0]
    }

    pub fn total_mass(&self) -> f64 {
        *self.masses.last().unwrap_or(&0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Right end of the support.
    pub fn support_end(&self) -> f64 {
        if self.values.is_empty() {
            self.edges[0]
        } else {
            *self.edges.last().unwrap()
        }
    }

    fn cell_of(&self, rho: f64) -> Option<usize> {
        if rho < self.edges[0] || self.values.is_empty() || rho >= self.support_end() {
            return None;
        }
        // last edge <= rho
        Some(self.edges.partition_point(|&e| e <= rho) - 1)
    }

    /// Initial mass `m0(rho)`.
    pub fn mass(&self, rho: f64) -> f64 {
        match self.cell_of(rho) {
            Some(i) => self.masses[i] + self.values[i] * (rho - self.edges[i]),
            None if rho < self.edges[0] => 0.0,
            None => self.total_mass(),
        }
    }

    /// `u0(rho^+)`.
    pub fn density(&self, rho: f64) -> f64 {
        self.cell_of(rho).map_or(0.0, |i| self.values[i])
    }

    /// `u0(rho^-)`.
    pub fn density_left(&self, rho: f64) -> f64 {
        if rho <= self.edges[0] {
            return 0.0;
        }
        let i = self.edges.partition_point(|&e| e < rho) - 1;
        self.values.get(i).copied().unwrap_or(0.0)
    }

    /// Value of the cell after `i`, zero past the support.
    fn next_value(&self, i: usize) -> f64 {
        self.values.get(i + 1).copied().unwrap_or(0.0)
    }
}

/// Translated copy of `data` with a leading gap of width `b`.
pub fn shift_gap(data: &RadialInitialData, b: f64) -> Result<RadialInitialData> {
    data.with_gap(b)
}

/// Foot `(rho0, eta0)` of the characteristic through a space-time point, with
/// `eta0` in the jump interval `[u0(rho0^+), u0(rho0^-)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicFoot {
    pub rho0: f64,
    pub eta0: f64,
}

/// A foot together with `ln eta0`, which stays finite where `eta0` underflows.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ResolvedFoot {
    foot: CharacteristicFoot,
    ln_eta: f64,
    mass0: f64,
}

/// `rho0 + alpha m0(rho0) eta0^{alpha-1} t`; feet with zero mass or zero
/// `eta0` do not move.
pub fn characteristic_position(
    foot: CharacteristicFoot,
    data: &RadialInitialData,
    alpha: MobilityExponent,
    t: f64,
) -> f64 {
    let m0 = data.mass(foot.rho0);
    if m0 == 0.0 || foot.eta0 == 0.0 {
        return foot.rho0;
    }
    let a = alpha.get();
    foot.rho0 + a * m0 * powf(foot.eta0, a - 1.0) * t
}

fn resolve(t: f64, rho: f64, data: &RadialInitialData, alpha: MobilityExponent) -> Result<ResolvedFoot> {
    positive("t", t)?;
    non_negative("rho", rho)?;
    if data.values.is_empty() {
        return Err(Error::InvalidData("zero total mass"));
    }
    let gap = data.gap();
    if rho < gap {
        return Err(Error::GapPoint { rho, gap });
    }
    let a = alpha.get();
    let edges = &data.edges;
    let values = &data.values;
    let masses = &data.masses;
    let speed = |m: f64, v: f64| a * m * powf(v, a - 1.0) * t;

    // flat piece i starts at the image of (e_i, v_i)
    let flat_start = |i: usize| edges[i] + speed(masses[i], values[i]);
    let (mut lo, mut hi) = (0usize, values.len());
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if flat_start(mid) <= rho {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let i = lo;
    let (v, e, m) = (values[i], edges[i], masses[i]);
    let flat_end = edges[i + 1] + speed(masses[i + 1], v);
    if rho <= flat_end {
        let rho0 = (e + (rho - flat_start(i)) / (1.0 + a * powf(v, a) * t)).clamp(e, edges[i + 1]);
        return Ok(ResolvedFoot {
            foot: CharacteristicFoot { rho0, eta0: v },
            ln_eta: ln(v),
            mass0: m + v * (rho0 - e),
        });
    }
    // fan of the jump at e_{i+1}: rho = e + alpha m eta^{alpha-1} t
    let e_next = edges[i + 1];
    let m_next = masses[i + 1];
    let ratio = (rho - e_next) / (a * m_next * t);
    let v_next = data.next_value(i);
    let mut ln_eta = ln(ratio) / (a - 1.0);
    if ln_eta > ln(v) {
        ln_eta = ln(v);
    }
    if v_next > 0.0 && ln_eta < ln(v_next) {
        ln_eta = ln(v_next);
    }
    Ok(ResolvedFoot {
        foot: CharacteristicFoot {
            rho0: e_next,
            eta0: exp(ln_eta),
        },
        ln_eta,
        mass0: m_next,
    })
}

/// Inverse of `P_t`: the foot whose characteristic reaches `rho` at time `t`.
pub fn invert_p(t: f64, rho: f64, data: &RadialInitialData, alpha: MobilityExponent) -> Result<CharacteristicFoot> {
    resolve(t, rho, data, alpha).map(|r| r.foot)
}

/// Density `u(t, rho)`.
pub fn eval_u(t: f64, rho: f64, data: &RadialInitialData, alpha: MobilityExponent) -> Result<f64> {
    non_negative("t", t)?;
    non_negative("rho", rho)?;
    if t == 0.0 {
        return Ok(data.density(rho));
    }
    if rho < data.gap() || data.values.is_empty() {
        return Ok(0.0);
    }
    let r = resolve(t, rho, data, alpha)?;
    let a = alpha.get();
    Ok(pow_nonneg(exp(-a * r.ln_eta) + a * t, -1.0 / a))
}

/// Mass `m(t, rho) = m0(rho0) (1 + alpha eta0^alpha t)^{1 - 1/alpha}`.
pub fn eval_m(t: f64, rho: f64, data: &RadialInitialData, alpha: MobilityExponent) -> Result<f64> {
    non_negative("t", t)?;
    non_negative("rho", rho)?;
    if t == 0.0 {
        return Ok(data.mass(rho));
    }
    if rho < data.gap() || data.values.is_empty() {
        return Ok(0.0);
    }
    let r = resolve(t, rho, data, alpha)?;
    let a = alpha.get();
    Ok(r.mass0 * powf(1.0 + a * exp(a * r.ln_eta) * t, 1.0 - 1.0 / a))
}

/// Bundles a datum with an exponent for repeated evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicSolution {
    pub data: RadialInitialData,
    pub alpha: MobilityExponent,
}

impl CharacteristicSolution {
    pub fn new(data: RadialInitialData, alpha: MobilityExponent) -> Self {
        Self { data, alpha }
    }

    /// `u(t, rho)`; NaN outside the domain `t, rho >= 0`.
    pub fn u(&self, t: f64, rho: f64) -> f64 {
        eval_u(t, rho, &self.data, self.alpha).unwrap_or(f64::NAN)
    }

    /// `m(t, rho)`; NaN outside the domain `t, rho >= 0`.
    pub fn m(&self, t: f64, rho: f64) -> f64 {
        eval_m(t, rho, &self.data, self.alpha).unwrap_or(f64::NAN)
    }
}

/// Closed-form rarefaction for `u0 = c0` on `[0, L)`: flat
/// `(c0^{-alpha} + alpha t)^{-1/alpha}` up to `L (1 + alpha c0^alpha t)`, then
/// the fan `(((rho - L) / (alpha c0 L t))^{alpha/(1-alpha)} + alpha t)^{-1/alpha}`.
pub fn square_rarefaction_u(c0: f64, length: f64, alpha: MobilityExponent, t: f64, rho: f64) -> Result<f64> {
    positive("c0", c0)?;
    positive("length", length)?;
    non_negative("t", t)?;
    non_negative("rho", rho)?;
    let a = alpha.get();
    if t == 0.0 {
        return Ok(if rho < length { c0 } else { 0.0 });
    }
    if rho <= length * (1.0 + a * powf(c0, a) * t) {
        return Ok(powf(powf(c0, -a) + a * t, -1.0 / a));
    }
    let ratio = (rho - length) / (a * c0 * length * t);
    Ok(pow_nonneg(powf(ratio, alpha.q()) + a * t, -1.0 / a))
}

/// Mass of the square-data rarefaction.
pub fn square_rarefaction_m(c0: f64, length: f64, alpha: MobilityExponent, t: f64, rho: f64) -> Result<f64> {
    positive("c0", c0)?;
    positive("length", length)?;
    non_negative("t", t)?;
    non_negative("rho", rho)?;
    let a = alpha.get();
    let total = c0 * length;
    if t == 0.0 {
        return Ok(c0 * rho.min(length));
    }
    let spread = 1.0 + a * powf(c0, a) * t;
    if rho <= length * spread {
        return Ok(c0 * rho * powf(spread, -1.0 / a));
    }
    let ratio = (rho - length) / (a * total * t);
    // eta^alpha = ratio^{-q}
    Ok(total * powf(1.0 + a * powf(ratio, -alpha.q()) * t, 1.0 - 1.0 / a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn half() -> MobilityExponent {
        MobilityExponent::new(0.5).unwrap()
    }

    #[test]
    fn rejects_bad_data() {
        assert!(RadialInitialData::new(alloc::vec![0.0, 1.0, 2.0], alloc::vec![1.0, 2.0]).is_err());
        assert!(RadialInitialData::new(alloc::vec![0.0, 1.0, 1.0], alloc::vec![2.0, 1.0]).is_err());
        assert!(RadialInitialData::new(alloc::vec![0.0, 1.0], alloc::vec![-1.0]).is_err());
        assert!(RadialInitialData::new(alloc::vec![0.0, 1.0], alloc::vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn data_accessors() {
        let d = RadialInitialData::new(alloc::vec![0.0, 1.0, 3.0, 4.0], alloc::vec![2.0, 0.5, 0.0]).unwrap();
        assert_eq!(d.values().len(), 2);
        assert_relative_eq!(d.total_mass(), 3.0);
        assert_eq!(d.sup_norm(), 2.0);
        assert_eq!(d.support_end(), 3.0);
        assert_relative_eq!(d.mass(0.5), 1.0);
        assert_relative_eq!(d.mass(2.0), 2.5);
        assert_relative_eq!(d.mass(10.0), 3.0);
        assert_eq!(d.density(1.0), 0.5);
        assert_eq!(d.density_left(1.0), 2.0);
        assert_eq!(d.density(3.0), 0.0);
        assert_eq!(d.density_left(3.0), 0.5);
    }

    #[test]
    fn zero_mass_foot_is_stationary() {
        let d = RadialInitialData::square(1.0, 1.0).unwrap();
        let foot = CharacteristicFoot { rho0: 0.0, eta0: 1.0 };
        for &t in &[0.0, 1.0, 100.0] {
            assert_eq!(characteristic_position(foot, &d, half(), t), 0.0);
        }
    }

    #[test]
    fn square_foot_position() {
        let d = RadialInitialData::square(1.0, 1.0).unwrap();
        let foot = CharacteristicFoot { rho0: 1.0, eta0: 1.0 };
        assert_relative_eq!(characteristic_position(foot, &d, half(), 2.0), 2.0);
    }

    #[test]
    fn triangle_tail_feet_are_stationary() {
        let d = RadialInitialData::triangle(64).unwrap();
        let foot = CharacteristicFoot { rho0: 1.5, eta0: 0.0 };
        assert_eq!(characteristic_position(foot, &d, half(), 3.0), 1.5);
    }

    #[test]
    fn invert_square() {
        let d = RadialInitialData::square(1.0, 1.0).unwrap();
        let f0 = invert_p(1.0, 0.0, &d, half()).unwrap();
        assert_eq!(f0, CharacteristicFoot { rho0: 0.0, eta0: 1.0 });
        let f1 = invert_p(1.0, 1.0, &d, half()).unwrap();
        assert_relative_eq!(f1.rho0, 2.0 / 3.0, max_relative = 1e-15);
        assert_eq!(f1.eta0, 1.0);
        let f2 = invert_p(1.0, 2.0, &d, half()).unwrap();
        assert_eq!(f2.rho0, 1.0);
        assert_relative_eq!(f2.eta0, 0.25, max_relative = 1e-14);
    }

    #[test]
    fn eval_square() {
        let d = RadialInitialData::square(1.0, 1.0).unwrap();
        assert_relative_eq!(eval_u(1.0, 1.0, &d, half()).unwrap(), 4.0 / 9.0, max_relative = 1e-15);
        assert_relative_eq!(eval_u(1.0, 2.0, &d, half()).unwrap(), 0.16, max_relative = 1e-14);
        assert_relative_eq!(eval_m(1.0, 1.0, &d, half()).unwrap(), 4.0 / 9.0, max_relative = 1e-15);
        assert_eq!(eval_u(0.0, 0.3, &d, half()).unwrap(), 1.0);
        assert_eq!(eval_m(0.0, 0.3, &d, half()).unwrap(), 0.3);
        assert_eq!(eval_m(2.0, 0.0, &d, half()).unwrap(), 0.0);
        assert_relative_eq!(eval_m(1.0, 1e12, &d, half()).unwrap(), 1.0, max_relative = 1e-5);
    }

    #[test]
    fn square_closed_form() {
        let a = half();
        // junction continuity
        let t = 1.3;
        let junction = 1.0 + 0.5 * t;
        let flat = square_rarefaction_u(1.0, 1.0, a, t, junction).unwrap();
        let fan = square_rarefaction_u(1.0, 1.0, a, t, junction * (1.0 + 1e-13)).unwrap();
        assert_relative_eq!(flat, fan, max_relative = 1e-10);
        assert_relative_eq!(flat, powf(1.0 + 0.5 * t, -2.0), max_relative = 1e-15);
        assert_relative_eq!(square_rarefaction_u(1.0, 1.0, a, 1.0, 2.0).unwrap(), 0.16, max_relative = 1e-14);
        let d = RadialInitialData::square(2.0, 0.7).unwrap();
        for &rho in &[0.0, 0.3, 0.9, 2.0, 40.0] {
            assert_relative_eq!(
                square_rarefaction_u(2.0, 0.7, a, 0.8, rho).unwrap(),
                eval_u(0.8, rho, &d, a).unwrap(),
                max_relative = 1e-13
            );
            assert_relative_eq!(
                square_rarefaction_m(2.0, 0.7, a, 0.8, rho).unwrap(),
                eval_m(0.8, rho, &d, a).unwrap(),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn gap_translation() {
        let a = MobilityExponent::new(0.3).unwrap();
        let base = RadialInitialData::new(alloc::vec![0.0, 0.5, 1.2], alloc::vec![3.0, 1.0]).unwrap();
        let gapped = shift_gap(&base, 0.4).unwrap();
        assert!(shift_gap(&base, 0.0).is_err());
        assert!(gapped.with_gap(1.0).is_err());
        for &t in &[0.0, 0.5, 4.0] {
            assert_eq!(eval_u(t, 0.2, &gapped, a).unwrap(), 0.0);
            assert_eq!(eval_m(t, 0.2, &gapped, a).unwrap(), 0.0);
            for &r in &[0.0, 0.3, 1.0, 7.0] {
                assert_relative_eq!(
                    eval_u(t, 0.4 + r, &gapped, a).unwrap(),
                    eval_u(t, r, &base, a).unwrap(),
                    max_relative = 1e-12
                );
                assert_relative_eq!(
                    eval_m(t, 0.4 + r, &gapped, a).unwrap(),
                    eval_m(t, r, &base, a).unwrap(),
                    max_relative = 1e-12
                );
            }
        }
        assert!(matches!(invert_p(1.0, 0.1, &gapped, a), Err(Error::GapPoint { .. })));
    }

    #[test]
    fn huge_rho_does_not_underflow() {
        let d = RadialInitialData::square(1.0, 1.0).unwrap();
        let a = MobilityExponent::new(0.9).unwrap();
        let u = eval_u(1.0, 1e300, &d, a).unwrap();
        assert!(u >= 0.0 && u.is_finite());
        let m = eval_m(1.0, 1e300, &d, a).unwrap();
        assert_relative_eq!(m, 1.0, max_relative = 1e-12);
    }
}
