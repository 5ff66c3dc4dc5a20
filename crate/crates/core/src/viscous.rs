//! Explicit solver for the regularised radial mass equation
//!
//! ```text
//! m_t = -((m_rho)_+ + eps)^alpha m + eps (d omega_d^{1/d} rho^{(d-1)/d})^2 m_rho_rho
//! ```
//!
//! with `m(0) = 0` and `m(rho_max) = M`, and the vanishing-viscosity study
//! against a scheme reference.

use alloc::vec;
use alloc::vec::Vec;

use crate::analysis::interpolate_uniform;
use crate::characteristics::RadialInitialData;
use crate::error::{positive, Error, Result};
use crate::exact::{unit_ball_volume, MobilityExponent};
use crate::math::{abs, ceil, exp, ln, powf, round, sqrt};
use crate::hjfd::Observer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscousConfig {
    pub epsilon: f64,
    pub alpha: MobilityExponent,
    pub dim: u32,
    pub h_rho: f64,
    pub h_t: f64,
    pub rho_max: f64,
    pub t_end: f64,
    /// Total mass, pinned at `rho_max`.
    pub mass: f64,
    /// Bound on the initial density.
    pub u_sup: f64,
}

/// Fraction of each stability limit used by [`ViscousConfig::auto`].
const STEP_SAFETY: f64 = 0.9;

impl ViscousConfig {
    /// Explicit grid; every stability limit is checked and a violation is an
    /// error.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        epsilon: f64,
        alpha: MobilityExponent,
        dim: u32,
        h_rho: f64,
        h_t: f64,
        rho_max: f64,
        t_end: f64,
        mass: f64,
        u_sup: f64,
    ) -> Result<Self> {
        positive("epsilon", epsilon)?;
        positive("h_rho", h_rho)?;
        positive("h_t", h_t)?;
        positive("rho_max", rho_max)?;
        positive("t_end", t_end)?;
        positive("mass", mass)?;
        positive("u_sup", u_sup)?;
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                value: 0.0,
                reason: "dimension must be at least 1",
            });
        }
        if rho_max < 3.0 * h_rho {
            return Err(Error::GridTooSmall("need at least one interior node"));
        }
        let steps = ceil(t_end / h_t - 1e-9).max(1.0);
        let config = Self {
            epsilon,
            alpha,
            dim,
            h_rho,
            h_t: t_end / steps,
            rho_max,
            t_end,
            mass,
            u_sup,
        };
        let requested = Self { h_t, ..config };
        requested.check_stability()?;
        Ok(config)
    }

    /// Grid scaled to the boundary-layer width: `h_rho = min(0.01, 0.03 sqrt(eps))`,
    /// `h_t` at 90% of the tightest limit, domain extended past the scheme
    /// truncation by `buffer`.
    pub fn auto(
        epsilon: f64,
        alpha: MobilityExponent,
        dim: u32,
        data: &RadialInitialData,
        t_end: f64,
        buffer: f64,
    ) -> Result<Self> {
        positive("epsilon", epsilon)?;
        positive("buffer", buffer)?;
        let mass = data.total_mass();
        let u_sup = data.sup_norm();
        if mass == 0.0 {
            return Err(Error::InvalidData("viscous runs need positive mass"));
        }
        let h_rho = (0.03 * sqrt(epsilon)).min(0.01);
        let a = alpha.get();
        let rho_max = data.support_end() * (1.0 + a * powf(u_sup, a) * t_end) + buffer;
        let probe = Self {
            epsilon,
            alpha,
            dim,
            h_rho,
            h_t: 1.0,
            rho_max,
            t_end,
            mass,
            u_sup,
        };
        let h_t = STEP_SAFETY * probe.stability_limits().iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
        Self::new(epsilon, alpha, dim, h_rho, h_t, rho_max, t_end, mass, u_sup)
    }

    /// `eps (d omega_d^{1/d} rho^{(d-1)/d})^2`.
    pub fn diffusion_coeff(&self, rho: f64) -> f64 {
        let d = self.dim as f64;
        let omega = unit_ball_volume(self.dim);
        let c = d * powf(omega, 1.0 / d) * powf(rho, (d - 1.0) / d);
        self.epsilon * c * c
    }

    /// Upper limits on `h_t`, each named. The transport limit is strict.
    pub fn stability_limits(&self) -> [(&'static str, f64); 3] {
        let a = self.alpha.get();
        let eps = self.epsilon;
        let h = self.h_rho;
        let c_max = self.diffusion_coeff(self.rho_max);
        let parabolic = h * h / (2.0 * c_max);
        let transport = STEP_SAFETY * h / powf(self.u_sup + eps, a);
        // keeps every coefficient of the explicit update non-negative
        let monotone = 1.0 / (powf(self.u_sup + eps, a) + a * powf(eps, a - 1.0) * self.mass / h + 2.0 * c_max / (h * h));
        [("parabolic", parabolic), ("transport", transport), ("monotone", monotone)]
    }

    pub fn check_stability(&self) -> Result<()> {
        for (which, limit) in self.stability_limits() {
            let broken = if which == "transport" {
                self.h_t >= limit
            } else {
                self.h_t > limit
            };
            if broken {
                return Err(Error::StabilityViolated {
                    h_t: self.h_t,
                    limit,
                    which,
                });
            }
        }
        Ok(())
    }

    pub fn last_node(&self) -> usize {
        ceil(self.rho_max / self.h_rho - 1e-9) as usize
    }

    pub fn steps(&self) -> usize {
        round(self.t_end / self.h_t) as usize
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.h_rho
    }
}

/// One explicit step. `coeffs[j]` is the diffusion coefficient at node `j`.
pub fn viscous_step(row: &[f64], out: &mut [f64], config: &ViscousConfig) -> Result<()> {
    config.check_stability()?;
    if row.len() != out.len() || row.len() < 3 {
        return Err(Error::GridTooSmall("rows must match and hold three nodes"));
    }
    let coeffs = diffusion_coeffs(config, row.len());
    step(row, out, &coeffs, config);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("viscous row"));
    }
    Ok(())
}

fn diffusion_coeffs(config: &ViscousConfig, len: usize) -> Vec<f64> {
    (0..len).map(|j| config.diffusion_coeff(config.node(j))).collect()
}

fn step(row: &[f64], out: &mut [f64], coeffs: &[f64], config: &ViscousConfig) {
    let a = config.alpha.get();
    let eps = config.epsilon;
    let inv_h = 1.0 / config.h_rho;
    let inv_h2 = inv_h * inv_h;
    let h_t = config.h_t;
    let last = row.len() - 1;
    for j in 1..last {
        let s = (row[j] - row[j - 1]) * inv_h;
        let g = exp(a * ln(s.max(0.0) + eps));
        let lap = (row[j + 1] - 2.0 * row[j] + row[j - 1]) * inv_h2;
        out[j] = row[j] - h_t * g * row[j] + h_t * coeffs[j] * lap;
    }
    out[0] = 0.0;
    out[last] = config.mass;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscousSolution {
    pub config: ViscousConfig,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
}

impl ViscousSolution {
    pub fn final_row(&self) -> &[f64] {
        self.snapshots.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.config.last_node()).map(|j| self.config.node(j)).collect()
    }
}

/// Evolves `m0` sampled at the nodes, keeping rows nearest to each requested
/// time; `observer` sees every row.
pub fn run_viscous(
    m0: impl Fn(f64) -> f64,
    config: &ViscousConfig,
    snapshot_times: &[f64],
    mut observer: Option<Observer<'_>>,
) -> Result<ViscousSolution> {
    config.check_stability()?;
    let len = config.last_node() + 1;
    let mut row: Vec<f64> = (0..len).map(|j| m0(config.node(j))).collect();
    let slack = 1e-12 * config.mass;
    for w in row.windows(2) {
        if w[1] < w[0] - slack {
            return Err(Error::InvalidData("initial mass must be non-decreasing"));
        }
    }
    if row.iter().any(|v| !v.is_finite() || *v < -slack || *v > config.mass + slack) {
        return Err(Error::InvalidData("initial mass outside [0, M]"));
    }
    row[0] = 0.0;
    row[len - 1] = config.mass;
    let coeffs = diffusion_coeffs(config, len);
    let mut next_row = vec![0.0; len];
    let steps = config.steps();
    let mut wanted: Vec<(usize, usize)> = snapshot_times
        .iter()
        .enumerate()
        .map(|(k, &t)| ((round(t / config.h_t).max(0.0) as usize).min(steps), k))
        .collect();
    wanted.sort_unstable();
    let mut snapshots = vec![Vec::new(); snapshot_times.len()];
    let mut times = vec![0.0; snapshot_times.len()];
    let mut next = 0;
    for n in 0..=steps {
        if n > 0 {
            step(&row, &mut next_row, &coeffs, config);
            core::mem::swap(&mut row, &mut next_row);
        }
        let t = n as f64 * config.h_t;
        if let Some(obs) = observer.as_mut() {
            obs(n, t, &row);
        }
        while next < wanted.len() && wanted[next].0 == n {
            snapshots[wanted[next].1] = row.clone();
            times[wanted[next].1] = t;
            next += 1;
        }
    }
    if row.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("viscous row"));
    }
    Ok(ViscousSolution {
        config: *config,
        times,
        snapshots,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscosityRow {
    pub epsilon: f64,
    pub h_rho: f64,
    pub h_t: f64,
    pub sup_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityTable {
    pub rows: Vec<ViscosityRow>,
    pub window: (f64, f64),
    pub solutions: Vec<ViscousSolution>,
}

impl ViscosityTable {
    /// Each distance is at most `(1 + slack)` times the previous one.
    pub fn decreasing_within(&self, slack: f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].sup_distance <= (1.0 + slack) * w[0].sup_distance)
    }
}

/// Sup distance at `t_end`, over viscous nodes in `window`, between each
/// viscous run and a reference row on a uniform grid of spacing `ref_h`.
/// Each run uses [`ViscousConfig::auto`] with the given `buffer`.
#[allow(clippy::too_many_arguments)]
pub fn vanishing_viscosity_study(
    data: &RadialInitialData,
    epsilons: &[f64],
    alpha: MobilityExponent,
    dim: u32,
    t_end: f64,
    buffer: f64,
    reference: (&[f64], f64),
    window: (f64, f64),
) -> Result<ViscosityTable> {
    if epsilons.is_empty() || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidData("epsilons must be non-empty and decreasing"));
    }
    let (ref_row, ref_h) = reference;
    if ref_row.len() < 2 || (ref_row.len() - 1) as f64 * ref_h < window.1 {
        return Err(Error::OracleUnavailable("reference grid does not cover the window"));
    }
    let mut rows = Vec::with_capacity(epsilons.len());
    let mut solutions = Vec::with_capacity(epsilons.len());
    for &epsilon in epsilons {
        let config = ViscousConfig::auto(epsilon, alpha, dim, data, t_end, buffer)?;
        let sol = run_viscous(|r| data.mass(r), &config, &[t_end], None)?;
        let sup_distance = sol
            .final_row()
            .iter()
            .enumerate()
            .map(|(j, m)| (config.node(j), m))
            .filter(|(r, _)| *r >= window.0 && *r <= window.1)
            .map(|(r, m)| abs(m - interpolate_uniform(ref_row, ref_h, r)))
            .fold(0.0, f64::max);
        rows.push(ViscosityRow {
            epsilon,
            h_rho: config.h_rho,
            h_t: config.h_t,
            sup_distance,
        });
        solutions.push(sol);
    }
    Ok(ViscosityTable {
        rows,
        window,
        solutions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn half() -> MobilityExponent {
        MobilityExponent::new(0.5).unwrap()
    }

    fn square() -> RadialInitialData {
        RadialInitialData::square(1.0, 1.0).unwrap()
    }

    #[test]
    fn one_dimensional_coefficient_is_four_eps() {
        let c = ViscousConfig::auto(0.01, half(), 1, &square(), 1.0, 1.0).unwrap();
        for &r in &[0.0, 0.3, 2.0] {
            assert_relative_eq!(c.diffusion_coeff(r), 0.04, max_relative = 1e-15);
        }
        let c2 = ViscousConfig { dim: 2, ..c };
        assert_eq!(c2.diffusion_coeff(0.0), 0.0);
        // (2 sqrt(pi) sqrt(rho))^2 = 4 pi rho
        assert_relative_eq!(c2.diffusion_coeff(0.5), 0.01 * 4.0 * core::f64::consts::PI * 0.5, max_relative = 1e-14);
    }

    #[test]
    fn flat_interior_decays_by_eps_power() {
        let c = ViscousConfig::auto(0.01, half(), 1, &square(), 1.0, 1.0).unwrap();
        let row = vec![1.0; 50];
        let mut out = vec![0.0; 50];
        viscous_step(&row, &mut out, &c).unwrap();
        for v in &out[2..48] {
            assert_relative_eq!(*v, 1.0 - powf(0.01, 0.5) * c.h_t, max_relative = 1e-14);
        }
        assert_eq!(out[0], 0.0);
        assert_eq!(out[49], 1.0);
    }

    #[test]
    fn stability_is_enforced() {
        let c = ViscousConfig::auto(0.01, half(), 1, &square(), 1.0, 1.0).unwrap();
        let r = ViscousConfig::new(0.01, half(), 1, c.h_rho, 10.0 * c.h_t, c.rho_max, 1.0, 1.0, 1.0);
        assert!(matches!(r, Err(Error::StabilityViolated { .. })));
        let bad = ViscousConfig { h_t: 10.0 * c.h_t, ..c };
        assert!(viscous_step(&[0.0; 5], &mut [0.0; 5], &bad).is_err());
    }

    #[test]
    fn square_run_stays_monotone_and_bounded() {
        let data = square();
        let c = ViscousConfig::auto(0.05, half(), 1, &data, 1.0, 1.0).unwrap();
        let mut worst: f64 = 0.0;
        let mut obs = |_: usize, _: f64, row: &[f64]| {
            for w in row.windows(2) {
                worst = worst.max(w[0] - w[1]);
            }
            for v in row {
                worst = worst.max(-v).max(v - 1.0);
            }
        };
        let sol = run_viscous(|r| data.mass(r), &c, &[1.0], Some(&mut obs)).unwrap();
        assert!(worst <= 1e-12, "{worst}");
        let row = sol.final_row();
        // the pinned edge leaves a layer; the bound holds on the scheme domain
        let inner = ((c.rho_max - 1.0) / c.h_rho) as usize;
        let u_max = row[..inner].windows(2).map(|w| (w[1] - w[0]) / c.h_rho).fold(0.0, f64::max);
        assert!(u_max <= 1.0 + 1e-9, "{u_max}");
    }
}
