//! Monotone upwind scheme for the viscosity solution of the mass equation
//!
//! ```text
//! M_j^{n+1} = M_j^n / (1 + h_t H_delta((M_j^n - M_{j-1}^n) / h_rho)),
//! H_delta(s) = (s_+ + delta)^alpha - delta^alpha,
//! ```
//!
//! with `M_0 = 0`. Only the left neighbour enters, so the right edge of the
//! grid needs no boundary condition.

use alloc::vec;
use alloc::vec::Vec;

use crate::characteristics::RadialInitialData;
use crate::error::{positive, Error, Result};
use crate::exact::MobilityExponent;
use crate::math::{abs, ceil, exp, ln, pow_nonneg, powf, round};

/// `(s_+ + delta)^alpha - delta^alpha`.
pub fn h_delta(s: f64, delta: f64, alpha: MobilityExponent) -> f64 {
    let a = alpha.get();
    pow_nonneg(s.max(0.0) + delta, a) - pow_nonneg(delta, a)
}

/// Grid and regularisation of one scheme run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub delta: f64,
    pub alpha: MobilityExponent,
    pub h_rho: f64,
    pub h_t: f64,
    pub rho_max: f64,
    pub t_end: f64,
    /// Upper bound of the initial mass.
    pub m_bar: f64,
}

impl FdConfig {
    /// `h_rho = delta^{1+2 alpha}`, `h_t = delta^{2+alpha} / (2 alpha m_bar)`,
    /// with `h_t` shrunk so an integer number of steps lands on `t_end`.
    pub fn coupled(delta: f64, alpha: MobilityExponent, m_bar: f64, rho_max: f64, t_end: f64) -> Result<Self> {
        positive("delta", delta)?;
        positive("m_bar", m_bar)?;
        let a = alpha.get();
        let h_rho = powf(delta, 1.0 + 2.0 * a);
        let h_t = powf(delta, 2.0 + a) / (2.0 * a * m_bar);
        Self::with_grid(delta, alpha, m_bar, rho_max, t_end, h_rho, h_t)
    }

    /// Explicit grid; rejects anything that breaks the strict CFL bound.
    pub fn with_grid(
        delta: f64,
        alpha: MobilityExponent,
        m_bar: f64,
        rho_max: f64,
        t_end: f64,
        h_rho: f64,
        h_t: f64,
    ) -> Result<Self> {
        positive("delta", delta)?;
        positive("m_bar", m_bar)?;
        positive("rho_max", rho_max)?;
        positive("t_end", t_end)?;
        positive("h_rho", h_rho)?;
        positive("h_t", h_t)?;
        if rho_max < 2.0 * h_rho {
            return Err(Error::GridTooSmall("rho_max shorter than two cells"));
        }
        let steps = ceil(t_end / h_t - 1e-9).max(1.0);
        let config = Self {
            delta,
            alpha,
            h_rho,
            h_t: t_end / steps,
            rho_max,
            t_end,
            m_bar,
        };
        // the CFL check sees the requested step, not the shrunk one
        let requested = Self { h_t, ..config };
        if !cfl_ok(&requested) {
            return Err(Error::CflViolated {
                ratio: requested.cfl_ratio(),
                bound: requested.cfl_bound(),
            });
        }
        Ok(config)
    }

    /// `h_t / h_rho`.
    pub fn cfl_ratio(&self) -> f64 {
        self.h_t / self.h_rho
    }

    /// `delta^{1-alpha} / (alpha m_bar)`.
    pub fn cfl_bound(&self) -> f64 {
        let a = self.alpha.get();
        powf(self.delta, 1.0 - a) / (a * self.m_bar)
    }

    /// Index of the last node, `J`.
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

/// Truncation `rho_max = L (1 + alpha |u0|^alpha T) + 10 h_rho` for data
/// supported in `[0, L]`.
pub fn default_rho_max(support_end: f64, u_sup: f64, alpha: MobilityExponent, t_end: f64, h_rho: f64) -> f64 {
    let a = alpha.get();
    support_end * (1.0 + a * powf(u_sup, a) * t_end) + 10.0 * h_rho
}

/// `true` iff `h_t / h_rho < delta^{1-alpha} / (alpha m_bar)`.
pub fn cfl_ok(config: &FdConfig) -> bool {
    config.cfl_ratio() < config.cfl_bound()
}

/// One scheme step from `row` into `out`.
pub fn fd_step(row: &[f64], out: &mut [f64], config: &FdConfig) -> Result<()> {
    if !cfl_ok(config) {
        return Err(Error::CflViolated {
            ratio: config.cfl_ratio(),
            bound: config.cfl_bound(),
        });
    }
    if row.len() != out.len() || row.len() < 2 {
        return Err(Error::GridTooSmall("rows must match and hold two nodes"));
    }
    out.copy_from_slice(row);
    PowCache::new(row.len(), config.alpha).step(out, config);
    Ok(())
}

/// Per-node memo of `x^alpha`. Between steps `x` moves by a tiny relative
/// amount, so `(x_b (1 + e))^alpha` is expanded to fourth order in `e` around
/// the last exactly evaluated `x_b`; with `|e| < 1e-3` the dropped term is
/// below `1e-16` relative.
struct PowCache {
    inv_base: Vec<f64>,
    base_pow: Vec<f64>,
    coeffs: [f64; 4],
    alpha: f64,
}

const POW_CACHE_RADIUS: f64 = 1e-3;

impl PowCache {
    fn new(len: usize, alpha: MobilityExponent) -> Self {
        let a = alpha.get();
        let c1 = a;
        let c2 = c1 * (a - 1.0) / 2.0;
        let c3 = c2 * (a - 2.0) / 3.0;
        let c4 = c3 * (a - 3.0) / 4.0;
        Self {
            inv_base: vec![f64::NAN; len],
            base_pow: vec![0.0; len],
            coeffs: [c1, c2, c3, c4],
            alpha: a,
        }
    }

    /// Right-to-left sweep, so each node still sees its old left neighbour.
    fn step(&mut self, row: &mut [f64], config: &FdConfig) {
        let a = self.alpha;
        let delta = config.delta;
        let delta_pow = powf(delta, a);
        let inv_h = 1.0 / config.h_rho;
        let h_t = config.h_t;
        let [c1, c2, c3, c4] = self.coeffs;
        for j in (1..row.len()).rev() {
            let s = (row[j] - row[j - 1]) * inv_h;
            if s <= 0.0 {
                continue;
            }
            let x = s + delta;
            let e = x * self.inv_base[j] - 1.0;
            let xa = if abs(e) < POW_CACHE_RADIUS {
                self.base_pow[j] * (1.0 + e * (c1 + e * (c2 + e * (c3 + e * c4))))
            } else {
                let v = exp(a * ln(x));
                self.inv_base[j] = 1.0 / x;
                self.base_pow[j] = v;
                v
            };
            let h = (xa - delta_pow).max(0.0);
            row[j] /= 1.0 + h_t * h;
        }
        row[0] = 0.0;
    }
}

/// Callback seeing every row: step index, time, row.
pub type Observer<'a> = &'a mut dyn FnMut(usize, f64, &[f64]);

/// Scheme output: the grid and the rows at the requested times.
#[derive(Debug, Clone, PartialEq)]
pub struct FdSolution {
    pub config: FdConfig,
    /// Actual times of the stored rows (nearest step to each request).
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
}

impl FdSolution {
    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.config.last_node()).map(|j| self.config.node(j)).collect()
    }

    /// Last stored row, at `t_end` unless a shorter list was requested.
    pub fn final_row(&self) -> &[f64] {
        self.snapshots.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Row stored at the time nearest to `t`.
    pub fn row_at(&self, t: f64) -> Option<&[f64]> {
        self.times
            .iter()
            .enumerate()
            .min_by(|x, y| abs(x.1 - t).total_cmp(&abs(y.1 - t)))
            .map(|(k, _)| self.snapshots[k].as_slice())
    }
}

/// Samples `m0` at the nodes and checks it is a valid monotone datum.
pub fn sample_initial_mass(m0: impl Fn(f64) -> f64, config: &FdConfig) -> Result<Vec<f64>> {
    let mut row: Vec<f64> = (0..=config.last_node()).map(|j| m0(config.node(j))).collect();
    let slack = 1e-12 * config.m_bar;
    let mut prev = 0.0;
    for v in &row {
        if !v.is_finite() {
            return Err(Error::NonFinite("initial mass"));
        }
        if *v < -slack || *v > config.m_bar + slack {
            return Err(Error::InvalidData("initial mass outside [0, m_bar]"));
        }
        if *v < prev - slack {
            return Err(Error::InvalidData("initial mass must be non-decreasing"));
        }
        prev = *v;
    }
    row[0] = 0.0;
    Ok(row)
}

/// Runs the scheme from `m0` sampled at the nodes. Rows nearest to each of
/// `snapshot_times` are kept; `observer` sees every row, step index first.
pub fn run_fd_with(
    m0: impl Fn(f64) -> f64,
    config: &FdConfig,
    snapshot_times: &[f64],
    mut observer: Option<Observer<'_>>,
) -> Result<FdSolution> {
    let mut row = sample_initial_mass(m0, config)?;
    let mut cache = PowCache::new(row.len(), config.alpha);
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
            cache.step(&mut row, config);
        }
        let t = n as f64 * config.h_t;
        if let Some(obs) = observer.as_mut() {
            obs(n, t, &row);
        }
        while next < wanted.len() && wanted[next].0 == n {
            let k = wanted[next].1;
            snapshots[k] = row.clone();
            times[k] = t;
            next += 1;
        }
    }
    if row.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("scheme row"));
    }
    Ok(FdSolution {
        config: *config,
        times,
        snapshots,
    })
}

/// Coupled run on piecewise-constant data with the default truncation,
/// keeping the initial and final rows.
pub fn run_fd(data: &RadialInitialData, t_end: f64, delta: f64, alpha: MobilityExponent) -> Result<FdSolution> {
    let config = coupled_config(data, t_end, delta, alpha)?;
    run_fd_with(|r| data.mass(r), &config, &[0.0, t_end], None)
}

/// The coupled configuration [`run_fd`] uses for `data`.
pub fn coupled_config(data: &RadialInitialData, t_end: f64, delta: f64, alpha: MobilityExponent) -> Result<FdConfig> {
    let m_bar = data.total_mass();
    if m_bar == 0.0 {
        // any positive bound works for the zero datum
        let probe = FdConfig::coupled(delta, alpha, 1.0, 1.0, t_end)?;
        return FdConfig::coupled(delta, alpha, 1.0, default_rho_max(1.0, 0.0, alpha, t_end, probe.h_rho), t_end);
    }
    let a = alpha.get();
    let h_rho = powf(delta, 1.0 + 2.0 * a);
    let rho_max = default_rho_max(data.support_end(), data.sup_norm(), alpha, t_end, h_rho);
    FdConfig::coupled(delta, alpha, m_bar, rho_max, t_end)
}

/// Left differences `(M_j - M_{j-1}) / h_rho` clipped at zero; entry 0 copies
/// entry 1.
pub fn derive_u(row: &[f64], h_rho: f64) -> Vec<f64> {
    let mut u: Vec<f64> = (0..row.len())
        .map(|j| if j == 0 { 0.0 } else { ((row[j] - row[j - 1]) / h_rho).max(0.0) })
        .collect();
    if u.len() > 1 {
        u[0] = u[1];
    }
    u
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub delta: f64,
    pub h_rho: f64,
    pub h_t: f64,
    pub nodes: usize,
    pub steps: usize,
    pub sup_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `ln error` against `ln delta`; `None` for one row.
    pub slope: Option<f64>,
    /// The theoretical order `alpha`.
    pub target: f64,
    /// Final rows of every run, in `rows` order.
    pub solutions: Vec<FdSolution>,
}

impl ConvergenceTable {
    pub fn errors_decrease(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error)
    }
}

/// Least-squares slope of `y` against `x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| ln(*v)).collect();
    let ly: Vec<f64> = y.iter().map(|v| ln(*v)).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs the scheme for each `delta` (built by `config_for`) and records the
/// grid sup-distance at `t_end` to `oracle(t, rho)`.
pub fn convergence_study<O>(
    m0: impl Fn(f64) -> f64,
    deltas: &[f64],
    config_for: impl Fn(f64) -> Result<FdConfig>,
    oracle: O,
) -> Result<ConvergenceTable>
where
    O: Fn(f64, f64) -> Result<f64>,
{
    if deltas.is_empty() || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidData("deltas must be non-empty and decreasing"));
    }
    let mut rows = Vec::with_capacity(deltas.len());
    let mut solutions = Vec::with_capacity(deltas.len());
    let mut target = 0.0;
    for &delta in deltas {
        let config = config_for(delta)?;
        target = config.alpha.get();
        let sol = run_fd_with(&m0, &config, &[config.t_end], None)?;
        let row = sol.final_row();
        let t = sol.times[0];
        let mut sup_error: f64 = 0.0;
        for (j, m) in row.iter().enumerate() {
            let exact = oracle(t, config.node(j)).map_err(|_| Error::OracleUnavailable("convergence study"))?;
            sup_error = sup_error.max(abs(m - exact));
        }
        rows.push(ConvergenceRow {
            delta,
            h_rho: config.h_rho,
            h_t: config.h_t,
            nodes: row.len(),
            steps: config.steps(),
            sup_error,
        });
        solutions.push(sol);
    }
    let slope = log_log_slope(
        &rows.iter().map(|r| r.delta).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.sup_error).collect::<Vec<_>>(),
    );
    Ok(ConvergenceTable {
        rows,
        slope,
        target,
        solutions,
    })
}
