//! One runner per scenario kind. Each writes `metadata.txt` first, then its
//! CSV files, then appends the measured quantities to the metadata.

use std::path::Path;

use anyhow::{Context, Result};

use vortex_core::analysis::{geometric_grid, is_decreasing, linear_grid, mass_rel_error, relative_error_profile, rescale_profile};
use vortex_core::characteristics::{characteristic_position, eval_m, eval_u, invert_p, RadialInitialData};
use vortex_core::exact::{profile, profile_total_mass, self_similar_mass_at, self_similar_u_volume, volume_coord};
use vortex_core::hjfd::{convergence_study, coupled_config, derive_u, log_log_slope, run_fd_with, ConvergenceRow, FdConfig};
use vortex_core::shocks::{lax_oleinik_check, rh_residuals, spurious_square, two_bump_solve, ShockPath, TwoBumpSolution};
use vortex_core::viscous::run_viscous;
use vortex_core::{Error as CoreError, SelfSimilarParams};

use crate::config::{DataSpec, ScenarioConfig, ScenarioKind};
use crate::output::{num, write_grid_rows, Metadata, Table, SOLUTION_HEADER};

pub const MASS_TOL: f64 = 1e-8;
pub const ROUND_TRIP_TOL: f64 = 1e-10;
pub const RH_TOL: f64 = 1e-8;
pub const SHOCK_MASS_TOL: f64 = 1e-6;
/// Accepted fitted order, as multiples of alpha.
pub const SLOPE_WINDOW: (f64, f64) = (0.7, 1.5);
pub const VISCOUS_SLACK: f64 = 0.1;
const QUAD_TOL: f64 = 1e-10;
const KAPPA_MAX: f64 = 1e6;

/// Result of a run that finished without runtime errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    /// Threshold checks that failed; empty on success.
    pub failures: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self { failures: Vec::new() }
    }

    fn check(&mut self, meta: &mut Metadata, name: &str, ok: bool, detail: String) -> Result<()> {
        meta.put(&format!("check.{name}"), if ok { "pass" } else { "fail" })?;
        if !ok {
            self.failures.push(format!("{name}: {detail}"));
        }
        Ok(())
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Order-preserving map over `items` on up to `jobs` threads.
pub fn par_map<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(f).collect();
    }
    let f = &f;
    let mut tagged: Vec<(usize, R)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|k| s.spawn(move || items.iter().enumerate().skip(k).step_by(jobs).map(|(i, x)| (i, f(x))).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    });
    tagged.sort_by_key(|p| p.0);
    tagged.into_iter().map(|p| p.1).collect()
}

pub fn run_scenario(config: &ScenarioConfig, out: &Path, jobs: usize) -> Result<Verdict> {
    let mut meta = Metadata::create(out)?;
    write_common(&mut meta, config)?;
    meta.flush()?;
    let mut verdict = Verdict::new();
    match config.kind {
        ScenarioKind::Exact => exact(config, out, &mut meta, &mut verdict),
        ScenarioKind::Characteristics => characteristics(config, out, &mut meta, &mut verdict),
        ScenarioKind::ShockTwoBumps => shock_two_bumps(config, out, &mut meta, &mut verdict),
        ScenarioKind::Spurious => spurious(config, out, &mut meta, &mut verdict),
        ScenarioKind::Fd => fd(config, out, &mut meta, &mut verdict, jobs),
        ScenarioKind::Viscous => viscous(config, out, &mut meta, &mut verdict, jobs),
        ScenarioKind::Asymptotics => asymptotics(config, out, &mut meta, &mut verdict),
        ScenarioKind::ConvergenceStudy => convergence(config, out, &mut meta, &mut verdict, jobs),
    }?;
    meta.put("result", if verdict.passed() { "pass" } else { "threshold-failure" })?;
    meta.flush()?;
    Ok(verdict)
}

fn write_common(meta: &mut Metadata, c: &ScenarioConfig) -> Result<()> {
    meta.put("scenario", c.kind)?;
    meta.float("alpha", c.alpha.get())?;
    meta.put("d", c.dim)?;
    meta.put("data", c.data.name())?;
    match &c.data {
        DataSpec::Steps { data, .. } => {
            meta.floats("data.edges", data.edges())?;
            meta.floats("data.values", data.values())?;
        }
        DataSpec::TwoBumps(p) => {
            meta.floats("data.c1_c2_a_b", &[p.c1, p.c2, p.a, p.b])?;
        }
    }
    meta.float("data.total_mass", c.data.total_mass())?;
    meta.float("t_end", c.t_end)?;
    meta.floats("times", &c.times)?;
    meta.put("seed", "none")?;
    meta.put("units.t", "dimensionless time")?;
    meta.put("units.rho", "volume coordinate omega_d r^d")?;
    meta.put("units.m", "mass inside rho")?;
    meta.put("units.u", "density dm/drho")?;
    Ok(())
}

fn steps(c: &ScenarioConfig) -> &RadialInitialData {
    c.data.monotone().expect("validated monotone data")
}

fn rho_grid(c: &ScenarioConfig) -> Vec<f64> {
    linear_grid(0.0, c.rho_end, c.samples)
}

/// `u` on the evaluator grid; zero inside a preserved gap.
fn density(t: f64, rho: f64, data: &RadialInitialData, c: &ScenarioConfig) -> Result<f64> {
    match eval_u(t, rho, data, c.alpha) {
        Err(CoreError::GapPoint { .. }) => Ok(0.0),
        other => other.with_context(|| format!("u at t = {t}, rho = {rho}")),
    }
}

fn exact(c: &ScenarioConfig, out: &Path, meta: &mut Metadata, v: &mut Verdict) -> Result<()> {
    let p = SelfSimilarParams::new(c.alpha.get(), c.mass, c.dim)?;
    meta.float("mass", c.mass)?;
    meta.float("rho_end", c.rho_end)?;
    meta.put("samples", c.samples)?;
    meta.flush()?;
    let mut table = Table::create(out, "exact.csv", &SOLUTION_HEADER)?;
    for &t in &c.times {
        for rho in rho_grid(c) {
            table.row(&[t, rho, self_similar_mass_at(&p, t, rho)?, self_similar_u_volume(&p, t, rho)?])?;
        }
    }
    table.finish()?;
    let total = profile_total_mass(&p, QUAD_TOL)?;
    meta.float("profile.peak", p.peak())?;
    meta.float("profile.total_mass", total)?;
    meta.float("profile.mass_error", (total - c.mass).abs())?;
    meta.float("tolerance.mass", MASS_TOL)?;
    v.check(meta, "profile_mass", (total - c.mass).abs() < MASS_TOL, format!("integrated mass {total}"))
}

fn characteristics(c: &ScenarioConfig, out: &Path, meta: &mut Metadata, v: &mut Verdict) -> Result<()> {
    let data = steps(c);
    meta.float("rho_end", c.rho_end)?;
    meta.put("samples", c.samples)?;
    meta.flush()?;
    let mut table = Table::create(out, "characteristics.csv", &SOLUTION_HEADER)?;
    let mut worst: f64 = 0.0;
    for &t in &c.times {
        for rho in rho_grid(c) {
            let m = eval_m(t, rho, data, c.alpha)?;
            table.row(&[t, rho, m, density(t, rho, data, c)?])?;
            if t > 0.0 && rho >= data.gap() {
                let foot = invert_p(t, rho, data, c.alpha)?;
                worst = worst.max((characteristic_position(foot, data, c.alpha, t) - rho).abs());
            }
        }
    }
    table.finish()?;
    meta.float("round_trip.worst", worst)?;
    meta.float("tolerance.round_trip", ROUND_TRIP_TOL)?;
    v.check(meta, "round_trip", worst < ROUND_TRIP_TOL, format!("worst |P(P^-1(rho)) - rho| = {worst}"))
}

fn write_path(out: &Path, name: &str, path: &ShockPath) -> Result<()> {
    let mut table = Table::create(out, name, &["t", "rho", "speed"])?;
    for ((t, s), ds) in path.times.iter().zip(&path.positions).zip(&path.speeds) {
        table.row(&[*t, *s, *ds])?;
    }
    table.finish()
}

fn shock_two_bumps(c: &ScenarioConfig, out: &Path, meta: &mut Metadata, v: &mut Verdict) -> Result<()> {
    let DataSpec::TwoBumps(p) = c.data else {
        unreachable!("validated two-bump data")
    };
    meta.float("rk4_step", c.rk4_step)?;
    meta.float("rho_end", c.rho_end)?;
    meta.put("samples", c.samples)?;
    meta.flush()?;
    let sol = two_bump_solve(p, c.t_end, c.rk4_step)?;
    write_path(out, "shock.csv", &sol.path)?;
    let mut table = Table::create(out, "solution.csv", &SOLUTION_HEADER)?;
    for &t in c.times.iter().filter(|t| **t <= c.t_end) {
        for rho in rho_grid(c) {
            table.row(&[t, rho, sol.m(t, rho), sol.u(t, rho)])?;
        }
    }
    table.finish()?;
    let rh = rh_residuals(&p, &sol.path).into_iter().fold(0.0, f64::max);
    let admissible = lax_oleinik_check(&p, &sol.path).all_admissible();
    let mass_err = (sol.quadrature_mass(c.t_end, QUAD_TOL)? - p.total_mass()).abs();
    meta.float("shock.final_position", sol.shock_at(c.t_end))?;
    meta.float("shock.rk4_error_estimate", sol.path.error_estimate)?;
    meta.float("shock.rh_residual_max", rh)?;
    meta.put("shock.lax_admissible", admissible)?;
    meta.float("shock.mass_error", mass_err)?;
    meta.float("tolerance.rh", RH_TOL)?;
    meta.float("tolerance.mass", SHOCK_MASS_TOL)?;
    v.check(meta, "rankine_hugoniot", rh < RH_TOL, format!("residual {rh}"))?;
    v.check(meta, "lax_oleinik", admissible, "shock not admissible".into())?;
    v.check(meta, "mass", mass_err < SHOCK_MASS_TOL, format!("mass drift {mass_err}"))
}

fn spurious(c: &ScenarioConfig, out: &Path, meta: &mut Metadata, v: &mut Verdict) -> Result<()> {
    let data = steps(c);
    let (c0, length) = (data.values()[0], data.support_end());
    let sp = spurious_square(c0, length, c.alpha)?;
    meta.float("rk4_step", c.rk4_step)?;
    meta.float("rho_end", c.rho_end)?;
    meta.put("samples", c.samples)?;
    meta.flush()?;
    let path = sp.path(c.t_end, c.rk4_step)?;
    write_path(out, "shock.csv", &path)?;
    let mut spurious = Table::create(out, "spurious.csv", &SOLUTION_HEADER)?;
    let mut fan = Table::create(out, "fan.csv", &SOLUTION_HEADER)?;
    let grid = rho_grid(c);
    let h = grid[1] - grid[0];
    let mut l1 = 0.0;
    for &t in &c.times {
        for &rho in &grid {
            let m_fan = eval_m(t, rho, data, c.alpha)?;
            spurious.row(&[t, rho, sp.m(t, rho), sp.u(t, rho)])?;
            fan.row(&[t, rho, m_fan, density(t, rho, data, c)?])?;
            if t == *c.times.last().unwrap() {
                l1 += (m_fan - sp.m(t, rho)).abs() * h;
            }
        }
    }
    spurious.finish()?;
    fan.finish()?;
    let rejected = lax_oleinik_check(&sp, &path).none_admissible();
    meta.float("spurious.final_shock", sp.shock(c.t_end))?;
    meta.float("spurious.l1_distance_to_fan", l1)?;
    meta.put("spurious.lax_rejected", rejected)?;
    v.check(meta, "lax_rejects_spurious", rejected, "spurious shock passed the entropy check".into())
}

/// Exact mass for the scheme data, where one is available.
enum Oracle {
    Characteristics(RadialInitialData),
    TwoBumps(TwoBumpSolution),
}

impl Oracle {
    fn new(c: &ScenarioConfig) -> Result<Self> {
        Ok(match &c.data {
            DataSpec::Steps { data, .. } => Self::Characteristics(data.clone()),
            DataSpec::TwoBumps(p) => Self::TwoBumps(two_bump_solve(*p, c.t_end, c.rk4_step)?),
        })
    }

    fn m(&self, c: &ScenarioConfig, t: f64, rho: f64) -> Result<f64, CoreError> {
        match self {
            Self::Characteristics(data) => eval_m(t, rho, data, c.alpha),
            Self::TwoBumps(sol) => Ok(sol.m(t, rho)),
        }
    }
}

fn write_fd_config(meta: &mut Metadata, prefix: &str, f: &FdConfig) -> Result<()> {
    meta.float(&format!("{prefix}delta"), f.delta)?;
    meta.float(&format!("{prefix}h_rho"), f.h_rho)?;
    meta.float(&format!("{prefix}h_t"), f.h_t)?;
    meta.float(&format!("{prefix}rho_max"), f.rho_max)?;
    meta.float(&format!("{prefix}m_bar"), f.m_bar)?;
    meta.put(&format!("{prefix}nodes"), f.last_node() + 1)?;
    meta.put(&format!("{prefix}steps"), f.steps())?;
    meta.float(&format!("{prefix}cfl_ratio"), f.cfl_ratio())?;
    meta.float(&format!("{prefix}cfl_bound"), f.cfl_bound())?;
    meta.float(&format!("{prefix}cfl_margin"), 1.0 - f.cfl_ratio() / f.cfl_bound())
}

/// Single-delta studies on coupled grids, run in parallel and merged.
fn coupled_study(c: &ScenarioConfig, jobs: usize) -> Result<(Vec<ConvergenceRow>, Vec<Vec<f64>>)> {
    let oracle = Oracle::new(c)?;
    let runs = par_map(&c.deltas, jobs, |&delta| {
        let config = match &c.data {
            DataSpec::Steps { data, .. } => coupled_config(data, c.t_end, delta, c.alpha)?,
            DataSpec::TwoBumps(_) => FdConfig::coupled(delta, c.alpha, c.fd.m_bar, c.fd.rho_max, c.t_end)?,
        };
        let table = convergence_study(|r| c.data.initial_mass(r), &[delta], |_| Ok(config), |t, r| oracle.m(c, t, r))?;
        Ok::<_, CoreError>((table.rows[0], table.solutions.into_iter().next().unwrap().snapshots.pop().unwrap()))
    });
    let mut rows = Vec::new();
    let mut finals = Vec::new();
    for (delta, run) in c.deltas.iter().zip(runs) {
        let (row, last) = run.with_context(|| format!("scheme run at delta = {delta}"))?;
        rows.push(row);
        finals.push(last);
    }
    Ok((rows, finals))
}

fn write_study(
    c: &ScenarioConfig,
    out: &Path,
    meta: &mut Metadata,
    v: &mut Verdict,
    rows: &[ConvergenceRow],
) -> Result<()> {
    let mut table = Table::create(out, "convergence.csv", &["delta", "h_rho", "h_t", "nodes", "steps", "sup_error"])?;
    for r in rows {
        table.record(&[
            num(r.delta),
            num(r.h_rho),
            num(r.h_t),
            r.nodes.to_string(),
            r.steps.to_string(),
            num(r.sup_error),
        ])?;
    }
    table.finish()?;
    let errors: Vec<f64> = rows.iter().map(|r| r.sup_error).collect();
    let slope = log_log_slope(&c.deltas, &errors);
    let a = c.alpha.get();
    meta.floats("study.deltas", &c.deltas)?;
    meta.floats("study.sup_errors", &errors)?;
    meta.float("study.slope", slope.unwrap_or(f64::NAN))?;
    meta.float("study.target", a)?;
    meta.floats("tolerance.slope_window", &[SLOPE_WINDOW.0 * a, SLOPE_WINDOW.1 * a])?;
    if c.data.monotone().is_none() {
        // sup errors across a shock do not shrink with delta
        meta.put("study.note", "sup error dominated by the shock; slope not checked")?;
        return Ok(());
    }
    v.check(meta, "errors_decrease", is_decreasing(&errors), format!("{errors:?}"))?;
    let in_window = slope.is_some_and(|s| s >= SLOPE_WINDOW.0 * a && s <= SLOPE_WINDOW.1 * a);
    v.check(meta, "slope", in_window, format!("slope {slope:?} against target {a}"))
}

fn fd(c: &ScenarioConfig, out: &Path, meta: &mut Metadata, v: &mut Verdict, jobs: usize) -> Result<()> {
    write_fd_config(meta, "fd.", &c.fd)?;
    meta.flush()?;
    let sol = run_fd_with(|r| c.data.initial_mass(r), &c.fd, &c.times, None)?;
    let nodes = sol.nodes();
    let mut table = Table::create(out, "fd.csv", &SOLUTION_HEADER)?;
    for (t, row) in sol.times.iter().zip(&sol.snapshots) {
        write_grid_rows(&mut table, *t, &nodes, row, &derive_u(row, c.fd.h_rho))?;
    }
    table.finish()?;
    let oracle = Oracle::new(c)?;
    let mut errors = Vec::new();
    for (t, row) in sol.times.iter().zip(&sol.snapshots) {
        let mut e: f64 = 0.0;
        for (r, m) in nodes.iter().zip(row) {
            e = e.max((m - oracle.m(c, *t, *r)?).abs());
        }
        errors.push(e);
    }
    meta.floats("fd.output_times", &sol.times)?;
    meta.floats("fd.sup_error", &errors)?;
    meta.flush()?;
    let (rows, _) = coupled_study(c, jobs)?;
    write_study(c, out, meta, v, &rows)
}

fn convergence(c: &ScenarioConfig, out: &Path, meta: &mut Metadata, v: &mut Verdict, jobs: usize) -> Result<()> {
    meta.floats("study.deltas", &c.deltas)?;
    meta.flush()?;
    let (rows, finals) = coupled_study(c, jobs)?;
    for (k, (row, last)) in rows.iter().zip(&finals).enumerate() {
        let mut table = Table::create(out, &format!("fd_{k}.csv"), &SOLUTION_HEADER)?;
        let nodes: Vec<f64> = (0..last.len()).map(|j| j as f64 * row.h_rho).collect();
        write_grid_rows(&mut table, c.t_end, &nodes, last, &derive_u(last, row.h_rho))?;
        table.finish()?;
    }
    write_study(c, out, meta, v, &rows)
}

fn viscous(c: &ScenarioConfig, out: &Path, meta: &mut Metadata, v: &mut Verdict, jobs: usize) -> Result<()> {
    let data = steps(c);
    meta.float("buffer", c.buffer)?;
    for (k, vc) in c.viscous.iter().enumerate() {
        let p = format!("viscous.{k}.");
        meta.float(&format!("{p}epsilon"), vc.epsilon)?;
        meta.float(&format!("{p}h_rho"), vc.h_rho)?;
        meta.float(&format!("{p}h_t"), vc.h_t)?;
        meta.float(&format!("{p}rho_max"), vc.rho_max)?;
        meta.put(&format!("{p}steps"), vc.steps())?;
        for (name, limit) in vc.stability_limits() {
            meta.float(&format!("{p}limit.{name}"), limit)?;
        }
    }
    meta.flush()?;
    let runs = par_map(&c.viscous, jobs, |vc| run_viscous(|r| data.mass(r), vc, &c.times, None));
    // distances to the exact solution over the scheme domain, away from the pinned edge
    let window_end = c.fd.rho_max;
    let mut distances = Vec::new();
    let mut table = Table::create(out, "viscosity.csv", &["epsilon", "h_rho", "h_t", "sup_distance"])?;
    for (k, (vc, run)) in c.viscous.iter().zip(runs).enumerate() {
        let sol = run.with_context(|| format!("viscous run at epsilon = {}", vc.epsilon))?;
        let name = if c.viscous.len() == 1 { "viscous.csv".to_string() } else { format!("viscous_{k}.csv") };
        let mut rows = Table::create(out, &name, &SOLUTION_HEADER)?;
        let nodes = sol.nodes();
        for (t, row) in sol.times.iter().zip(&sol.snapshots) {
            write_grid_rows(&mut rows, *t, &nodes, row, &derive_u(row, vc.h_rho))?;
        }
        rows.finish()?;
        let t = *sol.times.last().unwrap();
        let mut d: f64 = 0.0;
        for (r, m) in nodes.iter().zip(sol.final_row()).filter(|(r, _)| **r <= window_end) {
            d = d.max((m - eval_m(t, *r, data, c.alpha)?).abs());
        }
        table.row(&[vc.epsilon, vc.h_rho, vc.h_t, d])?;
        distances.push(d);
    }
    table.finish()?;
    meta.floats("viscous.window", &[0.0, window_end])?;
    meta.floats("viscous.sup_distance", &distances)?;
    meta.float("tolerance.viscous_slack", VISCOUS_SLACK)?;
    let ok = distances.windows(2).all(|w| w[1] <= (1.0 + VISCOUS_SLACK) * w[0]);
    v.check(meta, "vanishing_viscosity", ok, format!("{distances:?}"))
}

fn asymptotics(c: &ScenarioConfig, out: &Path, meta: &mut Metadata, v: &mut Verdict) -> Result<()> {
    let data = steps(c);
    let mass = data.total_mass();
    let p = SelfSimilarParams::new(c.alpha.get(), mass, c.dim)?;
    let y_grid = linear_grid(0.0, c.y_max, c.samples);
    let kappa_grid = geometric_grid(c.kappa0, KAPPA_MAX, c.samples);
    meta.float("y_max", c.y_max)?;
    meta.float("y_min", c.y_min)?;
    meta.float("kappa0", c.kappa0)?;
    meta.put("samples", c.samples)?;
    meta.flush()?;
    let u = |t: f64, x: f64| eval_u(t, volume_coord(x, c.dim), data, c.alpha).unwrap_or(0.0);
    let m = |t: f64, rho: f64| eval_m(t, rho, data, c.alpha).unwrap_or(f64::NAN);
    let mut rescaled = Table::create(out, "rescaled.csv", &["t", "y", "w", "profile"])?;
    let mut summary = Table::create(out, "asymptotics.csv", &["t", "profile_rel_error", "mass_rel_error"])?;
    let (mut profile_err, mut mass_err) = (Vec::new(), Vec::new());
    for &t in &c.times {
        let w = rescale_profile(u, c.alpha, c.dim, t, &y_grid)?;
        for (y, w) in w.y.iter().zip(&w.w) {
            rescaled.row(&[t, *y, *w, profile(&p, *y)])?;
        }
        let pe = relative_error_profile(u, mass, c.alpha, c.dim, t, &y_grid, c.y_min)?;
        let me = mass_rel_error(m, mass, c.alpha, t, &kappa_grid, c.kappa0)?;
        summary.row(&[t, pe, me])?;
        profile_err.push(pe);
        mass_err.push(me);
    }
    rescaled.finish()?;
    summary.finish()?;
    meta.floats("asymptotics.profile_rel_error", &profile_err)?;
    meta.floats("asymptotics.mass_rel_error", &mass_err)?;
    v.check(meta, "profile_error_decreases", is_decreasing(&profile_err), format!("{profile_err:?}"))?;
    v.check(meta, "mass_error_decreases", is_decreasing(&mass_err), format!("{mass_err:?}"))
}
