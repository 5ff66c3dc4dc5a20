//! Flat TOML scenario files.
//!
//! Every key is optional except `scenario` (which the subcommand may supply).
//! Validation collects every problem before anything runs.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use vortex_core::characteristics::RadialInitialData;
use vortex_core::hjfd::{coupled_config, default_rho_max, FdConfig};
use vortex_core::shocks::TwoBumpParams;
use vortex_core::viscous::ViscousConfig;
use vortex_core::MobilityExponent;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Exact,
    Characteristics,
    ShockTwoBumps,
    Spurious,
    Fd,
    Viscous,
    Asymptotics,
    ConvergenceStudy,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 8] = [
        Self::Exact,
        Self::Characteristics,
        Self::ShockTwoBumps,
        Self::Spurious,
        Self::Fd,
        Self::Viscous,
        Self::Asymptotics,
        Self::ConvergenceStudy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Characteristics => "characteristics",
            Self::ShockTwoBumps => "shock-two-bumps",
            Self::Spurious => "spurious",
            Self::Fd => "fd",
            Self::Viscous => "viscous",
            Self::Asymptotics => "asymptotics",
            Self::ConvergenceStudy => "convergence-study",
        }
    }

    /// Scenarios whose solver needs non-increasing data.
    fn needs_monotone(self) -> bool {
        matches!(self, Self::Characteristics | Self::Spurious | Self::Viscous | Self::Asymptotics)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

/// Initial data of a run.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    /// Non-increasing piecewise-constant data; `name` is the preset.
    Steps { name: &'static str, data: RadialInitialData },
    TwoBumps(TwoBumpParams),
}

impl DataSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Steps { name, .. } => name,
            Self::TwoBumps(_) => "two-bumps",
        }
    }

    pub fn monotone(&self) -> Option<&RadialInitialData> {
        match self {
            Self::Steps { data, .. } => Some(data),
            Self::TwoBumps(_) => None,
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Self::Steps { data, .. } => data.total_mass(),
            Self::TwoBumps(p) => p.total_mass(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            Self::Steps { data, .. } => data.sup_norm(),
            Self::TwoBumps(p) => p.sup_norm(),
        }
    }

    pub fn support_end(&self) -> f64 {
        match self {
            Self::Steps { data, .. } => data.support_end(),
            Self::TwoBumps(p) => p.b,
        }
    }

    pub fn initial_mass(&self, rho: f64) -> f64 {
        match self {
            Self::Steps { data, .. } => data.mass(rho),
            Self::TwoBumps(p) => p.initial_mass(rho),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub alpha: MobilityExponent,
    pub dim: u32,
    pub data: DataSpec,
    pub t_end: f64,
    /// Output times of solution dumps.
    pub times: Vec<f64>,
    /// Sample points per time for evaluator dumps.
    pub samples: usize,
    /// Right end of evaluator dumps.
    pub rho_end: f64,
    /// Total mass of the self-similar solution.
    pub mass: f64,
    pub rk4_step: f64,
    pub delta: f64,
    /// Decreasing regularisations for slope fits and studies.
    pub deltas: Vec<f64>,
    /// Scheme grid, coupled unless overridden.
    pub fd: FdConfig,
    pub epsilons: Vec<f64>,
    /// Viscous grids, one per entry of `epsilons`.
    pub viscous: Vec<ViscousConfig>,
    pub buffer: f64,
    pub y_max: f64,
    pub y_min: f64,
    pub kappa0: f64,
    pub out: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "scenario", "alpha", "d", "data", "c0", "length", "gap", "pieces", "c1", "c2", "a", "b", "edges", "values",
    "t_end", "times", "samples", "rho_end", "mass", "rk4_step", "delta", "deltas", "h_rho", "h_t", "rho_max",
    "epsilon", "epsilons", "buffer", "y_max", "y_min", "kappa0", "out",
];

/// Typed access to a TOML table that records every failure.
struct Reader {
    table: toml::Table,
    errors: Vec<String>,
}

impl Reader {
    fn float(&mut self, key: &str) -> Option<f64> {
        match self.table.get(key)? {
            toml::Value::Float(v) => Some(*v),
            toml::Value::Integer(v) => Some(*v as f64),
            other => {
                self.errors.push(format!("`{key}` must be a number, got {}", other.type_str()));
                None
            }
        }
    }

    fn positive(&mut self, key: &str, default: f64) -> f64 {
        match self.float(key) {
            Some(v) if v > 0.0 && v.is_finite() => v,
            Some(v) => {
                self.errors.push(format!("`{key}` must be positive, got {v}"));
                default
            }
            None => default,
        }
    }

    fn non_negative(&mut self, key: &str, default: f64) -> f64 {
        match self.float(key) {
            Some(v) if v >= 0.0 && v.is_finite() => v,
            Some(v) => {
                self.errors.push(format!("`{key}` must be non-negative, got {v}"));
                default
            }
            None => default,
        }
    }

    fn integer(&mut self, key: &str, default: usize, min: usize) -> usize {
        match self.table.get(key) {
            None => default,
            Some(toml::Value::Integer(v)) if *v >= min as i64 => *v as usize,
            Some(other) => {
                self.errors.push(format!("`{key}` must be an integer >= {min}, got {other}"));
                default
            }
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.table.get(key)? {
            toml::Value::String(s) => Some(s.clone()),
            other => {
                self.errors.push(format!("`{key}` must be a string, got {}", other.type_str()));
                None
            }
        }
    }

    fn floats(&mut self, key: &str) -> Option<Vec<f64>> {
        let toml::Value::Array(items) = self.table.get(key)? else {
            self.errors.push(format!("`{key}` must be an array of numbers"));
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        for item in items {
            match item {
                toml::Value::Float(v) => out.push(*v),
                toml::Value::Integer(v) => out.push(*v as f64),
                _ => {
                    self.errors.push(format!("`{key}` must be an array of numbers"));
                    return None;
                }
            }
        }
        Some(out)
    }

    /// Non-empty, positive and strictly decreasing.
    fn decreasing(&mut self, key: &str, default: Vec<f64>) -> Vec<f64> {
        match self.floats(key) {
            None => default,
            Some(v) if !v.is_empty() && v.iter().all(|x| *x > 0.0) && v.windows(2).all(|w| w[1] < w[0]) => v,
            Some(_) => {
                self.errors.push(format!("`{key}` must be non-empty, positive and strictly decreasing"));
                default
            }
        }
    }
}

/// Parses a file that names its own scenario.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, Vec<String>> {
    parse_config_for(None, text)
}

/// Parses `text`; `kind` (from the command line) fills in or must agree
/// with the `scenario` key.
pub fn parse_config_for(kind: Option<ScenarioKind>, text: &str) -> Result<ScenarioConfig, Vec<String>> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| vec![format!("malformed config: {}", e.message())])?;
    let mut r = Reader { table, errors: Vec::new() };
    for key in r.table.keys() {
        if !KEYS.contains(&key.as_str()) {
            r.errors.push(format!("unknown key `{key}`"));
        }
    }

    let named = r.string("scenario").map(|s| s.parse::<ScenarioKind>());
    let kind = match (kind, named) {
        (Some(k), None) => k,
        (Some(k), Some(Ok(n))) if k == n => k,
        (Some(k), Some(Ok(n))) => {
            r.errors.push(format!("config is for scenario `{n}` but `{k}` was requested"));
            k
        }
        (None, Some(Ok(n))) => n,
        (_, Some(Err(e))) => {
            r.errors.push(e);
            kind.unwrap_or(ScenarioKind::Exact)
        }
        (None, None) => {
            r.errors.push("missing `scenario`".into());
            ScenarioKind::Exact
        }
    };

    let alpha_value = r.float("alpha").unwrap_or(0.5);
    let alpha = MobilityExponent::new(alpha_value).unwrap_or_else(|_| {
        r.errors.push(format!("alpha outside (0,1): {alpha_value}"));
        MobilityExponent::new(0.5).unwrap()
    });
    let dim = r.integer("d", 1, 1) as u32;
    let t_end = r.positive("t_end", 1.0);
    let data = read_data(&mut r, kind, alpha);

    let default_times = match kind {
        ScenarioKind::Exact | ScenarioKind::Asymptotics => vec![10.0, 100.0, 1000.0],
        _ => vec![0.0, 0.5 * t_end, t_end],
    };
    let times = match r.floats("times") {
        None => default_times,
        Some(v) if !v.is_empty() && v.iter().all(|t| *t >= 0.0 && t.is_finite()) && v.windows(2).all(|w| w[0] < w[1]) => v,
        Some(_) => {
            r.errors.push("`times` must be non-empty, non-negative and increasing".into());
            default_times
        }
    };
    if matches!(kind, ScenarioKind::Exact | ScenarioKind::Asymptotics) && times.first().is_some_and(|t| *t <= 0.0) {
        r.errors.push(format!("scenario `{kind}` needs positive `times`"));
    }
    let samples = r.integer("samples", 201, 2);
    let mass = r.positive("mass", data.total_mass().max(f64::MIN_POSITIVE));
    let rk4_step = r.positive("rk4_step", 1e-3);
    let buffer = r.positive("buffer", 2.5);
    let y_max = r.positive("y_max", 5.0);
    // with a leading gap the rescaled solution vanishes near y = 0
    let gapped = data.monotone().is_some_and(|d| d.gap() > 0.0);
    let y_min = r.non_negative("y_min", if gapped { 0.05 } else { 0.0 });
    let kappa0 = r.positive("kappa0", 0.1);
    if y_min >= y_max {
        r.errors.push(format!("`y_min` = {y_min} must be below `y_max` = {y_max}"));
    }

    let delta = r.positive("delta", 0.05);
    let default_deltas = match kind {
        ScenarioKind::ConvergenceStudy => vec![0.1, 0.05, 0.025, 0.0125],
        _ => vec![4.0 * delta, 2.0 * delta, delta],
    };
    let deltas = r.decreasing("deltas", default_deltas);
    let h_rho = r.float("h_rho");
    let h_t = r.float("h_t");
    let rho_max = r.float("rho_max");

    let last_time = *times.last().unwrap_or(&t_end);
    let evaluator_end = match kind {
        ScenarioKind::Exact => 10.0 * mass,
        // past the spurious shock, where the two solutions differ
        ScenarioKind::Spurious => {
            let a = alpha.get();
            2.0 * data.support_end() * (1.0 + a * data.sup_norm().powf(a) * last_time).powf(1.0 / a)
        }
        _ => default_rho_max(data.support_end(), data.sup_norm(), alpha, last_time, 0.0),
    };
    let rho_end = r.positive("rho_end", evaluator_end.max(f64::MIN_POSITIVE));

    let fd = fd_config(&mut r, kind, &data, alpha, t_end, delta, (h_rho, h_t, rho_max));

    let epsilons = match (r.float("epsilon"), r.table.contains_key("epsilons")) {
        (Some(_), true) => {
            r.errors.push("give either `epsilon` or `epsilons`".into());
            vec![0.01]
        }
        (Some(e), false) if e > 0.0 => vec![e],
        (Some(e), false) => {
            r.errors.push(format!("`epsilon` must be positive, got {e}"));
            vec![0.01]
        }
        (None, _) => r.decreasing("epsilons", vec![0.01]),
    };
    let viscous = if kind == ScenarioKind::Viscous {
        viscous_configs(&mut r, &data, alpha, dim, t_end, buffer, &epsilons, (h_rho, h_t, rho_max))
    } else {
        Vec::new()
    };

    let out = r.string("out").map(PathBuf::from);

    if r.errors.is_empty() {
        Ok(ScenarioConfig {
            kind,
            alpha,
            dim,
            data,
            t_end,
            times,
            samples,
            rho_end,
            mass,
            rk4_step,
            delta,
            deltas,
            fd: fd.expect("fd config without errors"),
            epsilons,
            viscous,
            buffer,
            y_max,
            y_min,
            kappa0,
            out,
        })
    } else {
        Err(r.errors)
    }
}

fn read_data(r: &mut Reader, kind: ScenarioKind, alpha: MobilityExponent) -> DataSpec {
    let fallback = || DataSpec::Steps {
        name: "square",
        data: RadialInitialData::square(1.0, 1.0).unwrap(),
    };
    let default_name = if kind == ScenarioKind::ShockTwoBumps { "two-bumps" } else { "square" };
    let name = r.string("data").unwrap_or_else(|| default_name.into());
    let c0 = r.positive("c0", 1.0);
    let length = r.positive("length", 1.0);
    let spec = match name.as_str() {
        "square" => RadialInitialData::square(c0, length).map(|data| DataSpec::Steps { name: "square", data }),
        "gap" => {
            let gap = r.positive("gap", 0.5);
            RadialInitialData::square(c0, length)
                .and_then(|d| d.with_gap(gap))
                .map(|data| DataSpec::Steps { name: "gap", data })
        }
        "triangle" => {
            let n = r.integer("pieces", 20, 1);
            RadialInitialData::triangle(n).map(|data| DataSpec::Steps { name: "triangle", data })
        }
        "two-bumps" => {
            let c1 = r.positive("c1", 1.0);
            let c2 = r.positive("c2", 2.0);
            let a = r.positive("a", 1.5);
            let b = r.positive("b", 2.5);
            TwoBumpParams::new(c1, c2, a, b, alpha).map(DataSpec::TwoBumps)
        }
        "steps" => match (r.floats("edges"), r.floats("values")) {
            (Some(edges), Some(values)) => {
                RadialInitialData::new(edges, values).map(|data| DataSpec::Steps { name: "steps", data })
            }
            _ => {
                r.errors.push("data `steps` needs `edges` and `values`".into());
                return fallback();
            }
        },
        other => {
            r.errors.push(format!("unknown data preset `{other}`"));
            return fallback();
        }
    };
    let spec = match spec {
        Ok(s) => s,
        Err(e) => {
            r.errors.push(format!("data `{name}`: {e}"));
            return fallback();
        }
    };
    if kind.needs_monotone() && spec.monotone().is_none() {
        r.errors.push(format!("scenario `{kind}` needs non-increasing data; `{name}` is not"));
    }
    if kind == ScenarioKind::ShockTwoBumps && !matches!(spec, DataSpec::TwoBumps(_)) {
        r.errors.push(format!("scenario `{kind}` needs data `two-bumps`, got `{name}`"));
    }
    if kind == ScenarioKind::Spurious && name != "square" {
        r.errors.push(format!("scenario `{kind}` needs data `square`, got `{name}`"));
    }
    spec
}

/// Coupled grid, or the overrides checked against the CFL bound.
fn fd_config(
    r: &mut Reader,
    kind: ScenarioKind,
    data: &DataSpec,
    alpha: MobilityExponent,
    t_end: f64,
    delta: f64,
    (h_rho, h_t, rho_max): (Option<f64>, Option<f64>, Option<f64>),
) -> Option<FdConfig> {
    let overridden = h_rho.is_some() || h_t.is_some() || rho_max.is_some();
    if overridden && !matches!(kind, ScenarioKind::Fd | ScenarioKind::Viscous) {
        r.errors.push(format!("grid overrides (`h_rho`, `h_t`, `rho_max`) are not used by scenario `{kind}`"));
    }
    let m_bar = data.total_mass();
    let coupled = match data.monotone() {
        Some(steps) => coupled_config(steps, t_end, delta, alpha),
        None => {
            let h = delta.powf(1.0 + 2.0 * alpha.get());
            FdConfig::coupled(delta, alpha, m_bar, default_rho_max(data.support_end(), data.sup_norm(), alpha, t_end, h), t_end)
        }
    };
    let coupled = match coupled {
        Ok(c) => c,
        Err(e) => {
            r.errors.push(format!("scheme grid: {e}"));
            return None;
        }
    };
    if kind != ScenarioKind::Fd || !overridden {
        return Some(coupled);
    }
    let h_rho = h_rho.unwrap_or(coupled.h_rho);
    let rho_max = rho_max.unwrap_or_else(|| default_rho_max(data.support_end(), data.sup_norm(), alpha, t_end, h_rho));
    // without an explicit step, 90% of the CFL bound on the chosen h_rho
    let h_t = h_t.unwrap_or_else(|| 0.9 * h_rho * FdConfig { h_rho, ..coupled }.cfl_bound());
    match FdConfig::with_grid(delta, alpha, coupled.m_bar, rho_max, t_end, h_rho, h_t) {
        Ok(c) => Some(c),
        Err(e) => {
            r.errors.push(format!("scheme grid override rejected: {e}"));
            None
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn viscous_configs(
    r: &mut Reader,
    data: &DataSpec,
    alpha: MobilityExponent,
    dim: u32,
    t_end: f64,
    buffer: f64,
    epsilons: &[f64],
    (h_rho, h_t, rho_max): (Option<f64>, Option<f64>, Option<f64>),
) -> Vec<ViscousConfig> {
    let Some(steps) = data.monotone() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for &eps in epsilons {
        let config = ViscousConfig::auto(eps, alpha, dim, steps, t_end, buffer).and_then(|auto| {
            if h_rho.is_none() && h_t.is_none() && rho_max.is_none() {
                return Ok(auto);
            }
            let h = h_rho.unwrap_or(auto.h_rho);
            let rm = rho_max.unwrap_or(auto.rho_max);
            let probe = ViscousConfig { h_rho: h, rho_max: rm, ..auto };
            let ht = h_t.unwrap_or_else(|| 0.9 * probe.stability_limits().iter().map(|l| l.1).fold(f64::INFINITY, f64::min));
            ViscousConfig::new(eps, alpha, dim, h, ht, rm, t_end, auto.mass, auto.u_sup)
        });
        match config {
            Ok(c) => out.push(c),
            Err(e) => r.errors.push(format!("viscous grid for epsilon {eps}: {e}")),
        }
    }
    out
}
