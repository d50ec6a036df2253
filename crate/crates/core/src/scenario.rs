//! Scenario files.
//!
//! A scenario is a JSON document describing the terminal density (directly or
//! as demand to be folded), radio parameters and one solver mode:
//!
//! ```json
//! {
//!   "density": {"kind": "truncated_normal",
//!               "params": {"mu": 0, "sigma": 1, "a": -1, "b": 1},
//!               "domain": {"min": -1, "max": 1, "resolution": 2001}},
//!   "theta": 1, "sigma2": 1,
//!   "mode": {"kind": "closed_form"},
//!   "output_dir": "out"
//! }
//! ```

use std::path::PathBuf;

use serde::Deserialize;
use serde_json::Value;

use crate::density::{
    fold_demand, DemandField, Density, DensityField, Domain, Law, Throughput, DEFAULT_RESOLUTION_1D,
    DEFAULT_RESOLUTION_2D,
};
use crate::placement::{CostTerms, InitStrategy, OptimizerConfig};
use crate::power::{Position, RadioParams};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ScenarioError {
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

impl From<crate::Error> for ScenarioError {
    fn from(e: crate::Error) -> Self {
        ScenarioError::Invalid(e.to_string())
    }
}

type Result<T> = std::result::Result<T, ScenarioError>;

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(ScenarioError::Invalid(msg.into()))
}

/// Settings that override the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    /// Nodes per axis for every density grid.
    pub grid: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Mode {
    Discrete { k: usize, config: OptimizerConfig },
    Continuum { tolerance: f64, max_iterations: usize },
    ClosedForm,
    Compare { k_list: Vec<usize>, candidates: usize },
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Discrete { .. } => "discrete",
            Mode::Continuum { .. } => "continuum",
            Mode::ClosedForm => "closed_form",
            Mode::Compare { .. } => "compare",
        }
    }
}

pub const DEFAULT_COMPARE_K: [usize; 2] = [2, 3];
pub const DEFAULT_CANDIDATES: usize = 201;

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: Option<String>,
    pub field: DensityField,
    pub radio: RadioParams,
    /// Free-text unit label for θ, reported but never interpreted.
    pub theta_label: Option<String>,
    /// Total number of terminals, informational.
    pub terminals: Option<f64>,
    pub mode: Mode,
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    density: Option<RawDensity>,
    demand: Option<RawDemand>,
    theta: Option<f64>,
    theta_label: Option<String>,
    sigma2: Option<f64>,
    terminals: Option<f64>,
    mode: Option<RawMode>,
    output_dir: Option<PathBuf>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDensity {
    kind: Option<String>,
    params: Option<Value>,
    domain: Option<RawDomain>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawDomain {
    One(RawAxis),
    Many(Vec<RawAxis>),
}

#[derive(Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxis {
    min: Option<f64>,
    max: Option<f64>,
    resolution: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDemand {
    terminals: Option<RawDensity>,
    throughput: Option<RawThroughput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawThroughput {
    kind: Option<String>,
    value: Option<f64>,
    intercept: Option<f64>,
    slope: Option<Vec<f64>>,
    values: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMode {
    kind: Option<String>,
    k: Option<usize>,
    k_list: Option<Vec<usize>>,
    candidates: Option<usize>,
    max_iterations: Option<usize>,
    tolerance: Option<f64>,
    damping: Option<f64>,
    init: Option<Value>,
    terms: Option<String>,
    polish: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NormalParams {
    mu: f64,
    sigma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TruncatedParams {
    mu: f64,
    sigma: f64,
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridParams {
    values: Vec<f64>,
}

impl Scenario {
    pub fn from_json(text: &str, overrides: &Overrides) -> Result<Self> {
        let raw: RawScenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        build(raw, overrides)
    }
}

fn build(raw: RawScenario, ov: &Overrides) -> Result<Scenario> {
    let field = match (raw.density, raw.demand) {
        (Some(d), None) => {
            let Some(theta) = raw.theta else {
                return invalid("theta is required with a density");
            };
            DensityField::new(build_density(&d, ov.grid)?, theta)?
        }
        (None, Some(demand)) => {
            if raw.theta.is_some() {
                return invalid("theta is derived from demand and must not be given");
            }
            fold_demand(&build_demand(&demand, ov.grid)?)?
        }
        (Some(_), Some(_)) => return invalid("give either density or demand, not both"),
        (None, None) => return invalid("a density or demand block is required"),
    };
    let Some(sigma2) = raw.sigma2 else {
        return invalid("sigma2 is required");
    };
    let radio = RadioParams::for_field(sigma2, &field)?;
    if let Some(n) = raw.terminals {
        if !(n >= 0.0 && n.is_finite()) {
            return invalid(format!("terminals must be a non-negative count, got {n}"));
        }
    }
    let seed = ov.seed.or(raw.seed).unwrap_or(0);
    let Some(mode) = raw.mode else {
        return invalid("mode is required");
    };
    let mode = build_mode(&mode, &field, seed)?;
    Ok(Scenario {
        name: raw.name,
        field,
        radio,
        theta_label: raw.theta_label,
        terminals: raw.terminals,
        mode,
        output_dir: raw.output_dir,
        seed,
    })
}

fn params<T: serde::de::DeserializeOwned>(kind: &str, v: &Option<Value>) -> Result<T> {
    let Some(v) = v else {
        return invalid(format!("{kind} density needs params"));
    };
    serde_json::from_value(v.clone()).map_err(|e| ScenarioError::Invalid(format!("{kind} params: {e}")))
}

/// Per-axis params: one object for every axis, or an array with one per axis.
fn axis_params<T: serde::de::DeserializeOwned>(kind: &str, v: &Option<Value>, dim: usize) -> Result<Vec<T>> {
    match v {
        Some(Value::Array(items)) => {
            if items.len() != dim {
                return invalid(format!("{kind} needs {dim} param blocks, got {}", items.len()));
            }
            items.iter().map(|item| params(kind, &Some(item.clone()))).collect()
        }
        _ => {
            let one: Value = v.clone().unwrap_or(Value::Null);
            (0..dim).map(|_| params(kind, &Some(one.clone()))).collect()
        }
    }
}

fn build_density(raw: &RawDensity, grid: Option<usize>) -> Result<Density> {
    let Some(kind) = raw.kind.as_deref() else {
        return invalid("density kind is required");
    };
    let axes: Vec<RawAxis> = match &raw.domain {
        None => vec![RawAxis {
            min: None,
            max: None,
            resolution: None,
        }],
        Some(RawDomain::One(a)) => vec![*a],
        Some(RawDomain::Many(v)) => v.clone(),
    };
    if axes.is_empty() || axes.len() > 2 {
        return invalid(format!("domain must have 1 or 2 axes, got {}", axes.len()));
    }
    let dim = axes.len();
    let laws: Vec<Law> = match kind {
        "uniform" | "grid" => vec![Law::Uniform; dim],
        "normal" => axis_params::<NormalParams>(kind, &raw.params, dim)?
            .into_iter()
            .map(|p| Law::Normal { mu: p.mu, sigma: p.sigma })
            .collect(),
        "truncated_normal" => axis_params::<TruncatedParams>(kind, &raw.params, dim)?
            .into_iter()
            .map(|p| Law::TruncatedNormal {
                mu: p.mu,
                sigma: p.sigma,
                a: p.a,
                b: p.b,
            })
            .collect(),
        other => return invalid(format!("unknown density kind {other:?}")),
    };
    let default_res = if dim == 1 { DEFAULT_RESOLUTION_1D } else { DEFAULT_RESOLUTION_2D };
    let mut bounds = Vec::with_capacity(dim);
    for (axis, law) in axes.iter().zip(&laws) {
        let fallback = law.default_bounds();
        let (Some(min), Some(max)) = (axis.min.or(fallback.map(|b| b.0)), axis.max.or(fallback.map(|b| b.1))) else {
            return invalid(format!("{kind} density needs domain min and max"));
        };
        let res = grid.or(axis.resolution).unwrap_or(default_res);
        bounds.push((min, max, res));
    }
    let domain = if dim == 1 {
        Domain::interval(bounds[0].0, bounds[0].1, bounds[0].2)?
    } else {
        Domain::rectangle((bounds[0].0, bounds[0].1), (bounds[1].0, bounds[1].1), (bounds[0].2, bounds[1].2))?
    };
    if kind == "grid" {
        let g: GridParams = params(kind, &raw.params)?;
        if grid.is_some() {
            // values are tied to their own resolution; resample after loading
            let res: Vec<usize> = axes.iter().map(|a| a.resolution.unwrap_or(default_res)).collect();
            let own = if dim == 1 {
                Domain::interval(bounds[0].0, bounds[0].1, res[0])?
            } else {
                Domain::rectangle((bounds[0].0, bounds[0].1), (bounds[1].0, bounds[1].1), (res[0], res[1]))?
            };
            return Ok(Density::from_grid(own, g.values)?.resampled(bounds[0].2)?);
        }
        return Ok(Density::from_grid(domain, g.values)?);
    }
    Ok(Density::analytic(domain, laws)?)
}

fn build_demand(raw: &RawDemand, grid: Option<usize>) -> Result<DemandField> {
    let Some(terminals) = &raw.terminals else {
        return invalid("demand needs a terminals density");
    };
    let terminals = build_density(terminals, grid)?;
    let Some(t) = &raw.throughput else {
        return invalid("demand needs a throughput block");
    };
    let throughput = match t.kind.as_deref() {
        Some("constant") => match t.value {
            Some(v) => Throughput::Constant(v),
            None => return invalid("constant throughput needs value"),
        },
        Some("affine") => match (t.intercept, &t.slope) {
            (Some(intercept), Some(slope)) => Throughput::Affine {
                intercept,
                slope: slope.clone(),
            },
            _ => return invalid("affine throughput needs intercept and slope"),
        },
        Some("grid") => match &t.values {
            Some(v) => Throughput::Grid(v.clone()),
            None => return invalid("grid throughput needs values"),
        },
        Some(other) => return invalid(format!("unknown throughput kind {other:?}")),
        None => return invalid("throughput kind is required"),
    };
    Ok(DemandField { terminals, throughput })
}

fn build_mode(raw: &RawMode, field: &DensityField, seed: u64) -> Result<Mode> {
    let kind = raw.kind.as_deref().unwrap_or("");
    let one_d = |what: &str| -> Result<()> {
        if field.dim() != 1 {
            return invalid(format!("{what} mode needs a 1-D density"));
        }
        Ok(())
    };
    match kind {
        "discrete" => {
            let Some(k) = raw.k else {
                return invalid("discrete mode needs k");
            };
            if k == 0 {
                return invalid("k must be at least 1");
            }
            let defaults = OptimizerConfig::default();
            let init = match &raw.init {
                None => InitStrategy::Quantile,
                Some(Value::String(s)) if s == "quantile" => InitStrategy::Quantile,
                Some(Value::String(s)) if s == "jitter" => InitStrategy::UniformJitter,
                Some(Value::Array(points)) => {
                    let mut out = Vec::with_capacity(points.len());
                    for p in points {
                        let coords: Vec<f64> = match p {
                            Value::Number(_) => vec![serde_json::from_value(p.clone()).unwrap_or(f64::NAN)],
                            _ => serde_json::from_value(p.clone())
                                .map_err(|e| ScenarioError::Invalid(format!("explicit init: {e}")))?,
                        };
                        if coords.len() != field.dim() {
                            return invalid(format!("explicit init point has {} coordinates", coords.len()));
                        }
                        out.push(Position::from_slice(&coords));
                    }
                    if out.len() != k {
                        return invalid(format!("explicit init has {} points for k = {k}", out.len()));
                    }
                    InitStrategy::Explicit(out)
                }
                Some(other) => return invalid(format!("unknown init {other}")),
            };
            let terms = match raw.terms.as_deref() {
                None | Some("full") => CostTerms::Full,
                Some("intra_only") => CostTerms::IntraOnly,
                Some(other) => return invalid(format!("unknown terms {other:?}")),
            };
            let config = OptimizerConfig {
                max_iterations: raw.max_iterations.unwrap_or(defaults.max_iterations),
                tolerance: raw.tolerance.unwrap_or(defaults.tolerance),
                init,
                seed,
                damping: raw.damping.unwrap_or(defaults.damping),
                terms,
                polish: raw.polish.unwrap_or(defaults.polish),
            };
            if !(config.tolerance > 0.0) || !(config.damping > 0.0 && config.damping <= 1.0) {
                return invalid("tolerance must be > 0 and damping in (0, 1]");
            }
            Ok(Mode::Discrete { k, config })
        }
        "continuum" => {
            one_d("continuum")?;
            let tolerance = raw.tolerance.unwrap_or(1e-10);
            let max_iterations = raw.max_iterations.unwrap_or(100);
            if !(tolerance > 0.0) || max_iterations == 0 {
                return invalid("continuum mode needs tolerance > 0 and max_iterations >= 1");
            }
            Ok(Mode::Continuum {
                tolerance,
                max_iterations,
            })
        }
        "closed_form" => {
            one_d("closed_form")?;
            Ok(Mode::ClosedForm)
        }
        "compare" => {
            one_d("compare")?;
            let k_list = raw.k_list.clone().unwrap_or(DEFAULT_COMPARE_K.to_vec());
            let candidates = raw.candidates.unwrap_or(DEFAULT_CANDIDATES);
            validate_compare(&k_list, candidates)?;
            Ok(Mode::Compare { k_list, candidates })
        }
        "" => invalid("mode kind is required"),
        other => invalid(format!("unknown mode {other:?}")),
    }
}

pub(crate) fn validate_compare(k_list: &[usize], candidates: usize) -> Result<()> {
    use crate::oracle::{MAX_CANDIDATES, MAX_STATIONS};
    if k_list.is_empty() || k_list.len() > MAX_STATIONS || k_list.iter().any(|k| *k == 0 || *k > MAX_STATIONS) {
        return invalid(format!("k_list needs 1 to {MAX_STATIONS} entries, each between 1 and {MAX_STATIONS}"));
    }
    if !(2..=MAX_CANDIDATES).contains(&candidates) {
        return invalid(format!("candidates must be between 2 and {MAX_CANDIDATES}"));
    }
    Ok(())
}
