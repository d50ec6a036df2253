//! Terminal densities, throughput demand and quadrature over regions.
//!
//! A [`Density`] is a probability density sampled on the nodes of a uniform
//! grid over a bounded 1-D interval or 2-D rectangle. Densities built from a
//! closed-form law keep the law so point evaluation is exact; grid densities
//! are evaluated by (bi)linear interpolation.
//!
//! Location-dependent demand is folded into the density: given a raw density
//! `f̃` and a demand `θ̃`, the folded density is `f = f̃·θ̃/θ` with the constant
//! throughput `θ = ∫ f̃·θ̃`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::power::Position;
use crate::quadrature::{AxisGrid, AxisPanel};

/// Half-width, in standard deviations, of the default window for a normal law.
pub const NORMAL_TRUNCATION_SIGMAS: f64 = 8.0;

/// Default grid resolution (points per axis) on 1-D domains.
pub const DEFAULT_RESOLUTION_1D: usize = 2001;

/// Default grid resolution (points per axis) on 2-D domains.
pub const DEFAULT_RESOLUTION_2D: usize = 201;

/// Tolerance on the normalization of a density.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Bounded deployment region with its sampling grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    axes: Vec<AxisGrid>,
}

impl Domain {
    pub fn interval(min: f64, max: f64, resolution: usize) -> Result<Self> {
        Ok(Self {
            axes: vec![AxisGrid::new(min, max, resolution)?],
        })
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64), resolution: (usize, usize)) -> Result<Self> {
        Ok(Self {
            axes: vec![
                AxisGrid::new(x.0, x.1, resolution.0)?,
                AxisGrid::new(y.0, y.1, resolution.1)?,
            ],
        })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[AxisGrid] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &AxisGrid {
        &self.axes[k]
    }

    pub fn node_count(&self) -> usize {
        self.axes.iter().map(AxisGrid::len).product()
    }

    /// Position of node `idx` in row-major order (x fastest).
    pub fn node(&self, idx: usize) -> Position {
        match self.axes.as_slice() {
            [x] => Position::d1(x.node(idx)),
            [x, y] => Position::d2(x.node(idx % x.len()), y.node(idx / x.len())),
            _ => unreachable!("domains are 1-D or 2-D"),
        }
    }

    pub fn contains(&self, p: &Position) -> bool {
        p.dim() == self.dim()
            && self
                .axes
                .iter()
                .enumerate()
                .all(|(k, a)| a.contains(p.coord(k)))
    }

    fn check_point(&self, p: &Position) -> Result<()> {
        if p.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: p.dim(),
            });
        }
        if !self.contains(p) {
            return Err(Error::OutsideDomain {
                point: p.coords().to_vec(),
            });
        }
        Ok(())
    }

    /// Composite weights of every node, flattened row-major.
    pub fn weights(&self) -> Vec<f64> {
        match self.axes.as_slice() {
            [x] => x.weights(),
            [x, y] => {
                let (wx, wy) = (x.weights(), y.weights());
                wy.iter().flat_map(|b| wx.iter().map(move |a| a * b)).collect()
            }
            _ => unreachable!(),
        }
    }

    /// Tensor-product panels covering the domain.
    pub fn panels(&self) -> Vec<Panel> {
        match self.axes.as_slice() {
            [x] => x
                .panels()
                .into_iter()
                .map(|p| Panel {
                    center: Position::d1(panel_center(x, &p)),
                    nodes: p.weights.iter().enumerate().map(|(k, w)| (p.first + k, *w)).collect(),
                })
                .collect(),
            [x, y] => {
                let (px, py) = (x.panels(), y.panels());
                let nx = x.len();
                let mut out = Vec::with_capacity(px.len() * py.len());
                for q in &py {
                    for p in &px {
                        let mut nodes = Vec::with_capacity(p.weights.len() * q.weights.len());
                        for (kj, wj) in q.weights.iter().enumerate() {
                            for (ki, wi) in p.weights.iter().enumerate() {
                                nodes.push(((q.first + kj) * nx + p.first + ki, wi * wj));
                            }
                        }
                        out.push(Panel {
                            center: Position::d2(panel_center(x, p), panel_center(y, q)),
                            nodes,
                        });
                    }
                }
                out
            }
            _ => unreachable!(),
        }
    }

    /// Node weights representing the integral over `region`.
    pub fn region_weights(&self, region: &Region) -> Result<Vec<(usize, f64)>> {
        match (self.axes.as_slice(), region) {
            ([x], Region::Interval(a, b)) => x.weights_over(*a, *b).map_err(|_| Error::RegionOutsideDomain {
                region: region.to_string(),
            }),
            ([x, y], Region::Rectangle { x: rx, y: ry }) => {
                let wrap = |_| Error::RegionOutsideDomain {
                    region: region.to_string(),
                };
                let wx = x.weights_over(rx.0, rx.1).map_err(wrap)?;
                let wy = y.weights_over(ry.0, ry.1).map_err(wrap)?;
                let nx = x.len();
                Ok(wy
                    .iter()
                    .flat_map(|&(j, b)| wx.iter().map(move |&(i, a)| (j * nx + i, a * b)))
                    .collect())
            }
            _ => Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: region.dim(),
            }),
        }
    }
}

fn panel_center(axis: &AxisGrid, p: &AxisPanel) -> f64 {
    0.5 * (axis.node(p.first) + axis.node(p.last()))
}

/// Quadrature panel: the unit of cell assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct Panel {
    pub center: Position,
    /// `(node index, weight)` pairs.
    pub nodes: Vec<(usize, f64)>,
}

/// Integration region: a sub-interval or an axis-aligned sub-rectangle.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Interval(f64, f64),
    Rectangle { x: (f64, f64), y: (f64, f64) },
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Interval(..) => 1,
            Region::Rectangle { .. } => 2,
        }
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Region::Interval(a, b) => write!(f, "[{a}, {b}]"),
            Region::Rectangle { x, y } => write!(f, "[{}, {}]x[{}, {}]", x.0, x.1, y.0, y.1),
        }
    }
}

/// One-dimensional closed-form law, restricted to an axis of the domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Law {
    Uniform,
    Normal { mu: f64, sigma: f64 },
    TruncatedNormal { mu: f64, sigma: f64, a: f64, b: f64 },
}

impl Law {
    fn validate(&self) -> Result<()> {
        match *self {
            Law::Uniform => Ok(()),
            Law::Normal { mu, sigma } => {
                if !mu.is_finite() || !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::InvalidDensity(format!("normal({mu}, {sigma}) needs sigma > 0")));
                }
                Ok(())
            }
            Law::TruncatedNormal { mu, sigma, a, b } => {
                Law::Normal { mu, sigma }.validate()?;
                if !(a < b) || !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidDensity(format!("truncation [{a}, {b}] is empty")));
                }
                Ok(())
            }
        }
    }

    /// Default support used when the scenario does not give a domain.
    pub fn default_bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Law::Uniform => None,
            Law::Normal { mu, sigma } => Some((
                mu - NORMAL_TRUNCATION_SIGMAS * sigma,
                mu + NORMAL_TRUNCATION_SIGMAS * sigma,
            )),
            Law::TruncatedNormal { a, b, .. } => Some((a, b)),
        }
    }

    fn unnormalized(&self, x: f64) -> f64 {
        match *self {
            Law::Uniform => 1.0,
            Law::Normal { mu, sigma } => gauss(x, mu, sigma),
            Law::TruncatedNormal { mu, sigma, a, b } => {
                if x < a || x > b {
                    0.0
                } else {
                    gauss(x, mu, sigma)
                }
            }
        }
    }

    /// Mass of the unnormalized law on `[lo, hi]`.
    fn mass(&self, lo: f64, hi: f64) -> f64 {
        match *self {
            Law::Uniform => hi - lo,
            Law::Normal { mu, sigma } => normal_cdf(hi, mu, sigma) - normal_cdf(lo, mu, sigma),
            Law::TruncatedNormal { mu, sigma, a, b } => {
                let (lo, hi) = (lo.max(a), hi.min(b));
                if lo >= hi {
                    0.0
                } else {
                    normal_cdf(hi, mu, sigma) - normal_cdf(lo, mu, sigma)
                }
            }
        }
    }
}

fn gauss(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

fn normal_cdf(x: f64, mu: f64, sigma: f64) -> f64 {
    0.5 * (1.0 + erf((x - mu) / sigma * FRAC_1_SQRT_2))
}

/// Closed-form identity of a density, if it has one.
#[derive(Clone, Debug, PartialEq)]
pub enum AnalyticTag {
    /// Product of one law per axis, each normalized over the domain axis.
    Product(Vec<Law>),
    /// Sampled values only.
    CustomGrid,
}

/// Probability density on a gridded domain.
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    domain: Domain,
    values: Vec<f64>,
    tag: AnalyticTag,
    /// Per-axis normalizers for analytic laws.
    norms: Vec<f64>,
}

impl Density {
    /// Density built from one closed-form law per axis.
    pub fn analytic(domain: Domain, laws: Vec<Law>) -> Result<Self> {
        if laws.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: laws.len(),
            });
        }
        let mut norms = Vec::with_capacity(laws.len());
        for (law, axis) in laws.iter().zip(domain.axes()) {
            law.validate()?;
            let z = law.mass(axis.min(), axis.max());
            if !(z > 0.0) {
                return Err(Error::InvalidDensity(format!(
                    "{law:?} has no mass on [{}, {}]",
                    axis.min(),
                    axis.max()
                )));
            }
            norms.push(z);
        }
        let mut d = Self {
            values: Vec::new(),
            domain,
            tag: AnalyticTag::Product(laws),
            norms,
        };
        let values = Execution::default().map(d.domain.node_count(), |i| d.analytic_at(&d.domain.node(i)));
        d.values = values;
        Ok(d)
    }

    pub fn uniform(domain: Domain) -> Result<Self> {
        let laws = vec![Law::Uniform; domain.dim()];
        Self::analytic(domain, laws)
    }

    /// Normal law on its default ±8σ window.
    pub fn normal_1d(mu: f64, sigma: f64, resolution: usize) -> Result<Self> {
        let law = Law::Normal { mu, sigma };
        law.validate()?;
        let (lo, hi) = law.default_bounds().unwrap();
        Self::analytic(Domain::interval(lo, hi, resolution)?, vec![law])
    }

    /// Normal law truncated to `[a, b]`, on the domain `[a, b]`.
    pub fn truncated_normal_1d(mu: f64, sigma: f64, a: f64, b: f64, resolution: usize) -> Result<Self> {
        let law = Law::TruncatedNormal { mu, sigma, a, b };
        law.validate()?;
        Self::analytic(Domain::interval(a, b, resolution)?, vec![law])
    }

    /// Grid density from non-negative node values, renormalized to unit mass.
    pub fn from_grid(domain: Domain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.node_count() {
            return Err(Error::InvalidDensity(format!(
                "expected {} grid values, got {}",
                domain.node_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDensity("grid values must be finite and non-negative".into()));
        }
        let mass: f64 = domain.weights().iter().zip(&values).map(|(w, v)| w * v).sum();
        if !(mass > 0.0) {
            return Err(Error::InvalidDensity("grid density has zero mass".into()));
        }
        Ok(Self {
            domain,
            values: values.into_iter().map(|v| v / mass).collect(),
            tag: AnalyticTag::CustomGrid,
            norms: Vec::new(),
        })
    }

    /// Same closed form resampled on a grid of different resolution.
    pub fn resampled(&self, resolution: usize) -> Result<Self> {
        let axes = self.domain.axes();
        let domain = match axes {
            [x] => Domain::interval(x.min(), x.max(), resolution)?,
            [x, y] => Domain::rectangle((x.min(), x.max()), (y.min(), y.max()), (resolution, resolution))?,
            _ => unreachable!(),
        };
        match &self.tag {
            AnalyticTag::Product(laws) => Self::analytic(domain, laws.clone()),
            AnalyticTag::CustomGrid => {
                let values = (0..domain.node_count())
                    .map(|i| self.interpolate(&domain.node(i)))
                    .collect();
                Self::from_grid(domain, values)
            }
        }
    }

    fn analytic_at(&self, p: &Position) -> f64 {
        match &self.tag {
            AnalyticTag::Product(laws) => laws
                .iter()
                .zip(&self.norms)
                .enumerate()
                .map(|(k, (law, z))| law.unnormalized(p.coord(k)) / z)
                .product(),
            AnalyticTag::CustomGrid => self.interpolate(p),
        }
    }

    fn interpolate(&self, p: &Position) -> f64 {
        match self.domain.axes() {
            [x] => x.interpolate(&self.values, p.coord(0)),
            [x, y] => {
                let (i, s) = x.locate(p.coord(0));
                let (j, t) = y.locate(p.coord(1));
                let nx = x.len();
                let v = |a: usize, b: usize| self.values[b * nx + a];
                (1.0 - t) * ((1.0 - s) * v(i, j) + s * v(i + 1, j)) + t * ((1.0 - s) * v(i, j + 1) + s * v(i + 1, j + 1))
            }
            _ => unreachable!(),
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tag(&self) -> &AnalyticTag {
        &self.tag
    }

    /// Point evaluation: exact for closed-form laws, interpolated otherwise.
    pub fn eval(&self, p: &Position) -> Result<f64> {
        self.domain.check_point(p)?;
        Ok(self.analytic_at(p))
    }

    pub fn eval_1d(&self, x: f64) -> Result<f64> {
        self.eval(&Position::d1(x))
    }

    /// Composite-Simpson mass over a region of the domain.
    pub fn integrate(&self, region: &Region) -> Result<f64> {
        Ok(self
            .domain
            .region_weights(region)?
            .into_iter()
            .map(|(i, w)| w * self.values[i])
            .sum())
    }

    /// Quadrature mass over the whole domain.
    pub fn mass(&self) -> f64 {
        self.domain.weights().iter().zip(&self.values).map(|(w, v)| w * v).sum()
    }

    /// Expected number of terminals in `region` out of `total`.
    pub fn terminal_count(&self, region: &Region, total: f64) -> Result<f64> {
        if !(total >= 0.0) {
            return Err(Error::InvalidParameter(format!("terminal count must be >= 0, got {total}")));
        }
        Ok(total * self.integrate(region)?)
    }

    /// Barycenter `∫ x f`.
    pub fn mean(&self) -> Position {
        let w = self.domain.weights();
        let mut acc = [0.0; 2];
        for (i, (wi, fi)) in w.iter().zip(&self.values).enumerate() {
            let p = self.domain.node(i);
            for (k, a) in acc.iter_mut().enumerate().take(self.dim()) {
                *a += wi * fi * p.coord(k);
            }
        }
        Position::from_slice(&acc[..self.dim()])
    }

    /// Standard deviation of a 1-D density.
    pub fn std_dev_1d(&self) -> Result<f64> {
        if self.dim() != 1 {
            return Err(Error::NotOneDimensional);
        }
        let axis = self.domain.axis(0);
        let mean = self.mean().coord(0);
        let var: f64 = axis
            .weights()
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(i, (w, f))| w * f * (axis.node(i) - mean).powi(2))
            .sum();
        Ok(var.max(0.0).sqrt())
    }

    /// Marginal density values along axis `k` (1-D: the values themselves).
    pub fn marginal(&self, k: usize) -> Vec<f64> {
        match self.domain.axes() {
            [_] => self.values.clone(),
            [x, y] => {
                let (nx, ny) = (x.len(), y.len());
                if k == 0 {
                    let wy = y.weights();
                    (0..nx).map(|i| (0..ny).map(|j| wy[j] * self.values[j * nx + i]).sum()).collect()
                } else {
                    let wx = x.weights();
                    (0..ny).map(|j| (0..nx).map(|i| wx[i] * self.values[j * nx + i]).sum()).collect()
                }
            }
            _ => unreachable!(),
        }
    }
}

/// Quantile of a density sampled on `axis`, treating it as piecewise linear.
pub(crate) fn grid_quantile(axis: &AxisGrid, values: &[f64], level: f64) -> f64 {
    let h = axis.spacing();
    let areas: Vec<f64> = values.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).collect();
    let total: f64 = areas.iter().sum();
    let target = level.clamp(0.0, 1.0) * total;
    let mut acc = 0.0;
    for (i, a) in areas.iter().enumerate() {
        if acc + a >= target && *a > 0.0 {
            // Solve ∫_0^s (f0 + (f1-f0) u/h) du = r for s in [0, h].
            let (f0, f1) = (values[i], values[i + 1]);
            let r = target - acc;
            let slope = (f1 - f0) / h;
            let s = if slope.abs() < 1e-14 * (f0 + f1).max(1e-300) / h {
                r / f0
            } else {
                let disc = (f0 * f0 + 2.0 * slope * r).max(0.0);
                2.0 * r / (f0 + disc.sqrt())
            };
            return axis.node(i) + s.clamp(0.0, h);
        }
        acc += a;
    }
    axis.max()
}

/// Terminal density together with the constant throughput it absorbed.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    density: Density,
    theta: f64,
}

impl DensityField {
    pub fn new(density: Density, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("throughput must be > 0, got {theta}")));
        }
        Ok(Self { density, theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn density(&self) -> &Density {
        &self.density
    }

    pub fn into_density(self) -> Density {
        self.density
    }
}

impl std::ops::Deref for DensityField {
    type Target = Density;

    fn deref(&self) -> &Density {
        &self.density
    }
}

/// Location-dependent throughput demand `θ̃`.
#[derive(Clone, Debug, PartialEq)]
pub enum Throughput {
    Constant(f64),
    /// `intercept + slope · p`.
    Affine { intercept: f64, slope: Vec<f64> },
    /// Node values on the demand's grid.
    Grid(Vec<f64>),
}

impl Throughput {
    fn sample(&self, domain: &Domain) -> Result<Vec<f64>> {
        let n = domain.node_count();
        let values: Vec<f64> = match self {
            Throughput::Constant(c) => vec![*c; n],
            Throughput::Affine { intercept, slope } => {
                if slope.len() != domain.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: domain.dim(),
                        got: slope.len(),
                    });
                }
                (0..n)
                    .map(|i| {
                        let p = domain.node(i);
                        intercept + slope.iter().enumerate().map(|(k, s)| s * p.coord(k)).sum::<f64>()
                    })
                    .collect()
            }
            Throughput::Grid(v) => {
                if v.len() != n {
                    return Err(Error::InvalidParameter(format!(
                        "throughput grid has {} values, domain has {n} nodes",
                        v.len()
                    )));
                }
                v.clone()
            }
        };
        // Affine demand may dip below zero by rounding at a root on the boundary.
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if values.iter().any(|v| !v.is_finite() || *v < -1e-12 * scale.max(1.0)) {
            return Err(Error::InvalidParameter("throughput demand must be non-negative".into()));
        }
        Ok(values.into_iter().map(|v| v.max(0.0)).collect())
    }
}

/// Raw terminal density `f̃` with its throughput demand `θ̃`.
#[derive(Clone, Debug, PartialEq)]
pub struct DemandField {
    pub terminals: Density,
    pub throughput: Throughput,
}

/// Folds location-dependent demand into a single density with constant throughput.
///
/// Returns `θ = ∫ f̃·θ̃` and `f = f̃·θ̃/θ`, so that `f·θ = f̃·θ̃` at every node.
/// A constant demand leaves the closed form of `f̃` intact.
pub fn fold_demand(demand: &DemandField) -> Result<DensityField> {
    let terminals = &demand.terminals;
    let domain = terminals.domain();
    let raw_mass = terminals.mass();
    if (raw_mass - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidDensity(format!("terminal density integrates to {raw_mass}")));
    }
    let demand_values = demand.throughput.sample(domain)?;
    let product: Vec<f64> = terminals.values().iter().zip(&demand_values).map(|(f, t)| f * t).collect();
    let theta: f64 = domain.weights().iter().zip(&product).map(|(w, p)| w * p).sum();
    if !(theta > 0.0) {
        return Err(Error::ZeroDemand);
    }
    let values: Vec<f64> = product.iter().map(|p| p / theta).collect();
    let tag = match demand.throughput {
        Throughput::Constant(_) => terminals.tag.clone(),
        _ => AnalyticTag::CustomGrid,
    };
    let norms = match tag {
        AnalyticTag::Product(_) => terminals.norms.clone(),
        AnalyticTag::CustomGrid => Vec::new(),
    };
    DensityField::new(
        Density {
            domain: domain.clone(),
            values,
            tag,
            norms,
        },
        theta,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Domain {
        Domain::interval(0.0, 1.0, DEFAULT_RESOLUTION_1D).unwrap()
    }

    #[test]
    fn constant_demand_factors_out() {
        let terminals = Density::uniform(unit()).unwrap();
        let folded = fold_demand(&DemandField {
            terminals: terminals.clone(),
            throughput: Throughput::Constant(5.0),
        })
        .unwrap();
        assert!((folded.theta() - 5.0).abs() < 1e-12);
        for (a, b) in folded.values().iter().zip(terminals.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(folded.tag(), terminals.tag());
    }

    #[test]
    fn linear_demand_on_uniform() {
        let folded = fold_demand(&DemandField {
            terminals: Density::uniform(unit()).unwrap(),
            throughput: Throughput::Affine {
                intercept: 0.0,
                slope: vec![2.0],
            },
        })
        .unwrap();
        // ∫_0^1 2x dx = 1
        assert!((folded.theta() - 1.0).abs() < 1e-12);
        for x in [0.0, 0.1, 0.37, 0.5, 0.999, 1.0] {
            assert!((folded.eval_1d(x).unwrap() - 2.0 * x).abs() < 1e-9);
        }
        assert!((folded.mass() - 1.0).abs() < MASS_TOLERANCE);
    }

    #[test]
    fn zero_demand_rejected() {
        let err = fold_demand(&DemandField {
            terminals: Density::uniform(unit()).unwrap(),
            throughput: Throughput::Constant(0.0),
        })
        .unwrap_err();
        assert_eq!(err, Error::ZeroDemand);
    }

    #[test]
    fn negative_demand_rejected() {
        assert!(fold_demand(&DemandField {
            terminals: Density::uniform(unit()).unwrap(),
            throughput: Throughput::Affine {
                intercept: -1.0,
                slope: vec![1.0],
            },
        })
        .is_err());
    }

    #[test]
    fn point_evaluation() {
        let u = Density::uniform(unit()).unwrap();
        assert!((u.eval_1d(0.3).unwrap() - 1.0).abs() < 1e-15);
        let n = Density::normal_1d(0.0, 1.0, DEFAULT_RESOLUTION_1D).unwrap();
        assert!((n.eval_1d(0.0).unwrap() - 0.398_942_3).abs() < 1e-7);
        let t = Density::truncated_normal_1d(0.0, 1.0, -1.0, 1.0, DEFAULT_RESOLUTION_1D).unwrap();
        assert!(matches!(t.eval_1d(1.5), Err(Error::OutsideDomain { .. })));
        assert!(matches!(t.eval_1d(-1.5), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn grid_density_interpolates() {
        let d = Density::from_grid(Domain::interval(0.0, 2.0, 3).unwrap(), vec![0.0, 1.0, 0.0]).unwrap();
        // tent normalized by Simpson mass 4/3
        assert!((d.eval_1d(0.5).unwrap() - 0.5 * 0.75).abs() < 1e-15);
    }

    #[test]
    fn integrate_examples() {
        let u = Density::uniform(unit()).unwrap();
        assert!((u.integrate(&Region::Interval(0.0, 0.5)).unwrap() - 0.5).abs() < 1e-12);
        assert!((u.integrate(&Region::Interval(0.0, 1.0)).unwrap() - 1.0).abs() < 1e-9);
        let n = Density::normal_1d(0.0, 1.0, DEFAULT_RESOLUTION_1D).unwrap();
        // erf(1/√2)
        let reference = 0.682_689_492_137_085_9;
        assert!((n.integrate(&Region::Interval(-1.0, 1.0)).unwrap() - reference).abs() < 1e-9);
        assert!((n.mass() - 1.0).abs() < 1e-9);
        assert!(u.integrate(&Region::Interval(-0.1, 0.5)).is_err());
    }

    #[test]
    fn terminal_counts() {
        let u = Density::uniform(unit()).unwrap();
        assert!((u.terminal_count(&Region::Interval(0.0, 0.25), 100.0).unwrap() - 25.0).abs() < 1e-9);
        assert_eq!(u.terminal_count(&Region::Interval(0.2, 0.7), 0.0).unwrap(), 0.0);
        let n = Density::normal_1d(0.0, 1.0, DEFAULT_RESOLUTION_1D).unwrap();
        let c = n.terminal_count(&Region::Interval(-1.0, 1.0), 1000.0).unwrap();
        assert!((c - 682.689_492).abs() < 1e-5);
        assert!(u.terminal_count(&Region::Interval(0.0, 1.0), -1.0).is_err());
    }

    #[test]
    fn rectangle_domain() {
        let d = Density::uniform(Domain::rectangle((0.0, 2.0), (0.0, 1.0), (41, 21)).unwrap()).unwrap();
        assert!((d.mass() - 1.0).abs() < 1e-12);
        let q = d
            .integrate(&Region::Rectangle {
                x: (0.0, 1.0),
                y: (0.0, 0.5),
            })
            .unwrap();
        assert!((q - 0.25).abs() < 1e-12);
        let m = d.mean();
        assert!((m.coord(0) - 1.0).abs() < 1e-12 && (m.coord(1) - 0.5).abs() < 1e-12);
        assert!((d.eval(&Position::d2(0.3, 0.3)).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quantiles_of_uniform() {
        let axis = AxisGrid::new(0.0, 1.0, 101).unwrap();
        let v = vec![1.0; 101];
        assert!((grid_quantile(&axis, &v, 0.25) - 0.25).abs() < 1e-12);
        assert!((grid_quantile(&axis, &v, 0.5) - 0.5).abs() < 1e-12);
    }
}
