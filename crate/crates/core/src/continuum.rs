//! One-dimensional asymptotic placement density.
//!
//! As the number of stations grows, the placement is described by a density
//! `ν` of total mass `m = θ`. Optimality couples a transport map `T` from the
//! terminal density `f` to `ν` with the convolution `V∗ν`, `V(x) = |x|²`:
//!
//! ```text
//! (2^θ−1)σ² (x − T(x)) + (2σ²/m) ∇(V∗ν)(x) = 0
//! f(x) = ν(T(x)) T'(x)
//! ```
//!
//! Because `∇(V∗ν)(x) = 2·mass(ν)·(x − bary(ν))`, the first equation gives an
//! affine `T` that depends on `ν` only through its barycenter. For a centered
//! `f` the solution is the dilation `T(x) = λx` with `λ = 1 + 4/(2^θ−1)`, so
//! `ν(y) = f(y/λ)/λ` up to the mass factor.

use crate::density::{grid_quantile, Density, DensityField};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::power::{snr_requirement, RadioParams};
use crate::quadrature::AxisGrid;

/// Tolerance on `|bary(f)|` for the closed-form solution.
pub const CENTERING_TOLERANCE: f64 = 1e-6;

/// Relative tolerance on the mass of a measure fed to the scheme.
pub const SCHEME_MASS_TOLERANCE: f64 = 1e-6;

/// Gridded density on a line.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure1D {
    grid: AxisGrid,
    values: Vec<f64>,
    mass: f64,
    barycenter: f64,
}

impl Measure1D {
    pub fn new(grid: AxisGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidDensity(format!(
                "{} values for a {}-node grid",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDensity("measure density must be finite and non-negative".into()));
        }
        let w = grid.weights();
        let mass: f64 = w.iter().zip(&values).map(|(w, v)| w * v).sum();
        let first: f64 = w
            .iter()
            .zip(&values)
            .enumerate()
            .map(|(i, (w, v))| w * v * grid.node(i))
            .sum();
        let barycenter = if mass > 0.0 { first / mass } else { 0.0 };
        Ok(Self {
            grid,
            values,
            mass,
            barycenter,
        })
    }

    /// `mass · f` on the grid of a 1-D density.
    pub fn from_density(f: &Density, mass: f64) -> Result<Self> {
        if f.dim() != 1 {
            return Err(Error::NotOneDimensional);
        }
        Self::new(f.domain().axis(0).clone(), f.values().iter().map(|v| mass * v).collect())
    }

    pub fn grid(&self) -> &AxisGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total_mass(&self) -> f64 {
        self.mass
    }

    pub fn barycenter(&self) -> f64 {
        self.barycenter
    }

    pub fn support(&self) -> (f64, f64) {
        (self.grid.min(), self.grid.max())
    }

    /// Linear interpolation, zero outside the grid (up to snapping slack).
    pub fn eval(&self, y: f64) -> f64 {
        if !self.grid.contains(y) {
            0.0
        } else {
            self.grid.interpolate(&self.values, y)
        }
    }

    pub fn variance(&self) -> f64 {
        if self.mass <= 0.0 {
            return 0.0;
        }
        let w = self.grid.weights();
        let second: f64 = w
            .iter()
            .zip(&self.values)
            .enumerate()
            .map(|(i, (w, v))| w * v * (self.grid.node(i) - self.barycenter).powi(2))
            .sum();
        (second / self.mass).max(0.0)
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| v * factor).collect())
    }

    /// Same shape with unit mass.
    pub fn normalized(&self) -> Result<Self> {
        if !(self.mass > 0.0) {
            return Err(Error::InvalidDensity("cannot normalize a zero measure".into()));
        }
        self.scaled(1.0 / self.mass)
    }

    /// Sup-norm distance of the densities on the union of both grids.
    pub fn sup_distance(&self, other: &Measure1D) -> f64 {
        let mut nodes = self.grid.nodes();
        nodes.extend(other.grid.nodes());
        nodes
            .into_iter()
            .map(|y| (self.eval(y) - other.eval(y)).abs())
            .fold(0.0, f64::max)
    }
}

/// Monotone map of the line.
#[derive(Clone, Debug, PartialEq)]
pub enum TransportMap1D {
    Affine { scale: f64, offset: f64 },
    /// Piecewise cubic Hermite interpolant of node values and slopes.
    Sampled {
        grid: AxisGrid,
        values: Vec<f64>,
        slopes: Vec<f64>,
    },
}

impl TransportMap1D {
    pub fn identity() -> Self {
        TransportMap1D::Affine { scale: 1.0, offset: 0.0 }
    }

    pub fn affine(scale: f64, offset: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && offset.is_finite()) {
            return Err(Error::NonMonotoneMap);
        }
        Ok(TransportMap1D::Affine { scale, offset })
    }

    /// Sampled map with slopes from the monotone Fritsch–Carlson rule.
    pub fn sampled(grid: AxisGrid, values: Vec<f64>) -> Result<Self> {
        check_increasing(&grid, &values)?;
        let slopes = monotone_slopes(grid.spacing(), &values);
        Ok(TransportMap1D::Sampled { grid, values, slopes })
    }

    /// Sampled map with known node slopes.
    pub fn sampled_with_slopes(grid: AxisGrid, values: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        check_increasing(&grid, &values)?;
        if slopes.len() != values.len() || slopes.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::NonMonotoneMap);
        }
        Ok(TransportMap1D::Sampled { grid, values, slopes })
    }

    pub fn apply(&self, x: f64) -> f64 {
        match self {
            TransportMap1D::Affine { scale, offset } => scale * x + offset,
            TransportMap1D::Sampled { grid, values, slopes } => {
                let (i, t) = grid.locate(x);
                hermite(values[i], values[i + 1], slopes[i], slopes[i + 1], grid.spacing(), t)
            }
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            TransportMap1D::Affine { scale, .. } => *scale,
            TransportMap1D::Sampled { grid, values, slopes } => {
                let (i, t) = grid.locate(x);
                hermite_slope(values[i], values[i + 1], slopes[i], slopes[i + 1], grid.spacing(), t)
            }
        }
    }

    /// `T⁻¹(y)`: exact for affine maps, bracketed search then bisection on the
    /// Hermite piece for sampled maps (clamped to the sampled range).
    pub fn inverse(&self, y: f64) -> f64 {
        match self {
            TransportMap1D::Affine { scale, offset } => (y - offset) / scale,
            TransportMap1D::Sampled { grid, values, slopes } => {
                let n = values.len();
                if y <= values[0] {
                    return grid.min();
                }
                if y >= values[n - 1] {
                    return grid.max();
                }
                let i = values.partition_point(|v| *v <= y).clamp(1, n - 1) - 1;
                let h = grid.spacing();
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..64 {
                    let mid = 0.5 * (lo + hi);
                    if hermite(values[i], values[i + 1], slopes[i], slopes[i + 1], h, mid) < y {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                grid.node(i) + 0.5 * (lo + hi) * h
            }
        }
    }
}

fn check_increasing(grid: &AxisGrid, values: &[f64]) -> Result<()> {
    if values.len() != grid.len() || values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotoneMap);
    }
    Ok(())
}

fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1
}

fn hermite_slope(y0: f64, y1: f64, d0: f64, d1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    ((6.0 * t2 - 6.0 * t) * y0 + (6.0 * t - 6.0 * t2) * y1) / h + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (3.0 * t2 - 2.0 * t) * d1
}

/// Node slopes for increasing data: five-point centered differences (second
/// order next to the ends, harmonic mean where the stencil is not positive),
/// limited with the Fritsch–Carlson circle so every
/// cubic piece stays increasing.
fn monotone_slopes(h: f64, values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let secant: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    if n == 2 {
        return vec![secant[0]; 2];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        d[k] = if k >= 2 && k + 2 < n {
            (values[k - 2] - 8.0 * values[k - 1] + 8.0 * values[k + 1] - values[k + 2]) / (12.0 * h)
        } else {
            0.5 * (secant[k - 1] + secant[k])
        };
        if d[k] <= 0.0 {
            d[k] = 2.0 / (1.0 / secant[k - 1] + 1.0 / secant[k]);
        }
    }
    let end = |s0: f64, s1: f64| {
        let d = 0.5 * (3.0 * s0 - s1);
        if d <= 0.0 {
            s0
        } else {
            d
        }
    };
    d[0] = end(secant[0], secant[1]);
    d[n - 1] = end(secant[n - 2], secant[n - 3]);
    for (k, s) in secant.iter().enumerate() {
        let (a, b) = (d[k] / s, d[k + 1] / s);
        let r = a * a + b * b;
        if r > 9.0 {
            let t = 3.0 / r.sqrt();
            d[k] = t * a * s;
            d[k + 1] = t * b * s;
        }
    }
    d
}

/// Gradient of the Kantorovich potential, `φ'(x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialGradient1D {
    /// `φ'(x) = slope · x`.
    Affine { slope: f64 },
    Sampled { grid: AxisGrid, values: Vec<f64> },
}

impl PotentialGradient1D {
    /// `φ'(x) = −4x/(2^θ−1)`.
    pub fn closed_form(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(PotentialGradient1D::Affine {
            slope: -4.0 / snr_requirement(theta),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PotentialGradient1D::Affine { slope } => slope * x,
            PotentialGradient1D::Sampled { grid, values } => grid.interpolate(values, x),
        }
    }

    /// `T(x) = x − φ'(x)`.
    pub fn transport_map(&self) -> Result<TransportMap1D> {
        match self {
            PotentialGradient1D::Affine { slope } => TransportMap1D::affine(1.0 - slope, 0.0),
            PotentialGradient1D::Sampled { grid, values } => {
                let t = values.iter().enumerate().map(|(i, p)| grid.node(i) - p).collect();
                TransportMap1D::sampled(grid.clone(), t)
            }
        }
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0) || theta.is_nan() {
        return Err(Error::InvalidParameter(format!("theta must be > 0, got {theta}")));
    }
    Ok(())
}

/// Dilation factor `λ = 1 + 4/(2^θ − 1)` of the optimal placement density.
pub fn closed_form_lambda(theta: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(1.0 + 4.0 / snr_requirement(theta))
}

/// `φ'(x) = −4x/(2^θ − 1)`.
pub fn potential_gradient_1d(theta: f64, x: f64) -> Result<f64> {
    Ok(PotentialGradient1D::closed_form(theta)?.eval(x))
}

/// `∇(V∗ν)(x) = 2·mass·(x − barycenter)` for `V(x) = |x|²`.
pub fn convolution_gradient(nu: &Measure1D, x: f64) -> f64 {
    2.0 * nu.total_mass() * (x - nu.barycenter())
}

/// Pushforward of `mass · f` through the increasing map `T`:
/// `v(y) = mass · f(T⁻¹(y)) / T'(T⁻¹(y))` on a uniform grid over `T(domain)`.
pub fn pushforward_1d(f: &Density, map: &TransportMap1D, mass: f64) -> Result<Measure1D> {
    pushforward_1d_with(f, map, mass, Execution::default())
}

pub fn pushforward_1d_with(f: &Density, map: &TransportMap1D, mass: f64, exec: Execution) -> Result<Measure1D> {
    if f.dim() != 1 {
        return Err(Error::NotOneDimensional);
    }
    if !(mass >= 0.0 && mass.is_finite()) {
        return Err(Error::InvalidParameter(format!("mass must be >= 0, got {mass}")));
    }
    let axis = f.domain().axis(0);
    let n = axis.len();
    let (lo, hi) = (map.apply(axis.min()), map.apply(axis.max()));
    if !(hi > lo) {
        return Err(Error::NonMonotoneMap);
    }
    let out = AxisGrid::new(lo, hi, n)?;
    let values = match map {
        TransportMap1D::Affine { scale, .. } => f.values().iter().map(|v| mass * v / scale).collect(),
        TransportMap1D::Sampled { .. } => exec.try_map(n, |k| {
            let x = map.inverse(out.node(k)).clamp(axis.min(), axis.max());
            let slope = map.derivative(x);
            if !(slope > 0.0) {
                return Err(Error::NonMonotoneMap);
            }
            Ok(mass * f.eval_1d(x)? / slope)
        })?,
    };
    Measure1D::new(out, values)
}

/// One step of the fixed-point scheme: solve the first optimality equation
/// for `T_k` given `ν_k`, then push `m·f` forward through `T_k`.
pub fn scheme_step(field: &DensityField, nu: &Measure1D, rp: &RadioParams) -> Result<(TransportMap1D, Measure1D)> {
    let m = field.theta();
    if (nu.total_mass() - m).abs() > SCHEME_MASS_TOLERANCE * m {
        return Err(Error::MassMismatch {
            expected: m,
            got: nu.total_mass(),
        });
    }
    let coefficient = 2.0 / (rp.snr_requirement() * m);
    // T(x) = x + coefficient · 2·mass·(x − bary)
    let slope = 2.0 * nu.total_mass() * coefficient;
    let map = TransportMap1D::affine(1.0 + slope, -slope * nu.barycenter())?;
    let next = pushforward_1d(field, &map, m)?;
    Ok((map, next))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeOutcome {
    pub measure: Measure1D,
    pub map: TransportMap1D,
    /// Number of scheme steps taken.
    pub iterations: usize,
    pub converged: bool,
    /// Sup-norm change of the last step.
    pub last_change: f64,
}

/// Iterates [`scheme_step`] until the sup-norm change drops below `tol`.
pub fn iterate_scheme(
    field: &DensityField,
    nu0: &Measure1D,
    rp: &RadioParams,
    tol: f64,
    max_iter: usize,
) -> Result<SchemeOutcome> {
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
    }
    let mut current = nu0.clone();
    let mut last_map = TransportMap1D::identity();
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        let (map, next) = scheme_step(field, &current, rp)?;
        change = next.sup_distance(&current);
        current = next;
        last_map = map;
        if change < tol {
            return Ok(SchemeOutcome {
                measure: current,
                map: last_map,
                iterations: it,
                converged: true,
                last_change: change,
            });
        }
    }
    Ok(SchemeOutcome {
        measure: current,
        map: last_map,
        iterations: max_iter,
        converged: false,
        last_change: change,
    })
}

/// Closed-form optimal placement density `v(y) = f(y/λ)/λ` (unit mass) on the
/// dilated domain `[λ·min, λ·max]`. `f` must be centered at the origin.
pub fn optimal_bs_density(f: &Density, theta: f64) -> Result<Measure1D> {
    if f.dim() != 1 {
        return Err(Error::NotOneDimensional);
    }
    let lambda = closed_form_lambda(theta)?;
    let bary = f.mean().coord(0);
    if bary.abs() > CENTERING_TOLERANCE {
        return Err(Error::NotCentered(bary));
    }
    let axis = f.domain().axis(0);
    let grid = AxisGrid::new(lambda * axis.min(), lambda * axis.max(), axis.len())?;
    Measure1D::new(grid, f.values().iter().map(|v| v / lambda).collect())
}

/// Fixed point of [`scheme_step`] for any 1-D `f`: the dilation by `λ` about
/// the barycenter of `f`, carrying mass `θ`.
///
/// Iterating the scheme maps the barycenter as `b ↦ λ b_f − (λ−1) b`, which
/// amplifies any offset from `b_f` once `λ > 2`, so the fixed point is built
/// directly instead.
pub fn scheme_fixed_point(field: &DensityField) -> Result<Measure1D> {
    if field.dim() != 1 {
        return Err(Error::NotOneDimensional);
    }
    let lambda = closed_form_lambda(field.theta())?;
    let b = field.mean().coord(0);
    let map = TransportMap1D::affine(lambda, (1.0 - lambda) * b)?;
    pushforward_1d(field, &map, field.theta())
}

/// `max_k |v(x_k) − f(x_k)|` over the nodes of `f`.
pub fn max_deviation(v: &Measure1D, f: &Density) -> Result<f64> {
    if f.dim() != 1 {
        return Err(Error::NotOneDimensional);
    }
    let axis = f.domain().axis(0);
    Ok(f.values()
        .iter()
        .enumerate()
        .map(|(k, fk)| (v.eval(axis.node(k)) - fk).abs())
        .fold(0.0, f64::max))
}

/// `K` station positions at the `(2i−1)/(2K)` quantiles of `ν`.
pub fn sample_placements(nu: &Measure1D, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one station".into()));
    }
    if !(nu.total_mass() > 0.0) {
        return Err(Error::InvalidDensity("cannot sample a zero measure".into()));
    }
    Ok((1..=k)
        .map(|i| grid_quantile(nu.grid(), nu.values(), (2 * i - 1) as f64 / (2 * k) as f64))
        .collect())
}
