//! Finite-K placement by alternating minimization.
//!
//! Each round solves the stationarity conditions of the total power for all
//! station positions jointly on the current partition, then reassigns the
//! domain to the nearest station. Nearest-station cells ignore the
//! traffic-dependent inter-cell term, so a full round can raise the cost. The
//! round is therefore used as a search direction for `p ↦ cost(p, Voronoi(p))`
//! with step halving, which keeps the recorded trace monotone and every
//! reported partition a Voronoi one.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::density::{grid_quantile, Density, DensityField, Panel};
use crate::quadrature::{AxisGrid, AxisPanel};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::power::{total_power, Cell, CellPartition, Position, PowerReport, RadioParams, TrafficVector};

#[derive(Clone, Debug, PartialEq)]
pub enum InitStrategy {
    /// Stations at the `(2i−1)/(2K)` quantiles of `f` (product of marginal
    /// quantiles in 2-D).
    Quantile,
    /// Evenly spaced layout over the domain plus seeded random jitter.
    UniformJitter,
    Explicit(Vec<Position>),
}

/// Which terms of the total power the optimizer minimizes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CostTerms {
    #[default]
    Full,
    /// Inter-cell routing cost switched off: the optimizer reduces to Lloyd's
    /// algorithm for the quantization cost.
    IntraOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Stop once no station moves by more than this distance.
    pub tolerance: f64,
    pub init: InitStrategy,
    pub seed: u64,
    /// Blend `old + damping·(new − old)`, in `(0, 1]`.
    pub damping: f64,
    pub terms: CostTerms,
    /// Finish with a compass search on the Voronoi objective.
    pub polish: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-8,
            init: InitStrategy::Quantile,
            seed: 0,
            damping: 1.0,
            terms: CostTerms::Full,
            polish: true,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance must be > 0, got {}", self.tolerance)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter(format!("damping must be in (0, 1], got {}", self.damping)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlacementSolution {
    pub positions: Vec<Position>,
    pub partition: CellPartition,
    pub traffic: TrafficVector,
    pub report: PowerReport,
    /// Objective value at the initial layout, then after every round.
    pub trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Rounds whose update direction gave no descent even after backtracking.
    pub rejected_steps: usize,
}

/// Nearest-station partition of the domain.
///
/// On an interval the cells are cut exactly at the midpoints between
/// neighbouring stations; a panel straddling a cut is split with the integrals
/// of its interpolating polynomial over each side, so the pieces add up to the
/// panel rule. In 2-D every panel goes whole to the station nearest its
/// center, ties to the lowest index.
pub fn assign_voronoi(positions: &[Position], density: &Density) -> Result<CellPartition> {
    Assigner::new(density).assign(positions)
}

enum Assigner<'a> {
    Interval { axis: &'a AxisGrid, panels: Vec<AxisPanel> },
    Panels(Vec<Panel>),
}

impl<'a> Assigner<'a> {
    fn new(density: &'a Density) -> Self {
        let domain = density.domain();
        if domain.dim() == 1 {
            let axis = domain.axis(0);
            Self::Interval { axis, panels: axis.panels() }
        } else {
            Self::Panels(domain.panels())
        }
    }

    fn panel_count(&self) -> usize {
        match self {
            Self::Interval { panels, .. } => panels.len(),
            Self::Panels(p) => p.len(),
        }
    }

    fn assign(&self, positions: &[Position]) -> Result<CellPartition> {
        check_distinct(positions)?;
        match self {
            Self::Interval { axis, panels } => Ok(split_interval(positions, axis, panels)),
            Self::Panels(panels) => {
                let labels = Execution::default().map(panels.len(), |p| nearest(positions, &panels[p].center));
                CellPartition::from_panel_labels(panels, positions.len(), labels)
            }
        }
    }
}

fn split_interval(positions: &[Position], axis: &AxisGrid, panels: &[AxisPanel]) -> CellPartition {
    let k = positions.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| positions[a].x().total_cmp(&positions[b].x()).then(a.cmp(&b)));
    let cuts: Vec<f64> = order
        .windows(2)
        .map(|w| 0.5 * (positions[w[0]].x() + positions[w[1]].x()))
        .collect();
    let h = axis.spacing();
    let mut nodes: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
    let mut labels = Vec::with_capacity(panels.len());
    for panel in panels {
        let lo = axis.node(panel.first);
        let hi = axis.node(panel.last());
        labels.push(order[cuts.partition_point(|&c| c < 0.5 * (lo + hi))]);
        // sorted stations whose segment meets the open panel
        let start = cuts.partition_point(|&c| c <= lo);
        let end = cuts.partition_point(|&c| c < hi);
        if start == end {
            let owner = &mut nodes[order[start]];
            owner.extend(panel.weights.iter().enumerate().map(|(j, w)| (panel.first + j, *w)));
            continue;
        }
        for s in start..=end {
            let u = if s == start { lo } else { cuts[s - 1] };
            let v = if s == end { hi } else { cuts[s] };
            if v > u {
                let w = partial_weights(panel.weights.len(), (u - lo) / h, (v - lo) / h, h);
                nodes[order[s]].extend(w.into_iter().enumerate().map(|(j, w)| (panel.first + j, w)));
            }
        }
    }
    CellPartition::from_parts(labels, nodes.into_iter().map(Cell::from_nodes).collect())
}

/// Integrals over `[a, b]` (local coordinates, node `j` at `j`) of the Lagrange
/// basis of an `n`-node panel. Two-point Gauss-Legendre is exact up to cubics.
fn partial_weights(n: usize, a: f64, b: f64, h: f64) -> Vec<f64> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let offset = half / 3f64.sqrt();
    (0..n)
        .map(|j| {
            [mid - offset, mid + offset]
                .iter()
                .map(|&t| {
                    (0..n)
                        .filter(|&i| i != j)
                        .map(|i| (t - i as f64) / (j as f64 - i as f64))
                        .product::<f64>()
                })
                .sum::<f64>()
                * half
                * h
        })
        .collect()
}

fn nearest(positions: &[Position], x: &Position) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in positions.iter().enumerate() {
        let d = p.dist2(x);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

fn check_distinct(positions: &[Position]) -> Result<()> {
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            if positions[i] == positions[j] {
                return Err(Error::DuplicatePositions(i, j));
            }
        }
    }
    Ok(())
}

/// Closed-form position update on a fixed partition.
///
/// With `A = σ²(2^θ−1)`, `c = 2σ²/m`, cell mass `M_i = ∫_{C_i} f` and moment
/// `S_i = ∫_{C_i} x f`, every station satisfies
/// `p_i = [A S_i + c m_i Σ_{j≠i} m_j p_j] / [A M_i + c m_i Σ_{j≠i} m_j]`,
/// a convex combination of its cell centroid and the traffic-weighted
/// barycenter of the other stations. The conditions are coupled through the
/// other stations, so they are solved jointly as one symmetric positive
/// definite system. Stations with an empty cell keep their position.
pub fn position_update(
    positions: &[Position],
    partition: &CellPartition,
    field: &DensityField,
    rp: &RadioParams,
    damping: f64,
) -> Result<Vec<Position>> {
    position_update_with(positions, partition, field, rp, damping, CostTerms::Full)
}

pub fn position_update_with(
    positions: &[Position],
    partition: &CellPartition,
    field: &DensityField,
    rp: &RadioParams,
    damping: f64,
    terms: CostTerms,
) -> Result<Vec<Position>> {
    let k = positions.len();
    let dim = field.dim();
    let domain = field.domain();
    let f = field.values();
    let mut mass = vec![0.0; k];
    let mut moment = vec![[0.0; 2]; k];
    for (i, cell) in partition.cells().iter().enumerate() {
        for &(n, w) in cell.nodes() {
            let wf = w * f[n];
            let x = domain.node(n);
            mass[i] += wf;
            for (c, m) in moment[i].iter_mut().enumerate().take(dim) {
                *m += wf * x.coord(c);
            }
        }
    }
    let traffic: Vec<f64> = mass.iter().map(|m| field.theta() * m).collect();
    let total: f64 = traffic.iter().sum();
    let a = rp.intra_coefficient();
    let coupling = match terms {
        CostTerms::Full if total > 0.0 => 2.0 * rp.sigma2() / total,
        _ => 0.0,
    };

    let active: Vec<usize> = (0..k).filter(|&i| mass[i] > 0.0).collect();
    let n = active.len();
    let mut updated = positions.to_vec();
    if n == 0 {
        return Ok(updated);
    }
    let mut lhs = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DMatrix::<f64>::zeros(n, dim);
    for (r, &i) in active.iter().enumerate() {
        lhs[(r, r)] = a * mass[i];
        for c in 0..dim {
            rhs[(r, c)] = a * moment[i][c];
        }
        for (s, &j) in active.iter().enumerate() {
            if i != j {
                let w = coupling * traffic[i] * traffic[j];
                lhs[(r, r)] += w;
                lhs[(r, s)] -= w;
            }
        }
    }
    let solution = match lhs.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InvalidParameter("singular position-update system".into()))?,
    };
    for (r, &i) in active.iter().enumerate() {
        let target: Vec<f64> = (0..dim).map(|c| solution[(r, c)]).collect();
        let old = positions[i];
        let blended: Vec<f64> = target
            .iter()
            .enumerate()
            .map(|(c, t)| old.coord(c) + damping * (t - old.coord(c)))
            .collect();
        updated[i] = Position::from_slice(&blended);
    }
    Ok(updated)
}

/// Starting layout for `k` stations.
pub fn initial_positions(density: &Density, k: usize, cfg: &OptimizerConfig) -> Result<Vec<Position>> {
    let domain = density.domain();
    let positions = match &cfg.init {
        InitStrategy::Explicit(p) => {
            if p.len() != k {
                return Err(Error::InvalidParameter(format!("{} explicit positions for K = {k}", p.len())));
            }
            if let Some(bad) = p.iter().find(|q| !domain.contains(q)) {
                return Err(Error::OutsideDomain {
                    point: bad.coords().to_vec(),
                });
            }
            p.clone()
        }
        InitStrategy::Quantile => {
            let (kx, ky) = layout(k, density.dim());
            let levels = |n: usize| -> Vec<f64> { (1..=n).map(|i| (2 * i - 1) as f64 / (2 * n) as f64).collect() };
            let qx: Vec<f64> = levels(kx)
                .into_iter()
                .map(|l| grid_quantile(domain.axis(0), &density.marginal(0), l))
                .collect();
            if density.dim() == 1 {
                qx.into_iter().map(Position::d1).collect()
            } else {
                let my = density.marginal(1);
                let qy: Vec<f64> = levels(ky).into_iter().map(|l| grid_quantile(domain.axis(1), &my, l)).collect();
                qy.iter()
                    .flat_map(|y| qx.iter().map(move |x| Position::d2(*x, *y)))
                    .take(k)
                    .collect()
            }
        }
        InitStrategy::UniformJitter => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let (kx, ky) = layout(k, density.dim());
            let mut out = Vec::with_capacity(k);
            'fill: for j in 0..ky {
                for i in 0..kx {
                    if out.len() == k {
                        break 'fill;
                    }
                    let mut c = Vec::with_capacity(density.dim());
                    for (axis_idx, (slot, count)) in [(i, kx), (j, ky)].into_iter().take(density.dim()).enumerate() {
                        let axis = domain.axis(axis_idx);
                        let width = (axis.max() - axis.min()) / count as f64;
                        let jitter: f64 = rng.random_range(-0.25..0.25);
                        c.push(axis.min() + (slot as f64 + 0.5 + jitter) * width);
                    }
                    out.push(Position::from_slice(&c));
                }
            }
            out
        }
    };
    check_distinct(&positions)?;
    Ok(positions)
}

fn layout(k: usize, dim: usize) -> (usize, usize) {
    if dim == 1 {
        (k, 1)
    } else {
        let kx = (k as f64).sqrt().ceil() as usize;
        (kx, k.div_ceil(kx))
    }
}

fn objective(report: &PowerReport, terms: CostTerms) -> f64 {
    match terms {
        CostTerms::Full => report.total,
        CostTerms::IntraOnly => report.intra_total,
    }
}

fn evaluate(
    positions: &[Position],
    partition: &CellPartition,
    field: &DensityField,
    rp: &RadioParams,
    terms: CostTerms,
) -> Result<PowerReport> {
    match terms {
        CostTerms::Full => total_power(positions, partition, field, rp),
        // Coincident stations are harmless without the routing term.
        CostTerms::IntraOnly => {
            let intra: Vec<f64> = positions
                .iter()
                .zip(partition.cells())
                .map(|(p, c)| crate::power::cell_intra_power(p, c, field, rp))
                .collect();
            let k = positions.len();
            let total = intra.iter().sum();
            Ok(PowerReport {
                intra_per_cell: intra,
                inter_per_pair: vec![vec![0.0; k]; k],
                intra_total: total,
                inter_total: 0.0,
                total,
            })
        }
    }
}

/// Alternating minimization of the total power for `k` stations.
const MAX_BACKTRACKS: usize = 6;

pub fn optimize(field: &DensityField, k: usize, rp: &RadioParams, cfg: &OptimizerConfig) -> Result<PlacementSolution> {
    cfg.validate()?;
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one station".into()));
    }
    let assigner = Assigner::new(field);
    if k > assigner.panel_count() {
        return Err(Error::InvalidParameter(format!(
            "K = {k} exceeds the {} grid panels",
            assigner.panel_count()
        )));
    }
    let mut positions = initial_positions(field, k, cfg)?;
    let mut partition = assigner.assign(&positions)?;
    let mut report = evaluate(&positions, &partition, field, rp, cfg.terms)?;
    let mut current = objective(&report, cfg.terms);
    let mut trace = vec![current];
    let mut converged = false;
    let mut iterations = 0;
    let mut rejected_steps = 0;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let target = position_update_with(&positions, &partition, field, rp, cfg.damping, cfg.terms)?;
        let target: Vec<Position> = target.iter().map(|p| clamp_to(field, p)).collect();
        let mut accepted = None;
        let mut t = 1.0;
        for _ in 0..=MAX_BACKTRACKS {
            let trial: Vec<Position> = positions
                .iter()
                .zip(&target)
                .map(|(p, q)| {
                    let c: Vec<f64> = (0..p.dim()).map(|c| p.coord(c) + t * (q.coord(c) - p.coord(c))).collect();
                    Position::from_slice(&c)
                })
                .collect();
            if check_distinct(&trial).is_ok() {
                let cells = assigner.assign(&trial)?;
                let r = evaluate(&trial, &cells, field, rp, cfg.terms)?;
                if objective(&r, cfg.terms) <= current {
                    accepted = Some((trial, cells, r));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((trial, cells, r)) = accepted else {
            // no descent along the update direction: the alternation has stalled
            rejected_steps += 1;
            converged = true;
            break;
        };
        let moved = positions
            .iter()
            .zip(&trial)
            .map(|(a, b)| a.dist(b))
            .fold(0.0, f64::max);
        positions = trial;
        partition = cells;
        report = r;
        current = objective(&report, cfg.terms);
        trace.push(current);
        if moved < cfg.tolerance {
            converged = true;
            break;
        }
    }

    if converged && cfg.polish {
        compass_search(&mut positions, &mut partition, &mut report, &mut trace, &assigner, field, rp, cfg)?;
    }

    let traffic = TrafficVector::from_partition(&partition, field);
    Ok(PlacementSolution {
        positions,
        partition,
        traffic,
        report,
        trace,
        converged,
        iterations,
        rejected_steps,
    })
}

fn clamp_to(field: &DensityField, p: &Position) -> Position {
    let c: Vec<f64> = field
        .domain()
        .axes()
        .iter()
        .enumerate()
        .map(|(k, a)| p.coord(k).clamp(a.min(), a.max()))
        .collect();
    Position::from_slice(&c)
}

/// Derivative-free descent on `p ↦ cost(p, Voronoi(p))`.
///
/// Fixed points of the alternation are not stationary for this objective
/// when cell traffic is unbalanced: moving a cell boundary shifts `m_i`, and
/// the inter-cell term responds to first order. Axis-aligned trial moves are
/// accepted only on strict decrease; the step halves after a sweep without
/// progress until it drops below the tolerance.
#[allow(clippy::too_many_arguments)]
fn compass_search(
    positions: &mut Vec<Position>,
    partition: &mut CellPartition,
    report: &mut PowerReport,
    trace: &mut Vec<f64>,
    assigner: &Assigner,
    field: &DensityField,
    rp: &RadioParams,
    cfg: &OptimizerConfig,
) -> Result<()> {
    const MAX_EVALUATIONS: usize = 20_000;
    let domain = field.domain();
    let k = positions.len();
    let widths: Vec<f64> = domain.axes().iter().map(|a| a.max() - a.min()).collect();
    let mut step = 1.0 / (8.0 * k as f64);
    let mut current = objective(report, cfg.terms);
    let mut evaluations = 0;
    while step * widths.iter().cloned().fold(f64::INFINITY, f64::min) >= cfg.tolerance && evaluations < MAX_EVALUATIONS {
        let mut improved = false;
        for i in 0..k {
            for (axis, grid) in domain.axes().iter().enumerate() {
                for sign in [1.0, -1.0] {
                    let mut trial = positions.clone();
                    let mut c = trial[i].coords().to_vec();
                    c[axis] = (c[axis] + sign * step * widths[axis]).clamp(grid.min(), grid.max());
                    trial[i] = Position::from_slice(&c);
                    if trial[i] == positions[i] || trial.iter().enumerate().any(|(j, p)| j != i && *p == trial[i]) {
                        continue;
                    }
                    evaluations += 1;
                    let cells = assigner.assign(&trial)?;
                    let r = evaluate(&trial, &cells, field, rp, cfg.terms)?;
                    let value = objective(&r, cfg.terms);
                    if value < current - 1e-14 * current.abs() {
                        *positions = trial;
                        *partition = cells;
                        *report = r;
                        current = value;
                        improved = true;
                        break;
                    }
                }
            }
        }
        if improved {
            trace.push(current);
        } else {
            step *= 0.5;
        }
    }
    Ok(())
}
