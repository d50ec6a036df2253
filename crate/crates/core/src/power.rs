//! Network power model under free-space path loss.
//!
//! Channel gain between two points is `h = d⁻²`. The terminal link inverts
//! Shannon capacity exactly: serving throughput `θ` over gain `h` costs
//! `σ²(2^θ − 1)/h`. The station-to-station links use the linearized capacity
//! `log(1 + SNR) ≈ SNR`, so routing traffic `m_i m_j / m` from station `i` to
//! station `j` costs `σ² d_ij² m_i m_j / m`. The two links are deliberately
//! modelled differently.
//!
//! Total power is the intra-cell sum over cells plus the inter-cell sum over
//! ordered pairs `i ≠ j`; every unordered pair is counted twice.

use crate::density::{Density, DensityField, Domain, Panel, Region};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Point in a 1-D or 2-D domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Position {
    coords: [f64; 2],
    dim: u8,
}

impl Position {
    pub fn d1(x: f64) -> Self {
        Self { coords: [x, 0.0], dim: 1 }
    }

    pub fn d2(x: f64, y: f64) -> Self {
        Self { coords: [x, y], dim: 2 }
    }

    pub fn from_slice(c: &[f64]) -> Self {
        match c {
            [x] => Self::d1(*x),
            [x, y] => Self::d2(*x, *y),
            _ => panic!("positions have 1 or 2 coordinates, got {}", c.len()),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn coord(&self, k: usize) -> f64 {
        self.coords[k]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim()]
    }

    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }

    pub fn dist2(&self, other: &Position) -> f64 {
        let dx = self.coords[0] - other.coords[0];
        let dy = self.coords[1] - other.coords[1];
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Position) -> f64 {
        self.dist2(other).sqrt()
    }
}

/// Noise power and constant throughput.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadioParams {
    sigma2: f64,
    theta: f64,
}

impl RadioParams {
    pub fn new(sigma2: f64, theta: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma2 must be > 0, got {sigma2}")));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("theta must be > 0, got {theta}")));
        }
        Ok(Self { sigma2, theta })
    }

    /// Parameters matching the throughput carried by `field`.
    pub fn for_field(sigma2: f64, field: &DensityField) -> Result<Self> {
        Self::new(sigma2, field.theta())
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `2^θ − 1`, the SNR needed for throughput `θ` (base-2 logarithm).
    pub fn snr_requirement(&self) -> f64 {
        snr_requirement(self.theta)
    }

    /// `σ²(2^θ − 1)`: power per unit terminal mass per unit squared distance.
    pub fn intra_coefficient(&self) -> f64 {
        self.sigma2 * self.snr_requirement()
    }
}

/// `2^θ − 1` evaluated without cancellation for small `θ`.
pub fn snr_requirement(theta: f64) -> f64 {
    (theta * std::f64::consts::LN_2).exp_m1()
}

/// Free-space channel gain `‖a − b‖⁻²`.
pub fn channel_gain(a: &Position, b: &Position) -> Result<f64> {
    let d2 = a.dist2(b);
    if d2 == 0.0 {
        return Err(Error::SingularGain);
    }
    Ok(1.0 / d2)
}

/// Transmit power per unit terminal mass for a terminal at `p` served by `bs`.
pub fn intra_power_at(bs: &Position, p: &Position, rp: &RadioParams) -> f64 {
    rp.intra_coefficient() * bs.dist2(p)
}

/// Quadrature rule restricted to one cell: `(node index, weight)` pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Cell {
    nodes: Vec<(usize, f64)>,
}

impl Cell {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_nodes(nodes: Vec<(usize, f64)>) -> Self {
        Self { nodes }
    }

    pub fn from_region(domain: &Domain, region: &Region) -> Result<Self> {
        Ok(Self {
            nodes: domain.region_weights(region)?,
        })
    }

    pub fn whole(domain: &Domain) -> Self {
        Self {
            nodes: domain.weights().into_iter().enumerate().collect(),
        }
    }

    pub fn nodes(&self) -> &[(usize, f64)] {
        &self.nodes
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_cell f`.
    pub fn mass(&self, density: &Density) -> f64 {
        let f = density.values();
        self.nodes.iter().map(|&(i, w)| w * f[i]).sum()
    }
}

/// Assignment of domain panels to stations.
#[derive(Clone, Debug, PartialEq)]
pub struct CellPartition {
    labels: Vec<usize>,
    cells: Vec<Cell>,
}

impl CellPartition {
    /// Partition from a station label for every panel of `domain`.
    pub fn from_labels(domain: &Domain, k: usize, labels: Vec<usize>) -> Result<Self> {
        Self::from_panel_labels(&domain.panels(), k, labels)
    }

    pub(crate) fn from_panel_labels(panels: &[Panel], k: usize, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != panels.len() {
            return Err(Error::InvalidParameter(format!(
                "{} labels for {} panels",
                labels.len(),
                panels.len()
            )));
        }
        let mut cells = vec![Cell::empty(); k];
        for (panel, &s) in panels.iter().zip(&labels) {
            if s >= k {
                return Err(Error::InvalidParameter(format!("label {s} out of range for {k} stations")));
            }
            cells[s].nodes.extend_from_slice(&panel.nodes);
        }
        Ok(Self { labels, cells })
    }

    pub(crate) fn from_parts(labels: Vec<usize>, cells: Vec<Cell>) -> Self {
        Self { labels, cells }
    }

    /// Partition from explicit cells (they must be disjoint; not checked).
    pub fn from_cells(cells: Vec<Cell>) -> Self {
        Self {
            labels: Vec::new(),
            cells,
        }
    }

    pub fn stations(&self) -> usize {
        self.cells.len()
    }

    pub fn cell(&self, i: usize) -> &Cell {
        &self.cells[i]
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Station label of each panel (empty when built from explicit cells).
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Reorders stations: new station `i` is old station `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut inverse = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        Self {
            labels: self.labels.iter().map(|&l| inverse[l]).collect(),
            cells: perm.iter().map(|&old| self.cells[old].clone()).collect(),
        }
    }
}

/// Per-station traffic `m_i = θ ∫_{C_i} f` and total `m = Σ m_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrafficVector {
    pub per_station: Vec<f64>,
    pub total: f64,
}

impl TrafficVector {
    pub fn from_partition(partition: &CellPartition, field: &DensityField) -> Self {
        let per_station: Vec<f64> = partition.cells().iter().map(|c| cell_traffic(c, field)).collect();
        let total = per_station.iter().sum();
        Self { per_station, total }
    }
}

/// Power breakdown of a placement.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerReport {
    pub intra_per_cell: Vec<f64>,
    /// Ordered-pair powers `P_ij`, zero on the diagonal.
    pub inter_per_pair: Vec<Vec<f64>>,
    pub intra_total: f64,
    pub inter_total: f64,
    pub total: f64,
}

/// Intra-cell power `∫_cell σ²(2^θ−1)‖x − bs‖² f(x) dx`.
pub fn cell_intra_power(bs: &Position, cell: &Cell, density: &Density, rp: &RadioParams) -> f64 {
    let f = density.values();
    let domain = density.domain();
    cell.nodes()
        .iter()
        .map(|&(i, w)| w * f[i] * intra_power_at(bs, &domain.node(i), rp))
        .sum()
}

/// Traffic `θ ∫_cell f` concentrated at the cell's station.
pub fn cell_traffic(cell: &Cell, field: &DensityField) -> f64 {
    field.theta() * cell.mass(field)
}

/// Inter-cell power `σ² d_ij² m_i m_j / m` between two stations.
pub fn inter_power(m_i: f64, m_j: f64, m: f64, d_ij: f64, rp: &RadioParams) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::ZeroTraffic);
    }
    if !(d_ij >= 0.0) {
        return Err(Error::InvalidParameter(format!("distance must be >= 0, got {d_ij}")));
    }
    Ok(rp.sigma2() * d_ij * d_ij * m_i * m_j / m)
}

/// Total network power of a placement.
pub fn total_power(
    positions: &[Position],
    partition: &CellPartition,
    field: &DensityField,
    rp: &RadioParams,
) -> Result<PowerReport> {
    total_power_with(positions, partition, field, rp, Execution::default())
}

pub fn total_power_with(
    positions: &[Position],
    partition: &CellPartition,
    field: &DensityField,
    rp: &RadioParams,
    exec: Execution,
) -> Result<PowerReport> {
    let k = positions.len();
    if partition.stations() != k {
        return Err(Error::InvalidParameter(format!(
            "{} cells for {k} stations",
            partition.stations()
        )));
    }
    if let Some(p) = positions.iter().find(|p| p.dim() != field.dim()) {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            got: p.dim(),
        });
    }
    let intra_per_cell = exec.map(k, |i| cell_intra_power(&positions[i], partition.cell(i), field, rp));
    let traffic = TrafficVector::from_partition(partition, field);
    let mut inter_per_pair = vec![vec![0.0; k]; k];
    if k > 1 {
        if !(traffic.total > 0.0) {
            return Err(Error::ZeroTraffic);
        }
        for i in 0..k {
            for j in (i + 1)..k {
                let (mi, mj) = (traffic.per_station[i], traffic.per_station[j]);
                if mi == 0.0 || mj == 0.0 {
                    continue;
                }
                channel_gain(&positions[i], &positions[j])?;
                let p = inter_power(mi, mj, traffic.total, positions[i].dist(&positions[j]), rp)?;
                inter_per_pair[i][j] = p;
                inter_per_pair[j][i] = p;
            }
        }
    }
    let intra_total: f64 = intra_per_cell.iter().sum();
    let inter_total: f64 = inter_per_pair.iter().flatten().sum();
    Ok(PowerReport {
        intra_per_cell,
        inter_per_pair,
        intra_total,
        inter_total,
        total: intra_total + inter_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{Density, Domain, DEFAULT_RESOLUTION_1D};

    fn uniform_unit(theta: f64) -> DensityField {
        let d = Density::uniform(Domain::interval(0.0, 1.0, DEFAULT_RESOLUTION_1D).unwrap()).unwrap();
        DensityField::new(d, theta).unwrap()
    }

    #[test]
    fn gain() {
        let o = Position::d1(0.0);
        assert_eq!(channel_gain(&o, &Position::d1(1.0)).unwrap(), 1.0);
        assert_eq!(channel_gain(&o, &Position::d1(0.5)).unwrap(), 4.0);
        assert_eq!(channel_gain(&o, &o), Err(Error::SingularGain));
    }

    #[test]
    fn intra_point_power() {
        let o = Position::d1(0.0);
        let rp = RadioParams::new(1.0, 1.0).unwrap();
        assert!((intra_power_at(&o, &Position::d1(2.0), &rp) - 4.0).abs() < 1e-15);
        assert_eq!(intra_power_at(&o, &o, &rp), 0.0);
        let rp = RadioParams::new(2.0, 2.0).unwrap();
        assert!((intra_power_at(&o, &Position::d1(1.0), &rp) - 6.0).abs() < 1e-14);
        let tiny = RadioParams::new(1.0, 1e-12).unwrap();
        assert!(intra_power_at(&o, &Position::d1(3.0), &tiny) < 1e-10);
    }

    #[test]
    fn invalid_params() {
        assert!(RadioParams::new(0.0, 1.0).is_err());
        assert!(RadioParams::new(1.0, 0.0).is_err());
        assert!(RadioParams::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn intra_cell_power_uniform() {
        let field = uniform_unit(1.0);
        let rp = RadioParams::new(1.0, 1.0).unwrap();
        let cell = Cell::whole(field.domain());
        let p = cell_intra_power(&Position::d1(0.5), &cell, &field, &rp);
        assert!((p - 1.0 / 12.0).abs() < 1e-12);
        assert_eq!(cell_intra_power(&Position::d1(0.5), &Cell::empty(), &field, &rp), 0.0);
    }

    #[test]
    fn intra_cell_power_zero_density() {
        let d = Density::from_grid(Domain::interval(0.0, 2.0, 201).unwrap(), (0..201).map(|i| if i > 100 { 1.0 } else { 0.0 }).collect()).unwrap();
        let field = DensityField::new(d, 1.0).unwrap();
        let rp = RadioParams::new(1.0, 1.0).unwrap();
        let cell = Cell::from_region(field.domain(), &Region::Interval(0.0, 0.9)).unwrap();
        assert_eq!(cell_intra_power(&Position::d1(0.3), &cell, &field, &rp), 0.0);
    }

    #[test]
    fn traffic() {
        let field = uniform_unit(2.0);
        let half = Cell::from_region(field.domain(), &Region::Interval(0.0, 0.5)).unwrap();
        assert!((cell_traffic(&half, &field) - 1.0).abs() < 1e-12);
        assert!((cell_traffic(&Cell::whole(field.domain()), &field) - 2.0).abs() < 1e-12);
        let n = DensityField::new(Density::normal_1d(0.0, 1.0, DEFAULT_RESOLUTION_1D).unwrap(), 1.0).unwrap();
        let c = Cell::from_region(n.domain(), &Region::Interval(-1.0, 1.0)).unwrap();
        assert!((cell_traffic(&c, &n) - 0.682_689_5).abs() < 1e-7);
    }

    #[test]
    fn inter_power_examples() {
        let rp = RadioParams::new(1.0, 1.0).unwrap();
        assert!((inter_power(0.5, 0.5, 1.0, 0.5, &rp).unwrap() - 0.0625).abs() < 1e-15);
        assert_eq!(inter_power(0.0, 0.5, 1.0, 0.5, &rp).unwrap(), 0.0);
        assert_eq!(
            inter_power(0.3, 0.7, 1.0, 0.2, &rp).unwrap(),
            inter_power(0.7, 0.3, 1.0, 0.2, &rp).unwrap()
        );
        assert_eq!(inter_power(0.3, 0.7, 0.0, 0.2, &rp), Err(Error::ZeroTraffic));
    }

    fn two_cells(field: &DensityField) -> CellPartition {
        CellPartition::from_cells(vec![
            Cell::from_region(field.domain(), &Region::Interval(0.0, 0.5)).unwrap(),
            Cell::from_region(field.domain(), &Region::Interval(0.5, 1.0)).unwrap(),
        ])
    }

    #[test]
    fn total_power_two_stations() {
        let field = uniform_unit(1.0);
        let rp = RadioParams::new(1.0, 1.0).unwrap();
        let pos = [Position::d1(0.25), Position::d1(0.75)];
        let r = total_power(&pos, &two_cells(&field), &field, &rp).unwrap();
        // 2·∫_0^½ (x−¼)² dx = 1/48; inter = 2 · 0.5·0.5·0.25 / 1
        assert!((r.intra_total - 1.0 / 48.0).abs() < 1e-12);
        assert!((r.inter_total - 0.125).abs() < 1e-12);
        assert!((r.total - 0.145_833_333_333_333_3).abs() < 1e-12);
        assert_eq!(r.inter_per_pair[0][1], r.inter_per_pair[1][0]);
        assert_eq!(r.inter_per_pair[0][0], 0.0);
    }

    #[test]
    fn total_power_single_station() {
        let field = uniform_unit(1.0);
        let rp = RadioParams::new(1.0, 1.0).unwrap();
        let part = CellPartition::from_cells(vec![Cell::whole(field.domain())]);
        let r = total_power(&[Position::d1(0.5)], &part, &field, &rp).unwrap();
        assert_eq!(r.inter_total, 0.0);
        assert_eq!(r.total, r.intra_total);
    }

    #[test]
    fn doubling_noise_doubles_report() {
        let field = uniform_unit(1.0);
        let pos = [Position::d1(0.2), Position::d1(0.7)];
        let part = two_cells(&field);
        let a = total_power(&pos, &part, &field, &RadioParams::new(1.0, 1.0).unwrap()).unwrap();
        let b = total_power(&pos, &part, &field, &RadioParams::new(2.0, 1.0).unwrap()).unwrap();
        assert!((b.total - 2.0 * a.total).abs() < 1e-14);
        assert!((b.inter_total - 2.0 * a.inter_total).abs() < 1e-14);
        for (x, y) in a.intra_per_cell.iter().zip(&b.intra_per_cell) {
            assert!((y - 2.0 * x).abs() < 1e-14);
        }
    }

    #[test]
    fn coincident_stations_are_singular() {
        let field = uniform_unit(1.0);
        let rp = RadioParams::new(1.0, 1.0).unwrap();
        let pos = [Position::d1(0.5), Position::d1(0.5)];
        assert_eq!(total_power(&pos, &two_cells(&field), &field, &rp), Err(Error::SingularGain));
    }

    #[test]
    fn centroid_minimizes_cell_power() {
        use rand::{Rng, SeedableRng};
        let field = uniform_unit(1.0);
        let rp = RadioParams::new(1.0, 1.0).unwrap();
        let cell = Cell::from_region(field.domain(), &Region::Interval(0.2, 0.6)).unwrap();
        let best = cell_intra_power(&Position::d1(0.4), &cell, &field, &rp);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let alt = Position::d1(rng.random_range(0.0..1.0));
            assert!(cell_intra_power(&alt, &cell, &field, &rp) >= best);
        }
    }
}
