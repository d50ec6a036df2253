//! Brute-force reference computations.
//!
//! Nothing here goes through the solver's quadrature, partitions or power
//! model. Densities are sampled with the midpoint rule into weighted atoms and
//! the network cost is evaluated with plain double loops.

use crate::continuum::{closed_form_lambda, optimal_bs_density, scheme_fixed_point, Measure1D, CENTERING_TOLERANCE};
use crate::density::{Density, DensityField};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::power::{CellPartition, RadioParams};

/// Largest candidate grid accepted by [`brute_force_optimize`].
pub const MAX_CANDIDATES: usize = 401;

/// Largest station count accepted by [`brute_force_optimize`].
pub const MAX_STATIONS: usize = 3;

/// A point carrying density mass, optionally tagged with a station.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub point: Vec<f64>,
    pub mass: f64,
    pub label: usize,
}

/// Midpoint-rule atoms of a 1-D density on `intervals` equal subintervals.
/// Labels are zero.
pub fn midpoint_atoms(density: &Density, intervals: usize) -> Result<Vec<Atom>> {
    if density.dim() != 1 {
        return Err(Error::NotOneDimensional);
    }
    if intervals == 0 {
        return Err(Error::InvalidParameter("need at least one interval".into()));
    }
    let axis = density.domain().axis(0);
    let (lo, hi) = (axis.min(), axis.max());
    let h = (hi - lo) / intervals as f64;
    (0..intervals)
        .map(|i| {
            let x = lo + (i as f64 + 0.5) * h;
            Ok(Atom {
                point: vec![x],
                mass: h * density.eval_1d(x)?,
                label: 0,
            })
        })
        .collect()
}

/// Atoms carrying exactly the node weights a partition uses, so a cost
/// evaluated on them is comparable with the solver to rounding.
pub fn partition_atoms(partition: &CellPartition, density: &Density) -> Vec<Atom> {
    let f = density.values();
    let domain = density.domain();
    let mut atoms = Vec::new();
    for (label, cell) in partition.cells().iter().enumerate() {
        for &(i, w) in cell.nodes() {
            atoms.push(Atom {
                point: domain.node(i).coords().to_vec(),
                mass: w * f[i],
                label,
            });
        }
    }
    atoms
}

/// Cost breakdown from [`naive_total_power`].
#[derive(Clone, Debug, PartialEq)]
pub struct NaiveCost {
    pub intra: Vec<f64>,
    pub traffic: Vec<f64>,
    pub intra_total: f64,
    pub inter_total: f64,
    pub total: f64,
}

/// Network cost of stations serving labelled atoms, straight from the
/// definition: `Σ_i Σ_{x∈C_i} σ²(2^θ−1)|x−p_i|² f(x) + Σ_{i≠j} σ² d_ij² m_i m_j/m`.
pub fn naive_total_power(atoms: &[Atom], positions: &[Vec<f64>], rp: &RadioParams) -> Result<NaiveCost> {
    let k = positions.len();
    let a = rp.sigma2() * (2f64.powf(rp.theta()) - 1.0);
    let mut intra = vec![0.0; k];
    let mut mass = vec![0.0; k];
    for atom in atoms {
        if atom.label >= k {
            return Err(Error::InvalidParameter(format!("atom label {} for {k} stations", atom.label)));
        }
        let p = &positions[atom.label];
        let mut d2 = 0.0;
        for (x, y) in atom.point.iter().zip(p) {
            d2 += (x - y) * (x - y);
        }
        intra[atom.label] += a * d2 * atom.mass;
        mass[atom.label] += atom.mass;
    }
    let traffic: Vec<f64> = mass.iter().map(|m| rp.theta() * m).collect();
    let m: f64 = traffic.iter().sum();
    let mut inter = 0.0;
    if k > 1 {
        if !(m > 0.0) {
            return Err(Error::ZeroTraffic);
        }
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let mut d2 = 0.0;
                for (x, y) in positions[i].iter().zip(&positions[j]) {
                    d2 += (x - y) * (x - y);
                }
                inter += rp.sigma2() * d2 * traffic[i] * traffic[j] / m;
            }
        }
    }
    let intra_total: f64 = intra.iter().sum();
    Ok(NaiveCost {
        intra,
        traffic,
        intra_total,
        inter_total: inter,
        total: intra_total + inter,
    })
}

/// Labels 1-D atoms by nearest station; ties go to the lowest index.
pub fn label_nearest(atoms: &mut [Atom], positions: &[f64]) {
    for atom in atoms {
        let x = atom.point[0];
        let mut best = 0;
        for (i, p) in positions.iter().enumerate() {
            if (x - p).abs() < (x - positions[best]).abs() {
                best = i;
            }
        }
        atom.label = best;
    }
}

/// Voronoi cost of 1-D stations on midpoint atoms.
pub fn voronoi_power(atoms: &[Atom], positions: &[f64], rp: &RadioParams) -> Result<NaiveCost> {
    let mut atoms = atoms.to_vec();
    label_nearest(&mut atoms, positions);
    let positions: Vec<Vec<f64>> = positions.iter().map(|p| vec![*p]).collect();
    naive_total_power(&atoms, &positions, rp)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BruteForceResult {
    /// Grid minimizer, increasing.
    pub positions: Vec<f64>,
    pub power: f64,
    pub intra: Vec<f64>,
    pub traffic: Vec<f64>,
}

/// Running sums of atom mass, first and second moments.
struct Moments {
    x: Vec<f64>,
    m: Vec<f64>,
    s: Vec<f64>,
    q: Vec<f64>,
}

impl Moments {
    fn new(atoms: &[Atom]) -> Self {
        let n = atoms.len();
        let mut out = Moments {
            x: atoms.iter().map(|a| a.point[0]).collect(),
            m: vec![0.0; n + 1],
            s: vec![0.0; n + 1],
            q: vec![0.0; n + 1],
        };
        for (i, a) in atoms.iter().enumerate() {
            let x = a.point[0];
            out.m[i + 1] = out.m[i] + a.mass;
            out.s[i + 1] = out.s[i] + a.mass * x;
            out.q[i + 1] = out.q[i] + a.mass * x * x;
        }
        out
    }

    /// Number of atoms with `x <= b`.
    fn split(&self, b: f64) -> usize {
        self.x.partition_point(|x| *x <= b)
    }

    /// `(mass, Σ mass·|x−c|²)` over atoms `lo..hi`.
    fn cell(&self, lo: usize, hi: usize, c: f64) -> (f64, f64) {
        let m = self.m[hi] - self.m[lo];
        let s = self.s[hi] - self.s[lo];
        let q = self.q[hi] - self.q[lo];
        (m, q - 2.0 * c * s + c * c * m)
    }
}

/// Grid-global minimizer of the network cost over every increasing `K`-tuple
/// of candidates, with Voronoi cells on midpoint atoms (one atom per grid
/// interval of the density). Ties go to the lexicographically smallest tuple.
pub fn brute_force_optimize(
    field: &DensityField,
    k: usize,
    rp: &RadioParams,
    candidates: &[f64],
) -> Result<BruteForceResult> {
    brute_force_optimize_with(field, k, rp, candidates, Execution::default())
}

pub fn brute_force_optimize_with(
    field: &DensityField,
    k: usize,
    rp: &RadioParams,
    candidates: &[f64],
    exec: Execution,
) -> Result<BruteForceResult> {
    if k > MAX_STATIONS {
        return Err(Error::TooManyStations(k));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one station".into()));
    }
    if candidates.len() > MAX_CANDIDATES {
        return Err(Error::InvalidParameter(format!(
            "{} candidates exceed the limit of {MAX_CANDIDATES}",
            candidates.len()
        )));
    }
    if candidates.len() < k {
        return Err(Error::InvalidParameter(format!("{} candidates for {k} stations", candidates.len())));
    }
    if candidates.iter().any(|c| !c.is_finite()) || candidates.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("candidates must be finite and strictly increasing".into()));
    }
    let atoms = midpoint_atoms(field, field.domain().axis(0).len() - 1)?;
    let moments = Moments::new(&atoms);
    let a = rp.sigma2() * (2f64.powf(rp.theta()) - 1.0);
    let theta = rp.theta();
    let total_traffic = theta * moments.m[atoms.len()];
    if k > 1 && !(total_traffic > 0.0) {
        return Err(Error::ZeroTraffic);
    }

    let cost = |tuple: &[usize]| -> f64 {
        let n = atoms.len();
        let mut bounds = [0usize; MAX_STATIONS + 1];
        bounds[tuple.len()] = n;
        for i in 1..tuple.len() {
            bounds[i] = moments.split(0.5 * (candidates[tuple[i - 1]] + candidates[tuple[i]]));
        }
        let mut intra = 0.0;
        let mut traffic = [0.0; MAX_STATIONS];
        for (i, &c) in tuple.iter().enumerate() {
            let (m, q) = moments.cell(bounds[i], bounds[i + 1], candidates[c]);
            intra += a * q;
            traffic[i] = theta * m;
        }
        let mut inter = 0.0;
        for i in 0..tuple.len() {
            for j in 0..tuple.len() {
                if i != j {
                    let d = candidates[tuple[i]] - candidates[tuple[j]];
                    inter += rp.sigma2() * d * d * traffic[i] * traffic[j] / total_traffic;
                }
            }
        }
        intra + inter
    };

    let n = candidates.len();
    let per_first = exec.map(n, |first| {
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut consider = |tuple: &[usize]| {
            let p = cost(tuple);
            if best.as_ref().is_none_or(|(bp, _)| p < *bp) {
                best = Some((p, tuple.to_vec()));
            }
        };
        match k {
            1 => consider(&[first]),
            2 => {
                for j in first + 1..n {
                    consider(&[first, j]);
                }
            }
            _ => {
                for j in first + 1..n {
                    for l in j + 1..n {
                        consider(&[first, j, l]);
                    }
                }
            }
        }
        best
    });
    let (_, tuple) = per_first
        .into_iter()
        .flatten()
        .reduce(|best, next| if next.0 < best.0 { next } else { best })
        .expect("at least one tuple");

    let positions: Vec<f64> = tuple.iter().map(|&i| candidates[i]).collect();
    let detail = voronoi_power(&atoms, &positions, rp)?;
    Ok(BruteForceResult {
        positions,
        power: detail.total,
        intra: detail.intra,
        traffic: detail.traffic,
    })
}

/// `n` equally spaced candidates spanning the density's domain.
pub fn candidate_grid(density: &Density, n: usize) -> Result<Vec<f64>> {
    if density.dim() != 1 {
        return Err(Error::NotOneDimensional);
    }
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two candidates".into()));
    }
    let axis = density.domain().axis(0);
    let h = (axis.max() - axis.min()) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i + 1 == n { axis.max() } else { axis.min() + i as f64 * h })
        .collect())
}

/// Spread of brute-force optima against the continuum prediction.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    pub k: usize,
    pub theta: f64,
    /// Traffic-weighted standard deviation of the grid-optimal positions.
    pub discrete_spread: f64,
    /// Standard deviation of the optimal placement density.
    pub continuum_spread: f64,
    /// `discrete_spread / f_spread`, absent when `f` has zero spread.
    pub ratio: Option<f64>,
    pub f_spread: f64,
    /// Dilation factor predicted by the continuum solution.
    pub lambda: f64,
    pub positions: Vec<f64>,
    pub traffic: Vec<f64>,
    pub power: f64,
}

impl ConsistencyReport {
    /// `continuum_spread / f_spread`.
    pub fn continuum_ratio(&self) -> Option<f64> {
        (self.f_spread > 0.0).then(|| self.continuum_spread / self.f_spread)
    }
}

/// Traffic-weighted standard deviation of station positions.
pub fn weighted_spread(positions: &[f64], weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return 0.0;
    }
    let mean: f64 = positions.iter().zip(weights).map(|(p, w)| p * w).sum::<f64>() / total;
    let var: f64 = positions.iter().zip(weights).map(|(p, w)| w * (p - mean).powi(2)).sum::<f64>() / total;
    var.max(0.0).sqrt()
}

/// One report row per station count. No judgment is made on the rows.
pub fn consistency_report(
    field: &DensityField,
    rp: &RadioParams,
    ks: &[usize],
    candidates: &[f64],
) -> Result<Vec<ConsistencyReport>> {
    if field.dim() != 1 {
        return Err(Error::NotOneDimensional);
    }
    if ks.len() > MAX_STATIONS {
        return Err(Error::InvalidParameter(format!("at most {MAX_STATIONS} station counts per report")));
    }
    let theta = field.theta();
    let lambda = closed_form_lambda(theta)?;
    let f_spread = field.std_dev_1d()?;
    let continuum_spread = continuum_measure(field)?.std_dev();
    ks.iter()
        .map(|&k| {
            let best = brute_force_optimize(field, k, rp, candidates)?;
            let discrete_spread = weighted_spread(&best.positions, &best.traffic);
            Ok(ConsistencyReport {
                k,
                theta,
                discrete_spread,
                continuum_spread,
                ratio: (f_spread > 0.0).then(|| discrete_spread / f_spread),
                f_spread,
                lambda,
                positions: best.positions,
                traffic: best.traffic,
                power: best.power,
            })
        })
        .collect()
}

/// Closed form for centered densities, the scheme's fixed point otherwise.
fn continuum_measure(field: &DensityField) -> Result<Measure1D> {
    if field.mean().coord(0).abs() <= CENTERING_TOLERANCE {
        return optimal_bs_density(field, field.theta());
    }
    scheme_fixed_point(field)?.normalized()
}
