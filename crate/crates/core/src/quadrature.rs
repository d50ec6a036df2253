//! Uniform grids and composite Newton-Cotes rules on them.
//!
//! A grid with an even number of intervals is covered by Simpson panels of two
//! intervals each. An odd interval count ends with a single three-interval
//! Simpson 3/8 panel, and a single interval falls back to the trapezoid rule.
//! The panel decomposition is also the unit of cell assignment, so summing
//! panel rules over any set of panels reproduces the composite rule exactly.

use crate::error::{Error, Result};

/// Relative slack used when snapping coordinates onto grid nodes.
const SNAP: f64 = 1e-9;

/// Uniformly spaced nodes on a closed interval.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisGrid {
    min: f64,
    max: f64,
    nodes: usize,
}

/// One quadrature panel on an axis: consecutive nodes starting at `first`.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisPanel {
    pub first: usize,
    pub weights: Vec<f64>,
}

impl AxisPanel {
    pub fn last(&self) -> usize {
        self.first + self.weights.len() - 1
    }
}

impl AxisGrid {
    pub fn new(min: f64, max: f64, nodes: usize) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidDomain(format!("bounds must be finite, got [{min}, {max}]")));
        }
        if min >= max {
            return Err(Error::InvalidDomain(format!("min {min} must be below max {max}")));
        }
        if nodes < 2 {
            return Err(Error::InvalidDomain(format!("resolution must be at least 2, got {nodes}")));
        }
        Ok(Self { min, max, nodes })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn len(&self) -> usize {
        self.nodes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.nodes - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.nodes {
            self.max
        } else {
            self.min + i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.node(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        let slack = SNAP * (self.max - self.min);
        x >= self.min - slack && x <= self.max + slack
    }

    /// Interval index `i` and fraction `t` such that `x = (1-t)·x_i + t·x_{i+1}`.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let s = ((x - self.min) / self.spacing()).clamp(0.0, (self.nodes - 1) as f64);
        let i = (s.floor() as usize).min(self.nodes - 2);
        (i, s - i as f64)
    }

    /// Linear interpolation of node values at `x` (clamped to the axis).
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let (i, t) = self.locate(x);
        (1.0 - t) * values[i] + t * values[i + 1]
    }

    /// Panel decomposition of the whole axis.
    pub fn panels(&self) -> Vec<AxisPanel> {
        panels_between(0, self.nodes - 1, self.spacing())
    }

    /// Composite weights over all nodes.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.nodes];
        for p in self.panels() {
            for (k, wk) in p.weights.iter().enumerate() {
                w[p.first + k] += wk;
            }
        }
        w
    }

    /// Quadrature weights representing `∫_a^b g` as a linear functional of the
    /// node values of `g`.
    ///
    /// Nodes inside `[a, b]` use the composite rule. Partial end intervals
    /// (when `a` or `b` is not a node) are integrated with the trapezoid rule on
    /// the linear interpolant.
    pub fn weights_over(&self, a: f64, b: f64) -> Result<Vec<(usize, f64)>> {
        if !(self.contains(a) && self.contains(b)) || a > b {
            return Err(Error::RegionOutsideDomain {
                region: format!("[{a}, {b}]"),
            });
        }
        let a = a.clamp(self.min, self.max);
        let b = b.clamp(self.min, self.max);
        let h = self.spacing();
        let last = (self.nodes - 1) as f64;
        let sa = (a - self.min) / h;
        let sb = (b - self.min) / h;
        let i0 = snap_up(sa).min(last) as usize;
        let i1 = snap_down(sb).max(0.0) as usize;

        let mut out: Vec<(usize, f64)> = Vec::new();
        if i0 > i1 {
            // [a, b] lies inside a single interval.
            let (i, ta) = self.locate(a);
            let tb = ((b - self.min) / h - i as f64).clamp(0.0, 1.0);
            let len = b - a;
            let mid = 0.5 * (ta + tb);
            out.push((i, len * (1.0 - mid)));
            out.push((i + 1, len * mid));
            return Ok(out);
        }
        for p in panels_between(i0, i1, h) {
            for (k, wk) in p.weights.iter().enumerate() {
                out.push((p.first + k, *wk));
            }
        }
        let head = (i0 as f64 - sa) * h;
        if head > SNAP * h && i0 > 0 {
            // value at a interpolated between nodes i0-1 and i0
            let t = sa - (i0 - 1) as f64;
            out.push((i0 - 1, 0.5 * head * (1.0 - t)));
            out.push((i0, 0.5 * head * (1.0 + t)));
        }
        let tail = (sb - i1 as f64) * h;
        if tail > SNAP * h && i1 + 1 < self.nodes {
            let t = sb - i1 as f64;
            out.push((i1, 0.5 * tail * (2.0 - t)));
            out.push((i1 + 1, 0.5 * tail * t));
        }
        Ok(out)
    }

    /// Composite-rule integral of node values over the whole axis.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

fn snap_up(s: f64) -> f64 {
    let r = s.round();
    if (s - r).abs() < SNAP {
        r
    } else {
        s.ceil()
    }
}

fn snap_down(s: f64) -> f64 {
    let r = s.round();
    if (s - r).abs() < SNAP {
        r
    } else {
        s.floor()
    }
}

/// Panels covering nodes `i0..=i1` with spacing `h`.
fn panels_between(i0: usize, i1: usize, h: f64) -> Vec<AxisPanel> {
    let intervals = i1 - i0;
    let mut out = Vec::new();
    match intervals {
        0 => {}
        1 => out.push(AxisPanel {
            first: i0,
            weights: vec![0.5 * h, 0.5 * h],
        }),
        _ => {
            let simpson_intervals = if intervals.is_multiple_of(2) { intervals } else { intervals - 3 };
            let mut i = i0;
            while i < i0 + simpson_intervals {
                out.push(AxisPanel {
                    first: i,
                    weights: vec![h / 3.0, 4.0 * h / 3.0, h / 3.0],
                });
                i += 2;
            }
            if intervals % 2 == 1 {
                let c = 3.0 * h / 8.0;
                out.push(AxisPanel {
                    first: i,
                    weights: vec![c, 3.0 * c, 3.0 * c, c],
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate_fn(grid: &AxisGrid, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        grid.weights_over(a, b)
            .unwrap()
            .into_iter()
            .map(|(i, w)| w * f(grid.node(i)))
            .sum()
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        for n in [3, 4, 5, 8, 11, 2001] {
            let g = AxisGrid::new(-1.0, 2.0, n).unwrap();
            let got = integrate_fn(&g, -1.0, 2.0, |x| x * x * x - 2.0 * x + 1.0);
            let exact = (16.0 / 4.0 - 4.0 + 2.0) - (0.25 - 1.0 - 1.0);
            assert!((got - exact).abs() < 1e-12, "n={n}: {got} vs {exact}");
        }
    }

    #[test]
    fn trapezoid_for_two_nodes() {
        let g = AxisGrid::new(0.0, 1.0, 2).unwrap();
        assert_eq!(g.weights(), vec![0.5, 0.5]);
    }

    #[test]
    fn aligned_subinterval() {
        let g = AxisGrid::new(0.0, 1.0, 2001).unwrap();
        let got = integrate_fn(&g, 0.0, 0.5, |_| 1.0);
        assert!((got - 0.5).abs() < 1e-13, "{got}");
    }

    #[test]
    fn unaligned_subinterval_linear_exact() {
        let g = AxisGrid::new(0.0, 1.0, 11).unwrap();
        let got = integrate_fn(&g, 0.123, 0.871, |x| 3.0 * x + 1.0);
        let exact = 1.5 * (0.871f64.powi(2) - 0.123f64.powi(2)) + (0.871 - 0.123);
        assert!((got - exact).abs() < 1e-12);
        let inside = integrate_fn(&g, 0.42, 0.47, |x| 3.0 * x + 1.0);
        let exact = 1.5 * (0.47f64.powi(2) - 0.42f64.powi(2)) + 0.05;
        assert!((inside - exact).abs() < 1e-12);
    }

    #[test]
    fn region_outside_is_rejected() {
        let g = AxisGrid::new(0.0, 1.0, 11).unwrap();
        assert!(g.weights_over(-0.5, 0.5).is_err());
        assert!(g.weights_over(0.6, 0.5).is_err());
    }

    #[test]
    fn panels_tile_the_axis() {
        for n in [2, 3, 4, 6, 7, 2001] {
            let g = AxisGrid::new(0.0, 1.0, n).unwrap();
            let panels = g.panels();
            assert_eq!(panels[0].first, 0);
            assert_eq!(panels.last().unwrap().last(), n - 1);
            for w in panels.windows(2) {
                assert_eq!(w[0].last(), w[1].first);
            }
        }
    }

    #[test]
    fn invalid_grids() {
        assert!(AxisGrid::new(1.0, 1.0, 10).is_err());
        assert!(AxisGrid::new(0.0, f64::INFINITY, 10).is_err());
        assert!(AxisGrid::new(0.0, 1.0, 1).is_err());
    }
}
