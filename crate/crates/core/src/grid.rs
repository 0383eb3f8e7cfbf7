//! Uniform cell-centred 1-D grid on a truncated trait interval.

use crate::error::{Error, Result};

pub const MIN_CELLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryPolicy {
    NoFlux,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
    dx: f64,
    nodes: Vec<f64>,
    pub boundary: BoundaryPolicy,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::Invalid(format!(
                "grid bounds must be finite with x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n_cells < MIN_CELLS {
            return Err(Error::Invalid(format!(
                "grid needs at least {MIN_CELLS} cells, got {n_cells}"
            )));
        }
        let dx = (x_max - x_min) / n_cells as f64;
        let nodes = (0..n_cells)
            .map(|j| x_min + (j as f64 + 0.5) * dx)
            .collect();
        Ok(Self {
            x_min,
            x_max,
            n_cells,
            dx,
            nodes,
            boundary: BoundaryPolicy::NoFlux,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Cell-centred quadrature over `[x_min, x_max]`: every cell carries
    /// weight `dx`. Exact for affine integrands and consistent with the
    /// discrete no-flux Laplacian (mass is conserved exactly).
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_cells);
        values.iter().sum::<f64>() * self.dx
    }

    pub fn integrate_with<F: Fn(usize, f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .enumerate()
            .map(|(j, &x)| f(j, x))
            .sum::<f64>()
            * self.dx
    }

    /// Nearest node index to `x` (clamped to the grid).
    pub fn nearest(&self, x: f64) -> usize {
        let j = ((x - self.x_min) / self.dx - 0.5).round();
        j.clamp(0.0, (self.n_cells - 1) as f64) as usize
    }

    pub fn same_layout(&self, other: &Grid) -> bool {
        self.n_cells == other.n_cells && self.x_min == other.x_min && self.x_max == other.x_max
    }
}

/// Nodes attaining the maximum of a nodal field within a tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgmaxSet {
    pub left: usize,
    pub right: usize,
    pub nodes: Vec<usize>,
    pub max: f64,
}

/// Collects every node with `values[j] >= max - tol`.
pub fn argmax_set(values: &[f64], tol: f64) -> ArgmaxSet {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let nodes: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= max - tol)
        .map(|(j, _)| j)
        .collect();
    ArgmaxSet {
        left: nodes[0],
        right: *nodes.last().unwrap(),
        nodes,
        max,
    }
}

/// `max_j |v[j+1] - v[j]| / dx`
pub fn discrete_lipschitz(values: &[f64], dx: f64) -> f64 {
    values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max)
        / dx
}

/// Minimum interior second difference `(v[j+1] - 2 v[j] + v[j-1]) / dx^2`.
pub fn min_second_difference(values: &[f64], dx: f64) -> f64 {
    values
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]) / (dx * dx))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_centres() {
        let g = Grid::new(0.0, 1.0, 20).unwrap();
        assert_eq!(g.dx(), 0.05);
        assert!((g.nodes()[0] - 0.025).abs() < 1e-15);
        assert!((g.nodes()[19] - 0.975).abs() < 1e-15);
        assert_eq!(g.nearest(0.5), 10);
        assert_eq!(g.nearest(-3.0), 0);
    }

    #[test]
    fn rejects_small_or_inverted() {
        assert!(Grid::new(0.0, 1.0, 15).is_err());
        assert!(Grid::new(1.0, 0.0, 32).is_err());
        assert!(Grid::new(0.0, f64::INFINITY, 32).is_err());
    }

    #[test]
    fn quadrature_exact_on_affine() {
        let g = Grid::new(0.0, 1.0, 64).unwrap();
        let c = vec![0.7; 64];
        assert!((g.integrate(&c) - 0.7).abs() < 1e-14);
        let lin: Vec<f64> = g.nodes().to_vec();
        assert!((g.integrate(&lin) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn argmax_reports_extremes() {
        let v = [0.0, 1.0, 0.5, 1.0, 0.2];
        let a = argmax_set(&v, 1e-12);
        assert_eq!((a.left, a.right), (1, 3));
        assert_eq!(a.nodes, vec![1, 3]);
    }
}
