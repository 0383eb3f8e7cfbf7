//! Initial phase profiles `phi0(x)`.

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialPhase {
    /// `-(x - center)^2`
    Parabola { center: f64 },
    /// `-|x - center|`
    Kink { center: f64 },
    /// `max(-x^2, -(x - alpha)^2 - delta)`
    TwoBump { alpha: f64, delta: f64 },
    /// Piecewise-linear interpolation of `(x, phi)` pairs, constant beyond
    /// the end points.
    Table { xs: Vec<f64>, phis: Vec<f64> },
}

impl InitialPhase {
    pub fn table(xs: Vec<f64>, phis: Vec<f64>) -> Result<Self> {
        if xs.len() != phis.len() || xs.len() < 2 {
            return Err(Error::Invalid(
                "initial table needs at least two (x, phi) pairs of equal length".into(),
            ));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("initial table abscissae must increase".into()));
        }
        if xs.iter().chain(&phis).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("initial table values must be finite".into()));
        }
        Ok(InitialPhase::Table { xs, phis })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            InitialPhase::Parabola { center } => -(x - center) * (x - center),
            InitialPhase::Kink { center } => -(x - center).abs(),
            InitialPhase::TwoBump { alpha, delta } => {
                (-x * x).max(-(x - alpha) * (x - alpha) - delta)
            }
            InitialPhase::Table { xs, phis } => {
                let k = xs.partition_point(|&a| a <= x);
                if k == 0 {
                    phis[0]
                } else if k == xs.len() {
                    phis[xs.len() - 1]
                } else {
                    let w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
                    phis[k - 1] + w * (phis[k] - phis[k - 1])
                }
            }
        }
    }

    /// Location of the global maximum when it is known in closed form.
    pub fn analytic_argmax(&self) -> Option<f64> {
        match self {
            InitialPhase::Parabola { center } | InitialPhase::Kink { center } => Some(*center),
            InitialPhase::TwoBump { delta, .. } if *delta > 0.0 => Some(0.0),
            _ => None,
        }
    }
}

/// `amplitude * sin(wavenumber * x)` added to the profile before
/// normalisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub amplitude: f64,
    pub wavenumber: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitSpec {
    pub phase: InitialPhase,
    pub perturbation: Option<Perturbation>,
}

impl InitSpec {
    pub fn new(phase: InitialPhase) -> Self {
        Self {
            phase,
            perturbation: None,
        }
    }

    pub fn with_perturbation(mut self, amplitude: f64, wavenumber: f64) -> Self {
        self.perturbation = Some(Perturbation {
            amplitude,
            wavenumber,
        });
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        let base = self.phase.eval(x);
        match self.perturbation {
            Some(p) => base + p.amplitude * (p.wavenumber * x).sin(),
            None => base,
        }
    }

    /// Nodal values shifted so that the maximum is exactly zero.
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        let mut phi: Vec<f64> = grid.nodes().iter().map(|&x| self.eval(x)).collect();
        let max = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for v in &mut phi {
            *v -= max;
        }
        phi
    }

    /// Trait where the initial phase peaks: the closed-form location when
    /// unperturbed and inside the grid, otherwise the leftmost maximal node.
    pub fn peak(&self, grid: &Grid) -> f64 {
        if self.perturbation.is_none() {
            if let Some(x) = self.phase.analytic_argmax() {
                if x >= grid.x_min() && x <= grid.x_max() {
                    return x;
                }
            }
        }
        let phi = self.sample(grid);
        let j = phi.iter().position(|&v| v == 0.0).unwrap_or(0);
        grid.nodes()[j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles() {
        assert_eq!(InitialPhase::Kink { center: 0.05 }.eval(0.55), -0.5);
        let tb = InitialPhase::TwoBump {
            alpha: 1.0,
            delta: 0.5,
        };
        assert_eq!(tb.eval(0.0), 0.0);
        assert_eq!(tb.eval(1.0), -0.5);
        let t = InitialPhase::table(vec![0.0, 1.0], vec![0.0, -2.0]).unwrap();
        assert_eq!(t.eval(0.25), -0.5);
        assert_eq!(t.eval(5.0), -2.0);
        assert!(InitialPhase::table(vec![1.0, 0.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn sample_is_normalised() {
        let g = Grid::new(-1.0, 1.0, 64).unwrap();
        let s = InitSpec::new(InitialPhase::Parabola { center: 0.3 }).with_perturbation(1e-3, 10.0);
        let phi = s.sample(&g);
        assert_eq!(phi.iter().copied().fold(f64::NEG_INFINITY, f64::max), 0.0);
    }
}
