//! Thomas algorithm for tridiagonal systems.

/// Solves `lower[j] u[j-1] + diag[j] u[j] + upper[j] u[j+1] = rhs[j]` in
/// place (`rhs` becomes the solution). `lower[0]` and `upper[n-1]` are
/// ignored. No pivoting: intended for diagonally dominant matrices.
pub fn solve_in_place(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64], scratch: &mut Vec<f64>) {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut beta = diag[0];
    rhs[0] /= beta;
    for j in 1..n {
        scratch[j] = upper[j - 1] / beta;
        beta = diag[j] - lower[j] * scratch[j];
        rhs[j] = (rhs[j] - lower[j] * rhs[j - 1]) / beta;
    }
    for j in (0..n - 1).rev() {
        rhs[j] -= scratch[j + 1] * rhs[j + 1];
    }
}

/// Backward-Euler step of `u_t = kappa * u_xx` with zero-flux boundaries on a
/// cell-centred grid: solves `(I - r L) u_new = u` with `r = kappa dt / dx^2`.
/// The matrix has unit column sums, so the discrete mass `sum u` is kept.
#[derive(Debug, Clone)]
pub struct NeumannHeatSolver {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    scratch: Vec<f64>,
    r: f64,
}

impl NeumannHeatSolver {
    pub fn new(n: usize, r: f64) -> Self {
        let mut s = Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            scratch: Vec::with_capacity(n),
            r: f64::NAN,
        };
        s.set_ratio(r);
        s
    }

    pub fn set_ratio(&mut self, r: f64) {
        if r == self.r {
            return;
        }
        let n = self.diag.len();
        for j in 0..n {
            let left = if j > 0 { r } else { 0.0 };
            let right = if j + 1 < n { r } else { 0.0 };
            self.lower[j] = -left;
            self.upper[j] = -right;
            self.diag[j] = 1.0 + left + right;
        }
        self.r = r;
    }

    pub fn solve(&mut self, u: &mut [f64]) {
        solve_in_place(&self.lower, &self.diag, &self.upper, u, &mut self.scratch);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        // [2 1 0; 1 3 1; 0 1 2] u = [3, 5, 3] has u = [1, 1, 1]
        let mut rhs = vec![3.0, 5.0, 3.0];
        let mut s = Vec::new();
        solve_in_place(&[0.0, 1.0, 1.0], &[2.0, 3.0, 2.0], &[1.0, 1.0, 0.0], &mut rhs, &mut s);
        for v in rhs {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn heat_step_keeps_mass_and_constants() {
        let mut h = NeumannHeatSolver::new(50, 3.7);
        let mut u: Vec<f64> = (0..50).map(|j| ((j * 7919) % 13) as f64).collect();
        let before: f64 = u.iter().sum();
        h.solve(&mut u);
        let after: f64 = u.iter().sum();
        assert!((before - after).abs() < 1e-12 * before);
        let mut c = vec![2.5; 50];
        h.solve(&mut c);
        assert!(c.iter().all(|v| (v - 2.5).abs() < 1e-14));
    }
}
