//! Linear solvers for `x = A x + b` restricted to the undecided states of an
//! until query. `A` is sub-stochastic and `I - A` is non-singular once the
//! probability-0 and probability-1 states have been removed.

use super::CheckError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Systems with fewer unknowns than this are solved by dense LU.
    pub dense_limit: usize,
    /// Gauss-Seidel stops once no unknown moves by more than this.
    pub convergence: f64,
    pub max_sweeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { dense_limit: 2000, convergence: 1e-10, max_sweeps: 1_000_000 }
    }
}

/// Sparse system `x_i = sum_j a_ij x_j + b_i`, with `rows[i]` listing `(j, a_ij)`.
#[derive(Debug, Clone, Default)]
pub struct LinearSystem {
    pub rows: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
}

impl LinearSystem {
    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    pub fn solve(&self, config: &SolverConfig) -> Result<Vec<f64>, CheckError> {
        if self.len() < config.dense_limit {
            self.solve_dense()
        } else {
            self.solve_gauss_seidel(config)
        }
    }

    /// LU factorisation with partial pivoting of `I - A`.
    pub fn solve_dense(&self) -> Result<Vec<f64>, CheckError> {
        let n = self.len();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = 1.0;
            for &(j, a) in &self.rows[i] {
                m[i * n + j] -= a;
            }
        }
        let mut x = self.rhs.clone();
        for k in 0..n {
            let (pivot_row, pivot) = (k..n)
                .map(|i| (i, m[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot < 1e-300 {
                return Err(CheckError::SingularSystem);
            }
            if pivot_row != k {
                for c in 0..n {
                    m.swap(k * n + c, pivot_row * n + c);
                }
                x.swap(k, pivot_row);
            }
            let (upper, lower) = m.split_at_mut((k + 1) * n);
            let pivot_slice = &upper[k * n + k..k * n + n];
            let diag = pivot_slice[0];
            for i in k + 1..n {
                let row = &mut lower[(i - k - 1) * n + k..(i - k - 1) * n + n];
                if row[0] == 0.0 {
                    continue;
                }
                let factor = row[0] / diag;
                for (r, p) in row.iter_mut().zip(pivot_slice) {
                    *r -= factor * p;
                }
                x[i] -= factor * x[k];
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for c in k + 1..n {
                acc -= m[k * n + c] * x[c];
            }
            x[k] = acc / m[k * n + k];
        }
        Ok(x)
    }

    /// Symmetric Gauss-Seidel: forward and backward sweeps alternate, so
    /// acyclic systems converge in a couple of sweeps whatever the ordering.
    pub fn solve_gauss_seidel(&self, config: &SolverConfig) -> Result<Vec<f64>, CheckError> {
        let n = self.len();
        let mut x = vec![0.0; n];
        let update = |x: &mut Vec<f64>, i: usize| -> f64 {
            let mut diag = 0.0;
            let mut acc = self.rhs[i];
            for &(j, a) in &self.rows[i] {
                if j == i {
                    diag += a;
                } else {
                    acc += a * x[j];
                }
            }
            let new = acc / (1.0 - diag);
            let delta = (new - x[i]).abs();
            x[i] = new;
            delta
        };
        for sweep in 0..config.max_sweeps {
            let mut change: f64 = 0.0;
            if sweep % 2 == 0 {
                for i in 0..n {
                    change = change.max(update(&mut x, i));
                }
            } else {
                for i in (0..n).rev() {
                    change = change.max(update(&mut x, i));
                }
            }
            if !change.is_finite() {
                return Err(CheckError::SingularSystem);
            }
            if change < config.convergence {
                return Ok(x);
            }
        }
        Err(CheckError::NotConverged { sweeps: config.max_sweeps })
    }
}
