//! Packed lower-triangular Cholesky factor with O(n²) row append and O(n²)
//! oldest-row removal, the primitives behind the incremental GP updates.

use serde::{Deserialize, Serialize};

/// Lower-triangular matrix stored packed row-major: row `i` holds `i + 1`
/// entries, so appending a row is a plain extend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct PackedLower {
    n: usize,
    data: Vec<f64>,
}

impl PackedLower {
    pub fn new() -> Self {
        PackedLower { n: 0, data: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn row_start(i: usize) -> usize {
        i * (i + 1) / 2
    }

    /// Row `i` as a slice of its `i + 1` stored entries.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let s = Self::row_start(i);
        &self.data[s..s + i + 1]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(j <= i);
        self.data[Self::row_start(i) + j]
    }

    /// In-place Cholesky factorization of a dense symmetric positive-definite
    /// matrix given as rows. Returns `None` if a pivot is not positive.
    pub fn factor(matrix: &[Vec<f64>]) -> Option<PackedLower> {
        let n = matrix.len();
        let mut l = PackedLower {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        };
        for i in 0..n {
            for j in 0..=i {
                let mut sum = matrix[i][j];
                // dot of rows i and j up to j
                let (ri, rj) = (Self::row_start(i), Self::row_start(j));
                for k in 0..j {
                    sum -= l.data[ri + k] * l.data[rj + k];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return None;
                    }
                    l.data[ri + j] = sum.sqrt();
                } else {
                    l.data[ri + j] = sum / l.data[rj + j];
                }
            }
        }
        Some(l)
    }

    /// Append one row to the factor: given the new column `k` of the matrix
    /// (covariances against the existing rows) and the new diagonal entry,
    /// solves `L c = k`, computes the new pivot and pushes row `[c, d]`.
    /// Returns `false` (factor unchanged) if the pivot is not positive.
    pub fn append_row(&mut self, col: &[f64], diag: f64) -> bool {
        debug_assert_eq!(col.len(), self.n);
        let c = self.solve_lower(col);
        let d2 = diag - c.iter().map(|v| v * v).sum::<f64>();
        if d2 <= 0.0 || !d2.is_finite() {
            return false;
        }
        self.data.extend_from_slice(&c);
        self.data.push(d2.sqrt());
        self.n += 1;
        true
    }

    /// Remove row/column 0 of the underlying matrix.
    ///
    /// With `L = [[l00, 0], [l10, L11]]`, the trailing block of the matrix is
    /// `l10·l10ᵀ + L11·L11ᵀ`, so the new factor is the rank-1 *update* of
    /// `L11` by `l10` — an always-successful O(n²) pass.
    pub fn remove_first(&mut self) {
        if self.n == 0 {
            return;
        }
        let n1 = self.n - 1;
        // first column (below the pivot) and the trailing factor
        let mut v: Vec<f64> = (1..self.n).map(|i| self.get(i, 0)).collect();
        let mut sub = PackedLower {
            n: n1,
            data: Vec::with_capacity(n1 * (n1 + 1) / 2),
        };
        for i in 1..self.n {
            let s = Self::row_start(i);
            sub.data.extend_from_slice(&self.data[s + 1..s + i + 1]);
        }
        // rank-1 update: sub := chol(sub·subᵀ + v·vᵀ)
        for k in 0..n1 {
            let rk = Self::row_start(k);
            let lkk = sub.data[rk + k];
            let r = (lkk * lkk + v[k] * v[k]).sqrt();
            let c = r / lkk;
            let s = v[k] / lkk;
            sub.data[rk + k] = r;
            for i in k + 1..n1 {
                let ri = Self::row_start(i);
                sub.data[ri + k] = (sub.data[ri + k] + s * v[i]) / c;
                v[i] = c * v[i] - s * sub.data[ri + k];
            }
        }
        *self = sub;
    }

    /// Forward substitution: solve `L x = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.n);
        let mut x = vec![0.0; self.n];
        for i in 0..self.n {
            let row = self.row(i);
            let mut sum = b[i];
            for k in 0..i {
                sum -= row[k] * x[k];
            }
            x[i] = sum / row[i];
        }
        x
    }

    /// Back substitution: solve `Lᵀ x = b`.
    pub fn solve_lower_transpose(&self, b: &[f64]) -> Vec<f64> {
        debug_assert_eq!(b.len(), self.n);
        let mut x = b.to_vec();
        for i in (0..self.n).rev() {
            let row = self.row(i);
            x[i] /= row[i];
            let xi = x[i];
            for k in 0..i {
                x[k] -= row[k] * xi;
            }
        }
        x
    }

    /// Reconstruct `L·Lᵀ` (tests and diagnostics).
    pub fn reconstruct(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let p = i.min(j);
                let (ri, rj) = (Self::row_start(i), Self::row_start(j));
                let mut sum = 0.0;
                for k in 0..=p {
                    sum += self.data[ri + k] * self.data[rj + k];
                }
                m[i][j] = sum;
            }
        }
        m
    }
}
