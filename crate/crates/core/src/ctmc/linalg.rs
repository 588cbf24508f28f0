//! Dense square matrices and LU with partial pivoting.
//!
//! The elimination skips rows whose entry in the pivot column is zero and
//! only updates columns up to the last nonzero of the pivot row, so banded
//! generators cost far less than `n³` while the storage stays dense.

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.n + col] = value;
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.n + col] += value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n..(row + 1) * self.n]
    }

    pub fn transpose(&self) -> Self {
        let mut t = DenseMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Row vector times matrix, `x·A`.
    pub fn left_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, xi) in x.iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singular {
    /// Elimination step at which no usable pivot was left.
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LuSolution {
    pub x: Vec<f64>,
    /// Smallest and largest pivot magnitudes, a cheap conditioning hint.
    pub min_pivot: f64,
    pub max_pivot: f64,
}

impl LuSolution {
    pub fn pivot_ratio(&self) -> f64 {
        self.max_pivot / self.min_pivot
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
///
/// A pivot below `pivot_tol · max|A|` is treated as a singular matrix.
pub fn lu_solve(mut a: DenseMatrix, mut b: Vec<f64>, pivot_tol: f64) -> Result<LuSolution, Singular> {
    let n = a.dim();
    assert_eq!(b.len(), n, "right-hand side length");
    let threshold = pivot_tol * a.max_abs();

    // Last nonzero column per row; fill-in only ever extends it.
    let mut row_end: Vec<usize> = (0..n)
        .map(|i| a.row(i).iter().rposition(|v| *v != 0.0).unwrap_or(0))
        .collect();
    let mut min_pivot = f64::INFINITY;
    let mut max_pivot = 0.0f64;

    for k in 0..n {
        let mut pivot_row = k;
        let mut best = a.get(k, k).abs();
        for i in k + 1..n {
            let v = a.get(i, k).abs();
            if v > best {
                best = v;
                pivot_row = i;
            }
        }
        if !(best > threshold) {
            return Err(Singular { column: k });
        }
        min_pivot = min_pivot.min(best);
        max_pivot = max_pivot.max(best);
        if pivot_row != k {
            for j in k..n {
                a.data.swap(k * n + j, pivot_row * n + j);
            }
            b.swap(k, pivot_row);
            row_end.swap(k, pivot_row);
        }

        let pivot = a.get(k, k);
        let end = row_end[k];
        let (upper, lower) = a.data.split_at_mut((k + 1) * n);
        let pivot_slice = &upper[k * n + k + 1..=k * n + end.max(k)];
        for i in k + 1..n {
            let row = &mut lower[(i - k - 1) * n..(i - k) * n];
            let factor = row[k];
            if factor == 0.0 {
                continue;
            }
            let factor = factor / pivot;
            row[k] = 0.0;
            for (dst, src) in row[k + 1..=end.max(k)].iter_mut().zip(pivot_slice) {
                *dst -= factor * src;
            }
            b[i] -= factor * b[k];
            row_end[i] = row_end[i].max(end);
        }
    }

    for k in (0..n).rev() {
        let row = a.row(k);
        let mut acc = b[k];
        for j in k + 1..=row_end[k].max(k) {
            acc -= row[j] * b[j];
        }
        b[k] = acc / row[k];
    }

    Ok(LuSolution {
        x: b,
        min_pivot,
        max_pivot,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_rows(rows: &[&[f64]]) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(rows.len());
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                m.set(i, j, *v);
            }
        }
        m
    }

    #[test]
    fn solves_with_pivoting() {
        // Leading zero forces a row swap.
        let a = from_rows(&[&[0.0, 2.0, 1.0], &[1.0, 1.0, 0.0], &[3.0, 0.0, 1.0]]);
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| a.get(i, j) * x_true[j]).sum())
            .collect();
        let sol = lu_solve(a, b, 1e-14).unwrap();
        for (x, t) in sol.x.iter().zip(x_true) {
            assert!((x - t).abs() < 1e-14);
        }
    }

    #[test]
    fn detects_singularity() {
        let a = from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(lu_solve(a, vec![1.0, 2.0], 1e-13).is_err());
    }

    #[test]
    fn matches_naive_elimination_on_random_banded_systems() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [5usize, 17, 40] {
            let mut a = DenseMatrix::zeros(n);
            for i in 0..n {
                for j in i.saturating_sub(3)..(i + 4).min(n) {
                    a.set(i, j, rng.random_range(-1.0..1.0));
                }
            }
            // A full last row, as in the normalized balance equations.
            for j in 0..n {
                a.set(n - 1, j, 1.0);
            }
            let x_true: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| a.get(i, j) * x_true[j]).sum())
                .collect();
            let sol = lu_solve(a, b, 1e-14).unwrap();
            for (x, t) in sol.x.iter().zip(&x_true) {
                assert!((x - t).abs() < 1e-9, "n = {n}");
            }
        }
    }
}
