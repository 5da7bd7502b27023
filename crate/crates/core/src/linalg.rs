//! Small dense vector and matrix helpers.

use serde::{Deserialize, Serialize};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add_assign(acc: &mut [f64], v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += x;
    }
}

pub fn sub_assign(acc: &mut [f64], v: &[f64]) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a -= x;
    }
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `A x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), x)).collect()
    }

    /// `Aᵀ y`
    pub fn tmatvec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate() {
            axpy(yr, self.row(r), &mut out);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }

    /// Spectral norm by power iteration on `AᵀA`, stopped when the relative
    /// change of the estimate drops below `tol`.
    pub fn spectral_norm(&self, tol: f64) -> f64 {
        if self.data.iter().all(|&x| x == 0.0) {
            return 0.0;
        }
        // Deterministic start with all components excited.
        let mut v: Vec<f64> = (0..self.cols).map(|i| 1.0 + 0.1 * i as f64).collect();
        let n0 = norm(&v);
        v.iter_mut().for_each(|x| *x /= n0);
        let mut est = 0.0;
        for _ in 0..100_000 {
            let av = self.matvec(&v);
            let mut w = self.tmatvec(&av);
            let nw = norm(&w);
            if nw == 0.0 {
                return 0.0;
            }
            let next = nw.sqrt();
            w.iter_mut().for_each(|x| *x /= nw);
            v = w;
            if (next - est).abs() <= tol * next.max(1e-300) {
                est = next;
                break;
            }
            est = next;
        }
        // Rayleigh refinement: ‖Av‖ for the unit vector v.
        norm(&self.matvec(&v)).max(est)
    }
}
