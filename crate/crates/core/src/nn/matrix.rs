//! Dense row-major matrix over f64, sized for desk-scale networks.

use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    /// Uniform init in `[-r, r]` with `r = 1/sqrt(cols)` (fan-in scaling).
    pub fn uniform_init<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let r = 1.0 / (cols.max(1) as f64).sqrt();
        let data = (0..rows * cols).map(|_| rng.gen_range(-r..=r)).collect();
        Matrix { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `out += self · x`
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for r in 0..self.rows {
            let row = self.row(r);
            let mut acc = 0.0;
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            out[r] += acc;
        }
    }

    /// `out += selfᵀ · y`
    pub fn matvec_t_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for r in 0..self.rows {
            let yr = y[r];
            if yr == 0.0 {
                continue;
            }
            let row = self.row(r);
            for (o, w) in out.iter_mut().zip(row) {
                *o += yr * w;
            }
        }
    }

    /// Column `c` added into `out` (the one-hot fast path for `self · e_c`).
    pub fn col_into(&self, c: usize, out: &mut [f64]) {
        debug_assert!(c < self.cols);
        for r in 0..self.rows {
            out[r] += self.data[r * self.cols + c];
        }
    }

    /// Rank-1 update `self += y ⊗ x`.
    pub fn add_outer(&mut self, y: &[f64], x: &[f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for r in 0..self.rows {
            let yr = y[r];
            if yr == 0.0 {
                continue;
            }
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (w, xi) in row.iter_mut().zip(x) {
                *w += yr * xi;
            }
        }
    }

    /// Column update `self[:, c] += y` (rank-1 update against a one-hot x).
    pub fn add_col(&mut self, c: usize, y: &[f64]) {
        debug_assert_eq!(y.len(), self.rows);
        for r in 0..self.rows {
            self.data[r * self.cols + c] += y[r];
        }
    }
}
