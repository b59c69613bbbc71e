use nalgebra::DMatrix;

/// Dense row-major matrix of samples: one row per draw, one column per
/// coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct RowMatrix {
    cols: usize,
    values: Vec<f64>,
}

impl RowMatrix {
    pub fn new(cols: usize) -> Self {
        RowMatrix {
            cols,
            values: Vec::new(),
        }
    }

    pub fn with_capacity(rows: usize, cols: usize) -> Self {
        RowMatrix {
            cols,
            values: Vec::with_capacity(rows * cols),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(cols: usize, rows: &[R]) -> Self {
        let mut m = RowMatrix::with_capacity(rows.len(), cols);
        for r in rows {
            m.push(r.as_ref());
        }
        m
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols, "row length must match column count");
        self.values.extend_from_slice(row);
    }

    pub fn rows(&self) -> usize {
        self.values.len().checked_div(self.cols).unwrap_or(0)
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols.max(1))
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.iter_rows().map(|r| r[c]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn column_means(&self) -> Vec<f64> {
        let n = self.rows() as f64;
        let mut mean = vec![0.0; self.cols];
        for r in self.iter_rows() {
            for (m, x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Sample covariance with the `n - 1` denominator.
    pub fn covariance(&self) -> DMatrix<f64> {
        let mean = self.column_means();
        let d = self.cols;
        let mut cov = DMatrix::zeros(d, d);
        for r in self.iter_rows() {
            for a in 0..d {
                let da = r[a] - mean[a];
                for b in 0..=a {
                    cov[(a, b)] += da * (r[b] - mean[b]);
                }
            }
        }
        let denom = (self.rows() as f64 - 1.0).max(1.0);
        for a in 0..d {
            for b in 0..=a {
                cov[(a, b)] /= denom;
                cov[(b, a)] = cov[(a, b)];
            }
        }
        cov
    }
}
