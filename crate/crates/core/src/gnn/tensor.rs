//! Row-major 64-bit dense matrices and the handful of products training
//! needs. Accumulation order is fixed (k ascending per output row) so results
//! are bitwise reproducible.

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor2 {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self (m x k) . b (k x n)`.
    pub fn matmul(&self, b: &Tensor2) -> Tensor2 {
        assert_eq!(self.cols, b.rows, "matmul shape mismatch");
        let mut out = Tensor2::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = out.row_mut(i);
            for (k, &a) in a_row.iter().enumerate() {
                let b_row = b.row(k);
                for (o, &bv) in out_row.iter_mut().zip(b_row) {
                    *o += a * bv;
                }
            }
        }
        out
    }

    /// `a^T (k x m) . b (k x n)` without materializing the transpose.
    pub fn at_b(a: &Tensor2, b: &Tensor2) -> Tensor2 {
        assert_eq!(a.rows, b.rows, "at_b shape mismatch");
        let mut out = Tensor2::zeros(a.cols, b.cols);
        for k in 0..a.rows {
            let a_row = a.row(k);
            let b_row = b.row(k);
            for (i, &av) in a_row.iter().enumerate() {
                let out_row = out.row_mut(i);
                for (o, &bv) in out_row.iter_mut().zip(b_row) {
                    *o += av * bv;
                }
            }
        }
        out
    }

    /// `a (m x n) . b^T (k x n)` without materializing the transpose.
    pub fn a_bt(a: &Tensor2, b: &Tensor2) -> Tensor2 {
        assert_eq!(a.cols, b.cols, "a_bt shape mismatch");
        let mut out = Tensor2::zeros(a.rows, b.rows);
        for i in 0..a.rows {
            let a_row = a.row(i);
            let out_row = out.row_mut(i);
            for (j, o) in out_row.iter_mut().enumerate() {
                let b_row = b.row(j);
                let mut acc = 0.0;
                for (&av, &bv) in a_row.iter().zip(b_row) {
                    acc += av * bv;
                }
                *o = acc;
            }
        }
        out
    }
}
