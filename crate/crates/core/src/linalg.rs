//! Dense LU with partial pivoting for the small real boundary matrices.
//!
//! Orders here are tiny (n <= 8 in practice), so a plain row-major
//! factorization is both simpler and faster than pulling in a linear
//! algebra crate.

/// Row-major dense square matrix.
#[derive(Debug, Clone)]
pub struct Mat {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// Returns a copy with every row scaled to unit Euclidean norm.
    ///
    /// By Hadamard's inequality the determinant of the result lies in
    /// [-1, 1], which gives a scale-free singularity measure.
    pub fn row_normalized(&self) -> Mat {
        let mut out = self.clone();
        for i in 0..self.n {
            let row = &mut out.data[i * self.n..(i + 1) * self.n];
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                for x in row.iter_mut() {
                    *x /= norm;
                }
            }
        }
        out
    }
}

/// LU factorization with partial pivoting, PA = LU.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    piv: Vec<usize>,
    perm_sign: f64,
}

impl Lu {
    pub fn factor(m: &Mat) -> Lu {
        let n = m.n;
        let mut lu = m.data.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let mut perm_sign = 1.0;
        for col in 0..n {
            let mut p = col;
            let mut best = lu[col * n + col].abs();
            for r in col + 1..n {
                let v = lu[r * n + col].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if p != col {
                for j in 0..n {
                    lu.swap(col * n + j, p * n + j);
                }
                piv.swap(col, p);
                perm_sign = -perm_sign;
            }
            let pivot = lu[col * n + col];
            if pivot == 0.0 {
                continue;
            }
            for r in col + 1..n {
                let f = lu[r * n + col] / pivot;
                lu[r * n + col] = f;
                for j in col + 1..n {
                    lu[r * n + j] -= f * lu[col * n + j];
                }
            }
        }
        Lu {
            n,
            lu,
            piv,
            perm_sign,
        }
    }

    pub fn det(&self) -> f64 {
        let mut d = self.perm_sign;
        for i in 0..self.n {
            d *= self.lu[i * self.n + i];
        }
        d
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i * n + j] * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }

    /// Extracts an approximate null vector of a (near-)singular matrix.
    ///
    /// Picks the smallest diagonal entry of U, fixes that component to 1
    /// and back-substitutes the leading triangular block. Also reports the
    /// corank estimate: the number of diagonal entries below `tol` relative
    /// to the largest one.
    pub fn null_vector(&self, tol: f64) -> (Vec<f64>, usize) {
        let n = self.n;
        let diag: Vec<f64> = (0..n).map(|i| self.lu[i * n + i].abs()).collect();
        let dmax = diag.iter().cloned().fold(f64::MIN, f64::max).max(1e-300);
        let corank = diag.iter().filter(|&&d| d < tol * dmax).count();
        let i0 = (0..n)
            .min_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap())
            .unwrap();
        let mut x = vec![0.0; n];
        x[i0] = 1.0;
        for i in (0..i0).rev() {
            let mut s = 0.0;
            for j in i + 1..n {
                s += self.lu[i * n + j] * x[j];
            }
            x[i] = -s / self.lu[i * n + i];
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in x.iter_mut() {
                *v /= norm;
            }
        }
        (x, corank)
    }

    /// Residual of A x for a candidate null vector, using the original matrix.
    pub fn apply(m: &Mat, x: &[f64]) -> Vec<f64> {
        (0..m.n)
            .map(|i| (0..m.n).map(|j| m.at(i, j) * x[j]).sum())
            .collect()
    }
}
