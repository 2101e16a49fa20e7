//! Dense linear algebra for the small systems this crate solves
//! (parameter dimensions are a handful, never more than a few dozen).

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows);
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0.0 {
                    continue;
                }
                for c in 0..rhs.cols {
                    out.data[r * rhs.cols + c] += a * rhs.get(k, c);
                }
            }
        }
        out
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut m: f64 = 0.0;
        for r in 0..self.rows {
            for c in 0..r {
                m = m.max((self.get(r, c) - self.get(c, r)).abs());
            }
        }
        m
    }
}

/// Solve `a x = b` in place by Gaussian elimination with partial pivoting.
/// `a` is a row-major `dim x dim` matrix; both buffers are clobbered and the
/// solution lands in `b`.
pub fn solve_in_place(a: &mut [f64], b: &mut [f64], dim: usize) -> Result<()> {
    assert_eq!(a.len(), dim * dim);
    assert_eq!(b.len(), dim);
    for col in 0..dim {
        let mut piv = col;
        let mut best = a[col * dim + col].abs();
        for r in (col + 1)..dim {
            let v = a[r * dim + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best < 1e-300 || !best.is_finite() {
            return Err(Error::SingularJacobian);
        }
        if piv != col {
            for c in 0..dim {
                a.swap(piv * dim + c, col * dim + c);
            }
            b.swap(piv, col);
        }
        let diag = a[col * dim + col];
        for r in (col + 1)..dim {
            let f = a[r * dim + col] / diag;
            if f == 0.0 {
                continue;
            }
            a[r * dim + col] = 0.0;
            for c in (col + 1)..dim {
                a[r * dim + c] -= f * a[col * dim + c];
            }
            b[r] -= f * b[col];
        }
    }
    for col in (0..dim).rev() {
        let mut v = b[col];
        for c in (col + 1)..dim {
            v -= a[col * dim + c] * b[c];
        }
        b[col] = v / a[col * dim + col];
    }
    Ok(())
}

pub fn solve(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(a.rows, a.cols);
    assert_eq!(b.len(), a.rows);
    let mut aa = a.data.clone();
    let mut bb = b.to_vec();
    solve_in_place(&mut aa, &mut bb, a.rows)?;
    Ok(bb)
}

/// Matrix inverse by pivoted elimination on an augmented identity.
pub fn invert(a: &Matrix) -> Result<Matrix> {
    assert_eq!(a.rows, a.cols);
    let dim = a.rows;
    let mut inv = Matrix::zeros(dim, dim);
    for c in 0..dim {
        let mut e = vec![0.0; dim];
        e[c] = 1.0;
        let mut aa = a.data.clone();
        solve_in_place(&mut aa, &mut e, dim)?;
        for r in 0..dim {
            inv.set(r, c, e[r]);
        }
    }
    Ok(inv)
}

/// Cholesky solve of a symmetric positive-definite system, with the matrix
/// given as a packed lower triangle (`a[i*(i+1)/2 + j]`, j <= i).
/// Used for normal equations; a non-positive pivot means a rank-deficient
/// design.
#[inline]
pub fn cholesky_solve_packed(packed: &[f64], b: &[f64], dim: usize, out: &mut [f64]) -> bool {
    debug_assert_eq!(packed.len(), dim * (dim + 1) / 2);
    debug_assert!(b.len() == dim && out.len() >= dim);
    // L in packed layout
    let mut l = [0.0f64; MAX_PACKED];
    debug_assert!(packed.len() <= MAX_PACKED);
    for i in 0..dim {
        for j in 0..=i {
            let mut s = packed[i * (i + 1) / 2 + j];
            for k in 0..j {
                s -= l[i * (i + 1) / 2 + k] * l[j * (j + 1) / 2 + k];
            }
            if i == j {
                if s <= 1e-280 || !s.is_finite() {
                    return false;
                }
                l[i * (i + 1) / 2 + j] = s.sqrt();
            } else {
                l[i * (i + 1) / 2 + j] = s / l[j * (j + 1) / 2 + j];
            }
        }
    }
    // forward then backward substitution
    for i in 0..dim {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * (i + 1) / 2 + k] * out[k];
        }
        out[i] = s / l[i * (i + 1) / 2 + i];
    }
    for i in (0..dim).rev() {
        let mut s = out[i];
        for k in (i + 1)..dim {
            s -= l[k * (k + 1) / 2 + i] * out[k];
        }
        out[i] = s / l[i * (i + 1) / 2 + i];
    }
    true
}

/// Packed-triangle capacity for the stack-allocated Cholesky (dim <= 16).
pub const MAX_KERNEL_DIM: usize = 16;
const MAX_PACKED: usize = MAX_KERNEL_DIM * (MAX_KERNEL_DIM + 1) / 2;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_known_system() {
        // [[2,1],[1,3]] x = [3,5] -> x = [4/5, 7/5]
        let a = Matrix::from_rows(2, 2, vec![2.0, 1.0, 1.0, 3.0]);
        let x = solve(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14);
        assert!((x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = Matrix::from_rows(2, 2, vec![0.0, 1.0, 1.0, 0.0]);
        let x = solve(&a, &[2.0, 3.0]).unwrap();
        assert_eq!(x, vec![3.0, 2.0]);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = Matrix::from_rows(2, 2, vec![1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(solve(&a, &[1.0, 2.0]), Err(Error::SingularJacobian)));
    }

    #[test]
    fn inverse_roundtrip() {
        let a = Matrix::from_rows(3, 3, vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let inv = invert(&a).unwrap();
        let prod = a.matmul(&inv);
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((prod.get(r, c) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn packed_cholesky_matches_dense_solve() {
        // SPD matrix [[4,1,0.5],[1,3,0.2],[0.5,0.2,2]]
        let dense = Matrix::from_rows(3, 3, vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let packed = [4.0, 1.0, 3.0, 0.5, 0.2, 2.0];
        let b = [1.0, -2.0, 0.7];
        let want = solve(&dense, &b).unwrap();
        let mut got = [0.0; 3];
        assert!(cholesky_solve_packed(&packed, &b, 3, &mut got));
        for i in 0..3 {
            assert!((got[i] - want[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn packed_cholesky_rejects_semidefinite() {
        let packed = [1.0, 1.0, 1.0]; // [[1,1],[1,1]], rank 1
        let mut out = [0.0; 2];
        assert!(!cholesky_solve_packed(&packed, &[1.0, 1.0], 2, &mut out));
    }
}
