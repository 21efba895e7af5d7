//! Small dense linear algebra on row-major square matrices.
//!
//! Gram matrices here are at most a few hundred rows, so plain loops are
//! fast enough and keep the crate generic over [`Scalar`].

use crate::scalar::Scalar;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> SquareMatrix<S> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![S::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, S::one());
        }
        m
    }

    /// Builds a matrix from row-major data; panics when `data.len() != n * n`.
    pub fn from_row_major(n: usize, data: Vec<S>) -> Self {
        assert_eq!(data.len(), n * n, "row-major data must hold n*n entries");
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix must be square");
            data.extend_from_slice(r);
        }
        Self { n, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == S::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.n);
        (0..self.n).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn frobenius_norm(&self) -> S {
        self.data.iter().map(|&x| x * x).sum::<S>().sqrt()
    }

    pub fn add_diagonal(&mut self, v: S) {
        for i in 0..self.n {
            self.data[i * self.n + i] += v;
        }
    }

    /// Principal sub-matrix obtained by deleting row and column `skip`.
    pub fn without_index(&self, skip: usize) -> Self {
        let keep: Vec<usize> = (0..self.n).filter(|&i| i != skip).collect();
        let m = keep.len();
        let mut out = Self::zeros(m);
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                out.set(a, b, self.get(i, j));
            }
        }
        out
    }
}

/// Inner product over the common length of `a` and `b`, with four partial
/// sums so the loop vectorizes.
#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    let m = a.len().min(b.len());
    let (a, b) = (&a[..m], &b[..m]);
    let mut acc = [S::zero(); 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = S::zero();
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Lower Cholesky factor of a symmetric matrix, or `None` if a pivot is not
/// strictly positive.
pub fn cholesky<S: Scalar>(a: &SquareMatrix<S>) -> Option<SquareMatrix<S>> {
    let n = a.n;
    let mut l = SquareMatrix::zeros(n);
    for j in 0..n {
        let lj = &l.data[j * n..j * n + j];
        let mut d = a.get(j, j) - dot(lj, lj);
        if !(d > S::zero()) || !d.is_finite() {
            return None;
        }
        d = d.sqrt();
        l.data[j * n + j] = d;
        for i in (j + 1)..n {
            let (head, tail) = l.data.split_at_mut(i * n);
            let li = &tail[..j];
            let lj = &head[j * n..j * n + j];
            let s = a.get(i, j) - dot(li, lj);
            tail[j] = s / d;
        }
    }
    Some(l)
}

/// Solves `L x = b` in place.
pub fn solve_lower<S: Scalar>(l: &SquareMatrix<S>, b: &mut [S]) {
    let n = l.n;
    for i in 0..n {
        let s = b[i] - dot(&l.data[i * n..i * n + i], &b[..i]);
        b[i] = s / l.data[i * n + i];
    }
}

/// Solves `Lᵀ x = b` in place.
pub fn solve_lower_transpose<S: Scalar>(l: &SquareMatrix<S>, b: &mut [S]) {
    let n = l.n;
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l.data[k * n + i] * b[k];
        }
        b[i] = s / l.data[i * n + i];
    }
}

/// Solves `L Lᵀ x = b`.
pub fn cholesky_solve<S: Scalar>(l: &SquareMatrix<S>, b: &[S]) -> Vec<S> {
    let mut x = b.to_vec();
    solve_lower(l, &mut x);
    solve_lower_transpose(l, &mut x);
    x
}

/// `(L Lᵀ)⁻¹`, symmetric.
pub fn cholesky_inverse<S: Scalar>(l: &SquareMatrix<S>) -> SquareMatrix<S> {
    let n = l.n;
    // Rows of U = (L⁻¹)ᵀ, so both products below run over contiguous memory:
    // U[j][i] = -(Σ_{j≤k<i} L[i][k] U[j][k]) / L[i][i], and A⁻¹ = U Uᵀ.
    let mut u = SquareMatrix::zeros(n);
    for j in 0..n {
        let row = &mut u.data[j * n..(j + 1) * n];
        row[j] = S::one() / l.data[j * n + j];
        for i in (j + 1)..n {
            let s = dot(&l.data[i * n + j..i * n + i], &row[j..i]);
            row[i] = -s / l.data[i * n + i];
        }
    }
    let mut inv = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let s = dot(&u.data[i * n + i..(i + 1) * n], &u.data[j * n + i..(j + 1) * n]);
            inv.data[i * n + j] = s;
            inv.data[j * n + i] = s;
        }
    }
    inv
}

pub fn log_det_from_cholesky<S: Scalar>(l: &SquareMatrix<S>) -> S {
    let two = S::of(2.0);
    (0..l.n).map(|i| two * l.get(i, i).ln()).sum()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues<S: Scalar>(a: &SquareMatrix<S>) -> Vec<S> {
    let n = a.n;
    let mut m = a.clone();
    let tiny = S::epsilon() * S::epsilon();
    for _sweep in 0..100 {
        let mut off = S::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m.get(i, j) * m.get(i, j);
                }
            }
        }
        if off <= tiny * m.frobenius_norm().powi(2).max(S::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq == S::zero() {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (S::of(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt());
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m.get(k, p);
                    let akq = m.get(k, q);
                    m.set(k, p, c * akp - s * akq);
                    m.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = m.get(p, k);
                    let aqk = m.get(q, k);
                    m.set(p, k, c * apk - s * aqk);
                    m.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    (0..n).map(|i| m.get(i, i)).collect()
}
