//! Primal active-set solver for strictly convex quadratic programs with bound
//! constraints: minimize `½ yᵀ A y + bᵀ y` subject to `lo ≤ y ≤ hi`.

use crate::linalg::{self, SquareMatrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bound {
    Free,
    Lower,
    Upper,
}

/// Solves the box QP from the feasible start `y0`. `A` must be symmetric
/// positive definite. Returns `None` if a reduced system cannot be
/// factorized.
pub fn solve_box_qp<S: Scalar>(
    a: &SquareMatrix<S>,
    b: &[S],
    lo: &[S],
    hi: &[S],
    y0: &[S],
) -> Option<Vec<S>> {
    let m = b.len();
    assert_eq!(a.dim(), m);
    let mut y: Vec<S> = (0..m).map(|i| y0[i].max(lo[i]).min(hi[i])).collect();
    let mut state: Vec<Bound> = (0..m)
        .map(|i| {
            if y[i] <= lo[i] {
                Bound::Lower
            } else if y[i] >= hi[i] {
                Bound::Upper
            } else {
                Bound::Free
            }
        })
        .collect();
    let scale = (0..m).fold(S::zero(), |s, i| s.max(a.get(i, i).abs())).max(S::min_positive_value());
    let tol = S::of(1e3) * S::epsilon();

    for _ in 0..(20 * m + 20) {
        let grad: Vec<S> = (0..m).map(|i| linalg::dot(a.row(i), &y) + b[i]).collect();
        let free: Vec<usize> = (0..m).filter(|&i| state[i] == Bound::Free).collect();
        let mut step = vec![S::zero(); m];
        if !free.is_empty() {
            let k = free.len();
            let mut sub = SquareMatrix::zeros(k);
            for (r, &i) in free.iter().enumerate() {
                for (c, &j) in free.iter().enumerate() {
                    sub.set(r, c, a.get(i, j));
                }
            }
            let l = linalg::cholesky(&sub)?;
            let rhs: Vec<S> = free.iter().map(|&i| -grad[i]).collect();
            let p = linalg::cholesky_solve(&l, &rhs);
            for (r, &i) in free.iter().enumerate() {
                step[i] = p[r];
            }
        }
        let ymag = y.iter().fold(S::one(), |s, &v| s.max(v.abs()));
        let moving = step.iter().any(|&p| p.abs() > tol * ymag);
        if !moving {
            // Multipliers of the active bounds: release the worst violator.
            let mut worst = None;
            let mut worst_val = tol * scale * ymag;
            for i in 0..m {
                let viol = match state[i] {
                    Bound::Lower => -grad[i],
                    Bound::Upper => grad[i],
                    Bound::Free => S::zero(),
                };
                if viol > worst_val {
                    worst_val = viol;
                    worst = Some(i);
                }
            }
            match worst {
                Some(i) => state[i] = Bound::Free,
                None => return Some(y),
            }
            continue;
        }
        let mut alpha = S::one();
        let mut blocking = None;
        for &i in &free {
            let p = step[i];
            let limit = if p < S::zero() {
                (lo[i] - y[i]) / p
            } else if p > S::zero() {
                (hi[i] - y[i]) / p
            } else {
                S::infinity()
            };
            if limit < alpha {
                alpha = limit.max(S::zero());
                blocking = Some((i, if p < S::zero() { Bound::Lower } else { Bound::Upper }));
            }
        }
        for i in 0..m {
            y[i] = (y[i] + alpha * step[i]).max(lo[i]).min(hi[i]);
        }
        if let Some((i, side)) = blocking {
            y[i] = if side == Bound::Lower { lo[i] } else { hi[i] };
            state[i] = side;
        }
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_to_lower_bound() {
        // ½·2y² - 0.1 y over y ≥ 1 → y = 1.
        let a = SquareMatrix::from_rows(&[vec![2.0]]);
        let y = solve_box_qp(&a, &[-0.1], &[1.0], &[f64::INFINITY], &[2.0]).unwrap();
        assert_eq!(y, vec![1.0]);
    }

    #[test]
    fn interior_solution() {
        let a: SquareMatrix<f64> = SquareMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        let b = [-1.0, -1.0];
        let y = solve_box_qp(&a, &b, &[-10.0; 2], &[10.0; 2], &[0.0, 0.0]).unwrap();
        // A y = -b
        let l = linalg::cholesky(&a).unwrap();
        let exact = linalg::cholesky_solve(&l, &[1.0, 1.0]);
        for (u, v) in y.iter().zip(&exact) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn releases_wrongly_active_bound() {
        // Start at the upper bound although the optimum is interior.
        let a: SquareMatrix<f64> = SquareMatrix::from_rows(&[vec![1.0]]);
        let y = solve_box_qp(&a, &[-0.5], &[0.0], &[1.0], &[1.0]).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-14);
    }
}
