//! Bound-constrained limited-memory quasi-Newton minimization.
//!
//! Directions come from the L-BFGS two-loop recursion restricted to the
//! variables that are not pinned at an active bound; steps are taken along
//! the projected path with Armijo backtracking.

use std::collections::VecDeque;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedLbfgs {
    /// Stop when the projected-gradient infinity norm falls below this.
    pub grad_tol: f64,
    /// Stop when the relative objective decrease of an accepted step falls
    /// below this.
    pub rel_f_tol: f64,
    pub max_iter: usize,
    pub memory: usize,
}

impl Default for BoundedLbfgs {
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            rel_f_tol: 1e-11,
            max_iter: 500,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<S> {
    pub x: Vec<S>,
    pub value: S,
    pub grad: Vec<S>,
    pub iterations: usize,
    pub converged: bool,
}

#[inline]
fn project<S: Scalar>(x: S, lo: S, hi: S) -> S {
    x.max(lo).min(hi)
}

/// Components of the gradient that can still move the iterate.
fn projected_gradient<S: Scalar>(x: &[S], g: &[S], lo: &[S], hi: &[S]) -> Vec<S> {
    x.iter()
        .zip(g)
        .zip(lo.iter().zip(hi))
        .map(|((&xi, &gi), (&l, &h))| {
            if (xi <= l && gi > S::zero()) || (xi >= h && gi < S::zero()) {
                S::zero()
            } else {
                gi
            }
        })
        .collect()
}

fn inf_norm<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |m, &x| m.max(x.abs()))
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    crate::linalg::dot(a, b)
}

impl BoundedLbfgs {
    /// Minimizes `f` over the box `[lower, upper]` starting from `x0`
    /// (projected into the box). `f` returns `None` where it cannot be
    /// evaluated; such points are rejected by the line search.
    ///
    /// Returns `None` if `f` fails at the starting point.
    pub fn minimize<S, F>(&self, mut f: F, x0: &[S], lower: &[S], upper: &[S]) -> Option<Minimum<S>>
    where
        S: Scalar,
        F: FnMut(&[S]) -> Option<(S, Vec<S>)>,
    {
        let n = x0.len();
        assert_eq!(lower.len(), n);
        assert_eq!(upper.len(), n);
        let mut x: Vec<S> = (0..n).map(|i| project(x0[i], lower[i], upper[i])).collect();
        let (mut fx, mut g) = f(&x).filter(|(v, g)| v.is_finite() && g.iter().all(|d| d.is_finite()))?;
        let mut memory: VecDeque<(Vec<S>, Vec<S>, S)> = VecDeque::with_capacity(self.memory);
        let grad_tol = S::of(self.grad_tol);
        let rel_tol = S::of(self.rel_f_tol);
        let c1 = S::of(1e-4);

        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iter {
            let pg = projected_gradient(&x, &g, lower, upper);
            if inf_norm(&pg) <= grad_tol {
                converged = true;
                break;
            }
            iterations += 1;
            let free: Vec<bool> = pg
                .iter()
                .zip(&g)
                .map(|(&p, &gi)| p != S::zero() || gi == S::zero())
                .collect();

            let mut accepted = None;
            for attempt in 0..2 {
                let use_memory = attempt == 0 && !memory.is_empty();
                let mut d = if use_memory {
                    two_loop(&pg, &memory, &free)
                } else {
                    pg.iter().map(|&v| -v).collect()
                };
                if dot(&d, &g) >= S::zero() {
                    if use_memory {
                        continue;
                    }
                    break;
                }
                let mut alpha = if use_memory {
                    S::one()
                } else {
                    // Unit step of length at most 1 in every coordinate
                    // when there is no curvature information yet.
                    (S::one() / inf_norm(&d)).min(S::one())
                };
                for v in d.iter_mut() {
                    if !v.is_finite() {
                        *v = S::zero();
                    }
                }
                for _ in 0..40 {
                    let trial: Vec<S> = (0..n)
                        .map(|i| project(x[i] + alpha * d[i], lower[i], upper[i]))
                        .collect();
                    let step: Vec<S> = trial.iter().zip(&x).map(|(&a, &b)| a - b).collect();
                    if inf_norm(&step) == S::zero() {
                        break;
                    }
                    if let Some((ft, gt)) = f(&trial) {
                        if ft.is_finite()
                            && gt.iter().all(|v| v.is_finite())
                            && ft <= fx + c1 * dot(&g, &step)
                        {
                            accepted = Some((trial, ft, gt, step));
                            break;
                        }
                    }
                    alpha = alpha * S::of(0.5);
                }
                if accepted.is_some() {
                    break;
                }
                memory.clear();
            }

            let Some((xn, fnew, gn, s)) = accepted else {
                break;
            };
            let decrease = fx - fnew;
            let y: Vec<S> = gn.iter().zip(&g).map(|(&a, &b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > S::epsilon() * dot(&y, &y) {
                if memory.len() == self.memory {
                    memory.pop_front();
                }
                memory.push_back((s, y, S::one() / sy));
            }
            let scale = fx.abs().max(fnew.abs()).max(S::one());
            x = xn;
            fx = fnew;
            g = gn;
            if decrease <= rel_tol * scale {
                converged = true;
                break;
            }
        }
        Some(Minimum {
            x,
            value: fx,
            grad: g,
            iterations,
            converged,
        })
    }
}

/// `-H g` from the stored curvature pairs, with pinned coordinates zeroed.
fn two_loop<S: Scalar>(g: &[S], memory: &VecDeque<(Vec<S>, Vec<S>, S)>, free: &[bool]) -> Vec<S> {
    let mask = |v: &mut Vec<S>| {
        for (vi, &fr) in v.iter_mut().zip(free) {
            if !fr {
                *vi = S::zero();
            }
        }
    };
    let mut q = g.to_vec();
    mask(&mut q);
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let mut sm = s.clone();
        mask(&mut sm);
        let a = *rho * dot(&sm, &q);
        for (qi, &yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        mask(&mut q);
        alphas.push(a);
    }
    let (s, y, _) = memory.back().expect("non-empty memory");
    let gamma = dot(s, y) / dot(y, y);
    let mut r: Vec<S> = q.iter().map(|&v| gamma * v).collect();
    for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = *rho * dot(y, &r);
        for (ri, &si) in r.iter_mut().zip(s) {
            *ri += (a - b) * si;
        }
        mask(&mut r);
    }
    r.iter().map(|&v| -v).collect()
}
