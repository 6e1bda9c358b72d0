//! Paired truncated Gram-Schmidt.
//!
//! [`PairedBasis`] keeps a sliding window of orthonormal vectors `q_i` built
//! from residual differences and, index-aligned with them, vectors `u_i` that
//! receive exactly the same linear combinations of the iterate differences.
//! With `F` the residual-difference block and `X` the iterate-difference block
//! of the current window (before any truncation has happened),
//!
//! ```text
//! F = Q S,    X = U S,
//! ```
//!
//! with `S` upper triangular. Each appended column stores its own slice of `S`
//! and the slice is dropped together with its `(q, u)` pair.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::problem::Window;
use crate::vector::{axpy, dot, norm2};

#[derive(Debug, Clone, PartialEq)]
pub struct StoredColumn {
    /// Position of this column in the sequence of all successful appends.
    pub index: usize,
    /// `s_ij` for the columns that were stored when this one was appended,
    /// oldest first. Entry `k` pairs with column `index - coeffs.len() + k`.
    pub coeffs: Vec<f64>,
    /// Normalization `s_jj`.
    pub diag: f64,
}

impl StoredColumn {
    /// Global column index paired with `coeffs[k]`.
    pub fn row_index(&self, k: usize) -> usize {
        self.index - self.coeffs.len() + k
    }
}

/// Result of a successful [`PairedBasis::append_pair`].
#[derive(Debug, Clone, PartialEq)]
pub struct AppendedColumn {
    /// Off-diagonal coefficients against the retained columns, oldest first.
    pub coeffs: Vec<f64>,
    pub s_jj: f64,
    /// The oldest pair was dropped to make room.
    pub evicted: bool,
}

/// Intermediates of one update: `x̄ = x − Uθ`, `f̄ = f − Qθ`, `x⁺ = x̄ + βf̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct Combined {
    pub x_bar: Vec<f64>,
    pub f_bar: Vec<f64>,
    pub next: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PairedBasis {
    dim: usize,
    window: Window,
    q: VecDeque<Vec<f64>>,
    u: VecDeque<Vec<f64>>,
    s: VecDeque<StoredColumn>,
    appended: usize,
    passes: usize,
}

impl PairedBasis {
    pub fn new(dim: usize, window: Window) -> Self {
        let cap = window.capacity().unwrap_or(8);
        Self {
            dim,
            window,
            q: VecDeque::with_capacity(cap),
            u: VecDeque::with_capacity(cap),
            s: VecDeque::with_capacity(cap),
            appended: 0,
            passes: 2,
        }
    }

    /// A second Gram-Schmidt pass is on by default; its coefficients are added
    /// to the first-pass `s_ij`. `false` gives plain single-pass MGS.
    pub fn with_reorthogonalization(mut self, on: bool) -> Self {
        self.passes = if on { 2 } else { 1 };
        self
    }

    pub fn reorthogonalizes(&self) -> bool {
        self.passes == 2
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn q(&self, i: usize) -> &[f64] {
        &self.q[i]
    }

    pub fn u(&self, i: usize) -> &[f64] {
        &self.u[i]
    }

    pub fn column(&self, i: usize) -> &StoredColumn {
        &self.s[i]
    }

    pub fn columns(&self) -> impl Iterator<Item = &StoredColumn> {
        self.s.iter()
    }

    /// Orthonormalizes `delta_f` against the stored `q`'s (modified Gram-Schmidt,
    /// storage order, repeated once unless disabled) and applies the same
    /// combination to `delta_x`.
    ///
    /// When the window is full the oldest pair is evicted first, so the new
    /// direction is orthogonalized against at most `m - 1` vectors. On
    /// breakdown (`s_jj <= breakdown_eps * ‖delta_f‖₂`) nothing is stored and
    /// the caller is expected to restart.
    pub fn append_pair(
        &mut self,
        delta_f: &[f64],
        delta_x: &[f64],
        breakdown_eps: f64,
    ) -> Result<AppendedColumn> {
        for v in [delta_f, delta_x] {
            if v.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: v.len(),
                });
            }
        }
        let evicted = self.window.is_full(self.len());
        if evicted {
            self.evict_oldest();
        }

        let mut q = delta_f.to_vec();
        let mut u = delta_x.to_vec();
        let mut coeffs = vec![0.0; self.len()];
        for _ in 0..self.passes {
            for ((qi, ui), c) in self.q.iter().zip(&self.u).zip(coeffs.iter_mut()) {
                let s = dot(&q, qi);
                axpy(-s, qi, &mut q);
                axpy(-s, ui, &mut u);
                *c += s;
            }
        }

        let s_jj = norm2(&q);
        let delta_f_norm = norm2(delta_f);
        if !(s_jj > breakdown_eps * delta_f_norm) || !s_jj.is_finite() {
            return Err(Error::Breakdown {
                step: self.appended + 1,
                s_jj,
                delta_f_norm,
            });
        }
        let inv = 1.0 / s_jj;
        q.iter_mut().for_each(|v| *v *= inv);
        u.iter_mut().for_each(|v| *v *= inv);

        self.appended += 1;
        self.q.push_back(q);
        self.u.push_back(u);
        self.s.push_back(StoredColumn {
            index: self.appended,
            coeffs: coeffs.clone(),
            diag: s_jj,
        });
        Ok(AppendedColumn {
            coeffs,
            s_jj,
            evicted,
        })
    }

    /// `θ = Qᵀf`, in storage order.
    pub fn project(&self, f: &[f64]) -> Vec<f64> {
        self.q.iter().map(|qi| dot(qi, f)).collect()
    }

    pub fn combine(&self, x: &[f64], f: &[f64], theta: &[f64], beta: f64) -> Result<Combined> {
        if theta.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: theta.len(),
            });
        }
        for v in [x, f] {
            if v.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: v.len(),
                });
            }
        }
        let mut x_bar = x.to_vec();
        let mut f_bar = f.to_vec();
        for ((t, ui), qi) in theta.iter().zip(&self.u).zip(&self.q) {
            axpy(-t, ui, &mut x_bar);
            axpy(-t, qi, &mut f_bar);
        }
        let mut next = x_bar.clone();
        axpy(beta, &f_bar, &mut next);
        Ok(Combined { x_bar, f_bar, next })
    }

    pub fn evict_oldest(&mut self) {
        self.q.pop_front();
        self.u.pop_front();
        self.s.pop_front();
    }

    pub fn clear(&mut self) {
        self.q.clear();
        self.u.clear();
        self.s.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-14;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn first_append_normalizes() {
        let mut basis = PairedBasis::new(3, Window::Unbounded);
        let col = basis
            .append_pair(&[3.0, 4.0, 0.0], &[1.0, 0.0, 0.0], EPS)
            .unwrap();
        assert_eq!(col.s_jj, 5.0);
        assert!(col.coeffs.is_empty());
        assert!(close(basis.q(0), &[0.6, 0.8, 0.0], 1e-15));
        assert!(close(basis.u(0), &[0.2, 0.0, 0.0], 1e-15));
    }

    #[test]
    fn second_append_one_mgs_step() {
        let mut basis = PairedBasis::new(3, Window::Unbounded);
        // Seed q1 = e1 paired with u1 = e2.
        basis
            .append_pair(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], EPS)
            .unwrap();
        let col = basis
            .append_pair(&[2.0, 3.0, 0.0], &[1.0, 1.0, 0.0], EPS)
            .unwrap();
        assert_eq!(col.coeffs, vec![2.0]);
        assert_eq!(col.s_jj, 3.0);
        assert!(close(basis.q(1), &[0.0, 1.0, 0.0], 1e-15));
        assert!(close(basis.u(1), &[1.0 / 3.0, -1.0 / 3.0, 0.0], 1e-15));
        assert_eq!(basis.column(1).row_index(0), 1);
    }

    #[test]
    fn breakdown_on_dependent_direction() {
        let mut basis = PairedBasis::new(2, Window::Unbounded);
        basis.append_pair(&[1.0, 1.0], &[1.0, 0.0], EPS).unwrap();
        let err = basis
            .append_pair(&[2.0, 2.0], &[0.0, 1.0], EPS)
            .unwrap_err();
        assert!(matches!(err, Error::Breakdown { step: 2, .. }));
        assert_eq!(basis.len(), 1);

        let mut empty = PairedBasis::new(2, Window::Unbounded);
        assert!(matches!(
            empty.append_pair(&[0.0, 0.0], &[1.0, 0.0], EPS),
            Err(Error::Breakdown { .. })
        ));
    }

    #[test]
    fn project_examples() {
        let basis = PairedBasis::new(2, Window::Unbounded);
        assert!(basis.project(&[1.0, 2.0]).is_empty());

        let mut basis = PairedBasis::new(2, Window::Unbounded);
        basis.append_pair(&[1.0, 0.0], &[0.0, 0.0], EPS).unwrap();
        assert_eq!(basis.project(&[2.0, 5.0]), vec![2.0]);
    }

    #[test]
    fn combine_without_directions_is_fixed_point_step() {
        let basis = PairedBasis::new(2, Window::Unbounded);
        let c = basis.combine(&[1.0, 2.0], &[0.5, -1.0], &[], 2.0).unwrap();
        assert_eq!(c.next, vec![2.0, 0.0]);

        let mut basis = PairedBasis::new(2, Window::Unbounded);
        basis.append_pair(&[1.0, 0.0], &[3.0, 3.0], EPS).unwrap();
        let c = basis
            .combine(&[1.0, 2.0], &[0.5, -1.0], &[0.0], 2.0)
            .unwrap();
        assert_eq!(c.next, vec![2.0, 0.0]);
        assert!(basis.combine(&[1.0, 2.0], &[0.5, -1.0], &[], 2.0).is_err());
    }

    #[test]
    fn one_dimensional_root_in_one_step() {
        // f(x) = 1 - 2x, x0 = 0, beta = 1: x1 = 1, f1 = -1.
        let f = |x: f64| 1.0 - 2.0 * x;
        let (x0, x1) = (0.0, 1.0);
        let mut basis = PairedBasis::new(1, Window::Unbounded);
        basis
            .append_pair(&[f(x1) - f(x0)], &[x1 - x0], EPS)
            .unwrap();
        let theta = basis.project(&[f(x1)]);
        let c = basis.combine(&[x1], &[f(x1)], &theta, 1.0).unwrap();
        assert_eq!(c.next, vec![0.5]);
        assert_eq!(f(c.next[0]), 0.0);
    }

    #[test]
    fn eviction_and_clear() {
        let mut basis = PairedBasis::new(3, Window::Bounded(2));
        basis
            .append_pair(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], EPS)
            .unwrap();
        basis.evict_oldest();
        assert!(basis.is_empty());
        basis.evict_oldest();
        assert!(basis.is_empty());

        basis
            .append_pair(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], EPS)
            .unwrap();
        basis
            .append_pair(&[1.0, 1.0, 0.0], &[0.0, 1.0, 0.0], EPS)
            .unwrap();
        assert_eq!(basis.len(), 2);
        let first_index = basis.column(0).index;
        let col = basis
            .append_pair(&[0.0, 3.0, 2.0], &[2.0, 0.0, 0.0], EPS)
            .unwrap();
        assert!(col.evicted);
        assert_eq!(col.coeffs.len(), 1);
        assert_eq!(col.s_jj, 2.0);
        assert_eq!(basis.len(), 2);
        assert!(basis.columns().all(|c| c.index != first_index));

        basis.clear();
        basis.clear();
        assert!(basis.is_empty());
        let col = basis
            .append_pair(&[3.0, 4.0, 0.0], &[1.0, 0.0, 0.0], EPS)
            .unwrap();
        assert_eq!(col.s_jj, 5.0);
        assert!(!col.evicted);
    }

    fn orthogonality_loss(basis: &PairedBasis) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(basis.q(i), basis.q(j)) - target).abs());
            }
        }
        worst
    }

    #[test]
    fn second_pass_restores_orthogonality() {
        let n = 6;
        let hilbert: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..n).map(|i| 1.0 / (i + j + 1) as f64).collect())
            .collect();
        let mut single = PairedBasis::new(n, Window::Unbounded).with_reorthogonalization(false);
        let mut double = PairedBasis::new(n, Window::Unbounded);
        assert!(double.reorthogonalizes() && !single.reorthogonalizes());
        for col in &hilbert {
            single.append_pair(col, col, 1e-15).unwrap();
            double.append_pair(col, col, 1e-15).unwrap();
        }
        assert!(orthogonality_loss(&single) > 1e-10);
        assert!(orthogonality_loss(&double) < 1e-14);
    }
}
