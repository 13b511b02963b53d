//! Exact heat semigroup of the discrete Neumann Laplacian.
//!
//! The conservative Laplacian on this grid (unit-coefficient
//! [`flux_divergence`](super::flux_divergence)) is diagonalized by the
//! first-kind cosine modes
//!
//! ```text
//! phi_k(x_i) = cos(pi k i / N),   N = n - 1,   k = 0..N,
//! lambda_k   = (4 / h^2) sin^2(pi k / (2 N)),
//! ```
//!
//! orthogonal under the trapezoidal weights (`1/2` at both endpoints).
//! `exp(t kappa Lap)` is realized by a forward cosine transform, per-mode
//! decay `exp(-t kappa lambda_k)`, and the inverse transform. Mode 0 is the
//! constant, with eigenvalue zero, so the semigroup preserves the quadrature
//! mean exactly; the matrix exponential of the graph Laplacian is entrywise
//! nonnegative, so the action is also nonexpansive in the max norm.

use super::{Grid, GridFunction};
use crate::Scalar;

/// Precomputed cosine basis for one grid; reuse it on hot paths.
#[derive(Debug, Clone)]
pub struct CosineBasis<S> {
    grid: Grid<S>,
    /// cos(pi m / N) for m = 0..2N-1; table lookup keeps products exact.
    cos_cycle: Vec<S>,
    eigenvalues: Vec<S>,
    /// 1 / <phi_k, phi_k>_w
    inv_mass: Vec<S>,
}

impl<S: Scalar> CosineBasis<S> {
    pub fn new(grid: Grid<S>) -> Self {
        let n = grid.len();
        let nn = n - 1;
        let pi = S::PI();
        let cos_cycle: Vec<S> = (0..2 * nn)
            .map(|m| (pi * S::of_usize(m) / S::of_usize(nn)).cos())
            .collect();
        let h = grid.spacing();
        let four = S::lit(4.0);
        let half = S::lit(0.5);
        let eigenvalues: Vec<S> = (0..n)
            .map(|k| {
                let s = (half * pi * S::of_usize(k) / S::of_usize(nn)).sin();
                four * s * s / (h * h)
            })
            .collect();
        let inv_mass: Vec<S> = (0..n)
            .map(|k| {
                if k == 0 || k == nn {
                    S::one() / S::of_usize(nn)
                } else {
                    S::lit(2.0) / S::of_usize(nn)
                }
            })
            .collect();
        Self {
            grid,
            cos_cycle,
            eigenvalues,
            inv_mass,
        }
    }

    pub fn grid(&self) -> Grid<S> {
        self.grid
    }

    /// Eigenvalue of mode `k` (nonnegative; zero for the constant mode).
    pub fn eigenvalue(&self, k: usize) -> S {
        self.eigenvalues[k]
    }

    #[inline]
    fn cos_ki(&self, k: usize, i: usize) -> S {
        let nn = self.grid.len() - 1;
        self.cos_cycle[(k * i) % (2 * nn)]
    }

    /// Mode `k` as a grid function.
    pub fn mode(&self, k: usize) -> GridFunction<S> {
        let n = self.grid.len();
        GridFunction::from_raw(self.grid, (0..n).map(|i| self.cos_ki(k, i)).collect())
    }

    /// Expansion coefficients with respect to the weighted inner product.
    pub fn forward(&self, p: &GridFunction<S>) -> Vec<S> {
        let n = self.grid.len();
        let v = p.as_slice();
        let half = S::lit(0.5);
        (0..n)
            .map(|k| {
                let mut acc = half * (v[0] + self.cos_ki(k, n - 1) * v[n - 1]);
                for i in 1..n - 1 {
                    acc += self.cos_ki(k, i) * v[i];
                }
                acc * self.inv_mass[k]
            })
            .collect()
    }

    /// Reconstruction `p_i = sum_k b_k cos(pi k i / N)`.
    pub fn inverse(&self, coeffs: &[S]) -> GridFunction<S> {
        let n = self.grid.len();
        debug_assert_eq!(coeffs.len(), n);
        let values = (0..n)
            .map(|i| {
                let mut acc = S::zero();
                for (k, &b) in coeffs.iter().enumerate() {
                    acc += b * self.cos_ki(k, i);
                }
                acc
            })
            .collect();
        GridFunction::from_raw(self.grid, values)
    }

    /// Applies `exp(t kappa Lap)` exactly in the mode representation.
    pub fn apply_semigroup(&self, kappa: S, t: S, p: &GridFunction<S>) -> GridFunction<S> {
        if kappa == S::zero() || t == S::zero() {
            return p.clone();
        }
        let mut coeffs = self.forward(p);
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c = *c * (-t * kappa * self.eigenvalues[k]).exp();
        }
        self.inverse(&coeffs)
    }

    /// Per-mode decay factors for a fixed `kappa * t`, for cached stepping.
    pub fn decay_factors(&self, kappa: S, t: S) -> Vec<S> {
        self.eigenvalues
            .iter()
            .map(|&lam| (-t * kappa * lam).exp())
            .collect()
    }

    /// Applies precomputed decay factors (one per mode).
    pub fn apply_factors(&self, factors: &[S], p: &GridFunction<S>) -> GridFunction<S> {
        let mut coeffs = self.forward(p);
        for (c, &f) in coeffs.iter_mut().zip(factors) {
            *c = *c * f;
        }
        self.inverse(&coeffs)
    }
}

/// One-shot `exp(t kappa Lap) p` with `kappa, t >= 0`; `kappa = 0` or
/// `t = 0` returns `p` unchanged. Builds the basis on each call — hold a
/// [`CosineBasis`] when applying repeatedly on the same grid.
pub fn heat_semigroup_apply<S: Scalar>(kappa: S, t: S, p: &GridFunction<S>) -> GridFunction<S> {
    if kappa == S::zero() || t == S::zero() {
        return p.clone();
    }
    CosineBasis::new(p.grid()).apply_semigroup(kappa, t, p)
}
