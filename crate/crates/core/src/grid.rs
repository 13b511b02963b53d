//! Uniform-grid discrete calculus on an interval with zero-flux (Neumann)
//! boundaries.
//!
//! The grid is node-centered: `n` nodes `x_i = i*h` with `h = L/(n-1)`,
//! including both endpoints. The conservative divergence treats the outer
//! faces as zero-flux and integrates over half-cells at the boundary nodes,
//! so quadrature and divergence are compatible: the trapezoidal integral of
//! `flux_divergence` output telescopes to zero.

use crate::{Error, Result, Scalar};

pub mod semigroup;

pub use semigroup::{heat_semigroup_apply, CosineBasis};

/// Uniform node-centered grid on `[0, L]`.
///
/// Stores the node count and spacing; the length is always `h * (n-1)` in
/// the stored representation, so derived quantities are mutually consistent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<S> {
    n: usize,
    h: S,
}

impl<S: Scalar> Grid<S> {
    /// Grid with `n >= 8` nodes spanning `[0, length]`.
    pub fn new(length: S, n: usize) -> Result<Self> {
        if !(length > S::zero()) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "length must be positive and finite, got {length}"
            )));
        }
        if n < 8 {
            return Err(Error::InvalidGrid(format!("need at least 8 nodes, got {n}")));
        }
        let h = length / S::of_usize(n - 1);
        Ok(Self { n, h })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> S {
        self.h
    }

    pub fn length(&self) -> S {
        self.h * S::of_usize(self.n - 1)
    }

    pub fn node(&self, i: usize) -> S {
        S::of_usize(i) * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = S> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }
}

/// Real-valued function sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<S> {
    grid: Grid<S>,
    values: Vec<S>,
}

impl<S: Scalar> GridFunction<S> {
    pub fn zeros(grid: Grid<S>) -> Self {
        Self {
            grid,
            values: vec![S::zero(); grid.len()],
        }
    }

    pub fn from_fn(grid: Grid<S>, f: impl FnMut(S) -> S) -> Self {
        let values = grid.nodes().map(f).collect();
        Self { grid, values }
    }

    /// Wraps raw node values; non-finite entries are a contract violation.
    pub fn from_values(grid: Grid<S>, values: Vec<S>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState {
                field: "grid function",
                t: f64::NAN,
            });
        }
        Ok(Self { grid, values })
    }

    /// Internal constructor for values produced by grid operators.
    pub(crate) fn from_raw(grid: Grid<S>, values: Vec<S>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid<S> {
        self.grid
    }

    pub fn as_slice(&self) -> &[S] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_norm(&self) -> S {
        self.values
            .iter()
            .fold(S::zero(), |acc, v| acc.max(v.abs()))
    }

    pub fn min_value(&self) -> S {
        self.values
            .iter()
            .fold(S::infinity(), |acc, v| acc.min(*v))
    }

    /// Pointwise map.
    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with(&self, other: &Self, f: impl Fn(S, S) -> S) -> Result<Self> {
        self.check_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self {
            grid: self.grid,
            values,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: S) -> Self {
        self.map(|v| c * v)
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: S, other: &Self) {
        debug_assert_eq!(self.grid.len(), other.grid.len());
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Resamples onto `target` covering the same interval. Coinciding nodes
    /// are injected; all other target nodes use 4-point Lagrange (cubic)
    /// interpolation, so the transfer error is O(h^4) for smooth data.
    pub fn resample(&self, target: Grid<S>) -> Self {
        let h = self.grid.spacing();
        let n = self.grid.len();
        let snap = S::lit(1e-9) * h;
        let values = target
            .nodes()
            .map(|x| {
                let pos = x / h;
                let j = pos
                    .round()
                    .to_usize()
                    .unwrap_or(0)
                    .min(n - 1);
                if (x - self.grid.node(j)).abs() <= snap {
                    return self.values[j];
                }
                let i0 = pos.floor().to_usize().unwrap_or(0).min(n - 2);
                let base = i0.saturating_sub(1).min(n - 4);
                let mut acc = S::zero();
                for a in 0..4 {
                    let xa = self.grid.node(base + a);
                    let mut weight = S::one();
                    for b in 0..4 {
                        if a != b {
                            let xb = self.grid.node(base + b);
                            weight = weight * (x - xb) / (xa - xb);
                        }
                    }
                    acc += weight * self.values[base + a];
                }
                acc
            })
            .collect();
        Self {
            grid: target,
            values,
        }
    }
}

/// Trapezoidal quadrature: weights `h/2` at the endpoints, `h` inside.
pub fn integrate<S: Scalar>(p: &GridFunction<S>) -> S {
    let v = p.as_slice();
    let n = v.len();
    let half = S::lit(0.5);
    let mut acc = half * (v[0] + v[n - 1]);
    for &x in &v[1..n - 1] {
        acc += x;
    }
    acc * p.grid().spacing()
}

/// Spatial mean: `integrate(p) / L`.
pub fn mean<S: Scalar>(p: &GridFunction<S>) -> S {
    integrate(p) / p.grid().length()
}

/// Quadrature inner product `sum_i w_i p_i q_i`.
pub fn inner_product<S: Scalar>(p: &GridFunction<S>, q: &GridFunction<S>) -> Result<S> {
    Ok(integrate(&p.zip_with(q, |a, b| a * b)?))
}

/// Conservative second-order divergence of `a * p_x`.
///
/// Face coefficients are arithmetic means of adjacent `a` values; the flux
/// through the outer boundary faces is zero and boundary nodes divide by the
/// half-cell, so the quadrature integral of the output vanishes identically.
pub fn flux_divergence<S: Scalar>(
    a: &GridFunction<S>,
    p: &GridFunction<S>,
) -> Result<GridFunction<S>> {
    if a.grid() != p.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = p.grid();
    let n = grid.len();
    let h = grid.spacing();
    let av = a.as_slice();
    let pv = p.as_slice();
    let half = S::lit(0.5);
    // flux[j] across the face between nodes j and j+1
    let flux: Vec<S> = (0..n - 1)
        .map(|j| half * (av[j] + av[j + 1]) * (pv[j + 1] - pv[j]) / h)
        .collect();
    let two = S::lit(2.0);
    let mut out = vec![S::zero(); n];
    out[0] = two * flux[0] / h;
    for i in 1..n - 1 {
        out[i] = (flux[i] - flux[i - 1]) / h;
    }
    out[n - 1] = -two * flux[n - 2] / h;
    Ok(GridFunction::from_raw(grid, out))
}

/// Discrete Neumann Laplacian: `flux_divergence` with unit coefficient.
pub fn laplacian<S: Scalar>(p: &GridFunction<S>) -> GridFunction<S> {
    let ones = GridFunction::from_fn(p.grid(), |_| S::one());
    flux_divergence(&ones, p).expect("same grid")
}

/// First difference: centered in the interior, one-sided second order at the
/// endpoints.
pub fn first_difference<S: Scalar>(p: &GridFunction<S>) -> GridFunction<S> {
    let grid = p.grid();
    let n = grid.len();
    let h = grid.spacing();
    let v = p.as_slice();
    let half = S::lit(0.5);
    let mut out = vec![S::zero(); n];
    let c3 = S::lit(3.0);
    let c4 = S::lit(4.0);
    out[0] = (-c3 * v[0] + c4 * v[1] - v[2]) * half / h;
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - v[i - 1]) * half / h;
    }
    out[n - 1] = (c3 * v[n - 1] - c4 * v[n - 2] + v[n - 3]) * half / h;
    GridFunction::from_raw(grid, out)
}

/// Second difference: centered in the interior, one-sided second order at the
/// endpoints (so linear functions map to zero everywhere).
pub fn second_difference<S: Scalar>(p: &GridFunction<S>) -> GridFunction<S> {
    let grid = p.grid();
    let n = grid.len();
    let h2 = grid.spacing() * grid.spacing();
    let v = p.as_slice();
    let mut out = vec![S::zero(); n];
    let (c2, c4, c5) = (S::lit(2.0), S::lit(4.0), S::lit(5.0));
    out[0] = (c2 * v[0] - c5 * v[1] + c4 * v[2] - v[3]) / h2;
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - c2 * v[i] + v[i - 1]) / h2;
    }
    out[n - 1] = (c2 * v[n - 1] - c5 * v[n - 2] + c4 * v[n - 3] - v[n - 4]) / h2;
    GridFunction::from_raw(grid, out)
}

/// Third difference: centered second order in the interior, one-sided first
/// order within two nodes of a boundary.
pub fn third_difference<S: Scalar>(p: &GridFunction<S>) -> GridFunction<S> {
    let grid = p.grid();
    let n = grid.len();
    let h3 = grid.spacing().powi(3);
    let v = p.as_slice();
    let mut out = vec![S::zero(); n];
    let (c2, c3) = (S::lit(2.0), S::lit(3.0));
    let half = S::lit(0.5);
    for i in 0..n {
        out[i] = if i < 2 {
            (v[i + 3] - c3 * v[i + 2] + c3 * v[i + 1] - v[i]) / h3
        } else if i > n - 3 {
            (v[i] - c3 * v[i - 1] + c3 * v[i - 2] - v[i - 3]) / h3
        } else {
            (v[i + 2] - c2 * v[i + 1] + c2 * v[i - 1] - v[i - 2]) * half / h3
        };
    }
    GridFunction::from_raw(grid, out)
}

/// Fourth difference: centered second order in the interior, one-sided first
/// order near the boundaries. Enters only viscosity-weighted diagnostics.
pub fn fourth_difference<S: Scalar>(p: &GridFunction<S>) -> GridFunction<S> {
    let grid = p.grid();
    let n = grid.len();
    let h4 = grid.spacing().powi(4);
    let v = p.as_slice();
    let mut out = vec![S::zero(); n];
    let (c4, c6) = (S::lit(4.0), S::lit(6.0));
    for i in 0..n {
        out[i] = if i < 2 {
            (v[i + 4] - c4 * v[i + 3] + c6 * v[i + 2] - c4 * v[i + 1] + v[i]) / h4
        } else if i > n - 3 {
            (v[i] - c4 * v[i - 1] + c6 * v[i - 2] - c4 * v[i - 3] + v[i - 4]) / h4
        } else {
            (v[i + 2] - c4 * v[i + 1] + c6 * v[i] - c4 * v[i - 1] + v[i - 2]) / h4
        };
    }
    GridFunction::from_raw(grid, out)
}

/// Face-based gradient seminorm `sqrt(sum_faces (p_{i+1}-p_i)^2 / h)`.
///
/// Coincides with the Dirichlet form of the discrete Neumann Laplacian, so a
/// cosine eigenmode satisfies `seminorm^2 = lambda_k * ||p||_L2^2` exactly.
pub fn dirichlet_seminorm<S: Scalar>(p: &GridFunction<S>) -> S {
    let v = p.as_slice();
    let h = p.grid().spacing();
    let mut acc = S::zero();
    for j in 0..v.len() - 1 {
        let d = v[j + 1] - v[j];
        acc += d * d;
    }
    (acc / h).sqrt()
}

/// Discrete Sobolev norms of a grid function.
#[derive(Debug, Clone, Copy)]
pub struct SobolevNorms<S> {
    pub l2: S,
    pub linf: S,
    pub h1_seminorm: S,
    pub h2_seminorm: S,
    pub w2inf: S,
}

impl<S: Scalar> SobolevNorms<S> {
    pub fn w12(&self) -> S {
        (self.l2 * self.l2 + self.h1_seminorm * self.h1_seminorm).sqrt()
    }

    pub fn w22(&self) -> S {
        (self.l2 * self.l2
            + self.h1_seminorm * self.h1_seminorm
            + self.h2_seminorm * self.h2_seminorm)
            .sqrt()
    }
}

/// L2 and L-infinity norms of `p` together with first/second difference
/// seminorms; `w2inf` is the max over nodes of `|p|`, `|p_x|`, `|p_xx|`.
pub fn sobolev_norms<S: Scalar>(p: &GridFunction<S>) -> SobolevNorms<S> {
    let px = first_difference(p);
    let pxx = second_difference(p);
    let sq = |q: &GridFunction<S>| integrate(&q.map(|v| v * v)).max(S::zero()).sqrt();
    SobolevNorms {
        l2: sq(p),
        linf: p.max_norm(),
        h1_seminorm: sq(&px),
        h2_seminorm: sq(&pxx),
        w2inf: p.max_norm().max(px.max_norm()).max(pxx.max_norm()),
    }
}

/// L1 norm by quadrature.
pub fn l1_norm<S: Scalar>(p: &GridFunction<S>) -> S {
    integrate(&p.map(|v| v.abs()))
}
