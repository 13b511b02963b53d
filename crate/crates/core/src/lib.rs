//! Simulation and verification toolkit for a one-dimensional thermoviscoelastic
//! wave model of Moore-Gibson-Thompson type coupled to a heat equation,
//!
//! ```text
//! u_ttt + alpha u_tt = (gamma(T) u_xt)_x + (ghat(T) u_x)_x
//! T_t = D T_xx + Gamma(T) u_xt^2
//! ```
//!
//! on an interval with zero-flux boundaries, written as a first-order system
//! in (u, v = u_t, w = u_tt, T). The crate provides
//!
//! - [`model`]: material parameters (standard linear solid / Zener form),
//!   temperature-dependent coefficient functions and initial data,
//! - [`grid`]: conservative finite-difference calculus and an exact discrete
//!   heat semigroup on a uniform Neumann grid,
//! - [`dynamics`]: semi-implicit and explicit RK4 time integration of the
//!   (optionally viscosity-regularized) first-order system,
//! - [`diagnostics`]: energy functionals, balance-identity residuals,
//!   Riccati and blow-up monitors, and a twin-run difference functional,
//! - [`picard`]: a Duhamel fixed-point solver for the regularized system on a
//!   short horizon, with empirical semigroup constants and smallness bounds,
//! - [`experiments`]: refinement, viscosity-limit, uniqueness and blow-up
//!   verification campaigns,
//! - [`manufactured`]: a manufactured solution with analytic source terms.
//!
//! All numerics are generic over the scalar type through [`Scalar`];
//! concrete `f64` aliases live at the crate root.

use std::fmt;
use std::iter::Sum;

use num_traits::float::FloatConst;
use num_traits::{Float, FromPrimitive};

pub mod diagnostics;
pub mod dynamics;
mod error;
pub mod experiments;
pub mod grid;
pub mod manufactured;
pub mod model;
pub mod picard;

pub use error::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Floating-point scalar the solvers are generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + Sum<Self>
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + std::ops::DivAssign
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, for literals and tolerances.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal not representable")
    }

    /// Conversion from a node or sample count.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize not representable")
    }

    /// Lossy view as `f64`, for reporting and error payloads.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + Sum<T>
        + std::ops::AddAssign
        + std::ops::SubAssign
        + std::ops::MulAssign
        + std::ops::DivAssign
        + fmt::Debug
        + fmt::Display
        + Send
        + Sync
        + 'static
{
}

/// Default scalar for production runs.
pub type Real = f64;

pub type Grid64 = grid::Grid<Real>;
pub type GridFunction64 = grid::GridFunction<Real>;
pub type CoefficientSet64 = model::CoefficientSet<Real>;
pub type State64 = dynamics::State<Real>;
pub type Trajectory64 = dynamics::Trajectory<Real>;
