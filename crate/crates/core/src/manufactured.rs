//! Manufactured solution for order-of-accuracy verification.
//!
//! The fields
//!
//! ```text
//! u*(x, t) = cos(pi x / L) cos(t)
//! T*(x, t) = 1 + cos(pi x / L) exp(-t)
//! ```
//!
//! are exactly Neumann-compatible and `T* >= 0`. Substituting them into the
//! unregularized system yields closed-form forcings `f_u`, `f_T` such that
//! `(u*, T*)` solves the forced problem; the discretization error of a run
//! against these fields then isolates the scheme's accuracy.

use std::sync::Arc;

use crate::dynamics::{SourceTerms, State};
use crate::grid::{Grid, GridFunction};
use crate::model::{CoefficientSet, CosineTerm, InitialSpecs, ProfileSpec};
use crate::Scalar;

/// Bundles the exact fields and their induced source terms.
#[derive(Debug, Clone)]
pub struct ManufacturedSolution<S> {
    length: S,
    coeffs: CoefficientSet<S>,
}

impl<S: Scalar> ManufacturedSolution<S> {
    pub fn new(length: S, coeffs: CoefficientSet<S>) -> Self {
        Self { length, coeffs }
    }

    fn wavenumber(&self) -> S {
        S::PI() / self.length
    }

    /// Profile specs of the exact fields at `t = 0`.
    pub fn initial_specs(&self) -> InitialSpecs<S> {
        InitialSpecs {
            u0: ProfileSpec::cosine(1, S::one()),
            u0t: ProfileSpec::Zero,
            u0tt: ProfileSpec::cosine(1, -S::one()),
            theta0: ProfileSpec::CosineSum {
                terms: vec![
                    CosineTerm {
                        mode: 0,
                        amplitude: S::one(),
                    },
                    CosineTerm {
                        mode: 1,
                        amplitude: S::one(),
                    },
                ],
            },
            remove_means: false,
        }
    }

    /// Exact state sampled on a grid.
    pub fn exact_state(&self, grid: Grid<S>, t: S) -> State<S> {
        let k = self.wavenumber();
        let (ct, st, et) = (t.cos(), t.sin(), (-t).exp());
        State {
            t,
            u: GridFunction::from_fn(grid, |x| (k * x).cos() * ct),
            v: GridFunction::from_fn(grid, |x| -(k * x).cos() * st),
            w: GridFunction::from_fn(grid, |x| -(k * x).cos() * ct),
            theta: GridFunction::from_fn(grid, |x| S::one() + (k * x).cos() * et),
        }
    }

    /// Closed-form forcings obtained by substituting the exact fields into
    /// the system with these coefficients.
    pub fn sources(&self) -> SourceTerms<S> {
        let k = self.wavenumber();
        let alpha = self.coeffs.alpha;
        let d = self.coeffs.d;
        let gamma = self.coeffs.gamma.clone();
        let ghat = self.coeffs.ghat.clone();
        let gamma_src = self.coeffs.gamma_src.clone();

        let f_u = Arc::new(move |x: S, t: S| {
            let (ct, st, et) = (t.cos(), t.sin(), (-t).exp());
            let phi = (k * x).cos();
            let sin_kx = (k * x).sin();
            let theta = S::one() + phi * et;
            let sin2 = k * k * sin_kx * sin_kx;
            phi * st - alpha * phi * ct + gamma.deriv1(theta) * sin2 * et * st
                - gamma.value(theta) * k * k * phi * st
                - ghat.deriv1(theta) * sin2 * et * ct
                + ghat.value(theta) * k * k * phi * ct
        });
        let f_theta = Arc::new(move |x: S, t: S| {
            let (st, et) = (t.sin(), (-t).exp());
            let phi = (k * x).cos();
            let sin_kx = (k * x).sin();
            let theta = S::one() + phi * et;
            -phi * et + d * k * k * phi * et
                - gamma_src.value(theta) * k * k * sin_kx * sin_kx * st * st
        });
        SourceTerms {
            f_u: Some(f_u),
            f_theta: Some(f_theta),
        }
    }

    /// Field-wise max-norm error of a state against the exact fields.
    pub fn error(&self, s: &State<S>) -> crate::dynamics::FieldDistances<S> {
        let exact = self.exact_state(s.grid(), s.t);
        s.max_distance(&exact).expect("same grid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::rhs;
    use crate::grid::Grid;
    use crate::model::CoefficientSpec;

    fn coeffs() -> CoefficientSet<f64> {
        CoefficientSet::from_specs(
            1.5,
            0.8,
            CoefficientSpec::Polynomial {
                coeffs: vec![1.0, 0.25],
            },
            CoefficientSpec::Polynomial {
                coeffs: vec![0.8, 0.1],
            },
            CoefficientSpec::constant(0.4),
        )
        .unwrap()
    }

    #[test]
    fn initial_specs_match_exact_state() {
        let mms = ManufacturedSolution::new(1.0, coeffs());
        let grid = Grid::new(1.0, 64).unwrap();
        let init = mms.initial_specs().build(grid).unwrap();
        let exact = mms.exact_state(grid, 0.0);
        assert!(init.u0.sub(&exact.u).unwrap().max_norm() <= 1e-13);
        assert!(init.u0t.sub(&exact.v).unwrap().max_norm() <= 1e-13);
        assert!(init.u0tt.sub(&exact.w).unwrap().max_norm() <= 1e-13);
        assert!(init.theta0.sub(&exact.theta).unwrap().max_norm() <= 1e-13);
        assert!(init.theta0.min_value() >= 0.0);
    }

    #[test]
    fn sources_close_the_system_to_second_order() {
        // With the manufactured forcings, the rhs evaluated at the exact
        // state must equal the exact time derivatives up to O(h^2).
        let mms = ManufacturedSolution::new(1.0, coeffs());
        let src = mms.sources();
        let c = coeffs();
        let t = 0.37;
        let residual = |n: usize| {
            let grid = Grid::new(1.0, n).unwrap();
            let s = mms.exact_state(grid, t);
            let tend = rhs(&s, &c, 0.0, &src).unwrap();
            let k = std::f64::consts::PI / 1.0;
            let (ct, st, et) = (t.cos(), t.sin(), (-t).exp());
            let du_exact = GridFunction::from_fn(grid, |x| -(k * x).cos() * st);
            let dv_exact = GridFunction::from_fn(grid, |x| -(k * x).cos() * ct);
            let dw_exact = GridFunction::from_fn(grid, |x| (k * x).cos() * st);
            let dtheta_exact = GridFunction::from_fn(grid, |x| -(k * x).cos() * et);
            tend.du
                .sub(&du_exact)
                .unwrap()
                .max_norm()
                .max(tend.dv.sub(&dv_exact).unwrap().max_norm())
                .max(tend.dw.sub(&dw_exact).unwrap().max_norm())
                .max(tend.dtheta.sub(&dtheta_exact).unwrap().max_norm())
        };
        let order = (residual(64) / residual(128)).log2();
        assert!(order >= 1.8, "observed order {order}");
    }
}
