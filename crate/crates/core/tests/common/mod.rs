//! Shared oracles and reference configurations for the integration suites.
//!
//! Everything here is deliberately independent of the library's solution
//! path: the matrix exponential is a dense scaling-and-squaring Taylor
//! evaluation, and the modal oracle integrates the 3x3 companion ODE with a
//! tiny-step classical RK4.

#![allow(dead_code)]

use mgtsim_core::dynamics::{FieldDistances, State};
use mgtsim_core::grid::{Grid, GridFunction};
use mgtsim_core::model::{CoefficientSet, CoefficientSpec, InitialSpecs, ProfileSpec};

/// Dense matrix representation of the discrete zero-flux Laplacian, written
/// out from the stencil definition (interior `[1, -2, 1]/h^2`, half-cell
/// boundary rows `[-2, 2]/h^2`).
pub fn dense_neumann_laplacian(n: usize, length: f64) -> Vec<Vec<f64>> {
    let h = length / (n - 1) as f64;
    let h2 = h * h;
    let mut a = vec![vec![0.0; n]; n];
    a[0][0] = -2.0 / h2;
    a[0][1] = 2.0 / h2;
    for i in 1..n - 1 {
        a[i][i - 1] = 1.0 / h2;
        a[i][i] = -2.0 / h2;
        a[i][i + 1] = 1.0 / h2;
    }
    a[n - 1][n - 2] = 2.0 / h2;
    a[n - 1][n - 1] = -2.0 / h2;
    a
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik != 0.0 {
                for j in 0..n {
                    out[i][j] += aik * b[k][j];
                }
            }
        }
    }
    out
}

fn mat_scale(a: &[Vec<f64>], c: f64) -> Vec<Vec<f64>> {
    a.iter()
        .map(|row| row.iter().map(|v| c * v).collect())
        .collect()
}

fn mat_add_identity(a: &mut [Vec<f64>]) {
    for (i, row) in a.iter_mut().enumerate() {
        row[i] += 1.0;
    }
}

fn inf_norm(a: &[Vec<f64>]) -> f64 {
    a.iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Brute-force `exp(M)` by scaling and squaring with a Taylor series.
pub fn matrix_exponential(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let norm = inf_norm(m);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = mat_scale(m, 1.0 / 2f64.powi(squarings as i32));
    // exp(B) = sum_k B^k / k!
    let mut result = vec![vec![0.0; n]; n];
    mat_add_identity(&mut result);
    let mut term = vec![vec![0.0; n]; n];
    mat_add_identity(&mut term);
    for k in 1..=30 {
        term = mat_scale(&mat_mul(&term, &scaled), 1.0 / k as f64);
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
        if inf_norm(&term) < 1e-22 {
            break;
        }
    }
    let mut out = result;
    for _ in 0..squarings {
        out = mat_mul(&out, &out);
    }
    out
}

pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(m, v)| m * v).sum())
        .collect()
}

/// High-accuracy solution of the single-mode companion system
/// `a''' + alpha a'' = -lambda a' - lambda a` with `a(0) = a0`, `a'(0) = a1`,
/// `a''(0) = a2`, integrated by classical RK4 with step `dt`.
pub fn modal_ode_solution(alpha: f64, lambda: f64, init: [f64; 3], t_end: f64, dt: f64) -> [f64; 3] {
    let f = |y: [f64; 3]| [y[1], y[2], -alpha * y[2] - lambda * y[1] - lambda * y[0]];
    let mut y = init;
    let mut t = 0.0;
    while t < t_end - 1e-14 {
        let h = dt.min(t_end - t);
        let k1 = f(y);
        let k2 = f(add(y, scale(k1, 0.5 * h)));
        let k3 = f(add(y, scale(k2, 0.5 * h)));
        let k4 = f(add(y, scale(k3, h)));
        for i in 0..3 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
    }
    y
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn scale(a: [f64; 3], c: f64) -> [f64; 3] {
    [a[0] * c, a[1] * c, a[2] * c]
}

/// Modal state `a(t) cos(k pi x / L)` as a grid-sampled state.
pub fn modal_state(grid: Grid<f64>, mode: usize, amps: [f64; 3], t: f64) -> State<f64> {
    let k = mode as f64 * std::f64::consts::PI / grid.length();
    State {
        t,
        u: GridFunction::from_fn(grid, |x| amps[0] * (k * x).cos()),
        v: GridFunction::from_fn(grid, |x| amps[1] * (k * x).cos()),
        w: GridFunction::from_fn(grid, |x| amps[2] * (k * x).cos()),
        theta: GridFunction::zeros(grid),
    }
}

/// Reference small-data configuration: unit constant coefficients with
/// damping, mean-free cosine data.
pub fn reference_specs() -> InitialSpecs<f64> {
    InitialSpecs {
        u0: ProfileSpec::cosine(1, 0.1),
        u0t: ProfileSpec::cosine(2, 0.05),
        u0tt: ProfileSpec::Zero,
        theta0: ProfileSpec::Zero,
        remove_means: true,
    }
}

pub fn reference_coeffs(gamma_src: f64) -> CoefficientSet<f64> {
    CoefficientSet::constant(1.0, 1.0, 1.0, 1.0, gamma_src)
}

/// Smooth temperature-coupled configuration used by the identity and
/// refinement studies.
pub fn smooth_specs() -> InitialSpecs<f64> {
    InitialSpecs {
        u0: ProfileSpec::cosine(1, 0.1),
        u0t: ProfileSpec::cosine(2, 0.05),
        u0tt: ProfileSpec::Zero,
        theta0: ProfileSpec::CosineSum {
            terms: vec![
                mgtsim_core::model::CosineTerm {
                    mode: 0,
                    amplitude: 0.05,
                },
                mgtsim_core::model::CosineTerm {
                    mode: 1,
                    amplitude: 0.05,
                },
            ],
        },
        remove_means: false,
    }
}

pub fn smooth_coeffs() -> CoefficientSet<f64> {
    CoefficientSet::from_specs(
        1.0,
        1.0,
        CoefficientSpec::Polynomial {
            coeffs: vec![1.0, 0.2],
        },
        CoefficientSpec::Polynomial {
            coeffs: vec![1.0, 0.1],
        },
        CoefficientSpec::Polynomial {
            coeffs: vec![0.3, 0.3],
        },
    )
    .unwrap()
}

/// Relative max distance between two states, scaled by the larger field
/// amplitude of the reference.
pub fn relative_distance(num: &State<f64>, exact: &State<f64>) -> f64 {
    let d: FieldDistances<f64> = num.max_distance(exact).unwrap();
    let scale = exact
        .u
        .max_norm()
        .max(exact.v.max_norm())
        .max(exact.w.max_norm())
        .max(exact.theta.max_norm())
        .max(1e-300);
    d.u.max(d.v).max(d.w) / scale
}
