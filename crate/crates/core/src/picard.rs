//! Duhamel fixed-point construction for the viscosity-regularized system on
//! a short horizon.
//!
//! The iteration acts on time-sampled quadruples `(w, v, u, T)` through the
//! four maps
//!
//! ```text
//! Phi_1(t) = e^{eps t L} w0 + int_0^t e^{eps (t-s) L} div{gamma(T) v_x + ghat(T) u_x} ds
//!          - alpha int_0^t e^{eps (t-s) L} w ds
//! Phi_2(t) = e^{eps t L} v0 + int_0^t e^{eps (t-s) L} w ds
//! Phi_3(t) = e^{eps t L} u0 + int_0^t e^{eps (t-s) L} v ds
//! Phi_4(t) = e^{D t L} T0   + int_0^t e^{D (t-s) L} Gamma(T) v_x^2 ds
//! ```
//!
//! realized with the exact discrete semigroup in mode space and uniform
//! trapezoidal time quadrature (the divergence falls on the bounded flux
//! before the semigroup, so no singular kernel appears). The admissible
//! horizon comes from smallness conditions driven by empirical smoothing
//! constants of the discrete semigroup,
//!
//! ```text
//! 4 c3 (sup gamma + sup ghat) R T^1/4 + alpha R T <= 1,   2 c1 R T^1/2 <= 1,
//! R T <= 1,                          2 c2 (sup Gamma) R^2 T^1/2 <= 1,
//! ```
//!
//! with `R` one plus the initial-data norm in the mixed space that takes the
//! max norm for `w`, `T` and `W^{1,2}` for `v`, `u`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::heating_gradient;
use crate::grid::{
    dirichlet_seminorm, flux_divergence, integrate, l1_norm, CosineBasis, Grid, GridFunction,
};
use crate::model::{CoefficientSet, InitialData};
use crate::{Error, Result, Scalar};

/// Empirical smoothing constants of the discrete semigroup; grid-dependent
/// estimates, not certified bounds.
#[derive(Debug, Clone, Copy, serde::Serialize)]
#[serde(bound = "S: serde::Serialize")]
pub struct SemigroupConstants<S> {
    /// sup-to-`W^{1,2}` smoothing with rate `t^{-1/2}` (viscous semigroup).
    pub c1: S,
    /// `L^1`-to-sup smoothing with rate `t^{-1/2}` (thermal semigroup).
    pub c2: S,
    /// derivative composition `e^{eps t L} d_x` with rate `t^{-3/4}`.
    pub c3: S,
}

/// `W^{1,2}` norm with the face-based gradient seminorm, so a cosine mode
/// satisfies `norm^2 = (1 + lambda_k) ||.||_L2^2` exactly.
pub fn w12_norm<S: Scalar>(p: &GridFunction<S>) -> S {
    let l2sq = integrate(&p.map(|v| v * v));
    let g = dirichlet_seminorm(p);
    (l2sq + g * g).sqrt()
}

fn l2_norm<S: Scalar>(p: &GridFunction<S>) -> S {
    integrate(&p.map(|v| v * v)).max(S::zero()).sqrt()
}

/// Mixed norm: max norm for `w` and `T`, `W^{1,2}` for `v` and `u`.
pub fn x0_norm<S: Scalar>(
    w: &GridFunction<S>,
    v: &GridFunction<S>,
    u: &GridFunction<S>,
    theta: &GridFunction<S>,
) -> S {
    w.max_norm()
        .max(w12_norm(v))
        .max(w12_norm(u))
        .max(theta.max_norm())
}

fn sample_times<S: Scalar>() -> Vec<S> {
    // log-spaced in (0, 1]
    (0..40)
        .map(|j| S::lit(10f64.powf(-4.0 + 4.0 * j as f64 / 39.0)))
        .collect()
}

/// Probes the discrete semigroup with cosine modes and seeded random fields
/// (normalized to unit max norm) over sampled times in `(0, 1]` and records
/// the largest rate-weighted amplification for each of the three estimates.
pub fn estimate_semigroup_constants<S: Scalar>(
    grid: Grid<S>,
    eps: S,
    d: S,
    seed: u64,
) -> SemigroupConstants<S> {
    let basis = CosineBasis::new(grid);
    let n = grid.len();
    let mut probes: Vec<GridFunction<S>> = Vec::new();
    for k in [0usize, 1, 2, 3, 5, 8, 13, n / 2, n - 1] {
        if k < n {
            probes.push(basis.mode(k));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..4 {
        let values: Vec<S> = (0..n).map(|_| S::lit(rng.gen_range(-1.0..1.0))).collect();
        let raw = GridFunction::from_values(grid, values).expect("finite samples");
        let norm = raw.max_norm().max(S::lit(1e-12));
        probes.push(raw.scale(S::one() / norm));
    }

    let times = sample_times::<S>();
    let (mut c1, mut c2, mut c3) = (S::zero(), S::zero(), S::zero());
    for phi in &probes {
        let linf = phi.max_norm().max(S::lit(1e-300));
        let l1 = l1_norm(phi).max(S::lit(1e-300));
        let l2 = l2_norm(phi).max(S::lit(1e-300));
        let dphi = heating_gradient(phi);
        for &t in &times {
            let smoothed_eps = basis.apply_semigroup(eps, t, phi);
            c1 = c1.max(t.sqrt() * w12_norm(&smoothed_eps) / linf);
            let smoothed_d = basis.apply_semigroup(d, t, phi);
            c2 = c2.max(t.sqrt() * smoothed_d.max_norm() / l1);
            let smoothed_grad = basis.apply_semigroup(eps, t, &dphi);
            c3 = c3.max(t.powf(S::lit(0.75)) * smoothed_grad.max_norm() / l2);
        }
    }
    SemigroupConstants { c1, c2, c3 }
}

fn sup_on_ball<S: Scalar>(coef: &crate::model::Coefficient<S>, radius: S) -> S {
    // constant continuation below zero: the sup over [-R, R] is the sup
    // over [0, R].
    let samples = 2049usize;
    let mut sup = S::zero();
    for i in 0..samples {
        let t = radius * S::of_usize(i) / S::of_usize(samples - 1);
        sup = sup.max(coef.value(t).abs());
    }
    sup
}

/// Largest admissible horizon in `(0, 1)` satisfying the four smallness
/// conditions, located by bisection to absolute accuracy `1e-12`.
pub fn compute_t0<S: Scalar>(
    r: S,
    sg: &SemigroupConstants<S>,
    c: &CoefficientSet<S>,
    alpha: S,
) -> S {
    let sup_gamma = sup_on_ball(&c.gamma, r);
    let sup_ghat = sup_on_ball(&c.ghat, r);
    let sup_src = sup_on_ball(&c.gamma_src, r);
    let two = S::lit(2.0);
    let four = S::lit(4.0);
    let quarter = S::lit(0.25);
    let feasible = |t: S| -> bool {
        four * sg.c3 * (sup_gamma + sup_ghat) * r * t.powf(quarter) + alpha * r * t <= S::one()
            && two * sg.c1 * r * t.sqrt() <= S::one()
            && r * t <= S::one()
            && two * sg.c2 * sup_src * r * r * t.sqrt() <= S::one()
    };
    let mut lo = S::zero();
    let mut hi = S::one();
    if feasible(hi) {
        return hi;
    }
    for _ in 0..80 {
        let mid = S::lit(0.5) * (lo + hi);
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Fixed-point solver configuration.
#[derive(Debug, Clone, Copy)]
pub struct PicardConfig<S> {
    /// Viscosity, > 0.
    pub eps: S,
    /// Ball radius, at least the initial-data norm plus one.
    pub r: S,
    /// Admissible horizon from the smallness conditions.
    pub t0: S,
    /// Chosen horizon, 0 < t <= t0.
    pub t: S,
    /// Number of uniform time intervals (samples are `n_time + 1`).
    pub n_time: usize,
    pub max_iter: usize,
    /// Sup-norm convergence tolerance in the mixed norm.
    pub tol: S,
}

impl<S: Scalar> PicardConfig<S> {
    /// Builds a configuration for the given problem: `R` from the data,
    /// `T0` from the smallness conditions, `T = fraction * T0`.
    pub fn for_problem(
        init: &InitialData<S>,
        c: &CoefficientSet<S>,
        eps: S,
        sg: &SemigroupConstants<S>,
        t_fraction: S,
        n_time: usize,
        max_iter: usize,
        tol: S,
    ) -> Result<Self> {
        if !(eps > S::zero()) {
            return Err(Error::InvalidSpec(format!(
                "picard solver needs eps > 0, got {eps}"
            )));
        }
        if !(t_fraction > S::zero() && t_fraction <= S::one()) {
            return Err(Error::InvalidSpec(format!(
                "horizon fraction must lie in (0, 1], got {t_fraction}"
            )));
        }
        let r = x0_norm(&init.u0tt, &init.u0t, &init.u0, &init.theta0) + S::one();
        let t0 = compute_t0(r, sg, c, c.alpha);
        Ok(Self {
            eps,
            r,
            t0,
            t: t_fraction * t0,
            n_time: n_time.max(8),
            max_iter: max_iter.max(2),
            tol,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > S::zero()) {
            return Err(Error::InvalidSpec("eps must be > 0".into()));
        }
        if !(self.t > S::zero() && self.t <= self.t0) {
            return Err(Error::InvalidSpec(format!(
                "horizon must satisfy 0 < t <= t0 = {}, got {}",
                self.t0, self.t
            )));
        }
        if !(self.tol > S::zero()) {
            return Err(Error::InvalidSpec("tol must be > 0".into()));
        }
        Ok(())
    }
}

/// One time sample of the quadruple.
#[derive(Debug, Clone)]
pub struct QuadSample<S> {
    pub w: GridFunction<S>,
    pub v: GridFunction<S>,
    pub u: GridFunction<S>,
    pub theta: GridFunction<S>,
}

/// Uniformly time-sampled quadruple on `[0, T]`.
#[derive(Debug, Clone)]
pub struct PicardIterate<S> {
    pub times: Vec<S>,
    pub samples: Vec<QuadSample<S>>,
}

impl<S: Scalar> PicardIterate<S> {
    /// Constant-in-time extension of the initial data.
    pub fn from_initial(init: &InitialData<S>, t_end: S, n_time: usize) -> Self {
        let times: Vec<S> = (0..=n_time)
            .map(|j| t_end * S::of_usize(j) / S::of_usize(n_time))
            .collect();
        let sample = QuadSample {
            w: init.u0tt.clone(),
            v: init.u0t.clone(),
            u: init.u0.clone(),
            theta: init.theta0.clone(),
        };
        Self {
            samples: vec![sample; times.len()],
            times,
        }
    }

    pub fn grid(&self) -> Grid<S> {
        self.samples[0].u.grid()
    }

    /// Largest mixed norm over the sample times.
    pub fn sup_x0_norm(&self) -> S {
        self.samples
            .iter()
            .map(|q| x0_norm(&q.w, &q.v, &q.u, &q.theta))
            .fold(S::zero(), |a, b| a.max(b))
    }

    /// Sup over times of the mixed norm of the sample-wise difference.
    pub fn sup_x0_distance(&self, other: &Self) -> Result<S> {
        if self.samples.len() != other.samples.len() {
            return Err(Error::TimeMismatch);
        }
        let mut acc = S::zero();
        for (a, b) in self.samples.iter().zip(&other.samples) {
            let dw = a.w.sub(&b.w)?;
            let dv = a.v.sub(&b.v)?;
            let du = a.u.sub(&b.u)?;
            let dtheta = a.theta.sub(&b.theta)?;
            acc = acc.max(x0_norm(&dw, &dv, &du, &dtheta));
        }
        Ok(acc)
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|q| {
            q.w.is_finite() && q.v.is_finite() && q.u.is_finite() && q.theta.is_finite()
        })
    }
}

struct ModeSeries<S> {
    /// `coeffs[j][k]`: mode-`k` coefficient of the field at sample `j`.
    coeffs: Vec<Vec<S>>,
}

fn transform_all<S: Scalar>(
    basis: &CosineBasis<S>,
    fields: impl Iterator<Item = GridFunction<S>>,
) -> ModeSeries<S> {
    ModeSeries {
        coeffs: fields.map(|f| basis.forward(&f)).collect(),
    }
}

/// Trapezoidal Duhamel sum in mode space:
/// `sum_i wgt_i decay[(j-i)][k] q[i][k] * ds` for target sample `j`.
fn duhamel_sum<S: Scalar>(
    decay: &[Vec<S>],
    series: &ModeSeries<S>,
    j: usize,
    ds: S,
    out: &mut [S],
) {
    out.iter_mut().for_each(|o| *o = S::zero());
    if j == 0 {
        return;
    }
    let half = S::lit(0.5);
    for i in 0..=j {
        let wgt = if i == 0 || i == j { half * ds } else { ds };
        let dec = &decay[j - i];
        let q = &series.coeffs[i];
        for (k, o) in out.iter_mut().enumerate() {
            *o += wgt * dec[k] * q[k];
        }
    }
}

/// Applies the four Duhamel maps to a time-sampled iterate.
pub fn duhamel_map<S: Scalar>(
    iterate: &PicardIterate<S>,
    init: &InitialData<S>,
    c: &CoefficientSet<S>,
    eps: S,
) -> Result<PicardIterate<S>> {
    let basis = CosineBasis::new(iterate.grid());
    duhamel_map_in_basis(iterate, init, c, eps, &basis)
}

/// [`duhamel_map`] with a caller-provided transform basis, for repeated use.
#[allow(clippy::needless_range_loop)]
pub fn duhamel_map_in_basis<S: Scalar>(
    iterate: &PicardIterate<S>,
    init: &InitialData<S>,
    c: &CoefficientSet<S>,
    eps: S,
    basis: &CosineBasis<S>,
) -> Result<PicardIterate<S>> {
    let grid = iterate.grid();
    if init.u0.grid() != grid || basis.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if !iterate.is_finite() {
        return Err(Error::NonFiniteState {
            field: "picard iterate",
            t: f64::NAN,
        });
    }
    let n = grid.len();
    let m = iterate.samples.len() - 1;
    let ds = (iterate.times[m] - iterate.times[0]) / S::of_usize(m);

    // Flux divergence and heating of every sample, then everything to modes.
    let flux = transform_all(
        basis,
        iterate.samples.iter().map(|q| {
            let gamma_f = c.gamma.eval_field(&q.theta);
            let ghat_f = c.ghat.eval_field(&q.theta);
            let mut f = flux_divergence(&gamma_f, &q.v).expect("same grid");
            f.axpy(
                S::one(),
                &flux_divergence(&ghat_f, &q.u).expect("same grid"),
            );
            f
        }),
    );
    let heat = transform_all(
        basis,
        iterate.samples.iter().map(|q| {
            let vx = heating_gradient(&q.v);
            c.gamma_src
                .eval_field(&q.theta)
                .zip_with(&vx, |g, d| g * d * d)
                .expect("same grid")
        }),
    );
    let w_modes = transform_all(basis, iterate.samples.iter().map(|q| q.w.clone()));
    let v_modes = transform_all(basis, iterate.samples.iter().map(|q| q.v.clone()));

    let w0_hat = basis.forward(&init.u0tt);
    let v0_hat = basis.forward(&init.u0t);
    let u0_hat = basis.forward(&init.u0);
    let theta0_hat = basis.forward(&init.theta0);

    // decay[m][k] = exp(-kappa lambda_k m ds)
    let decay_table = |kappa: S| -> Vec<Vec<S>> {
        (0..=m)
            .map(|step| basis.decay_factors(kappa, ds * S::of_usize(step)))
            .collect()
    };
    let decay_eps = decay_table(eps);
    let decay_d = decay_table(c.d);

    let mut samples = Vec::with_capacity(m + 1);
    let mut acc = vec![S::zero(); n];
    let mut phi_hat = vec![S::zero(); n];
    for j in 0..=m {
        // Phi_1
        duhamel_sum(&decay_eps, &flux, j, ds, &mut acc);
        for k in 0..n {
            phi_hat[k] = decay_eps[j][k] * w0_hat[k] + acc[k];
        }
        duhamel_sum(&decay_eps, &w_modes, j, ds, &mut acc);
        for k in 0..n {
            phi_hat[k] -= c.alpha * acc[k];
        }
        let w_new = basis.inverse(&phi_hat);

        // Phi_2
        duhamel_sum(&decay_eps, &w_modes, j, ds, &mut acc);
        for k in 0..n {
            phi_hat[k] = decay_eps[j][k] * v0_hat[k] + acc[k];
        }
        let v_new = basis.inverse(&phi_hat);

        // Phi_3: initial term uses the u-equation's own datum.
        duhamel_sum(&decay_eps, &v_modes, j, ds, &mut acc);
        for k in 0..n {
            phi_hat[k] = decay_eps[j][k] * u0_hat[k] + acc[k];
        }
        let u_new = basis.inverse(&phi_hat);

        // Phi_4
        duhamel_sum(&decay_d, &heat, j, ds, &mut acc);
        for k in 0..n {
            phi_hat[k] = decay_d[j][k] * theta0_hat[k] + acc[k];
        }
        let theta_new = basis.inverse(&phi_hat);

        samples.push(QuadSample {
            w: w_new,
            v: v_new,
            u: u_new,
            theta: theta_new,
        });
    }
    let out = PicardIterate {
        times: iterate.times.clone(),
        samples,
    };
    if !out.is_finite() {
        return Err(Error::NonFiniteState {
            field: "duhamel output",
            t: f64::NAN,
        });
    }
    Ok(out)
}

/// Per-iteration convergence diagnostics and the final iterate.
#[derive(Debug, Clone)]
pub struct PicardReport<S> {
    pub iterate: PicardIterate<S>,
    /// Successive sup-differences in the mixed norm.
    pub diffs: Vec<S>,
    /// Contraction ratios `diff_k / diff_{k-1}`.
    pub ratios: Vec<S>,
    /// Sup mixed norm of each iterate (ball occupancy).
    pub sup_norms: Vec<S>,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates the Duhamel maps from the constant-in-time extension of the
/// initial data until the sup-difference falls below `tol`.
pub fn picard_solve<S: Scalar>(
    init: &InitialData<S>,
    c: &CoefficientSet<S>,
    cfg: &PicardConfig<S>,
) -> Result<PicardReport<S>> {
    cfg.validate()?;
    let mut current = PicardIterate::from_initial(init, cfg.t, cfg.n_time);
    let basis = CosineBasis::new(current.grid());
    let mut diffs = Vec::new();
    let mut ratios = Vec::new();
    let mut sup_norms = vec![current.sup_x0_norm()];
    let mut consecutive_expanding = 0usize;

    for iter in 1..=cfg.max_iter {
        let next = duhamel_map_in_basis(&current, init, c, cfg.eps, &basis)?;
        let diff = next.sup_x0_distance(&current)?;
        sup_norms.push(next.sup_x0_norm());
        if let Some(&prev) = diffs.last() {
            if prev > S::zero() {
                let ratio = diff / prev;
                ratios.push(ratio);
                if ratio >= S::one() {
                    consecutive_expanding += 1;
                    if consecutive_expanding >= 3 {
                        return Err(Error::NoContraction {
                            first: iter - 2,
                            last: iter,
                        });
                    }
                } else {
                    consecutive_expanding = 0;
                }
            }
        }
        diffs.push(diff);
        current = next;
        if diff < cfg.tol {
            return Ok(PicardReport {
                iterate: current,
                diffs,
                ratios,
                sup_norms,
                iterations: iter,
                converged: true,
            });
        }
    }
    Err(Error::MaxIterExceeded {
        max_iter: cfg.max_iter,
        last_diff: diffs.last().copied().unwrap_or(S::zero()).as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::model::{make_initial_data, ProfileSpec};
    use approx::assert_relative_eq;

    fn grid(n: usize) -> Grid<f64> {
        Grid::new(1.0, n).unwrap()
    }

    fn zero_init(g: Grid<f64>) -> crate::model::InitialData<f64> {
        make_initial_data(
            g,
            &ProfileSpec::Zero,
            &ProfileSpec::Zero,
            &ProfileSpec::Zero,
            &ProfileSpec::Zero,
            false,
        )
        .unwrap()
    }

    #[test]
    fn compute_t0_reference_case() {
        let sg = SemigroupConstants {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
        };
        let c = CoefficientSet::constant(0.0, 1.0, 1.0, 1.0, 1.0);
        let t0 = compute_t0(1.0, &sg, &c, 0.0);
        // (l6)-analogue binds: 4 * (1 + 1) * T^{1/4} <= 1 => T <= 8^-4
        assert_relative_eq!(t0, 1.0 / 4096.0, epsilon = 1e-9);
        // the W^{1,2}-smallness condition alone would allow T = 1/4
        assert!(2.0 * sg.c1 * 1.0 * (0.25f64).sqrt() <= 1.0);
    }

    #[test]
    fn compute_t0_monotone_in_radius() {
        let sg = SemigroupConstants {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
        };
        let c = CoefficientSet::constant(0.0, 1.0, 1.0, 1.0, 1.0);
        let mut prev = f64::INFINITY;
        for r in [1.0, 2.0, 4.0, 8.0, 100.0] {
            let t0 = compute_t0(r, &sg, &c, 0.0);
            assert!(t0 > 0.0);
            assert!(t0 < prev, "t0 not decreasing at r = {r}");
            prev = t0;
        }
    }

    #[test]
    fn doubling_heating_sup_quarters_its_binding_horizon() {
        // Make the thermal condition binding: tiny c1, c3.
        let sg = SemigroupConstants {
            c1: 1e-6,
            c2: 1.0,
            c3: 1e-6,
        };
        let c_small = CoefficientSet::constant(0.0, 1.0, 1.0, 1.0, 10.0);
        let c_large = CoefficientSet::constant(0.0, 1.0, 1.0, 1.0, 20.0);
        let t_small = compute_t0(1.0, &sg, &c_small, 0.0);
        let t_large = compute_t0(1.0, &sg, &c_large, 0.0);
        assert_relative_eq!(t_large / t_small, 0.25, max_relative = 1e-6);
    }

    #[test]
    fn semigroup_constant_c1_bounded_below_by_constant_probe() {
        let g = grid(64);
        let sg = estimate_semigroup_constants(g, 1e-2, 1.0, 42);
        // the constant probe contributes t^{1/2} ||1||_{W^{1,2}} = sqrt(L) at t = 1
        assert!(sg.c1 >= (1.0f64).sqrt() - 1e-12);
        assert!(sg.c2 > 0.0 && sg.c3 > 0.0);
    }

    #[test]
    fn mode_probe_matches_scalar_maximization() {
        let g = grid(64);
        let eps = 1e-2;
        let basis = CosineBasis::new(g);
        let k = 5usize;
        let phi = basis.mode(k);
        let lam = basis.eigenvalue(k);
        let l2 = integrate(&phi.map(|v| v * v)).sqrt();
        let times = sample_times::<f64>();
        let mut measured = 0.0f64;
        let mut formula = 0.0f64;
        for &t in &times {
            let smoothed = basis.apply_semigroup(eps, t, &phi);
            measured = measured.max(t.sqrt() * w12_norm(&smoothed));
            formula = formula.max(t.sqrt() * (-eps * lam * t).exp() * (1.0 + lam).sqrt() * l2);
        }
        assert_relative_eq!(measured, formula, max_relative = 1e-6);
    }

    #[test]
    fn c3_estimate_decreases_with_more_viscosity() {
        let g = grid(48);
        let mut prev = f64::INFINITY;
        for eps in [1e-3, 1e-2, 1e-1] {
            let sg = estimate_semigroup_constants(g, eps, 1.0, 7);
            assert!(sg.c3 < prev, "c3 not decreasing at eps = {eps}");
            prev = sg.c3;
        }
    }

    #[test]
    fn zero_data_converges_immediately() {
        let g = grid(32);
        let init = zero_init(g);
        let c = CoefficientSet::constant(1.0, 1.0, 1.0, 1.0, 1.0);
        let sg = estimate_semigroup_constants(g, 0.1, 1.0, 3);
        let cfg =
            PicardConfig::for_problem(&init, &c, 0.1, &sg, 0.5, 16, 10, 1e-12).unwrap();
        let report = picard_solve(&init, &c, &cfg).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 1);
        assert_eq!(report.iterate.sup_x0_norm(), 0.0);
    }

    #[test]
    fn phi2_reduces_to_semigroup_when_w_vanishes() {
        let g = grid(48);
        let init = make_initial_data(
            g,
            &ProfileSpec::Zero,
            &ProfileSpec::cosine(2, 1.0),
            &ProfileSpec::Zero,
            &ProfileSpec::Zero,
            false,
        )
        .unwrap();
        let c = CoefficientSet::constant(0.0, 1.0, 1.0, 1.0, 0.0);
        let eps = 0.05;
        let mut iterate = PicardIterate::from_initial(&init, 0.01, 16);
        for q in &mut iterate.samples {
            q.w = GridFunction::zeros(g);
            q.v = GridFunction::zeros(g);
            q.u = GridFunction::zeros(g);
        }
        let basis = CosineBasis::new(g);
        let out = duhamel_map_in_basis(&iterate, &init, &c, eps, &basis).unwrap();
        for (j, q) in out.samples.iter().enumerate() {
            let expect = basis.apply_semigroup(eps, iterate.times[j], &init.u0t);
            assert!(q.v.sub(&expect).unwrap().max_norm() <= 1e-12);
        }
    }

    #[test]
    fn phi4_stays_nonnegative_for_nonnegative_data() {
        let g = grid(40);
        let init = make_initial_data(
            g,
            &ProfileSpec::Zero,
            &ProfileSpec::cosine(1, 1.0),
            &ProfileSpec::Zero,
            &ProfileSpec::CosineSum {
                terms: vec![
                    crate::model::CosineTerm {
                        mode: 0,
                        amplitude: 0.5,
                    },
                    crate::model::CosineTerm {
                        mode: 1,
                        amplitude: 0.5,
                    },
                ],
            },
            false,
        )
        .unwrap();
        let c = CoefficientSet::constant(0.0, 1.0, 1.0, 1.0, 1.0);
        let iterate = PicardIterate::from_initial(&init, 0.02, 16);
        let basis = CosineBasis::new(g);
        let out = duhamel_map_in_basis(&iterate, &init, &c, 0.05, &basis).unwrap();
        for q in &out.samples {
            assert!(q.theta.min_value() >= -1e-10);
        }
    }
}
