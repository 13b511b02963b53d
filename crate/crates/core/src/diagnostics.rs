//! Energy functionals, balance-identity residuals, and monitors evaluated
//! along trajectories.
//!
//! The central object is the weighted functional
//!
//! ```text
//! y(t) = 1/2 int w_x^2 + 1/2 int gamma(T) v_xx^2 + int ghat(T) u_xx v_xx
//!      + B/2 int u_xx^2 + eps int ghat(T) u_xxx^2,        B = 4 k4^2 / k1,
//! ```
//!
//! where `k1 <= gamma <= k2`, `k3 <= ghat <= k4`, `Gamma <= k5` and the
//! derivative bounds `k6..k10` are sampled extrema of the coefficient
//! functions over an assumed temperature range `[0, M]`. With
//! `k12 = max{2, 4/k1, 4/B, 1/k3}` the functional dominates the squared
//! seminorms of all four mechanical quantities, which is checked here as a
//! runtime inequality. The time balance of the bracket part of `y` is
//! evaluated against its fourteen exchange terms, the Riccati-type growth
//! inequality `y' + k1 eps int v_xxx^2 <= k13 (y^2 + y)` is fitted for the
//! smallest admissible constant, and a twin-run difference functional with
//! weights `B1 = 4 (sup ghat)^2 / (inf gamma)` and a configurable `B2`
//! quantifies uniqueness at the discrete level.

use serde::Serialize;

use crate::dynamics::{heating_gradient, State, Trajectory};
use crate::grid::{
    first_difference, fourth_difference, integrate, laplacian, second_difference, sobolev_norms,
    third_difference, GridFunction,
};
use crate::model::{CoefficientSet, InitialData};
use crate::{Error, Result, Scalar};

/// Sampled coefficient extrema over `[0, M]` and the derived weights.
///
/// Maxima carry 1% safety inflation and minima 1% deflation; the derived
/// quantities `B`, `k12`, `B1` are computed from the inflated values.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(bound = "S: Serialize")]
pub struct ConstantsEstimate<S> {
    /// min gamma
    pub k1: S,
    /// max gamma
    pub k2: S,
    /// min ghat
    pub k3: S,
    /// max ghat
    pub k4: S,
    /// max Gamma
    pub k5: S,
    /// max |gamma'|
    pub k6: S,
    /// max |ghat'|
    pub k7: S,
    /// max |gamma''|
    pub k8: S,
    /// max |ghat''|
    pub k9: S,
    /// max |Gamma'|
    pub k10: S,
    /// coupling weight 4 k4^2 / k1
    pub b: S,
    /// lower-bound constant max{2, 4/k1, 4/b, 1/k3}
    pub k12: S,
    /// assumed temperature bound
    pub m: S,
    /// uniqueness weight 4 (sup ghat)^2 / (inf gamma) over [0, M]
    pub b1: S,
    /// uniqueness weight for the temperature difference (configurable)
    pub b2: S,
}

/// Samples coefficient extrema on `[0, M]` (>= 4096 points) and derives the
/// functional weights. Fails with `DegenerateCoefficient` when `gamma` or
/// `ghat` loses positivity on the range.
pub fn estimate_k_constants<S: Scalar>(
    c: &CoefficientSet<S>,
    m_bound: S,
) -> Result<ConstantsEstimate<S>> {
    if !(m_bound > S::zero()) {
        return Err(Error::InvalidSpec(format!(
            "temperature bound must be positive, got {m_bound}"
        )));
    }
    let samples = 4097usize;
    let mut min_gamma = S::infinity();
    let mut max_gamma = S::neg_infinity();
    let mut min_ghat = S::infinity();
    let mut max_ghat = S::neg_infinity();
    let mut max_gamma_src = S::neg_infinity();
    let mut max_d_gamma = S::zero();
    let mut max_d_ghat = S::zero();
    let mut max_dd_gamma = S::zero();
    let mut max_dd_ghat = S::zero();
    let mut max_d_gamma_src = S::zero();
    for i in 0..samples {
        let t = m_bound * S::of_usize(i) / S::of_usize(samples - 1);
        min_gamma = min_gamma.min(c.gamma.value(t));
        max_gamma = max_gamma.max(c.gamma.value(t));
        min_ghat = min_ghat.min(c.ghat.value(t));
        max_ghat = max_ghat.max(c.ghat.value(t));
        max_gamma_src = max_gamma_src.max(c.gamma_src.value(t));
        max_d_gamma = max_d_gamma.max(c.gamma.deriv1(t).abs());
        max_d_ghat = max_d_ghat.max(c.ghat.deriv1(t).abs());
        max_dd_gamma = max_dd_gamma.max(c.gamma.deriv2(t).abs());
        max_dd_ghat = max_dd_ghat.max(c.ghat.deriv2(t).abs());
        max_d_gamma_src = max_d_gamma_src.max(c.gamma_src.deriv1(t).abs());
    }
    if !(min_gamma > S::zero()) {
        return Err(Error::DegenerateCoefficient {
            what: format!("min gamma = {min_gamma}"),
            theta_max: m_bound.as_f64(),
        });
    }
    if !(min_ghat > S::zero()) {
        return Err(Error::DegenerateCoefficient {
            what: format!("min ghat = {min_ghat}"),
            theta_max: m_bound.as_f64(),
        });
    }
    let lo = S::lit(0.99);
    let hi = S::lit(1.01);
    let k1 = lo * min_gamma;
    let k2 = hi * max_gamma;
    let k3 = lo * min_ghat;
    let k4 = hi * max_ghat;
    let b = S::lit(4.0) * k4 * k4 / k1;
    let four = S::lit(4.0);
    let k12 = S::lit(2.0)
        .max(four / k1)
        .max(four / b)
        .max(S::one() / k3);
    Ok(ConstantsEstimate {
        k1,
        k2,
        k3,
        k4,
        k5: hi * max_gamma_src.max(S::zero()),
        k6: hi * max_d_gamma,
        k7: hi * max_d_ghat,
        k8: hi * max_dd_gamma,
        k9: hi * max_dd_ghat,
        k10: hi * max_d_gamma_src,
        b,
        k12,
        m: m_bound,
        b1: b,
        b2: S::one(),
    })
}

/// Default assumed temperature bound: eight times the initial bound
/// `||T0||_inf + ||T0_t||_inf` plus margin, where `T0_t` is reconstructed
/// from the temperature equation.
pub fn default_theta_bound<S: Scalar>(init: &InitialData<S>, c: &CoefficientSet<S>) -> S {
    let vx = heating_gradient(&init.u0t);
    let mut theta0_t = laplacian(&init.theta0).scale(c.d);
    theta0_t.axpy(
        S::one(),
        &c.gamma_src
            .eval_field(&init.theta0)
            .zip_with(&vx, |g, d| g * d * d)
            .expect("same grid"),
    );
    S::lit(8.0) * (init.theta0.max_norm() + theta0_t.max_norm()) + S::one()
}

/// Energy functional value and its five constituent terms at one instant.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(bound = "S: Serialize")]
pub struct EnergyReport<S> {
    pub t: S,
    pub y: S,
    /// `[1/2 int w_x^2, 1/2 int gamma v_xx^2, int ghat u_xx v_xx,
    ///   B/2 int u_xx^2, eps int ghat u_xxx^2]`
    pub terms: [S; 5],
    /// Balance-identity defect at this time, when evaluated along a window.
    pub identity_residual: Option<S>,
    /// Smallest admissible Riccati constant over the window so far.
    pub k13_fitted: Option<S>,
}

fn sq_integral<S: Scalar>(p: &GridFunction<S>) -> S {
    integrate(&p.map(|v| v * v))
}

fn weighted_sq<S: Scalar>(wgt: &GridFunction<S>, p: &GridFunction<S>) -> S {
    integrate(&wgt.zip_with(p, |a, b| a * b * b).expect("same grid"))
}

/// Evaluates the functional `y` and its terms.
pub fn energy_y<S: Scalar>(
    s: &State<S>,
    c: &CoefficientSet<S>,
    consts: &ConstantsEstimate<S>,
    eps: S,
) -> EnergyReport<S> {
    let half = S::lit(0.5);
    let wx = first_difference(&s.w);
    let vxx = second_difference(&s.v);
    let uxx = second_difference(&s.u);
    let uxxx = third_difference(&s.u);
    let gamma_f = c.gamma.eval_field(&s.theta);
    let ghat_f = c.ghat.eval_field(&s.theta);
    let t1 = half * sq_integral(&wx);
    let t2 = half * weighted_sq(&gamma_f, &vxx);
    let t3 = integrate(
        &ghat_f
            .zip_with(&uxx, |g, u| g * u)
            .expect("same grid")
            .zip_with(&vxx, |gu, v| gu * v)
            .expect("same grid"),
    );
    let t4 = half * consts.b * sq_integral(&uxx);
    let t5 = eps * weighted_sq(&ghat_f, &uxxx);
    EnergyReport {
        t: s.t,
        y: t1 + t2 + t3 + t4 + t5,
        terms: [t1, t2, t3, t4, t5],
        identity_residual: None,
        k13_fitted: None,
    }
}

/// Signed slack of the lower bound `k12 y >= int w_x^2 + int v_xx^2 +
/// int u_xx^2 + eps int u_xxx^2`; nonnegative up to roundoff whenever the
/// temperature stayed within `[0, M]`.
pub fn lemma5_gap<S: Scalar>(
    s: &State<S>,
    c: &CoefficientSet<S>,
    consts: &ConstantsEstimate<S>,
    eps: S,
) -> S {
    let report = energy_y(s, c, consts, eps);
    let wx = first_difference(&s.w);
    let vxx = second_difference(&s.v);
    let uxx = second_difference(&s.u);
    let uxxx = third_difference(&s.u);
    let seminorms =
        sq_integral(&wx) + sq_integral(&vxx) + sq_integral(&uxx) + eps * sq_integral(&uxxx);
    consts.k12 * report.y - seminorms
}

/// Derivative of a sampled scalar series: three-point Lagrange, centered in
/// the interior and one-sided at the ends (second order for uniform sampling).
fn series_derivative<S: Scalar>(times: &[S], values: &[S]) -> Vec<S> {
    let n = times.len();
    debug_assert!(n >= 3);
    let point = |i0: usize, i1: usize, i2: usize, at: S| {
        let (t0, t1, t2) = (times[i0], times[i1], times[i2]);
        let (v0, v1, v2) = (values[i0], values[i1], values[i2]);
        let two = S::lit(2.0);
        v0 * (two * at - t1 - t2) / ((t0 - t1) * (t0 - t2))
            + v1 * (two * at - t0 - t2) / ((t1 - t0) * (t1 - t2))
            + v2 * (two * at - t0 - t1) / ((t2 - t0) * (t2 - t1))
    };
    (0..n)
        .map(|i| {
            if i == 0 {
                point(0, 1, 2, times[0])
            } else if i == n - 1 {
                point(n - 3, n - 2, n - 1, times[n - 1])
            } else {
                point(i - 1, i, i + 1, times[i])
            }
        })
        .collect()
}

struct IdentityPieces<S> {
    times: Vec<S>,
    bracket: Vec<S>,
    dissipation: Vec<S>,
    exchange: Vec<S>,
}

/// Both sides of the bracket balance at each snapshot. The temperature rate
/// is reconstructed from the right side of its own equation rather than by
/// time differencing.
fn identity_pieces<S: Scalar>(
    traj: &Trajectory<S>,
    c: &CoefficientSet<S>,
    eps: S,
) -> IdentityPieces<S> {
    let half = S::lit(0.5);
    let two = S::lit(2.0);
    let mut times = Vec::with_capacity(traj.states.len());
    let mut bracket = Vec::with_capacity(traj.states.len());
    let mut dissipation = Vec::with_capacity(traj.states.len());
    let mut exchange = Vec::with_capacity(traj.states.len());
    for s in &traj.states {
        let wx = first_difference(&s.w);
        let wxx = second_difference(&s.w);
        let ux = first_difference(&s.u);
        let uxx = second_difference(&s.u);
        let uxxx = third_difference(&s.u);
        let uxxxx = fourth_difference(&s.u);
        let vx = first_difference(&s.v);
        let vxx = second_difference(&s.v);
        let vxxx = third_difference(&s.v);
        let tx = first_difference(&s.theta);
        let txx = second_difference(&s.theta);

        let gamma_f = c.gamma.eval_field(&s.theta);
        let ghat_f = c.ghat.eval_field(&s.theta);
        let d_gamma = c.gamma.deriv1_field(&s.theta);
        let d_ghat = c.ghat.deriv1_field(&s.theta);
        let dd_gamma = c.gamma.deriv2_field(&s.theta);
        let dd_ghat = c.ghat.deriv2_field(&s.theta);

        // T_t from the discrete temperature equation (residual-free form).
        let heat_vx = heating_gradient(&s.v);
        let mut theta_t = laplacian(&s.theta).scale(c.d);
        theta_t.axpy(
            S::one(),
            &c.gamma_src
                .eval_field(&s.theta)
                .zip_with(&heat_vx, |g, d| g * d * d)
                .expect("same grid"),
        );

        let prod = |fs: &[&GridFunction<S>]| -> S {
            let mut acc = fs[0].clone();
            for f in &fs[1..] {
                acc = acc.zip_with(f, |a, b| a * b).expect("same grid");
            }
            integrate(&acc)
        };

        times.push(s.t);
        bracket.push(
            half * sq_integral(&wx)
                + half * weighted_sq(&gamma_f, &vxx)
                + prod(&[&ghat_f, &uxx, &vxx])
                + eps * weighted_sq(&ghat_f, &uxxx),
        );
        dissipation.push(
            c.alpha * sq_integral(&wx)
                + eps * sq_integral(&wxx)
                + eps * weighted_sq(&gamma_f, &vxxx)
                + two * eps * eps * weighted_sq(&ghat_f, &uxxxx),
        );
        let ex = weighted_sq(&ghat_f, &vxx)
            + half * prod(&[&d_gamma, &theta_t, &vxx, &vxx])
            + prod(&[&d_ghat, &theta_t, &uxx, &vxx])
            + prod(&[&d_gamma, &tx, &vxx, &wx])
            + prod(&[&d_ghat, &tx, &uxx, &wx])
            + prod(&[&d_gamma, &txx, &vx, &wx])
            + prod(&[&d_ghat, &txx, &ux, &wx])
            + prod(&[&dd_gamma, &tx, &tx, &vx, &wx])
            + prod(&[&dd_ghat, &tx, &tx, &ux, &wx])
            + eps * prod(&[&d_ghat, &theta_t, &uxxx, &uxxx])
            - eps * prod(&[&d_gamma, &tx, &vxx, &vxxx])
            - eps * prod(&[&d_ghat, &tx, &uxx, &vxxx])
            - eps * prod(&[&d_ghat, &tx, &uxxx, &vxx])
            - two * eps * eps * prod(&[&d_ghat, &tx, &uxxx, &uxxxx]);
        exchange.push(ex);
    }
    IdentityPieces {
        times,
        bracket,
        dissipation,
        exchange,
    }
}

/// Defect time series of the bracket balance: time derivative of the bracket
/// plus dissipation minus the fourteen exchange integrals.
pub fn energy_identity_residual<S: Scalar>(
    traj: &Trajectory<S>,
    c: &CoefficientSet<S>,
    eps: S,
) -> Result<Vec<(S, S)>> {
    if traj.states.len() < 3 {
        return Err(Error::InsufficientSamples {
            needed: 3,
            got: traj.states.len(),
        });
    }
    let pieces = identity_pieces(traj, c, eps);
    let rate = series_derivative(&pieces.times, &pieces.bracket);
    Ok(pieces
        .times
        .iter()
        .enumerate()
        .map(|(i, &t)| (t, rate[i] + pieces.dissipation[i] - pieces.exchange[i]))
        .collect())
}

/// L1-in-time norm of a residual series by the trapezoidal rule.
pub fn residual_l1<S: Scalar>(series: &[(S, S)]) -> S {
    let half = S::lit(0.5);
    let mut acc = S::zero();
    for pair in series.windows(2) {
        let (t0, r0) = pair[0];
        let (t1, r1) = pair[1];
        acc += half * (r0.abs() + r1.abs()) * (t1 - t0);
    }
    acc
}

/// Smallest `k >= 0` with `y' + k1 eps int v_xxx^2 <= k (y^2 + y)` at every
/// sampled time with `y` above the floor `1e-14`.
pub fn riccati_monitor<S: Scalar>(
    traj: &Trajectory<S>,
    c: &CoefficientSet<S>,
    consts: &ConstantsEstimate<S>,
    eps: S,
) -> Result<S> {
    let ratios = riccati_ratios(traj, c, consts, eps)?;
    let valid: Vec<S> = ratios.into_iter().flatten().collect();
    if valid.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    Ok(valid
        .into_iter()
        .fold(S::zero(), |acc, r| acc.max(r)))
}

/// Per-time Riccati ratios (`None` below the `y` floor).
fn riccati_ratios<S: Scalar>(
    traj: &Trajectory<S>,
    c: &CoefficientSet<S>,
    consts: &ConstantsEstimate<S>,
    eps: S,
) -> Result<Vec<Option<S>>> {
    if traj.states.len() < 3 {
        return Err(Error::InsufficientSamples {
            needed: 3,
            got: traj.states.len(),
        });
    }
    let times = traj.times();
    let y: Vec<S> = traj
        .states
        .iter()
        .map(|s| energy_y(s, c, consts, eps).y)
        .collect();
    let rate = series_derivative(&times, &y);
    let floor = S::lit(1e-14);
    Ok(traj
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if y[i] <= floor {
                return None;
            }
            let visc = if eps > S::zero() {
                let vxxx = third_difference(&s.v);
                consts.k1 * eps * sq_integral(&vxxx)
            } else {
                S::zero()
            };
            Some(((rate[i] + visc) / (y[i] * y[i] + y[i])).max(S::zero()))
        })
        .collect())
}

/// Worst signed defect of
/// `1/2 d/dt int u_xx^2 + eps int u_xxx^2 <= 1/2 int u_xx^2 + 1/2 int v_xx^2`.
pub fn lemma2_check<S: Scalar>(traj: &Trajectory<S>, eps: S) -> Result<S> {
    if traj.states.len() < 3 {
        return Err(Error::InsufficientSamples {
            needed: 3,
            got: traj.states.len(),
        });
    }
    let half = S::lit(0.5);
    let times = traj.times();
    let uxx_sq: Vec<S> = traj
        .states
        .iter()
        .map(|s| sq_integral(&second_difference(&s.u)))
        .collect();
    let rate = series_derivative(&times, &uxx_sq);
    let mut worst = S::neg_infinity();
    for (i, s) in traj.states.iter().enumerate() {
        let uxxx = third_difference(&s.u);
        let vxx = second_difference(&s.v);
        let defect =
            half * rate[i] + eps * sq_integral(&uxxx) - half * uxx_sq[i] - half * sq_integral(&vxx);
        worst = worst.max(defect);
    }
    Ok(worst)
}

/// Difference functional between two trajectories on the same grid and
/// monitor times:
///
/// ```text
/// y_diff = 1/2 int d_tt^2 + 1/2 int gamma(T_a) d_xt^2 + int ghat(T_a) d_x d_xt
///        + B1/2 int d_x^2 + B2/2 int delta^2
/// ```
pub fn difference_functional<S: Scalar>(
    traj_a: &Trajectory<S>,
    traj_b: &Trajectory<S>,
    c: &CoefficientSet<S>,
    consts: &ConstantsEstimate<S>,
) -> Result<Vec<(S, S)>> {
    if traj_a.states.len() != traj_b.states.len() {
        return Err(Error::TimeMismatch);
    }
    let half = S::lit(0.5);
    let mut out = Vec::with_capacity(traj_a.states.len());
    for (a, b) in traj_a.states.iter().zip(&traj_b.states) {
        if a.grid() != b.grid() {
            return Err(Error::GridMismatch);
        }
        if (a.t - b.t).abs() > S::lit(1e-9) * (S::one() + a.t.abs()) {
            return Err(Error::TimeMismatch);
        }
        let d_tt = a.w.sub(&b.w)?;
        let d_xt = first_difference(&a.v.sub(&b.v)?);
        let d_x = first_difference(&a.u.sub(&b.u)?);
        let delta = a.theta.sub(&b.theta)?;
        let gamma_f = c.gamma.eval_field(&a.theta);
        let ghat_f = c.ghat.eval_field(&a.theta);
        let cross = integrate(
            &ghat_f
                .zip_with(&d_x, |g, d| g * d)?
                .zip_with(&d_xt, |gd, e| gd * e)?,
        );
        let y = half * sq_integral(&d_tt)
            + half * weighted_sq(&gamma_f, &d_xt)
            + cross
            + half * consts.b1 * sq_integral(&d_x)
            + half * consts.b2 * sq_integral(&delta);
        out.push((a.t, y));
    }
    Ok(out)
}

/// Extensibility monitor `||v||_{W^{2,2}} + ||w||_{W^{1,2}} + ||T||_{W^{2,inf}}`
/// whose growth triggers `BlowupSuspected` in `evolve`.
pub fn blowup_monitor<S: Scalar>(s: &State<S>) -> S {
    crate::dynamics::extensibility_monitor(s)
}

/// `energy_y` along a trajectory with the identity residual filled in and the
/// running (so-far) Riccati constant attached to each report.
pub fn energy_along<S: Scalar>(
    traj: &Trajectory<S>,
    c: &CoefficientSet<S>,
    consts: &ConstantsEstimate<S>,
    eps: S,
) -> Result<Vec<EnergyReport<S>>> {
    let mut reports: Vec<EnergyReport<S>> = traj
        .states
        .iter()
        .map(|s| energy_y(s, c, consts, eps))
        .collect();
    if traj.states.len() >= 3 {
        let residuals = energy_identity_residual(traj, c, eps)?;
        let ratios = riccati_ratios(traj, c, consts, eps)?;
        let mut running = S::zero();
        let mut any = false;
        for (i, report) in reports.iter_mut().enumerate() {
            report.identity_residual = Some(residuals[i].1);
            if let Some(r) = ratios[i] {
                running = running.max(r);
                any = true;
            }
            report.k13_fitted = if any { Some(running) } else { None };
        }
    }
    Ok(reports)
}

/// Maximum of `||theta||_inf` over the trajectory, for checking the assumed
/// bound `M` after a run.
pub fn max_theta<S: Scalar>(traj: &Trajectory<S>) -> S {
    traj.states
        .iter()
        .fold(S::zero(), |acc, s| acc.max(s.theta.max_norm()))
}

/// Max-norm of the state fields entering the blow-up criterion, for reports.
pub fn state_norms<S: Scalar>(s: &State<S>) -> (S, S, S) {
    let nv = sobolev_norms(&s.v);
    let nw = sobolev_norms(&s.w);
    let nt = sobolev_norms(&s.theta);
    (nv.w22(), nw.w12(), nt.w2inf)
}
