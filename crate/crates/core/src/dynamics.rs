//! First-order-in-time formulation and time integration of the
//! (optionally viscosity-regularized) system
//!
//! ```text
//! u_t = eps u_xx + v
//! v_t = eps v_xx + w
//! w_t = eps w_xx + (gamma(T) v_x)_x + (ghat(T) u_x)_x - alpha w + f_u
//! T_t = D T_xx + Gamma(T) v_x^2 + f_T
//! ```
//!
//! with zero-flux boundaries. The default scheme treats the stiff linear part
//! implicitly (backward Euler or Crank-Nicolson with midpoint coefficient
//! re-evaluation) through a block-tridiagonal solve in `(u, v, w)` and
//! advances the temperature by the exact discrete heat semigroup composed
//! with the explicit nonnegative heating term. A classical explicit RK4
//! stepper serves as the cross-validation reference.

use std::sync::Arc;

use crate::grid::{
    first_difference, flux_divergence, laplacian, mean, sobolev_norms, Grid, GridFunction,
};
use crate::model::{CoefficientSet, InitialData};
use crate::{Error, Result, Scalar};

mod semi_implicit;

pub use semi_implicit::SemiImplicitStepper;

/// Closed-form space-time forcing, `f(x, t)`.
pub type SpaceTimeFn<S> = Arc<dyn Fn(S, S) -> S + Send + Sync>;

/// Optional forcings added to the `w`-equation and the temperature equation.
#[derive(Clone, Default)]
pub struct SourceTerms<S> {
    pub f_u: Option<SpaceTimeFn<S>>,
    pub f_theta: Option<SpaceTimeFn<S>>,
}

impl<S: Scalar> SourceTerms<S> {
    pub fn none() -> Self {
        Self {
            f_u: None,
            f_theta: None,
        }
    }

    pub fn is_none(&self) -> bool {
        self.f_u.is_none() && self.f_theta.is_none()
    }

    fn eval(field: &Option<SpaceTimeFn<S>>, grid: Grid<S>, t: S) -> Option<GridFunction<S>> {
        field
            .as_ref()
            .map(|f| GridFunction::from_fn(grid, |x| f(x, t)))
    }

    pub(crate) fn f_u_at(&self, grid: Grid<S>, t: S) -> Option<GridFunction<S>> {
        Self::eval(&self.f_u, grid, t)
    }

    pub(crate) fn f_theta_at(&self, grid: Grid<S>, t: S) -> Option<GridFunction<S>> {
        Self::eval(&self.f_theta, grid, t)
    }
}

impl<S> std::fmt::Debug for SourceTerms<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SourceTerms")
            .field("f_u", &self.f_u.is_some())
            .field("f_theta", &self.f_theta.is_some())
            .finish()
    }
}

/// The unknowns at one time instant: `v = u_t`, `w = u_tt`.
#[derive(Debug, Clone)]
pub struct State<S> {
    pub t: S,
    pub u: GridFunction<S>,
    pub v: GridFunction<S>,
    pub w: GridFunction<S>,
    pub theta: GridFunction<S>,
}

impl<S: Scalar> State<S> {
    pub fn from_initial(init: &InitialData<S>) -> Self {
        Self {
            t: S::zero(),
            u: init.u0.clone(),
            v: init.u0t.clone(),
            w: init.u0tt.clone(),
            theta: init.theta0.clone(),
        }
    }

    pub fn grid(&self) -> Grid<S> {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.w.is_finite() && self.theta.is_finite()
    }

    fn ensure_finite(&self) -> Result<()> {
        for (field, f) in [
            ("u", &self.u),
            ("v", &self.v),
            ("w", &self.w),
            ("theta", &self.theta),
        ] {
            if !f.is_finite() {
                return Err(Error::NonFiniteState {
                    field,
                    t: self.t.as_f64(),
                });
            }
        }
        Ok(())
    }

    /// Stage state `self + dt_stage * k` at time `t + dt_stage`.
    fn advanced(&self, dt_stage: S, k: &Tendencies<S>) -> Self {
        let mut s = self.clone();
        s.t = self.t + dt_stage;
        s.u.axpy(dt_stage, &k.du);
        s.v.axpy(dt_stage, &k.dv);
        s.w.axpy(dt_stage, &k.dw);
        s.theta.axpy(dt_stage, &k.dtheta);
        s
    }

    /// Field-wise max-norm distance to another state on the same grid.
    pub fn max_distance(&self, other: &Self) -> Result<FieldDistances<S>> {
        Ok(FieldDistances {
            u: self.u.sub(&other.u)?.max_norm(),
            v: self.v.sub(&other.v)?.max_norm(),
            w: self.w.sub(&other.w)?.max_norm(),
            theta: self.theta.sub(&other.theta)?.max_norm(),
        })
    }
}

/// Per-field max-norm distances.
#[derive(Debug, Clone, Copy)]
pub struct FieldDistances<S> {
    pub u: S,
    pub v: S,
    pub w: S,
    pub theta: S,
}

impl<S: Scalar> FieldDistances<S> {
    pub fn zero() -> Self {
        Self {
            u: S::zero(),
            v: S::zero(),
            w: S::zero(),
            theta: S::zero(),
        }
    }

    pub fn max(&self) -> S {
        self.u.max(self.v).max(self.w).max(self.theta)
    }

    pub fn max_with(&self, other: &Self) -> Self {
        Self {
            u: self.u.max(other.u),
            v: self.v.max(other.v),
            w: self.w.max(other.w),
            theta: self.theta.max(other.theta),
        }
    }
}

/// Right-hand-side values for all four fields.
#[derive(Debug, Clone)]
pub struct Tendencies<S> {
    pub du: GridFunction<S>,
    pub dv: GridFunction<S>,
    pub dw: GridFunction<S>,
    pub dtheta: GridFunction<S>,
}

/// Time-integration scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    SemiImplicit,
    ExplicitRk4,
}

/// Treatment of the implicit linear part within the semi-implicit scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemiImplicitVariant {
    BackwardEuler,
    /// Second order; coefficients re-evaluated at a midpoint predictor.
    CrankNicolson,
}

#[derive(Debug, Clone, Copy)]
pub struct EvolutionParams<S> {
    /// Regularizing viscosity, >= 0.
    pub eps: S,
    pub dt: S,
    pub t_end: S,
    pub scheme: Scheme,
    pub variant: SemiImplicitVariant,
    /// CFL fraction in (0, 1] for the explicit stability guard.
    pub safety: S,
}

impl<S: Scalar> EvolutionParams<S> {
    pub fn new(eps: S, dt: S, t_end: S) -> Self {
        Self {
            eps,
            dt,
            t_end,
            scheme: Scheme::SemiImplicit,
            variant: SemiImplicitVariant::CrankNicolson,
            safety: S::lit(0.9),
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_variant(mut self, variant: SemiImplicitVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= S::zero()) {
            return Err(Error::InvalidSpec(format!("eps must be >= 0, got {}", self.eps)));
        }
        if !(self.dt > S::zero()) {
            return Err(Error::InvalidSpec(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end >= S::zero()) {
            return Err(Error::InvalidSpec(format!(
                "t_end must be >= 0, got {}",
                self.t_end
            )));
        }
        if !(self.safety > S::zero() && self.safety <= S::one()) {
            return Err(Error::InvalidSpec(format!(
                "safety must lie in (0, 1], got {}",
                self.safety
            )));
        }
        Ok(())
    }
}

/// Monitor cadences and abort thresholds.
#[derive(Debug, Clone, Copy)]
pub struct MonitorConfig<S> {
    /// Record scalar diagnostics and run the abort checks every this many
    /// steps.
    pub cadence_steps: usize,
    /// Keep full state snapshots every this many steps.
    pub snapshot_every: usize,
    /// Absolute abort threshold for the extensibility monitor.
    pub blowup_threshold: S,
    /// Abort when the monitor grows by this factor from its initial value.
    pub blowup_growth_factor: S,
    /// Abort when the temperature undershoot exceeds this times the scale.
    pub undershoot_limit: S,
}

impl<S: Scalar> MonitorConfig<S> {
    /// Records and snapshots share the given cadence.
    pub fn with_cadence(cadence_steps: usize) -> Self {
        Self {
            cadence_steps: cadence_steps.max(1),
            snapshot_every: cadence_steps.max(1),
            blowup_threshold: S::lit(1e6),
            blowup_growth_factor: S::lit(1e3),
            undershoot_limit: S::lit(1e-6),
        }
    }

    pub fn with_snapshots(mut self, snapshot_every: usize) -> Self {
        self.snapshot_every = snapshot_every.max(1);
        self
    }
}

impl<S: Scalar> Default for MonitorConfig<S> {
    fn default() -> Self {
        Self::with_cadence(1)
    }
}

/// Scalar diagnostics recorded at monitor times.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord<S> {
    pub t: S,
    pub mean_u: S,
    pub mean_v: S,
    pub mean_w: S,
    pub norm_u: S,
    pub norm_v: S,
    pub norm_w: S,
    pub min_theta: S,
    pub undershoot: S,
    pub blowup: S,
}

/// State snapshots (at the snapshot cadence) and scalar records (at the
/// monitor cadence) of one evolution.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub states: Vec<State<S>>,
    pub records: Vec<StepRecord<S>>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn times(&self) -> Vec<S> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &State<S> {
        self.states.last().expect("trajectory holds >= 1 state")
    }

    /// Sup over shared monitor times of the field-wise max distance.
    pub fn sup_distance(&self, other: &Self) -> Result<FieldDistances<S>> {
        if self.states.len() != other.states.len() {
            return Err(Error::TimeMismatch);
        }
        let mut acc = FieldDistances::zero();
        for (a, b) in self.states.iter().zip(&other.states) {
            if (a.t - b.t).abs() > S::lit(1e-9) * (S::one() + a.t.abs()) {
                return Err(Error::TimeMismatch);
            }
            acc = acc.max_with(&a.max_distance(b)?);
        }
        Ok(acc)
    }
}

/// Gradient of `v` entering the heating term: centered in the interior and
/// exactly zero at the boundary nodes (the Neumann condition).
pub fn heating_gradient<S: Scalar>(v: &GridFunction<S>) -> GridFunction<S> {
    let mut d = first_difference(v);
    let n = d.grid().len();
    let values = d.as_mut_slice();
    values[0] = S::zero();
    values[n - 1] = S::zero();
    d
}

/// Extensibility monitor `||v||_{W^{2,2}} + ||w||_{W^{1,2}} + ||T||_{W^{2,inf}}`.
pub(crate) fn extensibility_monitor<S: Scalar>(s: &State<S>) -> S {
    let nv = sobolev_norms(&s.v);
    let nw = sobolev_norms(&s.w);
    let nt = sobolev_norms(&s.theta);
    nv.w22() + nw.w12() + nt.w2inf
}

/// Assembles the right-hand side of the first-order system.
pub fn rhs<S: Scalar>(
    s: &State<S>,
    c: &CoefficientSet<S>,
    eps: S,
    src: &SourceTerms<S>,
) -> Result<Tendencies<S>> {
    s.ensure_finite()?;
    let grid = s.grid();

    let mut du = s.v.clone();
    let mut dv = s.w.clone();
    if eps > S::zero() {
        du.axpy(eps, &laplacian(&s.u));
        dv.axpy(eps, &laplacian(&s.v));
    }

    let gamma_field = c.gamma.eval_field(&s.theta);
    let ghat_field = c.ghat.eval_field(&s.theta);
    let mut dw = flux_divergence(&gamma_field, &s.v)?;
    dw.axpy(S::one(), &flux_divergence(&ghat_field, &s.u)?);
    dw.axpy(-c.alpha, &s.w);
    if eps > S::zero() {
        dw.axpy(eps, &laplacian(&s.w));
    }
    if let Some(f) = src.f_u_at(grid, s.t) {
        dw.axpy(S::one(), &f);
    }

    let vx = heating_gradient(&s.v);
    let gamma_src_field = c.gamma_src.eval_field(&s.theta);
    let mut dtheta = laplacian(&s.theta).scale(c.d);
    dtheta.axpy(
        S::one(),
        &gamma_src_field
            .zip_with(&vx, |g, d| g * d * d)
            .expect("same grid"),
    );
    if let Some(f) = src.f_theta_at(grid, s.t) {
        dtheta.axpy(S::one(), &f);
    }

    Ok(Tendencies { du, dv, dw, dtheta })
}

/// One semi-implicit step. Builds the transform basis on each call; use
/// [`SemiImplicitStepper`] (as `evolve` does) when stepping repeatedly.
pub fn step_semi_implicit<S: Scalar>(
    s: &State<S>,
    c: &CoefficientSet<S>,
    params: &EvolutionParams<S>,
    src: &SourceTerms<S>,
) -> Result<State<S>> {
    params.validate()?;
    let mut stepper = SemiImplicitStepper::new(s.grid(), c.clone(), *params);
    stepper.step(s, src, params.dt).map(|(state, _)| state)
}

/// Largest explicit step allowed by the conservative stability guard.
pub fn rk4_stability_limit<S: Scalar>(
    s: &State<S>,
    c: &CoefficientSet<S>,
    params: &EvolutionParams<S>,
) -> S {
    let h = s.grid().spacing();
    let two = S::lit(2.0);
    let max_gamma = c.gamma.eval_field(&s.theta).max_norm();
    let max_ghat = c.ghat.eval_field(&s.theta).max_norm();
    let diffusive = h * h / (two * params.eps + two * c.d + two * max_gamma);
    let hyperbolic = h / max_ghat.max(S::lit(1e-30)).sqrt();
    params.safety * diffusive.min(hyperbolic)
}

/// Classical four-stage explicit step of [`rhs`]; errors with
/// `StabilityViolation` when `dt` exceeds the guard.
pub fn step_explicit_rk4<S: Scalar>(
    s: &State<S>,
    c: &CoefficientSet<S>,
    params: &EvolutionParams<S>,
    src: &SourceTerms<S>,
) -> Result<State<S>> {
    step_explicit_rk4_sized(s, c, params, src, params.dt)
}

fn step_explicit_rk4_sized<S: Scalar>(
    s: &State<S>,
    c: &CoefficientSet<S>,
    params: &EvolutionParams<S>,
    src: &SourceTerms<S>,
    dt: S,
) -> Result<State<S>> {
    let dt_max = rk4_stability_limit(s, c, params);
    if dt > dt_max {
        return Err(Error::StabilityViolation {
            dt: dt.as_f64(),
            dt_max: dt_max.as_f64(),
        });
    }
    let half = S::lit(0.5);
    let k1 = rhs(s, c, params.eps, src)?;
    let k2 = rhs(&s.advanced(half * dt, &k1), c, params.eps, src)?;
    let k3 = rhs(&s.advanced(half * dt, &k2), c, params.eps, src)?;
    let k4 = rhs(&s.advanced(dt, &k3), c, params.eps, src)?;

    let sixth = dt / S::lit(6.0);
    let third = dt / S::lit(3.0);
    let mut out = s.clone();
    out.t = s.t + dt;
    for (acc, (a, (b, (cc, d)))) in [
        (&mut out.u, (&k1.du, (&k2.du, (&k3.du, &k4.du)))),
        (&mut out.v, (&k1.dv, (&k2.dv, (&k3.dv, &k4.dv)))),
        (&mut out.w, (&k1.dw, (&k2.dw, (&k3.dw, &k4.dw)))),
        (
            &mut out.theta,
            (&k1.dtheta, (&k2.dtheta, (&k3.dtheta, &k4.dtheta))),
        ),
    ] {
        acc.axpy(sixth, a);
        acc.axpy(third, b);
        acc.axpy(third, cc);
        acc.axpy(sixth, d);
    }
    out.ensure_finite()?;
    Ok(out)
}

fn make_record<S: Scalar>(s: &State<S>, undershoot: S) -> StepRecord<S> {
    StepRecord {
        t: s.t,
        mean_u: mean(&s.u),
        mean_v: mean(&s.v),
        mean_w: mean(&s.w),
        norm_u: s.u.max_norm(),
        norm_v: s.v.max_norm(),
        norm_w: s.w.max_norm(),
        min_theta: s.theta.min_value(),
        undershoot,
        blowup: extensibility_monitor(s),
    }
}

/// Integrates from `t = 0` to `t_end`, recording snapshots and diagnostics at
/// the monitor cadence; aborts with `BlowupSuspected` when the extensibility
/// monitor crosses its absolute threshold or its growth factor.
pub fn evolve<S: Scalar>(
    init: &InitialData<S>,
    c: &CoefficientSet<S>,
    params: &EvolutionParams<S>,
    src: &SourceTerms<S>,
    monitors: &MonitorConfig<S>,
) -> Result<Trajectory<S>> {
    params.validate()?;
    let mut state = State::from_initial(init);
    state.ensure_finite()?;

    let initial_monitor = extensibility_monitor(&state);
    let mut traj = Trajectory {
        states: vec![state.clone()],
        records: vec![make_record(&state, S::zero())],
    };
    if params.t_end <= S::zero() {
        return Ok(traj);
    }

    let mut stepper = match params.scheme {
        Scheme::SemiImplicit => Some(SemiImplicitStepper::new(state.grid(), c.clone(), *params)),
        Scheme::ExplicitRk4 => None,
    };

    // Fixed step count: immune to accumulated drift of repeated additions,
    // so snapshot counts are deterministic. The final step absorbs any
    // remainder.
    let ratio = params.t_end / params.dt;
    let n_steps = if (ratio - ratio.round()).abs() <= S::lit(1e-9) * ratio.max(S::one()) {
        ratio.round()
    } else {
        ratio.ceil()
    }
    .to_usize()
    .unwrap_or(usize::MAX)
    .max(1);

    let mut step_index = 0usize;
    while step_index < n_steps {
        let last = step_index + 1 == n_steps;
        let dt = if last {
            params.t_end - state.t
        } else {
            params.dt
        };
        let (next, undershoot) = match &mut stepper {
            Some(st) => st.step(&state, src, dt)?,
            None => (
                step_explicit_rk4_sized(&state, c, params, src, dt)?,
                S::zero(),
            ),
        };
        let scale = next.theta.max_norm().max(S::one());
        if undershoot > monitors.undershoot_limit * scale {
            return Err(Error::SolverFailure(format!(
                "temperature undershoot {} exceeds {} at t = {}",
                undershoot,
                monitors.undershoot_limit * scale,
                next.t
            )));
        }
        state = next;
        step_index += 1;

        if step_index % monitors.snapshot_every == 0 || last {
            traj.states.push(state.clone());
        }
        if step_index % monitors.cadence_steps == 0 || last {
            let record = make_record(&state, undershoot);
            let m = record.blowup;
            traj.records.push(record);
            let grown = initial_monitor > S::zero()
                && m > monitors.blowup_growth_factor * initial_monitor;
            if m > monitors.blowup_threshold || grown {
                let threshold = if m > monitors.blowup_threshold {
                    monitors.blowup_threshold
                } else {
                    monitors.blowup_growth_factor * initial_monitor
                };
                return Err(Error::BlowupSuspected {
                    monitor: m.as_f64(),
                    threshold: threshold.as_f64(),
                    t: state.t.as_f64(),
                });
            }
        }
    }
    Ok(traj)
}
