//! Verification campaigns: viscosity-limit sweeps, grid and time refinement,
//! twin-run uniqueness, blow-up demonstration, and the harmonic loss-average
//! check from the material modeling chain.
//!
//! Sweep points run in parallel; aggregation preserves the parameter order,
//! so results are reproducible bitwise from the configuration on a platform.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{difference_functional, ConstantsEstimate};
use crate::dynamics::{
    evolve, EvolutionParams, MonitorConfig, Scheme, SourceTerms, State, Trajectory,
};
use crate::grid::Grid;
use crate::manufactured::ManufacturedSolution;
use crate::model::{
    zener_to_coefficients, Coefficient, CoefficientSet, CoefficientSpec, InitialData,
    InitialSpecs, ProfileSpec, ZenerMaterial,
};
use crate::{Error, Result, Scalar};

/// Least-squares slope of `log(error)` against `log(parameter)`, with the
/// root-mean-square deviation of the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct OrderFit<S> {
    pub order: S,
    pub residual: S,
}

/// Fits `error ~ C * x^p` in log-log space; `None` for fewer than two points
/// or non-positive data.
pub fn fit_order_loglog<S: Scalar>(xs: &[S], errors: &[S]) -> Option<OrderFit<S>> {
    if xs.len() != errors.len() || xs.len() < 2 {
        return None;
    }
    if xs.iter().any(|x| !(*x > S::zero())) || errors.iter().any(|e| !(*e > S::zero())) {
        return None;
    }
    let n = S::of_usize(xs.len());
    let lx: Vec<S> = xs.iter().map(|x| x.ln()).collect();
    let le: Vec<S> = errors.iter().map(|e| e.ln()).collect();
    let sx: S = lx.iter().copied().sum();
    let se: S = le.iter().copied().sum();
    let sxx: S = lx.iter().map(|x| *x * *x).sum();
    let sxe: S = lx.iter().zip(&le).map(|(x, e)| *x * *e).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() <= S::lit(1e-300) {
        return None;
    }
    let slope = (n * sxe - sx * se) / denom;
    let intercept = (se - slope * sx) / n;
    let mut rss = S::zero();
    for (x, e) in lx.iter().zip(&le) {
        let d = *e - (slope * *x + intercept);
        rss += d * d;
    }
    Some(OrderFit {
        order: slope,
        residual: (rss / n).sqrt(),
    })
}

/// Error norms of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct FieldErrorRow<S> {
    pub parameter: S,
    pub err_u: S,
    pub err_v: S,
    pub err_w: S,
    pub err_theta: S,
    pub err_total: S,
}

/// Parameter sweep outcome: per-point error norms and a fitted order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct SweepResult<S> {
    /// Swept parameter name (`eps`, `n`, `dt`).
    pub parameter: String,
    pub rows: Vec<FieldErrorRow<S>>,
    pub fit: Option<OrderFit<S>>,
}

fn distance_row<S: Scalar>(parameter: S, a: &Trajectory<S>, b: &Trajectory<S>) -> Result<FieldErrorRow<S>> {
    let d = a.sup_distance(b)?;
    Ok(FieldErrorRow {
        parameter,
        err_u: d.u,
        err_v: d.v,
        err_w: d.w,
        err_theta: d.theta,
        err_total: d.max(),
    })
}

/// Runs the regularized problem for each viscosity in `eps_list` (strictly
/// decreasing, all positive) on one fixed grid and reports sup-in-time max
/// distances to the `eps = 0` run, with the fitted order in `eps`.
pub fn eps_sweep<S: Scalar>(
    init: &InitialData<S>,
    c: &CoefficientSet<S>,
    eps_list: &[S],
    params: &EvolutionParams<S>,
    monitors: &MonitorConfig<S>,
) -> Result<SweepResult<S>> {
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidSpec(
            "eps_list must be strictly decreasing".into(),
        ));
    }
    let baseline = {
        let mut p = *params;
        p.eps = S::zero();
        evolve(init, c, &p, &SourceTerms::none(), monitors)?
    };
    let rows: Vec<FieldErrorRow<S>> = eps_list
        .par_iter()
        .map(|&eps| {
            let mut p = *params;
            p.eps = eps;
            let traj = evolve(init, c, &p, &SourceTerms::none(), monitors)?;
            distance_row(eps, &traj, &baseline)
        })
        .collect::<Result<_>>()?;
    let xs: Vec<S> = rows.iter().map(|r| r.parameter).collect();
    let errs: Vec<S> = rows.iter().map(|r| r.err_total).collect();
    let fit = fit_order_loglog(&xs, &errs);
    Ok(SweepResult {
        parameter: "eps".into(),
        rows,
        fit,
    })
}

/// Reference against which refinement errors are measured.
#[derive(Debug, Clone)]
pub enum RefinementReference<S> {
    /// Restriction of the finest run onto each coarser grid.
    Finest,
    /// Manufactured solution with its analytic source terms.
    Manufactured(ManufacturedSolution<S>),
}

fn final_state_error<S: Scalar>(a: &State<S>, b: &State<S>) -> FieldErrorRow<S> {
    let d = a.max_distance(b).expect("same grid");
    FieldErrorRow {
        parameter: S::zero(),
        err_u: d.u,
        err_v: d.v,
        err_w: d.w,
        err_theta: d.theta,
        err_total: d.max(),
    }
}

fn restrict_state<S: Scalar>(s: &State<S>, target: Grid<S>) -> State<S> {
    State {
        t: s.t,
        u: s.u.resample(target),
        v: s.v.resample(target),
        w: s.w.resample(target),
        theta: s.theta.resample(target),
    }
}

/// Runs the same problem over a grid sequence and fits the spatial order of
/// the final-time error against the chosen reference.
pub fn grid_refinement<S: Scalar>(
    length: S,
    specs: &InitialSpecs<S>,
    c: &CoefficientSet<S>,
    params: &EvolutionParams<S>,
    monitors: &MonitorConfig<S>,
    n_list: &[usize],
    reference: &RefinementReference<S>,
) -> Result<SweepResult<S>> {
    if n_list.is_empty() {
        return Err(Error::InvalidSpec("n_list must be nonempty".into()));
    }
    let src = match reference {
        RefinementReference::Manufactured(m) => m.sources(),
        RefinementReference::Finest => SourceTerms::none(),
    };
    let finals: Vec<State<S>> = n_list
        .par_iter()
        .map(|&n| {
            let grid = Grid::new(length, n)?;
            let init = specs.build(grid)?;
            let traj = evolve(&init, c, params, &src, monitors)?;
            Ok(traj.last().clone())
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut hs = Vec::new();
    match reference {
        RefinementReference::Manufactured(m) => {
            for (state, &n) in finals.iter().zip(n_list) {
                let exact = m.exact_state(state.grid(), state.t);
                let mut row = final_state_error(state, &exact);
                row.parameter = S::of_usize(n);
                hs.push(state.grid().spacing());
                rows.push(row);
            }
        }
        RefinementReference::Finest => {
            if n_list.len() < 2 {
                return Err(Error::InvalidSpec(
                    "finest-reference refinement needs at least two grids".into(),
                ));
            }
            let finest = finals.last().expect("nonempty");
            for (state, &n) in finals.iter().zip(n_list).take(n_list.len() - 1) {
                let restricted = restrict_state(finest, state.grid());
                let mut row = final_state_error(state, &restricted);
                row.parameter = S::of_usize(n);
                hs.push(state.grid().spacing());
                rows.push(row);
            }
        }
    }
    let errs: Vec<S> = rows.iter().map(|r| r.err_total).collect();
    let fit = if rows.len() >= 2 {
        // order in h: error ~ C h^p with h decreasing
        fit_order_loglog(&hs, &errs)
    } else {
        None
    };
    Ok(SweepResult {
        parameter: "n".into(),
        rows,
        fit,
    })
}

/// Runs the same problem over a step-size sequence on one grid and fits the
/// temporal order of the final-time error against a much finer-step run.
pub fn time_refinement<S: Scalar>(
    length: S,
    n: usize,
    specs: &InitialSpecs<S>,
    c: &CoefficientSet<S>,
    params: &EvolutionParams<S>,
    monitors: &MonitorConfig<S>,
    dt_list: &[S],
    src: &SourceTerms<S>,
) -> Result<SweepResult<S>> {
    if dt_list.len() < 2 || dt_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidSpec(
            "dt_list must be strictly decreasing with at least two entries".into(),
        ));
    }
    let grid = Grid::new(length, n)?;
    let init = specs.build(grid)?;
    let dt_ref = *dt_list.last().expect("nonempty") / S::lit(8.0);
    let reference = {
        let mut p = *params;
        p.dt = dt_ref;
        evolve(&init, c, &p, src, monitors)?.last().clone()
    };
    let rows: Vec<FieldErrorRow<S>> = dt_list
        .par_iter()
        .map(|&dt| {
            let mut p = *params;
            p.dt = dt;
            let traj = evolve(&init, c, &p, src, monitors)?;
            let mut row = final_state_error(traj.last(), &reference);
            row.parameter = dt;
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let xs: Vec<S> = rows.iter().map(|r| r.parameter).collect();
    let errs: Vec<S> = rows.iter().map(|r| r.err_total).collect();
    let fit = fit_order_loglog(&xs, &errs);
    Ok(SweepResult {
        parameter: "dt".into(),
        rows,
        fit,
    })
}

/// How the two runs of a twin comparison differ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub enum TwinPairing<S> {
    /// Same problem on two grids; the fine run is restricted to the coarse
    /// grid (injection at shared nodes, cubic interpolation otherwise).
    TwoGrids { n_coarse: usize, n_fine: usize },
    /// Semi-implicit versus explicit RK4 on the same grid and step.
    TwoSchemes,
    /// Same grid and scheme, second run with the halved step `dt_b`.
    TwoTimeSteps { dt_b: S },
}

/// Twin-run difference-functional trace.
#[derive(Debug, Clone, Serialize)]
#[serde(bound = "S: Serialize")]
pub struct TwinReport<S> {
    pub times: Vec<S>,
    pub y_diff: Vec<S>,
    pub y0: S,
    pub sup_y_diff: S,
    /// Smallest `C` with `y(t) <= y(0) exp(C t)` over the trace, when
    /// `y(0) > 0`.
    pub growth_constant: Option<S>,
}

fn summarize_twin<S: Scalar>(series: Vec<(S, S)>) -> TwinReport<S> {
    let y0 = series.first().map(|&(_, y)| y).unwrap_or(S::zero());
    let sup = series
        .iter()
        .fold(S::zero(), |acc, &(_, y)| acc.max(y));
    let growth_constant = if y0 > S::lit(1e-300) {
        let mut c_fit = S::zero();
        for &(t, y) in series.iter().skip(1) {
            if t > S::zero() && y > S::zero() {
                c_fit = c_fit.max((y / y0).ln() / t);
            }
        }
        Some(c_fit)
    } else {
        None
    };
    TwinReport {
        times: series.iter().map(|&(t, _)| t).collect(),
        y_diff: series.iter().map(|&(_, y)| y).collect(),
        y0,
        sup_y_diff: sup,
        growth_constant,
    }
}

fn restrict_trajectory<S: Scalar>(traj: &Trajectory<S>, target: Grid<S>) -> Trajectory<S> {
    Trajectory {
        states: traj.states.iter().map(|s| restrict_state(s, target)).collect(),
        records: traj.records.clone(),
    }
}

/// Runs the pairing and evaluates the difference functional on the shared
/// monitor times (on the coarse grid for two-grid pairings).
pub fn twin_run_uniqueness<S: Scalar>(
    length: S,
    default_n: usize,
    specs: &InitialSpecs<S>,
    c: &CoefficientSet<S>,
    params: &EvolutionParams<S>,
    monitors: &MonitorConfig<S>,
    consts: &ConstantsEstimate<S>,
    pairing: &TwinPairing<S>,
) -> Result<TwinReport<S>> {
    let series = match pairing {
        TwinPairing::TwoGrids { n_coarse, n_fine } => {
            let coarse_grid = Grid::new(length, *n_coarse)?;
            let fine_grid = Grid::new(length, *n_fine)?;
            let (coarse, fine) = rayon::join(
                || -> Result<Trajectory<S>> {
                    evolve(&specs.build(coarse_grid)?, c, params, &SourceTerms::none(), monitors)
                },
                || -> Result<Trajectory<S>> {
                    evolve(&specs.build(fine_grid)?, c, params, &SourceTerms::none(), monitors)
                },
            );
            let coarse = coarse?;
            let fine = restrict_trajectory(&fine?, coarse_grid);
            difference_functional(&coarse, &fine, c, consts)?
        }
        TwinPairing::TwoSchemes => {
            let grid = Grid::new(length, default_n)?;
            let init = specs.build(grid)?;
            let a = evolve(&init, c, params, &SourceTerms::none(), monitors)?;
            let mut p = *params;
            p.scheme = Scheme::ExplicitRk4;
            let b = evolve(&init, c, &p, &SourceTerms::none(), monitors)?;
            difference_functional(&a, &b, c, consts)?
        }
        TwinPairing::TwoTimeSteps { dt_b } => {
            let grid = Grid::new(length, default_n)?;
            let init = specs.build(grid)?;
            let a = evolve(&init, c, params, &SourceTerms::none(), monitors)?;
            let ratio = (params.dt / *dt_b).round();
            let factor = ratio.to_usize().unwrap_or(0);
            if factor == 0 || (params.dt - *dt_b * ratio).abs() > S::lit(1e-12) * params.dt {
                return Err(Error::InvalidSpec(
                    "dt_b must divide dt so monitor times align".into(),
                ));
            }
            let mut p = *params;
            p.dt = *dt_b;
            let mut m = *monitors;
            m.cadence_steps = monitors.cadence_steps * factor;
            let b = evolve(&init, c, &p, &SourceTerms::none(), &m)?;
            difference_functional(&a, &b, c, consts)?
        }
    };
    Ok(summarize_twin(series))
}

/// Twin with perturbed initial displacement: the second run adds
/// `perturbation` to `u0` on the same grid, scheme, and step.
pub fn perturbed_twin<S: Scalar>(
    length: S,
    n: usize,
    specs: &InitialSpecs<S>,
    perturbation: &ProfileSpec<S>,
    c: &CoefficientSet<S>,
    params: &EvolutionParams<S>,
    monitors: &MonitorConfig<S>,
    consts: &ConstantsEstimate<S>,
) -> Result<TwinReport<S>> {
    let grid = Grid::new(length, n)?;
    let init_a = specs.build(grid)?;
    let mut init_b = init_a.clone();
    let delta = perturbation.evaluate(grid)?;
    init_b.u0.axpy(S::one(), &delta);
    let (a, b) = rayon::join(
        || evolve(&init_a, c, params, &SourceTerms::none(), monitors),
        || evolve(&init_b, c, params, &SourceTerms::none(), monitors),
    );
    let series = difference_functional(&a?, &b?, c, consts)?;
    Ok(summarize_twin(series))
}

/// Outcome of one blow-up demonstration run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", bound = "S: Serialize")]
pub enum BlowupOutcome<S> {
    Completed,
    Tripped { t_star: S, monitor: f64 },
}

/// Blow-up demonstration report: a control run with unit coefficients and an
/// amplitude sweep with the growth-law coefficients.
#[derive(Debug, Clone, Serialize)]
#[serde(bound = "S: Serialize")]
pub struct BlowupDemoReport<S> {
    pub control_completed: bool,
    pub amplitudes: Vec<S>,
    pub outcomes: Vec<BlowupOutcome<S>>,
}

/// Arms the extensibility monitor and drives the system with the growth-law
/// coefficients `gamma = ghat = Gamma = growth` and initial velocity
/// `amplitude * cos(pi x / L)`; records whether and when each run trips.
pub fn blowup_demo<S: Scalar>(
    growth: &CoefficientSpec<S>,
    amplitudes: &[S],
    n: usize,
    params: &EvolutionParams<S>,
    monitors: &MonitorConfig<S>,
) -> Result<BlowupDemoReport<S>> {
    let length = S::one();
    let grid = Grid::new(length, n)?;
    let growth_coeffs = CoefficientSet {
        alpha: S::zero(),
        d: S::one(),
        gamma: Coefficient::compile(growth.clone())?,
        ghat: Coefficient::compile(growth.clone())?,
        gamma_src: Coefficient::compile(growth.clone())?,
    };
    let control_coeffs = CoefficientSet::constant(S::zero(), S::one(), S::one(), S::one(), S::one());

    let run = |amplitude: S, coeffs: &CoefficientSet<S>| -> Result<BlowupOutcome<S>> {
        let init = InitialSpecs {
            u0: ProfileSpec::Zero,
            u0t: ProfileSpec::cosine(1, amplitude),
            u0tt: ProfileSpec::Zero,
            theta0: ProfileSpec::Zero,
            remove_means: true,
        }
        .build(grid)?;
        match evolve(&init, coeffs, params, &SourceTerms::none(), monitors) {
            Ok(_) => Ok(BlowupOutcome::Completed),
            Err(Error::BlowupSuspected { monitor, t, .. }) => Ok(BlowupOutcome::Tripped {
                t_star: S::lit(t),
                monitor,
            }),
            Err(e) => Err(e),
        }
    };

    let control = run(S::lit(0.1), &control_coeffs)?;
    let outcomes: Vec<BlowupOutcome<S>> = amplitudes
        .par_iter()
        .map(|&a| run(a, &growth_coeffs))
        .collect::<Result<_>>()?;
    Ok(BlowupDemoReport {
        control_completed: matches!(control, BlowupOutcome::Completed),
        amplitudes: amplitudes.to_vec(),
        outcomes,
    })
}

/// Period averages of the Zener work terms under harmonic strain
/// `S(t) = A sin(w t)` with the stiffness evaluated at zero temperature.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(bound = "S: Serialize")]
pub struct HarmonicLossReport<S> {
    /// `<c S S_t>`: stored elastic power, zero on average.
    pub avg_storage: S,
    /// `<P>` with the elastic-dominance closure `T_t ~ c S_t`.
    pub avg_power: S,
    /// `<Q>` for the single-term loss density.
    pub avg_q: S,
    /// Closed form `(tau_ret - tau_rel) c w^2 A^2 / 2`.
    pub expected_q: S,
}

/// Checks that the stored-energy term averages to zero over a period and
/// that the approximated total power matches the single-term loss density.
pub fn harmonic_loss_check<S: Scalar>(
    m: &ZenerMaterial<S>,
    omega: S,
    amplitude: S,
) -> Result<HarmonicLossReport<S>> {
    if !(omega > S::zero()) {
        return Err(Error::InvalidSpec(format!("omega must be > 0, got {omega}")));
    }
    m.validate()?;
    let c0 = zener_to_coefficients(m)?;
    let _ = c0;
    let stiffness = Coefficient::compile(m.stiffness.clone())?.value(S::zero());

    let period = S::lit(2.0) * S::PI() / omega;
    let samples = 4096usize;
    let dt = period / S::of_usize(samples);
    let strain = |t: S| amplitude * (omega * t).sin();
    let strain_rate = |t: S| amplitude * omega * (omega * t).cos();
    let half = S::lit(0.5);

    let mut avg_storage = S::zero();
    let mut avg_power = S::zero();
    let mut avg_q = S::zero();
    for i in 0..=samples {
        let t = dt * S::of_usize(i);
        let wgt = if i == 0 || i == samples { half } else { S::one() };
        let s = strain(t);
        let st = strain_rate(t);
        let storage = stiffness * s * st;
        // P = c S S_t + tau_ret c S_t^2 - tau_rel S_t T_t with T_t ~ c S_t
        let power = storage + (m.tau_ret - m.tau_rel) * stiffness * st * st;
        let q = (m.tau_ret - m.tau_rel) * stiffness * st * st;
        avg_storage += wgt * storage;
        avg_power += wgt * power;
        avg_q += wgt * q;
    }
    let norm = dt / period;
    let expected_q =
        (m.tau_ret - m.tau_rel) * stiffness * omega * omega * amplitude * amplitude * half;
    Ok(HarmonicLossReport {
        avg_storage: avg_storage * norm,
        avg_power: avg_power * norm,
        avg_q: avg_q * norm,
        expected_q,
    })
}
