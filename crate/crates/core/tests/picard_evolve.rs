//! Cross-solver consistency: the Duhamel fixed point against the
//! time-stepped solution of the same spatially discrete system.

mod common;

use mgtsim_core::dynamics::{evolve, EvolutionParams, MonitorConfig, SourceTerms};
use mgtsim_core::grid::Grid;
use mgtsim_core::model::{CoefficientSet, CosineTerm, InitialSpecs, ProfileSpec};
use mgtsim_core::picard::{
    estimate_semigroup_constants, picard_solve, PicardConfig, PicardIterate, PicardReport,
};

fn problem_specs() -> InitialSpecs<f64> {
    InitialSpecs {
        u0: ProfileSpec::cosine(1, 0.1),
        u0t: ProfileSpec::cosine(1, 0.05),
        u0tt: ProfileSpec::Zero,
        theta0: ProfileSpec::CosineSum {
            terms: vec![
                CosineTerm {
                    mode: 0,
                    amplitude: 0.02,
                },
                CosineTerm {
                    mode: 1,
                    amplitude: 0.02,
                },
            ],
        },
        remove_means: false,
    }
}

fn problem_coeffs() -> CoefficientSet<f64> {
    CoefficientSet::constant(0.0, 1.0, 0.1, 0.1, 0.1)
}

fn solve(n: usize, n_time: usize, t_fraction: f64) -> (PicardConfig<f64>, PicardReport<f64>) {
    let grid = Grid::new(1.0, n).unwrap();
    let init = problem_specs().build(grid).unwrap();
    let c = problem_coeffs();
    let eps = 0.1;
    let sg = estimate_semigroup_constants(grid, eps, c.d, 11);
    let cfg = PicardConfig::for_problem(&init, &c, eps, &sg, t_fraction, n_time, 60, 1e-11)
        .unwrap();
    let report = picard_solve(&init, &c, &cfg).unwrap();
    (cfg, report)
}

/// Max over shared sample times of the field-wise max-norm difference.
fn iterate_distance(a: &PicardIterate<f64>, stride_a: usize, b: &PicardIterate<f64>, stride_b: usize) -> f64 {
    let count = (a.samples.len() - 1) / stride_a;
    assert_eq!(count, (b.samples.len() - 1) / stride_b);
    let mut worst = 0.0f64;
    for j in 0..=count {
        let qa = &a.samples[j * stride_a];
        let qb = &b.samples[j * stride_b];
        for (fa, fb) in [
            (&qa.w, &qb.w),
            (&qa.v, &qb.v),
            (&qa.u, &qb.u),
            (&qa.theta, &qb.theta),
        ] {
            worst = worst.max(fa.sub(fb).unwrap().max_norm());
        }
    }
    worst
}

#[test]
fn contraction_and_ball_bound_hold_for_half_horizon() {
    let (cfg, report) = solve(64, 64, 0.5);
    println!(
        "picard horizon t0 = {:.4e}, t = {:.4e}, iterations = {}, ratios = {:?}",
        cfg.t0, cfg.t, report.iterations, report.ratios
    );
    assert!(report.converged);
    assert!(cfg.t0 > 0.0 && cfg.t <= cfg.t0);
    for (i, r) in report.ratios.iter().enumerate() {
        // ratios are recorded from the second difference on
        assert!(*r < 1.0, "ratio {r} at index {i}");
    }
    for (k, norm) in report.sup_norms.iter().enumerate() {
        assert!(
            *norm <= cfg.r + 1e-9,
            "iterate {k} escaped the ball: {norm} > {}",
            cfg.r
        );
    }
}

#[test]
fn fixed_point_matches_time_stepping_within_combined_error() {
    let n = 64;
    let (cfg, report) = solve(n, 64, 0.5);
    let (_, report_fine) = solve(n, 128, 0.5);
    // picard discretization error estimated by time-quadrature refinement
    let picard_err = iterate_distance(&report.iterate, 1, &report_fine.iterate, 2);

    let grid = Grid::new(1.0, n).unwrap();
    let init = problem_specs().build(grid).unwrap();
    let c = problem_coeffs();
    let run = |substeps: usize| {
        let dt = cfg.t / (64.0 * substeps as f64);
        let params = EvolutionParams::new(cfg.eps, dt, cfg.t);
        evolve(
            &init,
            &c,
            &params,
            &SourceTerms::none(),
            &MonitorConfig::with_cadence(substeps),
        )
        .unwrap()
    };
    let coarse = run(4);
    let fine = run(8);
    assert_eq!(coarse.states.len(), 65);
    let mut evolve_err = 0.0f64;
    for (a, b) in coarse.states.iter().zip(fine.states.iter().step_by(1)) {
        let d = a.max_distance(b).unwrap();
        evolve_err = evolve_err.max(d.max());
    }

    let mut dist = 0.0f64;
    for (j, q) in report.iterate.samples.iter().enumerate() {
        let s = &coarse.states[j];
        assert!((s.t - report.iterate.times[j]).abs() <= 1e-9 * (1.0 + s.t));
        dist = dist
            .max(q.w.sub(&s.w).unwrap().max_norm())
            .max(q.v.sub(&s.v).unwrap().max_norm())
            .max(q.u.sub(&s.u).unwrap().max_norm())
            .max(q.theta.sub(&s.theta).unwrap().max_norm());
    }
    let budget = 5.0 * (picard_err + evolve_err) + 1e-12;
    println!(
        "picard-vs-evolve distance {dist:.3e}, picard err {picard_err:.3e}, evolve err {evolve_err:.3e}, budget {budget:.3e}"
    );
    assert!(dist <= budget, "distance {dist:.3e} exceeds budget {budget:.3e}");
}

#[test]
fn joint_refinement_shrinks_cross_solver_distance() {
    let n = 64;
    let grid = Grid::new(1.0, n).unwrap();
    let init = problem_specs().build(grid).unwrap();
    let c = problem_coeffs();
    let (cfg, coarse_report) = solve(n, 32, 0.5);
    let (_, fine_report) = solve(n, 128, 0.5);

    let dist_for = |report: &PicardReport<f64>, n_time: usize| {
        let substeps = 512 / n_time;
        let dt = cfg.t / 512.0;
        let params = EvolutionParams::new(cfg.eps, dt, cfg.t);
        let traj = evolve(
            &init,
            &c,
            &params,
            &SourceTerms::none(),
            &MonitorConfig::with_cadence(substeps),
        )
        .unwrap();
        assert_eq!(traj.states.len(), n_time + 1);
        let mut worst = 0.0f64;
        for (j, q) in report.iterate.samples.iter().enumerate() {
            let s = &traj.states[j];
            worst = worst
                .max(q.w.sub(&s.w).unwrap().max_norm())
                .max(q.v.sub(&s.v).unwrap().max_norm())
                .max(q.u.sub(&s.u).unwrap().max_norm())
                .max(q.theta.sub(&s.theta).unwrap().max_norm());
        }
        worst
    };
    let d_coarse = dist_for(&coarse_report, 32);
    let d_fine = dist_for(&fine_report, 128);
    println!("cross-solver distance: n_time=32 {d_coarse:.3e}, n_time=128 {d_fine:.3e}");
    assert!(d_fine < d_coarse, "refinement did not reduce the distance");
}
