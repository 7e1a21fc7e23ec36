//! Behaviour of the continuation solver on small grids.

use std::f64::consts::PI;

use band_core::solver::{minimize, objective, SolveConfig};
use band_core::*;
use nalgebra::{Rotation3, Unit, Vector3};

fn config(n: usize) -> SolveConfig {
    SolveConfig::with_defaults(2.0 * PI, n, 1.0).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn zero_iterations_returns_the_start() {
    let mut cfg = config(64);
    cfg.max_iterations = 0;
    let r = minimize(&cfg, None).unwrap();
    let start = solver::default_initial_profile(&cfg.grid);
    assert!(!r.converged);
    assert_eq!(r.profile.k(), start.k());
    assert_eq!(r.profile.w(), start.w());
    assert_eq!(r.iterations, 0);
}

#[test]
fn solves_are_bit_identical() {
    let mut cfg = config(64);
    cfg.init_noise = 0.05;
    cfg.seed = 11;
    let a = minimize(&cfg, None).unwrap();
    let b = minimize(&cfg, None).unwrap();
    assert_eq!(a.profile, b.profile);
    assert_eq!(a.energy.to_bits(), b.energy.to_bits());
    assert_eq!(a.iterations, b.iterations);

    cfg.seed = 12;
    let c = minimize(&cfg, None).unwrap();
    assert_ne!(a.profile, c.profile);
}

#[test]
fn converges_and_descends_within_each_stage() {
    let cfg = config(128);
    let r = minimize(&cfg, None).unwrap();
    assert!(r.converged && r.closure_within_tol, "{:?}", r.closure);
    assert!(r.closure.pos_gap <= 1e-6 * cfg.grid.length());
    assert!(r.closure.frame_gap <= 1e-6);
    for stage in &r.stages {
        for pair in stage.history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12 * pair[0].abs(), "{} -> {}", pair[0], pair[1]);
        }
    }
}

#[test]
fn doubling_stiffness_doubles_energy() {
    let base = minimize(&config(128), None).unwrap();
    let mut cfg = SolveConfig::with_defaults(2.0 * PI, 128, 2.0).unwrap();
    cfg.delta_schedule = config(128).delta_schedule;
    cfg.params = cfg.params.with_delta(*cfg.delta_schedule.last().unwrap()).unwrap();
    let twice = minimize(&cfg, None).unwrap();
    assert!(twice.converged);
    let rel = (twice.energy - 2.0 * base.energy).abs() / base.energy;
    println!("energy rel {rel:e}, K diff {:e}", max_diff(twice.profile.k(), base.profile.k()));
    assert!(rel <= 1e-8);
    assert!(max_diff(twice.profile.k(), base.profile.k()) <= 1e-5);
    assert!(max_diff(twice.profile.w(), base.profile.w()) <= 1e-5);
}

#[test]
fn rotating_the_initial_frame_rotates_the_solution() {
    let cfg = config(128);
    let base = minimize(&cfg, None).unwrap();
    let rot = Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::new(1.0, -2.0, 0.5)), 0.9)
        .into_inner();
    let shift = Vector3::new(0.3, 1.0, -2.0);
    let mut moved = cfg.clone();
    moved.initial_frame = FrameState::identity().transformed(&rot, &shift);
    let r = minimize(&moved, None).unwrap();
    let dk = max_diff(r.profile.k(), base.profile.k());
    let dw = max_diff(r.profile.w(), base.profile.w());
    let de = (r.energy - base.energy).abs();
    let frame_err = base
        .frames
        .iter()
        .zip(&r.frames)
        .map(|(a, b)| (a.transformed(&rot, &shift).r - b.r).norm())
        .fold(0.0, f64::max);
    println!("gauge: dK {dk:e} dW {dw:e} dE {de:e} frames {frame_err:e}");
    assert!(r.converged);
    assert!(dk <= 1e-10 && dw <= 1e-10 && de <= 1e-10 * base.energy);
    assert!(frame_err <= 1e-10);
    assert!((r.closure.pos_gap - base.closure.pos_gap).abs() <= 1e-10);
    assert!((r.closure.frame_gap - base.closure.frame_gap).abs() <= 1e-10);
}

#[test]
fn annulus_mode_keeps_the_circle() {
    let mut cfg = config(64);
    cfg.closure = Closure::Periodic;
    let circle = ShapeProfile::constant(cfg.grid, Closure::Periodic, 1.0, 0.0).unwrap();
    // Stationary up to the closure coupling: the energy gradient is uniform
    // in K, the direction that changes total turning, and zero in W. The
    // penalty adds only the effect of the integrator's O(h^4) closure gap.
    let g = objective(&circle, &cfg).unwrap();
    let e = energy_gradient(&circle, &cfg.params).unwrap();
    let h = cfg.grid.spacing();
    assert!(max_diff(&e[..64], &[e[0]; 64]) == 0.0);
    assert!(e[64..].iter().all(|v| *v == 0.0));
    assert!(max_diff(&g.gradient, &e) <= 1e-3 * h);
    let r = minimize(&cfg, Some(&circle)).unwrap();
    let drift = max_diff(r.profile.k(), circle.k()).max(max_diff(r.profile.w(), circle.w()));
    println!("circle drift {drift:e}");
    assert!(drift <= 1e-6);
}

#[test]
fn residuals_shrink_under_refinement() {
    // Continued to delta = 0; at the default final delta the norms plateau.
    let norm = |n: usize| {
        let mut cfg = config(n);
        cfg.delta_schedule.extend([0.01, 0.005, 0.002, 0.0]);
        cfg.params = cfg.params.with_delta(0.0).unwrap();
        let r = minimize(&cfg, None).unwrap();
        assert!(r.converged);
        let res = r.residuals.unwrap();
        res.max_norm()
    };
    let (a, b) = (norm(256), norm(512));
    println!("residual max norm {a:e} -> {b:e}, ratio {}", a / b);
    assert!(a / b >= 3.5);
}
