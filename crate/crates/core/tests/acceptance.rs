//! Acceptance criteria. Each criterion prints one `PASS`/`FAIL` line with the
//! measured quantity; the process exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::process::Command;
use std::time::Instant;

use band_core::solver::{minimize, objective_with_frame, ClosureWeights, SolveConfig, SolveResult};
use band_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Ledger {
    failed: Vec<usize>,
}

impl Ledger {
    fn record(&mut self, id: usize, ok: bool, what: &str) {
        println!("{} criterion {id}: {what}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failed.push(id);
        }
    }
}

/// Fourth-order central difference.
fn central(f: impl Fn(f64) -> f64, x: f64, eps: f64) -> f64 {
    (8.0 * (f(x + eps) - f(x - eps)) - (f(x + 2.0 * eps) - f(x - 2.0 * eps))) / (12.0 * eps)
}

fn samples() -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..1000)
        .map(|_| {
            let k = rng.gen_range(0.1..10.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            (k, rng.gen_range(-10.0..10.0), rng.gen_range(0.1..5.0))
        })
        .collect()
}

fn constitutive(ledger: &mut Ledger) {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (k, w, a) in samples() {
        let p = EnergyParams::exact(a).unwrap();
        let bf = moment_b_frak(k, w, &p).unwrap();
        let tf = moment_t_frak(k, w, &p).unwrap();
        // The density varies on the scale |K| in K and is quartic in W.
        let dk = central(|x| energy_density(x, w, &p).unwrap(), k, 1e-3 * k.abs());
        let dw = central(|x| energy_density(k, x, &p).unwrap(), w, 1e-3 * k.abs().max(w.abs()));
        let scale = bf.hypot(tf);
        worst = worst.max((bf - dk).abs() / scale).max((tf - dw).abs() / scale);
    }
    let secs = start.elapsed().as_secs_f64();
    ledger.record(
        1,
        worst <= 1e-7 && secs < 1.0,
        &format!("moment vs finite difference, max relative error {worst:.2e} (<= 1e-7), {secs:.3} s"),
    );
}

fn mean_curvature_identity(ledger: &mut Ledger) {
    let mut worst: f64 = 0.0;
    for (k, w, a) in samples() {
        let e = energy_density(k, w, &EnergyParams::exact(a).unwrap()).unwrap();
        let h = mean_curvature(k, w).unwrap();
        let rhs = a * (2.0 * h * k).powi(2);
        worst = worst.max((e * k * k - rhs).abs() / rhs.abs());
    }
    ledger.record(2, worst <= 1e-12, &format!("E K^2 = A (2HK)^2, max relative error {worst:.2e} (<= 1e-12)"));
}

fn gradient_oracle(ledger: &mut Ledger) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = EnergyParams::new(1.0, 0.1).unwrap();
    let weights = ClosureWeights { pos: 3.0, frame: 20.0 };
    let grid = ArcGrid::new(2.0 * PI, 32).unwrap();
    let mut worst: f64 = 0.0;
    for closure in [Closure::Mobius, Closure::Periodic] {
        for _ in 0..3 {
            let phase = rng.gen_range(0.0..PI);
            let base = ShapeProfile::from_fn(
                grid,
                closure,
                |s| 1.5 * (0.5 * s + phase).cos() + 0.1,
                |s| 0.6 + 0.3 * s.sin(),
            )
            .unwrap();
            let x: Vec<f64> = base.to_vector().iter().map(|v| v + 0.05 * rng.gen_range(-1.0..1.0)).collect();
            let p = base.with_vector(&x).unwrap();
            let f = |y: &[f64]| {
                objective_with_frame(&p.with_vector(y).unwrap(), &params, weights, &FrameState::identity())
                    .unwrap()
                    .value
            };
            let g = objective_with_frame(&p, &params, weights, &FrameState::identity()).unwrap().gradient;
            let fd: Vec<f64> = (0..x.len())
                .map(|i| {
                    central(
                        |t| {
                            let mut y = x.clone();
                            y[i] = t;
                            f(&y)
                        },
                        x[i],
                        1e-4,
                    )
                })
                .collect();
            let diff = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let norm = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
            worst = worst.max(diff / norm);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ledger.record(
        3,
        worst <= 1e-5 && secs < 10.0,
        &format!("objective gradient vs finite difference (N = 32), relative error {worst:.2e} (<= 1e-5), {secs:.2} s"),
    );
}

fn circle(ledger: &mut Ledger) {
    let mut worst_res: f64 = 0.0;
    let mut worst_spread: f64 = 0.0;
    for n in [64, 256, 1024] {
        let grid = ArcGrid::new(2.0 * PI, n).unwrap();
        let k = 1.0;
        let p = ShapeProfile::constant(grid, Closure::Periodic, k, 0.0).unwrap();
        let params = EnergyParams::exact(1.0).unwrap();
        let r = equilibrium_residual(&p, &params, k * k, 0.0).unwrap();
        worst_res = worst_res.max(r.max_norm());
        worst_spread = worst_spread.max(estimate_c(&p, &params, 0.0).unwrap().c_spread);
    }
    ledger.record(
        4,
        worst_res <= 1e-12 && worst_spread <= 1e-12,
        &format!("circle residual {worst_res:.2e}, C_spread {worst_spread:.2e} (<= 1e-12, N = 64, 256, 1024)"),
    );
}

fn helix_point(k: f64, w: f64, s: f64) -> nalgebra::Vector3<f64> {
    let d = k * k + w * w;
    let (a, b) = (k / d, w / d);
    let c = d.sqrt().recip();
    let th = s / c;
    nalgebra::Vector3::new(
        (a * a * th.sin() + b * b * th) / c,
        a * (1.0 - th.cos()),
        a * b * (th - th.sin()) / c,
    )
}

fn helix(ledger: &mut Ledger) {
    let (k, w, l) = (1.3, 0.7, 4.0);
    let mut errs = Vec::new();
    let mut drift: f64 = 0.0;
    for n in [8, 16, 32, 64] {
        let grid = ArcGrid::new(l, n).unwrap();
        let p = ShapeProfile::constant(grid, Closure::Periodic, k, w).unwrap();
        let frames = frenet_integrate(&p, &FrameState::identity()).unwrap();
        errs.push(
            frames
                .iter()
                .enumerate()
                .map(|(i, f)| (f.r - helix_point(k, w, grid.s(i))).norm())
                .fold(0.0, f64::max),
        );
        drift = frames.iter().map(|f| f.orthonormality_error()).fold(drift, f64::max);
    }
    let ratios: Vec<f64> = errs.windows(2).map(|p| p[0] / p[1]).collect();
    let ok = ratios.iter().all(|r| (12.0..=20.0).contains(r)) && drift <= 1e-12;
    ledger.record(
        5,
        ok,
        &format!("helix error ratios {ratios:.2?} (in [12, 20]), orthonormality drift {drift:.2e} (<= 1e-12)"),
    );
}

fn solve(n: usize, extra: &[f64]) -> (SolveConfig, SolveResult, f64) {
    let mut cfg = SolveConfig::with_defaults(2.0 * PI, n, 1.0).unwrap();
    if !extra.is_empty() {
        cfg.delta_schedule.extend_from_slice(extra);
        cfg.params = cfg.params.with_delta(*extra.last().unwrap()).unwrap();
    }
    let start = Instant::now();
    let r = minimize(&cfg, None).unwrap();
    (cfg, r, start.elapsed().as_secs_f64())
}

fn mobius(ledger: &mut Ledger, cfg: &SolveConfig, r: &SolveResult, secs: f64) {
    let l = cfg.grid.length();
    let gaps_ok = r.closure.pos_gap <= 1e-6 * l && r.closure.frame_gap <= 1e-6;
    let x = locate_symmetry_point(&r.profile, &EnergyParams::exact(1.0).unwrap()).unwrap();
    let phi = x.phi_at.abs().to_degrees();
    let t_scale = 4.0 * (2.0 * PI / l);
    let ok = r.converged && gaps_ok && x.t_frak_at.abs() > 1e-3 * t_scale && (phi - 45.0).abs() <= 1.0 && secs < 300.0;
    ledger.record(
        6,
        ok,
        &format!(
            "default solve (N = 512) converged = {}, pos_gap {:.2e}, frame_gap {:.2e}; X at s = {:.4}, |phi| = {phi:.3} deg, T = {:.3}; {secs:.1} s",
            r.converged, r.closure.pos_gap, r.closure.frame_gap, x.s_star, x.t_frak_at
        ),
    );
}

fn first_integral(ledger: &mut Ledger, plateau: (f64, f64)) {
    println!(
        "INFO criterion 7: C_spread at final delta 0.02 (default schedule): N = 512 {:.4e}, N = 1024 {:.4e}",
        plateau.0, plateau.1
    );
    let extra = [0.01, 0.005, 0.002, 0.0];
    let (_, a, _) = solve(512, &extra);
    let (_, b, _) = solve(1024, &extra);
    let (ca, cb) = (a.c_estimate.unwrap().c_spread, b.c_estimate.unwrap().c_spread);
    let ok = a.converged && b.converged && ca / cb >= 2.0;
    ledger.record(
        7,
        ok,
        &format!(
            "C_spread outside 0.05 L mask, schedule continued to delta 0: N = 512 {ca:.4e}, N = 1024 {cb:.4e}, ratio {:.2} (>= 2)",
            ca / cb
        ),
    );
}

fn developability(ledger: &mut Ledger, cfg: &SolveConfig, r: &SolveResult) {
    let l = cfg.grid.length();
    let surface = build_ruled_surface(&r.profile, &r.frames, 0.02 * l, Seam::Closed).unwrap();
    let d = developability_defect(&surface.mesh).unwrap();
    let mask = r.profile.singular_mask(cfg.mask_window);
    let n = r.profile.len();
    let away = d.max_where(|v| {
        let c = RuledSurface::column_of(v);
        c >= 2 && c + 2 < n && !mask[c]
    });
    ledger.record(
        8,
        away <= 5e-3,
        &format!("mesh angle defect away from seam and mask {away:.2e} rad (<= 5e-3); overall max {:.2e}", d.max),
    );
}

fn cli_round_trip(ledger: &mut Ledger) {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let checked = dir.path().join("check");
    let band = |args: &[&std::ffi::OsStr]| Command::new(env!("CARGO_BIN_EXE_band")).args(args).output().unwrap();
    let solved = band(&["solve".as_ref(), "--out".as_ref(), run.as_os_str()]);
    let solve_summary = Summary::read(&run.join("summary.txt")).unwrap();
    let tol = solve_summary.get("residual_tol").unwrap().to_string();
    let check = band(&[
        "check".as_ref(),
        "--profile".as_ref(),
        run.join("profile.csv").as_os_str(),
        "--tol".as_ref(),
        tol.as_ref(),
        "--out".as_ref(),
        checked.as_os_str(),
    ]);
    let check_summary = Summary::read(&checked.join("summary.txt")).unwrap();
    let same_tol = check_summary.get_f64("residual_tol") == solve_summary.get_f64("residual_tol");
    let same_res = ["res1_max", "res2_max", "c_best", "c_spread"]
        .iter()
        .all(|k| check_summary.get(k).is_some() && check_summary.get(k) == solve_summary.get(k));
    let identical_table = fs::read(run.join("residuals.csv")).unwrap() == fs::read(checked.join("residuals.csv")).unwrap();
    let ok = solved.status.code() == Some(0) && check.status.code() == Some(0) && same_tol && same_res && identical_table;
    ledger.record(
        9,
        ok,
        &format!(
            "band solve exit {:?}, band check exit {:?} at residual_tol {tol}; tolerances match {same_tol}, residual summary identical {same_res}, residual table identical {identical_table}",
            solved.status.code(),
            check.status.code()
        ),
    );
}

fn main() {
    let mut ledger = Ledger { failed: Vec::new() };
    constitutive(&mut ledger);
    mean_curvature_identity(&mut ledger);
    gradient_oracle(&mut ledger);
    circle(&mut ledger);
    helix(&mut ledger);
    let (cfg, r, secs) = solve(512, &[]);
    mobius(&mut ledger, &cfg, &r, secs);
    let (_, r1024, _) = solve(1024, &[]);
    let plateau = (r.c_estimate.unwrap().c_spread, r1024.c_estimate.unwrap().c_spread);
    first_integral(&mut ledger, plateau);
    developability(&mut ledger, &cfg, &r);
    cli_round_trip(&mut ledger);
    if !ledger.failed.is_empty() {
        eprintln!("failed criteria: {:?}", ledger.failed);
        std::process::exit(1);
    }
}
