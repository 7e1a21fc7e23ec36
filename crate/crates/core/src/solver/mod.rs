//! Minimization of the discrete band energy under a closure penalty.
//!
//! The regularization `delta` is lowered stage by stage, each stage warm
//! started from the last. Closure is imposed with an augmented Lagrangian:
//! multipliers are updated after every stage, and the closure weights grow
//! whenever the gaps stop shrinking, until both gaps are inside tolerance.

mod bfgs;
mod objective;

use std::f64::consts::PI;

use log::{debug, info};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{density_hessian, total_energy, EnergyParams};
use crate::equilibrium::{equilibrium_residual, estimate_c, CEstimate, ResidualReport};
use crate::error::{BandError, Result};
use crate::frame::{closure_residual, frenet_integrate, ClosureResidual, FrameState};
use crate::grid::{ArcGrid, Closure, ShapeProfile};

pub use objective::{objective_with_frame, ClosureWeights, ObjectiveValue};

use bfgs::{BfgsOptions, Problem};
use objective::{Penalized, Penalty};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub grid: ArcGrid,
    pub closure: Closure,
    /// Material constant and the regularization used by [`objective`].
    pub params: EnergyParams,
    pub weights: ClosureWeights,
    /// Strictly decreasing regularization values (1/length).
    pub delta_schedule: Vec<f64>,
    /// Stationarity tolerance on `max |dF/dx_i| / h` (energy/length).
    pub grad_tol: f64,
    /// Stop a stage once the largest update component falls below this.
    pub step_tol: f64,
    /// Iteration cap per stage.
    pub max_iterations: usize,
    /// Factor applied to both closure weights per escalation.
    pub weight_growth: f64,
    pub max_escalations: usize,
    /// Position gap tolerance, relative to `L`.
    pub pos_tol: f64,
    pub frame_tol: f64,
    pub seed: u64,
    /// Amplitude of seeded random perturbation of the default start (1/length).
    pub init_noise: f64,
    pub initial_frame: FrameState,
    /// Arclength window masked around curvature zero crossings in residual checks.
    pub mask_window: f64,
}

impl SolveConfig {
    /// Documented defaults for a band of length `length` on `nodes` nodes.
    pub fn with_defaults(length: f64, nodes: usize, a: f64) -> Result<Self> {
        let grid = ArcGrid::new(length, nodes)?;
        let scale = 2.0 * PI / length;
        let delta_schedule: Vec<f64> = DEFAULT_DELTA_FACTORS.iter().map(|f| f * scale).collect();
        let params = EnergyParams::new(a, *delta_schedule.last().unwrap())?;
        let config = Self {
            grid,
            closure: Closure::Mobius,
            params,
            weights: ClosureWeights {
                pos: DEFAULT_W_POS * a / (length * length),
                frame: DEFAULT_W_FRAME * a / length,
            },
            delta_schedule,
            grad_tol: DEFAULT_GRAD_TOL,
            step_tol: DEFAULT_STEP_TOL,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            weight_growth: DEFAULT_WEIGHT_GROWTH,
            max_escalations: DEFAULT_MAX_ESCALATIONS,
            pos_tol: DEFAULT_GAP_TOL,
            frame_tol: DEFAULT_GAP_TOL,
            seed: 0,
            init_noise: 0.0,
            initial_frame: FrameState::identity(),
            mask_window: DEFAULT_MASK_FRACTION * length,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: String| {
            Err(BandError::Config {
                key: key.to_string(),
                reason,
            })
        };
        if self.delta_schedule.is_empty() {
            return bad("delta_schedule", "must contain at least one value".into());
        }
        if self.delta_schedule.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return bad("delta_schedule", "values must be finite and >= 0".into());
        }
        if self.delta_schedule.windows(2).any(|w| !(w[1] < w[0])) {
            return bad("delta_schedule", "must be strictly decreasing".into());
        }
        if !(self.weights.pos > 0.0 && self.weights.pos.is_finite()) {
            return bad("w_pos", "must be > 0".into());
        }
        if !(self.weights.frame > 0.0 && self.weights.frame.is_finite()) {
            return bad("w_frame", "must be > 0".into());
        }
        if !(self.weight_growth > 1.0) {
            return bad("weight_growth", "must be > 1".into());
        }
        for (key, v) in [
            ("grad_tol", self.grad_tol),
            ("pos_tol", self.pos_tol),
            ("frame_tol", self.frame_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(key, "must be > 0".into());
            }
        }
        if !(self.step_tol >= 0.0) {
            return bad("step_tol", "must be >= 0".into());
        }
        if !(self.init_noise >= 0.0 && self.init_noise.is_finite()) {
            return bad("init_noise", "must be >= 0".into());
        }
        if !(self.mask_window >= 0.0 && self.mask_window < self.grid.length()) {
            return bad("mask_window", "must be in [0, L)".into());
        }
        Ok(())
    }

    /// Parameters of the final continuation stage.
    pub fn final_params(&self) -> Result<EnergyParams> {
        self.params.with_delta(*self.delta_schedule.last().unwrap())
    }
}

pub const DEFAULT_NODES: usize = 512;
pub const DEFAULT_DELTA_FACTORS: [f64; 5] = [0.5, 0.2, 0.1, 0.05, 0.02];
/// Initial position weight in units of `A / L^2`.
pub const DEFAULT_W_POS: f64 = 100.0;
/// Initial frame weight in units of `A / L`.
pub const DEFAULT_W_FRAME: f64 = 100.0;
pub const DEFAULT_GRAD_TOL: f64 = 1e-9;
pub const DEFAULT_STEP_TOL: f64 = 1e-15;
pub const DEFAULT_MAX_ITERATIONS: usize = 5000;
pub const DEFAULT_WEIGHT_GROWTH: f64 = 10.0;
pub const DEFAULT_MAX_ESCALATIONS: usize = 20;
pub const DEFAULT_GAP_TOL: f64 = 1e-6;
pub const DEFAULT_MASK_FRACTION: f64 = 0.05;
/// Multiplier updates continue until the gaps are this fraction of their
/// tolerances, or stop shrinking.
const CLOSURE_POLISH: f64 = 1e-3;
const VALUE_NOISE: f64 = 1e-13;

/// `K = (2 pi / L) cos(pi s / L + pi / 4)`, `W = pi / L`.
pub fn default_initial_profile(grid: &ArcGrid) -> ShapeProfile {
    let l = grid.length();
    ShapeProfile::from_fn(
        *grid,
        Closure::Mobius,
        |s| (2.0 * PI / l) * (PI * s / l + PI / 4.0).cos(),
        |_| PI / l,
    )
    .expect("analytic profile is finite")
}

/// Penalized objective with the configured weights and regularization.
pub fn objective(profile: &ShapeProfile, config: &SolveConfig) -> Result<ObjectiveValue> {
    objective_with_frame(profile, &config.params, config.weights, &config.initial_frame)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub delta: f64,
    pub weights: ClosureWeights,
    pub iterations: usize,
    pub converged: bool,
    pub value: f64,
    pub grad_measure: f64,
    pub closure: ClosureResidual,
    /// Objective after every accepted step.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub profile: ShapeProfile,
    pub frames: Vec<FrameState>,
    /// Total energy at the final regularization.
    pub energy: f64,
    pub closure: ClosureResidual,
    pub c_estimate: Option<CEstimate>,
    pub residuals: Option<ResidualReport>,
    pub iterations: usize,
    pub converged: bool,
    pub closure_within_tol: bool,
    pub stages: Vec<StageReport>,
    pub final_params: EnergyParams,
}

struct StageProblem<'a> {
    inner: Penalized<'a>,
    h: f64,
}

impl Problem for StageProblem<'_> {
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.inner.value(x)
    }

    fn value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let v = self.inner.evaluate(x)?;
        Ok((v.value, v.gradient))
    }

    fn gradient_measure(&self, g: &[f64]) -> f64 {
        g.iter().map(|v| v.abs()).fold(0.0, f64::max) / self.h
    }
}

/// Dense initial inverse Hessian built from the nodal 2x2 energy Hessians,
/// with eigenvalues replaced by their magnitudes and floored.
fn initial_inverse_hessian(profile: &ShapeProfile, params: &EnergyParams) -> Result<Vec<f64>> {
    let len = profile.len();
    let n = 2 * len;
    let h = profile.grid().spacing();
    let mut m = vec![0.0; n * n];
    let floor = 1e-3 * params.a() * (2.0 * PI / profile.grid().length()).powi(2);
    for i in 0..len {
        let [kk, kw, ww] = density_hessian(profile.k()[i], profile.w()[i], params)?;
        // Symmetric 2x2 eigen-decomposition.
        let tr = 0.5 * (kk + ww);
        let disc = (0.25 * (kk - ww).powi(2) + kw * kw).sqrt();
        let (l1, l2) = (tr + disc, tr - disc);
        let (c, s) = if kw.abs() > 0.0 || (kk - ww).abs() > 0.0 {
            let theta = 0.5 * (2.0 * kw).atan2(kk - ww);
            (theta.cos(), theta.sin())
        } else {
            (1.0, 0.0)
        };
        let i1 = 1.0 / (h * l1.abs().max(floor));
        let i2 = 1.0 / (h * l2.abs().max(floor));
        let a11 = c * c * i1 + s * s * i2;
        let a12 = c * s * (i1 - i2);
        let a22 = s * s * i1 + c * c * i2;
        let (ik, iw) = (i, len + i);
        m[ik * n + ik] = a11;
        m[ik * n + iw] = a12;
        m[iw * n + ik] = a12;
        m[iw * n + iw] = a22;
    }
    Ok(m)
}

/// Adds the Gauss-Newton curvature `2 J^T W J` of the closure penalty to the
/// inverse metric `m` (Woodbury identity).
fn add_closure_curvature(m: &mut [f64], jac: &[Vec<f64>], weights: ClosureWeights) {
    let n = jac[0].len();
    let r = jac.len();
    // u = M J^T, columns per closure component
    let u: Vec<Vec<f64>> = jac
        .iter()
        .map(|row| {
            (0..n)
                .map(|i| {
                    let mi = &m[i * n..(i + 1) * n];
                    mi.iter().zip(row).map(|(a, b)| a * b).sum()
                })
                .collect()
        })
        .collect();
    let mut cap = DMatrix::<f64>::zeros(r, r);
    for a in 0..r {
        let w = if a < 3 { weights.pos } else { weights.frame };
        cap[(a, a)] = 0.5 / w;
        for b in 0..r {
            cap[(a, b)] += jac[a].iter().zip(&u[b]).map(|(x, y)| x * y).sum::<f64>();
        }
    }
    let Some(inv) = cap.try_inverse() else {
        return;
    };
    // v = u * inv
    let v: Vec<Vec<f64>> = (0..r)
        .map(|b| (0..n).map(|i| (0..r).map(|a| u[a][i] * inv[(a, b)]).sum()).collect())
        .collect();
    for i in 0..n {
        let row = &mut m[i * n..(i + 1) * n];
        for (j, e) in row.iter_mut().enumerate() {
            *e -= (0..r).map(|b| v[b][i] * u[b][j]).sum::<f64>();
        }
    }
}

fn perturbed_start(config: &SolveConfig) -> ShapeProfile {
    let base = default_initial_profile(&config.grid);
    let base = ShapeProfile::new(config.grid, config.closure, base.k().to_vec(), base.w().to_vec())
        .expect("same grid");
    if config.init_noise == 0.0 {
        return base;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x: Vec<f64> = base
        .to_vector()
        .iter()
        .map(|v| v + config.init_noise * rng.gen_range(-1.0..1.0))
        .collect();
    base.with_vector(&x).expect("same length")
}

fn within(c: &ClosureResidual, config: &SolveConfig, factor: f64) -> bool {
    c.pos_gap <= factor * config.pos_tol * config.grid.length()
        && c.frame_gap <= factor * config.frame_tol
}

/// Runs the continuation and returns the final state; `initial = None`
/// starts from [`default_initial_profile`].
pub fn minimize(config: &SolveConfig, initial: Option<&ShapeProfile>) -> Result<SolveResult> {
    config.validate()?;
    let start = match initial {
        Some(p) => {
            if p.grid() != &config.grid {
                return Err(BandError::Precondition(
                    "initial profile grid differs from the configured grid".into(),
                ));
            }
            ShapeProfile::new(config.grid, config.closure, p.k().to_vec(), p.w().to_vec())?
        }
        None => perturbed_start(config),
    };
    let h = config.grid.spacing();
    let opts = BfgsOptions {
        grad_tol: config.grad_tol,
        step_tol: config.step_tol,
        max_iterations: config.max_iterations,
        armijo: 1e-4,
        max_backtracks: 60,
        value_noise: VALUE_NOISE,
    };

    let mut x = start.to_vector();
    let mut weights = config.weights;
    let mut lambda = [0.0; 12];
    let mut stages = Vec::new();
    let mut last_converged = false;

    let run_stage = |x: &mut Vec<f64>,
                     delta: f64,
                     weights: ClosureWeights,
                     lambda: &mut [f64; 12]|
     -> Result<StageReport> {
        let params = config.params.with_delta(delta)?;
        let problem = StageProblem {
            inner: Penalized {
                template: &start,
                params,
                weights,
                initial: config.initial_frame,
                penalty: Penalty::Augmented { lambda: *lambda },
            },
            h,
        };
        let mut h0 = initial_inverse_hessian(&start.with_vector(x)?, &params)?;
        add_closure_curvature(&mut h0, &problem.inner.closure_jacobian(x)?, weights);
        let out = bfgs::minimize(&problem, x.clone(), &h0, &opts)?;
        *x = out.x;
        let closure = problem.inner.evaluate(x)?.closure;
        let c = problem.inner.closure_components(x)?;
        for (i, l) in lambda.iter_mut().enumerate() {
            let w = if i < 3 { weights.pos } else { weights.frame };
            *l += 2.0 * w * c[i];
        }
        let report = StageReport {
            delta,
            weights,
            iterations: out.iterations,
            converged: out.converged,
            value: out.value,
            grad_measure: out.grad_measure,
            closure,
            history: out.history,
        };
        debug!(
            "stage delta={delta:.3e} w=({:.1e},{:.1e}): it={} f={:.12e} |g|={:.2e} pos={:.2e} frame={:.2e}",
            weights.pos, weights.frame, report.iterations, report.value, report.grad_measure,
            closure.pos_gap, closure.frame_gap
        );
        Ok(report)
    };

    if config.max_iterations > 0 {
        for &delta in &config.delta_schedule {
            let r = run_stage(&mut x, delta, weights, &mut lambda)?;
            last_converged = r.converged;
            stages.push(r);
        }
        let final_delta = *config.delta_schedule.last().unwrap();
        let mut escalations = 0;
        let mut previous = stages.last().unwrap().closure;
        let mut stalled = 0;
        while !(last_converged && within(&previous, config, CLOSURE_POLISH))
            && escalations < config.max_escalations
            && stalled < 2
        {
            escalations += 1;
            let r = run_stage(&mut x, final_delta, weights, &mut lambda)?;
            last_converged = r.converged;
            let shrunk = r.closure.pos_gap <= 0.25 * previous.pos_gap
                && r.closure.frame_gap <= 0.25 * previous.frame_gap;
            if !shrunk {
                if within(&r.closure, config, 1.0) {
                    stalled += 1;
                } else {
                    weights.pos *= config.weight_growth;
                    weights.frame *= config.weight_growth;
                }
            }
            previous = r.closure;
            stages.push(r);
        }
    }

    let profile = start.with_vector(&x)?;
    let final_params = config.final_params()?;
    let frames = frenet_integrate(&profile, &config.initial_frame)?;
    let closure = closure_residual(&frames, config.closure)?;
    let energy = total_energy(&profile, &final_params)?;
    let c_estimate = estimate_c(&profile, &final_params, config.mask_window).ok();
    let residuals = c_estimate.and_then(|c| {
        equilibrium_residual(&profile, &final_params, c.c_best, config.mask_window).ok()
    });
    let closure_ok = within(&closure, config, 1.0);
    let iterations = stages.iter().map(|s| s.iterations).sum();
    info!(
        "minimize: converged={} energy={energy:.12e} pos_gap={:.2e} frame_gap={:.2e} iterations={iterations}",
        last_converged && closure_ok,
        closure.pos_gap,
        closure.frame_gap
    );
    Ok(SolveResult {
        profile,
        frames,
        energy,
        closure,
        c_estimate,
        residuals,
        iterations,
        converged: last_converged && closure_ok,
        closure_within_tol: closure_ok,
        stages,
        final_params,
    })
}
