//! Stress resultants and the equilibrium residuals of a band profile.
//!
//! With `f = (K^2+W^2)^2 / K^2` and `g = W (K^2+W^2) / K^2`:
//!
//! ```text
//! T  = A (C - f)
//! N  = -(A/K) f'
//! B  = 2 A W (K^2+W^2)^2 / K^3 + 4 A ((1/K) g')'
//! 𝔑 = (4A/K) g'
//! res1 = K T + N' - W B
//! res2 = W N + B'
//! ```
//!
//! Derivatives are central differences on the closed grid; every quantity
//! inherits its seam parity from its factors (`K` flips under Möbius closure,
//! `W` does not). The equations are always evaluated without regularization.

use crate::energy::{moment_b_frak, moment_t_frak, EnergyParams};
use crate::error::{BandError, Result};
use crate::grid::{central_difference, ShapeProfile};
use crate::surface::ruling_angle;

/// Nodes with `|K|` below this (1/length) are singular for the equilibrium equations.
pub const K_MIN: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct StressState {
    pub t: Vec<f64>,
    pub n: Vec<f64>,
    pub b: Vec<f64>,
    pub t_frak: Vec<f64>,
    pub n_frak: Vec<f64>,
    pub b_frak: Vec<f64>,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub s: Vec<f64>,
    pub res1: Vec<f64>,
    pub res2: Vec<f64>,
    pub c_pointwise: Vec<f64>,
    pub c_spread: f64,
    /// Nodes excluded from the norms (near a curvature zero crossing).
    pub masked: Vec<bool>,
    pub res1_max: f64,
    pub res2_max: f64,
    pub res1_rms: f64,
    pub res2_rms: f64,
    pub stress: StressState,
}

impl ResidualReport {
    pub fn max_norm(&self) -> f64 {
        self.res1_max.max(self.res2_max)
    }
}

/// Estimated integration constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CEstimate {
    pub c_best: f64,
    pub c_spread: f64,
}

fn check_nodes(profile: &ShapeProfile) -> Result<()> {
    let bad: Vec<usize> = profile
        .k()
        .iter()
        .enumerate()
        .filter(|(_, k)| !(k.abs() >= K_MIN))
        .map(|(i, _)| i)
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(BandError::SingularNodes(bad))
    }
}

/// Intermediate fields shared by the resultants and `C` estimation.
struct Fields {
    n: Vec<f64>,
    b: Vec<f64>,
    n_frak: Vec<f64>,
    dn: Vec<f64>,
    f: Vec<f64>,
}

fn fields(profile: &ShapeProfile, a: f64) -> Result<Fields> {
    check_nodes(profile)?;
    let h = profile.grid().spacing();
    let sigma = profile.closure().curvature_parity();
    let (k, w) = (profile.k(), profile.w());
    let len = profile.len();

    let mut f = Vec::with_capacity(len);
    let mut g = Vec::with_capacity(len);
    for i in 0..len {
        let u = k[i] * k[i] + w[i] * w[i];
        f.push(u * u / (k[i] * k[i]));
        g.push(w[i] * u / (k[i] * k[i]));
    }
    // f and g are even in K, hence periodic.
    let df = central_difference(&f, 1.0, h);
    let dg = central_difference(&g, 1.0, h);

    let n: Vec<f64> = (0..len).map(|i| -(a / k[i]) * df[i]).collect();
    let n_frak: Vec<f64> = (0..len).map(|i| 4.0 * a / k[i] * dg[i]).collect();
    let q: Vec<f64> = (0..len).map(|i| dg[i] / k[i]).collect();
    let dq = central_difference(&q, sigma, h);
    let b: Vec<f64> = (0..len)
        .map(|i| {
            let u = k[i] * k[i] + w[i] * w[i];
            2.0 * a * w[i] * u * u / (k[i] * k[i] * k[i]) + 4.0 * a * dq[i]
        })
        .collect();
    let dn = central_difference(&n, sigma, h);
    Ok(Fields { n, b, n_frak, dn, f })
}

/// Force and moment components at every node for the integration constant `c`.
pub fn stress_resultants(profile: &ShapeProfile, params: &EnergyParams, c: f64) -> Result<StressState> {
    let a = params.a();
    let exact = params.without_regularization();
    let fl = fields(profile, a)?;
    let t = fl.f.iter().map(|f| a * (c - f)).collect();
    let (k, w) = (profile.k(), profile.w());
    let t_frak = (0..profile.len())
        .map(|i| moment_t_frak(k[i], w[i], &exact))
        .collect::<Result<Vec<_>>>()?;
    let b_frak = (0..profile.len())
        .map(|i| moment_b_frak(k[i], w[i], &exact))
        .collect::<Result<Vec<_>>>()?;
    Ok(StressState {
        t,
        n: fl.n,
        b: fl.b,
        t_frak,
        n_frak: fl.n_frak,
        b_frak,
        c,
    })
}

fn pointwise_c(profile: &ShapeProfile, a: f64, fl: &Fields) -> Vec<f64> {
    let (k, w) = (profile.k(), profile.w());
    (0..profile.len())
        .map(|i| (w[i] * fl.b[i] - fl.dn[i]) / (a * k[i]) + fl.f[i])
        .collect()
}

fn spread(values: &[f64], masked: &[bool]) -> f64 {
    let (lo, hi) = values
        .iter()
        .zip(masked)
        .filter(|(_, m)| !**m)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (v, _)| {
            (lo.min(*v), hi.max(*v))
        });
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// Residuals of the two equilibrium equations at every node.
///
/// Nodes within `mask_window / 2` of a curvature zero crossing are excluded
/// from the norms and from `c_spread`; pass `0.0` to use every node.
pub fn equilibrium_residual(
    profile: &ShapeProfile,
    params: &EnergyParams,
    c: f64,
    mask_window: f64,
) -> Result<ResidualReport> {
    let stress = stress_resultants(profile, params, c)?;
    let fl = fields(profile, params.a())?;
    let h = profile.grid().spacing();
    let sigma = profile.closure().curvature_parity();
    let (k, w) = (profile.k(), profile.w());
    let db = central_difference(&stress.b, sigma, h);
    let len = profile.len();
    let res1: Vec<f64> = (0..len)
        .map(|i| k[i] * stress.t[i] + fl.dn[i] - w[i] * stress.b[i])
        .collect();
    let res2: Vec<f64> = (0..len).map(|i| w[i] * stress.n[i] + db[i]).collect();
    let c_pointwise = pointwise_c(profile, params.a(), &fl);
    let masked = profile.singular_mask(mask_window);

    let norms = |v: &[f64]| {
        let kept: Vec<f64> = v
            .iter()
            .zip(&masked)
            .filter(|(_, m)| !**m)
            .map(|(x, _)| *x)
            .collect();
        let max = kept.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let rms = if kept.is_empty() {
            0.0
        } else {
            (kept.iter().map(|x| x * x).sum::<f64>() / kept.len() as f64).sqrt()
        };
        (max, rms)
    };
    let (res1_max, res1_rms) = norms(&res1);
    let (res2_max, res2_rms) = norms(&res2);
    Ok(ResidualReport {
        s: profile.grid().positions(),
        c_spread: spread(&c_pointwise, &masked),
        res1,
        res2,
        c_pointwise,
        masked,
        res1_max,
        res1_rms,
        res2_max,
        res2_rms,
        stress,
    })
}

/// Pointwise `C` from the first equilibrium equation; the median is returned
/// as the best estimate and `max - min` over unmasked nodes as the spread.
pub fn estimate_c(profile: &ShapeProfile, params: &EnergyParams, mask_window: f64) -> Result<CEstimate> {
    let fl = fields(profile, params.a())?;
    let c = pointwise_c(profile, params.a(), &fl);
    let masked = profile.singular_mask(mask_window);
    let mut kept: Vec<f64> = c
        .iter()
        .zip(&masked)
        .filter(|(_, m)| !**m)
        .map(|(v, _)| *v)
        .collect();
    if kept.is_empty() {
        kept = c.clone();
    }
    kept.sort_by(f64::total_cmp);
    let m = kept.len();
    let c_best = if m % 2 == 1 {
        kept[m / 2]
    } else {
        0.5 * (kept[m / 2 - 1] + kept[m / 2])
    };
    Ok(CEstimate {
        c_best,
        c_spread: spread(&c, &masked),
    })
}

/// Candidate singular point where the binormal moment vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryPoint {
    /// Interpolated arclength of the zero of 𝔅.
    pub s_star: f64,
    /// Node adjacent to the zero with the smaller |𝔅|; the one-sided
    /// quantities below are evaluated there.
    pub node: usize,
    pub phi_at: f64,
    pub b_frak_at: f64,
    pub t_frak_at: f64,
    pub k_at: f64,
}

/// Finds the sign change of 𝔅 between adjacent nodes whose larger endpoint
/// magnitude is smallest (this skips the pole of 𝔅 at a curvature zero).
pub fn locate_symmetry_point(profile: &ShapeProfile, params: &EnergyParams) -> Result<SymmetryPoint> {
    let len = profile.len();
    let sigma = profile.closure().curvature_parity();
    let bf = (0..len)
        .map(|i| moment_b_frak(profile.k()[i], profile.w()[i], params))
        .collect::<Result<Vec<_>>>()?;
    let at = |i: usize| if i < len { bf[i] } else { sigma * bf[i - len] };

    let mut best: Option<(usize, f64)> = None;
    for i in 0..len {
        let (a, b) = (at(i), at(i + 1));
        let changes = (a <= 0.0 && b >= 0.0) || (a >= 0.0 && b <= 0.0);
        if !changes {
            continue;
        }
        let size = a.abs().max(b.abs());
        if best.is_none_or(|(_, s)| size < s) {
            best = Some((i, size));
        }
    }
    let (i, _) = best.ok_or(BandError::SymmetryPointNotFound)?;
    let (a, b) = (at(i), at(i + 1));
    let frac = if a == b { 0.0 } else { a / (a - b) };
    let grid = profile.grid();
    let s_star = (grid.s(i) + frac * grid.spacing()).rem_euclid(grid.length());
    let node = if a.abs() <= b.abs() { i } else { (i + 1) % len };
    let (k, w) = (profile.k()[node], profile.w()[node]);
    Ok(SymmetryPoint {
        s_star,
        node,
        phi_at: ruling_angle(k, w).map_err(|_| BandError::UndefinedRuling { node })?,
        b_frak_at: bf[node],
        t_frak_at: moment_t_frak(k, w, params)?,
        k_at: k,
    })
}

/// Maximal run of nodes where both `|K|` and `|W|` are below threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatRegion {
    pub first_node: usize,
    pub last_node: usize,
    pub s_start: f64,
    pub s_end: f64,
    pub max_abs_k: f64,
    pub max_abs_w: f64,
}

pub fn flat_region_report(profile: &ShapeProfile, k_threshold: f64, w_threshold: f64) -> Vec<FlatRegion> {
    let len = profile.len();
    let flat: Vec<bool> = profile
        .k()
        .iter()
        .zip(profile.w())
        .map(|(k, w)| k.abs() < k_threshold && w.abs() < w_threshold)
        .collect();
    if flat.iter().all(|f| *f) {
        return vec![region(profile, 0, len - 1)];
    }
    // Start scanning just after a non-flat node so runs across the seam stay whole.
    let start = flat.iter().position(|f| !*f).unwrap_or(0);
    let mut out = Vec::new();
    let mut run: Option<usize> = None;
    for step in 1..=len {
        let i = (start + step) % len;
        match (flat[i], run) {
            (true, None) => run = Some(i),
            (false, Some(first)) => {
                out.push(region(profile, first, (i + len - 1) % len));
                run = None;
            }
            _ => {}
        }
    }
    out.sort_by_key(|r| r.first_node);
    out
}

fn region(profile: &ShapeProfile, first: usize, last: usize) -> FlatRegion {
    let len = profile.len();
    let count = (last + len - first) % len + 1;
    let idx = (0..count).map(|j| (first + j) % len);
    let max_abs_k = idx.clone().map(|i| profile.k()[i].abs()).fold(0.0, f64::max);
    let max_abs_w = idx.map(|i| profile.w()[i].abs()).fold(0.0, f64::max);
    let g = profile.grid();
    FlatRegion {
        first_node: first,
        last_node: last,
        s_start: g.s(first),
        s_end: g.s(last),
        max_abs_k,
        max_abs_w,
    }
}
