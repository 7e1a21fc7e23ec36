//! Frenet–Serret reconstruction of a framed midline from curvature and twist.

use nalgebra::{Matrix3, Vector3};

use crate::error::{BandError, Result};
use crate::grid::{Closure, ShapeProfile};
use crate::scalar::{Dual, Real};

/// Tolerance on the orthonormality of a caller-supplied initial frame.
pub const INITIAL_FRAME_TOL: f64 = 1e-10;

/// Position and accompanying triad `(t, n, b)` at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameState {
    pub r: Vector3<f64>,
    pub t: Vector3<f64>,
    pub n: Vector3<f64>,
    pub b: Vector3<f64>,
}

impl Default for FrameState {
    fn default() -> Self {
        Self::identity()
    }
}

impl FrameState {
    /// Origin with `t = e_x`, `n = e_y`, `b = e_z`.
    pub fn identity() -> Self {
        Self {
            r: Vector3::zeros(),
            t: Vector3::x(),
            n: Vector3::y(),
            b: Vector3::z(),
        }
    }

    /// Largest deviation from an orthonormal right-handed triad.
    pub fn orthonormality_error(&self) -> f64 {
        let units = [self.t.norm(), self.n.norm(), self.b.norm()]
            .iter()
            .map(|v| (v - 1.0).abs())
            .fold(0.0, f64::max);
        let dots = [self.t.dot(&self.n), self.t.dot(&self.b), self.n.dot(&self.b)]
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        let hand = (self.t.cross(&self.n) - self.b).amax();
        units.max(dots).max(hand)
    }

    /// Applies the rigid motion `x -> rotation * x + translation`.
    pub fn transformed(&self, rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Self {
        Self {
            r: rotation * self.r + translation,
            t: rotation * self.t,
            n: rotation * self.n,
            b: rotation * self.b,
        }
    }

    pub(crate) fn to_state(self) -> [f64; 12] {
        let mut y = [0.0; 12];
        for k in 0..3 {
            y[k] = self.r[k];
            y[3 + k] = self.t[k];
            y[6 + k] = self.n[k];
            y[9 + k] = self.b[k];
        }
        y
    }

    pub(crate) fn from_state(y: &[f64; 12]) -> Self {
        Self {
            r: Vector3::new(y[0], y[1], y[2]),
            t: Vector3::new(y[3], y[4], y[5]),
            n: Vector3::new(y[6], y[7], y[8]),
            b: Vector3::new(y[9], y[10], y[11]),
        }
    }
}

/// Gap between the two ends of a reconstructed midline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureResidual {
    pub pos_gap: f64,
    pub frame_gap: f64,
}

/// Frenet right-hand side: `r' = t`, `t' = K n`, `n' = -K t + W b`, `b' = -W n`.
#[inline]
fn rhs<T: Real>(y: &[T; 12], k: T, w: T) -> [T; 12] {
    let mut d = [T::constant(0.0); 12];
    for c in 0..3 {
        let (t, n, b) = (y[3 + c], y[6 + c], y[9 + c]);
        d[c] = t;
        d[3 + c] = k * n;
        d[6 + c] = w * b - k * t;
        d[9 + c] = -(w * n);
    }
    d
}

#[inline]
fn offset<T: Real>(y: &[T; 12], d: &[T; 12], scale: f64) -> [T; 12] {
    let mut out = *y;
    for (o, di) in out.iter_mut().zip(d) {
        *o = *o + *di * scale;
    }
    out
}

/// One classical Runge–Kutta step of length `h` with curvature and twist
/// interpolated linearly from `(k0, w0)` to `(k1, w1)`, followed by
/// modified Gram–Schmidt on `(t, n)` and `b = t x n`.
#[inline]
pub(crate) fn rk4_step<T: Real>(y: &[T; 12], k0: T, k1: T, w0: T, w1: T, h: f64) -> [T; 12] {
    let km = (k0 + k1) * 0.5;
    let wm = (w0 + w1) * 0.5;
    let d1 = rhs(y, k0, w0);
    let d2 = rhs(&offset(y, &d1, 0.5 * h), km, wm);
    let d3 = rhs(&offset(y, &d2, 0.5 * h), km, wm);
    let d4 = rhs(&offset(y, &d3, h), k1, w1);
    let mut out = *y;
    for i in 0..12 {
        out[i] = out[i] + (d1[i] + (d2[i] + d3[i]) * 2.0 + d4[i]) * (h / 6.0);
    }
    reorthonormalize(&mut out);
    out
}

#[inline]
fn reorthonormalize<T: Real>(y: &mut [T; 12]) {
    let tn = (y[3] * y[3] + y[4] * y[4] + y[5] * y[5]).sqrt();
    let t = [y[3] / tn, y[4] / tn, y[5] / tn];
    let proj = y[6] * t[0] + y[7] * t[1] + y[8] * t[2];
    let raw = [y[6] - proj * t[0], y[7] - proj * t[1], y[8] - proj * t[2]];
    let nn = (raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2]).sqrt();
    let n = [raw[0] / nn, raw[1] / nn, raw[2] / nn];
    y[3..6].copy_from_slice(&t);
    y[6..9].copy_from_slice(&n);
    y[9] = t[1] * n[2] - t[2] * n[1];
    y[10] = t[2] * n[0] - t[0] * n[2];
    y[11] = t[0] * n[1] - t[1] * n[0];
}

fn check_initial(initial: &FrameState) -> Result<()> {
    let deviation = initial.orthonormality_error();
    if !(deviation <= INITIAL_FRAME_TOL) {
        return Err(BandError::NonOrthonormalFrame { deviation });
    }
    Ok(())
}

/// Raw integrator states at nodes `0..=N`.
pub(crate) fn integrate_states(profile: &ShapeProfile, initial: &FrameState) -> Vec<[f64; 12]> {
    let n = profile.len();
    let h = profile.grid().spacing();
    let mut states = Vec::with_capacity(n + 1);
    let mut y = initial.to_state();
    states.push(y);
    for i in 0..n {
        y = rk4_step(
            &y,
            profile.k_at(i),
            profile.k_at(i + 1),
            profile.w_at(i),
            profile.w_at(i + 1),
            h,
        );
        states.push(y);
    }
    states
}

/// Integrates the Frenet–Serret system over the profile, returning `N + 1`
/// frames (the last one at `s = L`).
pub fn frenet_integrate(profile: &ShapeProfile, initial: &FrameState) -> Result<Vec<FrameState>> {
    check_initial(initial)?;
    Ok(integrate_states(profile, initial)
        .iter()
        .map(FrameState::from_state)
        .collect())
}

/// Partial derivatives of one step: `(d out / d state, d out / d (k0, k1, w0, w1))`.
pub(crate) fn rk4_step_jacobian(
    y: &[f64; 12],
    k0: f64,
    k1: f64,
    w0: f64,
    w1: f64,
    h: f64,
) -> ([[f64; 12]; 12], [[f64; 4]; 12]) {
    let mut yd = [Dual::<16>::constant(0.0); 12];
    for (i, v) in y.iter().enumerate() {
        yd[i] = Dual::variable(*v, i);
    }
    let out = rk4_step(
        &yd,
        Dual::variable(k0, 12),
        Dual::variable(k1, 13),
        Dual::variable(w0, 14),
        Dual::variable(w1, 15),
        h,
    );
    let mut ds = [[0.0; 12]; 12];
    let mut dp = [[0.0; 4]; 12];
    for (row, o) in out.iter().enumerate() {
        ds[row].copy_from_slice(&o.eps[..12]);
        dp[row].copy_from_slice(&o.eps[12..]);
    }
    (ds, dp)
}

fn closure_residual_with_sign(frames: &[FrameState], flip: f64) -> Result<ClosureResidual> {
    if frames.len() < 2 {
        return Err(BandError::Precondition(
            "closure residual needs at least two frames".into(),
        ));
    }
    let first = &frames[0];
    let last = &frames[frames.len() - 1];
    Ok(ClosureResidual {
        pos_gap: (last.r - first.r).norm(),
        frame_gap: (last.t - first.t).norm()
            + (last.n - flip * first.n).norm()
            + (last.b - flip * first.b).norm(),
    })
}

/// Half-twist closure: `t(L) = t(0)`, `n(L) = -n(0)`, `b(L) = -b(0)`, `r(L) = r(0)`.
pub fn mobius_closure_residual(frames: &[FrameState]) -> Result<ClosureResidual> {
    closure_residual_with_sign(frames, -1.0)
}

/// Plain periodic closure of position and triad.
pub fn periodic_closure_residual(frames: &[FrameState]) -> Result<ClosureResidual> {
    closure_residual_with_sign(frames, 1.0)
}

pub fn closure_residual(frames: &[FrameState], closure: Closure) -> Result<ClosureResidual> {
    match closure {
        Closure::Mobius => mobius_closure_residual(frames),
        Closure::Periodic => periodic_closure_residual(frames),
    }
}
