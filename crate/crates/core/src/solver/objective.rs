//! Penalized energy of a profile and its exact gradient.
//!
//! The closure penalty depends on the profile only through the final frame of
//! the Frenet integration; its gradient is accumulated backwards through the
//! per-step Jacobians (a discrete adjoint of the integrator).

use nalgebra::Vector3;

use crate::energy::{energy_gradient, total_energy, EnergyParams};
use crate::error::Result;
use crate::frame::{integrate_states, rk4_step_jacobian, ClosureResidual, FrameState};
use crate::grid::{Closure, ShapeProfile};

/// Penalty coefficients on the squared position and frame gaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureWeights {
    /// energy / length^2
    pub pos: f64,
    /// energy
    pub frame: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    /// `[d/dK_0 .., d/dW_0 ..]`
    pub gradient: Vec<f64>,
    pub energy: f64,
    pub closure: ClosureResidual,
}

/// How the closure mismatch enters the objective.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Penalty {
    /// `w_pos * pos_gap^2 + w_frame * frame_gap^2`.
    Gap,
    /// Augmented Lagrangian on the twelve closure components `c`:
    /// `lambda . c + w_pos * |c_r|^2 + w_frame * (|c_t|^2 + |c_n|^2 + |c_b|^2)`.
    Augmented { lambda: [f64; 12] },
}

/// Everything the penalized objective needs besides the unknowns.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Penalized<'a> {
    pub template: &'a ShapeProfile,
    pub params: EnergyParams,
    pub weights: ClosureWeights,
    pub initial: FrameState,
    pub penalty: Penalty,
}

struct Gaps {
    residual: ClosureResidual,
    pos: Vector3<f64>,
    parts: [Vector3<f64>; 3],
}

impl Gaps {
    fn components(&self) -> [f64; 12] {
        let mut c = [0.0; 12];
        for k in 0..3 {
            c[k] = self.pos[k];
            for (j, part) in self.parts.iter().enumerate() {
                c[3 + 3 * j + k] = part[k];
            }
        }
        c
    }
}

fn gaps(first: &[f64; 12], last: &[f64; 12], closure: Closure) -> Gaps {
    let flip = match closure {
        Closure::Mobius => -1.0,
        Closure::Periodic => 1.0,
    };
    let v = |off: usize, sign: f64| {
        Vector3::new(
            last[off] - sign * first[off],
            last[off + 1] - sign * first[off + 1],
            last[off + 2] - sign * first[off + 2],
        )
    };
    let pos = v(0, 1.0);
    let parts = [v(3, 1.0), v(6, flip), v(9, flip)];
    Gaps {
        residual: ClosureResidual {
            pos_gap: pos.norm(),
            frame_gap: parts.iter().map(|p| p.norm()).sum(),
        },
        pos,
        parts,
    }
}

impl Penalized<'_> {
    fn profile(&self, x: &[f64]) -> Result<ShapeProfile> {
        self.template.with_vector(x)
    }

    fn penalty(&self, g: &Gaps) -> f64 {
        let r = &g.residual;
        match self.penalty {
            Penalty::Gap => {
                self.weights.pos * r.pos_gap * r.pos_gap
                    + self.weights.frame * r.frame_gap * r.frame_gap
            }
            Penalty::Augmented { lambda } => {
                let c = g.components();
                let linear: f64 = lambda.iter().zip(&c).map(|(l, c)| l * c).sum();
                let frame: f64 = g.parts.iter().map(|p| p.norm_squared()).sum();
                linear + self.weights.pos * g.pos.norm_squared() + self.weights.frame * frame
            }
        }
    }

    /// Derivative of the penalty with respect to the final state.
    fn seed(&self, g: &Gaps) -> [f64; 12] {
        let mut seed = [0.0; 12];
        match self.penalty {
            Penalty::Gap => {
                for (s, p) in seed.iter_mut().zip(g.pos.iter()) {
                    *s = 2.0 * self.weights.pos * p;
                }
                let frame_gap = g.residual.frame_gap;
                for (k, part) in g.parts.iter().enumerate() {
                    let norm = part.norm();
                    if norm > 0.0 {
                        for c in 0..3 {
                            seed[3 + 3 * k + c] =
                                2.0 * self.weights.frame * frame_gap * part[c] / norm;
                        }
                    }
                }
            }
            Penalty::Augmented { lambda } => {
                let c = g.components();
                for i in 0..12 {
                    let w = if i < 3 { self.weights.pos } else { self.weights.frame };
                    seed[i] = lambda[i] + 2.0 * w * c[i];
                }
            }
        }
        seed
    }

    /// Closure components at `x`.
    pub fn closure_components(&self, x: &[f64]) -> Result<[f64; 12]> {
        let p = self.profile(x)?;
        let states = integrate_states(&p, &self.initial);
        Ok(gaps(&states[0], &states[p.len()], p.closure()).components())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let p = self.profile(x)?;
        let energy = total_energy(&p, &self.params)?;
        let states = integrate_states(&p, &self.initial);
        let g = gaps(&states[0], &states[states.len() - 1], p.closure());
        Ok(energy + self.penalty(&g))
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<ObjectiveValue> {
        let p = self.profile(x)?;
        let len = p.len();
        let energy = total_energy(&p, &self.params)?;
        let mut gradient = energy_gradient(&p, &self.params)?;

        let states = integrate_states(&p, &self.initial);
        let g = gaps(&states[0], &states[len], p.closure());
        let value = energy + self.penalty(&g);

        let seed = self.seed(&g);
        if seed.iter().any(|v| *v != 0.0) {
            let mut rows = [seed];
            pullback(&p, &states, &mut rows, |_, i, v| gradient[i] += v);
        }
        Ok(ObjectiveValue {
            value,
            gradient,
            energy,
            closure: g.residual,
        })
    }

    /// Jacobian of the twelve closure components, one row per component.
    pub fn closure_jacobian(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let p = self.profile(x)?;
        let states = integrate_states(&p, &self.initial);
        let mut rows = [[0.0; 12]; 12];
        for (c, row) in rows.iter_mut().enumerate() {
            row[c] = 1.0;
        }
        let mut jac = vec![vec![0.0; 2 * p.len()]; 12];
        pullback(&p, &states, &mut rows, |r, i, v| jac[r][i] += v);
        Ok(jac)
    }
}

/// Propagates row vectors `d(out)/d(final state)` back through the
/// integrator, reporting each contribution `(row, unknown, value)`.
fn pullback<const R: usize>(
    p: &ShapeProfile,
    states: &[[f64; 12]],
    rows: &mut [[f64; 12]; R],
    mut emit: impl FnMut(usize, usize, f64),
) {
    let len = p.len();
    let h = p.grid().spacing();
    let sigma = p.closure().curvature_parity();
    for i in (0..len).rev() {
        let (ds, dp) = rk4_step_jacobian(
            &states[i],
            p.k_at(i),
            p.k_at(i + 1),
            p.w_at(i),
            p.w_at(i + 1),
            h,
        );
        for (r, lambda) in rows.iter_mut().enumerate() {
            let mut pg = [0.0; 4];
            let mut next = [0.0; 12];
            for row in 0..12 {
                let l = lambda[row];
                if l == 0.0 {
                    continue;
                }
                for (q, v) in pg.iter_mut().enumerate() {
                    *v += l * dp[row][q];
                }
                for (col, v) in next.iter_mut().enumerate() {
                    *v += l * ds[row][col];
                }
            }
            *lambda = next;
            emit(r, i, pg[0]);
            emit(r, len + i, pg[2]);
            if i + 1 < len {
                emit(r, i + 1, pg[1]);
                emit(r, len + i + 1, pg[3]);
            } else {
                emit(r, 0, sigma * pg[1]);
                emit(r, len, pg[3]);
            }
        }
    }
}

/// Energy plus `w_pos * pos_gap^2 + w_frame * frame_gap^2`, with the midline
/// integrated from `initial`.
pub fn objective_with_frame(
    profile: &ShapeProfile,
    params: &EnergyParams,
    weights: ClosureWeights,
    initial: &FrameState,
) -> Result<ObjectiveValue> {
    Penalized {
        template: profile,
        params: *params,
        weights,
        initial: *initial,
        penalty: Penalty::Gap,
    }
    .evaluate(&profile.to_vector())
}
