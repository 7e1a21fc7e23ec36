//! Bending energy of an infinitesimally narrow developable band.
//!
//! The energy per unit length is `A (K^2 + W^2)^2 / K^2`; the moments about
//! the tangent and binormal are its partial derivatives in `W` and `K`. A
//! regularization `delta` replaces the denominator by `K^2 + delta^2` so that
//! the forced curvature zero of a Möbius midline has finite cost.

use crate::error::{BandError, Result};
use crate::grid::ShapeProfile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    a: f64,
    delta: f64,
}

impl EnergyParams {
    pub fn new(a: f64, delta: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(BandError::Precondition(format!(
                "material constant A must be positive, got {a}"
            )));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(BandError::Precondition(format!(
                "regularization must be non-negative, got {delta}"
            )));
        }
        Ok(Self { a, delta })
    }

    /// Unregularized parameters.
    pub fn exact(a: f64) -> Result<Self> {
        Self::new(a, 0.0)
    }

    #[inline]
    pub fn a(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        Self::new(self.a, delta)
    }

    pub fn without_regularization(&self) -> Self {
        Self { a: self.a, delta: 0.0 }
    }

    #[inline]
    fn denominator(&self, k: f64) -> f64 {
        k * k + self.delta * self.delta
    }

    /// `Ok(true)` at the flat point `K = W = 0` of the unregularized density.
    #[inline]
    fn check(&self, k: f64, w: f64) -> Result<bool> {
        if self.denominator(k) == 0.0 {
            if w == 0.0 {
                return Ok(true);
            }
            return Err(BandError::SingularDensity { w });
        }
        Ok(false)
    }
}

/// Energy per unit length `A (K^2+W^2)^2 / (K^2 + delta^2)`.
pub fn energy_density(k: f64, w: f64, params: &EnergyParams) -> Result<f64> {
    if params.check(k, w)? {
        return Ok(0.0);
    }
    let u = k * k + w * w;
    Ok(params.a * u * u / params.denominator(k))
}

/// Mean curvature `(K^2 + W^2) / (2K)` of the band surface.
pub fn mean_curvature(k: f64, w: f64) -> Result<f64> {
    if k == 0.0 {
        return Err(BandError::SingularMeanCurvature);
    }
    Ok((k * k + w * w) / (2.0 * k))
}

/// Twisting moment, the partial derivative of the density in `W`.
pub fn moment_t_frak(k: f64, w: f64, params: &EnergyParams) -> Result<f64> {
    if params.check(k, w)? {
        return Ok(0.0);
    }
    let u = k * k + w * w;
    Ok(4.0 * params.a * w * u / params.denominator(k))
}

/// Bending moment about the binormal, the partial derivative of the density in `K`.
pub fn moment_b_frak(k: f64, w: f64, params: &EnergyParams) -> Result<f64> {
    if params.check(k, w)? {
        return Ok(0.0);
    }
    let u = k * k + w * w;
    let v = params.denominator(k);
    let d2 = params.delta * params.delta;
    Ok(2.0 * params.a * k * u * (k * k + 2.0 * d2 - w * w) / (v * v))
}

/// Second partial derivatives `(f_KK, f_KW, f_WW)` of the density.
pub(crate) fn density_hessian(k: f64, w: f64, params: &EnergyParams) -> Result<[f64; 3]> {
    if params.check(k, w)? {
        return Ok([0.0; 3]);
    }
    let a = params.a;
    let u = k * k + w * w;
    let v = params.denominator(k);
    let d2 = params.delta * params.delta;
    let kk = 4.0 * (u / v + 2.0 * k * k / v - 2.0 * k * k * u / (v * v))
        - 2.0 * (u * u / (v * v) + 4.0 * k * k * u / (v * v) - 4.0 * k * k * u * u / (v * v * v));
    let kw = 8.0 * w * k * (d2 - w * w) / (v * v);
    let ww = 4.0 * (u + 2.0 * w * w) / v;
    Ok([a * kk, a * kw, a * ww])
}

/// Per-node density, total energy and moments of a profile.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub total: f64,
    pub density: Vec<f64>,
    pub moments_t_frak: Vec<f64>,
    pub moments_b_frak: Vec<f64>,
}

fn per_node<F>(profile: &ShapeProfile, f: F) -> Result<Vec<f64>>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    profile
        .k()
        .iter()
        .zip(profile.w())
        .enumerate()
        .map(|(i, (&k, &w))| {
            f(k, w).map_err(|e| match e {
                BandError::SingularDensity { .. } => BandError::SingularNodes(vec![i]),
                other => other,
            })
        })
        .collect()
}

/// Nodal quadrature `h * sum(density_i)` over the closed grid.
pub fn total_energy(profile: &ShapeProfile, params: &EnergyParams) -> Result<f64> {
    let density = per_node(profile, |k, w| energy_density(k, w, params))?;
    Ok(profile.grid().spacing() * density.iter().sum::<f64>())
}

pub fn energy_report(profile: &ShapeProfile, params: &EnergyParams) -> Result<EnergyReport> {
    let density = per_node(profile, |k, w| energy_density(k, w, params))?;
    let total = profile.grid().spacing() * density.iter().sum::<f64>();
    Ok(EnergyReport {
        total,
        density,
        moments_t_frak: per_node(profile, |k, w| moment_t_frak(k, w, params))?,
        moments_b_frak: per_node(profile, |k, w| moment_b_frak(k, w, params))?,
    })
}

/// Gradient of [`total_energy`] packed as `[dE/dK_0.., dE/dW_0..]`.
pub fn energy_gradient(profile: &ShapeProfile, params: &EnergyParams) -> Result<Vec<f64>> {
    let h = profile.grid().spacing();
    let mut g: Vec<f64> = per_node(profile, |k, w| moment_b_frak(k, w, params))?;
    g.extend(per_node(profile, |k, w| moment_t_frak(k, w, params))?);
    g.iter_mut().for_each(|v| *v *= h);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ArcGrid, Closure};
    use std::f64::consts::PI;

    fn exact() -> EnergyParams {
        EnergyParams::exact(1.0).unwrap()
    }

    #[test]
    fn density_values() {
        assert_eq!(energy_density(1.0, 0.0, &exact()).unwrap(), 1.0);
        assert_eq!(energy_density(1.0, 1.0, &exact()).unwrap(), 4.0);
        let p = EnergyParams::exact(3.0).unwrap();
        assert_eq!(energy_density(2.0, 1.0, &p).unwrap(), 18.75);
    }

    #[test]
    fn density_singular_and_flat() {
        assert!(matches!(
            energy_density(0.0, 0.5, &exact()),
            Err(BandError::SingularDensity { .. })
        ));
        assert_eq!(energy_density(0.0, 0.0, &exact()).unwrap(), 0.0);
        let reg = EnergyParams::new(1.0, 0.1).unwrap();
        assert!((energy_density(0.0, 0.5, &reg).unwrap() - 0.0625 / 0.01).abs() < 1e-12);
    }

    #[test]
    fn mean_curvature_values() {
        assert_eq!(mean_curvature(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(mean_curvature(2.0, 0.0).unwrap(), 1.0);
        assert_eq!(mean_curvature(1.0, 2.0).unwrap(), 2.5);
        assert!(mean_curvature(0.0, 1.0).is_err());
    }

    #[test]
    fn moment_values() {
        let p = exact();
        assert_eq!(moment_t_frak(1.0, 1.0, &p).unwrap(), 8.0);
        assert_eq!(moment_t_frak(1.0, 0.0, &p).unwrap(), 0.0);
        assert_eq!(moment_t_frak(2.0, 1.0, &p).unwrap(), 5.0);
        assert_eq!(moment_b_frak(1.0, 1.0, &p).unwrap(), 0.0);
        assert_eq!(moment_b_frak(1.0, 0.0, &p).unwrap(), 2.0);
        assert_eq!(moment_b_frak(2.0, 1.0, &p).unwrap(), 3.75);
    }

    #[test]
    fn regularized_moments_are_partial_derivatives() {
        let p = EnergyParams::new(1.7, 0.3).unwrap();
        let e = 1e-6;
        for &(k, w) in &[(0.0, 0.8), (0.2, -1.1), (-1.5, 0.4), (2.0, 2.0)] {
            let dk = (energy_density(k + e, w, &p).unwrap() - energy_density(k - e, w, &p).unwrap())
                / (2.0 * e);
            let dw = (energy_density(k, w + e, &p).unwrap() - energy_density(k, w - e, &p).unwrap())
                / (2.0 * e);
            assert!((moment_b_frak(k, w, &p).unwrap() - dk).abs() < 1e-6 * (1.0 + dk.abs()));
            assert!((moment_t_frak(k, w, &p).unwrap() - dw).abs() < 1e-6 * (1.0 + dw.abs()));
        }
    }

    #[test]
    fn hessian_matches_moment_differences() {
        let p = EnergyParams::new(1.3, 0.2).unwrap();
        let e = 1e-6;
        for &(k, w) in &[(0.05, 0.9), (0.7, -0.4), (-1.2, 1.5)] {
            let [kk, kw, ww] = density_hessian(k, w, &p).unwrap();
            let b = |k, w| moment_b_frak(k, w, &p).unwrap();
            let t = |k, w| moment_t_frak(k, w, &p).unwrap();
            let fkk = (b(k + e, w) - b(k - e, w)) / (2.0 * e);
            let fkw = (b(k, w + e) - b(k, w - e)) / (2.0 * e);
            let fww = (t(k, w + e) - t(k, w - e)) / (2.0 * e);
            assert!((kk - fkk).abs() < 1e-5 * (1.0 + fkk.abs()), "{kk} {fkk}");
            assert!((kw - fkw).abs() < 1e-5 * (1.0 + fkw.abs()));
            assert!((ww - fww).abs() < 1e-5 * (1.0 + fww.abs()));
        }
    }

    #[test]
    fn total_energy_of_constant_profiles() {
        let g = ArcGrid::new(1.0, 64).unwrap();
        let c = ShapeProfile::constant(g, Closure::Periodic, 2.0 * PI, 0.0).unwrap();
        let e = total_energy(&c, &exact()).unwrap();
        assert!((e - 4.0 * PI * PI).abs() < 1e-12 * e);

        let g = ArcGrid::new(2.0, 64).unwrap();
        let hx = ShapeProfile::constant(g, Closure::Periodic, 1.0, 1.0).unwrap();
        assert!((total_energy(&hx, &exact()).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn singular_node_is_named() {
        let g = ArcGrid::new(1.0, 8).unwrap();
        let mut k = vec![1.0; 8];
        k[5] = 0.0;
        let p = ShapeProfile::new(g, Closure::Mobius, k, vec![0.5; 8]).unwrap();
        assert_eq!(
            total_energy(&p, &exact()),
            Err(BandError::SingularNodes(vec![5]))
        );
    }

    #[test]
    fn untwisted_profile_has_no_twist_gradient() {
        let g = ArcGrid::new(1.0, 16).unwrap();
        let p = ShapeProfile::constant(g, Closure::Periodic, 1.0, 0.0).unwrap();
        let grad = energy_gradient(&p, &exact()).unwrap();
        assert!(grad[16..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn report_total_matches_quadrature() {
        let g = ArcGrid::new(3.0, 40).unwrap();
        let p = ShapeProfile::from_fn(g, Closure::Mobius, |s| 1.0 + 0.3 * s.sin(), |s| s.cos())
            .unwrap();
        let params = EnergyParams::new(2.0, 0.05).unwrap();
        let r = energy_report(&p, &params).unwrap();
        let quad = g.spacing() * r.density.iter().sum::<f64>();
        assert!((r.total - quad).abs() <= 1e-12 * quad);
        assert_eq!(r.total, total_energy(&p, &params).unwrap());
    }
}
