//! Rectifying developable of a framed midline, triangulated as a strip, and
//! its discrete Gaussian curvature (angle defect).

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector3;

use crate::error::{BandError, Result};
use crate::frame::FrameState;
use crate::grid::{ArcGrid, Closure, ShapeProfile};

/// Below this magnitude (1/length) both `K` and `W` leave the ruling undefined.
pub const DELTA_GEOM: f64 = 1e-9;

/// Angle of the ruling from the binormal, `tan(phi) = W / K`, in `(-pi/2, pi/2]`.
pub fn ruling_angle(k: f64, w: f64) -> Result<f64> {
    if k.abs() <= DELTA_GEOM && w.abs() <= DELTA_GEOM {
        return Err(BandError::UndefinedRuling { node: 0 });
    }
    let mut phi = w.atan2(k);
    if phi > FRAC_PI_2 {
        phi -= PI;
    } else if phi <= -FRAC_PI_2 {
        phi += PI;
    }
    Ok(phi)
}

/// Plain triangle mesh.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub faces: Vec<[usize; 3]>,
}

/// How the last column of the strip is treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Seam {
    /// `N + 1` columns; the strip ends at `s = L`.
    Open,
    /// `N` columns; the last face strip joins node `N-1` back to node `0`,
    /// swapping the two edge rows under Möbius closure.
    Closed,
}

/// Triangulated strip with three vertex rows per node: `r - w g`, `r`, `r + w g`.
#[derive(Debug, Clone, PartialEq)]
pub struct RuledSurface {
    pub grid: ArcGrid,
    pub closure: Closure,
    pub seam: Seam,
    pub half_width: f64,
    pub mesh: TriMesh,
    /// Ruling angle per column.
    pub ruling_angle: Vec<f64>,
    /// Unit generator per column, oriented so that `g . b >= 0`.
    pub generators: Vec<Vector3<f64>>,
}

pub const ROWS: usize = 3;

impl RuledSurface {
    pub fn columns(&self) -> usize {
        self.ruling_angle.len()
    }

    /// Grid node (column) of a mesh vertex.
    #[inline]
    pub fn column_of(vertex: usize) -> usize {
        vertex / ROWS
    }

    /// True for vertices on the midline row.
    #[inline]
    pub fn is_midline(vertex: usize) -> bool {
        vertex % ROWS == 1
    }
}

/// Builds the rectifying developable strip of half width `half_width`.
pub fn build_ruled_surface(
    profile: &ShapeProfile,
    frames: &[FrameState],
    half_width: f64,
    seam: Seam,
) -> Result<RuledSurface> {
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(BandError::DegenerateWidth(half_width));
    }
    let n = profile.len();
    if frames.len() != n + 1 {
        return Err(BandError::Precondition(format!(
            "expected {} frames for a {n}-node profile, got {}",
            n + 1,
            frames.len()
        )));
    }
    let columns = match seam {
        Seam::Open => n + 1,
        Seam::Closed => n,
    };

    let mut vertices = Vec::with_capacity(ROWS * columns);
    let mut angles = Vec::with_capacity(columns);
    let mut generators = Vec::with_capacity(columns);
    for (i, f) in frames.iter().take(columns).enumerate() {
        let phi = ruling_angle(profile.k_at(i), profile.w_at(i))
            .map_err(|_| BandError::UndefinedRuling { node: i })?;
        let g = f.b * phi.cos() + f.t * phi.sin();
        vertices.push(f.r - g * half_width);
        vertices.push(f.r);
        vertices.push(f.r + g * half_width);
        angles.push(phi);
        generators.push(g);
    }

    let mut faces = Vec::with_capacity(2 * (ROWS - 1) * columns);
    let mut strip = |c0: usize, c1: usize, swap: bool| {
        let row = |j: usize| if swap { ROWS - 1 - j } else { j };
        for j in 0..ROWS - 1 {
            let a = ROWS * c0 + j;
            let b = ROWS * c1 + row(j);
            let c = ROWS * c0 + j + 1;
            let d = ROWS * c1 + row(j + 1);
            faces.push([a, b, c]);
            faces.push([b, d, c]);
        }
    };
    for c in 0..columns - 1 {
        strip(c, c + 1, false);
    }
    if seam == Seam::Closed {
        strip(columns - 1, 0, profile.closure() == Closure::Mobius);
    }

    Ok(RuledSurface {
        grid: *profile.grid(),
        closure: profile.closure(),
        seam,
        half_width,
        mesh: TriMesh { vertices, faces },
        ruling_angle: angles,
        generators,
    })
}

/// Angle defect `2 pi - sum(incident angles)` at every interior vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    /// `(vertex index, defect)` for each interior vertex.
    pub defects: Vec<(usize, f64)>,
    pub max: f64,
    pub mean: f64,
}

impl DefectReport {
    /// Largest absolute defect over vertices accepted by `keep`.
    pub fn max_where(&self, keep: impl Fn(usize) -> bool) -> f64 {
        self.defects
            .iter()
            .filter(|(v, _)| keep(*v))
            .map(|(_, d)| d.abs())
            .fold(0.0, f64::max)
    }
}

fn corner_angle(p: &Vector3<f64>, q: &Vector3<f64>, r: &Vector3<f64>) -> f64 {
    let u = q - p;
    let v = r - p;
    u.cross(&v).norm().atan2(u.dot(&v))
}

/// Discrete Gaussian curvature of a triangle mesh via the angle defect.
pub fn developability_defect(mesh: &TriMesh) -> Result<DefectReport> {
    let mut edge_faces: HashMap<(usize, usize), usize> = HashMap::new();
    let mut angle_sum = vec![0.0; mesh.vertices.len()];
    let mut touched = vec![false; mesh.vertices.len()];
    for (fi, face) in mesh.faces.iter().enumerate() {
        if face.iter().any(|&v| v >= mesh.vertices.len()) {
            return Err(BandError::Precondition(format!(
                "face {fi} references a missing vertex"
            )));
        }
        let [a, b, c] = face.map(|v| mesh.vertices[v]);
        let scale = (b - a).norm_squared().max((c - a).norm_squared());
        let area2 = (b - a).cross(&(c - a)).norm();
        if !(area2 > 1e-14 * scale) {
            return Err(BandError::DegenerateFace { face: fi });
        }
        for k in 0..3 {
            let (v0, v1, v2) = (face[k], face[(k + 1) % 3], face[(k + 2) % 3]);
            angle_sum[v0] += corner_angle(
                &mesh.vertices[v0],
                &mesh.vertices[v1],
                &mesh.vertices[v2],
            );
            touched[v0] = true;
            *edge_faces.entry((v0.min(v1), v0.max(v1))).or_insert(0) += 1;
        }
    }
    let mut boundary = vec![false; mesh.vertices.len()];
    for (&(u, v), &count) in &edge_faces {
        if count == 1 {
            boundary[u] = true;
            boundary[v] = true;
        }
    }
    let defects: Vec<(usize, f64)> = (0..mesh.vertices.len())
        .filter(|&v| touched[v] && !boundary[v])
        .map(|v| (v, 2.0 * PI - angle_sum[v]))
        .collect();
    if defects.is_empty() {
        return Err(BandError::Precondition("mesh has no interior vertex".into()));
    }
    let max = defects.iter().map(|(_, d)| d.abs()).fold(0.0, f64::max);
    let mean = defects.iter().map(|(_, d)| d.abs()).sum::<f64>() / defects.len() as f64;
    Ok(DefectReport { defects, max, mean })
}
