use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{BandError, Result};
use crate::surface::TriMesh;

use super::fmt_f64;

/// Wavefront OBJ text: `v x y z` lines followed by 1-based `f a b c` lines.
pub fn obj_string(mesh: &TriMesh) -> String {
    let mut out = String::with_capacity(64 * mesh.vertices.len() + 24 * mesh.faces.len());
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z));
    }
    for f in &mesh.faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

pub fn write_obj(path: &Path, mesh: &TriMesh) -> Result<()> {
    fs::write(path, obj_string(mesh)).map_err(|e| BandError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn one_based_faces() {
        let mesh = TriMesh {
            vertices: vec![Vector3::zeros(), Vector3::x(), Vector3::y()],
            faces: vec![[0, 1, 2]],
        };
        let text = obj_string(&mesh);
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().last(), Some("f 1 2 3"));
        let v: Vec<f64> = text.lines().nth(1).unwrap()[2..]
            .split_whitespace()
            .map(|t| t.parse().unwrap())
            .collect();
        assert_eq!(v, vec![1.0, 0.0, 0.0]);
    }
}
