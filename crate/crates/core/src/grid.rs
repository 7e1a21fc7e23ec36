//! Arclength grids and nodal curvature/twist profiles.
//!
//! A band midline of length `L` is sampled at `N` nodes `s_i = i * h`,
//! `h = L / N`, on a closed grid: node `N` is the image of node `0` under the
//! closure map. For a Möbius band the signed curvature flips sign across the
//! seam (`K(s + L) = -K(s)`) while the twist is periodic.

use crate::error::{BandError, Result};

/// Smallest admissible number of grid nodes.
pub const MIN_NODES: usize = 8;

/// Uniform arclength grid on a closed midline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcGrid {
    length: f64,
    nodes: usize,
}

impl ArcGrid {
    pub fn new(length: f64, nodes: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(BandError::InvalidGrid(format!(
                "length must be finite and positive, got {length}"
            )));
        }
        if nodes < MIN_NODES {
            return Err(BandError::InvalidGrid(format!(
                "node count must be at least {MIN_NODES}, got {nodes}"
            )));
        }
        Ok(Self { length, nodes })
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.length
    }

    #[inline]
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// Node spacing, always derived from the length.
    #[inline]
    pub fn spacing(&self) -> f64 {
        self.length / self.nodes as f64
    }

    /// Arclength of node `i` (valid for `i` in `0..=N`).
    #[inline]
    pub fn s(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.s(i)).collect()
    }

    /// Shortest distance between two arclength positions on the closed midline.
    pub fn circular_distance(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(self.length);
        d.min(self.length - d)
    }
}

/// How the midline closes on itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Closure {
    /// Half-twist closure: tangent returns, normal and binormal flip.
    #[default]
    Mobius,
    /// Plain periodic closure (annulus).
    Periodic,
}

impl Closure {
    /// Factor relating `K(s + L)` to `K(s)`.
    #[inline]
    pub fn curvature_parity(self) -> f64 {
        match self {
            Closure::Mobius => -1.0,
            Closure::Periodic => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Closure::Mobius => "mobius",
            Closure::Periodic => "periodic",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "mobius" | "möbius" => Some(Closure::Mobius),
            "periodic" | "annulus" => Some(Closure::Periodic),
            _ => None,
        }
    }
}

/// Signed curvature `K` and twist `W` at every node of a closed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeProfile {
    grid: ArcGrid,
    closure: Closure,
    k: Vec<f64>,
    w: Vec<f64>,
}

impl ShapeProfile {
    pub fn new(grid: ArcGrid, closure: Closure, k: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        let n = grid.nodes();
        if k.len() != n || w.len() != n {
            return Err(BandError::InvalidProfile(format!(
                "expected {n} curvature and twist values, got {} and {}",
                k.len(),
                w.len()
            )));
        }
        if let Some(i) = k.iter().chain(&w).position(|v| !v.is_finite()) {
            return Err(BandError::InvalidProfile(format!(
                "non-finite value at entry {}",
                i % n
            )));
        }
        Ok(Self { grid, closure, k, w })
    }

    /// Profile with constant curvature and twist.
    pub fn constant(grid: ArcGrid, closure: Closure, k: f64, w: f64) -> Result<Self> {
        let n = grid.nodes();
        Self::new(grid, closure, vec![k; n], vec![w; n])
    }

    /// Samples `k(s)` and `w(s)` at the grid nodes.
    pub fn from_fn(
        grid: ArcGrid,
        closure: Closure,
        k: impl Fn(f64) -> f64,
        w: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let s = grid.positions();
        Self::new(
            grid,
            closure,
            s.iter().map(|&s| k(s)).collect(),
            s.iter().map(|&s| w(s)).collect(),
        )
    }

    #[inline]
    pub fn grid(&self) -> &ArcGrid {
        &self.grid
    }

    #[inline]
    pub fn closure(&self) -> Closure {
        self.closure
    }

    #[inline]
    pub fn k(&self) -> &[f64] {
        &self.k
    }

    #[inline]
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.k.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    /// Curvature at node `i` for `i` in `0..=N`, applying the closure rule at `N`.
    #[inline]
    pub fn k_at(&self, i: usize) -> f64 {
        let n = self.len();
        if i < n {
            self.k[i]
        } else {
            self.closure.curvature_parity() * self.k[i - n]
        }
    }

    /// Twist at node `i` for `i` in `0..=N`.
    #[inline]
    pub fn w_at(&self, i: usize) -> f64 {
        self.w[i % self.len()]
    }

    /// Unknowns packed as `[K_0 .. K_{N-1}, W_0 .. W_{N-1}]`.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut x = self.k.clone();
        x.extend_from_slice(&self.w);
        x
    }

    /// Inverse of [`ShapeProfile::to_vector`] on the same grid and closure.
    pub fn with_vector(&self, x: &[f64]) -> Result<Self> {
        let n = self.len();
        if x.len() != 2 * n {
            return Err(BandError::InvalidProfile(format!(
                "expected {} unknowns, got {}",
                2 * n,
                x.len()
            )));
        }
        Self::new(self.grid, self.closure, x[..n].to_vec(), x[n..].to_vec())
    }

    /// Multiplies curvature and twist by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            closure: self.closure,
            k: self.k.iter().map(|v| c * v).collect(),
            w: self.w.iter().map(|v| c * v).collect(),
        }
    }

    /// Locations of sign changes of `K` between adjacent nodes, including the
    /// seam cell `N-1 -> N`. Each entry is `(cell index, arclength)` with the
    /// arclength found by linear interpolation.
    pub fn curvature_zero_crossings(&self) -> Vec<(usize, f64)> {
        let n = self.len();
        let h = self.grid.spacing();
        (0..n)
            .filter_map(|i| {
                let a = self.k_at(i);
                let b = self.k_at(i + 1);
                if (a < 0.0 && b >= 0.0) || (a >= 0.0 && b < 0.0) {
                    let frac = if a == b { 0.5 } else { a / (a - b) };
                    Some((i, self.grid.s(i) + frac * h))
                } else {
                    None
                }
            })
            .collect()
    }

    /// Nodes within `width / 2` (circular arclength) of a curvature zero crossing.
    pub fn singular_mask(&self, width: f64) -> Vec<bool> {
        let n = self.len();
        if width <= 0.0 {
            return vec![false; n];
        }
        let crossings = self.curvature_zero_crossings();
        (0..n)
            .map(|i| {
                let s = self.grid.s(i);
                crossings
                    .iter()
                    .any(|&(_, c)| self.grid.circular_distance(s, c) < 0.5 * width)
            })
            .collect()
    }
}

/// Second-order central difference on the closed grid.
///
/// `parity` is `+1` for a quantity that is periodic across the seam and `-1`
/// for one that flips sign.
pub fn central_difference(values: &[f64], parity: f64, h: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let next = if i + 1 < n { values[i + 1] } else { parity * values[0] };
        let prev = if i > 0 { values[i - 1] } else { parity * values[n - 1] };
        out.push((next - prev) / (2.0 * h));
    }
    out
}
