//! Equilibrium shapes of inextensible developable elastic bands.
//!
//! The midline of a narrow band is described by its signed curvature `K` and
//! twist `W` on a uniform arclength grid. The crate evaluates the bending
//! energy `A (K^2+W^2)^2 / K^2` and its moments, minimizes it under a Möbius
//! (half-twist) closure, rebuilds the midline and the rectifying developable
//! surface, and checks the result against the pointwise equilibrium equations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod energy;
pub mod equilibrium;
pub mod error;
pub mod frame;
pub mod grid;
pub mod io;
pub mod scalar;
pub mod solver;
pub mod surface;

pub use energy::{
    energy_density, energy_gradient, energy_report, mean_curvature, moment_b_frak, moment_t_frak,
    total_energy, EnergyParams, EnergyReport,
};
pub use equilibrium::{
    equilibrium_residual, estimate_c, flat_region_report, locate_symmetry_point,
    stress_resultants, CEstimate, FlatRegion, ResidualReport, StressState, SymmetryPoint,
};
pub use error::{BandError, Result};
pub use frame::{
    closure_residual, frenet_integrate, mobius_closure_residual, periodic_closure_residual,
    ClosureResidual, FrameState,
};
pub use grid::{ArcGrid, Closure, ShapeProfile};
pub use io::{parse_config, RunConfig, Summary};
pub use solver::{
    default_initial_profile, minimize, objective, ClosureWeights, ObjectiveValue, SolveConfig,
    SolveResult,
};
pub use surface::{
    build_ruled_surface, developability_defect, ruling_angle, DefectReport, RuledSurface, Seam,
    TriMesh,
};
