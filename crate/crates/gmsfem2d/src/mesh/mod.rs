//! Perforated-domain geometry, the coarse grid, conforming fine
//! triangulations, and the coarse-neighborhood decomposition.

mod coarse;
mod domain;
mod fine;
mod generate;
mod io;
mod neighborhood;

pub use coarse::{build_coarse_grid, CoarseGrid};
pub use domain::{build_domain, PerforatedDomain};
pub use fine::{BoundaryEdge, EdgeMarker, FineMesh, NodeMarker};
pub use generate::generate_fine_mesh;
pub use io::{load_mesh, save_mesh};
pub use neighborhood::{build_neighborhood, oversample, Neighborhood};

use thiserror::Error;

/// Geometric tolerance for validity checks (tangency, on-boundary tests).
pub const GEOM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("inclusions {a} and {b} intersect or touch")]
    OverlappingInclusions { a: usize, b: usize },
    #[error("inclusion {index} is not strictly inside the domain")]
    InclusionOutsideDomain { index: usize },
    #[error("polygon_segments must be at least 8, got {got}")]
    InvalidPolygonSegments { got: usize },
    #[error("inclusion {index} has nonpositive radius")]
    NonpositiveRadius { index: usize },
    #[error("domain extent is not an integer multiple of H = {h}")]
    NonDivisibleH { h: f64 },
    #[error("fine mesh refinement failed: {0}")]
    RefinementFailure(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed mesh file at line {line}: {message}")]
    MalformedMeshFile { line: usize, message: String },
    #[error("mesh invariant violated: {0}")]
    InvalidMesh(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
