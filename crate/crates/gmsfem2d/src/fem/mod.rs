//! Element matrices, global assembly, boundary conditions, and fine-scale
//! reference solves for Laplace, linear elasticity, and Stokes flow.

pub mod assemble;
pub mod elements;

pub use assemble::{assemble, fine_solve, fine_solve_on, DofLayout, FineSystem, StokesSolver};
pub use elements::{
    element_elasticity, element_laplace, element_mass, element_p2_mass, element_p2_stiffness,
    element_stokes, p2_connectivity, P2Connectivity, MIDPOINT_RULE, TRI_QUAD_DEG5,
};

use std::sync::Arc;

use crate::geometry::Point;
use crate::linalg::LinalgError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("degenerate triangle")]
    DegenerateTriangle,
    #[error("inconsistent boundary data: {0}")]
    InconsistentBC(String),
    #[error("singular system: {0}")]
    SingularMatrix(String),
    #[error("invalid operator parameters: {0}")]
    InvalidOperator(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PdeKind {
    Laplace,
    Elasticity { e: f64, nu: f64 },
    Stokes { mu: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerforationBc {
    Dirichlet,
    Neumann,
}

/// Differential operator plus the boundary condition imposed on perforations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorKind {
    pub variant: PdeKind,
    pub perforation_bc: PerforationBc,
}

impl OperatorKind {
    pub fn laplace() -> Self {
        OperatorKind {
            variant: PdeKind::Laplace,
            perforation_bc: PerforationBc::Dirichlet,
        }
    }

    pub fn elasticity(e: f64, nu: f64) -> Self {
        OperatorKind {
            variant: PdeKind::Elasticity { e, nu },
            perforation_bc: PerforationBc::Dirichlet,
        }
    }

    pub fn stokes(mu: f64) -> Self {
        OperatorKind {
            variant: PdeKind::Stokes { mu },
            perforation_bc: PerforationBc::Dirichlet,
        }
    }

    /// Components of the primary field (1 scalar, 2 vector).
    pub fn components(&self) -> usize {
        match self.variant {
            PdeKind::Laplace => 1,
            PdeKind::Elasticity { .. } | PdeKind::Stokes { .. } => 2,
        }
    }

    pub fn is_stokes(&self) -> bool {
        matches!(self.variant, PdeKind::Stokes { .. })
    }

    pub fn validate(&self) -> Result<(), FemError> {
        match self.variant {
            PdeKind::Laplace => Ok(()),
            PdeKind::Elasticity { e, nu } => {
                if e > 0.0 && nu > 0.0 && nu < 0.5 {
                    Ok(())
                } else {
                    Err(FemError::InvalidOperator(format!(
                        "need E > 0 and 0 < nu < 0.5, got E = {e}, nu = {nu}"
                    )))
                }
            }
            PdeKind::Stokes { mu } => {
                if mu > 0.0 {
                    Ok(())
                } else {
                    Err(FemError::InvalidOperator(format!("need mu > 0, got {mu}")))
                }
            }
        }
    }

    pub fn lame(&self) -> Option<LameParams> {
        match self.variant {
            PdeKind::Elasticity { e, nu } => Some(LameParams::from_young_poisson(e, nu)),
            _ => None,
        }
    }
}

/// Lamé coefficients of an isotropic medium (plane strain).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LameParams {
    pub mu: f64,
    pub lambda: f64,
}

impl LameParams {
    pub fn from_young_poisson(e: f64, nu: f64) -> Self {
        LameParams {
            mu: e / (2.0 * (1.0 + nu)),
            lambda: e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldValue {
    Scalar(f64),
    Vector([f64; 2]),
}

/// Per-component outer boundary condition; `None` components are natural
/// (zero flux / zero traction).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcValue {
    Scalar(Option<f64>),
    Vector([Option<f64>; 2]),
}

pub type OuterFn = Arc<dyn Fn(Point) -> BcValue + Send + Sync>;
pub type LoadFn = Arc<dyn Fn(Point) -> FieldValue + Send + Sync>;

/// Boundary data: outer Dirichlet/natural selection on the outer boundary,
/// homogeneous condition on perforations, and the volume load.
#[derive(Clone)]
pub struct BoundaryData {
    pub outer: OuterFn,
    pub load: LoadFn,
}

impl BoundaryData {
    pub fn scalar_constant(g: f64, f: f64) -> Self {
        BoundaryData {
            outer: Arc::new(move |_| BcValue::Scalar(Some(g))),
            load: Arc::new(move |_| FieldValue::Scalar(f)),
        }
    }

    pub fn scalar_fn(
        g: impl Fn(Point) -> f64 + Send + Sync + 'static,
        f: impl Fn(Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        BoundaryData {
            outer: Arc::new(move |p| BcValue::Scalar(Some(g(p)))),
            load: Arc::new(move |p| FieldValue::Scalar(f(p))),
        }
    }

    pub fn vector_constant(g: [f64; 2], f: [f64; 2]) -> Self {
        BoundaryData {
            outer: Arc::new(move |_| BcValue::Vector([Some(g[0]), Some(g[1])])),
            load: Arc::new(move |_| FieldValue::Vector(f)),
        }
    }

    pub fn vector_fn(
        g: impl Fn(Point) -> [Option<f64>; 2] + Send + Sync + 'static,
        f: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        BoundaryData {
            outer: Arc::new(move |p| BcValue::Vector(g(p))),
            load: Arc::new(move |p| FieldValue::Vector(f(p))),
        }
    }
}

impl std::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BoundaryData {..}")
    }
}

/// Fine-grid solution of one operator. `values` holds the primary field on
/// every fine DOF, Dirichlet DOFs included; Stokes solutions carry the nodal
/// pressure separately.
#[derive(Debug, Clone)]
pub struct Solution {
    pub op: OperatorKind,
    pub values: Vec<f64>,
    pub pressure: Option<Vec<f64>>,
}
