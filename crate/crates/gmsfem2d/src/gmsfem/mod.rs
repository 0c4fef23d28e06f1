//! The multiscale offline pipeline: snapshot spaces on coarse
//! neighborhoods, local spectral decomposition, the global coarse space,
//! and the coarse solve with fine-scale reconstruction.

mod coarse;
mod local;
mod spectral;

pub use coarse::{
    assemble_r0, build_pou, coarse_gram_rank, coarse_solve, coarse_solve_stokes, export_offline,
    CoarsePressure, GlobalCoarseSpace, PartitionOfUnity, SparseVec, StokesCoarseSolution,
};
pub use local::{snapshot_harmonic, snapshot_spectral, LocalOperator};
pub use spectral::{local_forms, select_offline, OfflineBasis};

use crate::fem::FemError;
use crate::linalg::{DenseMat, LinalgError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GmsfemError {
    #[error("singular local system: {0}")]
    SingularLocalSystem(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coarse space is rank deficient: rank {got} of {expected}")]
    RankDeficientCoarseSpace { expected: usize, got: usize },
    #[error("coarse system is singular")]
    SingularCoarseMatrix,
    #[error("coarse saddle point is singular; the velocity space is too poor for the pressure space")]
    CoarseInfSupFailure,
    #[error("snapshot set is empty")]
    EmptySnapshotSet,
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// How a snapshot set was produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Harmonic,
    Spectral,
    Randomized {
        seed: u64,
        k_nb: usize,
        p_bf: usize,
        t: usize,
    },
}

/// Per-neighborhood snapshot matrix. Columns are local fields on the
/// neighborhood's field DOFs (velocity only for Stokes).
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    pub coarse_node: usize,
    pub columns: DenseMat,
    pub provenance: Provenance,
}

impl SnapshotSet {
    pub fn count(&self) -> usize {
        self.columns.cols()
    }
}
