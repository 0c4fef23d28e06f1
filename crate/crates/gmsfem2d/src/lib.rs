//! Generalized multiscale finite elements on 2-D perforated domains.

pub mod fem;
pub mod geometry;
pub mod gmsfem;
pub mod linalg;
pub mod mesh;
