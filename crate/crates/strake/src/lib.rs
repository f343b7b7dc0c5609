//! Semi-structured high-order mesh generation for streamlined 2D bodies:
//! medial-axis-guided near-field partitioning, coarse structured boundary
//! layers, a-posteriori curving, isoparametric layer splitting and an
//! unstructured far field.

pub mod error;
pub mod farfield;
pub mod geom;
pub mod geomkit;
pub mod hocurve;
pub mod isosplit;
pub mod linmesh;
pub mod medial;
pub mod meshio;
pub mod partition;
pub mod pipeline;
pub mod presets;

pub use error::{Error, Result};
