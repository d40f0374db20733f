//! Skeleton meshes, skeleton graphs and morphometry for 3D shapes sampled as
//! surface point clouds.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! - [`geometry`]: point-cloud I/O, subsampling, normals, normalization,
//!   Chamfer/Hausdorff distances and synthetic test shapes.
//! - [`skeleton`]: medial balls predicted as convex combinations of surface
//!   points, fitted by gradient descent on reconstruction losses.
//! - [`links`]: geometric link priors plus a graph auto-encoder that
//!   completes the skeleton mesh.
//! - [`skelgraph`]: weighted skeleton graphs, longest-simple-path length,
//!   branch extraction and SWC ingestion.
//! - [`embed`]: mutual-information graph embeddings, a spectral baseline,
//!   k-means++ and hierarchical clustering.
//! - [`mat_oracle`]: brute-force medial axis on a lattice, used as ground
//!   truth and for volume reconstruction.
//! - [`autodiff`]: the small reverse-mode engine that drives all training.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod cli;
pub mod embed;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod links;
pub mod mat_oracle;
pub mod skeleton;
pub mod skelgraph;

pub use error::{Error, ErrorClass, Result};
pub use geometry::{Point3, PointCloud};
