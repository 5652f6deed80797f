//! Geometry engine for extracting the negative volume of a joint: the empty
//! space between a moving bone and the confining bone, obtained by inflating
//! the bone-head mesh along its normals inside a signed-distance field and
//! clipping the result. Includes the voxel-grid kernels, surface extraction,
//! voxelization, symmetry metrics and synthetic phantoms the pipeline needs.

pub mod error;
pub mod grid;
pub mod inflate;
pub mod io;
pub mod phantom;
pub mod surface;
pub mod symmetry;
pub mod voi;

pub use error::{Error, Result};
