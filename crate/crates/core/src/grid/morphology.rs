//! Binary morphology with Minkowski semantics. Out-of-grid voxels count as
//! false, so erosion clears a border of structuring-element width.

use super::BinaryMask;
use crate::error::{Error, Result};
use rayon::prelude::*;

/// Symmetric structuring element given as a set of voxel offsets.
#[derive(Debug, Clone)]
pub struct StructuringElement {
    offsets: Vec<[i64; 3]>,
    radius: i64,
}

impl StructuringElement {
    /// Euclidean ball of the given radius in voxels. Radius 1 is the
    /// 6-neighborhood (center plus axis neighbors).
    pub fn ball(radius_voxels: u32) -> Result<Self> {
        Self::build(radius_voxels, |d: [i64; 3], r| {
            d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= r * r
        })
    }

    /// Chebyshev cube of the given radius in voxels.
    pub fn cube(radius_voxels: u32) -> Result<Self> {
        Self::build(radius_voxels, |d: [i64; 3], r| {
            d.iter().all(|&c| c.abs() <= r)
        })
    }

    fn build(radius_voxels: u32, keep: impl Fn([i64; 3], i64) -> bool) -> Result<Self> {
        if radius_voxels == 0 {
            return Err(Error::Config(
                "structuring element radius must be >= 1".into(),
            ));
        }
        let r = radius_voxels as i64;
        let mut offsets = Vec::new();
        for dz in -r..=r {
            for dy in -r..=r {
                for dx in -r..=r {
                    if keep([dx, dy, dz], r) {
                        offsets.push([dx, dy, dz]);
                    }
                }
            }
        }
        Ok(Self { offsets, radius: r })
    }

    pub fn offsets(&self) -> &[[i64; 3]] {
        &self.offsets
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }
}

fn sweep(m: &BinaryMask, se: &StructuringElement, all: bool) -> BinaryMask {
    let [nx, ny, nz] = m.geom.dims;
    let plane = nx * ny;
    let mut out = vec![false; m.values.len()];
    out.par_chunks_mut(plane).enumerate().for_each(|(z, slab)| {
        for y in 0..ny {
            for x in 0..nx {
                let mut acc = all;
                for &[dx, dy, dz] in &se.offsets {
                    let (xx, yy, zz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                    let inside = xx >= 0
                        && yy >= 0
                        && zz >= 0
                        && (xx as usize) < nx
                        && (yy as usize) < ny
                        && (zz as usize) < nz;
                    let v = inside && m.values[m.geom.index(xx as usize, yy as usize, zz as usize)];
                    if all {
                        if !v {
                            acc = false;
                            break;
                        }
                    } else if v {
                        acc = true;
                        break;
                    }
                }
                slab[x + nx * y] = acc;
            }
        }
    });
    BinaryMask {
        geom: m.geom,
        values: out,
    }
}

/// Minkowski erosion: kept where the whole element fits inside the mask.
pub fn erode(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    sweep(m, se, true)
}

/// Minkowski dilation: set where the element touches any mask voxel.
pub fn dilate(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    sweep(m, se, false)
}

/// Dilate then erode.
pub fn close(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    erode(&dilate(m, se), se)
}

/// Erode then dilate.
pub fn open(m: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    dilate(&erode(m, se), se)
}
