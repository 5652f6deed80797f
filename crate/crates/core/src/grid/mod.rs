//! Dense voxel grids: scalar fields, binary masks and the kernels that act on
//! them (normalization, thresholding, morphology, filtering, distance
//! transforms, resampling).
//!
//! Values are stored row-major with x fastest: `idx = x + nx*(y + ny*z)`.
//! Voxel centers sit at `origin + index * spacing` (millimeters).

mod components;
mod distance;
mod filters;
mod morphology;
mod resample;
mod threshold;

pub use components::{connected_components, largest_component, remove_small_components};
pub use distance::distance_field;
pub use filters::{canny3d, gaussian_smooth, median_filter_slices};
pub use morphology::{close, dilate, erode, open, StructuringElement};
pub use resample::{resample, ResampleMethod};
pub use threshold::{minimum_threshold, threshold_minimum};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Placement of a dense grid in physical space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub dims: [usize; 3],
    /// Voxel spacing in millimeters, strictly positive.
    pub spacing: [f64; 3],
    /// World coordinate of voxel (0,0,0), millimeters.
    pub origin: [f64; 3],
}

impl GridGeometry {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Config(format!(
                "grid dims must be positive, got {dims:?}"
            )));
        }
        if spacing
            .iter()
            .any(|&s| s <= 0.0 || s.is_nan() || !s.is_finite())
        {
            return Err(Error::Config(format!(
                "grid spacing must be strictly positive and finite, got {spacing:?}"
            )));
        }
        Ok(Self {
            dims,
            spacing,
            origin,
        })
    }

    #[inline]
    pub fn voxel_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    /// World coordinate of a voxel center.
    #[inline]
    pub fn world(&self, x: usize, y: usize, z: usize) -> [f64; 3] {
        [
            self.origin[0] + x as f64 * self.spacing[0],
            self.origin[1] + y as f64 * self.spacing[1],
            self.origin[2] + z as f64 * self.spacing[2],
        ]
    }

    /// Continuous voxel coordinate of a world point (inverse of `world`).
    #[inline]
    pub fn to_voxel(&self, p: [f64; 3]) -> [f64; 3] {
        [
            (p[0] - self.origin[0]) / self.spacing[0],
            (p[1] - self.origin[1]) / self.spacing[1],
            (p[2] - self.origin[2]) / self.spacing[2],
        ]
    }

    /// Volume of one voxel in mm^3.
    #[inline]
    pub fn voxel_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    /// Length of the voxel diagonal in mm.
    #[inline]
    pub fn voxel_diagonal(&self) -> f64 {
        (self.spacing[0] * self.spacing[0]
            + self.spacing[1] * self.spacing[1]
            + self.spacing[2] * self.spacing[2])
            .sqrt()
    }

    fn same_as(&self, other: &GridGeometry) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
        self.dims == other.dims
            && self
                .spacing
                .iter()
                .zip(&other.spacing)
                .all(|(a, b)| close(*a, *b))
            && self
                .origin
                .iter()
                .zip(&other.origin)
                .all(|(a, b)| close(*a, *b))
    }

    /// Errors unless the two geometries agree (dims exact, spacing/origin to 1e-9).
    pub fn check_same(&self, other: &GridGeometry, context: &str) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::GeometryMismatch(format!(
                "{context}: {:?}/{:?}/{:?} vs {:?}/{:?}/{:?}",
                self.dims, self.spacing, self.origin, other.dims, other.spacing, other.origin
            )))
        }
    }
}

/// Dense 3D scalar field with physical spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub geom: GridGeometry,
    pub values: Vec<f32>,
}

impl VoxelGrid {
    pub fn new(geom: GridGeometry, values: Vec<f32>) -> Result<Self> {
        if values.len() != geom.voxel_count() {
            return Err(Error::Config(format!(
                "value buffer length {} does not match dims {:?}",
                values.len(),
                geom.dims
            )));
        }
        Ok(Self { geom, values })
    }

    pub fn zeros(geom: GridGeometry) -> Self {
        let n = geom.voxel_count();
        Self {
            geom,
            values: vec![0.0; n],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.values[self.geom.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: f32) {
        let i = self.geom.index(x, y, z);
        self.values[i] = v;
    }

    /// Trilinear sample at a world point; coordinates are clamped to the grid.
    pub fn sample_world(&self, p: [f64; 3]) -> f64 {
        let v = self.geom.to_voxel(p);
        self.sample_voxel(v)
    }

    /// Trilinear sample at a continuous voxel coordinate, clamped to the grid.
    pub fn sample_voxel(&self, v: [f64; 3]) -> f64 {
        let [nx, ny, nz] = self.geom.dims;
        let cx = v[0].clamp(0.0, (nx - 1) as f64);
        let cy = v[1].clamp(0.0, (ny - 1) as f64);
        let cz = v[2].clamp(0.0, (nz - 1) as f64);
        let x0 = (cx.floor() as usize).min(nx - 1);
        let y0 = (cy.floor() as usize).min(ny - 1);
        let z0 = (cz.floor() as usize).min(nz - 1);
        let x1 = (x0 + 1).min(nx - 1);
        let y1 = (y0 + 1).min(ny - 1);
        let z1 = (z0 + 1).min(nz - 1);
        let fx = cx - x0 as f64;
        let fy = cy - y0 as f64;
        let fz = cz - z0 as f64;

        let at = |x: usize, y: usize, z: usize| self.values[self.geom.index(x, y, z)] as f64;
        let c00 = at(x0, y0, z0) * (1.0 - fx) + at(x1, y0, z0) * fx;
        let c10 = at(x0, y1, z0) * (1.0 - fx) + at(x1, y1, z0) * fx;
        let c01 = at(x0, y0, z1) * (1.0 - fx) + at(x1, y0, z1) * fx;
        let c11 = at(x0, y1, z1) * (1.0 - fx) + at(x1, y1, z1) * fx;
        let c0 = c00 * (1.0 - fy) + c10 * fy;
        let c1 = c01 * (1.0 - fy) + c11 * fy;
        c0 * (1.0 - fz) + c1 * fz
    }

    /// Reverse the x axis in place on the same geometry (an exact index
    /// flip about the grid's x center).
    pub fn flipped_x(&self) -> VoxelGrid {
        let [nx, ny, nz] = self.geom.dims;
        let mut values = vec![0.0f32; self.values.len()];
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    values[self.geom.index(x, y, z)] =
                        self.values[self.geom.index(nx - 1 - x, y, z)];
                }
            }
        }
        VoxelGrid {
            geom: self.geom,
            values,
        }
    }

    /// Affine rescale of all values to [0,1]; a constant grid maps to all zeros.
    pub fn normalize_minmax(&self) -> Result<VoxelGrid> {
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::ValueDomain(
                "normalize_minmax: input contains NaN or infinity".into(),
            ));
        }
        let mut lo = f32::INFINITY;
        let mut hi = f32::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let range = hi - lo;
        let values = if range > 0.0 {
            self.values.iter().map(|&v| (v - lo) / range).collect()
        } else {
            vec![0.0; self.values.len()]
        };
        Ok(VoxelGrid {
            geom: self.geom,
            values,
        })
    }
}

/// Dense 3D boolean field sharing the `VoxelGrid` layout.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    pub geom: GridGeometry,
    pub values: Vec<bool>,
}

impl BinaryMask {
    pub fn new(geom: GridGeometry, values: Vec<bool>) -> Result<Self> {
        if values.len() != geom.voxel_count() {
            return Err(Error::Config(format!(
                "mask buffer length {} does not match dims {:?}",
                values.len(),
                geom.dims
            )));
        }
        Ok(Self { geom, values })
    }

    pub fn empty(geom: GridGeometry) -> Self {
        let n = geom.voxel_count();
        Self {
            geom,
            values: vec![false; n],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> bool {
        self.values[self.geom.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: bool) {
        let i = self.geom.index(x, y, z);
        self.values[i] = v;
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    pub fn volume_mm3(&self) -> f64 {
        self.count() as f64 * self.geom.voxel_volume()
    }

    pub fn is_empty(&self) -> bool {
        !self.values.iter().any(|&v| v)
    }

    pub fn is_full(&self) -> bool {
        self.values.iter().all(|&v| v)
    }

    /// Mask as a 0/1 scalar field.
    pub fn to_grid(&self) -> VoxelGrid {
        VoxelGrid {
            geom: self.geom,
            values: self
                .values
                .iter()
                .map(|&v| if v { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    pub fn complement(&self) -> BinaryMask {
        BinaryMask {
            geom: self.geom,
            values: self.values.iter().map(|v| !v).collect(),
        }
    }

    /// Reverse the x axis in place on the same geometry (an exact index
    /// flip about the grid's x center).
    pub fn flipped_x(&self) -> BinaryMask {
        let [nx, ny, nz] = self.geom.dims;
        let mut values = vec![false; self.values.len()];
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    values[self.geom.index(x, y, z)] =
                        self.values[self.geom.index(nx - 1 - x, y, z)];
                }
            }
        }
        BinaryMask {
            geom: self.geom,
            values,
        }
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.geom.check_same(&other.geom, "mask and")?;
        Ok(BinaryMask {
            geom: self.geom,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| *a && *b)
                .collect(),
        })
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.geom.check_same(&other.geom, "mask or")?;
        Ok(BinaryMask {
            geom: self.geom,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| *a || *b)
                .collect(),
        })
    }

    /// Voxels of `self` that are not in `other`.
    pub fn minus(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.geom.check_same(&other.geom, "mask minus")?;
        Ok(BinaryMask {
            geom: self.geom,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| *a && !*b)
                .collect(),
        })
    }

    pub fn overlap_count(&self, other: &BinaryMask) -> Result<usize> {
        self.geom.check_same(&other.geom, "mask overlap")?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| **a && **b)
            .count())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn geom(n: usize) -> GridGeometry {
        GridGeometry::new([n, n, n], [1.0, 1.0, 1.0], [0.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn normalize_affine_endpoints() {
        let g = VoxelGrid::new(
            GridGeometry::new([3, 1, 1], [1.0, 1.0, 1.0], [0.0; 3]).unwrap(),
            vec![0.0, 50.0, 100.0],
        )
        .unwrap();
        let n = g.normalize_minmax().unwrap();
        assert_eq!(n.values, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn normalize_constant_grid_maps_to_zero() {
        let g = VoxelGrid::new(
            GridGeometry::new([3, 1, 1], [1.0, 1.0, 1.0], [0.0; 3]).unwrap(),
            vec![7.0, 7.0, 7.0],
        )
        .unwrap();
        let n = g.normalize_minmax().unwrap();
        assert_eq!(n.values, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn normalize_hand_evaluated_mapping() {
        // (v + 1000) / 4000 evaluated by hand
        let g = VoxelGrid::new(
            GridGeometry::new([3, 1, 1], [1.0, 1.0, 1.0], [0.0; 3]).unwrap(),
            vec![-1000.0, 0.0, 3000.0],
        )
        .unwrap();
        let n = g.normalize_minmax().unwrap();
        assert_eq!(n.values, vec![0.0, 0.25, 1.0]);
    }

    #[test]
    fn normalize_rejects_nonfinite() {
        let g = VoxelGrid::new(
            GridGeometry::new([2, 1, 1], [1.0, 1.0, 1.0], [0.0; 3]).unwrap(),
            vec![f32::NAN, 1.0],
        )
        .unwrap();
        assert!(matches!(g.normalize_minmax(), Err(Error::ValueDomain(_))));
    }

    #[test]
    fn normalize_idempotent_on_nonconstant() {
        let g = VoxelGrid::new(geom(3), (0..27).map(|i| i as f32 * 0.3 - 2.0).collect()).unwrap();
        let once = g.normalize_minmax().unwrap();
        let twice = once.normalize_minmax().unwrap();
        for (a, b) in once.values.iter().zip(&twice.values) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn trilinear_sample_matches_values_at_centers() {
        let mut g = VoxelGrid::zeros(geom(4));
        g.set(1, 2, 3, 5.0);
        assert_eq!(g.sample_world([1.0, 2.0, 3.0]), 5.0);
        assert_eq!(g.sample_voxel([1.0, 2.0, 3.0]), 5.0);
    }

    #[test]
    fn mask_volume_is_exact() {
        let mut m =
            BinaryMask::empty(GridGeometry::new([4, 4, 4], [0.5, 0.5, 2.0], [0.0; 3]).unwrap());
        m.set(0, 0, 0, true);
        m.set(1, 1, 1, true);
        m.set(2, 3, 3, true);
        assert_eq!(m.volume_mm3(), 3.0 * 0.5 * 0.5 * 2.0);
    }
}
