//! Volume-of-interest localization: coarse bone masks from probability maps
//! or intensities, sagittal left/right splitting, and voxel-exact cropping.

use crate::error::{Error, Result};
use crate::grid::{
    open, remove_small_components, threshold_minimum, BinaryMask, GridGeometry, StructuringElement,
    VoxelGrid,
};
use serde::{Deserialize, Serialize};

pub const DEFAULT_MARGIN_VOXELS: usize = 8;
pub const DEFAULT_MIN_COMPONENT_VOXELS: usize = 100;

/// Inclusive voxel-index box tied to the geometry it was found on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: [usize; 3],
    pub max: [usize; 3],
    pub geom: GridGeometry,
}

impl BoundingBox {
    pub fn new(min: [usize; 3], max: [usize; 3], geom: GridGeometry) -> Result<Self> {
        for a in 0..3 {
            if min[a] > max[a] {
                return Err(Error::Config(format!("bounding box min > max on axis {a}")));
            }
            if max[a] >= geom.dims[a] {
                return Err(Error::Config(format!(
                    "bounding box exceeds grid dims on axis {a}: {} >= {}",
                    max[a], geom.dims[a]
                )));
            }
        }
        Ok(Self { min, max, geom })
    }

    pub fn dims(&self) -> [usize; 3] {
        [
            self.max[0] - self.min[0] + 1,
            self.max[1] - self.min[1] + 1,
            self.max[2] - self.min[2] + 1,
        ]
    }

    /// World coordinates of the voxel-center corners.
    pub fn world_min(&self) -> [f64; 3] {
        self.geom.world(self.min[0], self.min[1], self.min[2])
    }

    pub fn world_max(&self) -> [f64; 3] {
        self.geom.world(self.max[0], self.max[1], self.max[2])
    }

    /// Rescale a box found at localization resolution onto the source grid:
    /// corners scale per axis (floor for min, ceil for max) and clamp.
    /// Returns the scaled box and whether clamping was needed.
    pub fn scale_to(&self, source: &GridGeometry) -> Result<(BoundingBox, bool)> {
        let mut min = [0usize; 3];
        let mut max = [0usize; 3];
        let mut clamped = false;
        for a in 0..3 {
            let scale = source.dims[a] as f64 / self.geom.dims[a] as f64;
            let lo = (self.min[a] as f64 * scale).floor();
            let hi = ((self.max[a] + 1) as f64 * scale).ceil() - 1.0;
            if lo < 0.0 || hi > (source.dims[a] - 1) as f64 {
                clamped = true;
            }
            min[a] = (lo.max(0.0) as usize).min(source.dims[a] - 1);
            max[a] = (hi.max(0.0) as usize).min(source.dims[a] - 1);
        }
        Ok((BoundingBox::new(min, max, *source)?, clamped))
    }

    fn expanded(&self, margin: usize) -> BoundingBox {
        let mut min = self.min;
        let mut max = self.max;
        for a in 0..3 {
            min[a] = min[a].saturating_sub(margin);
            max[a] = (max[a] + margin).min(self.geom.dims[a] - 1);
        }
        BoundingBox {
            min,
            max,
            geom: self.geom,
        }
    }
}

/// Source for the coarse joint localization mask.
pub enum CoarseSource<'a> {
    /// Probability map in [0,1], e.g. an externally produced heatmap.
    ProbabilityMap(&'a VoxelGrid),
    /// Normalized intensity grid; `bone_threshold` overrides the minimum
    /// method when given.
    Intensity {
        grid: &'a VoxelGrid,
        bone_threshold: Option<f64>,
    },
}

/// Coarse bone/joint mask: minimum-method threshold (or a fixed bone
/// threshold), opening with a radius-1 ball, then small-component removal.
pub fn coarse_mask(source: CoarseSource<'_>, bins: usize, min_voxels: usize) -> Result<BinaryMask> {
    let mask = match source {
        CoarseSource::ProbabilityMap(g) => threshold_minimum(g, bins)?,
        CoarseSource::Intensity {
            grid,
            bone_threshold,
        } => match bone_threshold {
            Some(t) => BinaryMask {
                geom: grid.geom,
                values: grid.values.iter().map(|&v| v as f64 > t).collect(),
            },
            None => threshold_minimum(grid, bins)?,
        },
    };
    let se = StructuringElement::ball(1)?;
    let mask = open(&mask, &se);
    if mask.is_empty() {
        return Err(Error::DegenerateJoint(
            "coarse mask is empty after opening".into(),
        ));
    }
    Ok(remove_small_components(&mask, min_voxels))
}

/// Split a two-joint mask by the widest empty gap in its x-occupancy
/// profile; each side gets a tight bounding box expanded by `margin`.
pub fn split_left_right(m: &BinaryMask, margin: usize) -> Result<(BoundingBox, BoundingBox)> {
    let [nx, ny, nz] = m.geom.dims;
    let mut profile = vec![0usize; nx];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if m.get(x, y, z) {
                    profile[x] += 1;
                }
            }
        }
    }
    // occupied runs along x
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (x, &c) in profile.iter().enumerate() {
        match (c > 0, start) {
            (true, None) => start = Some(x),
            (false, Some(s)) => {
                runs.push((s, x - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, nx - 1));
    }
    if runs.len() < 2 {
        return Err(Error::SplitAmbiguity(format!(
            "x-occupancy has {} run(s); joints merge across the midline",
            runs.len()
        )));
    }
    // widest gap between consecutive runs defines the sagittal split
    let mut best_gap = 0usize;
    let mut split = 0usize;
    for w in runs.windows(2) {
        let gap = w[1].0 - w[0].1 - 1;
        if gap > best_gap {
            best_gap = gap;
            split = (w[0].1 + 1 + w[1].0) / 2;
        }
    }
    if best_gap == 0 {
        return Err(Error::SplitAmbiguity(
            "no empty gap between occupied runs".into(),
        ));
    }

    let tight = |x_lo: usize, x_hi: usize| -> Result<BoundingBox> {
        let mut min = [usize::MAX; 3];
        let mut max = [0usize; 3];
        let mut any = false;
        for z in 0..nz {
            for y in 0..ny {
                for x in x_lo..=x_hi {
                    if m.get(x, y, z) {
                        any = true;
                        min = [min[0].min(x), min[1].min(y), min[2].min(z)];
                        max = [max[0].max(x), max[1].max(y), max[2].max(z)];
                    }
                }
            }
        }
        if !any {
            return Err(Error::SplitAmbiguity(
                "one side of the split is empty".into(),
            ));
        }
        BoundingBox::new(min, max, m.geom)
    };
    let mut left = tight(0, split)?.expanded(margin);
    let mut right = tight(split + 1, nx - 1)?.expanded(margin);
    // margins may not cross the split line
    left.max[0] = left.max[0].min(split);
    right.min[0] = right.min[0].max(split + 1);
    Ok((left, right))
}

fn crop_geom(b: &BoundingBox) -> GridGeometry {
    GridGeometry {
        dims: b.dims(),
        spacing: b.geom.spacing,
        origin: b.world_min(),
    }
}

/// Voxel-exact crop; the origin moves so world coordinates are preserved.
pub fn crop_grid(g: &VoxelGrid, b: &BoundingBox) -> Result<VoxelGrid> {
    g.geom.check_same(&b.geom, "crop_grid")?;
    let geom = crop_geom(b);
    let mut values = Vec::with_capacity(geom.voxel_count());
    for z in b.min[2]..=b.max[2] {
        for y in b.min[1]..=b.max[1] {
            let row = g.geom.index(b.min[0], y, z);
            values.extend_from_slice(&g.values[row..row + geom.dims[0]]);
        }
    }
    VoxelGrid::new(geom, values)
}

/// Voxel-exact mask crop, same origin arithmetic as `crop_grid`.
pub fn crop_mask(m: &BinaryMask, b: &BoundingBox) -> Result<BinaryMask> {
    m.geom.check_same(&b.geom, "crop_mask")?;
    let geom = crop_geom(b);
    let mut values = Vec::with_capacity(geom.voxel_count());
    for z in b.min[2]..=b.max[2] {
        for y in b.min[1]..=b.max[1] {
            let row = m.geom.index(b.min[0], y, z);
            values.extend_from_slice(&m.values[row..row + geom.dims[0]]);
        }
    }
    BinaryMask::new(geom, values)
}
