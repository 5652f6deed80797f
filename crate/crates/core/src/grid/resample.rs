//! Grid resampling with physical-extent preservation: the output spacing is
//! rescaled so the resampled grid covers the same volume as the source.

use super::{GridGeometry, VoxelGrid};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleMethod {
    Trilinear,
    /// 2D Catmull-Rom bicubic per axial slice, linear across slices.
    BicubicSlices,
    Nearest,
}

fn catmull_rom(p0: f64, p1: f64, p2: f64, p3: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * ((2.0 * p1)
        + (-p0 + p2) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
        + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3)
}

fn bicubic_slice_sample(g: &VoxelGrid, x: f64, y: f64, z: usize) -> f64 {
    let [nx, ny, _] = g.geom.dims;
    let x0 = x.floor() as i64;
    let y0 = y.floor() as i64;
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let fetch = |xi: i64, yi: i64| {
        g.values[g.geom.index(
            xi.clamp(0, nx as i64 - 1) as usize,
            yi.clamp(0, ny as i64 - 1) as usize,
            z,
        )] as f64
    };
    let mut rows = [0.0; 4];
    for (i, row) in rows.iter_mut().enumerate() {
        let yi = y0 - 1 + i as i64;
        *row = catmull_rom(
            fetch(x0 - 1, yi),
            fetch(x0, yi),
            fetch(x0 + 1, yi),
            fetch(x0 + 2, yi),
            fx,
        );
    }
    catmull_rom(rows[0], rows[1], rows[2], rows[3], fy)
}

/// Resample to `new_dims`. Spacing is rescaled so the physical extent is
/// preserved; the origin shifts by half the spacing difference so cell
/// boundaries line up.
pub fn resample(g: &VoxelGrid, new_dims: [usize; 3], method: ResampleMethod) -> Result<VoxelGrid> {
    if new_dims.iter().any(|&d| d < 2) {
        return Err(Error::Config(format!(
            "resample dims must be >= 2 per axis, got {new_dims:?}"
        )));
    }
    let old = &g.geom;
    let mut spacing = [0.0; 3];
    let mut origin = [0.0; 3];
    for a in 0..3 {
        spacing[a] = old.spacing[a] * old.dims[a] as f64 / new_dims[a] as f64;
        origin[a] = old.origin[a] + 0.5 * (spacing[a] - old.spacing[a]);
    }
    let geom = GridGeometry::new(new_dims, spacing, origin)?;

    // source voxel coordinate of each target voxel center
    let src = |a: usize, i: usize| (spacing[a] / old.spacing[a]) * (i as f64 + 0.5) - 0.5;

    let mut values = vec![0.0f32; geom.voxel_count()];
    for z in 0..new_dims[2] {
        let sz = src(2, z);
        for y in 0..new_dims[1] {
            let sy = src(1, y);
            for x in 0..new_dims[0] {
                let sx = src(0, x);
                let v = match method {
                    ResampleMethod::Trilinear => g.sample_voxel([sx, sy, sz]),
                    ResampleMethod::Nearest => {
                        let cx = sx.round().clamp(0.0, old.dims[0] as f64 - 1.0) as usize;
                        let cy = sy.round().clamp(0.0, old.dims[1] as f64 - 1.0) as usize;
                        let cz = sz.round().clamp(0.0, old.dims[2] as f64 - 1.0) as usize;
                        g.values[old.index(cx, cy, cz)] as f64
                    }
                    ResampleMethod::BicubicSlices => {
                        let z0 = sz.floor().clamp(0.0, old.dims[2] as f64 - 1.0) as usize;
                        let z1 = (z0 + 1).min(old.dims[2] - 1);
                        let fz = (sz - z0 as f64).clamp(0.0, 1.0);
                        let a = bicubic_slice_sample(g, sx, sy, z0);
                        let b = bicubic_slice_sample(g, sx, sy, z1);
                        a * (1.0 - fz) + b * fz
                    }
                };
                values[geom.index(x, y, z)] = v as f32;
            }
        }
    }
    Ok(VoxelGrid { geom, values })
}
