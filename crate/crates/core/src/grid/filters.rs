//! Scalar-field filters: separable Gaussian smoothing, per-slice median, and
//! a 3D Canny edge detector with 26-direction non-maximum suppression.
//! Borders are handled by clamping.

use super::{BinaryMask, VoxelGrid};
use crate::error::{Error, Result};
use rayon::prelude::*;

fn gaussian_kernel(sigma_voxels: f64) -> Vec<f64> {
    let radius = (3.0 * sigma_voxels).ceil().max(1.0) as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i as f64).powi(2) / (2.0 * sigma_voxels * sigma_voxels)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

fn convolve_axis(g: &VoxelGrid, axis: usize, kernel: &[f64]) -> VoxelGrid {
    let [nx, ny, _] = g.geom.dims;
    let radius = (kernel.len() / 2) as i64;
    let len = g.geom.dims[axis] as i64;
    let plane = nx * ny;
    let mut out = vec![0.0f32; g.values.len()];
    out.par_chunks_mut(plane).enumerate().for_each(|(z, slab)| {
        for y in 0..ny {
            for x in 0..nx {
                let c = [x as i64, y as i64, z as i64];
                let mut acc = 0.0f64;
                for (ki, w) in kernel.iter().enumerate() {
                    let mut s = c;
                    s[axis] = (c[axis] + ki as i64 - radius).clamp(0, len - 1);
                    acc += w * g.values[g.geom.index(s[0] as usize, s[1] as usize, s[2] as usize)]
                        as f64;
                }
                slab[x + nx * y] = acc as f32;
            }
        }
    });
    VoxelGrid {
        geom: g.geom,
        values: out,
    }
}

/// Separable Gaussian smoothing with per-axis sigma given in voxels.
pub fn gaussian_smooth(g: &VoxelGrid, sigma_voxels: [f64; 3]) -> VoxelGrid {
    let mut out = g.clone();
    for axis in 0..3 {
        if sigma_voxels[axis] > 0.0 {
            let kernel = gaussian_kernel(sigma_voxels[axis]);
            out = convolve_axis(&out, axis, &kernel);
        }
    }
    out
}

/// Per-axial-slice 2D median with a square (2r+1)^2 window, clamped at edges.
pub fn median_filter_slices(g: &VoxelGrid, radius: usize) -> VoxelGrid {
    let [nx, ny, _] = g.geom.dims;
    let r = radius as i64;
    let plane = nx * ny;
    let mut out = vec![0.0f32; g.values.len()];
    out.par_chunks_mut(plane).enumerate().for_each(|(z, slab)| {
        let mut window = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
        for y in 0..ny as i64 {
            for x in 0..nx as i64 {
                window.clear();
                for dy in -r..=r {
                    for dx in -r..=r {
                        let sx = (x + dx).clamp(0, nx as i64 - 1) as usize;
                        let sy = (y + dy).clamp(0, ny as i64 - 1) as usize;
                        window.push(g.values[g.geom.index(sx, sy, z)]);
                    }
                }
                window.sort_by(|a, b| a.partial_cmp(b).unwrap());
                slab[(x + nx as i64 * y) as usize] = window[window.len() / 2];
            }
        }
    });
    VoxelGrid {
        geom: g.geom,
        values: out,
    }
}

/// 3D Canny: Gaussian smoothing at `sigma_mm`, central-difference gradients,
/// non-maximum suppression along the gradient direction quantized to the 26
/// neighbor offsets, then double-threshold hysteresis with 26-connectivity.
/// `low` and `high` are fractions of the maximum gradient magnitude.
pub fn canny3d(g: &VoxelGrid, sigma_mm: f64, low: f64, high: f64) -> Result<BinaryMask> {
    if !(low > 0.0 && low < high && high < 1.0) {
        return Err(Error::Config(format!(
            "canny thresholds must satisfy 0 < low < high < 1, got low={low}, high={high}"
        )));
    }
    let min_spacing = g.geom.spacing.iter().cloned().fold(f64::INFINITY, f64::min);
    if sigma_mm < 0.5 * min_spacing {
        return Err(Error::Resolution {
            sigma_mm,
            min_spacing_mm: min_spacing,
        });
    }
    let sigma_vox = [
        sigma_mm / g.geom.spacing[0],
        sigma_mm / g.geom.spacing[1],
        sigma_mm / g.geom.spacing[2],
    ];
    let smoothed = gaussian_smooth(g, sigma_vox);

    let [nx, ny, nz] = g.geom.dims;
    let n = g.geom.voxel_count();
    let mut grad = vec![[0.0f32; 3]; n];
    let mut mag = vec![0.0f32; n];
    let clamp_get = |x: i64, y: i64, z: i64| {
        smoothed.values[g.geom.index(
            x.clamp(0, nx as i64 - 1) as usize,
            y.clamp(0, ny as i64 - 1) as usize,
            z.clamp(0, nz as i64 - 1) as usize,
        )] as f64
    };
    for z in 0..nz as i64 {
        for y in 0..ny as i64 {
            for x in 0..nx as i64 {
                let gx =
                    (clamp_get(x + 1, y, z) - clamp_get(x - 1, y, z)) / (2.0 * g.geom.spacing[0]);
                let gy =
                    (clamp_get(x, y + 1, z) - clamp_get(x, y - 1, z)) / (2.0 * g.geom.spacing[1]);
                let gz =
                    (clamp_get(x, y, z + 1) - clamp_get(x, y, z - 1)) / (2.0 * g.geom.spacing[2]);
                let idx = g.geom.index(x as usize, y as usize, z as usize);
                grad[idx] = [gx as f32, gy as f32, gz as f32];
                mag[idx] = ((gx * gx + gy * gy + gz * gz) as f32).sqrt();
            }
        }
    }
    let max_mag = mag.iter().cloned().fold(0.0f32, f32::max);
    if max_mag <= 0.0 {
        return Ok(BinaryMask::empty(g.geom));
    }

    // 26 quantized directions, unit length
    let mut dirs: Vec<[f64; 3]> = Vec::with_capacity(26);
    let mut offsets: Vec<[i64; 3]> = Vec::with_capacity(26);
    for dz in -1i64..=1 {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 && dz == 0 {
                    continue;
                }
                let len = ((dx * dx + dy * dy + dz * dz) as f64).sqrt();
                dirs.push([dx as f64 / len, dy as f64 / len, dz as f64 / len]);
                offsets.push([dx, dy, dz]);
            }
        }
    }

    let mag_at = |x: i64, y: i64, z: i64| -> f32 {
        if x < 0 || y < 0 || z < 0 || x >= nx as i64 || y >= ny as i64 || z >= nz as i64 {
            0.0
        } else {
            mag[g.geom.index(x as usize, y as usize, z as usize)]
        }
    };

    let mut nms = vec![false; n];
    for z in 0..nz as i64 {
        for y in 0..ny as i64 {
            for x in 0..nx as i64 {
                let idx = g.geom.index(x as usize, y as usize, z as usize);
                let m = mag[idx];
                if m <= 0.0 {
                    continue;
                }
                let gv = grad[idx];
                let (mut best, mut best_dot) = (0usize, f64::NEG_INFINITY);
                for (i, d) in dirs.iter().enumerate() {
                    let dot = gv[0] as f64 * d[0] + gv[1] as f64 * d[1] + gv[2] as f64 * d[2];
                    if dot > best_dot {
                        best_dot = dot;
                        best = i;
                    }
                }
                let o = offsets[best];
                let ahead = mag_at(x + o[0], y + o[1], z + o[2]);
                let behind = mag_at(x - o[0], y - o[1], z - o[2]);
                // strict test toward the gradient breaks the two-voxel tie of
                // a symmetric step edge, keeping the ridge one voxel thick
                if m > ahead && m >= behind {
                    nms[idx] = true;
                }
            }
        }
    }

    // hysteresis: seed from strong voxels, grow over weak ones (26-connected)
    let low_t = low as f32 * max_mag;
    let high_t = high as f32 * max_mag;
    let mut edges = vec![false; n];
    let mut stack = Vec::new();
    for idx in 0..n {
        if nms[idx] && mag[idx] >= high_t && !edges[idx] {
            edges[idx] = true;
            stack.push(idx);
            while let Some(cur) = stack.pop() {
                let cx = (cur % nx) as i64;
                let cy = ((cur / nx) % ny) as i64;
                let cz = (cur / (nx * ny)) as i64;
                for o in &offsets {
                    let (xx, yy, zz) = (cx + o[0], cy + o[1], cz + o[2]);
                    if xx < 0
                        || yy < 0
                        || zz < 0
                        || xx >= nx as i64
                        || yy >= ny as i64
                        || zz >= nz as i64
                    {
                        continue;
                    }
                    let nidx = g.geom.index(xx as usize, yy as usize, zz as usize);
                    if nms[nidx] && !edges[nidx] && mag[nidx] >= low_t {
                        edges[nidx] = true;
                        stack.push(nidx);
                    }
                }
            }
        }
    }
    BinaryMask::new(g.geom, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridGeometry;

    fn geom(n: usize) -> GridGeometry {
        GridGeometry::new([n, n, n], [1.0, 1.0, 1.0], [0.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn median_removes_single_impulse() {
        let mut g = VoxelGrid::zeros(geom(5));
        g.set(2, 2, 2, 100.0);
        let f = median_filter_slices(&g, 1);
        assert_eq!(f.get(2, 2, 2), 0.0);
    }

    #[test]
    fn median_leaves_constant_grid_unchanged() {
        let g = VoxelGrid::new(geom(4), vec![3.5; 64]).unwrap();
        assert_eq!(median_filter_slices(&g, 1), g);
    }

    #[test]
    fn median_checkerboard_goes_to_majority() {
        // a 2D checkerboard slice: each interior 3x3 window holds 5 of one
        // value and 4 of the other, so the median is the window majority
        let n = 7;
        let mut g = VoxelGrid::zeros(geom(n));
        for y in 0..n {
            for x in 0..n {
                if (x + y) % 2 == 0 {
                    g.set(x, y, 3, 1.0);
                }
            }
        }
        let f = median_filter_slices(&g, 1);
        for y in 1..n - 1 {
            for x in 1..n - 1 {
                let expected = if (x + y) % 2 == 0 { 1.0 } else { 0.0 };
                assert_eq!(f.get(x, y, 3), expected, "at ({x},{y})");
            }
        }
    }

    #[test]
    fn canny_step_edge_is_single_plane() {
        let n = 16;
        let mut g = VoxelGrid::zeros(geom(n));
        for z in 8..n {
            for y in 0..n {
                for x in 0..n {
                    g.set(x, y, z, 1.0);
                }
            }
        }
        let edges = canny3d(&g, 1.0, 0.2, 0.6).unwrap();
        // one voxel thick, constant z, away from the clamped borders
        let mut zs = std::collections::BTreeSet::new();
        for z in 0..n {
            for y in 2..n - 2 {
                for x in 2..n - 2 {
                    if edges.get(x, y, z) {
                        zs.insert(z);
                    }
                }
            }
        }
        assert_eq!(
            zs.len(),
            1,
            "edge plane should be one voxel thick, got z={zs:?}"
        );
        let z = *zs.iter().next().unwrap();
        assert!(z == 7 || z == 8);
        for y in 2..n - 2 {
            for x in 2..n - 2 {
                assert!(edges.get(x, y, z));
            }
        }
    }

    #[test]
    fn canny_constant_grid_has_no_edges() {
        let g = VoxelGrid::new(geom(8), vec![0.4; 512]).unwrap();
        let edges = canny3d(&g, 1.0, 0.2, 0.6).unwrap();
        assert!(edges.is_empty());
    }

    #[test]
    fn canny_rejects_subvoxel_sigma() {
        let g = VoxelGrid::zeros(geom(4));
        assert!(matches!(
            canny3d(&g, 0.2, 0.2, 0.6),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn canny_localizes_sphere_surface() {
        let n = 64;
        let c = (n as f64 - 1.0) / 2.0;
        let r = 15.0;
        let mut g = VoxelGrid::zeros(geom(n));
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    let d2 =
                        (x as f64 - c).powi(2) + (y as f64 - c).powi(2) + (z as f64 - c).powi(2);
                    if d2 <= r * r {
                        g.set(x, y, z, 1.0);
                    }
                }
            }
        }
        let edges = canny3d(&g, 1.0, 0.1, 0.3).unwrap();
        let mut total = 0usize;
        let mut near = 0usize;
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    if edges.get(x, y, z) {
                        total += 1;
                        let d = ((x as f64 - c).powi(2)
                            + (y as f64 - c).powi(2)
                            + (z as f64 - c).powi(2))
                        .sqrt();
                        if (d - r).abs() <= 1.5 {
                            near += 1;
                        }
                    }
                }
            }
        }
        assert!(
            total > 500,
            "sphere should produce a dense edge shell, got {total}"
        );
        let frac = near as f64 / total as f64;
        assert!(
            frac >= 0.95,
            "only {frac:.3} of edge voxels near the surface"
        );
    }

    #[test]
    fn gaussian_preserves_mean_of_constant() {
        let g = VoxelGrid::new(geom(6), vec![2.0; 216]).unwrap();
        let s = gaussian_smooth(&g, [1.0, 1.0, 1.0]);
        for v in &s.values {
            assert!((v - 2.0).abs() < 1e-5);
        }
    }
}
