//! Exact Euclidean distance transforms via the separable lower-envelope
//! (parabola) algorithm, and the signed distance field built from them.

use super::{BinaryMask, VoxelGrid};
use crate::error::{Error, Result};
use rayon::prelude::*;

const INF: f64 = 1e30;

/// 1-D squared distance transform with sample positions `i * spacing`.
/// `f` holds squared distances on entry and is overwritten with the result.
fn dt_1d(f: &mut [f64], spacing: f64, v: &mut [usize], zbound: &mut [f64], out: &mut [f64]) {
    let n = f.len();
    // lower envelope of parabolas y = (x - x_i)^2 + f[i]
    let mut k = 0usize;
    v[0] = 0;
    zbound[0] = -INF;
    zbound[1] = INF;
    let pos = |i: usize| i as f64 * spacing;
    for q in 1..n {
        if f[q] >= INF {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + pos(q) * pos(q)) - (f[p] + pos(p) * pos(p)))
                / (2.0 * pos(q) - 2.0 * pos(p));
            if s <= zbound[k] {
                if k == 0 {
                    // q dominates everything so far
                    v[0] = q;
                    zbound[0] = -INF;
                    zbound[1] = INF;
                    break;
                }
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                zbound[k] = s;
                zbound[k + 1] = INF;
                break;
            }
        }
    }
    let mut k = 0usize;
    for q in 0..n {
        while zbound[k + 1] < pos(q) {
            k += 1;
        }
        let p = v[k];
        let d = pos(q) - pos(p);
        out[q] = d * d + f[p];
    }
    f.copy_from_slice(out);
}

/// Squared Euclidean distance (mm^2) from every voxel to the nearest voxel of
/// the feature set, computed exactly with three separable passes.
fn edt_squared(geom: &super::GridGeometry, feature: &[bool]) -> Vec<f64> {
    let [nx, ny, nz] = geom.dims;
    let [sx, sy, sz] = geom.spacing;
    let mut d: Vec<f64> = feature.iter().map(|&f| if f { 0.0 } else { INF }).collect();

    // pass along x, then y, then z; rows are independent
    {
        let rows: Vec<usize> = (0..ny * nz).collect();
        let cols: Vec<Vec<f64>> = rows
            .par_iter()
            .map(|&r| {
                let (y, z) = (r % ny, r / ny);
                let mut f: Vec<f64> = (0..nx).map(|x| d[geom.index(x, y, z)]).collect();
                if f.iter().all(|&v| v >= INF) {
                    return f;
                }
                let mut v = vec![0usize; nx];
                let mut zb = vec![0.0; nx + 1];
                let mut out = vec![0.0; nx];
                dt_1d(&mut f, sx, &mut v, &mut zb, &mut out);
                f
            })
            .collect();
        for (r, col) in rows.iter().zip(cols) {
            let (y, z) = (r % ny, r / ny);
            for (x, val) in col.into_iter().enumerate() {
                d[geom.index(x, y, z)] = val;
            }
        }
    }
    for (axis, (len, sp)) in [(1usize, (ny, sy)), (2usize, (nz, sz))] {
        let rows: Vec<usize> = match axis {
            1 => (0..nx * nz).collect(),
            _ => (0..nx * ny).collect(),
        };
        let cols: Vec<Vec<f64>> = rows
            .par_iter()
            .map(|&r| {
                let fetch = |i: usize| match axis {
                    1 => geom.index(r % nx, i, r / nx),
                    _ => geom.index(r % nx, r / nx, i),
                };
                let mut f: Vec<f64> = (0..len).map(|i| d[fetch(i)]).collect();
                if f.iter().all(|&v| v >= INF) {
                    return f;
                }
                let mut v = vec![0usize; len];
                let mut zb = vec![0.0; len + 1];
                let mut out = vec![0.0; len];
                dt_1d(&mut f, sp, &mut v, &mut zb, &mut out);
                f
            })
            .collect();
        for (r, col) in rows.iter().zip(cols) {
            for (i, val) in col.into_iter().enumerate() {
                let idx = match axis {
                    1 => geom.index(r % nx, i, r / nx),
                    _ => geom.index(r % nx, r / nx, i),
                };
                d[idx] = val;
            }
        }
    }
    d
}

/// Signed Euclidean distance field in millimeters: negative inside the mask,
/// positive outside. The zero level sits half a voxel off the outermost true
/// voxel centers, which is where `extract_surface` places the mask's surface,
/// so "surface contact" is the zero crossing.
pub fn distance_field(m: &BinaryMask) -> Result<VoxelGrid> {
    if m.is_empty() || m.is_full() {
        return Err(Error::UndefinedSign(
            "distance_field needs a mask that is neither empty nor full".into(),
        ));
    }
    let d_in = edt_squared(&m.geom, &m.values); // distance to nearest true voxel
    let inverted: Vec<bool> = m.values.iter().map(|v| !v).collect();
    let d_out = edt_squared(&m.geom, &inverted); // distance to nearest false voxel
    let half = 0.5 * m.geom.spacing.iter().cloned().fold(f64::INFINITY, f64::min);
    let values = m
        .values
        .iter()
        .zip(d_in.iter().zip(&d_out))
        .map(|(&inside, (&di, &dod))| {
            let v = if inside {
                half - dod.sqrt()
            } else {
                di.sqrt() - half
            };
            v as f32
        })
        .collect();
    Ok(VoxelGrid {
        geom: m.geom,
        values,
    })
}
