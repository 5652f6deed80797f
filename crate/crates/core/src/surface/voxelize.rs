//! Solid voxelization by the subdividing method: faces are bisected until
//! every edge is shorter than the grid spacing, the resulting dense vertex
//! set stamps the surface shell, the exterior is flood-filled from the grid
//! border, and the shell itself is resolved by ray parity per voxel center.

use super::{add, scale, sub, TriangleMesh};
use crate::error::{Error, Result};
use crate::grid::{BinaryMask, GridGeometry};
use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoxelizeMode {
    /// Full interior occupancy; requires a watertight mesh.
    Solid,
    /// Stamp only the voxels the surface passes through. Fallback for open
    /// meshes.
    SurfaceOnly,
}

/// Solid occupancy of a closed mesh on the given grid geometry.
pub fn voxelize(mesh: &TriangleMesh, template: &GridGeometry) -> Result<BinaryMask> {
    voxelize_opts(mesh, template, VoxelizeMode::Solid)
}

pub fn voxelize_opts(
    mesh: &TriangleMesh,
    template: &GridGeometry,
    mode: VoxelizeMode,
) -> Result<BinaryMask> {
    if mode == VoxelizeMode::Solid && !mesh.is_closed() {
        return Err(Error::OpenMesh(
            "solid voxelization needs a watertight mesh; use surface-only stamping instead".into(),
        ));
    }

    let mut out = BinaryMask::empty(*template);
    let stamped = stamp_surface(mesh, template, &mut out);
    if mode == VoxelizeMode::SurfaceOnly {
        return Ok(out);
    }

    if !stamped {
        // surface misses the grid entirely: the grid is uniformly inside or
        // outside; decide by one parity query at the grid center
        let [nx, ny, nz] = template.dims;
        let center = template.world(nx / 2, ny / 2, nz / 2);
        if point_in_mesh(mesh, center) {
            out.values.iter_mut().for_each(|v| *v = true);
        }
        return Ok(out);
    }

    // exterior flood fill from the border, 6-connected, blocked by the shell
    let [nx, ny, nz] = template.dims;
    let mut exterior = vec![false; template.voxel_count()];
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();
    let push = |x: usize,
                y: usize,
                z: usize,
                exterior: &mut Vec<bool>,
                stack: &mut Vec<(usize, usize, usize)>,
                shell: &BinaryMask| {
        let i = shell.geom.index(x, y, z);
        if !exterior[i] && !shell.values[i] {
            exterior[i] = true;
            stack.push((x, y, z));
        }
    };
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if x == 0 || y == 0 || z == 0 || x == nx - 1 || y == ny - 1 || z == nz - 1 {
                    push(x, y, z, &mut exterior, &mut stack, &out);
                }
            }
        }
    }
    while let Some((x, y, z)) = stack.pop() {
        if x > 0 {
            push(x - 1, y, z, &mut exterior, &mut stack, &out);
        }
        if x + 1 < nx {
            push(x + 1, y, z, &mut exterior, &mut stack, &out);
        }
        if y > 0 {
            push(x, y - 1, z, &mut exterior, &mut stack, &out);
        }
        if y + 1 < ny {
            push(x, y + 1, z, &mut exterior, &mut stack, &out);
        }
        if z > 0 {
            push(x, y, z - 1, &mut exterior, &mut stack, &out);
        }
        if z + 1 < nz {
            push(x, y, z + 1, &mut exterior, &mut stack, &out);
        }
    }

    // every voxel the flood fill could not reach is classified by ray
    // parity; this resolves the straddling shell voxels and keeps enclosed
    // cavities (hollow meshes) empty. Rays along a single axis misjudge
    // long spans where the surface runs almost parallel to them, so three
    // axes vote.
    let candidates: Vec<bool> = exterior.iter().map(|e| !e).collect();
    let mut votes = vec![0u8; out.values.len()];
    for axis in 0..3 {
        let mut inside = vec![false; out.values.len()];
        resolve_by_parity(mesh, template, &candidates, axis, &mut inside);
        for (v, &i) in votes.iter_mut().zip(&inside) {
            *v += i as u8;
        }
    }
    for (o, (&v, &c)) in out.values.iter_mut().zip(votes.iter().zip(&candidates)) {
        *o = c && v >= 2;
    }
    Ok(out)
}

/// Subdivide faces by longest-edge bisection until every edge is shorter
/// than half the minimum spacing, stamping the voxels that contain the
/// vertices and centroids. Returns whether anything landed on the grid.
fn stamp_surface(mesh: &TriangleMesh, template: &GridGeometry, out: &mut BinaryMask) -> bool {
    let limit = 0.5
        * template
            .spacing
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
    let limit_sq = limit * limit;
    let mut any = false;
    let stamp = |p: [f64; 3], out: &mut BinaryMask, any: &mut bool| {
        let v = template.to_voxel(p);
        let x = v[0].round();
        let y = v[1].round();
        let z = v[2].round();
        if x >= 0.0
            && y >= 0.0
            && z >= 0.0
            && (x as usize) < template.dims[0]
            && (y as usize) < template.dims[1]
            && (z as usize) < template.dims[2]
        {
            out.set(x as usize, y as usize, z as usize, true);
            *any = true;
        }
    };

    let len_sq = |a: [f64; 3], b: [f64; 3]| {
        let d = sub(a, b);
        d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
    };
    let mut work: Vec<[[f64; 3]; 3]> = Vec::new();
    for f in &mesh.faces {
        work.push([
            mesh.vertices[f[0] as usize],
            mesh.vertices[f[1] as usize],
            mesh.vertices[f[2] as usize],
        ]);
        while let Some(t) = work.pop() {
            let e = [len_sq(t[1], t[2]), len_sq(t[2], t[0]), len_sq(t[0], t[1])];
            let longest = if e[0] >= e[1] && e[0] >= e[2] {
                0
            } else if e[1] >= e[2] {
                1
            } else {
                2
            };
            if e[longest] < limit_sq {
                for p in t {
                    stamp(p, out, &mut any);
                }
                stamp(scale(add(add(t[0], t[1]), t[2]), 1.0 / 3.0), out, &mut any);
                continue;
            }
            let (a, b) = ((longest + 1) % 3, (longest + 2) % 3);
            let mid = scale(add(t[a], t[b]), 0.5);
            let mut t1 = t;
            t1[b] = mid;
            let mut t2 = t;
            t2[a] = mid;
            work.push(t1);
            work.push(t2);
        }
    }
    any
}

/// For each candidate row along `ray_axis`, intersect one ray with the mesh
/// and classify the row's candidate voxels by crossing parity. Ray origins
/// are nudged off the voxel-center lattice so crossings avoid mesh vertices.
fn resolve_by_parity(
    mesh: &TriangleMesh,
    template: &GridGeometry,
    candidates: &[bool],
    ray_axis: usize,
    out: &mut [bool],
) {
    let [nx, ny, nz] = template.dims;
    let (ua, va) = match ray_axis {
        0 => (1usize, 2usize),
        1 => (2, 0),
        _ => (0, 1),
    };
    let idx_of = |c: [usize; 3]| template.index(c[0], c[1], c[2]);

    // candidate voxels grouped by their (u,v) row
    let mut rows: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let c = [x, y, z];
                if candidates[idx_of(c)] {
                    rows.entry((c[ua], c[va])).or_default().push(c[ray_axis]);
                }
            }
        }
    }
    if rows.is_empty() {
        return;
    }
    // bucket faces by the voxel rows their (u,v) bounding box covers
    let dims_uv = [template.dims[ua], template.dims[va]];
    let mut buckets: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (fi, f) in mesh.faces.iter().enumerate() {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for &vi in f {
            let v = template.to_voxel(mesh.vertices[vi as usize]);
            lo[0] = lo[0].min(v[ua]);
            hi[0] = hi[0].max(v[ua]);
            lo[1] = lo[1].min(v[va]);
            hi[1] = hi[1].max(v[va]);
        }
        let u0 = lo[0].floor().max(0.0) as usize;
        let u1 = hi[0].ceil().min((dims_uv[0] - 1) as f64) as usize;
        let v0 = lo[1].floor().max(0.0) as usize;
        let v1 = hi[1].ceil().min((dims_uv[1] - 1) as f64) as usize;
        for v in v0..=v1 {
            for u in u0..=u1 {
                if rows.contains_key(&(u, v)) {
                    buckets.entry((u, v)).or_default().push(fi);
                }
            }
        }
    }

    let mut row_keys: Vec<(usize, usize)> = rows.keys().copied().collect();
    row_keys.sort_unstable();
    for key in row_keys {
        let (u, v) = key;
        let ray_u = template.origin[ua] + (u as f64 + 3.1e-4) * template.spacing[ua];
        let ray_v = template.origin[va] + (v as f64 + 4.7e-4) * template.spacing[va];
        let mut ts: Vec<f64> = Vec::new();
        if let Some(faces) = buckets.get(&key) {
            for &fi in faces {
                let f = mesh.faces[fi];
                if let Some(t) = ray_axis_triangle(
                    mesh.vertices[f[0] as usize],
                    mesh.vertices[f[1] as usize],
                    mesh.vertices[f[2] as usize],
                    ray_axis,
                    ua,
                    va,
                    ray_u,
                    ray_v,
                ) {
                    ts.push(t);
                }
            }
        }
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &i in &rows[&key] {
            let center = template.origin[ray_axis] + i as f64 * template.spacing[ray_axis];
            let below = ts.partition_point(|&t| t < center);
            let mut c = [0usize; 3];
            c[ray_axis] = i;
            c[ua] = u;
            c[va] = v;
            if below % 2 == 1 {
                out[idx_of(c)] = true;
            }
        }
    }
}

/// Intersection coordinate of an axis-aligned line with a triangle, if any.
/// The line runs along `ray_axis` through (u, v) in the other two axes.
#[allow(clippy::too_many_arguments)]
fn ray_axis_triangle(
    a: [f64; 3],
    b: [f64; 3],
    c: [f64; 3],
    ray_axis: usize,
    ua: usize,
    va: usize,
    u: f64,
    v: f64,
) -> Option<f64> {
    // 2D barycentric coordinates in the (ua,va) projection
    let d = (b[ua] - a[ua]) * (c[va] - a[va]) - (b[va] - a[va]) * (c[ua] - a[ua]);
    if d.abs() < 1e-30 {
        return None; // triangle parallel to the ray
    }
    let bu = ((u - a[ua]) * (c[va] - a[va]) - (v - a[va]) * (c[ua] - a[ua])) / d;
    let bv = ((b[ua] - a[ua]) * (v - a[va]) - (b[va] - a[va]) * (u - a[ua])) / d;
    if bu < 0.0 || bv < 0.0 || bu + bv > 1.0 {
        return None;
    }
    Some(a[ray_axis] + bu * (b[ray_axis] - a[ray_axis]) + bv * (c[ray_axis] - a[ray_axis]))
}

/// Majority-vote parity query for a single point against the whole mesh.
fn point_in_mesh(mesh: &TriangleMesh, p: [f64; 3]) -> bool {
    let mut votes = 0;
    for ray_axis in 0..3 {
        let (ua, va) = match ray_axis {
            0 => (1usize, 2usize),
            1 => (2, 0),
            _ => (0, 1),
        };
        let u = p[ua] + 1.3e-7;
        let v = p[va] + 2.9e-7;
        let mut crossings = 0usize;
        for f in &mesh.faces {
            if let Some(t) = ray_axis_triangle(
                mesh.vertices[f[0] as usize],
                mesh.vertices[f[1] as usize],
                mesh.vertices[f[2] as usize],
                ray_axis,
                ua,
                va,
                u,
                v,
            ) {
                if t < p[ray_axis] {
                    crossings += 1;
                }
            }
        }
        votes += (crossings % 2 == 1) as u32;
    }
    votes >= 2
}
