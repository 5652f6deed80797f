//! Plane clipping of closed meshes with optional cap fans over the cut loops.

use crate::error::{Error, Result};
use crate::surface::TriangleMesh;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Oriented cutting plane; the side the normal points to is removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipPlane {
    pub point: [f64; 3],
    pub normal: [f64; 3],
}

impl ClipPlane {
    /// Requires a unit normal (within 1e-9).
    pub fn new(point: [f64; 3], normal: [f64; 3]) -> Result<Self> {
        let len = (normal[0] * normal[0] + normal[1] * normal[1] + normal[2] * normal[2]).sqrt();
        if (len - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "clip plane normal must be unit length, |n| = {len}"
            )));
        }
        Ok(Self { point, normal })
    }

    /// Normalizes the given direction.
    pub fn new_normalized(point: [f64; 3], direction: [f64; 3]) -> Result<Self> {
        let len = (direction[0] * direction[0]
            + direction[1] * direction[1]
            + direction[2] * direction[2])
            .sqrt();
        if len < 1e-12 {
            return Err(Error::Config("clip plane direction must be nonzero".into()));
        }
        Self::new(
            point,
            [direction[0] / len, direction[1] / len, direction[2] / len],
        )
    }

    #[inline]
    pub fn signed_distance(&self, p: [f64; 3]) -> f64 {
        (p[0] - self.point[0]) * self.normal[0]
            + (p[1] - self.point[1]) * self.normal[1]
            + (p[2] - self.point[2]) * self.normal[2]
    }

    /// The plane as seen after mirroring space across x = plane_x.
    pub fn mirrored_x(&self, plane_x: f64) -> ClipPlane {
        ClipPlane {
            point: [2.0 * plane_x - self.point[0], self.point[1], self.point[2]],
            normal: [-self.normal[0], self.normal[1], self.normal[2]],
        }
    }
}

const PLANE_EPS: f64 = 1e-9;

/// Remove everything strictly on the positive side of the plane. Crossing
/// triangles are split at the plane; with `cap` the cut loops are closed by
/// centroid fans so a closed input stays closed.
pub fn clip(mesh: &TriangleMesh, plane: &ClipPlane, cap: bool) -> Result<TriangleMesh> {
    let dist: Vec<f64> = mesh
        .vertices
        .iter()
        .map(|&v| plane.signed_distance(v))
        .collect();
    if dist.iter().all(|&d| d <= PLANE_EPS) {
        return Ok(mesh.clone());
    }
    if dist.iter().all(|&d| d > PLANE_EPS) {
        return Err(Error::EmptyClip);
    }

    let mut vertices = mesh.vertices.clone();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    // welded intersection vertex per crossed mesh edge
    let mut cut: HashMap<(u32, u32), u32> = HashMap::new();

    let kept = |d: f64| d <= PLANE_EPS;
    let on_plane = |d: f64| d.abs() <= PLANE_EPS;

    for f in &mesh.faces {
        let ds = [
            dist[f[0] as usize],
            dist[f[1] as usize],
            dist[f[2] as usize],
        ];
        if ds.iter().all(|&d| kept(d)) {
            faces.push(*f);
            continue;
        }
        if ds.iter().all(|&d| !kept(d)) {
            continue;
        }
        // Sutherland-Hodgman against the half space
        let mut poly: Vec<u32> = Vec::with_capacity(4);
        for k in 0..3 {
            let (pa, pb) = (f[k], f[(k + 1) % 3]);
            let (da, db) = (ds[k], ds[(k + 1) % 3]);
            let mut crossing = |a: u32, b: u32, da: f64, db: f64, vs: &mut Vec<[f64; 3]>| -> u32 {
                // reuse an endpoint sitting on the plane
                if on_plane(da) {
                    return a;
                }
                if on_plane(db) {
                    return b;
                }
                let key = (a.min(b), a.max(b));
                *cut.entry(key).or_insert_with(|| {
                    let (lo, hi) = (key.0 as usize, key.1 as usize);
                    let (dl, dh) = (dist[lo], dist[hi]);
                    let t = dl / (dl - dh);
                    let va = vs[lo];
                    let vb = vs[hi];
                    vs.push([
                        va[0] + t * (vb[0] - va[0]),
                        va[1] + t * (vb[1] - va[1]),
                        va[2] + t * (vb[2] - va[2]),
                    ]);
                    (vs.len() - 1) as u32
                })
            };
            if kept(db) {
                if !kept(da) {
                    poly.push(crossing(pa, pb, da, db, &mut vertices));
                }
                poly.push(pb);
            } else if kept(da) {
                poly.push(crossing(pa, pb, da, db, &mut vertices));
            }
        }
        poly.dedup();
        if poly.len() > 1 && poly[0] == *poly.last().unwrap() {
            poly.pop();
        }
        for k in 1..poly.len().saturating_sub(1) {
            let tri = [poly[0], poly[k], poly[k + 1]];
            if tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2] {
                faces.push(tri);
            }
        }
    }

    if faces.is_empty() {
        return Err(Error::EmptyClip);
    }

    if cap {
        // boundary edges: directed edges whose reverse never occurs
        let mut directed: HashMap<(u32, u32), u32> = HashMap::new();
        for f in &faces {
            for k in 0..3 {
                *directed.entry((f[k], f[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        let mut boundary: Vec<(u32, u32)> = directed
            .iter()
            .filter(|&(&(a, b), &n)| n > directed.get(&(b, a)).copied().unwrap_or(0))
            .map(|(&e, _)| e)
            .collect();
        boundary.sort_unstable();

        // group boundary edges into loops to get one centroid per loop
        let mut next: HashMap<u32, u32> = HashMap::new();
        for &(a, b) in &boundary {
            next.insert(a, b);
        }
        let mut loop_of: HashMap<u32, usize> = HashMap::new();
        let mut centroids: Vec<[f64; 3]> = Vec::new();
        for &(start, _) in &boundary {
            if loop_of.contains_key(&start) {
                continue;
            }
            let mut members = vec![start];
            let mut cur = next[&start];
            while cur != start {
                members.push(cur);
                match next.get(&cur) {
                    Some(&n) => cur = n,
                    None => break, // open chain from a snap degeneracy
                }
            }
            let mut c = [0.0; 3];
            for &m in &members {
                let v = vertices[m as usize];
                c = [c[0] + v[0], c[1] + v[1], c[2] + v[2]];
            }
            let inv = 1.0 / members.len() as f64;
            let loop_id = centroids.len();
            centroids.push([c[0] * inv, c[1] * inv, c[2] * inv]);
            for m in members {
                loop_of.insert(m, loop_id);
            }
        }
        let centroid_vertex: Vec<u32> = centroids
            .iter()
            .map(|&c| {
                vertices.push(c);
                (vertices.len() - 1) as u32
            })
            .collect();
        for &(a, b) in &boundary {
            let cv = centroid_vertex[loop_of[&a]];
            if a != b {
                faces.push([b, a, cv]);
            }
        }
    }

    // drop vertices that are no longer referenced
    let mut remap = vec![u32::MAX; vertices.len()];
    let mut out_vertices = Vec::new();
    let mut out_faces = Vec::with_capacity(faces.len());
    for f in &faces {
        let mut nf = [0u32; 3];
        for (k, &vi) in f.iter().enumerate() {
            if remap[vi as usize] == u32::MAX {
                remap[vi as usize] = out_vertices.len() as u32;
                out_vertices.push(vertices[vi as usize]);
            }
            nf[k] = remap[vi as usize];
        }
        out_faces.push(nf);
    }
    Ok(TriangleMesh {
        vertices: out_vertices,
        faces: out_faces,
    })
}
