//! Indexed triangle surfaces and the voxel<->mesh bridge: isosurface
//! extraction, solid voxelization, normals, smoothing, areas/volumes and
//! area-uniform point sampling. Coordinates are millimeters; faces wind
//! counter-clockwise seen from outside, so normals point outward.

mod marching_cubes;
mod shapes;
mod voxelize;

pub use marching_cubes::{extract_surface, extract_surface_opts, SurfaceOptions};
pub use shapes::{box_mesh, icosphere};
pub use voxelize::{voxelize, voxelize_opts, VoxelizeMode};

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[u32; 3]>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<[f64; 3]>,
}

#[inline]
pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub(crate) fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

impl TriangleMesh {
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[u32; 3]>) -> Self {
        Self { vertices, faces }
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Doubled area vector of a face (cross product of its edge vectors).
    fn face_cross(&self, f: [u32; 3]) -> [f64; 3] {
        let a = self.vertices[f[0] as usize];
        let b = self.vertices[f[1] as usize];
        let c = self.vertices[f[2] as usize];
        cross(sub(b, a), sub(c, a))
    }

    /// Index sanity and degenerate-face validation (area below 1e-12 mm^2).
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len() as u32;
        for (i, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) {
                return Err(Error::Format(format!(
                    "face {i} references vertex out of range"
                )));
            }
            if 0.5 * norm(self.face_cross(*f)) < 1e-12 {
                return Err(Error::Format(format!("face {i} is degenerate (zero area)")));
            }
        }
        Ok(())
    }

    /// True when every edge is shared by exactly two faces with opposite
    /// orientation (closed, consistently oriented surface).
    pub fn is_closed(&self) -> bool {
        if self.faces.is_empty() {
            return false;
        }
        let mut edges: HashMap<(u32, u32), (u32, i32)> = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                if a == b {
                    return false;
                }
                let key = (a.min(b), a.max(b));
                let ent = edges.entry(key).or_insert((0, 0));
                ent.0 += 1;
                ent.1 += if a < b { 1 } else { -1 };
            }
        }
        edges
            .values()
            .all(|&(count, orient)| count == 2 && orient == 0)
    }

    /// Sum of triangle areas in mm^2.
    pub fn surface_area(&self) -> f64 {
        self.faces
            .iter()
            .map(|&f| 0.5 * norm(self.face_cross(f)))
            .sum()
    }

    /// Signed volume through the divergence theorem; positive for outward
    /// orientation. Errors on open meshes.
    pub fn enclosed_volume(&self) -> Result<f64> {
        if !self.is_closed() {
            return Err(Error::OpenMesh(
                "enclosed_volume requires a closed, consistently oriented mesh".into(),
            ));
        }
        Ok(self.signed_volume())
    }

    /// Divergence-theorem volume without the watertightness check.
    pub(crate) fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let a = self.vertices[f[0] as usize];
                let b = self.vertices[f[1] as usize];
                let c = self.vertices[f[2] as usize];
                dot(a, cross(b, c)) / 6.0
            })
            .sum()
    }

    /// Area-weighted vertex centroid (centroids of faces weighted by area).
    pub fn area_centroid(&self) -> [f64; 3] {
        let mut acc = [0.0; 3];
        let mut total = 0.0;
        for &f in &self.faces {
            let area = 0.5 * norm(self.face_cross(f));
            let a = self.vertices[f[0] as usize];
            let b = self.vertices[f[1] as usize];
            let c = self.vertices[f[2] as usize];
            let centroid = scale(add(add(a, b), c), 1.0 / 3.0);
            acc = add(acc, scale(centroid, area));
            total += area;
        }
        if total > 0.0 {
            scale(acc, 1.0 / total)
        } else {
            acc
        }
    }

    pub fn translate(&mut self, t: [f64; 3]) {
        for v in &mut self.vertices {
            *v = add(*v, t);
        }
    }

    /// Reflect across the plane x = plane_x, flipping face winding so the
    /// mesh stays outward-oriented.
    pub fn reflect_x(&self, plane_x: f64) -> TriangleMesh {
        let vertices = self
            .vertices
            .iter()
            .map(|v| [2.0 * plane_x - v[0], v[1], v[2]])
            .collect();
        let faces = self.faces.iter().map(|f| [f[0], f[2], f[1]]).collect();
        TriangleMesh { vertices, faces }
    }

    /// Flip orientation of every face.
    pub fn flipped(&self) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.clone(),
            faces: self.faces.iter().map(|f| [f[0], f[2], f[1]]).collect(),
        }
    }

    /// Neighbor lists from the unique undirected edges.
    pub(crate) fn vertex_adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); self.vertices.len()];
        for f in &self.faces {
            for k in 0..3 {
                let a = f[k] as usize;
                let b = f[(k + 1) % 3];
                if !adj[a].contains(&b) {
                    adj[a].push(b);
                }
                let (a, b) = (b as usize, f[k]);
                if !adj[a].contains(&b) {
                    adj[a].push(b);
                }
            }
        }
        adj
    }
}

/// Area-weighted vertex normals, unit length. Errors on vertices with no
/// incident faces (their normal is undefined).
pub fn vertex_normals(mesh: &TriangleMesh) -> Result<Vec<[f64; 3]>> {
    let mut acc = vec![[0.0f64; 3]; mesh.vertices.len()];
    for f in &mesh.faces {
        let c = mesh.face_cross(*f); // area-weighted face normal (2*area)
        for &vi in f {
            acc[vi as usize] = add(acc[vi as usize], c);
        }
    }
    for (i, n) in acc.iter_mut().enumerate() {
        let len = norm(*n);
        if len < 1e-30 {
            return Err(Error::ZeroNormal(i));
        }
        *n = scale(*n, 1.0 / len);
    }
    Ok(acc)
}

/// Uniform Laplacian smoothing: each non-frozen vertex moves by
/// `lambda * (neighbor centroid - vertex)` per iteration. `frozen` is either
/// empty or one flag per vertex; connectivity is unchanged.
pub fn laplacian_smooth(
    mesh: &TriangleMesh,
    lambda: f64,
    iterations: usize,
    frozen: &[bool],
) -> TriangleMesh {
    if lambda == 0.0 || iterations == 0 {
        return mesh.clone();
    }
    let adj = mesh.vertex_adjacency();
    let mut vertices = mesh.vertices.clone();
    for _ in 0..iterations {
        let prev = vertices.clone();
        for (i, v) in vertices.iter_mut().enumerate() {
            if frozen.get(i).copied().unwrap_or(false) || adj[i].is_empty() {
                continue;
            }
            let mut c = [0.0; 3];
            for &n in &adj[i] {
                c = add(c, prev[n as usize]);
            }
            c = scale(c, 1.0 / adj[i].len() as f64);
            *v = add(prev[i], scale(sub(c, prev[i]), lambda));
        }
    }
    TriangleMesh {
        vertices,
        faces: mesh.faces.clone(),
    }
}

/// Area-uniform point sampling, deterministic for a given seed.
pub fn sample_points(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud> {
    if mesh.faces.is_empty() {
        return Err(Error::EmptySurface("cannot sample an empty mesh".into()));
    }
    if n == 0 {
        return Err(Error::Config("sample_points needs n >= 1".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for &f in &mesh.faces {
        total += 0.5 * norm(mesh.face_cross(f));
        cumulative.push(total);
    }
    if total <= 0.0 {
        return Err(Error::EmptySurface("mesh has zero total area".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let r = rng.gen_range(0.0..total);
        let fi = cumulative
            .partition_point(|&c| c <= r)
            .min(mesh.faces.len() - 1);
        let f = mesh.faces[fi];
        let a = mesh.vertices[f[0] as usize];
        let b = mesh.vertices[f[1] as usize];
        let c = mesh.vertices[f[2] as usize];
        let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
        let s = r1.sqrt();
        let p = add(
            add(scale(a, 1.0 - s), scale(b, s * (1.0 - r2))),
            scale(c, s * r2),
        );
        points.push(p);
    }
    Ok(PointCloud { points })
}
