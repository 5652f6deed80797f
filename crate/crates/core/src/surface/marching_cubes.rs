//! Marching-cubes isosurface extraction over binary masks.
//!
//! The 256-entry case table is generated from the cell combinatorics rather
//! than transcribed: for each sign configuration, surface polygons are built
//! by linking face chords between edge crossings. On an ambiguous face (two
//! diagonal corners inside) the chords join the inside corners, which is a
//! function of the face values only, so the two cells sharing any face agree
//! on its chords and the output is watertight for every input.

use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::grid::{gaussian_smooth, BinaryMask, VoxelGrid};
use once_cell::sync::Lazy;
use std::collections::HashMap;

/// Cube corner offsets, standard numbering.
const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [1, 1, 0],
    [0, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [1, 1, 1],
    [0, 1, 1],
];

/// Cube edges as corner pairs, standard numbering.
const EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

/// Cube faces as corner cycles, counter-clockwise seen from outside the cell.
const FACES: [[usize; 4]; 6] = [
    [0, 3, 2, 1], // z = 0
    [4, 5, 6, 7], // z = 1
    [0, 1, 5, 4], // y = 0
    [3, 7, 6, 2], // y = 1
    [0, 4, 7, 3], // x = 0
    [1, 2, 6, 5], // x = 1
];

fn edge_id(a: usize, b: usize) -> usize {
    EDGES
        .iter()
        .position(|e| (e[0] == a && e[1] == b) || (e[0] == b && e[1] == a))
        .expect("corner pair is a cube edge")
}

/// Two cube edges lying on a common cube face. Mesh vertices on such edges
/// can both belong to a neighboring cell, so interior triangulation edges
/// must never connect them (the neighbor might emit the same segment).
fn co_facial(a: usize, b: usize) -> bool {
    FACES.iter().any(|f| {
        let has = |c: usize| f.contains(&c);
        let [a0, a1] = EDGES[a];
        let [b0, b1] = EDGES[b];
        has(a0) && has(a1) && has(b0) && has(b1)
    })
}

/// In a triangulation recipe this polygon index stands for the polygon
/// centroid, a vertex private to the emitting cell.
const CENTROID: u8 = 255;

/// One surface polygon of a cell configuration: an oriented cycle of edge
/// ids plus a triangulation given as indices into that cycle.
type CasePolygon = (Vec<u8>, Vec<[u8; 3]>);

/// Surface polygons for all 256 sign configurations.
fn build_case_table() -> Vec<Vec<CasePolygon>> {
    let mut table = Vec::with_capacity(256);
    for config in 0u32..256 {
        let inside = |c: usize| config & (1 << c) != 0;
        // successor[e] = crossing that follows crossing e along the surface
        let mut successor = [usize::MAX; 12];
        for face in &FACES {
            // crossings around the face cycle: (edge id, is_leave)
            let mut crossings = Vec::with_capacity(4);
            for k in 0..4 {
                let a = face[k];
                let b = face[(k + 1) % 4];
                if inside(a) != inside(b) {
                    crossings.push((edge_id(a, b), inside(a)));
                }
            }
            // pair every leave with the next enter going around the cycle;
            // on an ambiguous face this joins the inside corners, a rule
            // both cells sharing the face apply identically
            let m = crossings.len();
            for (i, &(e, is_leave)) in crossings.iter().enumerate() {
                if !is_leave {
                    continue;
                }
                let mut j = (i + 1) % m;
                while crossings[j].1 {
                    j = (j + 1) % m;
                }
                successor[e] = crossings[j].0;
            }
        }

        // follow successors into closed polygons
        let mut polygons: Vec<CasePolygon> = Vec::new();
        let mut visited = [false; 12];
        for start in 0..12 {
            if successor[start] == usize::MAX || visited[start] {
                continue;
            }
            let mut cycle = vec![start];
            visited[start] = true;
            let mut cur = successor[start];
            while cur != start {
                visited[cur] = true;
                cycle.push(cur);
                cur = successor[cur];
            }
            // chord direction makes the loop wind inward; reverse it so the
            // triangles come out with outward normals
            cycle.reverse();
            let tris = triangulate_cycle(&cycle);
            polygons.push((cycle.iter().map(|&e| e as u8).collect(), tris));
        }
        table.push(polygons);
    }
    table
}

/// Triangles as indices into the cycle. Interior diagonals must not connect
/// co-facial vertices; pentagons and larger use the cell-private centroid.
fn triangulate_cycle(cycle: &[usize]) -> Vec<[u8; 3]> {
    match cycle.len() {
        3 => vec![[0, 1, 2]],
        4 => {
            if !co_facial(cycle[0], cycle[2]) {
                vec![[0, 1, 2], [0, 2, 3]]
            } else if !co_facial(cycle[1], cycle[3]) {
                vec![[1, 2, 3], [1, 3, 0]]
            } else {
                centroid_fan(4)
            }
        }
        n => centroid_fan(n),
    }
}

fn centroid_fan(n: usize) -> Vec<[u8; 3]> {
    (0..n)
        .map(|i| [CENTROID, i as u8, ((i + 1) % n) as u8])
        .collect()
}

static CASE_TABLE: Lazy<Vec<Vec<CasePolygon>>> = Lazy::new(build_case_table);

#[derive(Debug, Clone, Copy)]
pub struct SurfaceOptions {
    /// Iso level in (0,1); 0.5 puts the surface halfway between voxel centers.
    pub iso: f64,
    /// Optional Gaussian pre-smoothing of the 0/1 field, sigma in voxels.
    /// Rounds off the staircase; small blobs can fall below the iso level.
    pub smooth_sigma_voxels: Option<f64>,
}

impl Default for SurfaceOptions {
    fn default() -> Self {
        Self {
            iso: 0.5,
            smooth_sigma_voxels: None,
        }
    }
}

/// Marching-cubes surface of a mask at the given iso level, in millimeters.
/// The output is closed and outward-oriented.
pub fn extract_surface(m: &BinaryMask, iso: f64) -> Result<TriangleMesh> {
    extract_surface_opts(
        m,
        &SurfaceOptions {
            iso,
            smooth_sigma_voxels: None,
        },
    )
}

pub fn extract_surface_opts(m: &BinaryMask, opts: &SurfaceOptions) -> Result<TriangleMesh> {
    if m.is_empty() {
        return Err(Error::EmptySurface(
            "cannot extract a surface from an empty mask".into(),
        ));
    }
    if !(opts.iso > 0.0 && opts.iso < 1.0) {
        return Err(Error::Config(format!(
            "iso level must be in (0,1), got {}",
            opts.iso
        )));
    }
    let field = match opts.smooth_sigma_voxels {
        Some(s) if s > 0.0 => gaussian_smooth(&m.to_grid(), [s, s, s]),
        _ => m.to_grid(),
    };
    let mesh = isosurface(&field, opts.iso);
    if mesh.faces.is_empty() {
        return Err(Error::EmptySurface(
            "no surface at the requested iso level (mask too small after smoothing?)".into(),
        ));
    }
    Ok(mesh)
}

/// March over the field padded with one layer of zeros so surfaces close at
/// the grid border. Grid values above `iso` are inside.
fn isosurface(field: &VoxelGrid, iso: f64) -> TriangleMesh {
    let [nx, ny, nz] = field.geom.dims;
    let (px, py, pz) = (nx + 2, ny + 2, nz + 2);
    let mut padded = vec![0.0f32; px * py * pz];
    for z in 0..nz {
        for y in 0..ny {
            let src = field.geom.index(0, y, z);
            let dst = 1 + px * ((y + 1) + py * (z + 1));
            padded[dst..dst + nx].copy_from_slice(&field.values[src..src + nx]);
        }
    }

    let value = |x: usize, y: usize, z: usize| padded[x + px * (y + py * z)] as f64;

    // world coordinate of padded voxel center
    let world = |x: f64, y: f64, z: f64| {
        [
            field.geom.origin[0] + (x - 1.0) * field.geom.spacing[0],
            field.geom.origin[1] + (y - 1.0) * field.geom.spacing[1],
            field.geom.origin[2] + (z - 1.0) * field.geom.spacing[2],
        ]
    };

    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    // shared vertex per crossed grid edge: key = (base voxel, axis)
    let mut edge_vertex: HashMap<(usize, usize, usize, u8), u32> = HashMap::new();

    for z in 0..pz - 1 {
        for y in 0..py - 1 {
            for x in 0..px - 1 {
                let mut config = 0u32;
                for (i, c) in CORNERS.iter().enumerate() {
                    if value(x + c[0], y + c[1], z + c[2]) > iso {
                        config |= 1 << i;
                    }
                }
                if config == 0 || config == 255 {
                    continue;
                }
                for (cycle, tris) in &CASE_TABLE[config as usize] {
                    // shared vertex on every crossed grid edge of the cycle
                    let ids: Vec<u32> = cycle
                        .iter()
                        .map(|&e| {
                            let [a, b] = EDGES[e as usize];
                            let ca = CORNERS[a];
                            let cb = CORNERS[b];
                            let base = (
                                x + ca[0].min(cb[0]),
                                y + ca[1].min(cb[1]),
                                z + ca[2].min(cb[2]),
                            );
                            let axis = if ca[0] != cb[0] {
                                0u8
                            } else if ca[1] != cb[1] {
                                1
                            } else {
                                2
                            };
                            let key = (base.0, base.1, base.2, axis);
                            *edge_vertex.entry(key).or_insert_with(|| {
                                let va = value(x + ca[0], y + ca[1], z + ca[2]);
                                let vb = value(x + cb[0], y + cb[1], z + cb[2]);
                                let t = ((iso - va) / (vb - va)).clamp(0.0, 1.0);
                                let pa =
                                    [(x + ca[0]) as f64, (y + ca[1]) as f64, (z + ca[2]) as f64];
                                let pb =
                                    [(x + cb[0]) as f64, (y + cb[1]) as f64, (z + cb[2]) as f64];
                                let p = world(
                                    pa[0] + t * (pb[0] - pa[0]),
                                    pa[1] + t * (pb[1] - pa[1]),
                                    pa[2] + t * (pb[2] - pa[2]),
                                );
                                vertices.push(p);
                                (vertices.len() - 1) as u32
                            })
                        })
                        .collect();
                    let centroid_id = if tris.iter().any(|t| t.contains(&CENTROID)) {
                        let mut c = [0.0; 3];
                        for &vi in &ids {
                            let p = vertices[vi as usize];
                            c = [c[0] + p[0], c[1] + p[1], c[2] + p[2]];
                        }
                        let inv = 1.0 / ids.len() as f64;
                        vertices.push([c[0] * inv, c[1] * inv, c[2] * inv]);
                        (vertices.len() - 1) as u32
                    } else {
                        u32::MAX
                    };
                    for t in tris {
                        let fetch = |p: u8| {
                            if p == CENTROID {
                                centroid_id
                            } else {
                                ids[p as usize]
                            }
                        };
                        faces.push([fetch(t[0]), fetch(t[1]), fetch(t[2])]);
                    }
                }
            }
        }
    }
    TriangleMesh { vertices, faces }
}
