//! Analytic test meshes: icospheres and axis-aligned boxes.

use super::{add, norm, scale, TriangleMesh};
use std::collections::HashMap;

/// Icosphere of the given radius centered at the origin, refined by repeated
/// midpoint subdivision with reprojection onto the sphere.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriangleMesh {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut vertices: Vec<[f64; 3]> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    for v in &mut vertices {
        *v = scale(*v, radius / norm(*v));
    }
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
        let mut new_faces = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mids = [0u32; 3];
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                mids[k] = *midpoint.entry(key).or_insert_with(|| {
                    let m = add(vertices[a as usize], vertices[b as usize]);
                    let m = scale(m, radius / norm(m));
                    vertices.push(m);
                    (vertices.len() - 1) as u32
                });
            }
            new_faces.push([f[0], mids[0], mids[2]]);
            new_faces.push([f[1], mids[1], mids[0]]);
            new_faces.push([f[2], mids[2], mids[1]]);
            new_faces.push([mids[0], mids[1], mids[2]]);
        }
        faces = new_faces;
    }
    TriangleMesh { vertices, faces }
}

/// Closed axis-aligned box, outward oriented.
pub fn box_mesh(center: [f64; 3], half_extents: [f64; 3]) -> TriangleMesh {
    let [cx, cy, cz] = center;
    let [hx, hy, hz] = half_extents;
    let vertices = vec![
        [cx - hx, cy - hy, cz - hz], // 0
        [cx + hx, cy - hy, cz - hz], // 1
        [cx + hx, cy + hy, cz - hz], // 2
        [cx - hx, cy + hy, cz - hz], // 3
        [cx - hx, cy - hy, cz + hz], // 4
        [cx + hx, cy - hy, cz + hz], // 5
        [cx + hx, cy + hy, cz + hz], // 6
        [cx - hx, cy + hy, cz + hz], // 7
    ];
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2], // bottom (-z)
        [4, 5, 6],
        [4, 6, 7], // top (+z)
        [0, 1, 5],
        [0, 5, 4], // -y
        [3, 7, 6],
        [3, 6, 2], // +y
        [0, 4, 7],
        [0, 7, 3], // -x
        [1, 2, 6],
        [1, 6, 5], // +x
    ];
    TriangleMesh { vertices, faces }
}
