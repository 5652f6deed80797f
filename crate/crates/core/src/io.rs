//! File formats: raw voxel grids with a JSON sidecar, binary and ASCII STL,
//! and a minimal OBJ writer.
//!
//! Raw-grid convention: for a stem `foo`, the sidecar lives at `foo.json`
//! and the sample buffer at `foo.raw`, x-fastest, little-endian. The f32
//! round trip is bit-exact.

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, GridGeometry, VoxelGrid};
use crate::surface::TriangleMesh;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RawDtype {
    U8,
    F32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawSidecar {
    dims: [usize; 3],
    spacing_mm: [f64; 3],
    origin_mm: [f64; 3],
    dtype: RawDtype,
    byte_order: String,
}

/// Grid file content before interpretation.
#[derive(Debug, Clone)]
pub enum RawGrid {
    F32(VoxelGrid),
    U8 { geom: GridGeometry, values: Vec<u8> },
}

impl RawGrid {
    /// Scalar view; u8 samples are cast.
    pub fn into_grid(self) -> VoxelGrid {
        match self {
            RawGrid::F32(g) => g,
            RawGrid::U8 { geom, values } => VoxelGrid {
                geom,
                values: values.into_iter().map(|v| v as f32).collect(),
            },
        }
    }

    /// Mask view; nonzero means true.
    pub fn into_mask(self) -> BinaryMask {
        match self {
            RawGrid::F32(g) => BinaryMask {
                geom: g.geom,
                values: g.values.into_iter().map(|v| v != 0.0).collect(),
            },
            RawGrid::U8 { geom, values } => BinaryMask {
                geom,
                values: values.into_iter().map(|v| v != 0).collect(),
            },
        }
    }
}

fn stem_paths(path: &Path) -> (PathBuf, PathBuf) {
    let stem = if path.extension().is_some_and(|e| e == "json" || e == "raw") {
        path.with_extension("")
    } else {
        path.to_path_buf()
    };
    (stem.with_extension("json"), stem.with_extension("raw"))
}

/// Write an f32 grid as sidecar + raw pair; `path` may be the stem or either
/// file of the pair.
pub fn write_raw_f32(path: &Path, grid: &VoxelGrid) -> Result<()> {
    let (json_path, raw_path) = stem_paths(path);
    let sidecar = RawSidecar {
        dims: grid.geom.dims,
        spacing_mm: grid.geom.spacing,
        origin_mm: grid.geom.origin,
        dtype: RawDtype::F32,
        byte_order: "little".into(),
    };
    fs::write(&json_path, serde_json::to_string_pretty(&sidecar).unwrap())?;
    let mut w = BufWriter::new(fs::File::create(&raw_path)?);
    for v in &grid.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Write a mask as a u8 (0/1) sidecar + raw pair.
pub fn write_raw_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    let (json_path, raw_path) = stem_paths(path);
    let sidecar = RawSidecar {
        dims: mask.geom.dims,
        spacing_mm: mask.geom.spacing,
        origin_mm: mask.geom.origin,
        dtype: RawDtype::U8,
        byte_order: "little".into(),
    };
    fs::write(&json_path, serde_json::to_string_pretty(&sidecar).unwrap())?;
    let bytes: Vec<u8> = mask.values.iter().map(|&v| v as u8).collect();
    fs::write(&raw_path, bytes)?;
    Ok(())
}

/// Read a sidecar + raw pair.
pub fn read_raw_grid(path: &Path) -> Result<RawGrid> {
    let (json_path, raw_path) = stem_paths(path);
    let sidecar: RawSidecar = serde_json::from_str(&fs::read_to_string(&json_path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", json_path.display())))?;
    if sidecar.byte_order != "little" {
        return Err(Error::Format(format!(
            "unsupported byte order {:?}",
            sidecar.byte_order
        )));
    }
    let geom = GridGeometry::new(sidecar.dims, sidecar.spacing_mm, sidecar.origin_mm)?;
    let n = geom.voxel_count();
    let bytes = fs::read(&raw_path)?;
    match sidecar.dtype {
        RawDtype::U8 => {
            if bytes.len() != n {
                return Err(Error::Format(format!(
                    "{}: expected {n} bytes, found {}",
                    raw_path.display(),
                    bytes.len()
                )));
            }
            Ok(RawGrid::U8 {
                geom,
                values: bytes,
            })
        }
        RawDtype::F32 => {
            if bytes.len() != 4 * n {
                return Err(Error::Format(format!(
                    "{}: expected {} bytes, found {}",
                    raw_path.display(),
                    4 * n,
                    bytes.len()
                )));
            }
            let values = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            Ok(RawGrid::F32(VoxelGrid { geom, values }))
        }
    }
}

fn face_normal(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> [f32; 3] {
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let n = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if len > 0.0 {
        [
            (n[0] / len) as f32,
            (n[1] / len) as f32,
            (n[2] / len) as f32,
        ]
    } else {
        [0.0, 0.0, 0.0]
    }
}

/// Binary STL: 80-byte header, u32 facet count, 50-byte facets,
/// little-endian.
pub fn write_stl_binary(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let mut header = [0u8; 80];
    header[..6].copy_from_slice(b"negvol");
    w.write_all(&header)?;
    w.write_all(&(mesh.faces.len() as u32).to_le_bytes())?;
    for f in &mesh.faces {
        let a = mesh.vertices[f[0] as usize];
        let b = mesh.vertices[f[1] as usize];
        let c = mesh.vertices[f[2] as usize];
        for x in face_normal(a, b, c) {
            w.write_all(&x.to_le_bytes())?;
        }
        for v in [a, b, c] {
            for x in v {
                w.write_all(&(x as f32).to_le_bytes())?;
            }
        }
        w.write_all(&0u16.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_stl_ascii(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "solid negvol")?;
    for f in &mesh.faces {
        let a = mesh.vertices[f[0] as usize];
        let b = mesh.vertices[f[1] as usize];
        let c = mesh.vertices[f[2] as usize];
        let n = face_normal(a, b, c);
        writeln!(w, "  facet normal {:e} {:e} {:e}", n[0], n[1], n[2])?;
        writeln!(w, "    outer loop")?;
        for v in [a, b, c] {
            writeln!(
                w,
                "      vertex {:e} {:e} {:e}",
                v[0] as f32, v[1] as f32, v[2] as f32
            )?;
        }
        writeln!(w, "    endloop")?;
        writeln!(w, "  endfacet")?;
    }
    writeln!(w, "endsolid negvol")?;
    w.flush()?;
    Ok(())
}

/// Read binary or ASCII STL (auto-detected); coincident vertices are welded
/// by exact bit equality so meshes written by this crate read back closed.
pub fn read_stl(path: &Path) -> Result<TriangleMesh> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if looks_ascii(&bytes) {
        parse_stl_ascii(std::str::from_utf8(&bytes).map_err(|_| {
            Error::Format(format!("{}: invalid UTF-8 in ascii stl", path.display()))
        })?)
    } else {
        parse_stl_binary(&bytes, path)
    }
}

fn looks_ascii(bytes: &[u8]) -> bool {
    if !bytes.starts_with(b"solid") {
        return false;
    }
    let probe = &bytes[..bytes.len().min(1024)];
    match std::str::from_utf8(probe) {
        Ok(s) => s.contains("facet"),
        Err(_) => false,
    }
}

struct Welder {
    vertices: Vec<[f64; 3]>,
    seen: HashMap<[u32; 3], u32>,
}

impl Welder {
    fn new() -> Self {
        Self {
            vertices: Vec::new(),
            seen: HashMap::new(),
        }
    }

    fn add(&mut self, p: [f32; 3]) -> u32 {
        let key = [p[0].to_bits(), p[1].to_bits(), p[2].to_bits()];
        *self.seen.entry(key).or_insert_with(|| {
            self.vertices.push([p[0] as f64, p[1] as f64, p[2] as f64]);
            (self.vertices.len() - 1) as u32
        })
    }
}

fn parse_stl_binary(bytes: &[u8], path: &Path) -> Result<TriangleMesh> {
    if bytes.len() < 84 {
        return Err(Error::Format(format!(
            "{}: truncated binary stl",
            path.display()
        )));
    }
    let count = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    if bytes.len() < 84 + count * 50 {
        return Err(Error::Format(format!(
            "{}: binary stl claims {count} facets but the file is too short",
            path.display()
        )));
    }
    let mut welder = Welder::new();
    let mut faces = Vec::with_capacity(count);
    for i in 0..count {
        let base = 84 + i * 50 + 12; // skip the stored normal
        let mut ids = [0u32; 3];
        for (k, id) in ids.iter_mut().enumerate() {
            let o = base + k * 12;
            let p = [
                f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]),
                f32::from_le_bytes([bytes[o + 4], bytes[o + 5], bytes[o + 6], bytes[o + 7]]),
                f32::from_le_bytes([bytes[o + 8], bytes[o + 9], bytes[o + 10], bytes[o + 11]]),
            ];
            *id = welder.add(p);
        }
        if ids[0] != ids[1] && ids[1] != ids[2] && ids[0] != ids[2] {
            faces.push(ids);
        }
    }
    Ok(TriangleMesh {
        vertices: welder.vertices,
        faces,
    })
}

fn parse_stl_ascii(text: &str) -> Result<TriangleMesh> {
    let mut welder = Welder::new();
    let mut faces = Vec::new();
    let mut current: Vec<u32> = Vec::with_capacity(3);
    for line in text.lines() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("vertex") {
            let mut coords = [0f32; 3];
            let mut it = rest.split_whitespace();
            for c in &mut coords {
                *c = it
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| Error::Format("malformed vertex line in ascii stl".into()))?;
            }
            current.push(welder.add(coords));
        } else if line.starts_with("endfacet") {
            if current.len() != 3 {
                return Err(Error::Format(format!(
                    "ascii stl facet with {} vertices",
                    current.len()
                )));
            }
            let ids = [current[0], current[1], current[2]];
            if ids[0] != ids[1] && ids[1] != ids[2] && ids[0] != ids[2] {
                faces.push(ids);
            }
            current.clear();
        }
    }
    if faces.is_empty() {
        return Err(Error::Format("ascii stl contains no facets".into()));
    }
    Ok(TriangleMesh {
        vertices: welder.vertices,
        faces,
    })
}

/// Vertices + faces OBJ for visual inspection.
pub fn write_obj(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
    }
    for f in &mesh.faces {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::icosphere;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn raw_f32_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let geom = GridGeometry::new([7, 5, 3], [0.4, 0.5, 0.6], [1.0, -2.0, 3.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let values: Vec<f32> = (0..geom.voxel_count())
            .map(|_| rng.gen::<f32>() * 100.0 - 50.0)
            .collect();
        let g = VoxelGrid::new(geom, values).unwrap();
        let stem = dir.path().join("grid");
        write_raw_f32(&stem, &g).unwrap();
        let back = read_raw_grid(&stem.with_extension("json"))
            .unwrap()
            .into_grid();
        assert_eq!(back.geom, g.geom);
        for (a, b) in back.values.iter().zip(&g.values) {
            assert_eq!(a.to_bits(), b.to_bits(), "round trip must be bit-exact");
        }
    }

    #[test]
    fn raw_mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let geom = GridGeometry::new([6, 6, 6], [1.0; 3], [0.0; 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let values: Vec<bool> = (0..geom.voxel_count()).map(|_| rng.gen_bool(0.3)).collect();
        let m = BinaryMask::new(geom, values).unwrap();
        let stem = dir.path().join("mask");
        write_raw_mask(&stem, &m).unwrap();
        let back = read_raw_grid(&stem).unwrap().into_mask();
        assert_eq!(back, m);
    }

    #[test]
    fn wrong_payload_size_is_a_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let geom = GridGeometry::new([4, 4, 4], [1.0; 3], [0.0; 3]).unwrap();
        let g = VoxelGrid::zeros(geom);
        let stem = dir.path().join("grid");
        write_raw_f32(&stem, &g).unwrap();
        fs::write(stem.with_extension("raw"), [0u8; 10]).unwrap();
        assert!(matches!(read_raw_grid(&stem), Err(Error::Format(_))));
    }

    #[test]
    fn stl_binary_round_trip_preserves_topology() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = icosphere(3.0, 2);
        let path = dir.path().join("sphere.stl");
        write_stl_binary(&path, &mesh).unwrap();
        let back = read_stl(&path).unwrap();
        assert_eq!(back.faces.len(), mesh.faces.len());
        assert_eq!(back.vertices.len(), mesh.vertices.len());
        assert!(back.is_closed(), "welded stl must stay closed");
        let va = mesh.enclosed_volume().unwrap();
        let vb = back.enclosed_volume().unwrap();
        assert!((va - vb).abs() / va < 1e-6);
    }

    #[test]
    fn stl_ascii_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = icosphere(2.0, 1);
        let path = dir.path().join("sphere_ascii.stl");
        write_stl_ascii(&path, &mesh).unwrap();
        let back = read_stl(&path).unwrap();
        assert_eq!(back.faces.len(), mesh.faces.len());
        assert!(back.is_closed());
    }

    #[test]
    fn binary_stl_starting_with_solid_is_not_misdetected() {
        // a binary file whose header happens to begin with "solid"
        let dir = tempfile::tempdir().unwrap();
        let mesh = icosphere(1.0, 0);
        let path = dir.path().join("tricky.stl");
        write_stl_binary(&path, &mesh).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[..5].copy_from_slice(b"solid");
        fs::write(&path, &bytes).unwrap();
        let back = read_stl(&path).unwrap();
        assert_eq!(back.faces.len(), mesh.faces.len());
    }

    #[test]
    fn obj_writer_emits_one_based_faces() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = TriangleMesh::new(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        );
        let path = dir.path().join("tri.obj");
        write_obj(&path, &mesh).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("f 1 2 3"));
        assert_eq!(text.lines().filter(|l| l.starts_with('v')).count(), 3);
    }
}
