//! Normal-direction mesh inflation confined by a signed distance field.
//!
//! Vertices march outward along the vertex normals until the tentative
//! position would come closer to the confining surface than the configured
//! clearance; such vertices freeze in place. Interleaved Laplacian passes
//! keep the shape smooth without pulling frozen vertices off the wall.

mod clip;
mod negative;

pub use clip::{clip, ClipPlane};
pub use negative::{negative_volume, nv_surface};

use crate::error::{Error, Result};
use crate::grid::VoxelGrid;
use crate::surface::{self, TriangleMesh};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InflationConfig {
    /// Outward displacement per iteration, millimeters.
    pub step_mm: f64,
    /// Stop gap to the confining surface, millimeters.
    pub clearance_mm: f64,
    /// Laplacian factor per smoothing pass.
    pub lambda: f64,
    /// Iterations between smoothing passes.
    pub smooth_every: usize,
    pub max_iterations: usize,
    /// Halt when the free-vertex fraction drops below this.
    pub stop_fraction: f64,
}

impl Default for InflationConfig {
    fn default() -> Self {
        Self {
            step_mm: 0.1,
            clearance_mm: 0.2,
            lambda: 0.3,
            smooth_every: 1,
            max_iterations: 500,
            stop_fraction: 0.02,
        }
    }
}

impl InflationConfig {
    /// `voxel_diagonal_mm` comes from the SDF grid; the step bound prevents
    /// tunneling through the zero set between samples.
    pub fn validate(&self, voxel_diagonal_mm: f64) -> Result<()> {
        if self.step_mm <= 0.0 || self.step_mm.is_nan() {
            return Err(Error::Config("inflation step_mm must be > 0".into()));
        }
        if self.clearance_mm < 0.0 {
            return Err(Error::Config("inflation clearance_mm must be >= 0".into()));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::Config("inflation lambda must be in (0,1]".into()));
        }
        if self.step_mm >= self.clearance_mm + voxel_diagonal_mm {
            return Err(Error::Config(format!(
                "step_mm {} must be below clearance_mm {} + voxel diagonal {}",
                self.step_mm, self.clearance_mm, voxel_diagonal_mm
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub free_count: usize,
    pub mean_disp_mm: f64,
    pub min_sdf_mm: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InflationTrace {
    pub records: Vec<TraceRecord>,
}

impl InflationTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,free_count,mean_disp_mm,min_sdf_mm\n");
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{:.6},{:.6}\n",
                r.iteration, r.free_count, r.mean_disp_mm, r.min_sdf_mm
            ));
        }
        out
    }
}

/// Stepwise inflation state; `inflate` drives it to completion, tests can
/// step it manually to watch intermediate meshes.
pub struct Inflation<'a> {
    mesh: TriangleMesh,
    frozen: Vec<bool>,
    sdf: &'a VoxelGrid,
    cfg: InflationConfig,
    iteration: usize,
}

impl<'a> Inflation<'a> {
    pub fn new(mc: &TriangleMesh, tb_sdf: &'a VoxelGrid, cfg: InflationConfig) -> Result<Self> {
        cfg.validate(tb_sdf.geom.voxel_diagonal())?;
        if !mc.is_closed() {
            return Err(Error::OpenMesh(
                "inflation needs a closed input mesh".into(),
            ));
        }
        if mc.signed_volume() <= 0.0 {
            return Err(Error::OpenMesh(
                "inflation needs an outward-oriented mesh".into(),
            ));
        }
        let has_neg = tb_sdf.values.iter().any(|&v| v < 0.0);
        let has_pos = tb_sdf.values.iter().any(|&v| v > 0.0);
        if !has_neg || !has_pos {
            return Err(Error::FieldDomain(
                "confining grid has no sign change; not a signed distance field".into(),
            ));
        }
        let penetrating = mc
            .vertices
            .iter()
            .filter(|&&v| tb_sdf.sample_world(v) < cfg.clearance_mm)
            .count();
        if penetrating > 0 {
            return Err(Error::InitialPenetration {
                vertex_count: penetrating,
            });
        }
        Ok(Self {
            frozen: vec![false; mc.vertices.len()],
            mesh: mc.clone(),
            sdf: tb_sdf,
            cfg,
            iteration: 0,
        })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn frozen(&self) -> &[bool] {
        &self.frozen
    }

    pub fn free_fraction(&self) -> f64 {
        let free = self.frozen.iter().filter(|f| !**f).count();
        free as f64 / self.frozen.len() as f64
    }

    pub fn done(&self) -> bool {
        self.iteration >= self.cfg.max_iterations || self.free_fraction() < self.cfg.stop_fraction
    }

    /// Run one iteration; `None` once the stop condition holds.
    pub fn step(&mut self) -> Option<TraceRecord> {
        if self.done() {
            return None;
        }
        let cfg = self.cfg;
        let normals =
            surface::vertex_normals(&self.mesh).expect("closed mesh has no isolated vertices");
        let start = self.mesh.vertices.clone();
        let free_at_start: Vec<bool> = self.frozen.iter().map(|f| !*f).collect();
        for i in 0..self.mesh.vertices.len() {
            if self.frozen[i] {
                continue;
            }
            let v = self.mesh.vertices[i];
            let n = normals[i];
            let tentative = [
                v[0] + cfg.step_mm * n[0],
                v[1] + cfg.step_mm * n[1],
                v[2] + cfg.step_mm * n[2],
            ];
            if self.sdf.sample_world(tentative) >= cfg.clearance_mm {
                self.mesh.vertices[i] = tentative;
            } else {
                self.frozen[i] = true;
            }
        }

        if cfg.smooth_every > 0 && (self.iteration + 1) % cfg.smooth_every == 0 {
            let adjacency = self.mesh.vertex_adjacency();
            let prev = self.mesh.vertices.clone();
            for i in 0..self.mesh.vertices.len() {
                if self.frozen[i] || adjacency[i].is_empty() {
                    continue;
                }
                let mut c = [0.0; 3];
                for &n in &adjacency[i] {
                    let p = prev[n as usize];
                    c = [c[0] + p[0], c[1] + p[1], c[2] + p[2]];
                }
                let inv = 1.0 / adjacency[i].len() as f64;
                let p = prev[i];
                let candidate = [
                    p[0] + cfg.lambda * (c[0] * inv - p[0]),
                    p[1] + cfg.lambda * (c[1] * inv - p[1]),
                    p[2] + cfg.lambda * (c[2] * inv - p[2]),
                ];
                // smoothing must not drag a vertex below clearance either
                if self.sdf.sample_world(candidate) >= cfg.clearance_mm {
                    self.mesh.vertices[i] = candidate;
                }
            }
        }

        // mean displacement over the vertices that were free at entry
        let mut disp_sum = 0.0;
        let mut disp_n = 0usize;
        let mut min_sdf = f64::INFINITY;
        for (i, v) in self.mesh.vertices.iter().enumerate() {
            min_sdf = min_sdf.min(self.sdf.sample_world(*v));
            if free_at_start[i] {
                let d = [v[0] - start[i][0], v[1] - start[i][1], v[2] - start[i][2]];
                disp_sum += (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                disp_n += 1;
            }
        }
        self.iteration += 1;
        let record = TraceRecord {
            iteration: self.iteration,
            free_count: self.frozen.iter().filter(|f| !**f).count(),
            mean_disp_mm: if disp_n > 0 {
                disp_sum / disp_n as f64
            } else {
                0.0
            },
            min_sdf_mm: min_sdf,
        };
        Some(record)
    }

    pub fn finish(self) -> TriangleMesh {
        self.mesh
    }
}

/// Inflate `mc` along its normals inside the signed distance field of the
/// confining bone until contact or the iteration cap.
pub fn inflate(
    mc: &TriangleMesh,
    tb_sdf: &VoxelGrid,
    cfg: InflationConfig,
) -> Result<(TriangleMesh, InflationTrace)> {
    let mut state = Inflation::new(mc, tb_sdf, cfg)?;
    let mut trace = InflationTrace::default();
    while let Some(record) = state.step() {
        trace.records.push(record);
    }
    Ok((state.finish(), trace))
}
