//! End-to-end orchestration: localization, per-side enhancement, surface
//! extraction, inflation, clipping, boolean difference and the symmetry
//! report. Sides run left then right; every stage is timed and every error
//! carries its stage name.

use crate::config::{resolve, PipelineConfig, SourceKind};
use negvol_core::error::Error as CoreError;
use negvol_core::grid::{
    canny3d, close, dilate, distance_field, median_filter_slices, open, remove_small_components,
    resample, BinaryMask, GridGeometry, ResampleMethod, StructuringElement, VoxelGrid,
};
use negvol_core::inflate::{inflate, negative_volume, ClipPlane, InflationTrace};
use negvol_core::io;
use negvol_core::surface::{extract_surface_opts, voxelize, SurfaceOptions, TriangleMesh};
use negvol_core::symmetry::{compare_sides, SymmetryReport};
use negvol_core::voi::{
    coarse_mask, crop_grid, crop_mask, split_left_right, BoundingBox, CoarseSource,
};
use serde::Serialize;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Pipeline failure tagged with the stage that produced it.
#[derive(Debug)]
pub struct StageError {
    pub stage: String,
    pub source: CoreError,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[stage={}] {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        self.source.exit_code()
    }
}

type StageResult<T> = std::result::Result<T, StageError>;

fn at_stage<T>(stage: &str, r: negvol_core::Result<T>) -> StageResult<T> {
    r.map_err(|source| StageError {
        stage: stage.into(),
        source,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingReport {
    pub stages: Vec<StageTiming>,
    pub total_seconds: f64,
}

pub struct SideResult {
    pub nv_mesh: TriangleMesh,
    pub nv_mask: BinaryMask,
    pub trace: InflationTrace,
    /// Seconds spent in inflation plus the boolean/extraction step.
    pub inflate_and_boolean_seconds: f64,
}

pub struct PipelineOutput {
    pub report: SymmetryReport,
    pub voi: Option<VoiReport>,
    pub warnings: Vec<String>,
    pub timing: TimingReport,
    pub artifact_paths: Vec<PathBuf>,
}

/// Content of `pipeline_report.json`: the symmetry report plus the VOI
/// boxes (voxel and world ranges) and any warnings collected on the way.
#[derive(Serialize)]
struct PipelineReportFile<'a> {
    symmetry: &'a SymmetryReport,
    voi: &'a Option<VoiReport>,
    warnings: &'a [String],
}

pub struct Timer {
    stages: Vec<StageTiming>,
    start: Instant,
}

impl Default for Timer {
    fn default() -> Self {
        Self::new()
    }
}

impl Timer {
    pub fn new() -> Self {
        Self {
            stages: Vec::new(),
            start: Instant::now(),
        }
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.stages.push(StageTiming {
            stage: stage.to_string(),
            seconds: t0.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn finish(self) -> TimingReport {
        TimingReport {
            stages: self.stages,
            total_seconds: self.start.elapsed().as_secs_f64(),
        }
    }

    fn last_seconds(&self, n: usize) -> f64 {
        self.stages.iter().rev().take(n).map(|s| s.seconds).sum()
    }
}

/// Bone masks for one side on a common grid.
pub struct SideMasks {
    pub mc: BinaryMask,
    pub tb: BinaryMask,
    /// Intensity crop, present on the segmentation path.
    pub intensity: Option<VoxelGrid>,
}

fn read_mask(base: &Path, p: &Path, stage: &str) -> StageResult<BinaryMask> {
    at_stage(
        stage,
        io::read_raw_grid(&resolve(base, p)).map(|g| g.into_mask()),
    )
}

fn mesh_template(
    meshes: [&TriangleMesh; 2],
    spacing: f64,
    margin: f64,
) -> StageResult<GridGeometry> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for m in meshes {
        for v in &m.vertices {
            for a in 0..3 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
    }
    let mut dims = [0usize; 3];
    let mut origin = [0.0; 3];
    for a in 0..3 {
        origin[a] = lo[a] - margin;
        dims[a] = (((hi[a] + margin - origin[a]) / spacing).ceil() as usize).max(2) + 1;
    }
    at_stage(
        "voxelize-inputs",
        GridGeometry::new(dims, [spacing; 3], origin),
    )
}

/// Separate a side's bone mask into moving and confining bone: the
/// 26-component with the lowest centroid z is the condyle (the mandible
/// enters from below), the rest is the confining bone.
fn separate_bones(side_mask: &BinaryMask, stage: &str) -> StageResult<(BinaryMask, BinaryMask)> {
    let (labels, sizes) = negvol_core::grid::connected_components(side_mask);
    if sizes.len() < 2 {
        return Err(StageError {
            stage: stage.into(),
            source: CoreError::DegenerateJoint(format!(
                "need at least two bone components per side, found {}",
                sizes.len()
            )),
        });
    }
    let [nx, ny, nz] = side_mask.geom.dims;
    let mut z_sum = vec![0f64; sizes.len()];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let l = labels[side_mask.geom.index(x, y, z)];
                if l > 0 {
                    z_sum[(l - 1) as usize] += z as f64;
                }
            }
        }
    }
    let mc_label = (0..sizes.len())
        .min_by(|&a, &b| {
            let za = z_sum[a] / sizes[a] as f64;
            let zb = z_sum[b] / sizes[b] as f64;
            za.partial_cmp(&zb).unwrap()
        })
        .unwrap() as u32
        + 1;
    let mc = BinaryMask {
        geom: side_mask.geom,
        values: labels.iter().map(|&l| l == mc_label).collect(),
    };
    let tb = BinaryMask {
        geom: side_mask.geom,
        values: side_mask
            .values
            .iter()
            .zip(&labels)
            .map(|(&v, &l)| v && l != mc_label)
            .collect(),
    };
    Ok((mc, tb))
}

/// Step-C classical enhancement of the confining-bone mask: median denoise,
/// Canny edges fused in by union near the mask, morphological close/open,
/// and a guard ring carved out around the moving bone.
pub fn enhance_tb(
    intensity: &VoxelGrid,
    mc: &BinaryMask,
    tb: &BinaryMask,
    cfg: &crate::config::EnhancementConfig,
    min_voxels: usize,
) -> negvol_core::Result<BinaryMask> {
    let denoised = median_filter_slices(intensity, cfg.median_radius);
    let edges = canny3d(&denoised, cfg.canny_sigma_mm, cfg.canny_low, cfg.canny_high)?;
    let gate = dilate(tb, &StructuringElement::ball(cfg.edge_gate_dilate)?);
    let fused = tb.or(&edges.and(&gate)?)?;
    let se_close = StructuringElement::ball(cfg.close_radius)?;
    let se_open = StructuringElement::ball(cfg.open_radius)?;
    let fused = open(&close(&fused, &se_close), &se_open);
    let guard = dilate(mc, &StructuringElement::ball(cfg.mc_guard_dilate)?);
    let fused = fused.minus(&guard)?;
    let fused = remove_small_components(&fused, min_voxels);
    if fused.is_empty() {
        return Err(CoreError::DegenerateJoint(
            "confining-bone mask is empty after enhancement".into(),
        ));
    }
    Ok(fused)
}

/// Bounding box as it appears in the pipeline report: voxel index ranges on
/// the source grid plus the world-mm ranges of the voxel centers.
#[derive(Debug, Clone, Serialize)]
pub struct BoxReport {
    pub voxel_min: [usize; 3],
    pub voxel_max: [usize; 3],
    pub world_min_mm: [f64; 3],
    pub world_max_mm: [f64; 3],
}

impl BoxReport {
    fn from_box(b: &BoundingBox) -> Self {
        Self {
            voxel_min: b.min,
            voxel_max: b.max,
            world_min_mm: b.world_min(),
            world_max_mm: b.world_max(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VoiReport {
    pub left: BoxReport,
    pub right: BoxReport,
}

/// Resolve per-side bone masks from the configured source.
fn load_sides(
    cfg: &PipelineConfig,
    base: &Path,
    timer: &mut Timer,
    warnings: &mut Vec<String>,
) -> StageResult<(
    SideMasks,
    SideMasks,
    Option<GridGeometry>,
    Option<VoiReport>,
)> {
    let left_kind = cfg.inputs.left.kind("left").map_err(|e| StageError {
        stage: "config".into(),
        source: CoreError::Config(e.to_string()),
    })?;
    let right_kind = cfg.inputs.right.kind("right").map_err(|e| StageError {
        stage: "config".into(),
        source: CoreError::Config(e.to_string()),
    })?;

    // segmentation path: shared VOI work
    let mut voi_sides: Option<(SideMasks, SideMasks, GridGeometry, VoiReport)> = None;
    if left_kind == SourceKind::Segment || right_kind == SourceKind::Segment {
        let intensity_path = cfg.inputs.intensity.as_ref().ok_or_else(|| StageError {
            stage: "config".into(),
            source: CoreError::Config("segment sides need inputs.intensity".into()),
        })?;
        let normalized = at_stage(
            "load",
            timer.time("load", || {
                let raw = io::read_raw_grid(&resolve(base, intensity_path))?;
                raw.into_grid().normalize_minmax()
            }),
        )?;

        // localization may run on an external probability map or on a
        // downsampled copy of the intensities; the boxes scale back onto
        // the source grid either way
        enum Localizer {
            Probability(VoxelGrid),
            Downsampled(VoxelGrid),
            FullRes,
        }
        let localizer = match (&cfg.inputs.probability_map, cfg.voi.localization_dims) {
            (Some(p), _) => {
                let prob = at_stage("load", io::read_raw_grid(&resolve(base, p)))?.into_grid();
                Localizer::Probability(prob)
            }
            (None, Some(dims)) => {
                let low = timer.time("voi:resample", || {
                    resample(&normalized, dims, ResampleMethod::BicubicSlices)
                });
                Localizer::Downsampled(at_stage("voi:resample", low)?)
            }
            (None, None) => Localizer::FullRes,
        };

        let coarse = timer.time("voi:coarse_mask", || {
            let source = match &localizer {
                Localizer::Probability(p) => CoarseSource::ProbabilityMap(p),
                Localizer::Downsampled(g) => CoarseSource::Intensity {
                    grid: g,
                    bone_threshold: cfg.voi.bone_threshold,
                },
                Localizer::FullRes => CoarseSource::Intensity {
                    grid: &normalized,
                    bone_threshold: cfg.voi.bone_threshold,
                },
            };
            coarse_mask(source, cfg.voi.histogram_bins, cfg.voi.min_component_voxels)
        });
        let coarse = at_stage("voi:coarse_mask", coarse)?;
        let (lbox, rbox) = at_stage(
            "voi:split",
            split_left_right(&coarse, cfg.voi.margin_voxels),
        )?;
        // map localization boxes onto the source grid
        let mut scaled = [lbox, rbox];
        for (b, name) in scaled.iter_mut().zip(["left", "right"]) {
            let (s, clamped) = at_stage("voi:split", b.scale_to(&normalized.geom))?;
            if clamped {
                warnings.push(format!("voi: {name} box clamped to the source grid"));
            }
            *b = s;
        }
        let [lbox, rbox] = scaled;
        let report = VoiReport {
            left: BoxReport::from_box(&lbox),
            right: BoxReport::from_box(&rbox),
        };

        // on the full-resolution path the coarse mask doubles as the bone
        // mask; localization paths re-threshold the cropped intensities
        let full_res_coarse = match &localizer {
            Localizer::FullRes => Some(&coarse),
            _ => None,
        };
        let build_side = |name: &str, b: &BoundingBox| -> StageResult<SideMasks> {
            let stage = format!("{name}:segment");
            let crop_i = at_stage(&stage, crop_grid(&normalized, b))?;
            let crop_m = match full_res_coarse {
                Some(c) => at_stage(&stage, crop_mask(c, b))?,
                None => at_stage(
                    &stage,
                    coarse_mask(
                        CoarseSource::Intensity {
                            grid: &crop_i,
                            bone_threshold: cfg.voi.bone_threshold,
                        },
                        cfg.voi.histogram_bins,
                        cfg.voi.min_component_voxels,
                    ),
                )?,
            };
            let (mc, tb) = separate_bones(&crop_m, &stage)?;
            Ok(SideMasks {
                mc,
                tb,
                intensity: Some(crop_i),
            })
        };
        let left = timer.time("left:segment", || build_side("left", &lbox));
        let right = timer.time("right:segment", || build_side("right", &rbox));
        voi_sides = Some((left?, right?, normalized.geom, report));
    }

    let (seg_left, seg_right, grid_geom, voi_report) = match voi_sides {
        Some((l, r, g, v)) => (Some(l), Some(r), Some(g), Some(v)),
        None => (None, None, None, None),
    };
    let left = load_side_source(
        cfg,
        base,
        left_kind,
        &cfg.inputs.left,
        "left",
        seg_left,
        timer,
    )?;
    let right = load_side_source(
        cfg,
        base,
        right_kind,
        &cfg.inputs.right,
        "right",
        seg_right,
        timer,
    )?;
    Ok((left, right, grid_geom, voi_report))
}

fn load_side_source(
    cfg: &PipelineConfig,
    base: &Path,
    kind: SourceKind,
    side_cfg: &crate::config::SideSource,
    name: &str,
    seg: Option<SideMasks>,
    timer: &mut Timer,
) -> StageResult<SideMasks> {
    match kind {
        SourceKind::Segment => Ok(seg.expect("segment side prepared above")),
        SourceKind::Masks => {
            let stage = format!("{name}:load");
            timer.time(&stage, || {
                let mc = read_mask(base, side_cfg.mc_mask.as_ref().unwrap(), &stage)?;
                let tb = read_mask(base, side_cfg.tb_mask.as_ref().unwrap(), &stage)?;
                at_stage(&stage, mc.geom.check_same(&tb.geom, "side masks"))?;
                Ok(SideMasks {
                    mc,
                    tb,
                    intensity: None,
                })
            })
        }
        SourceKind::Meshes => {
            let stage = format!("{name}:voxelize");
            timer.time(&stage, || {
                let mc_mesh = at_stage(
                    &stage,
                    io::read_stl(&resolve(base, side_cfg.mc_mesh.as_ref().unwrap())),
                )?;
                let tb_mesh = at_stage(
                    &stage,
                    io::read_stl(&resolve(base, side_cfg.tb_mesh.as_ref().unwrap())),
                )?;
                let template = mesh_template(
                    [&mc_mesh, &tb_mesh],
                    cfg.inputs.mesh_grid_spacing_mm,
                    cfg.inputs.mesh_grid_margin_mm,
                )?;
                let mc = at_stage(&stage, voxelize(&mc_mesh, &template))?;
                let tb = at_stage(&stage, voxelize(&tb_mesh, &template))?;
                Ok(SideMasks {
                    mc,
                    tb,
                    intensity: None,
                })
            })
        }
    }
}

/// Derive a clip plane from the condyle's minimum cross-section below its
/// widest slice: the highest such slice is the neck cut.
pub fn auto_clip_plane(mc: &BinaryMask) -> Option<ClipPlane> {
    let [nx, ny, nz] = mc.geom.dims;
    let mut areas = vec![0usize; nz];
    let mut cx = vec![0f64; nz];
    let mut cy = vec![0f64; nz];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if mc.get(x, y, z) {
                    areas[z] += 1;
                    cx[z] += x as f64;
                    cy[z] += y as f64;
                }
            }
        }
    }
    let z_widest = areas.iter().enumerate().max_by_key(|(_, &a)| a)?.0;
    let mut best: Option<(usize, usize)> = None; // (area, z)
    for z in 0..z_widest {
        if areas[z] == 0 {
            continue;
        }
        let better = match best {
            None => true,
            Some((a, bz)) => areas[z] < a || (areas[z] == a && z > bz),
        };
        if better {
            best = Some((areas[z], z));
        }
    }
    let (_, z_cut) = best?;
    let n = areas[z_cut] as f64;
    let p = mc.geom.world(0, 0, z_cut);
    let point = [
        mc.geom.origin[0] + (cx[z_cut] / n) * mc.geom.spacing[0],
        mc.geom.origin[1] + (cy[z_cut] / n) * mc.geom.spacing[1],
        p[2],
    ];
    ClipPlane::new(point, [0.0, 0.0, -1.0]).ok()
}

fn side_plane(
    cfg: &PipelineConfig,
    plane_cfg: &Option<crate::config::PlaneConfig>,
    mc: &BinaryMask,
    stage: &str,
) -> StageResult<Option<ClipPlane>> {
    if let Some(p) = plane_cfg {
        return at_stage(stage, ClipPlane::new_normalized(p.point, p.normal)).map(Some);
    }
    if cfg.clip.auto {
        return Ok(auto_clip_plane(mc));
    }
    Ok(None)
}

/// The per-side chain: enhancement (segmentation path only), surface
/// extraction, distance field, inflation, clipping and boolean difference.
///
/// With `mirror` the side runs in an x-flipped frame and the result flips
/// back. Processing both joints in the same anatomical orientation removes
/// left/right bias: on perfectly mirrored inputs the two sides then follow
/// bit-identical arithmetic, so no spurious asymmetry can accumulate in the
/// iterative inflation.
pub fn process_side(
    name: &str,
    masks: &SideMasks,
    plane: Option<&ClipPlane>,
    cfg: &PipelineConfig,
    mirror: bool,
    timer: &mut Timer,
) -> StageResult<SideResult> {
    if mirror {
        let geom = masks.mc.geom;
        let center_x = geom.origin[0] + (geom.dims[0] - 1) as f64 / 2.0 * geom.spacing[0];
        let (flipped, flipped_plane) = timer.time(&format!("{name}:mirror"), || {
            let flipped = SideMasks {
                mc: masks.mc.flipped_x(),
                tb: masks.tb.flipped_x(),
                intensity: masks.intensity.as_ref().map(|g| g.flipped_x()),
            };
            (flipped, plane.map(|p| p.mirrored_x(center_x)))
        });
        let mut side = process_side(name, &flipped, flipped_plane.as_ref(), cfg, false, timer)?;
        let unmirrored = timer.time(&format!("{name}:unmirror"), || {
            let mask = side.nv_mask.flipped_x();
            let mesh = negvol_core::inflate::nv_surface(&mask)?;
            Ok::<_, CoreError>((mesh, mask))
        });
        let (mesh, mask) = at_stage(&format!("{name}:unmirror"), unmirrored)?;
        side.nv_mesh = mesh;
        side.nv_mask = mask;
        return Ok(side);
    }

    let mut tb = masks.tb.clone();
    if cfg.enhancement.enabled {
        if let Some(intensity) = &masks.intensity {
            let stage = format!("{name}:enhance");
            let enhanced = timer.time(&stage, || {
                enhance_tb(
                    intensity,
                    &masks.mc,
                    &tb,
                    &cfg.enhancement,
                    cfg.voi.min_component_voxels,
                )
            });
            tb = at_stage(&stage, enhanced)?;
        }
    }

    let opts = SurfaceOptions {
        iso: cfg.surface.iso,
        smooth_sigma_voxels: if cfg.surface.smooth_sigma_voxels > 0.0 {
            Some(cfg.surface.smooth_sigma_voxels)
        } else {
            None
        },
    };
    let stage = format!("{name}:extract");
    let mc_mesh = timer.time(&stage, || extract_surface_opts(&masks.mc, &opts));
    let mc_mesh = at_stage(&stage, mc_mesh)?;

    let stage = format!("{name}:distance_field");
    let sdf = timer.time(&stage, || distance_field(&tb));
    let sdf = at_stage(&stage, sdf)?;

    let stage = format!("{name}:inflate");
    let inflated = timer.time(&stage, || inflate(&mc_mesh, &sdf, cfg.inflation));
    let (inflated, trace) = at_stage(&stage, inflated)?;

    let stage = format!("{name}:negative_volume");
    let nv = timer.time(&stage, || negative_volume(&inflated, &masks.mc, &tb, plane));
    let (nv_mesh, nv_mask) = at_stage(&stage, nv)?;
    let inflate_and_boolean_seconds = timer.last_seconds(2);

    Ok(SideResult {
        nv_mesh,
        nv_mask,
        trace,
        inflate_and_boolean_seconds,
    })
}

/// Run the whole pipeline and write every artifact under `output.dir`.
pub fn run_pipeline(cfg: &PipelineConfig, base: &Path) -> StageResult<PipelineOutput> {
    cfg.validate(base).map_err(|e| StageError {
        stage: "config".into(),
        source: CoreError::Config(e.to_string()),
    })?;
    let mut timer = Timer::new();
    let mut warnings = Vec::new();
    let (left, right, grid_geom, voi_report) = load_sides(cfg, base, &mut timer, &mut warnings)?;

    let left_plane =
        timer.time("left:clip_plane", || side_plane(cfg, &cfg.clip.left, &left.mc, "left:clip"))?;
    let right_plane = timer.time("right:clip_plane", || {
        side_plane(cfg, &cfg.clip.right, &right.mc, "right:clip")
    })?;

    let left_out = process_side("left", &left, left_plane.as_ref(), cfg, false, &mut timer)?;
    let right_out = process_side(
        "right",
        &right,
        right_plane.as_ref(),
        cfg,
        cfg.inputs.mirror_right,
        &mut timer,
    )?;

    let sagittal = cfg.metrics.sagittal_x_mm.unwrap_or_else(|| {
        let g = grid_geom.unwrap_or(left.mc.geom);
        g.origin[0] + (g.dims[0] - 1) as f64 / 2.0 * g.spacing[0]
    });
    let stage = "metrics";
    let report = timer.time(stage, || {
        compare_sides(
            &left_out.nv_mesh,
            &right_out.nv_mesh,
            sagittal,
            cfg.metrics.samples,
            cfg.metrics.seed,
        )
    });
    let report = at_stage(stage, report)?;

    let out_dir = resolve(base, &cfg.output.dir);
    let stage = "write";
    let artifacts = timer.time(stage, || -> negvol_core::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(&out_dir)?;
        let mut paths = Vec::new();
        for (name, side) in [("left", &left_out), ("right", &right_out)] {
            let stl = out_dir.join(format!("nv_{name}.stl"));
            io::write_stl_binary(&stl, &side.nv_mesh)?;
            paths.push(stl);
            let mask_stem = out_dir.join(format!("nv_{name}_mask"));
            io::write_raw_mask(&mask_stem, &side.nv_mask)?;
            paths.push(mask_stem.with_extension("json"));
            paths.push(mask_stem.with_extension("raw"));
            let trace = out_dir.join(format!("trace_{name}.csv"));
            std::fs::write(&trace, side.trace.to_csv())?;
            paths.push(trace);
        }
        let report_path = out_dir.join("report.json");
        std::fs::write(&report_path, serde_json::to_string_pretty(&report).unwrap())?;
        paths.push(report_path);
        let pipeline_report = PipelineReportFile {
            symmetry: &report,
            voi: &voi_report,
            warnings: &warnings,
        };
        let pr_path = out_dir.join("pipeline_report.json");
        std::fs::write(
            &pr_path,
            serde_json::to_string_pretty(&pipeline_report).unwrap(),
        )?;
        paths.push(pr_path);
        Ok(paths)
    });
    let mut artifact_paths = at_stage(stage, artifacts)?;

    let timing = timer.finish();
    let timing_path = out_dir.join("timings.json");
    at_stage(
        "write",
        std::fs::write(&timing_path, serde_json::to_string_pretty(&timing).unwrap())
            .map_err(CoreError::from),
    )?;
    artifact_paths.push(timing_path);

    Ok(PipelineOutput {
        report,
        voi: voi_report,
        warnings,
        timing,
        artifact_paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use negvol_core::phantom::{generate, PhantomKind, PhantomSpec};

    #[test]
    fn auto_clip_cuts_at_the_neck() {
        let spec = PhantomSpec {
            kind: PhantomKind::BallAndSocket,
            dims: [96, 96, 96],
            spacing_mm: 0.4,
            ..Default::default()
        };
        let out = generate(&spec).unwrap();
        let plane = auto_clip_plane(&out.mc_mask).expect("neck exists");
        // the cut must land between the neck bottom and the ball bottom
        let cz = (96.0 - 1.0) / 2.0 * 0.4;
        let ball_bottom = cz - spec.condyle_radius_mm;
        let neck_bottom = cz - spec.condyle_radius_mm - spec.neck_length_mm;
        assert!(
            plane.point[2] > neck_bottom - 0.4 && plane.point[2] <= ball_bottom + 0.4,
            "cut z {} not in neck band ({neck_bottom}, {ball_bottom})",
            plane.point[2]
        );
        assert_eq!(plane.normal, [0.0, 0.0, -1.0]);
    }

    #[test]
    fn separate_bones_picks_lowest_component() {
        let spec = PhantomSpec {
            kind: PhantomKind::BallAndSocket,
            dims: [96, 96, 96],
            spacing_mm: 0.4,
            ..Default::default()
        };
        let out = generate(&spec).unwrap();
        let combined = out.mc_mask.or(&out.tb_mask).unwrap();
        let (mc, tb) = separate_bones(&combined, "test").unwrap();
        assert_eq!(mc, out.mc_mask);
        assert_eq!(tb, out.tb_mask);
    }
}
