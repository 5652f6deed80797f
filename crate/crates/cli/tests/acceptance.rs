//! Acceptance suite: one test per acceptance criterion, each printing a
//! pass/fail line. Tolerances are pinned in the asserts.
//!
//! Run with `cargo test -p negvol-cli --test acceptance -- --nocapture`
//! to see the per-criterion lines.

use negvol_cli::config::{PipelineConfig, PlaneConfig, SideSource};
use negvol_cli::phantom_files::write_phantom;
use negvol_cli::pipeline::{process_side, run_pipeline, SideMasks, Timer};
use negvol_core::grid::{
    canny3d, close, dilate, distance_field, erode, open, BinaryMask, GridGeometry,
    StructuringElement, VoxelGrid,
};
use negvol_core::inflate::{clip, inflate, ClipPlane, Inflation, InflationConfig};
use negvol_core::phantom::{generate, PhantomKind, PhantomSpec};
use negvol_core::surface::{extract_surface, icosphere, voxelize, PointCloud};
use negvol_core::symmetry::{cross_entropy, dice, hausdorff};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::Instant;

fn pass(n: usize, label: &str) {
    println!("[acceptance] criterion {n} ({label}): PASS");
}

/// Criterion 1: concentric-sphere phantom volumetry after clearance
/// correction, and the desk-scale runtime bound on inflate + boolean.
#[test]
fn criterion_1_phantom_volumetry() {
    let spec = PhantomSpec {
        kind: PhantomKind::ConcentricSpheres,
        condyle_radius_mm: 5.0,
        fossa_radius_mm: 12.0,
        dims: [96, 96, 96],
        spacing_mm: 0.4,
        ..Default::default()
    };
    let phantom = generate(&spec).unwrap();
    let cfg = PipelineConfig::default();
    assert_eq!(cfg.inflation.clearance_mm, 0.2);

    let masks = SideMasks {
        mc: phantom.mc_mask.clone(),
        tb: phantom.tb_mask.clone(),
        intensity: None,
    };
    let mut timer = Timer::new();
    let side = process_side("left", &masks, Some(&phantom.clip), &cfg, false, &mut timer).unwrap();

    let corrected = 4.0 / 3.0
        * PI
        * ((spec.fossa_radius_mm - cfg.inflation.clearance_mm).powi(3)
            - spec.condyle_radius_mm.powi(3));
    let vol = side.nv_mask.volume_mm3();
    let rel = (vol - corrected).abs() / corrected;
    assert!(
        rel <= 0.05,
        "NV volume {vol:.1} vs corrected analytic {corrected:.1}: {:.1}% off",
        100.0 * rel
    );
    assert!(
        side.inflate_and_boolean_seconds <= 30.0,
        "inflate+boolean took {:.1} s",
        side.inflate_and_boolean_seconds
    );
    pass(1, "phantom volumetry");
}

/// Criterion 2: symmetry nulls through the full two-sided pipeline.
#[test]
fn criterion_2_symmetry_nulls() {
    let run_pair = |scale: f64, dims: [usize; 3]| {
        let dir = tempfile::tempdir().unwrap();
        let spec = PhantomSpec {
            kind: PhantomKind::AsymmetricPair,
            asymmetry_scale: scale,
            dims,
            spacing_mm: 0.4,
            noise_sigma: 0.05,
            seed: 7,
            ..Default::default()
        };
        let files = write_phantom(&spec, dir.path()).unwrap();
        let clip_z = files.output.clip.point[2];
        let mut cfg = PipelineConfig::default();
        cfg.inputs.intensity = Some(files.intensity_stem.clone());
        cfg.inputs.left = SideSource {
            segment: true,
            ..Default::default()
        };
        cfg.inputs.right = SideSource {
            segment: true,
            ..Default::default()
        };
        cfg.inflation.max_iterations = 160;
        let plane = PlaneConfig {
            point: [0.0, 0.0, clip_z],
            normal: [0.0, 0.0, -1.0],
        };
        cfg.clip.left = Some(plane);
        cfg.clip.right = Some(plane);
        cfg.metrics.sagittal_x_mm = files.output.sagittal_x_mm;
        cfg.output.dir = dir.path().join("out");
        run_pipeline(&cfg, dir.path()).unwrap().report
    };

    let null = run_pair(1.0, [224, 96, 96]);
    assert!(null.s_lr <= 1.01, "null S_LR {}", null.s_lr);
    // mean point-sampling gap: area per sample, as a length
    let gap = (null.s_l_mm2.max(null.s_r_mm2) / null.samples as f64).sqrt();
    assert!(
        null.h_lr_mm <= 3.0 * gap,
        "null H_LR {} vs 3x sampling gap {}",
        null.h_lr_mm,
        3.0 * gap
    );

    let scaled = run_pair(1.08, [240, 104, 104]);
    assert!(
        (1.12..=1.22).contains(&scaled.s_lr),
        "scaled S_LR {} outside [1.12, 1.22] (quadratic-area oracle 1.1664)",
        scaled.s_lr
    );
    pass(2, "symmetry nulls");
}

/// Criterion 3: metric oracles; Hausdorff against O(n^2) brute force, Dice
/// and cross-entropy against closed forms.
#[test]
fn criterion_3_metric_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let cloud = |rng: &mut ChaCha8Rng| PointCloud {
        points: (0..200)
            .map(|_| {
                [
                    rng.gen_range(0.0..20.0),
                    rng.gen_range(0.0..20.0),
                    rng.gen_range(0.0..20.0),
                ]
            })
            .collect(),
    };
    let brute = |a: &PointCloud, b: &PointCloud| {
        let directed = |from: &PointCloud, to: &PointCloud| {
            from.points
                .iter()
                .map(|p| {
                    to.points
                        .iter()
                        .map(|q| {
                            ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2))
                                .sqrt()
                        })
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0f64, f64::max)
        };
        directed(a, b).max(directed(b, a))
    };
    for trial in 0..100 {
        let a = cloud(&mut rng);
        let b = cloud(&mut rng);
        let fast = hausdorff(&a, &b).unwrap();
        let slow = brute(&a, &b);
        assert!(
            (fast - slow).abs() <= 1e-9,
            "trial {trial}: {fast} vs brute {slow}"
        );
    }

    // dice closed forms on constructed masks
    let g = GridGeometry::new([10, 10, 2], [1.0; 3], [0.0; 3]).unwrap();
    let mut a = BinaryMask::empty(g);
    let mut b = BinaryMask::empty(g);
    for i in 0..100 {
        a.values[i] = true;
    }
    for i in 50..150 {
        b.values[i] = true;
    }
    // |a| = |b| = 100, overlap 50 -> 2*50/200
    assert_eq!(dice(&a, &b).unwrap(), 0.5);
    assert_eq!(dice(&a, &a).unwrap(), 1.0);
    assert_eq!(dice(&a, &BinaryMask::empty(g)).unwrap(), 0.0);

    // cross-entropy closed forms
    let half = VoxelGrid::new(g, vec![0.5; 200]).unwrap();
    assert!((cross_entropy(&half, &a).unwrap() - std::f64::consts::LN_2).abs() < 1e-9);
    let skew = VoxelGrid::new(
        g,
        a.values
            .iter()
            .map(|&v| if v { 0.9 } else { 0.1 })
            .collect(),
    )
    .unwrap();
    assert!((cross_entropy(&skew, &a).unwrap() + 0.9f64.ln()).abs() < 1e-6);
    pass(3, "metric oracles");
}

/// Criterion 4: geometry oracles on icospheres and plane clips.
#[test]
fn criterion_4_geometry_oracles() {
    // voxelize/extract round trip
    let r = 8.0;
    let geom = GridGeometry::new([48, 48, 48], [0.4; 3], [-9.4, -9.4, -9.4]).unwrap();
    let sphere = icosphere(r, 3);
    let m0 = voxelize(&sphere, &geom).unwrap();
    let mesh = extract_surface(&m0, 0.5).unwrap();
    let m1 = voxelize(&mesh, &geom).unwrap();
    let d = dice(&m0, &m1).unwrap();
    assert!(d >= 0.95, "voxelize/extract round-trip dice {d}");

    // area and volume on a refined icosphere
    let fine = icosphere(1.0, 4);
    let area = fine.surface_area();
    let volume = fine.enclosed_volume().unwrap();
    assert!((area - 4.0 * PI).abs() / (4.0 * PI) < 0.01, "area {area}");
    assert!(
        (volume - 4.0 * PI / 3.0).abs() / (4.0 * PI / 3.0) < 0.01,
        "volume {volume}"
    );

    // hemisphere by clipping through the center
    let plane = ClipPlane::new([0.0; 3], [0.0, 0.0, 1.0]).unwrap();
    let hemi = clip(&fine, &plane, true).unwrap();
    assert!(hemi.is_closed());
    let hv = hemi.enclosed_volume().unwrap();
    let expect = 2.0 * PI / 3.0;
    assert!(
        (hv - expect).abs() / expect < 0.02,
        "hemisphere volume {hv}"
    );
    pass(4, "geometry oracles");
}

/// Criterion 5: grid oracles; exact distance transform, morphology
/// properties, Canny localization.
#[test]
fn criterion_5_grid_oracles() {
    // distance field vs brute force on 100 random 16^3 masks
    let mut rng = ChaCha8Rng::seed_from_u64(999);
    let mut tested = 0;
    while tested < 100 {
        let g = GridGeometry::new([16, 16, 16], [1.0; 3], [0.0; 3]).unwrap();
        let values: Vec<bool> = (0..g.voxel_count()).map(|_| rng.gen_bool(0.1)).collect();
        let m = match BinaryMask::new(g, values) {
            Ok(m) if !m.is_empty() && !m.is_full() => m,
            _ => continue,
        };
        tested += 1;
        let field = distance_field(&m).unwrap();
        let half_diag = 0.5 * g.voxel_diagonal();
        // brute-force signed nearest-voxel search
        let mut trues = Vec::new();
        let mut falses = Vec::new();
        for z in 0..16usize {
            for y in 0..16 {
                for x in 0..16 {
                    if m.get(x, y, z) {
                        trues.push([x as f64, y as f64, z as f64]);
                    } else {
                        falses.push([x as f64, y as f64, z as f64]);
                    }
                }
            }
        }
        let nearest = |p: [f64; 3], set: &[[f64; 3]]| {
            set.iter()
                .map(|q| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        };
        for z in 0..16usize {
            for y in 0..16 {
                for x in 0..16 {
                    let p = [x as f64, y as f64, z as f64];
                    let want = if m.get(x, y, z) {
                        -nearest(p, &falses)
                    } else {
                        nearest(p, &trues)
                    };
                    let got = field.get(x, y, z) as f64;
                    assert!(
                        (got - want).abs() <= half_diag + 1e-6,
                        "({x},{y},{z}): {got} vs brute {want}"
                    );
                }
            }
        }
    }

    // morphology duality and idempotence on 100 random masks
    let se = StructuringElement::ball(1).unwrap();
    for _ in 0..100 {
        let g = GridGeometry::new([12, 12, 12], [1.0; 3], [0.0; 3]).unwrap();
        let values: Vec<bool> = (0..g.voxel_count()).map(|_| rng.gen_bool(0.4)).collect();
        let m = BinaryMask::new(g, values).unwrap();
        let e = erode(&m, &se);
        let dual = dilate(&m.complement(), &se).complement();
        for z in 1..11 {
            for y in 1..11 {
                for x in 1..11 {
                    assert_eq!(
                        e.get(x, y, z),
                        dual.get(x, y, z),
                        "duality at ({x},{y},{z})"
                    );
                }
            }
        }
        let o = open(&m, &se);
        assert_eq!(open(&o, &se), o);
        let c = close(&m, &se);
        assert_eq!(close(&c, &se), c);
    }

    // canny localizes a sphere surface
    let n = 64;
    let g = GridGeometry::new([n, n, n], [1.0; 3], [0.0; 3]).unwrap();
    let c = (n as f64 - 1.0) / 2.0;
    let r = 15.0;
    let mut field = VoxelGrid::zeros(g);
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let d2 = (x as f64 - c).powi(2) + (y as f64 - c).powi(2) + (z as f64 - c).powi(2);
                if d2 <= r * r {
                    field.set(x, y, z, 1.0);
                }
            }
        }
    }
    let edges = canny3d(&field, 1.0, 0.1, 0.3).unwrap();
    let mut total = 0;
    let mut near = 0;
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                if edges.get(x, y, z) {
                    total += 1;
                    let d =
                        ((x as f64 - c).powi(2) + (y as f64 - c).powi(2) + (z as f64 - c).powi(2))
                            .sqrt();
                    if (d - r).abs() <= 1.5 {
                        near += 1;
                    }
                }
            }
        }
    }
    assert!(total > 0);
    let frac = near as f64 / total as f64;
    assert!(frac >= 0.95, "canny localization fraction {frac}");
    pass(5, "grid oracles");
}

/// Criterion 6: inflation invariants on the phantoms.
#[test]
fn criterion_6_inflation_invariants() {
    for kind in [PhantomKind::ConcentricSpheres, PhantomKind::BallAndSocket] {
        let spec = PhantomSpec {
            kind,
            dims: [96, 96, 96],
            spacing_mm: 0.4,
            ..Default::default()
        };
        let phantom = generate(&spec).unwrap();
        let mc_mesh = negvol_core::surface::extract_surface_opts(
            &phantom.mc_mask,
            &negvol_core::surface::SurfaceOptions {
                iso: 0.5,
                smooth_sigma_voxels: Some(1.0),
            },
        )
        .unwrap();
        let sdf = distance_field(&phantom.tb_mask).unwrap();
        let cfg = InflationConfig {
            max_iterations: 160,
            ..Default::default()
        };

        let mut state = Inflation::new(&mc_mesh, &sdf, cfg).unwrap();
        let mut prev_free = usize::MAX;
        let mut prev_vol = state.mesh().enclosed_volume().unwrap();
        while let Some(rec) = state.step() {
            assert!(rec.free_count <= prev_free, "{kind:?}: frozen set shrank");
            prev_free = rec.free_count;
            let vol = state.mesh().enclosed_volume().unwrap();
            assert!(
                vol >= prev_vol * (1.0 - 0.005),
                "{kind:?}: volume dipped more than 0.5% ({prev_vol} -> {vol})"
            );
            prev_vol = vol;
        }
        // containment bound, all vertices
        let final_mesh = state.finish();
        for v in &final_mesh.vertices {
            let s = sdf.sample_world(*v);
            assert!(
                s >= cfg.clearance_mm - cfg.step_mm - 1e-9,
                "{kind:?}: vertex at sdf {s}"
            );
        }
        // deterministic bit-identical reruns
        let (a, ta) = inflate(&mc_mesh, &sdf, cfg).unwrap();
        let (b, tb) = inflate(&mc_mesh, &sdf, cfg).unwrap();
        assert_eq!(ta, tb, "{kind:?}: traces differ between reruns");
        assert_eq!(a.faces, b.faces);
        for (va, vb) in a.vertices.iter().zip(&b.vertices) {
            for k in 0..3 {
                assert_eq!(
                    va[k].to_bits(),
                    vb[k].to_bits(),
                    "{kind:?}: vertices not bit-identical"
                );
            }
        }
    }
    pass(6, "inflation invariants");
}

/// Criterion 7: the clinical-scale results (network segmentation scores,
/// localization quality, 50-patient correlations) need the private dataset
/// and trained models; criteria 1-6 stand in for them at desk scale.
#[test]
fn criterion_7_out_of_scope_note() {
    println!(
        "[acceptance] criterion 7 (clinical-scale results): NOT REPRODUCIBLE AT DESK SCALE; \
         replaced by criteria 1-6"
    );
    pass(7, "out-of-scope note");
}

/// The timing report from a pipeline run covers its stages: the sum of the
/// stage times accounts for the total within 5%.
#[test]
fn timing_report_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let spec = PhantomSpec {
        kind: PhantomKind::AsymmetricPair,
        dims: [224, 96, 96],
        spacing_mm: 0.4,
        noise_sigma: 0.02,
        ..Default::default()
    };
    let files = write_phantom(&spec, dir.path()).unwrap();
    let mut cfg = PipelineConfig::default();
    cfg.inputs.intensity = Some(files.intensity_stem.clone());
    cfg.inflation.max_iterations = 120;
    let plane = PlaneConfig {
        point: files.output.clip.point,
        normal: files.output.clip.normal,
    };
    cfg.clip.left = Some(plane);
    cfg.clip.right = Some(plane);
    cfg.metrics.sagittal_x_mm = files.output.sagittal_x_mm;
    cfg.metrics.samples = 5000;
    cfg.output.dir = dir.path().join("out");
    let t0 = Instant::now();
    let out = run_pipeline(&cfg, dir.path()).unwrap();
    let wall = t0.elapsed().as_secs_f64();
    let sum: f64 = out.timing.stages.iter().map(|s| s.seconds).sum();
    assert!(out.timing.total_seconds <= wall + 1e-3);
    assert!(
        (out.timing.total_seconds - sum).abs() <= 0.05 * out.timing.total_seconds,
        "stage sum {sum} vs total {}",
        out.timing.total_seconds
    );
    for want in ["left:inflate", "right:inflate", "metrics", "write"] {
        assert!(
            out.timing.stages.iter().any(|s| s.stage == want),
            "missing stage {want}"
        );
    }
}

/// Identical inputs and config give byte-identical artifacts.
#[test]
fn pipeline_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let spec = PhantomSpec {
        kind: PhantomKind::AsymmetricPair,
        dims: [224, 96, 96],
        spacing_mm: 0.4,
        noise_sigma: 0.02,
        ..Default::default()
    };
    let files = write_phantom(&spec, dir.path()).unwrap();
    let mut cfg = PipelineConfig::default();
    cfg.inputs.intensity = Some(files.intensity_stem.clone());
    cfg.inflation.max_iterations = 120;
    let plane = PlaneConfig {
        point: files.output.clip.point,
        normal: files.output.clip.normal,
    };
    cfg.clip.left = Some(plane);
    cfg.clip.right = Some(plane);
    cfg.metrics.sagittal_x_mm = files.output.sagittal_x_mm;
    cfg.metrics.samples = 4000;

    let mut digests: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for run in 0..2 {
        cfg.output.dir = dir.path().join(format!("out{run}"));
        let out = run_pipeline(&cfg, dir.path()).unwrap();
        let mut files: Vec<(String, Vec<u8>)> = out
            .artifact_paths
            .iter()
            .filter(|p| !p.ends_with("timings.json"))
            .map(|p| {
                (
                    p.file_name().unwrap().to_string_lossy().into_owned(),
                    std::fs::read(p).unwrap(),
                )
            })
            .collect();
        files.sort_by(|a, b| a.0.cmp(&b.0));
        digests.push(files);
    }
    let names: Vec<&String> = digests[0].iter().map(|(n, _)| n).collect();
    assert!(names.iter().any(|n| n.as_str() == "report.json"));
    for ((n1, d1), (n2, d2)) in digests[0].iter().zip(&digests[1]) {
        assert_eq!(n1, n2);
        assert_eq!(d1, d2, "artifact {n1} differs between reruns");
    }
}
