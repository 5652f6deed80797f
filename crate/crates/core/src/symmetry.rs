//! Left/right symmetry and evaluation metrics: exact Hausdorff distance on
//! point clouds, bidirectional mean surface distance, Dice, cross-entropy,
//! and the side-to-side comparison report.

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, VoxelGrid};
use crate::surface::{sample_points, PointCloud, TriangleMesh};
use serde::{Deserialize, Serialize};

/// Balanced kd-tree over points; nearest queries prune on the splitting
/// plane, so results equal brute force exactly.
struct KdTree {
    // points reordered into tree layout: node of [lo,hi) is the midpoint,
    // splitting on axis depth % 3
    points: Vec<[f64; 3]>,
}

impl KdTree {
    fn build(points: &[[f64; 3]]) -> Self {
        let mut pts = points.to_vec();
        let n = pts.len();
        build_recursive(&mut pts, 0, n, 0);
        Self { points: pts }
    }

    fn nearest_sq(&self, q: [f64; 3]) -> f64 {
        let mut best = f64::INFINITY;
        self.search(q, 0, self.points.len(), 0, &mut best);
        best
    }

    fn search(&self, q: [f64; 3], lo: usize, hi: usize, depth: usize, best: &mut f64) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let p = self.points[mid];
        let d2 = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) + (q[2] - p[2]).powi(2);
        if d2 < *best {
            *best = d2;
        }
        let axis = depth % 3;
        let delta = q[axis] - p[axis];
        let (near, far) = if delta < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(q, near.0, near.1, depth + 1, best);
        if delta * delta < *best {
            self.search(q, far.0, far.1, depth + 1, best);
        }
    }
}

fn build_recursive(pts: &mut [[f64; 3]], lo: usize, hi: usize, depth: usize) {
    if hi - lo <= 1 {
        return;
    }
    let axis = depth % 3;
    let mid = lo + (hi - lo) / 2;
    pts[lo..hi].select_nth_unstable_by(mid - lo, |a, b| a[axis].partial_cmp(&b[axis]).unwrap());
    build_recursive(pts, lo, mid, depth + 1);
    build_recursive(pts, mid + 1, hi, depth + 1);
}

fn directed_sup_inf(from: &PointCloud, to_tree: &KdTree) -> f64 {
    from.points
        .iter()
        .map(|&p| to_tree.nearest_sq(p))
        .fold(0.0f64, f64::max)
        .sqrt()
}

/// Exact symmetric Hausdorff distance between two point clouds,
/// `max(sup_l inf_r d, sup_r inf_l d)` with Euclidean d.
pub fn hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.points.is_empty() || b.points.is_empty() {
        return Err(Error::Config(
            "hausdorff needs two non-empty point clouds".into(),
        ));
    }
    let ta = KdTree::build(&a.points);
    let tb = KdTree::build(&b.points);
    Ok(directed_sup_inf(a, &tb).max(directed_sup_inf(b, &ta)))
}

/// Mean and standard deviation of the pooled bidirectional nearest-neighbor
/// distances (every point of each cloud to the other cloud).
pub fn mean_surface_distance(a: &PointCloud, b: &PointCloud) -> Result<(f64, f64)> {
    if a.points.is_empty() || b.points.is_empty() {
        return Err(Error::Config(
            "mean_surface_distance needs non-empty clouds".into(),
        ));
    }
    let ta = KdTree::build(&a.points);
    let tb = KdTree::build(&b.points);
    let mut distances = Vec::with_capacity(a.points.len() + b.points.len());
    for &p in &a.points {
        distances.push(tb.nearest_sq(p).sqrt());
    }
    for &p in &b.points {
        distances.push(ta.nearest_sq(p).sqrt());
    }
    let n = distances.len() as f64;
    let mean = distances.iter().sum::<f64>() / n;
    let var = distances.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Dice overlap of two masks on the same grid; two empty masks score 1.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    a.geom.check_same(&b.geom, "dice")?;
    let inter = a
        .values
        .iter()
        .zip(&b.values)
        .filter(|(x, y)| **x && **y)
        .count();
    let total = a.count() + b.count();
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}

/// Mean binary cross-entropy in nats; probabilities are clamped to
/// [1e-7, 1 - 1e-7] before the logs.
pub fn cross_entropy(p: &VoxelGrid, t: &BinaryMask) -> Result<f64> {
    p.geom.check_same(&t.geom, "cross_entropy")?;
    let mut sum = 0.0f64;
    for (&prob, &label) in p.values.iter().zip(&t.values) {
        let q = (prob as f64).clamp(1e-7, 1.0 - 1e-7);
        sum -= if label { q.ln() } else { (1.0 - q).ln() };
    }
    Ok(sum / p.values.len() as f64)
}

/// The clinical deliverable: per-side areas and volumes plus the symmetry
/// metrics between the mirrored, centroid-aligned sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    #[serde(rename = "S_L_mm2")]
    pub s_l_mm2: f64,
    #[serde(rename = "S_R_mm2")]
    pub s_r_mm2: f64,
    #[serde(rename = "Vol_L_mm3")]
    pub vol_l_mm3: f64,
    #[serde(rename = "Vol_R_mm3")]
    pub vol_r_mm3: f64,
    #[serde(rename = "S_LR")]
    pub s_lr: f64,
    #[serde(rename = "H_LR_mm")]
    pub h_lr_mm: f64,
    pub msd_mean_mm: f64,
    pub msd_std_mm: f64,
    pub mirror_plane_x_mm: f64,
    /// Translation applied to the mirrored right mesh to align centroids.
    pub mirror_translation_mm: [f64; 3],
    pub samples: usize,
    pub seed: u64,
}

/// Mirror the right mesh across the plane x = sagittal_x, align centroids,
/// sample both surfaces and fill in the symmetry report. No further
/// registration happens: a rigid fit would erase the asymmetry under study.
pub fn compare_sides(
    left_nv: &TriangleMesh,
    right_nv: &TriangleMesh,
    sagittal_x_mm: f64,
    samples: usize,
    seed: u64,
) -> Result<SymmetryReport> {
    if !left_nv.is_closed() || !right_nv.is_closed() {
        return Err(Error::OpenMesh("compare_sides needs closed meshes".into()));
    }
    let s_l = left_nv.surface_area();
    let s_r = right_nv.surface_area();
    if s_l <= 0.0 || s_r <= 0.0 {
        return Err(Error::EmptySurface(
            "compare_sides needs non-degenerate meshes".into(),
        ));
    }
    let vol_l = left_nv.enclosed_volume()?;
    let vol_r = right_nv.enclosed_volume()?;

    let mut mirrored = right_nv.reflect_x(sagittal_x_mm);
    let cl = left_nv.area_centroid();
    let cm = mirrored.area_centroid();
    let translation = [cl[0] - cm[0], cl[1] - cm[1], cl[2] - cm[2]];
    mirrored.translate(translation);

    let cloud_l = sample_points(left_nv, samples, seed)?;
    let cloud_r = sample_points(&mirrored, samples, seed.wrapping_add(1))?;
    let h_lr = hausdorff(&cloud_l, &cloud_r)?;
    let (msd_mean, msd_std) = mean_surface_distance(&cloud_l, &cloud_r)?;

    Ok(SymmetryReport {
        s_l_mm2: s_l,
        s_r_mm2: s_r,
        vol_l_mm3: vol_l,
        vol_r_mm3: vol_r,
        s_lr: s_l.max(s_r) / s_l.min(s_r),
        h_lr_mm: h_lr,
        msd_mean_mm: msd_mean,
        msd_std_mm: msd_std,
        mirror_plane_x_mm: sagittal_x_mm,
        mirror_translation_mm: translation,
        samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridGeometry;
    use crate::surface::icosphere;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force_hausdorff(a: &PointCloud, b: &PointCloud) -> f64 {
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
    }

    fn random_cloud(n: usize, extent: f64, rng: &mut ChaCha8Rng) -> PointCloud {
        PointCloud {
            points: (0..n)
                .map(|_| {
                    [
                        rng.gen_range(0.0..extent),
                        rng.gen_range(0.0..extent),
                        rng.gen_range(0.0..extent),
                    ]
                })
                .collect(),
        }
    }

    #[test]
    fn identical_clouds_have_zero_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_cloud(100, 10.0, &mut rng);
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        let (m, s) = mean_surface_distance(&a, &a).unwrap();
        assert_eq!((m, s), (0.0, 0.0));
    }

    #[test]
    fn single_pair_is_euclidean_distance() {
        let a = PointCloud {
            points: vec![[0.0, 0.0, 0.0]],
        };
        let b = PointCloud {
            points: vec![[3.0, 4.0, 0.0]],
        };
        assert!((hausdorff(&a, &b).unwrap() - 5.0).abs() < 1e-12);
        let (m, s) = mean_surface_distance(&a, &b).unwrap();
        assert!((m - 5.0).abs() < 1e-12 && s.abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_on_random_clouds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let a = random_cloud(200, 20.0, &mut rng);
            let b = random_cloud(200, 20.0, &mut rng);
            let fast = hausdorff(&a, &b).unwrap();
            let brute = brute_force_hausdorff(&a, &b);
            assert!((fast - brute).abs() <= 1e-9, "{fast} vs {brute}");
        }
    }

    #[test]
    fn hausdorff_metric_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let a = random_cloud(40, 10.0, &mut rng);
            let b = random_cloud(40, 10.0, &mut rng);
            let c = random_cloud(40, 10.0, &mut rng);
            let hab = hausdorff(&a, &b).unwrap();
            let hba = hausdorff(&b, &a).unwrap();
            let hbc = hausdorff(&b, &c).unwrap();
            let hac = hausdorff(&a, &c).unwrap();
            assert!((hab - hba).abs() < 1e-12, "symmetry");
            assert!(hab >= 0.0);
            assert!(hac <= hab + hbc + 1e-9, "triangle inequality");
        }
    }

    #[test]
    fn rigid_transform_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_cloud(150, 10.0, &mut rng);
        let b = random_cloud(150, 10.0, &mut rng);
        let h0 = hausdorff(&a, &b).unwrap();
        let (m0, s0) = mean_surface_distance(&a, &b).unwrap();
        // rotation around z by 30 degrees plus a translation
        let (sin, cos) = (30f64.to_radians().sin(), 30f64.to_radians().cos());
        let transform = |p: &[f64; 3]| {
            [
                cos * p[0] - sin * p[1] + 4.0,
                sin * p[0] + cos * p[1] - 2.0,
                p[2] + 7.0,
            ]
        };
        let at = PointCloud {
            points: a.points.iter().map(transform).collect(),
        };
        let bt = PointCloud {
            points: b.points.iter().map(transform).collect(),
        };
        let h1 = hausdorff(&at, &bt).unwrap();
        let (m1, s1) = mean_surface_distance(&at, &bt).unwrap();
        assert!((h0 - h1).abs() < 1e-9);
        assert!((m0 - m1).abs() < 1e-9 && (s0 - s1).abs() < 1e-9);
    }

    #[test]
    fn parallel_planes_have_plane_distance() {
        // dense samples of two parallel planes 2 mm apart
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 10_000;
        let mut plane = |z: f64| PointCloud {
            points: (0..n)
                .map(|_| [rng.gen_range(0.0..50.0), rng.gen_range(0.0..50.0), z])
                .collect(),
        };
        let a = plane(0.0);
        let b = plane(2.0);
        let (mean, _) = mean_surface_distance(&a, &b).unwrap();
        assert!((mean - 2.0).abs() / 2.0 < 0.05, "mean {mean}");
    }

    #[test]
    fn dice_cases() {
        let g = GridGeometry::new([4, 4, 4], [1.0; 3], [0.0; 3]).unwrap();
        let mut a = BinaryMask::empty(g);
        let mut b = BinaryMask::empty(g);
        assert_eq!(dice(&a, &b).unwrap(), 1.0);
        for i in 0..10 {
            a.values[i] = true;
        }
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        for i in 10..20 {
            b.values[i] = true;
        }
        assert_eq!(dice(&a, &b).unwrap(), 0.0);
        // |a| = |c| = 10, overlap 5
        let mut c = BinaryMask::empty(g);
        for i in 5..15 {
            c.values[i] = true;
        }
        assert_eq!(dice(&a, &c).unwrap(), 0.5);
        assert_eq!(dice(&c, &a).unwrap(), 0.5);
        let other = GridGeometry::new([4, 4, 2], [1.0; 3], [0.0; 3]).unwrap();
        assert!(dice(&a, &BinaryMask::empty(other)).is_err());
    }

    #[test]
    fn cross_entropy_closed_forms() {
        let g = GridGeometry::new([10, 10, 1], [1.0; 3], [0.0; 3]).unwrap();
        // p == t after clamping
        let mut t = BinaryMask::empty(g);
        for i in 0..50 {
            t.values[i] = true;
        }
        let p_exact = VoxelGrid::new(
            g,
            t.values
                .iter()
                .map(|&v| if v { 1.0 } else { 0.0 })
                .collect(),
        )
        .unwrap();
        assert!(cross_entropy(&p_exact, &t).unwrap() <= 1e-6);

        // p = 0.5 everywhere: ln 2
        let p_half = VoxelGrid::new(g, vec![0.5; 100]).unwrap();
        let ce = cross_entropy(&p_half, &t).unwrap();
        assert!((ce - std::f64::consts::LN_2).abs() < 1e-9);

        // balanced mask, p = 0.9 on true and 0.1 on false: -ln 0.9
        let p_skew = VoxelGrid::new(
            g,
            t.values
                .iter()
                .map(|&v| if v { 0.9 } else { 0.1 })
                .collect(),
        )
        .unwrap();
        let ce = cross_entropy(&p_skew, &t).unwrap();
        assert!((ce + 0.9f64.ln()).abs() < 1e-6, "ce {ce}");
    }

    #[test]
    fn mirrored_meshes_report_unit_ratio() {
        let left = {
            let mut m = icosphere(5.0, 3);
            m.translate([-20.0, 3.0, 1.0]);
            m
        };
        let right = left.reflect_x(0.0);
        let report = compare_sides(&left, &right, 0.0, 5000, 11).unwrap();
        assert!((report.s_lr - 1.0).abs() < 1e-9, "S_LR {}", report.s_lr);
        // sampling-limited Hausdorff: under 2x the mean sampling gap
        let gap = (report.s_l_mm2 / 5000.0).sqrt();
        assert!(
            report.h_lr_mm <= 2.0 * gap,
            "H_LR {} vs gap {gap}",
            report.h_lr_mm
        );
        assert!((report.vol_l_mm3 - report.vol_r_mm3).abs() < 1e-6 * report.vol_l_mm3);
    }

    #[test]
    fn scaled_side_gives_quadratic_area_ratio() {
        let left = {
            let mut m = icosphere(5.0, 3);
            m.translate([-20.0, 0.0, 0.0]);
            m
        };
        let right = {
            let mut m = icosphere(5.0 * 1.08, 3);
            m.translate([20.0, 0.0, 0.0]);
            m
        };
        let report = compare_sides(&left, &right, 0.0, 2000, 3).unwrap();
        let expect = 1.08f64 * 1.08;
        assert!(
            (report.s_lr - expect).abs() < 1e-9,
            "S_LR {} vs {}",
            report.s_lr,
            expect
        );
    }

    #[test]
    fn s_lr_invariant_under_side_swap() {
        let a = icosphere(4.0, 2);
        let b = icosphere(5.0, 2);
        let r1 = compare_sides(&a, &b, 0.0, 1000, 5).unwrap();
        let r2 = compare_sides(&b, &a, 0.0, 1000, 5).unwrap();
        assert!((r1.s_lr - r2.s_lr).abs() < 1e-12);
    }

    #[test]
    fn centroid_alignment_absorbs_translation() {
        let left = icosphere(5.0, 3);
        let mut right = icosphere(5.0, 3);
        right.translate([40.0, -3.0, 8.0]);
        let r1 = compare_sides(&left, &right, 10.0, 4000, 5).unwrap();
        let mut right2 = right.clone();
        right2.translate([5.0, 5.0, 5.0]);
        let r2 = compare_sides(&left, &right2, 10.0, 4000, 5).unwrap();
        assert!(
            (r1.h_lr_mm - r2.h_lr_mm).abs() < 1e-9,
            "{} vs {}",
            r1.h_lr_mm,
            r2.h_lr_mm
        );
    }

    #[test]
    fn report_json_field_names_are_stable() {
        let report = SymmetryReport {
            s_l_mm2: 1.0,
            s_r_mm2: 2.0,
            vol_l_mm3: 3.0,
            vol_r_mm3: 4.0,
            s_lr: 2.0,
            h_lr_mm: 0.5,
            msd_mean_mm: 0.1,
            msd_std_mm: 0.05,
            mirror_plane_x_mm: 80.0,
            mirror_translation_mm: [0.0, 1.0, 2.0],
            samples: 20000,
            seed: 42,
        };
        let json = serde_json::to_value(&report).unwrap();
        for key in [
            "S_L_mm2",
            "S_R_mm2",
            "Vol_L_mm3",
            "Vol_R_mm3",
            "S_LR",
            "H_LR_mm",
            "msd_mean_mm",
            "msd_std_mm",
            "mirror_plane_x_mm",
            "samples",
            "seed",
        ] {
            assert!(json.get(key).is_some(), "missing key {key}");
        }
    }
}
