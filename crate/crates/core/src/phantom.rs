//! Synthetic joints with closed-form ground truth: concentric spheres, a
//! ball-and-socket with an open fossa and a condylar neck, and mirrored
//! left/right pairs with a controlled asymmetry. The analytic truth volumes
//! come from spherical-cap arithmetic only, independent of any pipeline code.

use crate::error::{Error, Result};
use crate::grid::{BinaryMask, GridGeometry, VoxelGrid};
use crate::inflate::ClipPlane;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Fossa shell thickness; enough voxels at clinical spacing to give the
/// distance field a solid wall.
const SHELL_THICKNESS_MM: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomKind {
    /// Condyle ball inside a closed spherical shell; clip plane inactive.
    ConcentricSpheres,
    /// Ball with a neck cylinder inside a half shell open inferiorly;
    /// clip plane through the joint center.
    BallAndSocket,
    /// Two mirrored ball-and-socket joints, the right one scaled.
    AsymmetricPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub condyle_radius_mm: f64,
    pub fossa_radius_mm: f64,
    pub neck_length_mm: f64,
    pub dims: [usize; 3],
    pub spacing_mm: f64,
    /// Gaussian noise added to the 0/1 intensity, as an intensity fraction.
    pub noise_sigma: f64,
    /// Right-side isotropic scale for `asymmetric_pair`.
    pub asymmetry_scale: f64,
    pub seed: u64,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            kind: PhantomKind::BallAndSocket,
            condyle_radius_mm: 5.0,
            fossa_radius_mm: 12.0,
            neck_length_mm: 8.0,
            dims: [96, 96, 96],
            spacing_mm: 0.4,
            noise_sigma: 0.0,
            asymmetry_scale: 1.0,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhantomOutput {
    pub intensity: VoxelGrid,
    pub mc_mask: BinaryMask,
    pub tb_mask: BinaryMask,
    /// Analytic negative-volume truth (left joint for pair phantoms), mm^3.
    pub truth_nv_volume_mm3: f64,
    /// Right-joint truth for pair phantoms.
    pub truth_nv_volume_right_mm3: Option<f64>,
    pub clip: ClipPlane,
    /// Mirror plane for pair phantoms, world mm.
    pub sagittal_x_mm: Option<f64>,
}

/// Volume of the part of a ball that lies above the plane z = center + offset.
pub fn sphere_volume_above(radius: f64, offset: f64) -> f64 {
    if offset <= -radius {
        return 4.0 / 3.0 * PI * radius.powi(3);
    }
    if offset >= radius {
        return 0.0;
    }
    let h = radius - offset;
    PI * h * h * (3.0 * radius - h) / 3.0
}

/// One joint placed at an index-space center; all tests in index space times
/// spacing so mirrored joints are lattice-exact mirror images.
struct Joint {
    center_idx: [f64; 3],
    condyle_mm: f64,
    fossa_mm: f64,
    neck_len_mm: f64,
}

impl Joint {
    fn shell_outer(&self) -> f64 {
        self.fossa_mm + SHELL_THICKNESS_MM
    }

    fn classify(&self, idx: [f64; 3], s: f64, open_inferiorly: bool) -> (bool, bool) {
        let dx = (idx[0] - self.center_idx[0]) * s;
        let dy = (idx[1] - self.center_idx[1]) * s;
        let dz = (idx[2] - self.center_idx[2]) * s;
        let d = (dx * dx + dy * dy + dz * dz).sqrt();
        let mut mc = d <= self.condyle_mm;
        if open_inferiorly {
            // condylar neck: cylinder hanging below the ball
            let r_neck = 0.5 * self.condyle_mm;
            let below = dz <= 0.0 && dz >= -(self.condyle_mm + self.neck_len_mm);
            if below && (dx * dx + dy * dy).sqrt() <= r_neck {
                mc = true;
            }
        }
        let mut tb = d >= self.fossa_mm && d <= self.shell_outer();
        if open_inferiorly && dz < 0.0 {
            tb = false;
        }
        (mc, tb)
    }
}

fn validate(spec: &PhantomSpec) -> Result<()> {
    if !(spec.condyle_radius_mm > 0.0 && spec.fossa_radius_mm > spec.condyle_radius_mm) {
        return Err(Error::Config(
            "phantom needs 0 < condyle_radius_mm < fossa_radius_mm".into(),
        ));
    }
    if spec.spacing_mm <= 0.0 || spec.dims.iter().any(|&d| d < 8) {
        return Err(Error::Config(
            "phantom needs spacing > 0 and dims >= 8".into(),
        ));
    }
    if spec.noise_sigma < 0.0 || spec.asymmetry_scale <= 0.0 || spec.neck_length_mm < 0.0 {
        return Err(Error::Config(
            "phantom noise/scale/neck parameters out of range".into(),
        ));
    }
    Ok(())
}

fn check_fit(joint: &Joint, s: f64, dims: [usize; 3]) -> Result<()> {
    let reach = joint.shell_outer() / s;
    let down = (joint.condyle_mm + joint.neck_len_mm) / s;
    for a in 0..3 {
        let lo = joint.center_idx[a] - reach.max(if a == 2 { down } else { 0.0 });
        let hi = joint.center_idx[a] + reach;
        if lo < 0.0 || hi > (dims[a] - 1) as f64 {
            return Err(Error::Config(format!(
                "phantom radii do not fit within the grid on axis {a} (needs {lo:.1}..{hi:.1} of 0..{})",
                dims[a] - 1
            )));
        }
    }
    Ok(())
}

/// Generate the phantom grids, masks, clip plane and analytic truth.
pub fn generate(spec: &PhantomSpec) -> Result<PhantomOutput> {
    validate(spec)?;
    let s = spec.spacing_mm;
    let dims = spec.dims;
    let geom = GridGeometry::new(dims, [s; 3], [0.0; 3])?;

    let center = |f: [f64; 3]| -> [f64; 3] {
        [
            (dims[0] - 1) as f64 * f[0],
            (dims[1] - 1) as f64 * f[1],
            (dims[2] - 1) as f64 * f[2],
        ]
    };

    let (joints, open_inferiorly): (Vec<Joint>, bool) = match spec.kind {
        PhantomKind::ConcentricSpheres => (
            vec![Joint {
                center_idx: center([0.5, 0.5, 0.5]),
                condyle_mm: spec.condyle_radius_mm,
                fossa_mm: spec.fossa_radius_mm,
                neck_len_mm: 0.0,
            }],
            false,
        ),
        PhantomKind::BallAndSocket => (
            vec![Joint {
                center_idx: center([0.5, 0.5, 0.5]),
                condyle_mm: spec.condyle_radius_mm,
                fossa_mm: spec.fossa_radius_mm,
                neck_len_mm: spec.neck_length_mm,
            }],
            true,
        ),
        PhantomKind::AsymmetricPair => {
            let left = center([0.25, 0.5, 0.5]);
            let right = [(dims[0] - 1) as f64 - left[0], left[1], left[2]];
            let sc = spec.asymmetry_scale;
            (
                vec![
                    Joint {
                        center_idx: left,
                        condyle_mm: spec.condyle_radius_mm,
                        fossa_mm: spec.fossa_radius_mm,
                        neck_len_mm: spec.neck_length_mm,
                    },
                    Joint {
                        center_idx: right,
                        condyle_mm: spec.condyle_radius_mm * sc,
                        fossa_mm: spec.fossa_radius_mm * sc,
                        neck_len_mm: spec.neck_length_mm * sc,
                    },
                ],
                true,
            )
        }
    };
    for j in &joints {
        check_fit(j, s, dims)?;
    }

    let mut mc = BinaryMask::empty(geom);
    let mut tb = BinaryMask::empty(geom);
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let idx = [x as f64, y as f64, z as f64];
                for j in &joints {
                    let (m, t) = j.classify(idx, s, open_inferiorly);
                    if m {
                        mc.set(x, y, z, true);
                    }
                    if t {
                        tb.set(x, y, z, true);
                    }
                }
            }
        }
    }

    let mut intensity = VoxelGrid::zeros(geom);
    for (v, (&m, &t)) in intensity
        .values
        .iter_mut()
        .zip(mc.values.iter().zip(&tb.values))
    {
        *v = if m || t { 1.0 } else { 0.0 };
    }
    if spec.noise_sigma > 0.0 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(spec.seed);
        let noise = Normal::new(0.0, spec.noise_sigma).unwrap();
        for v in &mut intensity.values {
            *v += noise.sample(&mut rng) as f32;
        }
    }

    // clip plane: through the joint equator for open phantoms, parked below
    // the grid for the closed shell
    let c0 = &joints[0];
    let center_world = [
        c0.center_idx[0] * s,
        c0.center_idx[1] * s,
        c0.center_idx[2] * s,
    ];
    let clip = if open_inferiorly {
        ClipPlane::new(center_world, [0.0, 0.0, -1.0])?
    } else {
        ClipPlane::new(
            [center_world[0], center_world[1], -10.0 * s],
            [0.0, 0.0, -1.0],
        )?
    };

    let truth = |j: &Joint| -> f64 {
        if open_inferiorly {
            sphere_volume_above(j.fossa_mm, 0.0) - sphere_volume_above(j.condyle_mm, 0.0)
        } else {
            4.0 / 3.0 * PI * (j.fossa_mm.powi(3) - j.condyle_mm.powi(3))
        }
    };
    let truth_left = truth(&joints[0]);
    let truth_right = joints.get(1).map(truth);
    let sagittal = match spec.kind {
        PhantomKind::AsymmetricPair => Some((dims[0] - 1) as f64 / 2.0 * s),
        _ => None,
    };

    Ok(PhantomOutput {
        intensity,
        mc_mask: mc,
        tb_mask: tb,
        truth_nv_volume_mm3: truth_left,
        truth_nv_volume_right_mm3: truth_right,
        clip,
        sagittal_x_mm: sagittal,
    })
}
