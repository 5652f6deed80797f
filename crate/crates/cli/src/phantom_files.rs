//! Phantom generation to disk: raw grids for the intensity and both bone
//! masks plus a truth JSON with the analytic volumes and the clip plane.

use negvol_core::inflate::ClipPlane;
use negvol_core::io;
use negvol_core::phantom::{generate, PhantomOutput, PhantomSpec};
use negvol_core::Result;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhantomTruth {
    pub truth_nv_volume_mm3: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth_nv_volume_right_mm3: Option<f64>,
    pub clip_plane: ClipPlane,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sagittal_x_mm: Option<f64>,
    pub spec: PhantomSpec,
}

pub struct PhantomFiles {
    pub intensity_stem: PathBuf,
    pub mc_mask_stem: PathBuf,
    pub tb_mask_stem: PathBuf,
    pub truth_path: PathBuf,
    pub output: PhantomOutput,
}

/// Generate a phantom and write its grids and truth file under `dir`.
pub fn write_phantom(spec: &PhantomSpec, dir: &Path) -> Result<PhantomFiles> {
    let out = generate(spec)?;
    std::fs::create_dir_all(dir)?;
    let intensity_stem = dir.join("intensity");
    let mc_mask_stem = dir.join("mc_mask");
    let tb_mask_stem = dir.join("tb_mask");
    io::write_raw_f32(&intensity_stem, &out.intensity)?;
    io::write_raw_mask(&mc_mask_stem, &out.mc_mask)?;
    io::write_raw_mask(&tb_mask_stem, &out.tb_mask)?;
    let truth = PhantomTruth {
        truth_nv_volume_mm3: out.truth_nv_volume_mm3,
        truth_nv_volume_right_mm3: out.truth_nv_volume_right_mm3,
        clip_plane: out.clip,
        sagittal_x_mm: out.sagittal_x_mm,
        spec: *spec,
    };
    let truth_path = dir.join("truth.json");
    std::fs::write(&truth_path, serde_json::to_string_pretty(&truth).unwrap())?;
    Ok(PhantomFiles {
        intensity_stem,
        mc_mask_stem,
        tb_mask_stem,
        truth_path,
        output: out,
    })
}

/// Phantom spec from a TOML file; missing keys take the defaults.
pub fn read_spec(path: &Path) -> anyhow::Result<PhantomSpec> {
    let text = std::fs::read_to_string(path)?;
    let spec: PhantomSpecFile = toml::from_str(&text)?;
    Ok(spec.into())
}

// serde(default) needs per-field defaults that match PhantomSpec::default
#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PhantomSpecFile {
    kind: negvol_core::phantom::PhantomKind,
    condyle_radius_mm: f64,
    fossa_radius_mm: f64,
    neck_length_mm: f64,
    dims: [usize; 3],
    spacing_mm: f64,
    noise_sigma: f64,
    asymmetry_scale: f64,
    seed: u64,
}

impl Default for PhantomSpecFile {
    fn default() -> Self {
        let d = PhantomSpec::default();
        Self {
            kind: d.kind,
            condyle_radius_mm: d.condyle_radius_mm,
            fossa_radius_mm: d.fossa_radius_mm,
            neck_length_mm: d.neck_length_mm,
            dims: d.dims,
            spacing_mm: d.spacing_mm,
            noise_sigma: d.noise_sigma,
            asymmetry_scale: d.asymmetry_scale,
            seed: d.seed,
        }
    }
}

impl From<PhantomSpecFile> for PhantomSpec {
    fn from(f: PhantomSpecFile) -> Self {
        PhantomSpec {
            kind: f.kind,
            condyle_radius_mm: f.condyle_radius_mm,
            fossa_radius_mm: f.fossa_radius_mm,
            neck_length_mm: f.neck_length_mm,
            dims: f.dims,
            spacing_mm: f.spacing_mm,
            noise_sigma: f.noise_sigma,
            asymmetry_scale: f.asymmetry_scale,
            seed: f.seed,
        }
    }
}
