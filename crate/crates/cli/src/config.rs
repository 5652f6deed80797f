//! Pipeline configuration: a single TOML document with every knob embedded.
//! `negvol config init` dumps the defaults.

use anyhow::{bail, Context};
use negvol_core::inflate::InflationConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub inputs: Inputs,
    pub voi: VoiConfig,
    pub enhancement: EnhancementConfig,
    pub inflation: InflationConfig,
    pub clip: ClipConfig,
    pub surface: SurfaceConfig,
    pub metrics: MetricsConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    /// Raw-grid stem of the intensity volume (needed by `segment` sides).
    pub intensity: Option<PathBuf>,
    /// Raw-grid stem of an externally produced joint probability map used
    /// for localization instead of intensity thresholding.
    pub probability_map: Option<PathBuf>,
    /// Grid spacing for voxelizing mesh inputs, mm.
    pub mesh_grid_spacing_mm: f64,
    /// Padding around mesh inputs when building their grid, mm.
    pub mesh_grid_margin_mm: f64,
    /// Process the right joint in an x-mirrored frame so both sides run in
    /// the same anatomical orientation.
    pub mirror_right: bool,
    pub left: SideSource,
    pub right: SideSource,
}

/// Exactly one bone-geometry source per side: masks, meshes, or the
/// segment-from-intensity flag.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SideSource {
    pub mc_mask: Option<PathBuf>,
    pub tb_mask: Option<PathBuf>,
    pub mc_mesh: Option<PathBuf>,
    pub tb_mesh: Option<PathBuf>,
    pub segment: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Masks,
    Meshes,
    Segment,
}

impl SideSource {
    pub fn kind(&self, side: &str) -> anyhow::Result<SourceKind> {
        let masks = self.mc_mask.is_some() || self.tb_mask.is_some();
        let meshes = self.mc_mesh.is_some() || self.tb_mesh.is_some();
        let picked = [masks, meshes, self.segment].iter().filter(|&&b| b).count();
        if picked != 1 {
            bail!(
                "inputs.{side}: exactly one bone source required (masks, meshes, or segment), found {picked}"
            );
        }
        if masks && (self.mc_mask.is_none() || self.tb_mask.is_none()) {
            bail!("inputs.{side}: mask source needs both mc_mask and tb_mask");
        }
        if meshes && (self.mc_mesh.is_none() || self.tb_mesh.is_none()) {
            bail!("inputs.{side}: mesh source needs both mc_mesh and tb_mesh");
        }
        Ok(if masks {
            SourceKind::Masks
        } else if meshes {
            SourceKind::Meshes
        } else {
            SourceKind::Segment
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoiConfig {
    pub margin_voxels: usize,
    pub min_component_voxels: usize,
    pub histogram_bins: usize,
    /// Fixed bone threshold on normalized intensities; the minimum method
    /// runs when absent.
    pub bone_threshold: Option<f64>,
    /// Run localization on a bicubic-downsampled copy of this size; the
    /// boxes scale back onto the source grid before cropping.
    pub localization_dims: Option<[usize; 3]>,
}

impl Default for VoiConfig {
    fn default() -> Self {
        Self {
            margin_voxels: negvol_core::voi::DEFAULT_MARGIN_VOXELS,
            min_component_voxels: negvol_core::voi::DEFAULT_MIN_COMPONENT_VOXELS,
            histogram_bins: 64,
            bone_threshold: None,
            localization_dims: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnhancementConfig {
    pub enabled: bool,
    pub median_radius: usize,
    pub close_radius: u32,
    pub open_radius: u32,
    pub canny_sigma_mm: f64,
    pub canny_low: f64,
    pub canny_high: f64,
    /// Edge voxels fuse into the confining mask only within this dilation
    /// of it, keeping the moving bone's own edges out.
    pub edge_gate_dilate: u32,
    /// Safety margin carved around the moving bone after fusion.
    pub mc_guard_dilate: u32,
}

impl Default for EnhancementConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            median_radius: 1,
            close_radius: 1,
            open_radius: 1,
            canny_sigma_mm: 0.8,
            canny_low: 0.1,
            canny_high: 0.3,
            edge_gate_dilate: 2,
            mc_guard_dilate: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ClipConfig {
    /// Derive the plane from the condylar-neck minimum cross-section.
    pub auto: bool,
    pub left: Option<PlaneConfig>,
    pub right: Option<PlaneConfig>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PlaneConfig {
    pub point: [f64; 3],
    pub normal: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceConfig {
    pub iso: f64,
    pub smooth_sigma_voxels: f64,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self {
            iso: 0.5,
            smooth_sigma_voxels: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub samples: usize,
    pub seed: u64,
    /// Mirror plane; the x center of the input grid when absent.
    pub sagittal_x_mm: Option<f64>,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            samples: 20_000,
            seed: 42,
            sagittal_x_mm: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("negvol_out"),
        }
    }
}

impl Default for Inputs {
    fn default() -> Self {
        Self {
            intensity: None,
            probability_map: None,
            mesh_grid_spacing_mm: 0.4,
            mesh_grid_margin_mm: 4.0,
            mirror_right: true,
            left: SideSource {
                segment: true,
                ..Default::default()
            },
            right: SideSource {
                segment: true,
                ..Default::default()
            },
        }
    }
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: PipelineConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn default_toml() -> String {
        let mut cfg = PipelineConfig::default();
        cfg.inputs.intensity = Some(PathBuf::from("intensity"));
        toml::to_string_pretty(&cfg).expect("default config serializes")
    }

    /// Structural validation plus input existence, before any compute.
    pub fn validate(&self, base: &Path) -> anyhow::Result<()> {
        let left = self.inputs.left.kind("left")?;
        let right = self.inputs.right.kind("right")?;
        for (kind, side) in [(left, "left"), (right, "right")] {
            if kind == SourceKind::Segment
                && self.inputs.intensity.is_none()
                && self.inputs.probability_map.is_none()
            {
                bail!("inputs.{side}: segment=true needs inputs.intensity (or a probability_map plus intensity)");
            }
        }
        let mut required: Vec<&PathBuf> = Vec::new();
        if matches!(left, SourceKind::Segment) || matches!(right, SourceKind::Segment) {
            if let Some(p) = &self.inputs.intensity {
                required.push(p);
            }
            if let Some(p) = &self.inputs.probability_map {
                required.push(p);
            }
        }
        for (side, src) in [("left", &self.inputs.left), ("right", &self.inputs.right)] {
            let _ = side;
            for p in [&src.mc_mask, &src.tb_mask].into_iter().flatten() {
                required.push(p);
            }
            for p in [&src.mc_mesh, &src.tb_mesh].into_iter().flatten() {
                required.push(p);
            }
        }
        for p in required {
            let resolved = resolve(base, p);
            let found = if resolved.extension().is_some() {
                resolved.exists()
            } else {
                // raw-grid stem: the sidecar must exist
                resolved.with_extension("json").exists()
            };
            if !found {
                bail!("input {} does not exist", resolved.display());
            }
        }
        if !(self.surface.iso > 0.0 && self.surface.iso < 1.0) {
            bail!("surface.iso must be in (0,1)");
        }
        if self.metrics.samples == 0 {
            bail!("metrics.samples must be >= 1");
        }
        Ok(())
    }
}

/// Paths in the config resolve relative to the config file's directory.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips_through_toml() {
        let text = PipelineConfig::default_toml();
        let parsed: PipelineConfig = toml::from_str(&text).unwrap();
        assert_eq!(parsed.metrics.samples, 20_000);
        assert!(parsed.inputs.left.segment);
        assert_eq!(parsed.inflation.step_mm, 0.1);
    }

    #[test]
    fn side_source_must_be_exclusive() {
        let mut s = SideSource {
            segment: true,
            ..Default::default()
        };
        s.mc_mask = Some(PathBuf::from("x"));
        s.tb_mask = Some(PathBuf::from("y"));
        assert!(s.kind("left").is_err());
        s.segment = false;
        assert!(matches!(s.kind("left").unwrap(), SourceKind::Masks));
    }

    #[test]
    fn mask_source_needs_both_bones() {
        let s = SideSource {
            mc_mask: Some(PathBuf::from("mc")),
            ..Default::default()
        };
        assert!(s.kind("right").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<PipelineConfig>("[inflation]\nstep_mmm = 1.0\n");
        assert!(err.is_err());
    }
}
