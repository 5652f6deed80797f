//! Negative-volume assembly: clip the inflated mesh, voxelize it, subtract
//! both bone masks, keep the largest component, and re-extract a surface.

use super::{clip, ClipPlane};
use crate::error::{Error, Result};
use crate::grid::{largest_component, BinaryMask};
use crate::surface::{extract_surface_opts, voxelize, SurfaceOptions, TriangleMesh};

/// Boolean difference in voxel space. The negative-volume mask is exactly
/// disjoint from both bone masks; the returned mesh is its extracted surface.
pub fn negative_volume(
    inflated: &TriangleMesh,
    mc_mask: &BinaryMask,
    tb_mask: &BinaryMask,
    plane: Option<&ClipPlane>,
) -> Result<(TriangleMesh, BinaryMask)> {
    mc_mask
        .geom
        .check_same(&tb_mask.geom, "negative_volume masks")?;
    let clipped = match plane {
        Some(p) => clip(inflated, p, true)?,
        None => inflated.clone(),
    };
    let occupancy = voxelize(&clipped, &mc_mask.geom)?;
    let nv = occupancy.minus(mc_mask)?.minus(tb_mask)?;
    if nv.is_empty() {
        return Err(Error::DegenerateJoint(
            "negative volume is empty after the boolean difference".into(),
        ));
    }
    let nv = largest_component(&nv);
    let mesh = nv_surface(&nv)?;
    Ok((mesh, nv))
}

/// Surface of a negative-volume mask: smoothed extraction with a raw
/// fallback for volumes too small to survive the smoothing.
pub fn nv_surface(nv: &BinaryMask) -> Result<TriangleMesh> {
    match extract_surface_opts(
        nv,
        &SurfaceOptions {
            iso: 0.5,
            smooth_sigma_voxels: Some(1.0),
        },
    ) {
        Ok(m) => Ok(m),
        Err(Error::EmptySurface(_)) => extract_surface_opts(
            nv,
            &SurfaceOptions {
                iso: 0.5,
                smooth_sigma_voxels: None,
            },
        ),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BinaryMask, GridGeometry};
    use crate::surface::{icosphere, voxelize};

    fn centered_geom(n: usize, s: f64) -> GridGeometry {
        let o = -(n as f64 - 1.0) / 2.0 * s;
        GridGeometry::new([n, n, n], [s; 3], [o, o, o]).unwrap()
    }

    #[test]
    fn self_difference_is_degenerate() {
        let g = centered_geom(32, 0.5);
        let mesh = icosphere(5.0, 3);
        let occ = voxelize(&mesh, &g).unwrap();
        let empty = BinaryMask::empty(g);
        let err = negative_volume(&mesh, &occ, &empty, None);
        assert!(matches!(err, Err(Error::DegenerateJoint(_))));
    }

    #[test]
    fn matches_set_algebra_oracle_with_clip() {
        // tb empty, clip removes half: NV must equal clip(inflated) minus mc
        let g = centered_geom(32, 0.5);
        let inflated = icosphere(6.0, 3);
        let mc_mesh = icosphere(3.0, 3);
        let mc = voxelize(&mc_mesh, &g).unwrap();
        let tb = BinaryMask::empty(g);
        let plane = ClipPlane::new([0.0, 0.0, 0.0], [0.0, 0.0, 1.0]).unwrap();
        let (_, nv) = negative_volume(&inflated, &mc, &tb, Some(&plane)).unwrap();

        let clipped = clip(&inflated, &plane, true).unwrap();
        let oracle = voxelize(&clipped, &g).unwrap().minus(&mc).unwrap();
        let oracle = largest_component(&oracle);
        assert_eq!(nv, oracle);
        assert_eq!(nv.overlap_count(&mc).unwrap(), 0);
    }

    #[test]
    fn concentric_shell_volume_is_accurate() {
        // inflated ball of radius 8 minus a condyle ball of radius 4
        let g = centered_geom(48, 0.4);
        let inflated = icosphere(8.0, 3);
        let mc = voxelize(&icosphere(4.0, 3), &g).unwrap();
        let tb = BinaryMask::empty(g);
        let (mesh, nv) = negative_volume(&inflated, &mc, &tb, None).unwrap();
        assert!(mesh.is_closed());
        let analytic = 4.0 / 3.0 * std::f64::consts::PI * (8f64.powi(3) - 4f64.powi(3));
        let got = nv.volume_mm3();
        assert!(
            (got - analytic).abs() / analytic < 0.05,
            "shell volume {got} vs {analytic}"
        );
        assert_eq!(nv.overlap_count(&mc).unwrap(), 0);
    }
}
