//! Multi-view fusion: foreshortening correction, adjacent-pair
//! registration, chain composition into the first view's frame and
//! averaging over overlaps.
//!
//! Geometry is planned once on luminance and can be reapplied to other
//! image sets taken from the same camera positions (a deformed state, or
//! color versions of the same views). Each view reaches the panorama in a
//! single resampling: the correction and the chained registration are
//! composed before warping.

mod blend;
mod chain;
mod fiducial;
mod pose;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use blend::{blend_average, Panorama};
pub use chain::{canvas_for, compose_chain, Canvas, MAX_CANVAS_PIXELS};
pub use fiducial::{conversion_coefficient, locate_fiducials};
pub use pose::{foreshortening_correct, pose_homography, read_poses_csv, write_poses_csv, CameraPose};

use crate::error::{Error, Result};
use crate::imgcore::{warp_perspective, GrayImage, Pixel, Raster};
use crate::registration::{
    build_kdtree, detect_features, match_features, ransac_homography, Descriptor, DetectorParams,
    Homography, Keypoint, RansacParams, DEFAULT_RATIO,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegistrationParams {
    pub detector: DetectorParams,
    pub ratio: f64,
    pub ransac: RansacParams,
}

impl Default for RegistrationParams {
    fn default() -> Self {
        Self {
            detector: DetectorParams {
                max_keypoints: Some(4000),
                ..DetectorParams::default()
            },
            ratio: DEFAULT_RATIO,
            ransac: RansacParams::default(),
        }
    }
}

/// Result of registering view `b` onto view `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRegistration {
    /// Maps `b`'s pixels into `a`'s frame.
    pub homography: Homography,
    pub keypoints_a: usize,
    pub keypoints_b: usize,
    pub matches: usize,
    pub inliers: usize,
}

type Features = (Vec<Keypoint>, Vec<Descriptor>);

fn features(img: &GrayImage, p: &DetectorParams) -> Result<Features> {
    Ok(detect_features(img, p)?.into_iter().unzip())
}

fn register_features(a: &Features, b: &Features, p: &RegistrationParams) -> Result<PairRegistration> {
    let tree_a = build_kdtree(&a.1)?;
    let matches = match_features(&tree_a, &b.1, p.ratio);
    let fit = ransac_homography(&matches, &b.0, &a.0, &p.ransac)?;
    Ok(PairRegistration {
        homography: fit.homography,
        keypoints_a: a.0.len(),
        keypoints_b: b.0.len(),
        matches: matches.len(),
        inliers: fit.inliers.len(),
    })
}

/// Detect, match and robustly fit the map from `b` into `a`.
pub fn register_pair(a: &GrayImage, b: &GrayImage, params: &RegistrationParams) -> Result<PairRegistration> {
    let fa = features(a, &params.detector)?;
    let fb = features(b, &params.detector)?;
    register_features(&fa, &fb, params)
}

/// Everything needed to warp a set of views into one panorama.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StitchGeometry {
    pub view_dims: Vec<(usize, usize)>,
    /// Raw view pixels to panorama pixels, correction included.
    pub transforms: Vec<Homography>,
    pub canvas: Canvas,
    /// Per adjacent pair; empty for a single view.
    pub pairs: Vec<PairRegistration>,
}

impl StitchGeometry {
    pub fn width(&self) -> usize {
        self.canvas.width
    }

    pub fn height(&self) -> usize {
        self.canvas.height
    }
}

/// Registers adjacent views (after foreshortening correction when poses
/// are given) and lays out the panorama canvas.
pub fn plan_stitch(
    views: &[GrayImage],
    poses: Option<&[CameraPose]>,
    params: &RegistrationParams,
) -> Result<StitchGeometry> {
    if views.is_empty() {
        return Err(Error::EmptyInput("no views to stitch".into()));
    }
    if let Some(p) = poses {
        if p.len() != views.len() {
            return Err(Error::InvalidParameter(format!(
                "{} poses for {} views",
                p.len(),
                views.len()
            )));
        }
    }
    let corrections: Vec<Homography> = match poses {
        Some(p) => p.iter().map(pose_homography).collect::<Result<_>>()?,
        None => vec![Homography::identity(); views.len()],
    };
    let corrected: Vec<GrayImage> = views
        .par_iter()
        .zip(&corrections)
        .map(|(v, c)| {
            if *c == Homography::identity() {
                Ok(v.clone())
            } else {
                Ok(warp_perspective(v, c, v.width(), v.height())?.image)
            }
        })
        .collect::<Result<_>>()?;
    let feats: Vec<Features> = if views.len() > 1 {
        corrected
            .par_iter()
            .map(|v| features(v, &params.detector))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let pairs: Vec<PairRegistration> = (0..views.len().saturating_sub(1))
        .into_par_iter()
        .map(|i| {
            register_features(&feats[i], &feats[i + 1], params).map_err(|e| Error::Registration {
                a: i,
                b: i + 1,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    for (i, p) in pairs.iter().enumerate() {
        log::info!(
            "pair {i}-{}: {} matches, {} inliers",
            i + 1,
            p.matches,
            p.inliers
        );
    }
    let pairwise: Vec<Homography> = pairs.iter().map(|p| p.homography).collect();
    let chain = compose_chain(&pairwise)?;
    let to_frame: Vec<Homography> = chain
        .iter()
        .zip(&corrections)
        .map(|(t, c)| t.compose(c))
        .collect::<Result<_>>()?;
    let view_dims: Vec<(usize, usize)> = views.iter().map(|v| v.dims()).collect();
    let canvas = canvas_for(&to_frame, &view_dims)?;
    let shift = Homography::translation(canvas.offset_x, canvas.offset_y);
    let transforms = to_frame
        .iter()
        .map(|t| shift.compose(t))
        .collect::<Result<_>>()?;
    Ok(StitchGeometry {
        view_dims,
        transforms,
        canvas,
        pairs,
    })
}

/// Warps `views` with previously planned geometry and averages them.
pub fn apply_stitch<T: Pixel>(views: &[Raster<T>], geometry: &StitchGeometry) -> Result<Panorama<T>> {
    if views.len() != geometry.transforms.len() {
        return Err(Error::InvalidParameter(format!(
            "geometry covers {} views, got {}",
            geometry.transforms.len(),
            views.len()
        )));
    }
    for (i, (v, d)) in views.iter().zip(&geometry.view_dims).enumerate() {
        if v.dims() != *d {
            return Err(Error::InvalidParameter(format!(
                "view {i} is {:?}, geometry expects {d:?}",
                v.dims()
            )));
        }
    }
    let warped = views
        .iter()
        .zip(&geometry.transforms)
        .map(|(v, h)| warp_perspective(v, h, geometry.width(), geometry.height()))
        .collect::<Result<Vec<_>>>()?;
    let mut pano = blend_average(&warped)?;
    pano.transforms = geometry.transforms.clone();
    Ok(pano)
}

/// Plans on luminance and fuses `views` in one call.
pub fn stitch_all<T: Pixel>(
    views: &[Raster<T>],
    poses: Option<&[CameraPose]>,
    params: &RegistrationParams,
) -> Result<(Panorama<T>, StitchGeometry)> {
    let gray: Vec<GrayImage> = views.iter().map(|v| v.map(|p| p.luminance())).collect();
    let geometry = plan_stitch(&gray, poses, params)?;
    Ok((apply_stitch(views, &geometry)?, geometry))
}

pub fn save_geometry(path: impl AsRef<Path>, g: &StitchGeometry) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(g)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_geometry(path: impl AsRef<Path>) -> Result<StitchGeometry> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::PixelCoord;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spots: Vec<(f64, f64, f64, f64)> = (0..w * h / 300)
            .map(|_| {
                (
                    rng.random_range(0.0..w as f64),
                    rng.random_range(0.0..h as f64),
                    rng.random_range(1.5..5.0),
                    rng.random_range(-0.4..0.4),
                )
            })
            .collect();
        let mut img = GrayImage::new(w, h, 0.5);
        for &(cx, cy, s, a) in &spots {
            let r = (3.0 * s) as isize;
            for y in (cy as isize - r).max(0)..(cy as isize + r).min(h as isize) {
                for x in (cx as isize - r).max(0)..(cx as isize + r).min(w as isize) {
                    let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                    let v = img.get(x as usize, y as usize) + a * (-d2 / (2.0 * s * s)).exp();
                    img.set(x as usize, y as usize, v);
                }
            }
        }
        img.map(|v| v.clamp(0.0, 1.0))
    }

    #[test]
    fn self_registration_is_identity() {
        let a = blobs(200, 160, 1);
        let r = register_pair(&a, &a, &RegistrationParams::default()).unwrap();
        let m = r.homography.matrix() - Homography::identity().matrix();
        assert!(m.abs().max() < 1e-3, "{:?}", r.homography);
    }

    #[test]
    fn translated_pair_recovered() {
        let master = blobs(500, 200, 2);
        let a = master.crop(0, 0, 330, 200).unwrap();
        let b = master.crop(200, 0, 300, 200).unwrap();
        let r = register_pair(&a, &b, &RegistrationParams::default()).unwrap();
        for c in [(0.0, 0.0), (129.0, 199.0)] {
            let p = r.homography.apply(PixelCoord::new(c.0, c.1)).unwrap();
            assert!(p.dist(PixelCoord::new(c.0 + 200.0, c.1)) < 0.5, "{p:?}");
        }
    }

    #[test]
    fn single_view_is_identity_stitch() {
        let a = blobs(120, 90, 4);
        let (p, g) = stitch_all(std::slice::from_ref(&a), None, &RegistrationParams::default()).unwrap();
        assert_eq!(p.image, a);
        assert!(g.pairs.is_empty());
        assert_eq!(g.transforms, vec![Homography::identity()]);
    }

    #[test]
    fn featureless_pair_reports_index() {
        let flat = GrayImage::new(100, 100, 0.5);
        let a = blobs(100, 100, 5);
        let err = plan_stitch(&[a, flat], None, &RegistrationParams::default()).unwrap_err();
        assert!(matches!(err, Error::Registration { a: 0, b: 1, .. }), "{err}");
    }

    #[test]
    fn geometry_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = StitchGeometry {
            view_dims: vec![(10, 8)],
            transforms: vec![Homography::translation(1.0, 2.0)],
            canvas: Canvas {
                offset_x: 1.0,
                offset_y: 2.0,
                width: 11,
                height: 10,
            },
            pairs: vec![],
        };
        let p = dir.path().join("t.json");
        save_geometry(&p, &g).unwrap();
        assert_eq!(load_geometry(&p).unwrap(), g);
    }
}
