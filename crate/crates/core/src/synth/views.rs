use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{bilinear_sample, Pixel, PixelCoord, Raster};
use crate::registration::Homography;
use crate::stitch::{pose_homography, CameraPose};

/// Horizontal crop boxes for slicing a panorama.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewLayout {
    pub view_width: usize,
    pub height: usize,
    /// Left edge of each crop in panorama pixels.
    pub offsets: Vec<usize>,
}

/// `n` equal-width crops spaced evenly so that adjacent crops share about
/// `overlap` of their width and the last one ends at the panorama edge.
pub fn view_layout(width: usize, height: usize, n: usize, overlap: f64) -> Result<ViewLayout> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one view".into()));
    }
    if !(overlap > 0.1 && overlap < 0.9) {
        return Err(Error::InvalidParameter(format!("overlap {overlap} outside (0.1, 0.9)")));
    }
    if n == 1 {
        return Ok(ViewLayout {
            view_width: width,
            height,
            offsets: vec![0],
        });
    }
    let view_width = (width as f64 / (n as f64 - (n - 1) as f64 * overlap)).ceil() as usize;
    let step = (width.saturating_sub(view_width)) as f64 / (n - 1) as f64;
    if view_width > width || view_width < 32 || step < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "cannot cut {n} views with overlap {overlap} from width {width}"
        )));
    }
    Ok(ViewLayout {
        view_width,
        height,
        offsets: (0..n).map(|i| (i as f64 * step).round() as usize).collect(),
    })
}

/// Cuts `n` overlapping views. With distortion `D_i`, view pixel `q` shows
/// the panorama at `offset_i + D_i⁻¹·q`, as if the camera were rotated;
/// content from outside the panorama is black. An empty `distortions`
/// slice means no distortion.
pub fn slice_views<T: Pixel>(
    panorama: &Raster<T>,
    n: usize,
    overlap: f64,
    distortions: &[Homography],
) -> Result<Vec<Raster<T>>> {
    let lay = view_layout(panorama.width(), panorama.height(), n, overlap)?;
    if !distortions.is_empty() && distortions.len() != n {
        return Err(Error::InvalidParameter(format!(
            "{} distortions for {n} views",
            distortions.len()
        )));
    }
    lay.offsets
        .par_iter()
        .enumerate()
        .map(|(i, &ox)| {
            let crop = panorama.crop(ox, 0, lay.view_width, lay.height)?;
            let Some(d) = distortions.get(i).filter(|d| **d != Homography::identity()) else {
                return Ok(crop);
            };
            let inv = d.inverse()?;
            Ok(Raster::from_fn(lay.view_width, lay.height, |x, y| {
                inv.apply(PixelCoord::new(x as f64, y as f64))
                    .and_then(|p| bilinear_sample(panorama, PixelCoord::new(p.x + ox as f64, p.y)))
                    .unwrap_or_default()
            }))
        })
        .collect()
}

/// Random small camera rotations (yaw and pitch within the given bounds,
/// roll within a quarter of the pitch bound) about each view's center.
pub fn synthetic_poses(
    n: usize,
    view_width: usize,
    view_height: usize,
    focal: f64,
    max_yaw_deg: f64,
    max_pitch_deg: f64,
    seed: u64,
) -> Vec<CameraPose> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |m: f64| if m > 0.0 { rng.random_range(-m..m).to_radians() } else { 0.0 };
    (0..n)
        .map(|_| {
            let mut p = CameraPose::fronto(focal, view_width, view_height);
            let pitch = draw(max_pitch_deg);
            let yaw = draw(max_yaw_deg);
            let roll = draw(max_pitch_deg / 4.0);
            p.rotation = [pitch, yaw, roll];
            p
        })
        .collect()
}

/// The view distortion a camera at `pose` introduces: the inverse of its
/// foreshortening correction.
pub fn pose_distortion(pose: &CameraPose) -> Result<Homography> {
    pose_homography(pose)?.inverse()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::GrayImage;

    fn ramp(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| ((x * 13 + y * 7) % 97) as f64 / 96.0)
    }

    #[test]
    fn single_view_is_whole() {
        let img = ramp(100, 40);
        let v = slice_views(&img, 1, 0.3, &[]).unwrap();
        assert_eq!(v, vec![img]);
    }

    #[test]
    fn four_views_bounds() {
        let lay = view_layout(2000, 600, 4, 0.3).unwrap();
        // 2000 / (4 - 0.9) = 645.16
        assert_eq!(lay.view_width, 646);
        assert_eq!(lay.offsets, vec![0, 451, 903, 1354]);
        assert_eq!(lay.offsets[3] + lay.view_width, 2000);
        let img = ramp(2000, 60);
        let views = slice_views(&img, 4, 0.3, &[]).unwrap();
        assert_eq!(views[2].get(0, 5), img.get(903, 5));
        assert_eq!(views[3].get(645, 59), img.get(1999, 59));
    }

    #[test]
    fn impossible_slicing() {
        assert!(view_layout(100, 50, 4, 0.95).is_err());
        assert!(view_layout(100, 50, 200, 0.5).is_err());
        assert!(view_layout(100, 50, 0, 0.5).is_err());
        let img = ramp(300, 40);
        assert!(slice_views(&img, 3, 0.3, &[Homography::identity()]).is_err());
    }

    #[test]
    fn distortion_undone_by_pose_correction() {
        let img = ramp(600, 200);
        let poses = synthetic_poses(2, 400, 200, 900.0, 2.0, 1.0, 5);
        let d: Vec<Homography> = poses.iter().map(|p| pose_distortion(p).unwrap()).collect();
        let views = slice_views(&img, 2, 0.5, &d).unwrap();
        let lay = view_layout(600, 200, 2, 0.5).unwrap();
        let h = pose_homography(&poses[1]).unwrap();
        // a view pixel maps back to the panorama pixel the correction says
        let q = PixelCoord::new(200.0, 100.0);
        let back = d[1].inverse().unwrap().apply(q).unwrap();
        let expect = bilinear_sample(&img, PixelCoord::new(back.x + lay.offsets[1] as f64, back.y)).unwrap();
        assert_eq!(views[1].get(200, 100), expect);
        let corrected = h.apply(q).unwrap();
        assert!(corrected.dist(back) < 1e-9);
    }

    #[test]
    fn poses_are_seeded() {
        let a = synthetic_poses(3, 100, 100, 1000.0, 2.0, 1.0, 1);
        assert_eq!(a, synthetic_poses(3, 100, 100, 1000.0, 2.0, 1.0, 1));
        assert_ne!(a, synthetic_poses(3, 100, 100, 1000.0, 2.0, 1.0, 2));
        for p in &a {
            assert!(p.rotation[1].abs() <= 2f64.to_radians());
        }
    }
}
