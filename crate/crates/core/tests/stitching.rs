use spanfield::imgcore::{GrayImage, PixelCoord};
use spanfield::registration::Homography;
use spanfield::stitch::{apply_stitch, stitch_all, RegistrationParams};
use spanfield::synth::{pose_distortion, slice_views, synthetic_poses, view_layout, Speckle};

fn master(w: usize, h: usize) -> GrayImage {
    let s = Speckle::new(0.0, 0.0, w as f64, h as f64, 6.0, 21);
    GrayImage::from_fn(w, h, |x, y| 0.2 + 0.6 * s.eval(x as f64, y as f64) + 0.1 * x as f64 / w as f64)
}

#[test]
fn undistorted_views_chain_to_their_offsets() {
    let img = master(1200, 320);
    let lay = view_layout(1200, 320, 3, 0.35).unwrap();
    let views = slice_views(&img, 3, 0.35, &[]).unwrap();
    let (pano, geom) = stitch_all(&views, None, &RegistrationParams::default()).unwrap();
    for (t, &off) in geom.transforms.iter().zip(&lay.offsets) {
        let p = t.apply(PixelCoord::new(100.0, 100.0)).unwrap();
        let want = PixelCoord::new(100.0 + off as f64 + geom.canvas.offset_x, 100.0 + geom.canvas.offset_y);
        assert!(p.dist(want) < 0.1, "{p:?} vs {want:?}");
    }
    assert!((pano.image.width() as isize - 1200).abs() <= 2);
}

#[test]
fn distorted_views_restitch_to_the_master() {
    let (w, h) = (1400, 400);
    let img = master(w, h);
    let lay = view_layout(w, h, 3, 0.35).unwrap();
    let poses = synthetic_poses(3, lay.view_width, h, 1200.0, 2.0, 1.0, 4);
    let dist: Vec<Homography> = poses.iter().map(|p| pose_distortion(p).unwrap()).collect();
    let views = slice_views(&img, 3, 0.35, &dist).unwrap();
    let (pano, geom) = stitch_all(&views, Some(&poses), &RegistrationParams::default()).unwrap();
    assert!(geom.pairs.iter().all(|p| p.inliers >= 50));

    let off = PixelCoord::new(geom.canvas.offset_x, geom.canvas.offset_y);
    // master rows and columns the views are guaranteed to cover
    let (mut sum, mut n) = (0.0, 0usize);
    for y in 40..h - 40 {
        for x in 10..w - 10 {
            let (px, py) = ((x as f64 + off.x).round() as usize, (y as f64 + off.y).round() as usize);
            if pano.validity.get(px, py) {
                sum += (pano.image.get(px, py) - img.get(x, y)).abs();
                n += 1;
            }
        }
    }
    let mean = sum / n as f64;
    assert!(n > (w - 20) * (h - 80) * 9 / 10, "only {n} pixels covered");
    assert!(mean <= 2.0 / 255.0, "mean absolute error {mean}");
}

#[test]
fn apply_stitch_reuses_geometry_for_another_state() {
    let img = master(1000, 300);
    let views = slice_views(&img, 3, 0.35, &[]).unwrap();
    let (pano, geom) = stitch_all(&views, None, &RegistrationParams::default()).unwrap();
    let again = apply_stitch(&views, &geom).unwrap();
    assert_eq!(again.image, pano.image);
    assert_eq!(again.validity, pano.validity);
}
