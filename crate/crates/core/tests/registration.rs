use spanfield::imgcore::{warp_perspective, GrayImage, PixelCoord};
use spanfield::registration::Homography;
use spanfield::stitch::{register_pair, RegistrationParams};
use spanfield::synth::Speckle;

fn speckle(w: usize, h: usize, seed: u64) -> GrayImage {
    let s = Speckle::new(0.0, 0.0, w as f64, h as f64, 5.0, seed);
    GrayImage::from_fn(w, h, |x, y| 0.15 + 0.7 * s.eval(x as f64, y as f64))
}

/// Rotation by `deg` and scaling by `s` about `(cx, cy)`.
fn similarity(deg: f64, s: f64, cx: f64, cy: f64) -> Homography {
    let (sn, cs) = deg.to_radians().sin_cos();
    let (a, b) = (s * cs, s * sn);
    Homography::from_rows([
        [a, -b, cx - a * cx + b * cy],
        [b, a, cy - b * cx - a * cy],
        [0.0, 0.0, 1.0],
    ])
    .unwrap()
}

fn check_recovery(deg: f64, scale: f64) {
    let (w, h) = (360, 280);
    let a = speckle(w, h, 3);
    let truth = similarity(deg, scale, w as f64 / 2.0, h as f64 / 2.0);
    let b = warp_perspective(&a, &truth, w, h).unwrap().image;
    let reg = register_pair(&a, &b, &RegistrationParams::default()).unwrap();
    assert!(reg.inliers >= 20, "{deg} deg x{scale}: {} inliers", reg.inliers);
    let back = truth.inverse().unwrap();
    for (x, y) in [(120.0, 100.0), (240.0, 100.0), (120.0, 180.0), (240.0, 180.0), (180.0, 140.0)] {
        let q = PixelCoord::new(x, y);
        let err = reg.homography.apply(q).unwrap().dist(back.apply(q).unwrap());
        assert!(err < 0.5, "{deg} deg x{scale}: transfer error {err} at {q:?}");
    }
}

#[test]
fn rotated_copy_is_registered() {
    check_recovery(25.0, 1.0);
    check_recovery(-60.0, 1.0);
}

#[test]
fn scaled_copy_is_registered() {
    check_recovery(0.0, 1.4);
    check_recovery(10.0, 0.75);
}

#[test]
fn unrelated_images_fail_cleanly() {
    let a = speckle(200, 160, 1);
    let b = GrayImage::new(200, 160, 0.5);
    assert!(register_pair(&a, &b, &RegistrationParams::default()).is_err());
}
