//! SIFT features, kd-tree ratio matching and RANSAC between two
//! overlapping views of the synthetic beam.
//!
//! cargo run --release --example register_pair

use spanfield::imgcore::{to_grayscale, PixelCoord};
use spanfield::stitch::{register_pair, RegistrationParams};
use spanfield::synth::{render_beam, slice_views, view_layout, BeamSpec, SceneSpec};

fn main() -> spanfield::Result<()> {
    let scene = SceneSpec::default();
    let (img, _) = render_beam(&BeamSpec::default(), &scene)?;
    let gray = to_grayscale(&img);
    let views = slice_views(&gray, 4, 0.3, &[])?;
    let lay = view_layout(scene.width, scene.height, 4, 0.3)?;

    let reg = register_pair(&views[0], &views[1], &RegistrationParams::default())?;
    println!(
        "keypoints {} / {}, ratio-test matches {}, RANSAC inliers {}",
        reg.keypoints_a, reg.keypoints_b, reg.matches, reg.inliers
    );
    for row in reg.homography.rows() {
        println!("  [{:>10.5} {:>10.5} {:>10.3}]", row[0], row[1], row[2]);
    }
    // the second view starts this many panorama pixels to the right
    let shift = (lay.offsets[1] - lay.offsets[0]) as f64;
    let p = reg.homography.apply(PixelCoord::new(100.0, 300.0)).unwrap();
    println!("view 1 (100, 300) -> view 0 ({:.3}, {:.3}); expected ({:.0}, 300)", p.x, p.y, 100.0 + shift);
    Ok(())
}
