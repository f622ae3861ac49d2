//! Slices the scene into four views seen from slightly rotated cameras,
//! then corrects, registers and blends them back into one panorama.
//!
//! cargo run --release --example stitch_views [out_dir]

use std::path::PathBuf;

use spanfield::imgcore::{save_gray, save_mask, to_grayscale};
use spanfield::registration::Homography;
use spanfield::stitch::{save_geometry, stitch_all, RegistrationParams};
use spanfield::synth::{pose_distortion, render_beam, slice_views, synthetic_poses, view_layout, BeamSpec, SceneSpec};

fn main() -> spanfield::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("spanfield/stitch_views"));
    std::fs::create_dir_all(&out).map_err(|e| spanfield::Error::io(&out, e))?;

    let scene = SceneSpec::default();
    let (img, _) = render_beam(&BeamSpec::default(), &scene)?;
    let gray = to_grayscale(&img);
    let lay = view_layout(scene.width, scene.height, 4, 0.3)?;
    let poses = synthetic_poses(4, lay.view_width, scene.height, 1200.0, 2.0, 1.0, 11);
    let distortions = poses.iter().map(pose_distortion).collect::<spanfield::Result<Vec<Homography>>>()?;
    let views = slice_views(&gray, 4, 0.3, &distortions)?;
    for (i, v) in views.iter().enumerate() {
        save_gray(v, out.join(format!("view_{i}.png")))?;
    }

    let (pano, geometry) = stitch_all(&views, Some(&poses), &RegistrationParams::default())?;
    for (i, p) in geometry.pairs.iter().enumerate() {
        println!("pair {i}-{}: {} matches, {} inliers", i + 1, p.matches, p.inliers);
    }
    println!(
        "canvas {}x{}, offset ({}, {})",
        geometry.width(),
        geometry.height(),
        geometry.canvas.offset_x,
        geometry.canvas.offset_y
    );
    save_gray(&pano.image, out.join("panorama.png"))?;
    save_mask(&pano.validity, out.join("validity.png"))?;
    save_geometry(out.join("transforms.json"), &geometry)?;
    println!("wrote {}", out.display());
    Ok(())
}
