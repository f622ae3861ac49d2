//! GrabCut of the beam from a loose rectangle.
//!
//! cargo run --release --example segment_grabcut [out_dir]

use std::path::PathBuf;

use spanfield::imgcore::{mask_and, save_mask};
use spanfield::segment::{grabcut, GrabCutParams, Rect};
use spanfield::synth::{render_beam, BeamLayout, BeamSpec, SceneSpec};

fn main() -> spanfield::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("spanfield/segment_grabcut"));
    std::fs::create_dir_all(&out).map_err(|e| spanfield::Error::io(&out, e))?;

    let scene = SceneSpec::default();
    let beam = BeamSpec::default();
    let (img, truth) = render_beam(&beam, &scene)?;
    let (x0, y0, x1, y1) = BeamLayout::new(&beam, &scene)?.pixel_bounds();
    let rect = Rect {
        x: x0 - 20,
        y: y0 - 20,
        w: x1 - x0 + 41,
        h: y1 - y0 + 41,
    };
    let res = grabcut(&img, rect, &GrabCutParams::default())?;
    for (i, e) in res.energies.iter().enumerate() {
        println!("iteration {i}: energy {e:.1}");
    }
    let inter = mask_and(&res.mask, &truth)?.count() as f64;
    let iou = inter / (res.mask.count() as f64 + truth.count() as f64 - inter);
    println!("foreground {} px, IoU against the rendered beam {iou:.4}", res.mask.count());
    save_mask(&res.mask, out.join("mask.png"))?;
    println!("wrote {}", out.display());
    Ok(())
}
