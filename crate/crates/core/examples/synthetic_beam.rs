//! Renders the textured cantilever, one loaded state and its exact
//! displacement field.
//!
//! cargo run --release --example synthetic_beam [out_dir]

use std::path::PathBuf;

use spanfield::field::write_field_csv;
use spanfield::imgcore::{save_mask, save_rgb};
use spanfield::synth::{analytic_field, load_cases, render_beam, BeamSpec, SceneSpec};

fn main() -> spanfield::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("spanfield/synthetic_beam"));
    std::fs::create_dir_all(&out).map_err(|e| spanfield::Error::io(&out, e))?;

    let scene = SceneSpec::default();
    let beam = BeamSpec::default();
    let (img, mask) = render_beam(&beam, &scene)?;
    save_rgb(&img, out.join("reference.png"))?;
    save_mask(&mask, out.join("mask.png"))?;

    // load that bends the tip down by 20 px
    let loaded = load_cases(&beam, &scene, &[20.0]).remove(0);
    println!("tip load {:.1} N -> tip deflection {:.2} mm", loaded.load, loaded.tip_deflection());
    let (img, _) = render_beam(&loaded, &scene)?;
    save_rgb(&img, out.join("loaded.png"))?;

    let truth = analytic_field(&loaded, &scene, 4)?;
    write_field_csv(&truth.field, out.join("truth_px.csv"))?;
    write_field_csv(&truth.field_mm()?, out.join("truth_mm.csv"))?;
    let vmax = truth.field.v.iter().cloned().fold(0.0, f64::max);
    println!("{} valid samples, max v {vmax:.3} px", truth.field.valid_count());
    println!("wrote {}", out.display());
    Ok(())
}
