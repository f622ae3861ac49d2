//! Meshes an irregular structure mask: rectangles inside, triangles along
//! the boundary.
//!
//! cargo run --release --example mesh_structure [out_dir]

use std::path::PathBuf;

use spanfield::imgcore::{BinaryMask, GrayImage};
use spanfield::mesh::{mesh_structure, render_overlay, save_mesh, ElementKind, GridSpec};

fn main() -> spanfield::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("spanfield/mesh_structure"));
    std::fs::create_dir_all(&out).map_err(|e| spanfield::Error::io(&out, e))?;

    // an arch: a deck on two piers with a curved soffit
    let (w, h) = (600, 300);
    let mask = BinaryMask::from_fn(w, h, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let deck = (40.0..560.0).contains(&xf) && (40.0..100.0).contains(&yf);
        let below = (40.0..560.0).contains(&xf) && (100.0..260.0).contains(&yf);
        let opening = ((xf - 300.0) / 200.0).powi(2) + ((yf - 260.0) / 150.0).powi(2) < 1.0;
        deck || (below && !opening)
    });
    for cell in [20, 40] {
        let mesh = mesh_structure(&mask, &GridSpec::new(cell))?;
        println!(
            "cell {cell:>2} px: {} nodes, {} rectangles, {} triangles, area {:.0} px2 (mask {} px)",
            mesh.nodes.len(),
            mesh.count(ElementKind::Rect4),
            mesh.count(ElementKind::Tri3),
            mesh.total_area(),
            mask.count()
        );
        let background = GrayImage::from_fn(w, h, |x, y| if mask.get(x, y) { 0.7 } else { 0.2 });
        spanfield::imgcore::save_rgb(&render_overlay(&background, &mesh), out.join(format!("mesh_{cell}.png")))?;
        save_mesh(&mesh, out.join(format!("mesh_{cell}.json")))?;
    }
    println!("wrote {}", out.display());
    Ok(())
}
