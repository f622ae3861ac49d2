use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Element, ElementKind, GridSpec, Mesh};
use crate::error::{Error, Result};
use crate::imgcore::{GrayImage, PixelCoord, RgbImage};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshFile {
    width: usize,
    height: usize,
    grid: GridSpec,
    nodes: Vec<[f64; 2]>,
    elements: Vec<Element>,
    interior: Vec<bool>,
    #[serde(default)]
    dropped_cells: Vec<(usize, usize)>,
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let file = MeshFile {
        width: mesh.width,
        height: mesh.height,
        grid: mesh.grid,
        nodes: mesh.nodes.iter().map(|p| [p.x, p.y]).collect(),
        elements: mesh.elements.clone(),
        interior: mesh.interior.clone(),
        dropped_cells: mesh.dropped_cells.clone(),
    };
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(&file)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let f: MeshFile = serde_json::from_str(&text)?;
    if f.interior.len() != f.elements.len() {
        return Err(Error::InvalidParameter("interior flags do not match elements".into()));
    }
    for e in &f.elements {
        let want = match e.kind {
            ElementKind::Rect4 => 4,
            ElementKind::Tri3 => 3,
        };
        if e.ids.len() != want || e.ids.iter().any(|&i| i >= f.nodes.len()) {
            return Err(Error::InvalidParameter(format!("malformed element {e:?}")));
        }
    }
    Ok(Mesh {
        nodes: f.nodes.iter().map(|p| PixelCoord::new(p[0], p[1])).collect(),
        elements: f.elements,
        interior: f.interior,
        grid: f.grid,
        width: f.width,
        height: f.height,
        dropped_cells: f.dropped_cells,
    })
}

fn draw_line(img: &mut RgbImage, a: PixelCoord, b: PixelCoord, color: [f64; 3]) {
    let steps = (a.dist(b).ceil() as usize).max(1);
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let x = (a.x + (b.x - a.x) * t).round() as isize;
        let y = (a.y + (b.y - a.y) * t).round() as isize;
        if x >= 0 && y >= 0 && (x as usize) < img.width() && (y as usize) < img.height() {
            img.set(x as usize, y as usize, color);
        }
    }
}

/// Mesh edges drawn over the image: rectangles in red, triangles in green,
/// nodes in yellow.
pub fn render_overlay(background: &GrayImage, mesh: &Mesh) -> RgbImage {
    let mut img = background.map(|v| [v, v, v]);
    for e in &mesh.elements {
        let pts = mesh.element_points(e);
        let color = match e.kind {
            ElementKind::Rect4 => [1.0, 0.1, 0.1],
            ElementKind::Tri3 => [0.1, 0.9, 0.2],
        };
        for i in 0..pts.len() {
            draw_line(&mut img, pts[i], pts[(i + 1) % pts.len()], color);
        }
    }
    for p in &mesh.nodes {
        draw_line(&mut img, *p, *p, [1.0, 0.9, 0.0]);
    }
    img
}
