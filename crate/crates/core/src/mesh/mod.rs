//! Rectangle + triangle meshing of a foreground mask.

mod boundary;
mod grid;
mod io;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use boundary::{signed_area, trace_boundary, tri_signed_area, triangulate, CellClip, ClippedPolygon, MIN_POLYGON_AREA, MIN_POLYGON_THICKNESS};
pub use grid::{classify_cells, full_grid, Cell, CellLabel, GridSpec};
pub use io::{load_mesh, render_overlay, save_mesh};

use crate::error::{Error, Result};
use crate::imgcore::{dilate3x3, BinaryMask, PixelCoord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    Rect4,
    Tri3,
}

/// Node ids are counter-clockwise in the sense of positive shoelace area with
/// x right and y down; Rect4 starts at its (min x, min y) corner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub kind: ElementKind,
    pub ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    /// Node id = index.
    pub nodes: Vec<PixelCoord>,
    pub elements: Vec<Element>,
    /// True for elements from cells lying wholly inside the mask.
    pub interior: Vec<bool>,
    pub grid: GridSpec,
    pub width: usize,
    pub height: usize,
    /// `(col, row)` of boundary cells that produced no element.
    pub dropped_cells: Vec<(usize, usize)>,
}

impl Mesh {
    pub fn element_points(&self, e: &Element) -> Vec<PixelCoord> {
        e.ids.iter().map(|&i| self.nodes[i]).collect()
    }

    pub fn element_area(&self, e: &Element) -> f64 {
        signed_area(&self.element_points(e))
    }

    pub fn total_area(&self) -> f64 {
        self.elements.iter().map(|e| self.element_area(e)).sum()
    }

    pub fn count(&self, kind: ElementKind) -> usize {
        self.elements.iter().filter(|e| e.kind == kind).count()
    }

    /// Node adjacency through shared elements, sorted ids.
    pub fn node_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.elements {
            for &a in &e.ids {
                for &b in &e.ids {
                    if a != b {
                        adj[a].push(b);
                    }
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }
}

/// Merges points closer than 0.5 px; positions live on a quarter-pixel grid.
struct NodeTable {
    nodes: Vec<PixelCoord>,
    index: HashMap<(i64, i64), usize>,
}

impl NodeTable {
    fn key(p: PixelCoord) -> (i64, i64) {
        ((p.x * 4.0).round() as i64, (p.y * 4.0).round() as i64)
    }

    fn insert(&mut self, p: PixelCoord) -> usize {
        let (kx, ky) = Self::key(p);
        for dy in -1..=1 {
            for dx in -1..=1 {
                if let Some(&id) = self.index.get(&(kx + dx, ky + dy)) {
                    if self.nodes[id].dist(p) < 0.5 {
                        return id;
                    }
                }
            }
        }
        let id = self.nodes.len();
        self.nodes.push(p);
        self.index.insert((kx, ky), id);
        id
    }
}

/// Full pipeline: lattice, one 3x3 dilation, cell classification, boundary
/// clipping and fan triangulation, node merging and renumbering.
pub fn mesh_structure(mask: &BinaryMask, spec: &GridSpec) -> Result<Mesh> {
    spec.validate()?;
    let (x0, y0, x1, y1) = mask.bounding_box().ok_or(Error::EmptyForeground)?;
    let short = (x1 - x0 + 1).min(y1 - y0 + 1);
    if spec.cell > short {
        return Err(Error::InvalidParameter(format!(
            "cell size {} exceeds structure extent {short}",
            spec.cell
        )));
    }
    let (width, height) = mask.dims();
    let dilated = dilate3x3(mask);
    let (lattice, cells) = full_grid(width, height, spec);
    let labels = classify_cells(&cells, &dilated);
    let clips: Vec<Option<CellClip>> = cells
        .par_iter()
        .zip(&labels)
        .map(|(c, l)| (*l == CellLabel::Boundary).then(|| trace_boundary(c, &dilated)))
        .collect();

    let mut table = NodeTable {
        nodes: Vec::new(),
        index: HashMap::new(),
    };
    for &p in &lattice {
        table.insert(p);
    }
    let mut elements = Vec::new();
    let mut interior = Vec::new();
    let mut dropped_cells = Vec::new();
    for ((cell, label), clip) in cells.iter().zip(&labels).zip(&clips) {
        match (label, clip) {
            (CellLabel::Inside, _) | (_, Some(CellClip::Full)) => {
                elements.push(Element {
                    kind: ElementKind::Rect4,
                    ids: cell.corners.to_vec(),
                });
                interior.push(*label == CellLabel::Inside);
            }
            (_, Some(CellClip::Polygons(pieces))) => {
                for piece in pieces {
                    for t in boundary::fan_triangles(piece) {
                        let ids: Vec<usize> = t.iter().map(|&p| table.insert(p)).collect();
                        if ids[0] != ids[1] && ids[1] != ids[2] && ids[0] != ids[2] {
                            elements.push(Element {
                                kind: ElementKind::Tri3,
                                ids,
                            });
                            interior.push(false);
                        }
                    }
                }
            }
            (_, Some(CellClip::Dropped(area))) => {
                log::debug!("dropped boundary cell ({}, {}), fragment area {area:.1} px2", cell.col, cell.row);
                dropped_cells.push((cell.col, cell.row));
            }
            _ => {}
        }
    }

    // Keep referenced nodes only; lattice nodes precede boundary nodes.
    let mut used = vec![false; table.nodes.len()];
    for e in &elements {
        for &i in &e.ids {
            used[i] = true;
        }
    }
    let mut remap = vec![usize::MAX; used.len()];
    let mut nodes = Vec::new();
    for (i, &u) in used.iter().enumerate() {
        if u {
            remap[i] = nodes.len();
            nodes.push(table.nodes[i]);
        }
    }
    for e in &mut elements {
        for i in &mut e.ids {
            *i = remap[*i];
        }
    }
    if elements.is_empty() {
        return Err(Error::EmptyForeground);
    }
    if !dropped_cells.is_empty() {
        log::info!("mesh: {} boundary cells dropped as slivers", dropped_cells.len());
    }
    Ok(Mesh {
        nodes,
        elements,
        interior,
        grid: *spec,
        width,
        height,
        dropped_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_mask_rectangles_only() {
        let mask = BinaryMask::new(64, 48, true);
        let m = mesh_structure(&mask, &GridSpec::new(16)).unwrap();
        assert_eq!(m.count(ElementKind::Tri3), 0);
        assert_eq!(m.count(ElementKind::Rect4), 12);
        assert_eq!(m.nodes.len(), 20);
        assert!((m.total_area() - 64.0 * 48.0).abs() < 1e-9);
    }

    #[test]
    fn aligned_rectangle_mask() {
        // after dilation the foreground spans pixels 16..=48 x 16..=32; the
        // half-pixel strips beyond the lattice lines are too thin to keep
        let mask = BinaryMask::from_fn(80, 64, |x, y| (17..=47).contains(&x) && (17..=31).contains(&y));
        let m = mesh_structure(&mask, &GridSpec::new(8)).unwrap();
        assert_eq!(m.count(ElementKind::Tri3), 0);
        // cells between x=16..48 and y=16..32 are fully covered
        assert_eq!(m.count(ElementKind::Rect4), 4 * 2);
    }

    #[test]
    fn empty_mask_is_error() {
        let mask = BinaryMask::new(32, 32, false);
        assert!(matches!(mesh_structure(&mask, &GridSpec::new(8)), Err(Error::EmptyForeground)));
    }

    #[test]
    fn cell_validation() {
        let mask = BinaryMask::from_fn(100, 100, |x, y| x > 10 && x < 40 && y > 10 && y < 80);
        assert!(mesh_structure(&mask, &GridSpec::new(4)).is_err());
        assert!(mesh_structure(&mask, &GridSpec::new(60)).is_err());
        assert!(mesh_structure(&mask, &GridSpec::new(16)).is_ok());
    }

    #[test]
    fn element_nodes_are_distinct_and_positive() {
        let mask = BinaryMask::from_fn(160, 120, |x, y| {
            let (dx, dy) = (x as f64 - 80.0, y as f64 - 60.0);
            dx * dx / 3600.0 + dy * dy / 1600.0 < 1.0
        });
        let m = mesh_structure(&mask, &GridSpec::new(12)).unwrap();
        for e in &m.elements {
            assert!(m.element_area(e) > 0.0);
            let mut ids = e.ids.clone();
            ids.sort_unstable();
            ids.dedup();
            assert_eq!(ids.len(), e.ids.len());
        }
        let want = dilate3x3(&mask).count() as f64;
        assert!((m.total_area() - want).abs() / want < 0.02, "{} vs {want}", m.total_area());
    }
}
