use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, PixelCoord};

/// Square-cell lattice placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Cell edge in pixels.
    pub cell: usize,
    /// Integer-valued lattice origin.
    pub origin: PixelCoord,
}

impl GridSpec {
    pub fn new(cell: usize) -> Self {
        Self {
            cell,
            origin: PixelCoord::new(0.0, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let o = self.origin;
        if self.cell < 8 {
            return Err(Error::InvalidParameter(format!("cell size {} < 8", self.cell)));
        }
        if o.x < 0.0 || o.y < 0.0 || o.x.fract() != 0.0 || o.y.fract() != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "grid origin ({}, {}) must be non-negative integers",
                o.x, o.y
            )));
        }
        Ok(())
    }
}

/// One lattice cell; corner ids index the node list of [`full_grid`] and
/// run (x0,y0), (x1,y0), (x1,y1), (x0,y1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub col: usize,
    pub row: usize,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub corners: [usize; 4],
}

impl Cell {
    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn corner_points(&self) -> [PixelCoord; 4] {
        [
            PixelCoord::new(self.x0, self.y0),
            PixelCoord::new(self.x1, self.y0),
            PixelCoord::new(self.x1, self.y1),
            PixelCoord::new(self.x0, self.y1),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellLabel {
    Inside,
    Boundary,
    Outside,
}

fn axis(origin: f64, cell: usize, extent: usize) -> Vec<f64> {
    let mut v = Vec::new();
    let mut p = origin;
    while p < extent as f64 {
        v.push(p);
        p += cell as f64;
    }
    if !v.is_empty() {
        v.push(extent as f64);
    }
    v
}

/// Node lattice and cells covering `width x height`; the last row and column
/// of cells are clipped to the image extent.
pub fn full_grid(width: usize, height: usize, spec: &GridSpec) -> (Vec<PixelCoord>, Vec<Cell>) {
    let xs = axis(spec.origin.x, spec.cell, width);
    let ys = axis(spec.origin.y, spec.cell, height);
    let nx = xs.len();
    let mut nodes = Vec::with_capacity(nx * ys.len());
    for &y in &ys {
        for &x in &xs {
            nodes.push(PixelCoord::new(x, y));
        }
    }
    let mut cells = Vec::new();
    for r in 0..ys.len().saturating_sub(1) {
        for c in 0..nx.saturating_sub(1) {
            let id = |cc: usize, rr: usize| rr * nx + cc;
            cells.push(Cell {
                col: c,
                row: r,
                x0: xs[c],
                y0: ys[r],
                x1: xs[c + 1],
                y1: ys[r + 1],
                corners: [id(c, r), id(c + 1, r), id(c + 1, r + 1), id(c, r + 1)],
            });
        }
    }
    (nodes, cells)
}

/// Inclusive pixel index range covered by `[a, b]`, clamped to `0..n`.
pub(crate) fn pixel_span(a: f64, b: f64, n: usize) -> std::ops::RangeInclusive<usize> {
    let lo = (a.ceil().max(0.0) as usize).min(n - 1);
    let hi = (b.floor().max(0.0) as usize).min(n - 1);
    lo..=hi
}

fn classify(cell: &Cell, mask: &BinaryMask) -> CellLabel {
    let (w, h) = mask.dims();
    let mut any = false;
    let mut all = true;
    for y in pixel_span(cell.y0, cell.y1, h) {
        for x in pixel_span(cell.x0, cell.x1, w) {
            if mask.get(x, y) {
                any = true;
            } else {
                all = false;
            }
        }
    }
    let corners_in = cell
        .corner_points()
        .iter()
        .all(|p| mask.get_clamped(p.x.round() as isize, p.y.round() as isize));
    if all && corners_in {
        CellLabel::Inside
    } else if !any {
        CellLabel::Outside
    } else {
        CellLabel::Boundary
    }
}

/// Inside: every corner and every pixel under the cell is in the mask.
/// Outside: no pixel under the cell is. Boundary otherwise.
pub fn classify_cells(cells: &[Cell], mask: &BinaryMask) -> Vec<CellLabel> {
    cells.par_iter().map(|c| classify(c, mask)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        let (n, c) = full_grid(100, 100, &GridSpec::new(50));
        assert_eq!(n.len(), 9);
        assert_eq!(c.len(), 4);
        let (_, c) = full_grid(100, 80, &GridSpec::new(50));
        let bottom: Vec<_> = c.iter().filter(|c| c.row == 1).collect();
        assert!(bottom.iter().all(|c| c.y1 - c.y0 == 30.0));
    }

    #[test]
    fn node_count_formula() {
        for (w, h, cell) in [(37, 91, 8), (64, 64, 16), (130, 45, 9), (200, 17, 13)] {
            let (n, _) = full_grid(w, h, &GridSpec::new(cell));
            assert_eq!(n.len(), (w.div_ceil(cell) + 1) * (h.div_ceil(cell) + 1));
        }
    }

    #[test]
    fn trivial_classification() {
        let (_, cells) = full_grid(40, 40, &GridSpec::new(10));
        let all = BinaryMask::new(40, 40, true);
        assert!(classify_cells(&cells, &all).iter().all(|&l| l == CellLabel::Inside));
        let none = BinaryMask::new(40, 40, false);
        assert!(classify_cells(&cells, &none).iter().all(|&l| l == CellLabel::Outside));
    }

    #[test]
    fn half_plane_matches_brute_force() {
        let mask = BinaryMask::from_fn(60, 50, |x, y| 2 * x + y < 70);
        let (_, cells) = full_grid(60, 50, &GridSpec::new(10));
        let labels = classify_cells(&cells, &mask);
        for (cell, label) in cells.iter().zip(&labels) {
            let mut vals = Vec::new();
            for y in 0..50 {
                for x in 0..60 {
                    let (fx, fy) = (x as f64, y as f64);
                    if fx >= cell.x0 && fx <= cell.x1 && fy >= cell.y0 && fy <= cell.y1 {
                        vals.push(mask.get(x, y));
                    }
                }
            }
            let expected = if vals.iter().all(|&v| v) {
                CellLabel::Inside
            } else if vals.iter().any(|&v| v) {
                CellLabel::Boundary
            } else {
                CellLabel::Outside
            };
            assert_eq!(*label, expected, "cell {:?}", cell);
        }
        assert!(labels.contains(&CellLabel::Boundary));
    }
}
