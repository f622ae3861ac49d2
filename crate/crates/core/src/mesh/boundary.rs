use super::grid::{pixel_span, Cell};
use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, PixelCoord};

/// Polygons smaller than this are discarded as slivers.
pub const MIN_POLYGON_AREA: f64 = 4.0;
/// Pieces thinner than this (2 * area / perimeter) are discarded as well.
pub const MIN_POLYGON_THICKNESS: f64 = 1.0;
/// A contour feature farther than this from the clipping chord becomes an
/// extra polygon vertex.
const FEATURE_DEVIATION: f64 = 1.0;

pub fn signed_area(poly: &[PixelCoord]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

pub fn tri_signed_area(a: PixelCoord, b: PixelCoord, c: PixelCoord) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

fn snap(v: f64) -> f64 {
    (v * 4.0).round() / 4.0
}

#[derive(Clone, Copy)]
struct Sample {
    p: PixelCoord,
    inside: bool,
    corner: bool,
}

/// Pixel-center samples around the cell perimeter, starting at (x0,y0) and
/// running (x0,y0) -> (x1,y0) -> (x1,y1) -> (x0,y1).
fn perimeter(cell: &Cell, mask: &BinaryMask) -> Vec<Sample> {
    let corners = cell.corner_points();
    let mut out = Vec::new();
    for e in 0..4 {
        let (a, b) = (corners[e], corners[(e + 1) % 4]);
        let len = (b.x - a.x).abs().max((b.y - a.y).abs()).round() as usize;
        for k in 0..len {
            let t = k as f64 / len as f64;
            let p = PixelCoord::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t);
            out.push(Sample {
                p,
                inside: mask.get_clamped(p.x.round() as isize, p.y.round() as isize),
                corner: k == 0,
            });
        }
    }
    out
}

/// Region-boundary points strictly inside the cell: pixel-square corners
/// whose four adjacent pixels are not all equal.
fn staircase_points(cell: &Cell, mask: &BinaryMask) -> Vec<PixelCoord> {
    let (w, h) = mask.dims();
    let mut pts = Vec::new();
    let xs = pixel_span(cell.x0, cell.x1, w);
    let ys = pixel_span(cell.y0, cell.y1, h);
    for y in *ys.start()..*ys.end() {
        for x in *xs.start()..*xs.end() {
            let a = mask.get(x, y);
            if a != mask.get(x + 1, y) || a != mask.get(x, y + 1) || a != mask.get(x + 1, y + 1) {
                let p = PixelCoord::new(x as f64 + 0.5, y as f64 + 0.5);
                if p.x > cell.x0 && p.x < cell.x1 && p.y > cell.y0 && p.y < cell.y1 {
                    pts.push(p);
                }
            }
        }
    }
    pts
}

/// Farthest contour point from the chord `a -> b`, if it deviates enough.
fn chord_feature(a: PixelCoord, b: PixelCoord, candidates: &[PixelCoord]) -> Option<PixelCoord> {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return None;
    }
    let len = len2.sqrt();
    let mut best: Option<(f64, PixelCoord)> = None;
    for &p in candidates {
        let t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
        if t <= 0.0 || t >= 1.0 {
            continue;
        }
        let d = (((p.x - a.x) * dy - (p.y - a.y) * dx) / len).abs();
        if d > FEATURE_DEVIATION && best.is_none_or(|(bd, _)| d > bd) {
            best = Some((d, p));
        }
    }
    best.map(|(_, p)| p)
}

/// A clipped piece of a boundary cell, counter-clockwise (positive shoelace
/// area in x-right/y-down pixel coordinates). `root` is the vertex from which
/// the piece is fan-triangulated.
#[derive(Debug, Clone, PartialEq)]
pub struct ClippedPolygon {
    pub vertices: Vec<PixelCoord>,
    pub root: usize,
}

/// Outcome of clipping one boundary cell against the mask.
#[derive(Debug, Clone, PartialEq)]
pub enum CellClip {
    /// Perimeter fully inside: keep the whole cell.
    Full,
    Polygons(Vec<ClippedPolygon>),
    /// Nothing usable; carries the area of discarded fragments.
    Dropped(f64),
}

/// Intersects the mask contour with the cell edges (transitions between
/// perimeter pixel centers, placed halfway and snapped to 0.25 px) and
/// returns one convex piece per inside arc of the perimeter. Diagonal saddle
/// configurations therefore yield two separate pieces.
pub fn trace_boundary(cell: &Cell, mask: &BinaryMask) -> CellClip {
    let samples = perimeter(cell, mask);
    let n = samples.len();
    // Start at an enter transition so every arc closes within one lap.
    let Some(start) = (0..n).find(|&i| samples[i].inside && !samples[(i + n - 1) % n].inside) else {
        return if samples[0].inside {
            CellClip::Full
        } else {
            CellClip::Dropped(0.0)
        };
    };

    // Arcs of inside samples, each bounded by an enter and an exit transition.
    let mut arcs: Vec<Vec<PixelCoord>> = Vec::new();
    let mut current: Vec<PixelCoord> = Vec::new();
    for step in 0..n {
        let i = (start + step) % n;
        let prev = samples[(i + n - 1) % n];
        let s = samples[i];
        if prev.inside != s.inside {
            let mid = PixelCoord::new(snap((prev.p.x + s.p.x) / 2.0), snap((prev.p.y + s.p.y) / 2.0));
            if s.inside {
                current = vec![mid];
            } else {
                current.push(mid);
                arcs.push(std::mem::take(&mut current));
            }
        }
        if s.inside && s.corner {
            current.push(s.p);
        }
    }
    let single = arcs.len() == 1;
    let candidates = if single { staircase_points(cell, mask) } else { Vec::new() };
    let mut pieces = Vec::new();
    let mut dropped = 0.0;
    for arc in arcs {
        let mut piece = ClippedPolygon {
            vertices: arc.clone(),
            root: 0,
        };
        if single {
            let (enter, exit) = (arc[0], arc[arc.len() - 1]);
            if let Some(f) = chord_feature(exit, enter, &candidates) {
                let mut v = arc.clone();
                v.push(f);
                let root = v.len() - 1;
                if fan_from(&v, root).iter().all(|t| tri_signed_area(t[0], t[1], t[2]) >= 0.0) {
                    piece = ClippedPolygon { vertices: v, root };
                }
            }
        }
        piece.root = fan_root(&piece.vertices, piece.root);
        let area = signed_area(&piece.vertices);
        if piece.vertices.len() < 3 || area < MIN_POLYGON_AREA || 2.0 * area / perimeter_len(&piece.vertices) < MIN_POLYGON_THICKNESS {
            dropped += area.max(0.0);
        } else {
            pieces.push(piece);
        }
    }
    if pieces.is_empty() {
        CellClip::Dropped(dropped)
    } else {
        CellClip::Polygons(pieces)
    }
}

fn perimeter_len(poly: &[PixelCoord]) -> f64 {
    (0..poly.len()).map(|i| poly[i].dist(poly[(i + 1) % poly.len()])).sum()
}

fn fan_from(poly: &[PixelCoord], root: usize) -> Vec<[PixelCoord; 3]> {
    let n = poly.len();
    (1..n - 1)
        .map(|k| [poly[root], poly[(root + k) % n], poly[(root + k + 1) % n]])
        .collect()
}

/// `preferred` if its fan has no degenerate triangle, else the first vertex
/// whose fan has none. A degenerate triangle would drop its middle vertex and
/// leave it hanging on the neighboring cell's edge.
fn fan_root(poly: &[PixelCoord], preferred: usize) -> usize {
    if poly.len() < 3 {
        return preferred;
    }
    let clean = |r: usize| fan_from(poly, r).iter().all(|t| tri_signed_area(t[0], t[1], t[2]) > 0.0);
    if clean(preferred) {
        return preferred;
    }
    (0..poly.len()).find(|&r| clean(r)).unwrap_or(preferred)
}

fn segments_cross(a: PixelCoord, b: PixelCoord, c: PixelCoord, d: PixelCoord) -> bool {
    let o1 = tri_signed_area(a, b, c);
    let o2 = tri_signed_area(a, b, d);
    let o3 = tri_signed_area(c, d, a);
    let o4 = tri_signed_area(c, d, b);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Fan triangulation from vertex 0 of a simple counter-clockwise polygon.
/// Zero-area triangles (collinear runs) are omitted.
pub fn triangulate(poly: &[PixelCoord]) -> Result<Vec<[PixelCoord; 3]>> {
    let n = poly.len();
    if n < 3 {
        return Err(Error::DegenerateElement(format!("polygon with {n} vertices")));
    }
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(poly[i], poly[i + 1], poly[j], poly[(j + 1) % n]) {
                return Err(Error::SelfIntersecting);
            }
        }
    }
    if signed_area(poly) <= 0.0 {
        return Err(Error::DegenerateElement("polygon is not counter-clockwise".into()));
    }
    let tris = fan_from(poly, 0);
    if tris.iter().any(|t| tri_signed_area(t[0], t[1], t[2]) < 0.0) {
        return Err(Error::DegenerateElement("polygon is not fan-triangulable from vertex 0".into()));
    }
    Ok(tris
        .into_iter()
        .filter(|t| tri_signed_area(t[0], t[1], t[2]) > 0.0)
        .collect())
}

pub(crate) fn fan_triangles(piece: &ClippedPolygon) -> Vec<[PixelCoord; 3]> {
    fan_from(&piece.vertices, piece.root)
        .into_iter()
        .filter(|t| tri_signed_area(t[0], t[1], t[2]) > 0.0)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::grid::{full_grid, GridSpec};

    fn cell(x0: f64, y0: f64, x1: f64, y1: f64) -> Cell {
        Cell {
            col: 0,
            row: 0,
            x0,
            y0,
            x1,
            y1,
            corners: [0, 1, 2, 3],
        }
    }

    fn pixel_count_in_cell(c: &Cell, mask: &BinaryMask) -> f64 {
        // pixel squares clipped to the cell rectangle
        let mut a = 0.0;
        for y in 0..mask.height() {
            for x in 0..mask.width() {
                if mask.get(x, y) {
                    let ox = ((x as f64 + 0.5).min(c.x1) - (x as f64 - 0.5).max(c.x0)).max(0.0);
                    let oy = ((y as f64 + 0.5).min(c.y1) - (y as f64 - 0.5).max(c.y0)).max(0.0);
                    a += ox * oy;
                }
            }
        }
        a
    }

    fn total_area(clip: &CellClip) -> f64 {
        match clip {
            CellClip::Polygons(ps) => ps.iter().map(|p| signed_area(&p.vertices)).sum(),
            _ => 0.0,
        }
    }

    #[test]
    fn diagonal_cut_is_half_triangle() {
        let mask = BinaryMask::from_fn(41, 41, |x, y| x >= y);
        let clip = trace_boundary(&cell(0.0, 0.0, 40.0, 40.0), &mask);
        let CellClip::Polygons(ps) = &clip else { panic!("{clip:?}") };
        assert_eq!(ps.len(), 1);
        let a = signed_area(&ps[0].vertices);
        assert!((a - 800.0).abs() < 40.0, "{a}");
    }

    #[test]
    fn vertical_edge_gives_rectangle() {
        let mask = BinaryMask::from_fn(60, 40, |x, _| x < 23);
        let c = cell(10.0, 0.0, 40.0, 30.0);
        let clip = trace_boundary(&c, &mask);
        let CellClip::Polygons(ps) = &clip else { panic!() };
        assert_eq!(ps[0].vertices.len(), 4);
        // covered fraction: columns 10..=22 -> 12.5 px of 30
        assert!((total_area(&clip) - 12.5 * 30.0).abs() <= 1.0);
    }

    #[test]
    fn oblique_edge_area_matches_pixel_count() {
        let mask = BinaryMask::from_fn(80, 80, |x, y| (y as f64) < 0.35 * x as f64 + 8.0);
        let c = cell(16.0, 0.0, 48.0, 32.0);
        let clip = trace_boundary(&c, &mask);
        let want = pixel_count_in_cell(&c, &mask);
        let got = total_area(&clip);
        assert!((got - want).abs() / want < 0.02, "{got} vs {want}");
    }

    #[test]
    fn convex_corner_gets_feature_vertex() {
        let mask = BinaryMask::from_fn(40, 40, |x, y| x >= 10 && y >= 12);
        let c = cell(0.0, 0.0, 32.0, 32.0);
        let clip = trace_boundary(&c, &mask);
        let want = pixel_count_in_cell(&c, &mask);
        assert!((total_area(&clip) - want).abs() / want < 0.02);
    }

    #[test]
    fn saddle_yields_two_pieces() {
        let mask = BinaryMask::from_fn(33, 33, |x, y| (x < 10 && y < 10) || (x > 22 && y > 22));
        let clip = trace_boundary(&cell(0.0, 0.0, 32.0, 32.0), &mask);
        let CellClip::Polygons(ps) = clip else { panic!() };
        assert_eq!(ps.len(), 2);
    }

    #[test]
    fn tiny_fragment_dropped() {
        let mask = BinaryMask::from_fn(33, 33, |x, y| x < 2 && y < 1);
        assert!(matches!(trace_boundary(&cell(0.0, 0.0, 32.0, 32.0), &mask), CellClip::Dropped(_)));
    }

    #[test]
    fn pieces_are_counter_clockwise_and_within_cell() {
        let mask = BinaryMask::from_fn(100, 100, |x, y| {
            let (dx, dy) = (x as f64 - 50.0, y as f64 - 47.0);
            dx * dx + dy * dy < 35.0 * 35.0
        });
        let (_, cells) = full_grid(100, 100, &GridSpec::new(16));
        for c in &cells {
            if let CellClip::Polygons(ps) = trace_boundary(c, &mask) {
                for p in ps {
                    assert!(signed_area(&p.vertices) > 0.0);
                    for v in &p.vertices {
                        assert!(v.x >= c.x0 && v.x <= c.x1 && v.y >= c.y0 && v.y <= c.y1);
                    }
                    for t in fan_triangles(&p) {
                        assert!(tri_signed_area(t[0], t[1], t[2]) > 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn triangulate_cases() {
        let p = |x: f64, y: f64| PixelCoord::new(x, y);
        let tri = [p(0.0, 0.0), p(4.0, 0.0), p(0.0, 3.0)];
        assert_eq!(triangulate(&tri).unwrap(), vec![tri]);
        let quad = [p(0.0, 0.0), p(4.0, 0.0), p(5.0, 3.0), p(0.0, 2.0)];
        let t = triangulate(&quad).unwrap();
        assert_eq!(t.len(), 2);
        let s: f64 = t.iter().map(|t| tri_signed_area(t[0], t[1], t[2])).sum();
        assert_eq!(s, signed_area(&quad));
        let pent = [p(0.0, 0.0), p(6.0, 0.0), p(7.0, 4.0), p(3.0, 6.0), p(-1.0, 3.0)];
        let t = triangulate(&pent).unwrap();
        assert_eq!(t.len(), 3);
        let s: f64 = t.iter().map(|t| tri_signed_area(t[0], t[1], t[2])).sum();
        let shoelace = signed_area(&pent);
        assert!((s - shoelace).abs() / shoelace < 1e-6);
        let bow = [p(0.0, 0.0), p(4.0, 4.0), p(4.0, 0.0), p(0.0, 4.0)];
        assert!(matches!(triangulate(&bow), Err(Error::SelfIntersecting)));
    }
}

#[cfg(test)]
mod fan_tests {
    use super::*;

    #[test]
    fn collinear_notch_keeps_every_vertex() {
        let p = PixelCoord::new;
        // enter/exit points on the top edge with a zero-width gap between them
        let poly = [p(12.5, 0.0), p(15.0, 0.0), p(15.0, 20.0), p(0.0, 20.0), p(0.0, 0.0), p(10.5, 0.0)];
        let root = fan_root(&poly, 0);
        let tris = fan_from(&poly, root);
        assert!(tris.iter().all(|t| tri_signed_area(t[0], t[1], t[2]) > 0.0));
        let area: f64 = tris.iter().map(|t| tri_signed_area(t[0], t[1], t[2])).sum();
        assert!((area - signed_area(&poly)).abs() < 1e-9);
    }
}
