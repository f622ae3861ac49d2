use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::PixelCoord;
use crate::mesh::ElementKind;

/// Boundary tolerance for point-in-element tests, in pixels.
pub const BOUNDARY_TOL_PX: f64 = 1e-9;

/// Rectangle-local coordinates; the element maps to `[-1, 1]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaturalCoord {
    pub xi: f64,
    pub eta: f64,
}

/// Triangle area (barycentric) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaCoord {
    pub l: [f64; 3],
}

/// Bilinear shape functions N1..N4 for nodes at (-1,-1), (1,-1), (1,1), (-1,1).
#[inline]
pub fn rect_shape(xi: f64, eta: f64) -> [f64; 4] {
    [
        0.25 * (xi - 1.0) * (eta - 1.0),
        -0.25 * (xi + 1.0) * (eta - 1.0),
        0.25 * (xi + 1.0) * (eta + 1.0),
        -0.25 * (xi - 1.0) * (eta + 1.0),
    ]
}

/// Extents of an axis-aligned rectangle given in node order.
fn rect_extent(c: &[PixelCoord]) -> Result<(f64, f64, f64, f64)> {
    if c.len() != 4 {
        return Err(Error::DegenerateElement(format!("rectangle with {} nodes", c.len())));
    }
    let (x0, y0, x1, y1) = (c[0].x, c[0].y, c[2].x, c[2].y);
    let aligned = c[1].x == x1 && c[1].y == y0 && c[3].x == x0 && c[3].y == y1;
    if !aligned || x1 - x0 <= 0.0 || y1 - y0 <= 0.0 {
        return Err(Error::DegenerateElement(format!(
            "rectangle corners {:?} are not an axis-aligned positive box",
            c
        )));
    }
    Ok((x0, y0, x1, y1))
}

/// Affine map sending the rectangle corners to `(±1, ±1)` in node order.
pub fn rect_natural(corners: &[PixelCoord], p: PixelCoord) -> Result<NaturalCoord> {
    let (x0, y0, x1, y1) = rect_extent(corners)?;
    Ok(NaturalCoord {
        xi: (2.0 * p.x - (x0 + x1)) / (x1 - x0),
        eta: (2.0 * p.y - (y0 + y1)) / (y1 - y0),
    })
}

/// Inverse of [`rect_natural`].
pub fn rect_from_natural(corners: &[PixelCoord], n: NaturalCoord) -> Result<PixelCoord> {
    let (x0, y0, x1, y1) = rect_extent(corners)?;
    Ok(PixelCoord::new(
        0.5 * (x0 + x1) + 0.5 * n.xi * (x1 - x0),
        0.5 * (y0 + y1) + 0.5 * n.eta * (y1 - y0),
    ))
}

/// `L_i = (a_i + b_i x + c_i y) / (2Δ)` with `a_i = x_j y_k - x_k y_j`,
/// `b_i = y_j - y_k`, `c_i = x_k - x_j`, indices cycling i -> j -> k.
pub fn tri_area_coords(t: &[PixelCoord], p: PixelCoord) -> Result<AreaCoord> {
    if t.len() != 3 {
        return Err(Error::DegenerateElement(format!("triangle with {} nodes", t.len())));
    }
    let two_delta = (t[1].x * t[2].y - t[2].x * t[1].y) - (t[0].x * t[2].y - t[2].x * t[0].y)
        + (t[0].x * t[1].y - t[1].x * t[0].y);
    if two_delta.abs() <= 2e-9 {
        return Err(Error::DegenerateElement(format!("triangle {:?} has zero area", t)));
    }
    let mut l = [0.0; 3];
    for (i, li) in l.iter_mut().enumerate() {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let a = t[j].x * t[k].y - t[k].x * t[j].y;
        let b = t[j].y - t[k].y;
        let c = t[k].x - t[j].x;
        *li = (a + b * p.x + c * p.y) / two_delta;
    }
    Ok(AreaCoord { l })
}

/// Shape-function weights of `p` in the element, or `OutsideElement` when
/// `p` is farther than [`BOUNDARY_TOL_PX`] outside it.
pub fn element_weights(kind: ElementKind, pts: &[PixelCoord], p: PixelCoord) -> Result<Vec<f64>> {
    match kind {
        ElementKind::Rect4 => {
            let (x0, y0, x1, y1) = rect_extent(pts)?;
            let tol = BOUNDARY_TOL_PX;
            if p.x < x0 - tol || p.x > x1 + tol || p.y < y0 - tol || p.y > y1 + tol {
                return Err(Error::OutsideElement);
            }
            let n = rect_natural(pts, p)?;
            Ok(rect_shape(n.xi, n.eta).to_vec())
        }
        ElementKind::Tri3 => {
            let a = tri_area_coords(pts, p)?;
            let two_delta = (pts[1].x - pts[0].x) * (pts[2].y - pts[0].y)
                - (pts[2].x - pts[0].x) * (pts[1].y - pts[0].y);
            for i in 0..3 {
                // L_i scaled back to a distance from the opposite edge
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                let dist = a.l[i] * two_delta.abs() / pts[j].dist(pts[k]);
                if dist < -BOUNDARY_TOL_PX {
                    return Err(Error::OutsideElement);
                }
            }
            Ok(a.l.to_vec())
        }
    }
}

/// `u(p) = Σ N_i u_i` per component.
pub fn interpolate(kind: ElementKind, pts: &[PixelCoord], values: &[[f64; 2]], p: PixelCoord) -> Result<[f64; 2]> {
    let w = element_weights(kind, pts, p)?;
    if values.len() != w.len() {
        return Err(Error::InvalidParameter(format!(
            "{} nodal values for a {}-node element",
            values.len(),
            w.len()
        )));
    }
    let mut out = [0.0; 2];
    for (wi, v) in w.iter().zip(values) {
        out[0] += wi * v[0];
        out[1] += wi * v[1];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> PixelCoord {
        PixelCoord::new(x, y)
    }

    #[test]
    fn rect_shape_values() {
        assert_eq!(rect_shape(-1.0, -1.0), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(rect_shape(0.0, 0.0), [0.25; 4]);
        // by hand: (ξ,η)=(0.5,-0.25)
        // N1 = 1/4(-0.5)(-1.25) = 0.15625, N2 = -1/4(1.5)(-1.25) = 0.46875
        // N3 = 1/4(1.5)(0.75) = 0.28125,   N4 = -1/4(-0.5)(0.75) = 0.09375
        let n = rect_shape(0.5, -0.25);
        let want = [0.15625, 0.46875, 0.28125, 0.09375];
        for i in 0..4 {
            assert!((n[i] - want[i]).abs() < 1e-15);
        }
        assert!((n.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn natural_coords() {
        let c = [p(10.0, 20.0), p(30.0, 20.0), p(30.0, 60.0), p(10.0, 60.0)];
        assert_eq!(rect_natural(&c, p(20.0, 40.0)).unwrap(), NaturalCoord { xi: 0.0, eta: 0.0 });
        assert_eq!(rect_natural(&c, c[2]).unwrap(), NaturalCoord { xi: 1.0, eta: 1.0 });
        let q = p(13.7, 51.25);
        let back = rect_from_natural(&c, rect_natural(&c, q).unwrap()).unwrap();
        assert!((back.x - q.x).abs() < 1e-12 && (back.y - q.y).abs() < 1e-12);
        let flat = [p(0.0, 0.0), p(0.0, 0.0), p(0.0, 5.0), p(0.0, 5.0)];
        assert!(rect_natural(&flat, q).is_err());
    }

    #[test]
    fn area_coords_basics() {
        let t = [p(0.0, 0.0), p(6.0, 1.0), p(2.0, 5.0)];
        assert_eq!(tri_area_coords(&t, t[0]).unwrap().l, [1.0, 0.0, 0.0]);
        let c = p(8.0 / 3.0, 2.0);
        let l = tri_area_coords(&t, c).unwrap().l;
        for v in l {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!(tri_area_coords(&[p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0)], c).is_err());
    }

    #[test]
    fn interpolate_outside_is_error() {
        let t = [p(0.0, 0.0), p(4.0, 0.0), p(0.0, 4.0)];
        let v = [[0.0, 0.0]; 3];
        assert!(matches!(interpolate(ElementKind::Tri3, &t, &v, p(3.0, 3.0)), Err(Error::OutsideElement)));
        assert!(interpolate(ElementKind::Tri3, &t, &v, p(2.0, 2.0)).is_ok());
        let r = [p(0.0, 0.0), p(4.0, 0.0), p(4.0, 4.0), p(0.0, 4.0)];
        let v = [[0.0, 0.0]; 4];
        assert!(matches!(interpolate(ElementKind::Rect4, &r, &v, p(4.1, 1.0)), Err(Error::OutsideElement)));
    }
}
