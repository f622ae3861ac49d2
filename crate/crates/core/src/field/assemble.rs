use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::shape::{element_weights, BOUNDARY_TOL_PX};
use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, PixelCoord};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Px,
    Mm,
}

impl Units {
    pub fn as_str(self) -> &'static str {
        match self {
            Units::Px => "px",
            Units::Mm => "mm",
        }
    }
}

/// Displacements sampled on a regular grid; sample `(c, r)` sits at pixel
/// `(c * spacing, r * spacing)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    pub cols: usize,
    pub rows: usize,
    pub spacing: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub valid: Vec<bool>,
    pub units: Units,
    /// Millimeters per pixel applied to the values, when in mm.
    pub mm_per_px: Option<f64>,
}

impl DisplacementField {
    /// All-invalid field covering a `width x height` image.
    pub fn empty(width: usize, height: usize, spacing: usize) -> Result<Self> {
        if spacing == 0 || width == 0 || height == 0 {
            return Err(Error::InvalidParameter("field grid must be non-empty with spacing > 0".into()));
        }
        let cols = (width - 1) / spacing + 1;
        let rows = (height - 1) / spacing + 1;
        let n = cols * rows;
        Ok(Self {
            cols,
            rows,
            spacing,
            u: vec![0.0; n],
            v: vec![0.0; n],
            valid: vec![false; n],
            units: Units::Px,
            mm_per_px: None,
        })
    }

    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn position(&self, i: usize) -> PixelCoord {
        PixelCoord::new(((i % self.cols) * self.spacing) as f64, ((i / self.cols) * self.spacing) as f64)
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn same_grid(&self, other: &DisplacementField) -> Result<()> {
        if self.cols != other.cols || self.rows != other.rows || self.spacing != other.spacing {
            return Err(Error::DimensionMismatch {
                left_w: self.cols,
                left_h: self.rows,
                right_w: other.cols,
                right_h: other.rows,
            });
        }
        Ok(())
    }
}

/// Finds the element containing a point through a cell-bucket index over
/// element bounding boxes.
pub struct ElementLocator<'a> {
    mesh: &'a Mesh,
    cell: f64,
    origin: PixelCoord,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> ElementLocator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let cell = mesh.grid.cell as f64;
        let origin = mesh.grid.origin;
        let cols = ((mesh.width as f64 - origin.x) / cell).ceil().max(1.0) as usize;
        let rows = ((mesh.height as f64 - origin.y) / cell).ceil().max(1.0) as usize;
        let mut buckets = vec![Vec::new(); cols * rows];
        let mut loc = Self {
            mesh,
            cell,
            origin,
            cols,
            rows,
            buckets: Vec::new(),
        };
        for (id, e) in mesh.elements.iter().enumerate() {
            let pts = mesh.element_points(e);
            let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
            for p in &pts {
                x0 = x0.min(p.x);
                y0 = y0.min(p.y);
                x1 = x1.max(p.x);
                y1 = y1.max(p.y);
            }
            let (c0, c1) = loc.span(x0, x1, true);
            let (r0, r1) = loc.span(y0, y1, false);
            for r in r0..=r1 {
                for c in c0..=c1 {
                    buckets[r * cols + c].push(id);
                }
            }
        }
        loc.buckets = buckets;
        loc
    }

    fn span(&self, a: f64, b: f64, horizontal: bool) -> (usize, usize) {
        let (o, n) = if horizontal {
            (self.origin.x, self.cols)
        } else {
            (self.origin.y, self.rows)
        };
        let idx = |v: f64| (((v - o) / self.cell).floor().max(0.0) as usize).min(n - 1);
        (idx(a - BOUNDARY_TOL_PX), idx(b + BOUNDARY_TOL_PX))
    }

    /// Lowest-id element containing `p` and its shape-function weights.
    pub fn locate(&self, p: PixelCoord) -> Option<(usize, Vec<f64>)> {
        let (c0, c1) = self.span(p.x, p.x, true);
        let (r0, r1) = self.span(p.y, p.y, false);
        let mut cand: Vec<usize> = Vec::new();
        for r in r0..=r1 {
            for c in c0..=c1 {
                cand.extend(&self.buckets[r * self.cols + c]);
            }
        }
        cand.sort_unstable();
        cand.dedup();
        cand.into_iter().find_map(|id| {
            let e = &self.mesh.elements[id];
            element_weights(e.kind, &self.mesh.element_points(e), p)
                .ok()
                .map(|w| (id, w))
        })
    }
}

/// Interpolates nodal displacements (indexed by node id, in px) to every
/// grid sample that lies in `mask` and in some element.
pub fn assemble_field(mesh: &Mesh, nodal: &[[f64; 2]], spacing: usize, mask: &BinaryMask) -> Result<DisplacementField> {
    if nodal.len() != mesh.nodes.len() {
        return Err(Error::InvalidParameter(format!(
            "{} nodal values for {} nodes",
            nodal.len(),
            mesh.nodes.len()
        )));
    }
    if nodal.iter().any(|d| !d[0].is_finite() || !d[1].is_finite()) {
        return Err(Error::InvalidParameter("non-finite nodal displacement".into()));
    }
    if mask.dims() != (mesh.width, mesh.height) {
        return Err(Error::DimensionMismatch {
            left_w: mesh.width,
            left_h: mesh.height,
            right_w: mask.width(),
            right_h: mask.height(),
        });
    }
    let mut field = DisplacementField::empty(mesh.width, mesh.height, spacing)?;
    let loc = ElementLocator::new(mesh);
    let samples: Vec<Option<[f64; 2]>> = (0..field.len())
        .into_par_iter()
        .map(|i| {
            let p = field.position(i);
            if !mask.get(p.x as usize, p.y as usize) {
                return None;
            }
            let (id, w) = loc.locate(p)?;
            let ids = &mesh.elements[id].ids;
            let mut out = [0.0; 2];
            for (wi, &n) in w.iter().zip(ids) {
                out[0] += wi * nodal[n][0];
                out[1] += wi * nodal[n][1];
            }
            Some(out)
        })
        .collect();
    for (i, s) in samples.into_iter().enumerate() {
        if let Some([u, v]) = s {
            field.u[i] = u;
            field.v[i] = v;
            field.valid[i] = true;
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{mesh_structure, GridSpec};

    fn blob() -> BinaryMask {
        BinaryMask::from_fn(120, 90, |x, y| (x as f64 - 60.0).hypot((y as f64 - 45.0) * 1.4) < 40.0)
    }

    #[test]
    fn zero_and_rigid_fields() {
        let mask = blob();
        let m = mesh_structure(&mask, &GridSpec::new(10)).unwrap();
        let dil = crate::imgcore::dilate3x3(&mask);
        let f = assemble_field(&m, &vec![[0.0, 0.0]; m.nodes.len()], 5, &dil).unwrap();
        assert!(f.valid_count() > 0);
        assert!(f.u.iter().chain(&f.v).all(|&x| x == 0.0));
        let f = assemble_field(&m, &vec![[4.0, 2.0]; m.nodes.len()], 5, &dil).unwrap();
        for i in 0..f.len() {
            if f.valid[i] {
                assert!((f.u[i] - 4.0).abs() < 1e-12 && (f.v[i] - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn samples_outside_mask_invalid() {
        let mask = blob();
        let m = mesh_structure(&mask, &GridSpec::new(10)).unwrap();
        let f = assemble_field(&m, &vec![[1.0, 1.0]; m.nodes.len()], 3, &mask).unwrap();
        for i in 0..f.len() {
            let p = f.position(i);
            if f.valid[i] {
                assert!(mask.get(p.x as usize, p.y as usize));
            }
        }
    }

    #[test]
    fn locator_agrees_with_linear_scan() {
        let mask = blob();
        let m = mesh_structure(&mask, &GridSpec::new(9)).unwrap();
        let loc = ElementLocator::new(&m);
        for y in (0..90).step_by(3) {
            for x in (0..120).step_by(3) {
                let p = PixelCoord::new(x as f64 + 0.3, y as f64);
                let scan = m
                    .elements
                    .iter()
                    .position(|e| element_weights(e.kind, &m.element_points(e), p).is_ok());
                assert_eq!(loc.locate(p).map(|r| r.0), scan);
            }
        }
    }
}
