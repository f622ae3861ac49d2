use rayon::prelude::*;

use super::beam::BeamSpec;
use super::scene::{BeamLayout, SceneSpec};
use crate::error::Result;
use crate::field::{scale_to_mm, DisplacementField, Units};
use crate::imgcore::{bilinear_sample, dilate3x3, BinaryMask, Pixel, PixelCoord, Raster};

/// Exact displacement of the undeformed beam's pixels.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// In pixels; valid exactly on `mask`.
    pub field: DisplacementField,
    /// Undeformed beam.
    pub mask: BinaryMask,
    pub mm_per_px: f64,
}

impl GroundTruth {
    pub fn field_mm(&self) -> Result<DisplacementField> {
        scale_to_mm(&self.field, self.mm_per_px)
    }
}

/// Samples the closed-form deflection on a `spacing` grid over the scene
/// canvas: `u = 0`, `v = w(x) / scale`.
pub fn analytic_field(beam: &BeamSpec, scene: &SceneSpec, spacing: usize) -> Result<GroundTruth> {
    let lay = BeamLayout::new(beam, scene)?;
    let mask = BinaryMask::from_fn(scene.width, scene.height, |x, y| {
        lay.contains(PixelCoord::new(x as f64, y as f64))
    });
    let field = sample_field(&lay, scene.width, scene.height, spacing, PixelCoord::new(0.0, 0.0))?;
    Ok(GroundTruth {
        field,
        mask,
        mm_per_px: scene.mm_per_px,
    })
}

/// Ground truth on another canvas whose pixel `p` shows scene point
/// `p - offset` (a stitched panorama, for instance).
pub fn analytic_field_in_frame(
    beam: &BeamSpec,
    scene: &SceneSpec,
    width: usize,
    height: usize,
    spacing: usize,
    offset: PixelCoord,
) -> Result<DisplacementField> {
    let lay = BeamLayout::new(beam, scene)?;
    sample_field(&lay, width, height, spacing, offset)
}

fn sample_field(lay: &BeamLayout, width: usize, height: usize, spacing: usize, offset: PixelCoord) -> Result<DisplacementField> {
    let mut f = DisplacementField::empty(width, height, spacing)?;
    for i in 0..f.len() {
        let p = f.position(i);
        let q = PixelCoord::new(p.x - offset.x, p.y - offset.y);
        if lay.contains(q) {
            f.valid[i] = true;
            f.v[i] = lay.deflection_px(q.x);
        }
    }
    f.units = Units::Px;
    Ok(f)
}

/// Displacement `(u, v)` in pixels of the beam material at any canvas
/// point; columns beyond the beam ends reuse the end values.
pub fn beam_displacement(beam: &BeamSpec, scene: &SceneSpec) -> Result<impl Fn(PixelCoord) -> [f64; 2] + Sync> {
    let lay = BeamLayout::new(beam, scene)?;
    Ok(move |p: PixelCoord| [0.0, lay.deflection_px(p.x)])
}

/// Deforms `img` by inverse mapping: inside the 3x3-dilated `mask`, output
/// pixel `q` takes the input at `q - d(q)`. Everything else, and pixels
/// whose source falls off the image, is copied through unchanged.
pub fn warp_by_field<T: Pixel>(
    img: &Raster<T>,
    mask: &BinaryMask,
    d: impl Fn(PixelCoord) -> [f64; 2] + Sync,
) -> Result<Raster<T>> {
    img.same_dims(mask)?;
    let region = dilate3x3(mask);
    let (w, h) = img.dims();
    let rows: Vec<Vec<T>> = (0..h)
        .into_par_iter()
        .map(|y| {
            (0..w)
                .map(|x| {
                    if !region.get(x, y) {
                        return img.get(x, y);
                    }
                    let q = PixelCoord::new(x as f64, y as f64);
                    let [u, v] = d(q);
                    bilinear_sample(img, PixelCoord::new(q.x - u, q.y - v)).unwrap_or(img.get(x, y))
                })
                .collect()
        })
        .collect();
    Raster::from_vec(w, h, rows.concat())
}
