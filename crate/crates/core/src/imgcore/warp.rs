use rayon::prelude::*;

use super::raster::{bilinear_sample, BinaryMask, Pixel, PixelCoord, Raster};
use crate::error::Result;
use crate::registration::Homography;

/// Output of an inverse-mapped warp together with the pixels that actually
/// received a sample.
#[derive(Debug, Clone)]
pub struct Warped<T> {
    pub image: Raster<T>,
    pub validity: BinaryMask,
}

/// Resamples `img` through `h` onto an `out_width x out_height` canvas.
///
/// Output pixel `q` takes `bilinear_sample(img, h⁻¹·q)`; pixels whose
/// preimage falls outside the source stay zero and are marked invalid.
pub fn warp_perspective<T: Pixel>(
    img: &Raster<T>,
    h: &Homography,
    out_width: usize,
    out_height: usize,
) -> Result<Warped<T>> {
    let inv = h.inverse()?;
    let rows: Vec<(Vec<T>, Vec<bool>)> = (0..out_height)
        .into_par_iter()
        .map(|y| {
            let mut vals = Vec::with_capacity(out_width);
            let mut valid = Vec::with_capacity(out_width);
            for x in 0..out_width {
                let sample = inv
                    .apply(PixelCoord::new(x as f64, y as f64))
                    .and_then(|src| bilinear_sample(img, src));
                vals.push(sample.unwrap_or_default());
                valid.push(sample.is_some());
            }
            (vals, valid)
        })
        .collect();
    let mut data = Vec::with_capacity(out_width * out_height);
    let mut mask = Vec::with_capacity(out_width * out_height);
    for (v, m) in rows {
        data.extend(v);
        mask.extend(m);
    }
    Ok(Warped {
        image: Raster::from_vec(out_width, out_height, data)?,
        validity: Raster::from_vec(out_width, out_height, mask)?,
    })
}
