use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::PixelCoord;
use crate::registration::Homography;

/// Panorama canvas: the integer offset of the view-0 frame and the size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Canvas {
    pub offset_x: f64,
    pub offset_y: f64,
    pub width: usize,
    pub height: usize,
}

/// Canvases beyond this many pixels are rejected as runaway geometry.
pub const MAX_CANVAS_PIXELS: usize = 200_000_000;

/// Turns adjacent-pair maps (`pairwise[i]` takes view `i+1` into view `i`)
/// into maps from every view into the view-0 frame. The first entry is the
/// identity.
pub fn compose_chain(pairwise: &[Homography]) -> Result<Vec<Homography>> {
    let mut out = vec![Homography::identity()];
    for (i, h) in pairwise.iter().enumerate() {
        h.inverse().map_err(|e| {
            Error::InvalidHomography(format!("pair {i}-{}: {e}", i + 1))
        })?;
        let prev = out[i];
        out.push(prev.compose(h)?);
    }
    Ok(out)
}

/// Canvas that holds every warped view corner at non-negative coordinates.
/// `transforms[i]` maps view `i` of size `dims[i]` into the common frame.
pub fn canvas_for(transforms: &[Homography], dims: &[(usize, usize)]) -> Result<Canvas> {
    if transforms.is_empty() || transforms.len() != dims.len() {
        return Err(Error::InvalidParameter(format!(
            "{} transforms for {} views",
            transforms.len(),
            dims.len()
        )));
    }
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for (i, (h, &(w, ht))) in transforms.iter().zip(dims).enumerate() {
        if w == 0 || ht == 0 {
            return Err(Error::EmptyInput(format!("view {i} is empty")));
        }
        let (wf, hf) = ((w - 1) as f64, (ht - 1) as f64);
        for c in [(0.0, 0.0), (wf, 0.0), (wf, hf), (0.0, hf)] {
            let p = h.apply(PixelCoord::new(c.0, c.1)).ok_or_else(|| {
                Error::InvalidHomography(format!("view {i} corner maps to infinity"))
            })?;
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
    }
    let offset_x = (-x0).ceil().max(0.0);
    let offset_y = (-y0).ceil().max(0.0);
    let width = (x1 + offset_x).floor() as usize + 1;
    let height = (y1 + offset_y).floor() as usize + 1;
    if width.saturating_mul(height) > MAX_CANVAS_PIXELS {
        return Err(Error::InvalidHomography(format!(
            "panorama canvas {width}x{height} is implausibly large"
        )));
    }
    Ok(Canvas {
        offset_x,
        offset_y,
        width,
        height,
    })
}
