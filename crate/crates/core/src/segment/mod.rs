//! GrabCut foreground extraction.

mod gmm;
mod grabcut;
mod maxflow;

pub use gmm::{fit_gmm, Gaussian, GmmModel, COV_EPS};
pub use grabcut::{grabcut, grabcut_trimap, trimap_from_rect, GrabCutParams, GrabCutResult, Rect, Trimap, TrimapLabel};
pub use maxflow::{max_flow, FlowNetwork, MinCut};

use crate::error::Result;
use crate::imgcore::{BinaryMask, GrayImage};

/// Zeroes every pixel outside the mask.
pub fn apply_mask(img: &GrayImage, mask: &BinaryMask) -> Result<GrayImage> {
    img.same_dims(mask)?;
    Ok(GrayImage::from_fn(img.width(), img.height(), |x, y| {
        if mask.get(x, y) {
            img.get(x, y)
        } else {
            0.0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_mask_cases() {
        let img = GrayImage::from_fn(5, 4, |x, y| (x + y) as f64 / 10.0);
        assert_eq!(apply_mask(&img, &BinaryMask::new(5, 4, true)).unwrap(), img);
        assert!(apply_mask(&img, &BinaryMask::new(5, 4, false)).unwrap().data().iter().all(|&v| v == 0.0));
        let m = BinaryMask::from_fn(5, 4, |x, y| (x * 3 + y) % 2 == 0);
        let out = apply_mask(&img, &m).unwrap();
        for y in 0..4 {
            for x in 0..5 {
                assert_eq!(out.get(x, y), img.get(x, y) * if m.get(x, y) { 1.0 } else { 0.0 });
            }
        }
        assert!(apply_mask(&img, &BinaryMask::new(4, 4, true)).is_err());
    }
}
