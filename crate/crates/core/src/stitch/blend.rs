use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, Pixel, Raster, Warped};
use crate::registration::Homography;

/// Fused image with the per-pixel number of contributing views.
#[derive(Debug, Clone)]
pub struct Panorama<T = f64> {
    pub image: Raster<T>,
    pub validity: BinaryMask,
    /// View-to-panorama maps; empty when built by [`blend_average`] alone.
    pub transforms: Vec<Homography>,
    pub overlap_count: Raster<u32>,
}

/// Mean over every source valid at each pixel. Pixels with no source
/// stay zero and invalid.
pub fn blend_average<T: Pixel>(warped: &[Warped<T>]) -> Result<Panorama<T>> {
    let first = warped
        .first()
        .ok_or_else(|| Error::EmptyInput("no views to blend".into()))?;
    let (w, h) = first.image.dims();
    for v in warped {
        v.image.same_dims(&first.image)?;
        v.validity.same_dims(&first.image)?;
    }
    let mut sum = vec![T::default(); w * h];
    let mut count = vec![0u32; w * h];
    for v in warped {
        for (i, (&px, &ok)) in v.image.data().iter().zip(v.validity.data()).enumerate() {
            if ok {
                sum[i] = sum[i].add(px);
                count[i] += 1;
            }
        }
    }
    let image: Vec<T> = sum
        .into_iter()
        .zip(&count)
        .map(|(s, &c)| if c == 0 { T::default() } else { s.scale(1.0 / c as f64) })
        .collect();
    let validity = count.iter().map(|&c| c > 0).collect();
    Ok(Panorama {
        image: Raster::from_vec(w, h, image)?,
        validity: Raster::from_vec(w, h, validity)?,
        transforms: Vec::new(),
        overlap_count: Raster::from_vec(w, h, count)?,
    })
}


#[cfg(test)]
mod props {
    use super::*;
    use crate::imgcore::GrayImage;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn blend_stays_within_source_range(
            views in prop::collection::vec((prop::collection::vec(0.0..1.0f64, 12), prop::collection::vec(any::<bool>(), 12)), 1..5),
        ) {
            let warped: Vec<Warped<f64>> = views
                .iter()
                .map(|(v, ok)| Warped {
                    image: GrayImage::from_vec(4, 3, v.clone()).unwrap(),
                    validity: BinaryMask::from_vec(4, 3, ok.clone()).unwrap(),
                })
                .collect();
            let pano = blend_average(&warped).unwrap();
            for i in 0..12 {
                let srcs: Vec<f64> = views.iter().filter(|(_, ok)| ok[i]).map(|(v, _)| v[i]).collect();
                prop_assert_eq!(pano.overlap_count.data()[i] as usize, srcs.len());
                prop_assert_eq!(pano.validity.data()[i], !srcs.is_empty());
                if !srcs.is_empty() {
                    let lo = srcs.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = srcs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let v = pano.image.data()[i];
                    prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                }
            }
        }
    }
}
