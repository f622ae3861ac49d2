use crate::imgcore::{label_components, BinaryMask, GrayImage, PixelCoord};

/// Centroids of dark blobs whose pixel count lies in `area_range`.
///
/// Each centroid is weighted by how far below `dark_threshold` its pixels
/// are, which keeps it stable under the anti-aliased rim. Pixels outside
/// `validity` are ignored. Results are in raster order of first pixel.
pub fn locate_fiducials(
    img: &GrayImage,
    validity: Option<&BinaryMask>,
    dark_threshold: f64,
    area_range: (usize, usize),
) -> Vec<PixelCoord> {
    let dark = BinaryMask::from_fn(img.width(), img.height(), |x, y| {
        img.get(x, y) < dark_threshold && validity.is_none_or(|m| m.get(x, y))
    });
    let (labels, sizes) = label_components(&dark);
    let mut acc = vec![(0.0f64, 0.0f64, 0.0f64); sizes.len()];
    for (i, &l) in labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let (x, y) = ((i % img.width()) as f64, (i / img.width()) as f64);
        let wgt = dark_threshold - img.data()[i];
        let a = &mut acc[l as usize - 1];
        a.0 += wgt * x;
        a.1 += wgt * y;
        a.2 += wgt;
    }
    acc.into_iter()
        .zip(sizes)
        .filter(|(a, n)| *n >= area_range.0 && *n <= area_range.1 && a.2 > 0.0)
        .map(|(a, _)| PixelCoord::new(a.0 / a.2, a.1 / a.2))
        .collect()
}

/// Millimeters per pixel from two fiducials a known distance apart.
pub fn conversion_coefficient(a: PixelCoord, b: PixelCoord, known_mm: f64) -> Option<f64> {
    let d = a.dist(b);
    (d > 0.0 && known_mm > 0.0).then(|| known_mm / d)
}
