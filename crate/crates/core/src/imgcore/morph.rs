use super::raster::{BinaryMask, GrayImage};
use crate::error::Result;

/// `pixel > t`.
pub fn threshold(img: &GrayImage, t: f64) -> BinaryMask {
    img.map(|v| v > t)
}

/// Binary dilation with a 3x3 square structuring element. Pixels outside
/// the image count as false.
pub fn dilate3x3(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    // separable: horizontal then vertical max
    let horiz = BinaryMask::from_fn(w, h, |x, y| {
        mask.get(x, y)
            || (x > 0 && mask.get(x - 1, y))
            || (x + 1 < w && mask.get(x + 1, y))
    });
    BinaryMask::from_fn(w, h, |x, y| {
        horiz.get(x, y)
            || (y > 0 && horiz.get(x, y - 1))
            || (y + 1 < h && horiz.get(x, y + 1))
    })
}

pub fn mask_and(a: &BinaryMask, b: &BinaryMask) -> Result<BinaryMask> {
    a.same_dims(b)?;
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| x && y).collect();
    BinaryMask::from_vec(a.width(), a.height(), data)
}

/// 8-connected component labels (0 = background, components numbered from
/// 1 in raster-scan order of their first pixel) and the pixel count of each.
pub fn label_components(mask: &BinaryMask) -> (Vec<u32>, Vec<usize>) {
    let (w, h) = mask.dims();
    let mut labels = vec![0u32; w * h];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !mask.data()[start] || labels[start] != 0 {
            continue;
        }
        let id = sizes.len() as u32 + 1;
        let mut size = 0usize;
        labels[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if mask.data()[j] && labels[j] == 0 {
                        labels[j] = id;
                        stack.push(j);
                    }
                }
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// Keeps only the largest 8-connected component (ties: first in scan order).
pub fn largest_component(mask: &BinaryMask) -> BinaryMask {
    let (labels, sizes) = label_components(mask);
    let Some(best) = sizes
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i as u32 + 1)
    else {
        return mask.clone();
    };
    let data = labels.iter().map(|&l| l == best).collect();
    BinaryMask::from_vec(mask.width(), mask.height(), data).expect("same dims")
}
