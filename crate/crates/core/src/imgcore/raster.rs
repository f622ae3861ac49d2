use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Real-valued image coordinate. Integer values address pixel centers,
/// `x` grows rightward and `y` grows downward.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PixelCoord {
    pub x: f64,
    pub y: f64,
}

impl PixelCoord {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: PixelCoord) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Values that can be stored in a [`Raster`] and interpolated.
pub trait Pixel: Copy + Send + Sync + Default + PartialEq + std::fmt::Debug {
    fn add(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn luminance(self) -> f64;
}

impl Pixel for f64 {
    #[inline]
    fn add(self, other: Self) -> Self {
        self + other
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        self * s
    }
    #[inline]
    fn luminance(self) -> f64 {
        self
    }
}

impl Pixel for [f64; 3] {
    #[inline]
    fn add(self, o: Self) -> Self {
        [self[0] + o[0], self[1] + o[1], self[2] + o[2]]
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        [self[0] * s, self[1] * s, self[2] * s]
    }
    #[inline]
    fn luminance(self) -> f64 {
        0.299 * self[0] + 0.587 * self[1] + 0.114 * self[2]
    }
}

/// Row-major 2-D grid of pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

/// Luminance image, values in `[0, 1]`.
pub type GrayImage = Raster<f64>;
/// Color image, channels in `[0, 1]`.
pub type RgbImage = Raster<[f64; 3]>;
/// Foreground mask.
pub type BinaryMask = Raster<bool>;

impl<T: Copy> Raster<T> {
    pub fn new(width: usize, height: usize, fill: T) -> Self {
        Self {
            width,
            height,
            data: vec![fill; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    /// Pixel at signed coordinates, `None` outside the grid.
    #[inline]
    pub fn get_checked(&self, x: isize, y: isize) -> Option<T> {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            None
        } else {
            Some(self.data[y as usize * self.width + x as usize])
        }
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        self.data[y * self.width + x] = v;
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[T] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_dims<U>(&self, other: &Raster<U>) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            Err(Error::DimensionMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: other.width,
                right_h: other.height,
            })
        } else {
            Ok(())
        }
    }

    /// Copy of the axis-aligned block starting at `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::InvalidParameter(format!(
                "crop {w}x{h}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        Ok(Self::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y)))
    }
}

impl GrayImage {
    /// Validating constructor: every value must be finite and in `[0, 1]`.
    pub fn from_luminance(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if let Some(bad) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(Error::InvalidImage(format!("luminance {bad} outside [0,1]")));
        }
        Self::from_vec(width, height, data)
    }
}

impl BinaryMask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Mask pixel with coordinates clamped into the grid.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> bool {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y)
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)` of the true pixels.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bb: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    bb = Some(match bb {
                        None => (x, y, x, y),
                        Some((a, b, c, d)) => (a.min(x), b.min(y), c.max(x), d.max(y)),
                    });
                }
            }
        }
        bb
    }
}

/// Luminance conversion with weights 0.299, 0.587, 0.114.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    img.map(|p| p.luminance().clamp(0.0, 1.0))
}

/// Bilinear interpolation of the four pixel centers around `p`.
///
/// Returns `None` when `p` lies outside `[0, w-1] x [0, h-1]`.
pub fn bilinear_sample<T: Pixel>(img: &Raster<T>, p: PixelCoord) -> Option<T> {
    let (w, h) = img.dims();
    if w == 0 || h == 0 || !p.x.is_finite() || !p.y.is_finite() {
        return None;
    }
    const EPS: f64 = 1e-9;
    if p.x < -EPS || p.y < -EPS || p.x > (w - 1) as f64 + EPS || p.y > (h - 1) as f64 + EPS {
        return None;
    }
    let x = p.x.clamp(0.0, (w - 1) as f64);
    let y = p.y.clamp(0.0, (h - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    if fx == 0.0 && fy == 0.0 {
        return Some(img.get(x0, y0));
    }
    let top = img.get(x0, y0).scale(1.0 - fx).add(img.get(x1, y0).scale(fx));
    let bottom = img.get(x0, y1).scale(1.0 - fx).add(img.get(x1, y1).scale(fx));
    Some(top.scale(1.0 - fy).add(bottom.scale(fy)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grayscale_weights() {
        let img = RgbImage::from_vec(
            3,
            1,
            vec![[1.0, 1.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
        )
        .unwrap();
        let g = to_grayscale(&img);
        assert!((g.get(0, 0) - 1.0).abs() < 1e-15);
        assert_eq!(g.get(1, 0), 0.0);
        assert!((g.get(2, 0) - 0.299).abs() < 1e-15);
    }

    #[test]
    fn bilinear_integer_and_midpoint() {
        let img = GrayImage::from_vec(2, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(bilinear_sample(&img, PixelCoord::new(1.0, 0.0)), Some(1.0));
        assert_eq!(bilinear_sample(&img, PixelCoord::new(0.5, 0.0)), Some(0.5));
        assert_eq!(bilinear_sample(&img, PixelCoord::new(1.5, 0.0)), None);
        assert_eq!(bilinear_sample(&img, PixelCoord::new(-0.1, 0.0)), None);
    }

    #[test]
    fn bilinear_weight_table() {
        // 2x2 block [a b; c d], p = (0.25, 0.75):
        // weights a: 0.75*0.25, b: 0.25*0.25, c: 0.75*0.75, d: 0.25*0.75
        let (a, b, c, d) = (0.1, 0.4, 0.7, 0.9);
        let img = GrayImage::from_vec(2, 2, vec![a, b, c, d]).unwrap();
        let expected = 0.1875 * a + 0.0625 * b + 0.5625 * c + 0.1875 * d;
        let got = bilinear_sample(&img, PixelCoord::new(0.25, 0.75)).unwrap();
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
    }

    #[test]
    fn luminance_validation() {
        assert!(GrayImage::from_luminance(1, 1, vec![1.5]).is_err());
        assert!(GrayImage::from_luminance(1, 1, vec![f64::NAN]).is_err());
        assert!(GrayImage::from_luminance(2, 1, vec![0.5]).is_err());
        assert!(GrayImage::from_luminance(1, 1, vec![0.5]).is_ok());
    }
}
