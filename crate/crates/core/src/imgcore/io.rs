//! PNG and binary PGM (P5) load/save. 8-bit files map to `[0, 1]` by `v / 255`.

use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat, Luma, Rgb};

use super::raster::{to_grayscale, BinaryMask, GrayImage, RgbImage};
use crate::error::{Error, Result};

fn format_for(path: &Path) -> Result<ImageFormat> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("png") => Ok(ImageFormat::Png),
        Some("pgm") | Some("pnm") => Ok(ImageFormat::Pnm),
        other => Err(Error::InvalidParameter(format!(
            "unsupported image extension {other:?} for {}",
            path.display()
        ))),
    }
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn open(path: &Path) -> Result<DynamicImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(image::load_from_memory_with_format(&bytes, format_for(path)?)?)
}

/// Loads a gray or RGB file as luminance.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    match open(path)? {
        DynamicImage::ImageLuma8(g) => {
            let (w, h) = g.dimensions();
            GrayImage::from_vec(
                w as usize,
                h as usize,
                g.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
            )
        }
        other => Ok(to_grayscale(&rgb_from_dynamic(other)?)),
    }
}

fn rgb_from_dynamic(img: DynamicImage) -> Result<RgbImage> {
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    let data = rgb
        .pixels()
        .map(|p| [p[0] as f64 / 255.0, p[1] as f64 / 255.0, p[2] as f64 / 255.0])
        .collect();
    RgbImage::from_vec(w as usize, h as usize, data)
}

pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    rgb_from_dynamic(open(path.as_ref())?)
}

/// Loads a mask; any pixel above mid-gray is foreground.
pub fn load_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    Ok(load_gray(path)?.map(|v| v > 0.5))
}

fn write(path: &Path, img: DynamicImage) -> Result<()> {
    let fmt = format_for(path)?;
    let mut buf = std::io::Cursor::new(Vec::new());
    if fmt == ImageFormat::Pnm {
        // write_to would emit PAM (P7); force binary graymap.
        let gray = img.to_luma8();
        PnmEncoder::new(&mut buf)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(gray.as_raw(), gray.width(), gray.height(), ExtendedColorType::L8)?;
    } else {
        img.write_to(&mut buf, fmt)?;
    }
    std::fs::write(path, buf.into_inner()).map_err(|e| Error::io(path, e))
}

pub fn save_gray(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let (w, h) = img.dims();
    let buf = image::ImageBuffer::<Luma<u8>, Vec<u8>>::from_raw(
        w as u32,
        h as u32,
        img.data().iter().map(|&v| to_u8(v)).collect(),
    )
    .expect("buffer size matches");
    write(path.as_ref(), DynamicImage::ImageLuma8(buf))
}

pub fn save_rgb(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let (w, h) = img.dims();
    let buf = image::ImageBuffer::<Rgb<u8>, Vec<u8>>::from_raw(
        w as u32,
        h as u32,
        img.data().iter().flat_map(|p| p.map(to_u8)).collect(),
    )
    .expect("buffer size matches");
    write(path.as_ref(), DynamicImage::ImageRgb8(buf))
}

/// Saves a mask as 0/255.
pub fn save_mask(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    save_gray(&mask.map(|b| if b { 1.0 } else { 0.0 }), path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_and_pgm_round_trip_8bit() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::from_fn(9, 5, |x, y| ((x * 31 + y * 17) % 256) as f64 / 255.0);
        for name in ["a.png", "a.pgm"] {
            let p = dir.path().join(name);
            save_gray(&img, &p).unwrap();
            let back = load_gray(&p).unwrap();
            assert_eq!(back.dims(), img.dims());
            for (a, b) in back.data().iter().zip(img.data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let pgm = std::fs::read(dir.path().join("a.pgm")).unwrap();
        assert_eq!(&pgm[..2], b"P5");
    }

    #[test]
    fn rgb_and_mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rgb = RgbImage::from_fn(4, 3, |x, y| [x as f64 / 3.0, y as f64 / 2.0, 1.0]);
        let p = dir.path().join("c.png");
        save_rgb(&rgb, &p).unwrap();
        let back = load_rgb(&p).unwrap();
        for (a, b) in back.data().iter().zip(rgb.data()) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() <= 0.5 / 255.0 + 1e-12);
            }
        }
        let mask = BinaryMask::from_fn(5, 5, |x, y| x > y);
        let mp = dir.path().join("m.png");
        save_mask(&mask, &mp).unwrap();
        assert_eq!(load_mask(&mp).unwrap(), mask);
        let raw = load_gray(&mp).unwrap();
        assert!(raw.data().iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn unknown_extension_is_error() {
        let img = GrayImage::new(2, 2, 0.0);
        assert!(save_gray(&img, "/tmp/x.bmpq").is_err());
    }
}
