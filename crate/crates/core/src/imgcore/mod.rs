//! Raster types and pixel-level operations shared by every stage.

mod io;
mod morph;
mod raster;
mod warp;

pub use io::{load_gray, load_mask, load_rgb, save_gray, save_mask, save_rgb};
pub use morph::{dilate3x3, label_components, largest_component, mask_and, threshold};
pub use raster::{
    bilinear_sample, to_grayscale, BinaryMask, GrayImage, Pixel, PixelCoord, Raster, RgbImage,
};
pub use warp::{warp_perspective, Warped};
