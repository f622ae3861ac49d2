use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::beam::{deflection_unchecked, BeamSpec};
use super::texture::Speckle;
use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, GrayImage, PixelCoord, Raster, RgbImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Background {
    Gradient,
    Noise,
}

/// Canvas and rendering options for a synthetic beam photograph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub mm_per_px: f64,
    /// Gap between the canvas edge and the clamped end.
    pub margin_px: f64,
    pub texture_seed: u64,
    pub background: Background,
    /// Typical speckle dot diameter.
    pub feature_px: f64,
    /// Std-dev of additive Gaussian noise per channel; 0 disables it.
    pub noise_sigma: f64,
    pub noise_seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            width: 2000,
            height: 600,
            mm_per_px: 2644.0 / 1800.0,
            margin_px: 100.0,
            texture_seed: 7,
            background: Background::Gradient,
            feature_px: 6.0,
            noise_sigma: 0.0,
            noise_seed: 1,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.mm_per_px > 0.0 && self.mm_per_px.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale {} must be > 0", self.mm_per_px)));
        }
        if self.width < 32 || self.height < 32 {
            return Err(Error::InvalidParameter("scene canvas must be at least 32x32".into()));
        }
        if !(self.margin_px >= 0.0) || !(self.feature_px >= 2.0) || !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidParameter(
                "margin >= 0, feature size >= 2 px and noise >= 0 required".into(),
            ));
        }
        Ok(())
    }
}

/// Where the undeformed beam sits on the canvas, in continuous pixel
/// coordinates (pixel `i` covers `[i - 0.5, i + 0.5]`).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamLayout {
    pub left: f64,
    pub top: f64,
    pub length_px: f64,
    pub height_px: f64,
    pub mm_per_px: f64,
    beam: BeamSpec,
}

impl BeamLayout {
    pub fn new(beam: &BeamSpec, scene: &SceneSpec) -> Result<Self> {
        beam.validate()?;
        scene.validate()?;
        let length_px = beam.length_mm / scene.mm_per_px;
        let height_px = beam.height_mm / scene.mm_per_px;
        let left = scene.margin_px - 0.5;
        let top = (scene.height as f64 - height_px) / 2.0 - 0.5;
        let tip_px = beam.tip_deflection() / scene.mm_per_px;
        if left + length_px > scene.width as f64 - 0.5 || top < -0.5 || top + height_px + tip_px > scene.height as f64 - 0.5 {
            return Err(Error::InvalidParameter(format!(
                "beam of {length_px:.1}x{height_px:.1} px (tip {tip_px:.1} px) does not fit a {}x{} canvas",
                scene.width, scene.height
            )));
        }
        Ok(Self {
            left,
            top,
            length_px,
            height_px,
            mm_per_px: scene.mm_per_px,
            beam: beam.clone(),
        })
    }

    /// Vertical displacement in px of the cross-section at canvas column
    /// `x`, clamped to the beam's extent.
    pub fn deflection_px(&self, x: f64) -> f64 {
        let xm = (x - self.left).clamp(0.0, self.length_px) * self.mm_per_px;
        deflection_unchecked(xm, &self.beam) / self.mm_per_px
    }

    /// Whether canvas point `p` lies on the undeformed beam.
    pub fn contains(&self, p: PixelCoord) -> bool {
        p.x >= self.left
            && p.x <= self.left + self.length_px
            && p.y >= self.top
            && p.y <= self.top + self.height_px
    }

    /// Inclusive pixel bounds `(x0, y0, x1, y1)` of the undeformed beam.
    pub fn pixel_bounds(&self) -> (usize, usize, usize, usize) {
        (
            (self.left + 0.5).ceil() as usize,
            (self.top + 0.5).ceil().max(0.0) as usize,
            (self.left + self.length_px - 0.5).floor() as usize,
            (self.top + self.height_px - 0.5).floor() as usize,
        )
    }
}

const LIGHT: [f64; 3] = [0.93, 0.86, 0.70];
const DARK: [f64; 3] = [0.10, 0.08, 0.06];

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

fn mix(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    ]
}

/// Renders the beam under `beam.load` (zero load gives the reference
/// state). The returned mask marks pixels whose center lies on the beam.
pub fn render_beam(beam: &BeamSpec, scene: &SceneSpec) -> Result<(RgbImage, BinaryMask)> {
    let lay = BeamLayout::new(beam, scene)?;
    let speckle = Speckle::new(0.0, 0.0, lay.length_px, lay.height_px, scene.feature_px, scene.texture_seed);
    let backdrop = match scene.background {
        Background::Noise => Some(Speckle::new(
            0.0,
            0.0,
            scene.width as f64,
            scene.height as f64,
            scene.feature_px * 1.5,
            scene.texture_seed ^ 0x9e37_79b9_7f4a_7c15,
        )),
        Background::Gradient => None,
    };
    let (w, h) = (scene.width, scene.height);
    let rows: Vec<(Vec<[f64; 3]>, Vec<bool>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let yf = y as f64;
            let mut px = Vec::with_capacity(w);
            let mut inside = Vec::with_capacity(w);
            for x in 0..w {
                let xf = x as f64;
                let bg = match &backdrop {
                    None => [0.30 + 0.15 * xf / w as f64, 0.42 + 0.10 * yf / h as f64, 0.62 + 0.08 * xf / w as f64],
                    Some(s) => mix([0.40, 0.50, 0.66], [0.25, 0.33, 0.48], 0.6 * s.eval(xf, yf)),
                };
                let cx = overlap(xf - 0.5, xf + 0.5, lay.left, lay.left + lay.length_px);
                let shift = lay.deflection_px(xf);
                let top = lay.top + shift;
                let cy = overlap(yf - 0.5, yf + 0.5, top, top + lay.height_px);
                let cov = cx * cy;
                let mx = xf - lay.left;
                let my = yf - top;
                inside.push((0.0..=lay.length_px).contains(&mx) && (0.0..=lay.height_px).contains(&my));
                if cov > 0.0 {
                    let beam_px = mix(LIGHT, DARK, speckle.eval(mx, my));
                    px.push(mix(bg, beam_px, cov));
                } else {
                    px.push(bg);
                }
            }
            (px, inside)
        })
        .collect();
    let mut data = Vec::with_capacity(w * h);
    let mut mask = Vec::with_capacity(w * h);
    for (p, m) in rows {
        data.extend(p);
        mask.extend(m);
    }
    if scene.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, scene.noise_sigma)
            .map_err(|e| Error::InvalidParameter(format!("noise sigma: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(scene.noise_seed);
        for p in data.iter_mut() {
            for c in p.iter_mut() {
                *c = (*c + normal.sample(&mut rng)).clamp(0.0, 1.0);
            }
        }
    }
    Ok((Raster::from_vec(w, h, data)?, Raster::from_vec(w, h, mask)?))
}

/// Gray calibration target: a low-contrast speckle backdrop with dark
/// discs (light rim) on a `pitch`-spaced grid, jittered by up to half a
/// pixel. Returns the image and the exact disc centers.
pub fn fiducial_scene(
    width: usize,
    height: usize,
    pitch: f64,
    radius: f64,
    seed: u64,
) -> Result<(GrayImage, Vec<PixelCoord>)> {
    use rand::Rng;
    if !(radius >= 2.0) || pitch < 4.0 * radius || width < 32 || height < 32 {
        return Err(Error::InvalidParameter("fiducial pitch must exceed four radii".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = Vec::new();
    let mut y = pitch / 2.0;
    while y + 2.0 * radius < height as f64 {
        let mut x = pitch / 2.0;
        while x + 2.0 * radius < width as f64 {
            centers.push(PixelCoord::new(x + rng.random_range(-0.5..0.5), y + rng.random_range(-0.5..0.5)));
            x += pitch;
        }
        y += pitch;
    }
    let backdrop = Speckle::new(0.0, 0.0, width as f64, height as f64, 6.0, seed.wrapping_add(1));
    let rim = radius + 3.0;
    let per_row = centers.iter().filter(|c| c.y < pitch).count().max(1);
    let nearest = |xf: f64, yf: f64| -> Option<PixelCoord> {
        let gx = ((xf - pitch / 2.0) / pitch).round().max(0.0) as usize;
        let gy = ((yf - pitch / 2.0) / pitch).round().max(0.0) as usize;
        if gx >= per_row {
            return None;
        }
        centers.get(gy * per_row + gx).copied()
    };
    let img = GrayImage::from_fn(width, height, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let back = 0.72 - 0.35 * backdrop.eval(xf, yf);
        let Some(c) = nearest(xf, yf).filter(|c| c.dist(PixelCoord::new(xf, yf)) < rim + 1.0) else {
            return back;
        };
        let (mut disc, mut ring) = (0, 0);
        for sy in 0..4 {
            for sx in 0..4 {
                let p = PixelCoord::new(xf - 0.375 + sx as f64 * 0.25, yf - 0.375 + sy as f64 * 0.25);
                let d = p.dist(c);
                if d <= radius {
                    disc += 1;
                } else if d <= rim {
                    ring += 1;
                }
            }
        }
        (disc as f64 * 0.04 + ring as f64 * 0.97 + (16 - disc - ring) as f64 * back) / 16.0
    });
    Ok((img, centers))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_scene() -> SceneSpec {
        SceneSpec {
            width: 400,
            height: 160,
            mm_per_px: 2.0,
            margin_px: 20.0,
            ..SceneSpec::default()
        }
    }

    fn small_beam() -> BeamSpec {
        BeamSpec {
            length_mm: 700.0,
            height_mm: 140.0,
            ..BeamSpec::default()
        }
    }

    #[test]
    fn mask_area_matches_rectangle() {
        let (_, mask) = render_beam(&small_beam(), &small_scene()).unwrap();
        let (l, hgt) = (350.0, 70.0);
        let area = mask.count() as f64;
        assert!((area - l * hgt).abs() <= 2.0 * (l + hgt), "{area}");
    }

    #[test]
    fn same_seed_identical_other_seed_differs() {
        let (a, _) = render_beam(&small_beam(), &small_scene()).unwrap();
        let (b, _) = render_beam(&small_beam(), &small_scene()).unwrap();
        assert_eq!(a, b);
        let other = SceneSpec {
            texture_seed: 99,
            ..small_scene()
        };
        let (c, _) = render_beam(&small_beam(), &other).unwrap();
        assert!(a.data().iter().zip(c.data()).any(|(p, q)| p != q));
    }

    #[test]
    fn oversized_beam_rejected() {
        let beam = BeamSpec {
            length_mm: 900.0,
            ..small_beam()
        };
        assert!(render_beam(&beam, &small_scene()).is_err());
        // a load that pushes the tip off the canvas
        let heavy = small_beam().with_load(small_beam().load_for_tip(200.0));
        assert!(render_beam(&heavy, &small_scene()).is_err());
    }

    #[test]
    fn loaded_beam_moves_down() {
        let beam = small_beam();
        let loaded = beam.with_load(beam.load_for_tip(20.0));
        let (_, m0) = render_beam(&beam, &small_scene()).unwrap();
        let (_, m1) = render_beam(&loaded, &small_scene()).unwrap();
        let bottom = |m: &BinaryMask, x: usize| (0..m.height()).rev().find(|&y| m.get(x, y)).unwrap();
        // clamped end stays, tip drops by ~10 px (20 mm at 2 mm/px)
        assert_eq!(bottom(&m0, 21), bottom(&m1, 21));
        let drop = bottom(&m1, 368) as f64 - bottom(&m0, 368) as f64;
        assert!((drop - 10.0).abs() <= 1.0, "{drop}");
    }

    #[test]
    fn noise_knob_is_seeded() {
        let noisy = SceneSpec {
            noise_sigma: 0.02,
            ..small_scene()
        };
        let (a, _) = render_beam(&small_beam(), &noisy).unwrap();
        let (b, _) = render_beam(&small_beam(), &noisy).unwrap();
        let (clean, _) = render_beam(&small_beam(), &small_scene()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, clean);
    }

    #[test]
    fn fiducials_are_dark_at_centers() {
        let (img, centers) = fiducial_scene(300, 200, 60.0, 6.0, 3).unwrap();
        assert_eq!(centers.len(), 15);
        for c in &centers {
            assert!(img.get(c.x.round() as usize, c.y.round() as usize) < 0.1);
        }
    }
}
