//! Difference-of-Gaussians keypoints with gradient-histogram descriptors.
//!
//! Scale space follows the usual construction: an initial blur to `sigma`,
//! `scales_per_octave + 3` Gaussian layers per octave, decimation by two
//! between octaves. Extrema are refined with a quadratic fit in
//! `(x, y, scale)` and filtered by contrast and principal-curvature ratio.

use std::f32::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{GrayImage, PixelCoord};

pub const DESCRIPTOR_LEN: usize = 128;
const DESC_WIDTH: usize = 4;
const DESC_BINS: usize = 8;
const ORI_BINS: usize = 36;
const IMG_BORDER: usize = 5;
const MAX_INTERP_STEPS: usize = 5;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorParams {
    /// Lower bound on the octave count; more are added while the smallest
    /// octave stays at least 16 px on its short side.
    pub min_octaves: usize,
    pub scales_per_octave: usize,
    pub sigma: f64,
    /// Blur already present in the input.
    pub assumed_blur: f64,
    pub contrast_threshold: f64,
    pub edge_ratio: f64,
    /// Keep only the strongest responses when set.
    pub max_keypoints: Option<usize>,
}

impl Default for DetectorParams {
    fn default() -> Self {
        Self {
            min_octaves: 3,
            scales_per_octave: 3,
            sigma: 1.6,
            assumed_blur: 0.5,
            contrast_threshold: 0.03,
            edge_ratio: 10.0,
            max_keypoints: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub position: PixelCoord,
    /// Blur scale in input pixels.
    pub scale: f64,
    /// Dominant gradient direction, radians in `[0, 2π)`.
    pub orientation: f64,
    pub response: f64,
}

/// Unit-norm 128-bin gradient histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor(pub [f32; DESCRIPTOR_LEN]);

impl Descriptor {
    pub fn values(&self) -> &[f32; DESCRIPTOR_LEN] {
        &self.0
    }

    pub fn dist_sq(&self, other: &Descriptor) -> f32 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn dist(&self, other: &Descriptor) -> f32 {
        self.dist_sq(other).sqrt()
    }
}

#[derive(Clone)]
struct Plane {
    w: usize,
    h: usize,
    data: Vec<f32>,
}

impl Plane {
    #[inline]
    fn at(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.w + x]
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let radius = (3.0 * sigma).ceil().max(1.0) as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k.into_iter().map(|v| v as f32).collect()
}

#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - i - 1;
        } else {
            return i as usize;
        }
    }
}

fn blur(src: &Plane, sigma: f64) -> Plane {
    if sigma <= 1e-6 {
        return src.clone();
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let (w, h) = (src.w, src.h);
    let mut tmp = vec![0.0f32; w * h];
    for y in 0..h {
        let row = &src.data[y * w..(y + 1) * w];
        let out = &mut tmp[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0f32;
            if x as isize >= r && (x as isize + r) < w as isize {
                let base = x - r as usize;
                for (j, kv) in k.iter().enumerate() {
                    acc += kv * row[base + j];
                }
            } else {
                for (j, kv) in k.iter().enumerate() {
                    acc += kv * row[reflect(x as isize + j as isize - r, w)];
                }
            }
            out[x] = acc;
        }
    }
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        let o = &mut out[y * w..(y + 1) * w];
        for (j, kv) in k.iter().enumerate() {
            let sy = reflect(y as isize + j as isize - r, h);
            let srow = &tmp[sy * w..(sy + 1) * w];
            for x in 0..w {
                o[x] += kv * srow[x];
            }
        }
    }
    Plane { w, h, data: out }
}

fn decimate(src: &Plane) -> Plane {
    let w = src.w.div_ceil(2);
    let h = src.h.div_ceil(2);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            data.push(src.at(2 * x, 2 * y));
        }
    }
    Plane { w, h, data }
}

struct Octave {
    gauss: Vec<Plane>,
    dog: Vec<Plane>,
}

fn build_pyramid(img: &GrayImage, p: &DetectorParams, n_octaves: usize) -> Vec<Octave> {
    let s = p.scales_per_octave;
    let base = Plane {
        w: img.width(),
        h: img.height(),
        data: img.data().iter().map(|&v| v as f32).collect(),
    };
    let init = (p.sigma * p.sigma - p.assumed_blur * p.assumed_blur).max(0.01).sqrt();
    let mut current = blur(&base, init);
    let k = 2f64.powf(1.0 / s as f64);
    // incremental blur between consecutive layers
    let steps: Vec<f64> = (1..s + 3)
        .map(|i| {
            let prev = p.sigma * k.powi(i as i32 - 1);
            let total = prev * k;
            (total * total - prev * prev).sqrt()
        })
        .collect();
    let mut octaves = Vec::with_capacity(n_octaves);
    for o in 0..n_octaves {
        if o > 0 {
            current = decimate(&octaves.last().map(|oc: &Octave| oc.gauss[s].clone()).unwrap());
        }
        let mut gauss = Vec::with_capacity(s + 3);
        gauss.push(current.clone());
        for st in &steps {
            let next = blur(gauss.last().unwrap(), *st);
            gauss.push(next);
        }
        let dog = gauss
            .windows(2)
            .map(|pair| Plane {
                w: pair[0].w,
                h: pair[0].h,
                data: pair[1]
                    .data
                    .iter()
                    .zip(&pair[0].data)
                    .map(|(a, b)| a - b)
                    .collect(),
            })
            .collect();
        octaves.push(Octave { gauss, dog });
    }
    octaves
}

fn is_extremum(dog: &[Plane], layer: usize, x: usize, y: usize) -> bool {
    let v = dog[layer].at(x, y);
    let mut is_max = true;
    let mut is_min = true;
    for l in layer - 1..=layer + 1 {
        let pl = &dog[l];
        for yy in y - 1..=y + 1 {
            for xx in x - 1..=x + 1 {
                if l == layer && xx == x && yy == y {
                    continue;
                }
                let n = pl.at(xx, yy);
                is_max &= v > n;
                is_min &= v < n;
                if !is_max && !is_min {
                    return false;
                }
            }
        }
    }
    is_max || is_min
}

struct Refined {
    x: f64,
    y: f64,
    layer: usize,
    sub_layer: f64,
    response: f64,
}

fn refine(
    dog: &[Plane],
    p: &DetectorParams,
    mut x: usize,
    mut y: usize,
    mut layer: usize,
) -> Option<Refined> {
    let s = p.scales_per_octave;
    let (w, h) = (dog[0].w, dog[0].h);
    let mut offset = [0.0f64; 3];
    let mut grad = [0.0f64; 3];
    let mut converged = false;
    for _ in 0..MAX_INTERP_STEPS {
        let (c, prev, next) = (&dog[layer], &dog[layer - 1], &dog[layer + 1]);
        let v = c.at(x, y) as f64;
        let dx = (c.at(x + 1, y) as f64 - c.at(x - 1, y) as f64) * 0.5;
        let dy = (c.at(x, y + 1) as f64 - c.at(x, y - 1) as f64) * 0.5;
        let ds = (next.at(x, y) as f64 - prev.at(x, y) as f64) * 0.5;
        let dxx = c.at(x + 1, y) as f64 + c.at(x - 1, y) as f64 - 2.0 * v;
        let dyy = c.at(x, y + 1) as f64 + c.at(x, y - 1) as f64 - 2.0 * v;
        let dss = next.at(x, y) as f64 + prev.at(x, y) as f64 - 2.0 * v;
        let dxy = (c.at(x + 1, y + 1) as f64 - c.at(x - 1, y + 1) as f64 - c.at(x + 1, y - 1) as f64
            + c.at(x - 1, y - 1) as f64)
            * 0.25;
        let dxs = (next.at(x + 1, y) as f64 - next.at(x - 1, y) as f64 - prev.at(x + 1, y) as f64
            + prev.at(x - 1, y) as f64)
            * 0.25;
        let dys = (next.at(x, y + 1) as f64 - next.at(x, y - 1) as f64 - prev.at(x, y + 1) as f64
            + prev.at(x, y - 1) as f64)
            * 0.25;
        let hess = nalgebra::Matrix3::new(dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss);
        grad = [dx, dy, ds];
        let sol = hess.lu().solve(&nalgebra::Vector3::new(-dx, -dy, -ds))?;
        offset = [sol[0], sol[1], sol[2]];
        if offset.iter().all(|o| o.abs() < 0.5) {
            converged = true;
            break;
        }
        if offset.iter().any(|o| o.abs() > (i32::MAX / 3) as f64) {
            return None;
        }
        let nx = x as isize + offset[0].round() as isize;
        let ny = y as isize + offset[1].round() as isize;
        let nl = layer as isize + offset[2].round() as isize;
        if nl < 1
            || nl > s as isize
            || nx < IMG_BORDER as isize
            || ny < IMG_BORDER as isize
            || nx >= (w - IMG_BORDER) as isize
            || ny >= (h - IMG_BORDER) as isize
        {
            return None;
        }
        x = nx as usize;
        y = ny as usize;
        layer = nl as usize;
    }
    if !converged {
        return None;
    }
    let c = &dog[layer];
    let v = c.at(x, y) as f64;
    let contrast = v + 0.5 * (grad[0] * offset[0] + grad[1] * offset[1] + grad[2] * offset[2]);
    if contrast.abs() * (s as f64) < p.contrast_threshold {
        return None;
    }
    let dxx = c.at(x + 1, y) as f64 + c.at(x - 1, y) as f64 - 2.0 * v;
    let dyy = c.at(x, y + 1) as f64 + c.at(x, y - 1) as f64 - 2.0 * v;
    let dxy = (c.at(x + 1, y + 1) as f64 - c.at(x - 1, y + 1) as f64 - c.at(x + 1, y - 1) as f64
        + c.at(x - 1, y - 1) as f64)
        * 0.25;
    let tr = dxx + dyy;
    let det = dxx * dyy - dxy * dxy;
    let r = p.edge_ratio;
    if det <= 0.0 || tr * tr * r >= (r + 1.0) * (r + 1.0) * det {
        return None;
    }
    Some(Refined {
        x: x as f64 + offset[0],
        y: y as f64 + offset[1],
        layer,
        sub_layer: offset[2],
        response: contrast.abs(),
    })
}

#[inline]
fn gradient(g: &Plane, x: usize, y: usize) -> (f32, f32) {
    (
        g.at(x + 1, y) - g.at(x - 1, y),
        g.at(x, y + 1) - g.at(x, y - 1),
    )
}

fn orientations(g: &Plane, x: usize, y: usize, sigma_oct: f64) -> Vec<f64> {
    let sig_w = 1.5 * sigma_oct;
    let radius = (3.0 * sig_w).round() as isize;
    let mut hist = [0.0f64; ORI_BINS];
    let denom = -1.0 / (2.0 * sig_w * sig_w);
    for dy in -radius..=radius {
        let yy = y as isize + dy;
        if yy <= 0 || yy >= g.h as isize - 1 {
            continue;
        }
        for dx in -radius..=radius {
            let xx = x as isize + dx;
            if xx <= 0 || xx >= g.w as isize - 1 {
                continue;
            }
            let (gx, gy) = gradient(g, xx as usize, yy as usize);
            let mag = ((gx * gx + gy * gy) as f64).sqrt();
            let ang = (gy as f64).atan2(gx as f64);
            let weight = (((dx * dx + dy * dy) as f64) * denom).exp();
            let bin = ((ang * ORI_BINS as f64 / (2.0 * std::f64::consts::PI)).round() as isize)
                .rem_euclid(ORI_BINS as isize) as usize;
            hist[bin] += weight * mag;
        }
    }
    let n = ORI_BINS;
    let smooth: Vec<f64> = (0..n)
        .map(|i| {
            let at = |o: isize| hist[(i as isize + o).rem_euclid(n as isize) as usize];
            (at(-2) + at(2)) / 16.0 + (at(-1) + at(1)) * 4.0 / 16.0 + at(0) * 6.0 / 16.0
        })
        .collect();
    let max = smooth.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    for i in 0..n {
        let l = smooth[(i + n - 1) % n];
        let r = smooth[(i + 1) % n];
        let c = smooth[i];
        if c > l && c > r && c >= 0.8 * max {
            let bin = i as f64 + 0.5 * (l - r) / (l - 2.0 * c + r);
            let mut ang = bin * 2.0 * std::f64::consts::PI / n as f64;
            ang = ang.rem_euclid(2.0 * std::f64::consts::PI);
            if ang >= 2.0 * std::f64::consts::PI {
                ang = 0.0;
            }
            out.push(ang);
        }
    }
    out
}

fn describe(g: &Plane, x: f64, y: f64, sigma_oct: f64, ori: f64) -> Descriptor {
    let d = DESC_WIDTH;
    let n = DESC_BINS;
    let hist_width = 3.0 * sigma_oct;
    let radius = ((hist_width * std::f64::consts::SQRT_2 * (d as f64 + 1.0) * 0.5).round() as isize)
        .min(((g.w * g.w + g.h * g.h) as f64).sqrt() as isize);
    let (cos_t, sin_t) = ((ori.cos() / hist_width) as f32, (ori.sin() / hist_width) as f32);
    let bins_per_rad = n as f32 / (2.0 * PI);
    let exp_scale = -1.0 / (d as f32 * d as f32 * 0.5);
    let mut hist = vec![0.0f32; (d + 2) * (d + 2) * (n + 2)];
    let xi = x.round() as isize;
    let yi = y.round() as isize;
    let ori32 = ori as f32;
    for i in -radius..=radius {
        for j in -radius..=radius {
            // offset expressed in the keypoint's rotated frame
            let c_rot = j as f32 * cos_t + i as f32 * sin_t;
            let r_rot = -(j as f32) * sin_t + i as f32 * cos_t;
            let rbin = r_rot + d as f32 / 2.0 - 0.5;
            let cbin = c_rot + d as f32 / 2.0 - 0.5;
            if rbin <= -1.0 || rbin >= d as f32 || cbin <= -1.0 || cbin >= d as f32 {
                continue;
            }
            let yy = yi + i;
            let xx = xi + j;
            if yy <= 0 || yy >= g.h as isize - 1 || xx <= 0 || xx >= g.w as isize - 1 {
                continue;
            }
            let (gx, gy) = gradient(g, xx as usize, yy as usize);
            let mag = (gx * gx + gy * gy).sqrt();
            let mut angle = gy.atan2(gx) - ori32;
            angle = angle.rem_euclid(2.0 * PI);
            let obin = angle * bins_per_rad;
            let weight = ((c_rot * c_rot + r_rot * r_rot) * exp_scale).exp();
            let v = mag * weight;

            let r0 = rbin.floor();
            let c0 = cbin.floor();
            let o0 = obin.floor();
            let (dr, dc, dob) = (rbin - r0, cbin - c0, obin - o0);
            let (r0, c0) = (r0 as isize, c0 as isize);
            let o0 = (o0 as isize).rem_euclid(n as isize);
            for (ri, wr) in [(0isize, 1.0 - dr), (1, dr)] {
                for (ci, wc) in [(0isize, 1.0 - dc), (1, dc)] {
                    for (oi, wo) in [(0isize, 1.0 - dob), (1, dob)] {
                        let rr = (r0 + ri + 1) as usize;
                        let cc = (c0 + ci + 1) as usize;
                        let oo = ((o0 + oi) % n as isize) as usize;
                        hist[(rr * (d + 2) + cc) * (n + 2) + oo] += v * wr * wc * wo;
                    }
                }
            }
        }
    }
    let mut out = [0.0f32; DESCRIPTOR_LEN];
    for r in 0..d {
        for c in 0..d {
            for o in 0..n {
                out[(r * d + c) * n + o] = hist[((r + 1) * (d + 2) + c + 1) * (n + 2) + o];
            }
        }
    }
    normalize_descriptor(&mut out);
    Descriptor(out)
}

/// Normalize, clip at 0.2, renormalize. A zero vector stays zero.
fn normalize_descriptor(v: &mut [f32; DESCRIPTOR_LEN]) {
    let norm = |v: &[f32]| v.iter().map(|x| (*x as f64) * (*x as f64)).sum::<f64>().sqrt();
    let n1 = norm(v);
    if n1 <= 0.0 {
        return;
    }
    for x in v.iter_mut() {
        *x = ((*x as f64 / n1) as f32).min(0.2);
    }
    let n2 = norm(v);
    for x in v.iter_mut() {
        *x = (*x as f64 / n2) as f32;
    }
}

fn octave_count(img: &GrayImage, p: &DetectorParams) -> usize {
    let short = img.width().min(img.height()) as f64;
    let by_size = (short / 16.0).log2().floor().max(0.0) as usize + 1;
    by_size.max(p.min_octaves)
}

/// Detects keypoints and computes their descriptors.
pub fn detect_features(
    img: &GrayImage,
    params: &DetectorParams,
) -> Result<Vec<(Keypoint, Descriptor)>> {
    const MIN_SIZE: usize = 32;
    if img.width() < MIN_SIZE || img.height() < MIN_SIZE {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min: MIN_SIZE,
        });
    }
    if params.scales_per_octave == 0 || params.sigma <= 0.0 {
        return Err(Error::InvalidParameter("detector scales/sigma".into()));
    }
    let s = params.scales_per_octave;
    let n_oct = octave_count(img, params);
    let pyramid = build_pyramid(img, params, n_oct);
    let prefilter = (0.5 * params.contrast_threshold / s as f64) as f32;
    let mut out: Vec<(Keypoint, Descriptor)> = Vec::new();
    for (o, oct) in pyramid.iter().enumerate() {
        let (w, h) = (oct.dog[0].w, oct.dog[0].h);
        if w <= 2 * IMG_BORDER + 2 || h <= 2 * IMG_BORDER + 2 {
            break;
        }
        let factor = (1usize << o) as f64;
        for layer in 1..=s {
            for y in IMG_BORDER..h - IMG_BORDER {
                for x in IMG_BORDER..w - IMG_BORDER {
                    let v = oct.dog[layer].at(x, y);
                    if v.abs() <= prefilter || !is_extremum(&oct.dog, layer, x, y) {
                        continue;
                    }
                    let Some(kp) = refine(&oct.dog, params, x, y, layer) else {
                        continue;
                    };
                    let sigma_oct =
                        params.sigma * 2f64.powf((kp.layer as f64 + kp.sub_layer) / s as f64);
                    let g = &oct.gauss[kp.layer];
                    let (xi, yi) = (kp.x.round() as usize, kp.y.round() as usize);
                    for ori in orientations(g, xi, yi, sigma_oct) {
                        let desc = describe(g, kp.x, kp.y, sigma_oct, ori);
                        out.push((
                            Keypoint {
                                position: PixelCoord::new(kp.x * factor, kp.y * factor),
                                scale: sigma_oct * factor,
                                orientation: ori,
                                response: kp.response,
                            },
                            desc,
                        ));
                    }
                }
            }
        }
    }
    if let Some(limit) = params.max_keypoints {
        if out.len() > limit {
            out.sort_by(|a, b| {
                b.0.response
                    .total_cmp(&a.0.response)
                    .then(a.0.position.y.total_cmp(&b.0.position.y))
                    .then(a.0.position.x.total_cmp(&b.0.position.x))
            });
            out.truncate(limit);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(w: usize, h: usize, seed: u64) -> GrayImage {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let spots: Vec<(f64, f64, f64, f64)> = (0..60)
            .map(|_| {
                (
                    rng.random_range(0.0..w as f64),
                    rng.random_range(0.0..h as f64),
                    rng.random_range(2.0..7.0),
                    rng.random_range(-0.4..0.4),
                )
            })
            .collect();
        GrayImage::from_fn(w, h, |x, y| {
            let mut v = 0.5;
            for &(cx, cy, s, a) in &spots {
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                v += a * (-d2 / (2.0 * s * s)).exp();
            }
            v.clamp(0.0, 1.0)
        })
    }

    #[test]
    fn uniform_image_has_no_keypoints() {
        let img = GrayImage::new(64, 64, 0.4);
        assert!(detect_features(&img, &DetectorParams::default()).unwrap().is_empty());
    }

    #[test]
    fn too_small_is_error() {
        let img = GrayImage::new(31, 64, 0.4);
        assert!(matches!(
            detect_features(&img, &DetectorParams::default()),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn descriptors_are_unit_norm_and_keypoints_valid() {
        let img = blobs(128, 96, 1);
        let feats = detect_features(&img, &DetectorParams::default()).unwrap();
        assert!(feats.len() > 10, "only {} features", feats.len());
        for (kp, d) in &feats {
            let n: f64 = d.0.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-6);
            assert!(d.0.iter().all(|v| *v >= 0.0));
            assert!(kp.scale > 0.0);
            assert!((0.0..2.0 * std::f64::consts::PI).contains(&kp.orientation));
        }
    }

    #[test]
    fn brightness_shift_leaves_descriptors_unchanged() {
        let img = blobs(128, 96, 2).map(|v| v * 0.8);
        let shifted = img.map(|v| v + 0.1);
        let a = detect_features(&img, &DetectorParams::default()).unwrap();
        let b = detect_features(&shifted, &DetectorParams::default()).unwrap();
        assert_eq!(a.len(), b.len());
        for ((ka, da), (kb, db)) in a.iter().zip(&b) {
            assert!(ka.position.dist(kb.position) < 1e-3);
            for (x, y) in da.0.iter().zip(db.0.iter()) {
                assert!((x - y).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn max_keypoints_caps_output() {
        let img = blobs(128, 96, 3);
        let p = DetectorParams {
            max_keypoints: Some(5),
            ..Default::default()
        };
        assert!(detect_features(&img, &p).unwrap().len() <= 5);
    }
}
