use crate::error::{Error, Result};
use crate::imgcore::{GrayImage, PixelCoord};

/// Reference patch centered on an integer pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub patch: GrayImage,
    /// Integer-valued center pixel in the reference image.
    pub center: PixelCoord,
    /// T_av.
    pub mean: f64,
}

impl Template {
    /// Cuts a `width x height` patch (both odd) around `center` rounded to
    /// the nearest pixel.
    pub fn extract(img: &GrayImage, center: PixelCoord, width: usize, height: usize) -> Result<Self> {
        if width % 2 == 0 || height % 2 == 0 || width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!("template {width}x{height} must have odd sides")));
        }
        let (cx, cy) = (center.x.round() as isize, center.y.round() as isize);
        let (hw, hh) = ((width / 2) as isize, (height / 2) as isize);
        if cx - hw < 0 || cy - hh < 0 || cx + hw >= img.width() as isize || cy + hh >= img.height() as isize {
            return Err(Error::InvalidParameter(format!(
                "template {width}x{height} at ({cx}, {cy}) leaves the image"
            )));
        }
        let patch = img.crop((cx - hw) as usize, (cy - hh) as usize, width, height)?;
        Ok(Self::from_patch(patch, PixelCoord::new(cx as f64, cy as f64)))
    }

    pub fn from_patch(patch: GrayImage, center: PixelCoord) -> Self {
        let mean = patch.data().iter().sum::<f64>() / patch.data().len() as f64;
        Self { patch, center, mean }
    }

    pub fn width(&self) -> usize {
        self.patch.width()
    }

    pub fn height(&self) -> usize {
        self.patch.height()
    }
}

/// Zero-mean normalized cross-correlation of a window against the template;
/// `None` when either operand has zero variance.
pub fn zncc(t: &Template, window: &GrayImage) -> Result<Option<f64>> {
    t.patch.same_dims(window)?;
    let n = window.data().len() as f64;
    let s_av = window.data().iter().sum::<f64>() / n;
    let (mut num, mut ss, mut tt) = (0.0, 0.0, 0.0);
    for (&s, &tv) in window.data().iter().zip(t.patch.data()) {
        let (ds, dt) = (s - s_av, tv - t.mean);
        num += ds * dt;
        ss += ds * ds;
        tt += dt * dt;
    }
    if ss == 0.0 || tt == 0.0 {
        return Ok(None);
    }
    Ok(Some((num / (ss.sqrt() * tt.sqrt())).clamp(-1.0, 1.0)))
}

/// R over the integer offsets `dx in dx_min..=dx_max`, `dy in dy_min..=dy_max`;
/// `None` entries are undefined (zero-variance window).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSurface {
    pub dx_min: isize,
    pub dx_max: isize,
    pub dy_min: isize,
    pub dy_max: isize,
    pub values: Vec<Option<f64>>,
    /// True when the requested search region was cut by the image border.
    pub clipped: bool,
}

impl CorrelationSurface {
    pub fn cols(&self) -> usize {
        (self.dx_max - self.dx_min + 1).max(0) as usize
    }

    pub fn rows(&self) -> usize {
        (self.dy_max - self.dy_min + 1).max(0) as usize
    }

    pub fn get(&self, dx: isize, dy: isize) -> Option<f64> {
        if dx < self.dx_min || dx > self.dx_max || dy < self.dy_min || dy > self.dy_max {
            return None;
        }
        self.values[(dy - self.dy_min) as usize * self.cols() + (dx - self.dx_min) as usize]
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Evaluates R at every integer offset within `radius` whose window fits in
/// `deformed`. Window means and variances come from local running sums;
/// the cross term is a direct dot product with the zero-mean template.
pub fn correlate(t: &Template, deformed: &GrayImage, radius: usize) -> CorrelationSurface {
    let (tw, th) = (t.width() as isize, t.height() as isize);
    let (hw, hh) = (tw / 2, th / 2);
    let (cx, cy) = (t.center.x as isize, t.center.y as isize);
    let (w, h) = (deformed.width() as isize, deformed.height() as isize);
    let r = radius as isize;
    let dx_min = (-r).max(hw - cx);
    let dx_max = r.min(w - 1 - hw - cx);
    let dy_min = (-r).max(hh - cy);
    let dy_max = r.min(h - 1 - hh - cy);
    let clipped = dx_min != -r || dx_max != r || dy_min != -r || dy_max != r;
    if dx_min > dx_max || dy_min > dy_max {
        return CorrelationSurface {
            dx_min: 0,
            dx_max: -1,
            dy_min: 0,
            dy_max: -1,
            values: Vec::new(),
            clipped: true,
        };
    }

    // search region in image coordinates
    let rx0 = cx + dx_min - hw;
    let ry0 = cy + dy_min - hh;
    let rw = (dx_max - dx_min + tw) as usize;
    let rh = (dy_max - dy_min + th) as usize;
    let region: Vec<f64> = (0..rh)
        .flat_map(|y| {
            let row = deformed.row(ry0 as usize + y);
            row[rx0 as usize..rx0 as usize + rw].to_vec()
        })
        .collect();
    let iw = rw + 1;
    let mut sum = vec![0.0f64; iw * (rh + 1)];
    let mut sum2 = vec![0.0f64; iw * (rh + 1)];
    for y in 0..rh {
        let (mut a, mut b) = (0.0, 0.0);
        for x in 0..rw {
            let v = region[y * rw + x];
            a += v;
            b += v * v;
            sum[(y + 1) * iw + x + 1] = sum[y * iw + x + 1] + a;
            sum2[(y + 1) * iw + x + 1] = sum2[y * iw + x + 1] + b;
        }
    }
    let box_sum = |s: &[f64], x: usize, y: usize| {
        let (x1, y1) = (x + tw as usize, y + th as usize);
        s[y1 * iw + x1] - s[y * iw + x1] - s[y1 * iw + x] + s[y * iw + x]
    };

    let tz: Vec<f64> = t.patch.data().iter().map(|v| v - t.mean).collect();
    let tt: f64 = tz.iter().map(|v| v * v).sum();
    let n = (tw * th) as f64;
    let (tw_u, th_u) = (tw as usize, th as usize);
    let cols = (dx_max - dx_min + 1) as usize;
    let rows = (dy_max - dy_min + 1) as usize;
    let mut values = Vec::with_capacity(cols * rows);
    for oy in 0..rows {
        for ox in 0..cols {
            if tt == 0.0 {
                values.push(None);
                continue;
            }
            let s1 = box_sum(&sum, ox, oy);
            let mut ss = box_sum(&sum2, ox, oy) - s1 * s1 / n;
            if ss < 1e-9 {
                // running sums cannot resolve near-constant windows; redo exactly
                let mean = s1 / n;
                ss = 0.0;
                for y in 0..th_u {
                    for x in 0..tw_u {
                        let d = region[(oy + y) * rw + ox + x] - mean;
                        ss += d * d;
                    }
                }
            }
            if ss <= 0.0 {
                values.push(None);
                continue;
            }
            let mut num = 0.0;
            for y in 0..th_u {
                let srow = &region[(oy + y) * rw + ox..(oy + y) * rw + ox + tw_u];
                let trow = &tz[y * tw_u..(y + 1) * tw_u];
                num += srow.iter().zip(trow).map(|(a, b)| a * b).sum::<f64>();
            }
            values.push(Some((num / (ss.sqrt() * tt.sqrt())).clamp(-1.0, 1.0)));
        }
    }
    CorrelationSurface {
        dx_min,
        dx_max,
        dy_min,
        dy_max,
        values,
        clipped,
    }
}

/// Maximum defined entry; ties go to the smaller offset magnitude, then to
/// the earlier entry in row-major order.
pub fn peak(s: &CorrelationSurface) -> Option<((isize, isize), f64)> {
    let cols = s.cols();
    let mut best: Option<((isize, isize), f64)> = None;
    for (i, v) in s.values.iter().enumerate() {
        let Some(r) = *v else { continue };
        let off = (s.dx_min + (i % cols) as isize, s.dy_min + (i / cols) as isize);
        let better = match best {
            None => true,
            Some((bo, br)) => r > br || (r == br && off.0 * off.0 + off.1 * off.1 < bo.0 * bo.0 + bo.1 * bo.1),
        };
        if better {
            best = Some((off, r));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subpixel {
    pub du: f64,
    pub dv: f64,
    pub refined: bool,
}

fn parabola(rm: f64, r0: f64, rp: f64) -> Option<f64> {
    let den = rm - 2.0 * r0 + rp;
    if den >= 0.0 || !den.is_finite() {
        return None;
    }
    Some(((rm - rp) / (2.0 * den)).clamp(-0.5, 0.5))
}

/// Independent 1-D parabola fits through the peak and its axis neighbors.
pub fn subpixel_refine(s: &CorrelationSurface, at: (isize, isize)) -> Subpixel {
    let unrefined = Subpixel {
        du: 0.0,
        dv: 0.0,
        refined: false,
    };
    let (dx, dy) = at;
    let (Some(r0), Some(xm), Some(xp), Some(ym), Some(yp)) = (
        s.get(dx, dy),
        s.get(dx - 1, dy),
        s.get(dx + 1, dy),
        s.get(dx, dy - 1),
        s.get(dx, dy + 1),
    ) else {
        return unrefined;
    };
    match (parabola(xm, r0, xp), parabola(ym, r0, yp)) {
        (Some(du), Some(dv)) => Subpixel { du, dv, refined: true },
        _ => unrefined,
    }
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn patch(w: usize, h: usize, v: &[f64]) -> GrayImage {
        GrayImage::from_vec(w, h, v[..w * h].to_vec()).unwrap()
    }

    proptest! {
        #[test]
        fn bounded_and_affine_invariant(
            t in prop::collection::vec(0.0..1.0f64, 25),
            s in prop::collection::vec(0.0..1.0f64, 25),
            a in 0.01..100.0f64,
            b in -10.0..10.0f64,
        ) {
            let tpl = Template::from_patch(patch(5, 5, &t), PixelCoord::new(2.0, 2.0));
            let win = patch(5, 5, &s);
            let Some(r) = zncc(&tpl, &win).unwrap() else { return Ok(()) };
            prop_assert!((-1.0..=1.0).contains(&r));
            let r2 = zncc(&tpl, &win.map(|v| a * v + b)).unwrap().unwrap();
            prop_assert!((r - r2).abs() < 1e-9);
        }

        #[test]
        fn negated_window_flips_sign(t in prop::collection::vec(0.0..1.0f64, 9), s in prop::collection::vec(0.0..1.0f64, 9)) {
            let tpl = Template::from_patch(patch(3, 3, &t), PixelCoord::new(1.0, 1.0));
            let win = patch(3, 3, &s);
            if let (Some(r), Some(n)) = (zncc(&tpl, &win).unwrap(), zncc(&tpl, &win.map(|v| -v)).unwrap()) {
                prop_assert!((r + n).abs() < 1e-12);
            }
        }
    }
}
