use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gmm::{fit_gmm, GmmModel};
use super::maxflow::{max_flow, FlowNetwork};
use crate::error::{Error, Result};
use crate::imgcore::{largest_component, BinaryMask, Raster, RgbImage};

/// Axis-aligned pixel rectangle `x, y, w, h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.w && y >= self.y && y < self.y + self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrimapLabel {
    SureBackground,
    ProbableBackground,
    ProbableForeground,
    SureForeground,
}

impl TrimapLabel {
    fn initial_foreground(self) -> bool {
        matches!(self, TrimapLabel::ProbableForeground | TrimapLabel::SureForeground)
    }
}

pub type Trimap = Raster<TrimapLabel>;

/// Inside the rectangle probably foreground, outside surely background.
pub fn trimap_from_rect(width: usize, height: usize, rect: Rect) -> Result<Trimap> {
    if rect.w == 0 || rect.h == 0 || rect.x + rect.w > width || rect.y + rect.h > height {
        return Err(Error::InvalidParameter(format!(
            "rectangle {rect:?} not inside {width}x{height}"
        )));
    }
    Ok(Trimap::from_fn(width, height, |x, y| {
        if rect.contains(x, y) {
            TrimapLabel::ProbableForeground
        } else {
            TrimapLabel::SureBackground
        }
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrabCutParams {
    pub components: usize,
    pub gamma: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Keep only the largest 8-connected foreground region afterwards.
    pub largest_component: bool,
}

impl Default for GrabCutParams {
    fn default() -> Self {
        Self {
            components: 5,
            gamma: 50.0,
            iterations: 5,
            seed: 0,
            largest_component: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GrabCutResult {
    /// Final mask (after the optional largest-component step).
    pub mask: BinaryMask,
    /// Min-cut labeling of the last iteration.
    pub raw_mask: BinaryMask,
    /// Total energy after each iteration.
    pub energies: Vec<f64>,
}

/// 8-neighbor pairs, each once: right, down, down-right, down-left.
const PAIRS: [(isize, isize, f64); 4] = [
    (1, 0, 1.0),
    (0, 1, 1.0),
    (1, 1, std::f64::consts::SQRT_2),
    (-1, 1, std::f64::consts::SQRT_2),
];

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Pairwise weights `gamma * exp(-beta |z_m - z_n|^2) / dist`, indexed by
/// pixel and pair direction; 0 where the neighbor is outside.
fn smoothness(img: &RgbImage, gamma: f64) -> Vec<[f64; 4]> {
    let (w, h) = img.dims();
    let mut total = 0.0;
    let mut count = 0usize;
    for y in 0..h {
        for x in 0..w {
            for &(dx, dy, _) in &PAIRS {
                if let Some(q) = img.get_checked(x as isize + dx, y as isize + dy) {
                    total += dist2(img.get(x, y), q);
                    count += 1;
                }
            }
        }
    }
    let mean = if count > 0 { total / count as f64 } else { 0.0 };
    let beta = if mean > 0.0 { 1.0 / (2.0 * mean) } else { 0.0 };
    (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let z = img.get(x, y);
            let mut out = [0.0; 4];
            for (k, &(dx, dy, d)) in PAIRS.iter().enumerate() {
                if let Some(q) = img.get_checked(x as isize + dx, y as isize + dy) {
                    out[k] = gamma * (-beta * dist2(z, q)).exp() / d;
                }
            }
            out
        })
        .collect()
}

fn neighbor(w: usize, h: usize, i: usize, k: usize) -> Option<usize> {
    let (dx, dy, _) = PAIRS[k];
    let (x, y) = ((i % w) as isize + dx, (i / w) as isize + dy);
    (x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h).then(|| y as usize * w + x as usize)
}

fn refit(pixels: &[[f64; 3]], alpha: &[bool], label: bool, model: &GmmModel) -> Result<GmmModel> {
    let sel: Vec<[f64; 3]> = pixels
        .iter()
        .zip(alpha)
        .filter(|(_, &a)| a == label)
        .map(|(z, _)| *z)
        .collect();
    let assign: Vec<usize> = sel.par_iter().map(|&z| model.best(z).0).collect();
    GmmModel::from_assignment(&sel, &assign, model.len())
}

fn energy(alpha: &[bool], data: &[(f64, f64)], pair: &[[f64; 4]], w: usize, h: usize) -> f64 {
    let mut e = 0.0;
    for i in 0..alpha.len() {
        e += if alpha[i] { data[i].0 } else { data[i].1 };
        for k in 0..4 {
            if let Some(j) = neighbor(w, h, i, k) {
                if alpha[i] != alpha[j] {
                    e += pair[i][k];
                }
            }
        }
    }
    e
}

/// Iterated graph-cut segmentation from a trimap. Each iteration assigns
/// pixels to mixture components, refits both color models, and solves the
/// binary labeling by min-cut; sure labels are hard constraints.
pub fn grabcut_trimap(img: &RgbImage, trimap: &Trimap, params: &GrabCutParams) -> Result<GrabCutResult> {
    img.same_dims(trimap)?;
    if params.components == 0 || params.iterations == 0 {
        return Err(Error::InvalidParameter("GrabCut needs components >= 1 and iterations >= 1".into()));
    }
    let (w, h) = img.dims();
    let pixels = img.data();
    let labels = trimap.data();
    let mut alpha: Vec<bool> = labels.iter().map(|l| l.initial_foreground()).collect();
    let any_bg = alpha.iter().any(|a| !a);
    let any_fg = alpha.iter().any(|&a| a);
    if !any_fg {
        return Err(Error::EmptyForeground);
    }
    if !any_bg {
        // nothing to contrast against: the initial labeling is the answer
        let mask = BinaryMask::from_vec(w, h, alpha)?;
        return Ok(GrabCutResult {
            raw_mask: mask.clone(),
            mask,
            energies: Vec::new(),
        });
    }

    let pair = smoothness(img, params.gamma);
    let hard = 1.0 + pair.iter().map(|p| p.iter().sum::<f64>()).fold(0.0, f64::max) * 2.0;
    let select = |alpha: &[bool], label: bool| -> Vec<[f64; 3]> {
        pixels.iter().zip(alpha).filter(|(_, &a)| a == label).map(|(z, _)| *z).collect()
    };
    let mut fg = fit_gmm(&select(&alpha, true), params.components, params.seed)?;
    let mut bg = fit_gmm(&select(&alpha, false), params.components, params.seed.wrapping_add(1))?;
    let mut energies: Vec<f64> = Vec::with_capacity(params.iterations);

    for _ in 0..params.iterations {
        fg = refit(pixels, &alpha, true, &fg)?;
        bg = refit(pixels, &alpha, false, &bg)?;
        let data: Vec<(f64, f64)> = pixels.par_iter().map(|&z| (fg.best(z).1, bg.best(z).1)).collect();

        let mut net = FlowNetwork::new(w * h);
        for i in 0..w * h {
            match labels[i] {
                TrimapLabel::SureBackground => net.add_terminal(i, 0.0, hard),
                TrimapLabel::SureForeground => net.add_terminal(i, hard, 0.0),
                _ => {
                    // source side = foreground; cutting s->i pays the background cost
                    let (df, db) = data[i];
                    let m = df.min(db);
                    net.add_terminal(i, db - m, df - m);
                }
            }
            for k in 0..4 {
                if let Some(j) = neighbor(w, h, i, k) {
                    net.add_edge(i, j, pair[i][k], pair[i][k]);
                }
            }
        }
        alpha = max_flow(&net)?.source_side;
        if !alpha.iter().any(|&a| a) {
            return Err(Error::EmptyForeground);
        }
        let e = energy(&alpha, &data, &pair, w, h);
        if let Some(&prev) = energies.last() {
            debug_assert!(e <= prev + 1e-9 * prev.abs().max(1.0), "energy rose from {prev} to {e}");
        }
        energies.push(e);
    }

    let raw_mask = BinaryMask::from_vec(w, h, alpha)?;
    let mask = if params.largest_component {
        largest_component(&raw_mask)
    } else {
        raw_mask.clone()
    };
    Ok(GrabCutResult {
        mask,
        raw_mask,
        energies,
    })
}

/// GrabCut from a bounding rectangle.
pub fn grabcut(img: &RgbImage, rect: Rect, params: &GrabCutParams) -> Result<GrabCutResult> {
    let trimap = trimap_from_rect(img.width(), img.height(), rect)?;
    grabcut_trimap(img, &trimap, params)
}
