use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Covariance regularization added to every component.
pub const COV_EPS: f64 = 1e-4;
const KMEANS_ITERS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub weight: f64,
    pub mean: [f64; 3],
    pub cov: [[f64; 3]; 3],
    inv: Matrix3<f64>,
    /// `-ln(weight) + ln(det)/2 + eps * tr(inv)/2`
    offset: f64,
}

impl Gaussian {
    fn new(weight: f64, mean: Vector3<f64>, cov: Matrix3<f64>) -> Self {
        let inv = cov.try_inverse().unwrap_or_else(|| Matrix3::identity() / COV_EPS);
        let det = cov.determinant().max(f64::MIN_POSITIVE);
        Self {
            weight,
            mean: [mean[0], mean[1], mean[2]],
            cov: [
                [cov[(0, 0)], cov[(0, 1)], cov[(0, 2)]],
                [cov[(1, 0)], cov[(1, 1)], cov[(1, 2)]],
                [cov[(2, 0)], cov[(2, 1)], cov[(2, 2)]],
            ],
            inv,
            offset: -weight.ln() + 0.5 * det.ln() + 0.5 * COV_EPS * inv.trace(),
        }
    }

    /// Negative log-likelihood of `z` under this weighted component, up to a
    /// shared constant, with the regularizer's expected contribution added so
    /// that maximum-likelihood refits never increase the total.
    #[inline]
    pub fn cost(&self, z: [f64; 3]) -> f64 {
        let d = Vector3::new(z[0] - self.mean[0], z[1] - self.mean[1], z[2] - self.mean[2]);
        self.offset + 0.5 * d.dot(&(self.inv * d))
    }
}

/// Mixture of full-covariance color Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    pub components: Vec<Gaussian>,
}

impl GmmModel {
    /// Cheapest component for `z` and its cost.
    #[inline]
    pub fn best(&self, z: [f64; 3]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (k, g) in self.components.iter().enumerate() {
            let c = g.cost(z);
            if c < best.1 {
                best = (k, c);
            }
        }
        best
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Maximum-likelihood refit from a hard assignment; empty components
    /// are removed.
    pub fn from_assignment(pixels: &[[f64; 3]], labels: &[usize], k: usize) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::EmptyInput("no pixels for color model".into()));
        }
        let mut count = vec![0usize; k];
        let mut sum = vec![Vector3::zeros(); k];
        for (z, &l) in pixels.iter().zip(labels) {
            count[l] += 1;
            sum[l] += Vector3::from(*z);
        }
        let means: Vec<Vector3<f64>> = (0..k).map(|c| sum[c] / count[c].max(1) as f64).collect();
        let mut scatter = vec![Matrix3::zeros(); k];
        for (z, &l) in pixels.iter().zip(labels) {
            let d = Vector3::from(*z) - means[l];
            scatter[l] += d * d.transpose();
        }
        let n = pixels.len() as f64;
        let components = (0..k)
            .filter(|&c| count[c] > 0)
            .map(|c| {
                let cov = scatter[c] / count[c] as f64 + Matrix3::identity() * COV_EPS;
                Gaussian::new(count[c] as f64 / n, means[c], cov)
            })
            .collect();
        Ok(Self { components })
    }
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

fn nearest(z: &[f64; 3], centers: &[[f64; 3]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = dist2(z, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Seeded k-means++ clustering followed by per-cluster Gaussian estimation.
/// `k` shrinks to the number of pixels (or of distinct colors).
pub fn fit_gmm(pixels: &[[f64; 3]], k: usize, seed: u64) -> Result<GmmModel> {
    if pixels.is_empty() {
        return Err(Error::EmptyInput("no pixels for color model".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("GMM needs at least one component".into()));
    }
    let k = k.min(pixels.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![pixels[rng.random_range(0..pixels.len())]];
    let mut d2: Vec<f64> = pixels.iter().map(|z| dist2(z, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = pixels.len() - 1;
        for (i, &d) in d2.iter().enumerate() {
            acc += d;
            if acc > target {
                pick = i;
                break;
            }
        }
        let c = pixels[pick];
        centers.push(c);
        for (z, d) in pixels.iter().zip(d2.iter_mut()) {
            *d = d.min(dist2(z, &c));
        }
    }
    let mut labels = vec![0usize; pixels.len()];
    for _ in 0..KMEANS_ITERS {
        let mut changed = false;
        for (z, l) in pixels.iter().zip(labels.iter_mut()) {
            let (c, _) = nearest(z, &centers);
            changed |= *l != c;
            *l = c;
        }
        let mut sum = vec![[0.0; 3]; centers.len()];
        let mut cnt = vec![0usize; centers.len()];
        for (z, &l) in pixels.iter().zip(&labels) {
            for ch in 0..3 {
                sum[l][ch] += z[ch];
            }
            cnt[l] += 1;
        }
        for (c, (s, n)) in centers.iter_mut().zip(sum.iter().zip(&cnt)) {
            if *n > 0 {
                *c = [s[0] / *n as f64, s[1] / *n as f64, s[2] / *n as f64];
            }
        }
        if !changed {
            break;
        }
    }
    GmmModel::from_assignment(pixels, &labels, centers.len())
}
