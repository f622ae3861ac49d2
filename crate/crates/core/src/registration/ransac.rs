use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::homography::{dlt_homography, homography_from_4, reprojection_error, Homography, PointPair};
use super::matching::Match;
use super::sift::Keypoint;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RansacParams {
    /// Inlier iff transfer error is below this.
    pub threshold_px: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            threshold_px: 3.0,
            max_iters: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RansacResult {
    /// Maps points of side A onto side B.
    pub homography: Homography,
    /// Indices into the input correspondences, ascending.
    pub inliers: Vec<usize>,
}

#[derive(Clone)]
struct Candidate {
    iter: usize,
    count: usize,
    total_err: f64,
    model: Homography,
}

/// Strict total order: more inliers, then lower summed inlier error, then
/// earlier iteration.
fn prefer(a: Candidate, b: Candidate) -> Candidate {
    let a_wins = a.count > b.count
        || (a.count == b.count
            && (a.total_err < b.total_err || (a.total_err == b.total_err && a.iter < b.iter)));
    if a_wins {
        a
    } else {
        b
    }
}

fn draw_samples(n: usize, iters: usize, seed: u64) -> Vec<[usize; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..iters)
        .map(|_| {
            let mut s = [usize::MAX; 4];
            let mut k = 0;
            while k < 4 {
                let c = rng.random_range(0..n);
                if !s[..k].contains(&c) {
                    s[k] = c;
                    k += 1;
                }
            }
            s
        })
        .collect()
}

/// RANSAC over raw point correspondences `(a, b)`.
pub fn ransac_pairs(pairs: &[PointPair], params: &RansacParams) -> Result<RansacResult> {
    if pairs.len() < 4 {
        return Err(Error::NotEnoughMatches {
            found: pairs.len(),
            needed: 4,
        });
    }
    let thr = params.threshold_px;
    let samples = draw_samples(pairs.len(), params.max_iters.max(1), params.seed);
    let best = samples
        .par_iter()
        .enumerate()
        .filter_map(|(iter, s)| {
            let model = homography_from_4(&[pairs[s[0]], pairs[s[1]], pairs[s[2]], pairs[s[3]]]).ok()?;
            let (mut count, mut total_err) = (0usize, 0.0f64);
            for p in pairs {
                let e = reprojection_error(&model, p);
                if e < thr {
                    count += 1;
                    total_err += e;
                }
            }
            Some(Candidate {
                iter,
                count,
                total_err,
                model,
            })
        })
        .reduce_with(prefer)
        .ok_or(Error::NoConsensus)?;
    if best.count < 4 {
        return Err(Error::NoConsensus);
    }
    let inliers: Vec<usize> = (0..pairs.len())
        .filter(|&i| reprojection_error(&best.model, &pairs[i]) < thr)
        .collect();
    let inlier_pairs: Vec<PointPair> = inliers.iter().map(|&i| pairs[i]).collect();
    let homography = dlt_homography(&inlier_pairs).unwrap_or(best.model);
    Ok(RansacResult { homography, inliers })
}

/// Robust homography from descriptor matches; `matches[i].index_a` indexes
/// `keypoints_a`, `index_b` indexes `keypoints_b`, and the model maps A to B.
pub fn ransac_homography(
    matches: &[Match],
    keypoints_a: &[Keypoint],
    keypoints_b: &[Keypoint],
    params: &RansacParams,
) -> Result<RansacResult> {
    let pairs: Vec<PointPair> = matches
        .iter()
        .map(|m| (keypoints_a[m.index_a].position, keypoints_b[m.index_b].position))
        .collect();
    ransac_pairs(&pairs, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::PixelCoord;

    fn true_h() -> Homography {
        Homography::from_rows([[0.98, 0.04, 12.0], [-0.03, 1.01, -6.0], [2e-5, -1e-5, 1.0]]).unwrap()
    }

    fn synth(n: usize, outlier_frac: f64, seed: u64) -> (Vec<PointPair>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = true_h();
        let mut pairs = Vec::new();
        let mut is_in = Vec::new();
        for _ in 0..n {
            let a = PixelCoord::new(rng.random_range(0.0..800.0), rng.random_range(0.0..600.0));
            if rng.random_bool(outlier_frac) {
                let b = PixelCoord::new(rng.random_range(0.0..800.0), rng.random_range(0.0..600.0));
                pairs.push((a, b));
                is_in.push(false);
            } else {
                pairs.push((a, h.apply(a).unwrap()));
                is_in.push(true);
            }
        }
        (pairs, is_in)
    }

    #[test]
    fn zero_outliers_recovers_model() {
        let (pairs, _) = synth(60, 0.0, 1);
        let r = ransac_pairs(&pairs, &RansacParams::default()).unwrap();
        assert_eq!(r.inliers.len(), 60);
        let d = (r.homography.matrix() - true_h().matrix()).norm() / true_h().matrix().norm();
        assert!(d < 1e-6, "{d}");
    }

    #[test]
    fn thirty_percent_outliers() {
        let (pairs, _) = synth(150, 0.3, 2);
        let params = RansacParams {
            max_iters: 1000,
            ..Default::default()
        };
        let r = ransac_pairs(&pairs, &params).unwrap();
        let truth: Vec<usize> = (0..pairs.len())
            .filter(|&i| reprojection_error(&true_h(), &pairs[i]) < 3.0)
            .collect();
        assert_eq!(r.inliers, truth);
        let d = (r.homography.matrix() - true_h().matrix()).norm() / true_h().matrix().norm();
        assert!(d < 1e-3);
    }

    #[test]
    fn deterministic_under_seed() {
        let (pairs, _) = synth(80, 0.4, 3);
        let p = RansacParams::default();
        let a = ransac_pairs(&pairs, &p).unwrap();
        let b = ransac_pairs(&pairs, &p).unwrap();
        assert_eq!(a.inliers, b.inliers);
        assert_eq!(a.homography.rows(), b.homography.rows());
    }

    #[test]
    fn too_few_matches() {
        let (pairs, _) = synth(3, 0.0, 4);
        assert!(matches!(
            ransac_pairs(&pairs, &RansacParams::default()),
            Err(Error::NotEnoughMatches { .. })
        ));
    }

    #[test]
    fn minimal_set_with_gross_outlier_never_averages() {
        let (mut pairs, _) = synth(4, 0.0, 5);
        pairs[2].1 = PixelCoord::new(pairs[2].1.x + 250.0, pairs[2].1.y - 180.0);
        match ransac_pairs(&pairs, &RansacParams::default()) {
            Err(Error::NoConsensus) => {}
            Ok(r) => {
                // exactly interpolating model through all four points
                assert_eq!(r.inliers.len(), 4);
                for p in &pairs {
                    assert!(reprojection_error(&r.homography, p) < 1e-6);
                }
            }
            Err(e) => panic!("unexpected {e}"),
        }
    }
}
