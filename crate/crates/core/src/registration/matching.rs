use std::path::Path;

use serde::{Deserialize, Serialize};

use super::kdtree::KdTree;
use super::sift::{Descriptor, Keypoint};
use crate::error::{Error, Result};

/// Correspondence between query descriptor `index_a` and stored
/// descriptor `index_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub index_a: usize,
    pub index_b: usize,
    pub distance: f64,
    /// Best over second-best distance.
    pub ratio: f64,
}

pub const DEFAULT_RATIO: f64 = 0.75;

/// Nearest-neighbour matching with the best/second-best ratio test.
pub fn match_features(tree_b: &KdTree, descs_a: &[Descriptor], ratio_threshold: f64) -> Vec<Match> {
    descs_a
        .iter()
        .enumerate()
        .filter_map(|(ia, d)| {
            let nn = tree_b.nearest2(d);
            let best = nn.first()?;
            let ratio = match nn.get(1) {
                None => 0.0,
                Some(second) if second.distance > 0.0 => {
                    (best.distance / second.distance) as f64
                }
                Some(_) => 1.0,
            };
            (ratio < ratio_threshold).then_some(Match {
                index_a: ia,
                index_b: best.index,
                distance: best.distance as f64,
                ratio,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct KeypointRow {
    x: f64,
    y: f64,
    scale: f64,
    orientation: f64,
}

pub fn write_keypoints_csv(path: impl AsRef<Path>, kps: &[Keypoint]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(Error::from)?;
    for k in kps {
        w.serialize(KeypointRow {
            x: k.position.x,
            y: k.position.y,
            scale: k.scale,
            orientation: k.orientation,
        })?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_matches_csv(path: impl AsRef<Path>, matches: &[Match]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for m in matches {
        w.serialize(m)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
