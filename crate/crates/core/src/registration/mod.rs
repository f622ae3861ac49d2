//! Feature detection, exact KD-tree matching and homography estimation.

mod homography;
mod kdtree;
mod matching;
mod ransac;
mod sift;

pub use homography::{dlt_homography, homography_from_4, reprojection_error, Homography, PointPair};
pub use kdtree::{brute_force_nearest2, build_kdtree, KdTree, Neighbor};
pub use matching::{match_features, write_keypoints_csv, write_matches_csv, Match, DEFAULT_RATIO};
pub use ransac::{ransac_homography, ransac_pairs, RansacParams, RansacResult};
pub use sift::{detect_features, Descriptor, DetectorParams, Keypoint, DESCRIPTOR_LEN};
