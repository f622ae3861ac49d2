use nalgebra::{DMatrix, Matrix3, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::PixelCoord;

/// 3x3 projective map between image planes.
///
/// Stored normalized: bottom-right entry 1 when it is nonzero, unit
/// Frobenius norm otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct Homography {
    m: Matrix3<f64>,
}

/// A source/target point correspondence.
pub type PointPair = (PixelCoord, PixelCoord);

impl Homography {
    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self {
            m: Matrix3::new(1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0),
        }
    }

    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidHomography("non-finite entry".into()));
        }
        let m = normalize(m)?;
        let scale = m.norm();
        if m.determinant().abs() <= 1e-12 * scale * scale * scale {
            return Err(Error::InvalidHomography("matrix is singular".into()));
        }
        Ok(Self { m })
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::from_matrix(Matrix3::from_fn(|r, c| rows[r][c]))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let m = &self.m;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    /// Maps `p`; `None` when the homogeneous scale vanishes.
    #[inline]
    pub fn apply(&self, p: PixelCoord) -> Option<PixelCoord> {
        let m = &self.m;
        let w = m[(2, 0)] * p.x + m[(2, 1)] * p.y + m[(2, 2)];
        if w.abs() < 1e-12 || !w.is_finite() {
            return None;
        }
        let x = m[(0, 0)] * p.x + m[(0, 1)] * p.y + m[(0, 2)];
        let y = m[(1, 0)] * p.x + m[(1, 1)] * p.y + m[(1, 2)];
        Some(PixelCoord::new(x / w, y / w))
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .m
            .try_inverse()
            .ok_or_else(|| Error::InvalidHomography("matrix is singular".into()))?;
        Self::from_matrix(inv)
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Homography) -> Result<Self> {
        Self::from_matrix(self.m * other.m)
    }

    /// Largest magnitude of the projective (bottom-row) terms.
    pub fn projective_magnitude(&self) -> f64 {
        self.m[(2, 0)].abs().max(self.m[(2, 1)].abs())
    }
}

impl TryFrom<[[f64; 3]; 3]> for Homography {
    type Error = Error;
    fn try_from(rows: [[f64; 3]; 3]) -> Result<Self> {
        Homography::from_rows(rows)
    }
}

impl From<Homography> for [[f64; 3]; 3] {
    fn from(h: Homography) -> Self {
        h.rows()
    }
}

fn normalize(m: Matrix3<f64>) -> Result<Matrix3<f64>> {
    let scale = m.norm();
    if scale == 0.0 {
        return Err(Error::InvalidHomography("zero matrix".into()));
    }
    let corner = m[(2, 2)];
    if corner.abs() > 1e-12 * scale {
        Ok(m / corner)
    } else {
        Ok(m / scale)
    }
}

fn cross(o: PixelCoord, a: PixelCoord, b: PixelCoord) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn any_three_collinear(pts: &[PixelCoord; 4]) -> bool {
    let scale = pts
        .iter()
        .flat_map(|p| pts.iter().map(move |q| p.dist(*q)))
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let tol = 1e-9 * scale * scale;
    for i in 0..4 {
        for j in (i + 1)..4 {
            for k in (j + 1)..4 {
                if cross(pts[i], pts[j], pts[k]).abs() <= tol {
                    return true;
                }
            }
        }
    }
    false
}

/// Exact homography through four correspondences (8x8 linear system with
/// the bottom-right entry fixed to 1).
pub fn homography_from_4(pairs: &[PointPair; 4]) -> Result<Homography> {
    let src = [pairs[0].0, pairs[1].0, pairs[2].0, pairs[3].0];
    let dst = [pairs[0].1, pairs[1].1, pairs[2].1, pairs[3].1];
    if any_three_collinear(&src) || any_three_collinear(&dst) {
        return Err(Error::DegenerateConfiguration(
            "three of the four points are collinear".into(),
        ));
    }
    let mut a = SMatrix::<f64, 8, 8>::zeros();
    let mut b = SVector::<f64, 8>::zeros();
    for (i, (s, d)) in pairs.iter().enumerate() {
        let r = 2 * i;
        a[(r, 0)] = s.x;
        a[(r, 1)] = s.y;
        a[(r, 2)] = 1.0;
        a[(r, 6)] = -s.x * d.x;
        a[(r, 7)] = -s.y * d.x;
        b[r] = d.x;
        a[(r + 1, 3)] = s.x;
        a[(r + 1, 4)] = s.y;
        a[(r + 1, 5)] = 1.0;
        a[(r + 1, 6)] = -s.x * d.y;
        a[(r + 1, 7)] = -s.y * d.y;
        b[r + 1] = d.y;
    }
    let h = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::DegenerateConfiguration("singular 8x8 system".into()))?;
    Homography::from_matrix(Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0))
        .map_err(|_| Error::DegenerateConfiguration("singular solution".into()))
}

/// Similarity taking the points to zero centroid and mean distance √2.
fn hartley_normalizer(pts: impl Iterator<Item = PixelCoord> + Clone) -> Result<Matrix3<f64>> {
    let n = pts.clone().count() as f64;
    let (sx, sy) = pts.clone().fold((0.0, 0.0), |(a, b), p| (a + p.x, b + p.y));
    let (cx, cy) = (sx / n, sy / n);
    let mean_dist = pts.map(|p| (p.x - cx).hypot(p.y - cy)).sum::<f64>() / n;
    if mean_dist <= 1e-300 {
        return Err(Error::DegenerateConfiguration("all points coincide".into()));
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Ok(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

/// Hartley-normalized direct linear transform over `n >= 4` correspondences.
///
/// The solution is the right singular vector of the `2n x 9` design matrix
/// belonging to the smallest singular value.
pub fn dlt_homography(pairs: &[PointPair]) -> Result<Homography> {
    if pairs.len() < 4 {
        return Err(Error::NotEnoughMatches {
            found: pairs.len(),
            needed: 4,
        });
    }
    let ta = hartley_normalizer(pairs.iter().map(|p| p.0))?;
    let tb = hartley_normalizer(pairs.iter().map(|p| p.1))?;
    let rows = (2 * pairs.len()).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (s, d)) in pairs.iter().enumerate() {
        let s = ta * Vector3::new(s.x, s.y, 1.0);
        let d = tb * Vector3::new(d.x, d.y, 1.0);
        let (x, y) = (s.x / s.z, s.y / s.z);
        let (u, v) = (d.x / d.z, d.y / d.z);
        let r = 2 * i;
        let row0 = [-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u];
        let row1 = [0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v];
        for c in 0..9 {
            a[(r, c)] = row0[c];
            a[(r + 1, c)] = row1[c];
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::DegenerateConfiguration("SVD failed".into()))?;
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let (min_i, second) = (order[0], order[1]);
    let largest = sv[order[sv.len() - 1]];
    if sv[second] <= 1e-10 * largest {
        return Err(Error::DegenerateConfiguration(
            "design matrix is rank deficient".into(),
        ));
    }
    let h = v_t.row(min_i);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let tb_inv = tb
        .try_inverse()
        .ok_or_else(|| Error::DegenerateConfiguration("normalizer singular".into()))?;
    Homography::from_matrix(tb_inv * hn * ta)
        .map_err(|e| Error::DegenerateConfiguration(e.to_string()))
}

/// Transfer error `|H a - b|`, infinite when `a` maps to infinity.
#[inline]
pub fn reprojection_error(h: &Homography, pair: &PointPair) -> f64 {
    match h.apply(pair.0) {
        Some(p) => p.dist(pair.1),
        None => f64::INFINITY,
    }
}
