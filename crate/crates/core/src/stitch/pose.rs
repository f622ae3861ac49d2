use std::path::Path;

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{warp_perspective, Pixel, Raster, Warped};
use crate::registration::Homography;

/// Camera orientation for one view plus pinhole intrinsics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    /// Axis-angle, radians.
    pub rotation: [f64; 3],
    /// Millimeters. Carried for completeness; the rotation-only model
    /// ignores it and registration absorbs any shift.
    pub translation: [f64; 3],
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraPose {
    /// Pose with no rotation and the principal point at the image center.
    pub fn fronto(focal: f64, width: usize, height: usize) -> Self {
        Self {
            rotation: [0.0; 3],
            translation: [0.0; 3],
            focal,
            cx: (width as f64 - 1.0) / 2.0,
            cy: (height as f64 - 1.0) / 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.rotation.iter().chain(&self.translation).all(|v| v.is_finite())
            && self.cx.is_finite()
            && self.cy.is_finite();
        if !finite || !(self.focal > 0.0) || !self.focal.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "camera pose needs finite values and focal > 0, got {self:?}"
            )));
        }
        Ok(())
    }

    fn intrinsics(&self) -> Matrix3<f64> {
        Matrix3::new(self.focal, 0.0, self.cx, 0.0, self.focal, self.cy, 0.0, 0.0, 1.0)
    }
}

/// `K·R·K⁻¹`: the image-plane map that undoes the view's rotation.
pub fn pose_homography(pose: &CameraPose) -> Result<Homography> {
    pose.validate()?;
    if pose.rotation == [0.0; 3] {
        return Ok(Homography::identity());
    }
    let k = pose.intrinsics();
    let k_inv = k
        .try_inverse()
        .ok_or_else(|| Error::InvalidParameter("singular intrinsics".into()))?;
    let r = Rotation3::new(Vector3::from(pose.rotation));
    Homography::from_matrix(k * r.matrix() * k_inv)
}

/// Re-projects a view onto a plane parallel to the structure. The output
/// canvas has the input's size.
pub fn foreshortening_correct<T: Pixel>(img: &Raster<T>, pose: &CameraPose) -> Result<Warped<T>> {
    let h = pose_homography(pose)?;
    warp_perspective(img, &h, img.width(), img.height())
}

#[derive(Debug, Serialize, Deserialize)]
struct PoseRow {
    view: usize,
    rx: f64,
    ry: f64,
    rz: f64,
    tx: f64,
    ty: f64,
    tz: f64,
    f: f64,
    cx: f64,
    cy: f64,
}

/// Pose file, one row per view in view order.
pub fn write_poses_csv(path: impl AsRef<Path>, poses: &[CameraPose]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    for (view, p) in poses.iter().enumerate() {
        w.serialize(PoseRow {
            view,
            rx: p.rotation[0],
            ry: p.rotation[1],
            rz: p.rotation[2],
            tx: p.translation[0],
            ty: p.translation[1],
            tz: p.translation[2],
            f: p.focal,
            cx: p.cx,
            cy: p.cy,
        })?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

/// Reads a pose file; rows may come in any order but must cover
/// `0..n` exactly once.
pub fn read_poses_csv(path: impl AsRef<Path>) -> Result<Vec<CameraPose>> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    let mut rows: Vec<PoseRow> = r.deserialize().collect::<std::result::Result<_, _>>()?;
    rows.sort_by_key(|r| r.view);
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.into_iter().enumerate() {
        if row.view != i {
            return Err(Error::InvalidParameter(format!(
                "pose file: expected view {i}, found {}",
                row.view
            )));
        }
        let pose = CameraPose {
            rotation: [row.rx, row.ry, row.rz],
            translation: [row.tx, row.ty, row.tz],
            focal: row.f,
            cx: row.cx,
            cy: row.cy,
        };
        pose.validate()?;
        out.push(pose);
    }
    Ok(out)
}
