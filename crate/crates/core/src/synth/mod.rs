//! Synthetic cantilever scenes with exact ground truth: rendering,
//! closed-form deflection, field-driven warping and view slicing.

mod beam;
mod scene;
mod texture;
mod truth;
mod views;

pub use beam::{cantilever_deflection, BeamSpec};
pub use scene::{fiducial_scene, render_beam, Background, BeamLayout, SceneSpec};
pub use texture::Speckle;
pub use truth::{analytic_field, analytic_field_in_frame, beam_displacement, warp_by_field, GroundTruth};
pub use views::{pose_distortion, slice_views, synthetic_poses, view_layout, ViewLayout};

/// Tip deflections of the default load cases, in pixels at the default
/// scene scale.
pub const DEFAULT_TIP_DEFLECTIONS_PX: [f64; 4] = [5.0, 10.0, 15.0, 20.0];

/// One beam per requested tip deflection (in pixels at `scene`'s scale).
pub fn load_cases(beam: &BeamSpec, scene: &SceneSpec, tips_px: &[f64]) -> Vec<BeamSpec> {
    tips_px
        .iter()
        .map(|t| beam.with_load(beam.load_for_tip(t * scene.mm_per_px)))
        .collect()
}
