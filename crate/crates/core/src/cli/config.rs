use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nodematch::MatchParams;
use crate::segment::{GrabCutParams, Rect};
use crate::stitch::RegistrationParams;
use crate::synth::{BeamSpec, SceneSpec, DEFAULT_TIP_DEFLECTIONS_PX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageName {
    Synth,
    Stitch,
    Segment,
    Mesh,
    Solve,
    Eval,
}

impl StageName {
    pub const ALL: [StageName; 6] = [
        StageName::Synth,
        StageName::Stitch,
        StageName::Segment,
        StageName::Mesh,
        StageName::Solve,
        StageName::Eval,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StageName::Synth => "synth",
            StageName::Stitch => "stitch",
            StageName::Segment => "segment",
            StageName::Mesh => "mesh",
            StageName::Solve => "solve",
            StageName::Eval => "eval",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub beam: BeamSpec,
    pub scene: SceneSpec,
    /// One load case per entry, as tip deflection in pixels.
    pub tips_px: Vec<f64>,
    pub views: usize,
    pub overlap: f64,
    pub focal_px: f64,
    pub max_yaw_deg: f64,
    pub max_pitch_deg: f64,
    pub pose_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            beam: BeamSpec::default(),
            scene: SceneSpec::default(),
            tips_px: DEFAULT_TIP_DEFLECTIONS_PX.to_vec(),
            views: 4,
            overlap: 0.3,
            focal_px: 1200.0,
            max_yaw_deg: 2.0,
            max_pitch_deg: 1.0,
            pose_seed: 11,
        }
    }
}

/// External image sets; when empty the synth stage's outputs are used.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputConfig {
    /// Reference-state views, left to right.
    pub reference_views: Vec<PathBuf>,
    /// One list of views per load case, same camera positions.
    pub deformed_views: Vec<Vec<PathBuf>>,
    /// Pose CSV for the views.
    pub poses: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StitchConfig {
    pub registration: RegistrationParams,
    /// Apply foreshortening correction when a pose file is available.
    pub use_poses: bool,
}

impl Default for StitchConfig {
    fn default() -> Self {
        Self {
            registration: RegistrationParams::default(),
            use_poses: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegmentConfig {
    /// Panorama rectangle around the structure. Derived from the synthetic
    /// scene when absent.
    pub rect: Option<Rect>,
    /// Slack added around a derived rectangle.
    pub rect_margin_px: usize,
    pub grabcut: GrabCutParams,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            rect: None,
            rect_margin_px: 20,
            grabcut: GrabCutParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub cell_px: usize,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { cell_px: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldConfig {
    pub spacing: usize,
    /// Conversion coefficient. Falls back to the synthetic scene's scale.
    pub mm_per_px: Option<f64>,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            spacing: 4,
            mm_per_px: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Field CSVs to score instead of the solve outputs, one per case.
    pub measured_fields: Vec<PathBuf>,
    /// Reference field CSVs, one per case. Without them the synthetic
    /// ground truth is used.
    pub reference_fields: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub cells_px: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            cells_px: vec![50, 68, 87, 106, 125],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Overrides every per-stage seed when set.
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out_dir: PathBuf,
    /// Stages `pipeline` runs; the rest must already have their outputs
    /// in `out_dir`.
    pub stages: Vec<StageName>,
    pub synth: SynthConfig,
    pub inputs: InputConfig,
    pub stitch: StitchConfig,
    pub segment: SegmentConfig,
    pub mesh: MeshConfig,
    pub solve: MatchParams,
    pub field: FieldConfig,
    pub eval: EvalConfig,
    pub sweep: SweepConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: None,
            threads: None,
            out_dir: PathBuf::from("out"),
            stages: StageName::ALL.to_vec(),
            synth: SynthConfig::default(),
            inputs: InputConfig::default(),
            stitch: StitchConfig::default(),
            segment: SegmentConfig::default(),
            mesh: MeshConfig::default(),
            solve: MatchParams::default(),
            field: FieldConfig::default(),
            eval: EvalConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Replaces every stage seed with values derived from `seed`.
    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.synth.scene.texture_seed = seed;
        self.synth.scene.noise_seed = seed.wrapping_add(1);
        self.synth.pose_seed = seed.wrapping_add(2);
        self.stitch.registration.ransac.seed = seed;
        self.segment.grabcut.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.synth;
        s.beam.validate().map_err(|e| Error::Config(e.to_string()))?;
        s.scene.validate().map_err(|e| Error::Config(e.to_string()))?;
        check(!s.tips_px.is_empty() || !self.inputs.deformed_views.is_empty(), || {
            "no load cases: synth.tips_px and inputs.deformed_views are both empty".into()
        })?;
        check(s.tips_px.iter().all(|t| t.is_finite() && *t >= 0.0), || {
            format!("synth.tips_px must be non-negative, got {:?}", s.tips_px)
        })?;
        check(s.views >= 1 && s.views <= 64, || format!("synth.views {} outside 1..=64", s.views))?;
        check(s.overlap > 0.1 && s.overlap < 0.9, || format!("synth.overlap {} outside (0.1, 0.9)", s.overlap))?;
        check(s.focal_px > 0.0, || "synth.focal_px must be > 0".into())?;
        check(
            (0.0..=20.0).contains(&s.max_yaw_deg) && (0.0..=20.0).contains(&s.max_pitch_deg),
            || "synth rotation bounds must lie in [0, 20] degrees".into(),
        )?;
        check(self.threads != Some(0), || "threads must be >= 1".into())?;
        let r = &self.stitch.registration;
        check(r.ratio > 0.0 && r.ratio <= 1.0, || format!("stitch.registration.ratio {} outside (0, 1]", r.ratio))?;
        check(r.ransac.threshold_px > 0.0 && r.ransac.max_iters > 0, || {
            "RANSAC threshold and iteration count must be positive".into()
        })?;
        let g = &self.segment.grabcut;
        check(g.components >= 1 && g.iterations >= 1 && g.gamma > 0.0, || {
            "grabcut needs components >= 1, iterations >= 1, gamma > 0".into()
        })?;
        check(self.mesh.cell_px >= 8, || format!("mesh.cell_px {} < 8", self.mesh.cell_px))?;
        self.solve.validate().map_err(|e| Error::Config(e.to_string()))?;
        check(self.field.spacing >= 1, || "field.spacing must be >= 1".into())?;
        check(self.field.mm_per_px.is_none_or(|k| k > 0.0 && k.is_finite()), || {
            "field.mm_per_px must be > 0".into()
        })?;
        check(self.sweep.cells_px.iter().all(|&c| c >= 8), || "sweep cells must be >= 8".into())?;
        check(
            self.inputs.deformed_views.is_empty() || !self.inputs.reference_views.is_empty(),
            || "inputs.deformed_views given without inputs.reference_views".into(),
        )?;
        for (i, d) in self.inputs.deformed_views.iter().enumerate() {
            check(d.len() == self.inputs.reference_views.len(), || {
                format!(
                    "case {i} has {} views, reference has {}",
                    d.len(),
                    self.inputs.reference_views.len()
                )
            })?;
        }
        Ok(())
    }

    /// Number of load cases the run processes.
    pub fn case_count(&self) -> usize {
        if self.inputs.deformed_views.is_empty() {
            self.synth.tips_px.len()
        } else {
            self.inputs.deformed_views.len()
        }
    }
}

pub fn case_name(i: usize) -> String {
    format!("case{i}")
}
