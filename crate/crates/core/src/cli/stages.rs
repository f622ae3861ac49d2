use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{case_name, PipelineConfig};
use super::manifest::StageFiles;
use crate::error::{Error, Result};
use crate::field::{
    assemble_field, compare_fields, read_field_csv, render_heatmap, scale_to_mm, write_field_csv,
    DisplacementField, FieldReport,
};
use crate::imgcore::{
    load_gray, load_mask, load_rgb, mask_and, save_gray, save_mask, save_rgb, to_grayscale, PixelCoord, RgbImage,
};
use crate::mesh::{load_mesh, mesh_structure, render_overlay, save_mesh, GridSpec};
use crate::nodematch::{fill_invalid, node_displacements, write_nodes_csv};
use crate::registration::Homography;
use crate::segment::{apply_mask, grabcut, Rect};
use crate::stitch::{
    apply_stitch, load_geometry, plan_stitch, read_poses_csv, save_geometry, write_poses_csv, CameraPose, StitchGeometry,
};
use crate::synth::{
    analytic_field, analytic_field_in_frame, load_cases, pose_distortion, render_beam, slice_views, synthetic_poses,
    view_layout, BeamLayout, BeamSpec, SceneSpec,
};

/// Where each stage reads and writes inside the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
    pub synth: PathBuf,
    pub stitch: PathBuf,
    pub segment: PathBuf,
    pub mesh: PathBuf,
    pub solve: PathBuf,
    pub eval: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        let root = root.into();
        Self {
            synth: root.join("synth"),
            stitch: root.join("stitch"),
            segment: root.join("segment"),
            mesh: root.join("mesh"),
            solve: root.join("solve"),
            eval: root.join("eval"),
            root,
        }
    }

    /// Mesh, solve and eval redirected under `sweep/cell<N>`; earlier
    /// stages are shared.
    pub fn for_sweep(&self, cell: usize) -> Self {
        let dir = self.root.join("sweep").join(format!("cell{cell}"));
        Self {
            mesh: dir.join("mesh"),
            solve: dir.join("solve"),
            eval: dir.join("eval"),
            ..self.clone()
        }
    }

    pub fn field_csv(&self, case: usize) -> PathBuf {
        self.solve.join(format!("field_{}.csv", case_name(case)))
    }

    pub fn report_json(&self, case: usize) -> PathBuf {
        self.eval.join(format!("report_{}.json", case_name(case)))
    }
}

fn ensure_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub name: String,
    pub tip_px: f64,
    pub tip_mm: f64,
    pub load_n: f64,
}

/// Everything the synth stage generated, enough to rebuild the ground
/// truth later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    /// Unloaded beam.
    pub beam: BeamSpec,
    pub scene: SceneSpec,
    pub cases: Vec<CaseRecord>,
    pub views: usize,
    pub overlap: f64,
    pub view_width: usize,
    pub view_offsets: Vec<usize>,
    pub poses: Vec<CameraPose>,
}

pub fn load_scene_record(lay: &Layout) -> Result<Option<SceneRecord>> {
    let p = lay.synth.join("scene.json");
    if p.exists() {
        Ok(Some(read_json(&p)?))
    } else {
        Ok(None)
    }
}

pub fn run_synth(cfg: &PipelineConfig, lay: &Layout, files: &mut StageFiles) -> Result<()> {
    let s = &cfg.synth;
    ensure_dir(&lay.synth.join("views"))?;
    let beam = s.beam.with_load(0.0);
    let (reference, mask) = render_beam(&beam, &s.scene)?;
    save_rgb(&reference, files.wrote(lay.synth.join("reference.png")))?;
    save_mask(&mask, files.wrote(lay.synth.join("truth_mask.png")))?;

    let vl = view_layout(s.scene.width, s.scene.height, s.views, s.overlap)?;
    let poses = synthetic_poses(
        s.views,
        vl.view_width,
        vl.height,
        s.focal_px,
        s.max_yaw_deg,
        s.max_pitch_deg,
        s.pose_seed,
    );
    let distortions: Vec<Homography> = poses.iter().map(pose_distortion).collect::<Result<_>>()?;
    write_poses_csv(files.wrote(lay.synth.join("poses.csv")), &poses)?;
    let save_views = |views: Vec<RgbImage>, prefix: &str, files: &mut StageFiles| -> Result<()> {
        for (j, v) in views.iter().enumerate() {
            save_rgb(v, files.wrote(lay.synth.join("views").join(format!("{prefix}_{j}.png"))))?;
        }
        Ok(())
    };
    save_views(slice_views(&reference, s.views, s.overlap, &distortions)?, "reference", files)?;

    let mut cases = Vec::new();
    for (i, case) in load_cases(&beam, &s.scene, &s.tips_px).iter().enumerate() {
        let name = case_name(i);
        let (img, _) = render_beam(case, &s.scene)?;
        save_rgb(&img, files.wrote(lay.synth.join(format!("{name}.png"))))?;
        save_views(slice_views(&img, s.views, s.overlap, &distortions)?, &name, files)?;
        let truth = analytic_field(case, &s.scene, cfg.field.spacing)?;
        write_field_csv(&truth.field, files.wrote(lay.synth.join(format!("truth_{name}.csv"))))?;
        cases.push(CaseRecord {
            name,
            tip_px: s.tips_px[i],
            tip_mm: case.tip_deflection(),
            load_n: case.load,
        });
    }
    let record = SceneRecord {
        beam,
        scene: s.scene.clone(),
        cases,
        views: s.views,
        overlap: s.overlap,
        view_width: vl.view_width,
        view_offsets: vl.offsets,
        poses,
    };
    write_json(&files.wrote(lay.synth.join("scene.json")), &record)
}

struct ViewSets {
    reference: Vec<PathBuf>,
    cases: Vec<Vec<PathBuf>>,
    poses: Option<PathBuf>,
}

fn view_sets(cfg: &PipelineConfig, lay: &Layout) -> Result<ViewSets> {
    if !cfg.inputs.reference_views.is_empty() {
        return Ok(ViewSets {
            reference: cfg.inputs.reference_views.clone(),
            cases: cfg.inputs.deformed_views.clone(),
            poses: cfg.inputs.poses.clone(),
        });
    }
    let record = load_scene_record(lay)?.ok_or_else(|| {
        Error::EmptyInput("no inputs.reference_views and no synth outputs to stitch".into())
    })?;
    let views = |prefix: &str| -> Vec<PathBuf> {
        (0..record.views)
            .map(|j| lay.synth.join("views").join(format!("{prefix}_{j}.png")))
            .collect()
    };
    Ok(ViewSets {
        reference: views("reference"),
        cases: (0..record.cases.len()).map(|i| views(&case_name(i))).collect(),
        poses: Some(lay.synth.join("poses.csv")),
    })
}

fn load_views(paths: &[PathBuf], files: &mut StageFiles) -> Result<Vec<RgbImage>> {
    paths.iter().map(|p| load_rgb(files.read(p))).collect()
}

pub fn run_stitch(cfg: &PipelineConfig, lay: &Layout, files: &mut StageFiles) -> Result<()> {
    ensure_dir(&lay.stitch)?;
    let sets = view_sets(cfg, lay)?;
    let poses: Option<Vec<CameraPose>> = match (&sets.poses, cfg.stitch.use_poses) {
        (Some(p), true) => Some(read_poses_csv(files.read(p))?),
        _ => None,
    };
    let reference = load_views(&sets.reference, files)?;
    let gray: Vec<_> = reference.iter().map(to_grayscale).collect();
    let geometry = plan_stitch(&gray, poses.as_deref(), &cfg.stitch.registration)?;
    for (i, p) in geometry.pairs.iter().enumerate() {
        if p.inliers < 20 {
            files.warn(format!("views {i}-{}: only {} RANSAC inliers", i + 1, p.inliers));
        }
    }
    save_geometry(files.wrote(lay.stitch.join("transforms.json")), &geometry)?;
    let pano = apply_stitch(&reference, &geometry)?;
    save_rgb(&pano.image, files.wrote(lay.stitch.join("reference.png")))?;
    save_mask(&pano.validity, files.wrote(lay.stitch.join("validity.png")))?;
    for (i, case) in sets.cases.iter().enumerate() {
        let views = load_views(case, files)?;
        let p = apply_stitch(&views, &geometry)?;
        save_rgb(&p.image, files.wrote(lay.stitch.join(format!("{}.png", case_name(i)))))?;
    }
    Ok(())
}

/// Panorama position of the synthetic scene's origin.
impl SceneRecord {
    /// Panorama position of scene pixel `(0, 0)` under `geometry`.
    pub fn panorama_offset(&self, geometry: &StitchGeometry) -> PixelCoord {
        PixelCoord::new(
            geometry.canvas.offset_x + self.view_offsets[0] as f64,
            geometry.canvas.offset_y,
        )
    }
}

fn derived_rect(cfg: &PipelineConfig, lay: &Layout, width: usize, height: usize) -> Result<Rect> {
    let record = load_scene_record(lay)?.ok_or_else(|| {
        Error::Config("segment.rect is required when there is no synthetic scene".into())
    })?;
    let geometry = load_geometry(lay.stitch.join("transforms.json"))?;
    let off = record.panorama_offset(&geometry);
    let (x0, y0, x1, y1) = BeamLayout::new(&record.beam, &record.scene)?.pixel_bounds();
    let m = cfg.segment.rect_margin_px as f64;
    let clamp = |v: f64, hi: usize| v.clamp(0.0, hi as f64 - 1.0) as usize;
    let (a, b) = (clamp(x0 as f64 + off.x - m, width), clamp(y0 as f64 + off.y - m, height));
    let (c, d) = (clamp(x1 as f64 + off.x + m, width), clamp(y1 as f64 + off.y + m, height));
    Ok(Rect {
        x: a,
        y: b,
        w: c - a + 1,
        h: d - b + 1,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SegmentRecord {
    rect: Rect,
    energies: Vec<f64>,
    foreground_px: usize,
}

pub fn run_segment(cfg: &PipelineConfig, lay: &Layout, files: &mut StageFiles) -> Result<()> {
    ensure_dir(&lay.segment)?;
    let pano = load_rgb(files.read(lay.stitch.join("reference.png")))?;
    let validity = load_mask(files.read(lay.stitch.join("validity.png")))?;
    let rect = match cfg.segment.rect {
        Some(r) => r,
        None => derived_rect(cfg, lay, pano.width(), pano.height())?,
    };
    let result = grabcut(&pano, rect, &cfg.segment.grabcut)?;
    let mask = mask_and(&result.mask, &validity)?;
    if mask.count() == 0 {
        return Err(Error::EmptyForeground);
    }
    save_mask(&mask, files.wrote(lay.segment.join("mask.png")))?;
    save_gray(&apply_mask(&to_grayscale(&pano), &mask)?, files.wrote(lay.segment.join("masked.png")))?;
    write_json(
        &files.wrote(lay.segment.join("segment.json")),
        &SegmentRecord {
            rect,
            energies: result.energies,
            foreground_px: mask.count(),
        },
    )
}

pub fn run_mesh(cfg: &PipelineConfig, lay: &Layout, files: &mut StageFiles) -> Result<()> {
    ensure_dir(&lay.mesh)?;
    let mask = load_mask(files.read(lay.segment.join("mask.png")))?;
    let mesh = mesh_structure(&mask, &GridSpec::new(cfg.mesh.cell_px))?;
    if !mesh.dropped_cells.is_empty() {
        files.warn(format!(
            "mesh: {} boundary cells dropped as slivers",
            mesh.dropped_cells.len()
        ));
    }
    save_mesh(&mesh, files.wrote(lay.mesh.join("mesh.json")))?;
    let gray = load_gray(files.read(lay.stitch.join("reference.png")))?;
    save_rgb(&render_overlay(&gray, &mesh), files.wrote(lay.mesh.join("overlay.png")))
}

pub fn run_solve(cfg: &PipelineConfig, lay: &Layout, files: &mut StageFiles) -> Result<()> {
    ensure_dir(&lay.solve)?;
    let mesh = load_mesh(files.read(lay.mesh.join("mesh.json")))?;
    let mask = load_mask(files.read(lay.segment.join("mask.png")))?;
    let reference = load_gray(files.read(lay.stitch.join("reference.png")))?;
    for i in 0..cfg.case_count() {
        let name = case_name(i);
        let deformed = load_gray(files.read(lay.stitch.join(format!("{name}.png"))))?;
        let mut nodes = node_displacements(&reference, &deformed, &mesh, &cfg.solve)?;
        let invalid = nodes.iter().filter(|n| !n.valid).count();
        let clipped = nodes.iter().filter(|n| n.clipped).count();
        let unfilled = fill_invalid(&mut nodes, &mesh);
        if invalid > 0 {
            files.warn(format!("{name}: {invalid} nodes below quality, {} filled", invalid - unfilled));
        }
        if clipped > 0 {
            files.warn(format!("{name}: {clipped} node searches clipped at the image edge"));
        }
        if unfilled > 0 {
            files.warn(format!("{name}: {unfilled} nodes left without a displacement"));
        }
        write_nodes_csv(&nodes, files.wrote(lay.solve.join(format!("nodes_{name}.csv"))))?;
        let nodal: Vec<[f64; 2]> = nodes.iter().map(|n| [n.u, n.v]).collect();
        let field = assemble_field(&mesh, &nodal, cfg.field.spacing, &mask)?;
        write_field_csv(&field, files.wrote(lay.field_csv(i)))?;
        save_rgb(&render_heatmap(&field), files.wrote(lay.solve.join(format!("heatmap_{name}.png"))))?;
    }
    Ok(())
}

/// Per-case scores written by the eval stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub case: String,
    pub px: FieldReport,
    pub mm: Option<FieldReport>,
    pub mm_per_px: Option<f64>,
    /// Largest |v| of the reference field, px.
    pub reference_max_v: f64,
    /// `D_v` over `reference_max_v`.
    pub d_v_relative: Option<f64>,
}

pub fn run_eval(cfg: &PipelineConfig, lay: &Layout, files: &mut StageFiles) -> Result<Vec<EvalReport>> {
    ensure_dir(&lay.eval)?;
    let record = load_scene_record(lay)?;
    let mm_per_px = cfg.field.mm_per_px.or(record.as_ref().map(|r| r.scene.mm_per_px));
    let n = if cfg.eval.measured_fields.is_empty() {
        cfg.case_count()
    } else {
        cfg.eval.measured_fields.len()
    };
    if !cfg.eval.reference_fields.is_empty() && cfg.eval.reference_fields.len() != n {
        return Err(Error::Config(format!(
            "{} reference fields for {n} cases",
            cfg.eval.reference_fields.len()
        )));
    }
    let mut reports = Vec::with_capacity(n);
    for i in 0..n {
        let name = case_name(i);
        let measured_path = cfg.eval.measured_fields.get(i).cloned().unwrap_or_else(|| lay.field_csv(i));
        let measured = read_field_csv(files.read(measured_path))?;
        let reference: DisplacementField = match cfg.eval.reference_fields.get(i) {
            Some(p) => read_field_csv(files.read(p))?,
            None => {
                let record = record.as_ref().ok_or_else(|| {
                    Error::Config("eval needs eval.reference_fields or a synthetic scene".into())
                })?;
                let case = record.cases.get(i).ok_or_else(|| {
                    Error::Config(format!("synthetic scene has no {name}"))
                })?;
                let geometry = load_geometry(files.read(lay.stitch.join("transforms.json")))?;
                let beam = record.beam.with_load(case.load_n);
                let truth = analytic_field_in_frame(
                    &beam,
                    &record.scene,
                    geometry.width(),
                    geometry.height(),
                    measured.spacing,
                    record.panorama_offset(&geometry),
                )?;
                write_field_csv(&truth, files.wrote(lay.eval.join(format!("truth_{name}.csv"))))?;
                truth
            }
        };
        let px = compare_fields(&measured, &reference)?;
        let mm = match mm_per_px {
            Some(k) if measured.units == crate::field::Units::Px => {
                Some(compare_fields(&scale_to_mm(&measured, k)?, &scale_to_mm(&reference, k)?)?)
            }
            _ => None,
        };
        let reference_max_v = reference
            .v
            .iter()
            .zip(&reference.valid)
            .filter(|(_, ok)| **ok)
            .fold(0.0f64, |m, (v, _)| m.max(v.abs()));
        let d_v_relative = px.D_v.filter(|_| reference_max_v > 0.0).map(|d| d / reference_max_v);
        let report = EvalReport {
            case: name,
            px,
            mm,
            mm_per_px,
            reference_max_v,
            d_v_relative,
        };
        write_json(&files.wrote(lay.report_json(i)), &report)?;
        reports.push(report);
    }
    Ok(reports)
}
