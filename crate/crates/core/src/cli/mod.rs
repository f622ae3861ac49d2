//! Configuration, stage orchestration and the command-line front end.
//!
//! Every stage reads and writes plain files under the output directory,
//! so any stage can be rerun on its own once its inputs exist.

mod config;
mod manifest;
mod stages;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

pub use config::{
    case_name, EvalConfig, FieldConfig, InputConfig, MeshConfig, PipelineConfig, SegmentConfig, StageName,
    StitchConfig, SweepConfig, SynthConfig,
};
pub use manifest::{file_digest, FileDigest, RunManifest, StageFiles, StageRecord};
pub use stages::{load_scene_record, CaseRecord, EvalReport, Layout, SceneRecord};

use crate::error::{Error, Result};

fn execute(name: StageName, cfg: &PipelineConfig, lay: &Layout) -> Result<StageRecord> {
    log::info!("stage {}", name.as_str());
    let start = Instant::now();
    let mut files = StageFiles::default();
    let out = match name {
        StageName::Synth => stages::run_synth(cfg, lay, &mut files),
        StageName::Stitch => stages::run_stitch(cfg, lay, &mut files),
        StageName::Segment => stages::run_segment(cfg, lay, &mut files),
        StageName::Mesh => stages::run_mesh(cfg, lay, &mut files),
        StageName::Solve => stages::run_solve(cfg, lay, &mut files),
        StageName::Eval => stages::run_eval(cfg, lay, &mut files).map(|_| ()),
    };
    out.and_then(|_| files.into_record(name.as_str(), start.elapsed().as_secs_f64()))
        .map_err(|e| e.in_stage(name.as_str()))
}

fn finish(mut manifest: RunManifest, result: Result<()>, path: PathBuf) -> Result<RunManifest> {
    if let Err(e) = &result {
        manifest.status = "failed".into();
        manifest.error = Some(e.to_string());
    }
    std::fs::create_dir_all(path.parent().unwrap_or(&path)).map_err(|e| Error::io(&path, e))?;
    manifest.save(&path)?;
    result.map(|_| manifest)
}

/// Runs one stage against `cfg.out_dir` and writes `manifest_<stage>.json`.
pub fn run_stage(name: StageName, cfg: &PipelineConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let lay = Layout::new(&cfg.out_dir);
    let mut manifest = RunManifest::new(name.as_str(), cfg);
    let result = execute(name, cfg, &lay).map(|r| manifest.stages.push(r));
    finish(manifest, result, lay.root.join(format!("manifest_{}.json", name.as_str())))
}

/// Runs the configured stages in pipeline order, stopping at the first
/// failure; the manifest lists the stages that completed.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let lay = Layout::new(&cfg.out_dir);
    let mut manifest = RunManifest::new("pipeline", cfg);
    let mut result = Ok(());
    for name in StageName::ALL {
        if !cfg.stages.contains(&name) {
            continue;
        }
        match execute(name, cfg, &lay) {
            Ok(r) => manifest.stages.push(r),
            Err(e) => {
                result = Err(e);
                break;
            }
        }
    }
    finish(manifest, result, lay.root.join("manifest.json"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell_px: usize,
    pub case: String,
    pub r_v: Option<f64>,
    pub d_v: Option<f64>,
    pub valid_fraction: f64,
}

/// Re-meshes the segmented panorama at each `cfg.sweep.cells_px` size and
/// reruns solve and eval. Results go to `sweep/summary.csv`.
pub fn run_sweep(cfg: &PipelineConfig) -> Result<(RunManifest, Vec<SweepRow>)> {
    cfg.validate()?;
    let lay = Layout::new(&cfg.out_dir);
    let mut manifest = RunManifest::new("sweep-mesh", cfg);
    let mut rows = Vec::new();
    let result = (|| -> Result<()> {
        for &cell in &cfg.sweep.cells_px {
            let mut c = cfg.clone();
            c.mesh.cell_px = cell;
            let sub = lay.for_sweep(cell);
            for name in [StageName::Mesh, StageName::Solve] {
                manifest.stages.push(execute(name, &c, &sub)?);
            }
            let start = Instant::now();
            let mut files = StageFiles::default();
            let reports = stages::run_eval(&c, &sub, &mut files).map_err(|e| e.in_stage("eval"))?;
            manifest.stages.push(files.into_record("eval", start.elapsed().as_secs_f64())?);
            rows.extend(reports.into_iter().map(|r| SweepRow {
                cell_px: cell,
                case: r.case,
                r_v: r.px.R_v,
                d_v: r.px.D_v,
                valid_fraction: r.px.valid_fraction,
            }));
        }
        let path = lay.root.join("sweep").join("summary.csv");
        let mut w = csv::Writer::from_path(&path)?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))
    })();
    let manifest = finish(manifest, result, lay.root.join("manifest_sweep.json"))?;
    Ok((manifest, rows))
}

#[derive(Debug, Parser)]
#[command(name = "spanfield", version, about = "Displacement fields of large structures from overlapping photographs")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// JSON config; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the default config and exit.
    #[arg(long)]
    print_defaults: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render the synthetic beam, its load cases and the sliced views.
    Synth,
    /// Fuse the views of every state into panoramas.
    Stitch,
    /// GrabCut the reference panorama.
    Segment,
    /// Mesh the segmented structure.
    Mesh,
    /// Node matching and field interpolation for every load case.
    Solve,
    /// Score solved fields against reference fields.
    Eval,
    /// Run the configured stages in order.
    Pipeline,
    /// Rerun mesh, solve and eval over the sweep cell sizes.
    SweepMesh,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STAGE: i32 = 3;

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::Stage { source, .. } if matches!(**source, Error::Config(_)) => EXIT_CONFIG,
        _ => EXIT_STAGE,
    }
}

fn build_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.apply_seed(s);
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if cli.print_defaults {
        println!("{}", PipelineConfig::default().to_json());
        return EXIT_OK;
    }
    let Some(command) = &cli.command else {
        eprintln!("no subcommand given; see --help");
        return EXIT_CONFIG;
    };
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(&e);
        }
    };
    if let Some(t) = cfg.threads {
        // fails only if a pool already exists, which then stays in use
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let result = match command {
        Command::Synth => run_stage(StageName::Synth, &cfg),
        Command::Stitch => run_stage(StageName::Stitch, &cfg),
        Command::Segment => run_stage(StageName::Segment, &cfg),
        Command::Mesh => run_stage(StageName::Mesh, &cfg),
        Command::Solve => run_stage(StageName::Solve, &cfg),
        Command::Eval => run_stage(StageName::Eval, &cfg),
        Command::Pipeline => run_pipeline(&cfg),
        Command::SweepMesh => run_sweep(&cfg).map(|(m, _)| m),
    };
    match result {
        Ok(m) => {
            for w in m.warnings() {
                eprintln!("warning: {w}");
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
