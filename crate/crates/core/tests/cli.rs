use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use spanfield::cli::{main_with_args, EvalReport, Layout, RunManifest, EXIT_CONFIG, EXIT_OK, EXIT_STAGE};
use spanfield::field::read_field_csv;

/// A 900x300 scene with three views; a full pipeline takes a few seconds.
const SMALL: &str = r#"{
  "synth": {
    "scene": { "width": 900, "height": 300, "mm_per_px": 3.305, "margin_px": 50 },
    "tips_px": [4, 8],
    "views": 3,
    "overlap": 0.35
  },
  "mesh": { "cell_px": 50 },
  "solve": { "search_radius": 20, "subpixel": true }
}"#;

fn run(args: &[&str]) -> i32 {
    let mut all = vec!["spanfield"];
    all.extend_from_slice(args);
    main_with_args(all)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn pipeline_in(dir: &Path) -> i32 {
    let cfg = write_config(dir, SMALL);
    run(&["pipeline", "--config", cfg.to_str().unwrap(), "--out", dir.join("out").to_str().unwrap()])
}

/// One finished run shared by the read-only tests.
fn shared_run() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let d = tempfile::tempdir().unwrap();
        assert_eq!(pipeline_in(d.path()), EXIT_OK);
        d
    })
    .path()
}

fn report(path: &Path) -> EvalReport {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn print_defaults_and_help_exit_zero() {
    assert_eq!(run(&["--print-defaults"]), EXIT_OK);
    assert_eq!(run(&["--help"]), EXIT_OK);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(run(&["stich"]), EXIT_CONFIG);
    assert_eq!(run(&[]), EXIT_CONFIG);
}

#[test]
fn misspelled_config_key_exits_2() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), r#"{"mesh": {"cel_px": 50}}"#);
    assert_eq!(run(&["mesh", "--config", cfg.to_str().unwrap()]), EXIT_CONFIG);
    let cfg = write_config(d.path(), r#"{"solve": {"template_size": 80}}"#);
    assert_eq!(run(&["solve", "--config", cfg.to_str().unwrap()]), EXIT_CONFIG);
}

#[test]
fn missing_stage_input_exits_3() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(run(&["mesh", "--out", d.path().to_str().unwrap()]), EXIT_STAGE);
    let m = RunManifest::load(&d.path().join("manifest_mesh.json")).unwrap();
    assert_eq!(m.status, "failed");
    assert!(m.error.unwrap().contains("mesh"));
}

#[test]
fn pipeline_writes_every_artifact() {
    let lay = Layout::new(shared_run().join("out"));
    for p in [
        lay.synth.join("scene.json"),
        lay.synth.join("poses.csv"),
        lay.stitch.join("transforms.json"),
        lay.stitch.join("reference.png"),
        lay.segment.join("mask.png"),
        lay.mesh.join("mesh.json"),
        lay.solve.join("nodes_case1.csv"),
        lay.field_csv(1),
        lay.report_json(1),
    ] {
        assert!(p.exists(), "{}", p.display());
    }
    let m = RunManifest::load(&lay.root.join("manifest.json")).unwrap();
    assert_eq!(m.status, "ok");
    assert_eq!(m.stages.len(), 6);
    assert!(m.stages.iter().all(|s| s.outputs.iter().all(|o| o.sha256.len() == 64)));
    let r = report(&lay.report_json(1));
    assert!(r.px.R_v.unwrap() > 0.999, "{r:?}");
    assert!(r.d_v_relative.unwrap() < 0.012, "{r:?}");
}

#[test]
fn eval_of_a_field_against_itself() {
    let src = Layout::new(shared_run().join("out"));
    let d = tempfile::tempdir().unwrap();
    let field = src.field_csv(0);
    let text = format!(
        r#"{{"synth": {{"tips_px": [1]}}, "eval": {{"measured_fields": [{f:?}], "reference_fields": [{f:?}]}}}}"#,
        f = field
    );
    let cfg = write_config(d.path(), &text);
    let out = d.path().join("out");
    assert_eq!(run(&["eval", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), EXIT_OK);
    let r = report(&Layout::new(&out).report_json(0));
    assert!((r.px.R_v.unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r.px.D_v, Some(0.0));
    assert_eq!(r.px.D_u, Some(0.0));
    assert_eq!(r.px.valid_fraction, 1.0);
}

#[test]
fn solve_of_reference_against_itself_is_zero() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("out");
    let src = Layout::new(shared_run().join("out"));
    let lay = Layout::new(&out);
    for dir in [&lay.stitch, &lay.segment, &lay.mesh] {
        std::fs::create_dir_all(dir).unwrap();
    }
    let reference = src.stitch.join("reference.png");
    std::fs::copy(&reference, lay.stitch.join("reference.png")).unwrap();
    std::fs::copy(&reference, lay.stitch.join("case0.png")).unwrap();
    std::fs::copy(src.segment.join("mask.png"), lay.segment.join("mask.png")).unwrap();
    std::fs::copy(src.mesh.join("mesh.json"), lay.mesh.join("mesh.json")).unwrap();
    // integer-pixel matching; the parabola fit is not symmetric about a self-match
    let cfg = write_config(d.path(), r#"{"synth": {"tips_px": [4]}}"#);
    assert_eq!(run(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), EXIT_OK);
    let f = read_field_csv(lay.field_csv(0)).unwrap();
    assert!(f.valid_count() > 0);
    for i in 0..f.len() {
        if f.valid[i] {
            assert_eq!((f.u[i], f.v[i]), (0.0, 0.0), "sample {i}");
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(pipeline_in(d.path()), EXIT_OK);
    let (a, b) = (Layout::new(shared_run().join("out")), Layout::new(d.path().join("out")));
    for i in 0..2 {
        assert_eq!(std::fs::read(a.field_csv(i)).unwrap(), std::fs::read(b.field_csv(i)).unwrap());
        assert_eq!(std::fs::read(a.report_json(i)).unwrap(), std::fs::read(b.report_json(i)).unwrap());
    }
}

#[test]
fn seed_override_changes_the_scene() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), SMALL);
    let out = d.path().join("out");
    let args = ["synth", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "99"];
    assert_eq!(run(&args), EXIT_OK);
    let theirs = std::fs::read(Layout::new(shared_run().join("out")).synth.join("reference.png")).unwrap();
    assert_ne!(std::fs::read(Layout::new(&out).synth.join("reference.png")).unwrap(), theirs);
}
