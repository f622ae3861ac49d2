//! Every stage in order with the default config (or a JSON config given
//! as the second argument), then the per-case scores.
//!
//! cargo run --release --example full_pipeline [out_dir] [config.json]

use std::path::PathBuf;

use spanfield::cli::{run_pipeline, EvalReport, Layout, PipelineConfig};

fn main() -> spanfield::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("spanfield/full_pipeline"));
    let mut cfg = match args.next() {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    cfg.out_dir = out.clone();
    cfg.solve.subpixel = true;

    let manifest = run_pipeline(&cfg)?;
    for s in &manifest.stages {
        println!("{:<8} {:>6.1} s  {} outputs", s.name, s.seconds, s.outputs.len());
    }
    for w in manifest.warnings() {
        println!("warning: {w}");
    }
    let lay = Layout::new(&out);
    for i in 0..cfg.case_count() {
        let path = lay.report_json(i);
        let text = std::fs::read_to_string(&path).map_err(|e| spanfield::Error::io(&path, e))?;
        let r: EvalReport = serde_json::from_str(&text)?;
        println!(
            "{}: R_v {:.6}, D_v {:.4} px ({:.3}% of {:.2} px)",
            r.case,
            r.px.R_v.unwrap_or(f64::NAN),
            r.px.D_v.unwrap_or(f64::NAN),
            100.0 * r.d_v_relative.unwrap_or(f64::NAN),
            r.reference_max_v
        );
    }
    println!("outputs in {}", out.display());
    Ok(())
}
