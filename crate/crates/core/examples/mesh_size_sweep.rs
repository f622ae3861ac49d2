//! Reruns mesh, solve and eval over several cell sizes on one stitched
//! and segmented scene.
//!
//! cargo run --release --example mesh_size_sweep [out_dir]

use std::path::PathBuf;

use spanfield::cli::{run_pipeline, run_sweep, PipelineConfig};

fn main() -> spanfield::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("spanfield/mesh_size_sweep"));
    let mut cfg = PipelineConfig::default();
    cfg.out_dir = out.clone();
    cfg.solve.subpixel = true;
    run_pipeline(&cfg)?;
    let (_, rows) = run_sweep(&cfg)?;
    println!("{:>5}  {:<6} {:>10} {:>9}", "cell", "case", "R_v", "D_v px");
    for r in rows {
        println!(
            "{:>5}  {:<6} {:>10.6} {:>9.4}",
            r.cell_px,
            r.case,
            r.r_v.unwrap_or(f64::NAN),
            r.d_v.unwrap_or(f64::NAN)
        );
    }
    println!("summary in {}", out.join("sweep/summary.csv").display());
    Ok(())
}
