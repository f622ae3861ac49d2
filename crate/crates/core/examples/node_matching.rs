//! ZNCC template matching at mesh nodes on a bent beam, compared with the
//! closed-form deflection. No stitching involved.
//!
//! cargo run --release --example node_matching

use spanfield::field::{assemble_field, compare_fields};
use spanfield::imgcore::to_grayscale;
use spanfield::mesh::{mesh_structure, GridSpec};
use spanfield::nodematch::{node_displacements, MatchParams};
use spanfield::synth::{analytic_field, beam_displacement, load_cases, render_beam, BeamSpec, SceneSpec};

fn main() -> spanfield::Result<()> {
    let scene = SceneSpec::default();
    let beam = BeamSpec::default();
    let (reference, mask) = render_beam(&beam, &scene)?;
    let loaded = load_cases(&beam, &scene, &[15.0]).remove(0);
    let (deformed, _) = render_beam(&loaded, &scene)?;
    let (reference, deformed) = (to_grayscale(&reference), to_grayscale(&deformed));

    let mesh = mesh_structure(&mask, &GridSpec::new(100))?;
    let truth_at = beam_displacement(&loaded, &scene)?;
    for subpixel in [false, true] {
        let params = MatchParams {
            subpixel,
            ..MatchParams::default()
        };
        let nodes = node_displacements(&reference, &deformed, &mesh, &params)?;
        let worst = nodes
            .iter()
            .filter(|n| n.valid)
            .map(|n| (n.v - truth_at(n.position)[1]).abs())
            .fold(0.0, f64::max);
        let nodal: Vec<[f64; 2]> = nodes.iter().map(|n| [n.u, n.v]).collect();
        let field = assemble_field(&mesh, &nodal, 4, &mask)?;
        let report = compare_fields(&field, &analytic_field(&loaded, &scene, 4)?.field)?;
        println!(
            "subpixel {subpixel:<5}: {}/{} nodes valid, worst node |dv| {worst:.3} px, R_v {:.6}, D_v {:.4} px",
            nodes.iter().filter(|n| n.valid).count(),
            nodes.len(),
            report.R_v.unwrap_or(f64::NAN),
            report.D_v.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
