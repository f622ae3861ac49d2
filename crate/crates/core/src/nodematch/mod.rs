//! ZNCC template matching of mesh nodes between two images.

mod nodes;
mod zncc;

pub use nodes::{fill_invalid, match_point, node_displacements, read_nodes_csv, write_nodes_csv, MatchParams, NodeDisplacement};
pub use zncc::{correlate, peak, subpixel_refine, zncc, CorrelationSurface, Subpixel, Template};
