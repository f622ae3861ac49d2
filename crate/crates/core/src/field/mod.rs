//! Shape-function interpolation of nodal displacements and field metrics.

mod assemble;
mod io;
mod metric;
mod shape;

pub use assemble::{assemble_field, DisplacementField, ElementLocator, Units};
pub use io::{read_field_csv, render_heatmap, write_field_csv, write_report};
pub use metric::{compare_fields, metric_d, metric_r, scale_to_mm, FieldReport};
pub use shape::{
    element_weights, interpolate, rect_from_natural, rect_natural, rect_shape, tri_area_coords, AreaCoord, NaturalCoord,
    BOUNDARY_TOL_PX,
};
