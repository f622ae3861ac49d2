//! Bilinear rectangle and area-coordinate triangle interpolation.
//!
//! cargo run --example shape_functions

use spanfield::field::{interpolate, rect_shape, tri_area_coords};
use spanfield::imgcore::PixelCoord;
use spanfield::mesh::ElementKind;

fn main() -> spanfield::Result<()> {
    let p = PixelCoord::new;
    println!("rectangle N1..N4 at the center: {:?}", rect_shape(0.0, 0.0));
    println!("rectangle N1..N4 at (0.5, -0.5): {:?}", rect_shape(0.5, -0.5));

    let rect = [p(0.0, 0.0), p(100.0, 0.0), p(100.0, 100.0), p(0.0, 100.0)];
    let nodal = [[0.0, 0.0], [1.0, 2.0], [3.0, 4.0], [0.5, 1.0]];
    for q in [p(50.0, 50.0), p(100.0, 0.0), p(25.0, 80.0)] {
        let [u, v] = interpolate(ElementKind::Rect4, &rect, &nodal, q)?;
        println!("rect  ({:>5.1}, {:>5.1}) -> u {u:.4}, v {v:.4}", q.x, q.y);
    }

    let tri = [p(0.0, 0.0), p(60.0, 10.0), p(20.0, 50.0)];
    let nodal = [[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]];
    for q in [p(26.0, 20.0), p(30.0, 5.0)] {
        let l = tri_area_coords(&tri, q)?.l;
        let [u, v] = interpolate(ElementKind::Tri3, &tri, &nodal, q)?;
        println!(
            "tri   ({:>5.1}, {:>5.1}) -> L = ({:.4}, {:.4}, {:.4}), u {u:.4}, v {v:.4}",
            q.x, q.y, l[0], l[1], l[2]
        );
    }
    Ok(())
}
