use spanfield::field::{assemble_field, compare_fields};
use spanfield::imgcore::{BinaryMask, GrayImage, PixelCoord};
use spanfield::mesh::{mesh_structure, GridSpec};
use spanfield::nodematch::{node_displacements, MatchParams};
use spanfield::synth::{warp_by_field, Speckle};

fn texture(w: usize, h: usize) -> GrayImage {
    let s = Speckle::new(-20.0, -20.0, w as f64 + 40.0, h as f64 + 40.0, 5.0, 8);
    GrayImage::from_fn(w, h, |x, y| 0.1 + 0.8 * s.eval(x as f64, y as f64))
}

fn structure(w: usize, h: usize) -> BinaryMask {
    BinaryMask::from_fn(w, h, |x, y| {
        let (dx, dy) = ((x as f64 - 200.0) / 120.0, (y as f64 - 150.0) / 80.0);
        dx * dx + dy * dy <= 1.0
    })
}

#[test]
fn rigid_translation_is_recovered_exactly() {
    let (w, h) = (400, 300);
    let reference = texture(w, h);
    let everywhere = BinaryMask::new(w, h, true);
    let deformed = warp_by_field(&reference, &everywhere, |_| [3.0, -2.0]).unwrap();
    let mask = structure(w, h);
    let mesh = mesh_structure(&mask, &GridSpec::new(40)).unwrap();
    let params = MatchParams {
        template_size: 31,
        search_radius: 8,
        ..MatchParams::default()
    };
    let nodes = node_displacements(&reference, &deformed, &mesh, &params).unwrap();
    assert!(nodes.iter().all(|n| n.valid && n.u == 3.0 && n.v == -2.0));
    let nodal: Vec<[f64; 2]> = nodes.iter().map(|n| [n.u, n.v]).collect();
    let field = assemble_field(&mesh, &nodal, 2, &mask).unwrap();
    assert!(field.valid_count() > 0);
    for i in 0..field.len() {
        if field.valid[i] {
            assert!((field.u[i] - 3.0).abs() < 1e-12 && (field.v[i] + 2.0).abs() < 1e-12);
        }
    }
}

#[test]
fn linear_field_is_interpolated_exactly() {
    let (w, h) = (400, 300);
    let mask = structure(w, h);
    let mesh = mesh_structure(&mask, &GridSpec::new(35)).unwrap();
    let d = |p: PixelCoord| [0.5 + 0.01 * p.x - 0.02 * p.y, -1.0 + 0.03 * p.x + 0.005 * p.y];
    let nodal: Vec<[f64; 2]> = mesh.nodes.iter().map(|&p| d(p)).collect();
    let field = assemble_field(&mesh, &nodal, 3, &mask).unwrap();
    let mut truth = field.clone();
    for i in 0..truth.len() {
        let [u, v] = d(truth.position(i));
        truth.u[i] = u;
        truth.v[i] = v;
    }
    let rep = compare_fields(&field, &truth).unwrap();
    assert!(rep.D_u.unwrap() < 1e-9 && rep.D_v.unwrap() < 1e-9, "{rep:?}");
}

#[test]
fn subpixel_translation_is_close() {
    let (w, h) = (400, 300);
    let reference = texture(w, h);
    let everywhere = BinaryMask::new(w, h, true);
    let deformed = warp_by_field(&reference, &everywhere, |_| [1.3, 2.6]).unwrap();
    let mesh = mesh_structure(&structure(w, h), &GridSpec::new(40)).unwrap();
    let params = MatchParams {
        template_size: 41,
        search_radius: 6,
        subpixel: true,
        ..MatchParams::default()
    };
    for n in node_displacements(&reference, &deformed, &mesh, &params).unwrap() {
        assert!(n.valid && n.subpixel);
        assert!((n.u - 1.3).abs() < 0.15 && (n.v - 2.6).abs() < 0.15, "{n:?}");
    }
}
