use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::zncc::{correlate, peak, subpixel_refine, Template};
use crate::error::{Error, Result};
use crate::imgcore::{GrayImage, PixelCoord};
use crate::mesh::Mesh;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatchParams {
    /// Odd template side in pixels.
    pub template_size: usize,
    pub search_radius: usize,
    pub quality_threshold: f64,
    pub subpixel: bool,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            template_size: 81,
            search_radius: 50,
            quality_threshold: 0.8,
            subpixel: false,
        }
    }
}

impl MatchParams {
    pub fn validate(&self) -> Result<()> {
        if self.template_size % 2 == 0 || self.template_size < 3 {
            return Err(Error::InvalidParameter(format!(
                "template size {} must be odd and >= 3",
                self.template_size
            )));
        }
        if !(-1.0..=1.0).contains(&self.quality_threshold) {
            return Err(Error::InvalidParameter(format!(
                "quality threshold {} outside [-1, 1]",
                self.quality_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDisplacement {
    pub node_id: usize,
    pub position: PixelCoord,
    pub u: f64,
    pub v: f64,
    /// Correlation at the integer peak, if any offset was defined.
    pub peak_r: Option<f64>,
    pub subpixel: bool,
    /// Peak correlation reached the quality threshold.
    pub valid: bool,
    /// Value comes from averaging neighbors rather than from matching.
    pub filled: bool,
    /// Search region was cut by the image border.
    pub clipped: bool,
}

impl NodeDisplacement {
    fn failed(node_id: usize, position: PixelCoord) -> Self {
        Self {
            node_id,
            position,
            u: 0.0,
            v: 0.0,
            peak_r: None,
            subpixel: false,
            valid: false,
            filled: false,
            clipped: false,
        }
    }

    pub fn usable(&self) -> bool {
        self.valid || self.filled
    }
}

/// Template-matches one point of `reference` in `deformed`.
pub fn match_point(
    reference: &GrayImage,
    deformed: &GrayImage,
    node_id: usize,
    position: PixelCoord,
    params: &MatchParams,
) -> NodeDisplacement {
    let mut out = NodeDisplacement::failed(node_id, position);
    let Ok(t) = Template::extract(reference, position, params.template_size, params.template_size) else {
        return out;
    };
    let surface = correlate(&t, deformed, params.search_radius);
    out.clipped = surface.clipped;
    let Some(((dx, dy), r)) = peak(&surface) else {
        return out;
    };
    out.u = dx as f64;
    out.v = dy as f64;
    out.peak_r = Some(r);
    out.valid = r >= params.quality_threshold;
    if params.subpixel {
        let s = subpixel_refine(&surface, (dx, dy));
        if s.refined {
            out.u += s.du;
            out.v += s.dv;
            out.subpixel = true;
        }
    }
    out
}

/// Measures every mesh node; failures are flagged per node, never fatal.
/// Output is ordered by node id.
pub fn node_displacements(
    reference: &GrayImage,
    deformed: &GrayImage,
    mesh: &Mesh,
    params: &MatchParams,
) -> Result<Vec<NodeDisplacement>> {
    params.validate()?;
    reference.same_dims(deformed)?;
    Ok(mesh
        .nodes
        .par_iter()
        .enumerate()
        .map(|(id, &p)| match_point(reference, deformed, id, p, params))
        .collect())
}

/// Gives every invalid node the mean of its valid element neighbors. Nodes
/// with no valid neighbor are filled in later sweeps from already filled
/// ones. Returns the number of nodes that could not be filled.
pub fn fill_invalid(nodes: &mut [NodeDisplacement], mesh: &Mesh) -> usize {
    let adj = mesh.node_neighbors();
    loop {
        let updates: Vec<(usize, f64, f64)> = (0..nodes.len())
            .filter(|&i| !nodes[i].usable())
            .filter_map(|i| {
                let src: Vec<&NodeDisplacement> = adj[i].iter().map(|&j| &nodes[j]).filter(|n| n.usable()).collect();
                if src.is_empty() {
                    return None;
                }
                let k = src.len() as f64;
                Some((
                    i,
                    src.iter().map(|n| n.u).sum::<f64>() / k,
                    src.iter().map(|n| n.v).sum::<f64>() / k,
                ))
            })
            .collect();
        if updates.is_empty() {
            break;
        }
        for (i, u, v) in updates {
            nodes[i].u = u;
            nodes[i].v = v;
            nodes[i].filled = true;
        }
    }
    nodes.iter().filter(|n| !n.usable()).count()
}

pub fn write_nodes_csv(nodes: &[NodeDisplacement], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["node_id", "x", "y", "u_px", "v_px", "peak_r", "subpixel", "valid", "filled"])?;
    for n in nodes {
        w.write_record([
            n.node_id.to_string(),
            n.position.x.to_string(),
            n.position.y.to_string(),
            n.u.to_string(),
            n.v.to_string(),
            n.peak_r.map(|r| r.to_string()).unwrap_or_default(),
            (n.subpixel as u8).to_string(),
            (n.valid as u8).to_string(),
            (n.filled as u8).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_nodes_csv(path: impl AsRef<Path>) -> Result<Vec<NodeDisplacement>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let bad = || Error::InvalidParameter(format!("malformed node row in {}", path.display()));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| -> Result<f64> { rec.get(i).ok_or_else(bad)?.trim().parse().map_err(|_| bad()) };
        let flag = |i: usize| rec.get(i).map(|s| s.trim() == "1").unwrap_or(false);
        let peak_field = rec.get(5).ok_or_else(bad)?.trim();
        out.push(NodeDisplacement {
            node_id: f(0)? as usize,
            position: PixelCoord::new(f(1)?, f(2)?),
            u: f(3)?,
            v: f(4)?,
            peak_r: if peak_field.is_empty() {
                None
            } else {
                Some(peak_field.parse().map_err(|_| bad())?)
            },
            subpixel: flag(6),
            valid: flag(7),
            filled: flag(8),
            clipped: false,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::BinaryMask;
    use crate::mesh::{mesh_structure, GridSpec};

    fn texture(w: usize, h: usize, seed: u64) -> GrayImage {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let noise = GrayImage::from_fn(w, h, |_, _| rng.random::<f64>());
        // 3x3 box blur for a few-pixel feature size
        GrayImage::from_fn(w, h, |x, y| {
            let mut s = 0.0;
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let xx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
                    let yy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
                    s += noise.get(xx, yy);
                }
            }
            s / 9.0
        })
    }

    fn small_params() -> MatchParams {
        MatchParams {
            template_size: 21,
            search_radius: 8,
            ..Default::default()
        }
    }

    #[test]
    fn identical_images_zero_displacement() {
        let img = texture(120, 90, 0);
        let mask = BinaryMask::from_fn(120, 90, |x, y| (20..100).contains(&x) && (20..70).contains(&y));
        let mesh = mesh_structure(&mask, &GridSpec::new(16)).unwrap();
        let nd = node_displacements(&img, &img, &mesh, &small_params()).unwrap();
        for n in &nd {
            if n.peak_r.is_some() {
                assert_eq!((n.u, n.v), (0.0, 0.0));
                assert!((n.peak_r.unwrap() - 1.0).abs() < 1e-12);
            }
        }
        assert!(nd.iter().any(|n| n.valid));
    }

    #[test]
    fn rigid_shift_recovered() {
        let big = texture(160, 120, 1);
        let reference = big.crop(10, 10, 130, 90).unwrap();
        // deformed content moved by (+4, +2)
        let deformed = big.crop(6, 8, 130, 90).unwrap();
        let mask = BinaryMask::from_fn(130, 90, |x, y| (15..115).contains(&x) && (15..75).contains(&y));
        let mesh = mesh_structure(&mask, &GridSpec::new(16)).unwrap();
        let nd = node_displacements(&reference, &deformed, &mesh, &small_params()).unwrap();
        let valid: Vec<_> = nd.iter().filter(|n| n.valid).collect();
        assert!(!valid.is_empty());
        for n in valid {
            assert_eq!((n.u, n.v), (4.0, 2.0), "node {}", n.node_id);
        }
    }

    #[test]
    fn fill_averages_neighbors() {
        let mask = BinaryMask::new(64, 64, true);
        let mesh = mesh_structure(&mask, &GridSpec::new(32)).unwrap();
        let mut nodes: Vec<NodeDisplacement> = mesh
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &p)| NodeDisplacement {
                u: 2.0,
                v: 1.0,
                valid: true,
                peak_r: Some(0.95),
                ..NodeDisplacement::failed(i, p)
            })
            .collect();
        nodes[4] = NodeDisplacement::failed(4, mesh.nodes[4]);
        assert_eq!(fill_invalid(&mut nodes, &mesh), 0);
        assert!(nodes[4].filled && !nodes[4].valid);
        assert_eq!((nodes[4].u, nodes[4].v), (2.0, 1.0));
    }

    #[test]
    fn csv_round_trip() {
        let nodes = vec![
            NodeDisplacement {
                u: 1.25,
                v: -3.0,
                peak_r: Some(0.93),
                valid: true,
                subpixel: true,
                ..NodeDisplacement::failed(0, PixelCoord::new(10.0, 20.5))
            },
            NodeDisplacement::failed(1, PixelCoord::new(30.0, 20.0)),
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("n.csv");
        write_nodes_csv(&nodes, &p).unwrap();
        assert_eq!(read_nodes_csv(&p).unwrap(), nodes);
    }
}
