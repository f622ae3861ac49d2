//! Exact nearest-neighbour search over descriptors.
//!
//! Splits on the dimension of largest spread at the median; queries
//! backtrack into every subtree that could still hold one of the two
//! nearest points, so results equal an exhaustive scan (ties broken by the
//! lower index).

use super::sift::Descriptor;
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 8;

#[derive(Debug)]
enum Node {
    Leaf(Vec<usize>),
    Split {
        dim: usize,
        value: f32,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug)]
pub struct KdTree {
    points: Vec<Descriptor>,
    root: Node,
}

/// A neighbour candidate: index into the tree's point set and Euclidean
/// distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f32,
}

pub fn build_kdtree(descs: &[Descriptor]) -> Result<KdTree> {
    if descs.is_empty() {
        return Err(Error::EmptyInput("cannot build a KD-tree from zero descriptors".into()));
    }
    let points = descs.to_vec();
    let idx: Vec<usize> = (0..points.len()).collect();
    let root = build(&points, idx);
    Ok(KdTree { points, root })
}

fn build(points: &[Descriptor], mut idx: Vec<usize>) -> Node {
    if idx.len() <= LEAF_SIZE {
        return Node::Leaf(idx);
    }
    let dims = points[0].0.len();
    let mut best_dim = 0;
    let mut best_spread = -1.0f32;
    for d in 0..dims {
        let (mut lo, mut hi) = (f32::INFINITY, f32::NEG_INFINITY);
        for &i in &idx {
            let v = points[i].0[d];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi - lo > best_spread {
            best_spread = hi - lo;
            best_dim = d;
        }
    }
    if best_spread <= 0.0 {
        return Node::Leaf(idx);
    }
    idx.sort_by(|&a, &b| {
        points[a].0[best_dim]
            .total_cmp(&points[b].0[best_dim])
            .then(a.cmp(&b))
    });
    let mid = idx.len() / 2;
    let mut value = points[idx[mid]].0[best_dim];
    // every point strictly below `value` goes left
    let mut split = idx.partition_point(|&i| points[i].0[best_dim] < value);
    if split == 0 {
        // median equals the minimum: split above it instead
        split = idx.partition_point(|&i| points[i].0[best_dim] <= value);
        value = points[idx[split]].0[best_dim];
    }
    let right = idx.split_off(split);
    Node::Split {
        dim: best_dim,
        value,
        left: Box::new(build(points, idx)),
        right: Box::new(build(points, right)),
    }
}

#[derive(Clone, Copy)]
struct Cand {
    d2: f32,
    index: usize,
}

fn better(a: Cand, b: Cand) -> bool {
    a.d2 < b.d2 || (a.d2 == b.d2 && a.index < b.index)
}

impl KdTree {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Descriptor] {
        &self.points
    }

    pub fn depth(&self) -> usize {
        fn d(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 1,
                Node::Split { left, right, .. } => 1 + d(left).max(d(right)),
            }
        }
        d(&self.root)
    }

    /// The (up to) two nearest stored descriptors, closest first.
    pub fn nearest2(&self, q: &Descriptor) -> Vec<Neighbor> {
        let mut best: [Option<Cand>; 2] = [None, None];
        self.search(&self.root, q, &mut best);
        best.iter()
            .flatten()
            .map(|c| Neighbor {
                index: c.index,
                distance: c.d2.sqrt(),
            })
            .collect()
    }

    fn offer(best: &mut [Option<Cand>; 2], c: Cand) {
        match best[0] {
            None => best[0] = Some(c),
            Some(b0) if better(c, b0) => {
                best[1] = best[0];
                best[0] = Some(c);
            }
            _ => match best[1] {
                None => best[1] = Some(c),
                Some(b1) if better(c, b1) => best[1] = Some(c),
                _ => {}
            },
        }
    }

    fn search(&self, node: &Node, q: &Descriptor, best: &mut [Option<Cand>; 2]) {
        match node {
            Node::Leaf(idx) => {
                for &i in idx {
                    let c = Cand {
                        d2: q.dist_sq(&self.points[i]),
                        index: i,
                    };
                    Self::offer(best, c);
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q.0[*dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                let bound = best[1].map_or(f32::INFINITY, |c| c.d2);
                if diff * diff <= bound {
                    self.search(far, q, best);
                }
            }
        }
    }
}

/// Exhaustive 2-NN with the same tie-break as [`KdTree::nearest2`].
pub fn brute_force_nearest2(points: &[Descriptor], q: &Descriptor) -> Vec<Neighbor> {
    let mut best: [Option<Cand>; 2] = [None, None];
    for (i, p) in points.iter().enumerate() {
        KdTree::offer(&mut best, Cand { d2: q.dist_sq(p), index: i });
    }
    best.iter()
        .flatten()
        .map(|c| Neighbor {
            index: c.index,
            distance: c.d2.sqrt(),
        })
        .collect()
}
