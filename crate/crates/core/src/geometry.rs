//! Straight-line trees in Euclidean space and segment distances.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::metric::euclidean;
use crate::mst::PartitionForest;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Parameter `t ∈ [0, 1]` of the point of segment `[a, b]` closest to `p`.
pub fn project_onto_segment(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(&ab, &ab);
    if len2 == 0.0 {
        return 0.0;
    }
    (dot(&sub(p, a), &ab) / len2).clamp(0.0, 1.0)
}

/// Distance from `p` to segment `[a, b]`.
pub fn point_segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let t = project_onto_segment(p, a, b);
    euclidean(p, &lerp(a, b, t))
}

/// Minimum distance between segments `[a, b]` and `[c, d]` in any
/// dimension.
pub fn segment_segment_distance(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
    let u = sub(b, a);
    let v = sub(d, c);
    let w = sub(a, c);
    let (uu, uv, vv) = (dot(&u, &u), dot(&u, &v), dot(&v, &v));
    let (uw, vw) = (dot(&u, &w), dot(&v, &w));
    let denom = uu * vv - uv * uv;
    let mut best = [
        point_segment_distance(a, c, d),
        point_segment_distance(b, c, d),
        point_segment_distance(c, a, b),
        point_segment_distance(d, a, b),
    ]
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    // An interior pair of closest points exists only for non-parallel
    // segments; the endpoint cases above cover everything else.
    if denom > 1e-14 * uu * vv {
        let s = (uv * vw - vv * uw) / denom;
        let t = (uu * vw - uv * uw) / denom;
        if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
            best = best.min(euclidean(&lerp(a, b, s), &lerp(c, d, t)));
        }
    }
    best
}

/// Angle in `[0, π]` between vectors `u` and `v`.
pub fn angle_between(u: &[f64], v: &[f64]) -> f64 {
    let n = (dot(u, u) * dot(v, v)).sqrt();
    if n == 0.0 {
        return 0.0;
    }
    (dot(u, v) / n).clamp(-1.0, 1.0).acos()
}

/// A tree embedded in `ℝ^m` with straight edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StraightLineTree {
    pub vertices: Vec<Vec<f64>>,
    pub edges: Vec<(usize, usize)>,
}

impl StraightLineTree {
    /// Checks dimensions, edge endpoints and that the edges form a tree.
    pub fn new(vertices: Vec<Vec<f64>>, edges: Vec<(usize, usize)>) -> Result<Self> {
        if vertices.is_empty() {
            return invalid("a tree needs at least one vertex");
        }
        let dim = vertices[0].len();
        if dim == 0
            || vertices
                .iter()
                .any(|v| v.len() != dim || v.iter().any(|x| !x.is_finite()))
        {
            return invalid("vertices must share a positive dimension and be finite");
        }
        if edges.len() + 1 != vertices.len() {
            return invalid(format!(
                "{} vertices need {} edges, got {}",
                vertices.len(),
                vertices.len() - 1,
                edges.len()
            ));
        }
        let mut f = PartitionForest::new(vertices.len());
        for &(a, b) in &edges {
            if a >= vertices.len() || b >= vertices.len() || a == b {
                return invalid(format!("bad edge ({a}, {b})"));
            }
            if !f.union(a, b) {
                return invalid(format!("edge ({a}, {b}) closes a cycle"));
            }
        }
        Ok(StraightLineTree { vertices, edges })
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn segment(&self, e: usize) -> (&[f64], &[f64]) {
        let (a, b) = self.edges[e];
        (&self.vertices[a], &self.vertices[b])
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let (a, b) = self.segment(e);
        euclidean(a, b)
    }

    pub fn max_edge_length(&self) -> f64 {
        (0..self.edges.len())
            .map(|e| self.edge_length(e))
            .fold(0.0, f64::max)
    }

    pub fn min_edge_length(&self) -> f64 {
        (0..self.edges.len())
            .map(|e| self.edge_length(e))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn total_length(&self) -> f64 {
        (0..self.edges.len()).map(|e| self.edge_length(e)).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices.len()];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    /// Edge ids incident to each vertex.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.vertices.len()];
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            inc[a].push(e);
            inc[b].push(e);
        }
        inc
    }

    /// Smallest angle between two edges sharing a vertex; `π` when no two
    /// edges share one.
    pub fn min_angle(&self) -> f64 {
        let mut best = PI;
        for (v, inc) in self.incidence().iter().enumerate() {
            let dirs: Vec<Vec<f64>> = inc
                .iter()
                .map(|&e| {
                    let (a, b) = self.edges[e];
                    let w = if a == v { b } else { a };
                    sub(&self.vertices[w], &self.vertices[v])
                })
                .collect();
            for i in 0..dirs.len() {
                for j in i + 1..dirs.len() {
                    best = best.min(angle_between(&dirs[i], &dirs[j]));
                }
            }
        }
        best
    }

    /// Smallest distance between two edges without a common vertex;
    /// infinity when there is no such pair.
    pub fn min_nonadjacent_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for e in 0..self.edges.len() {
            for f in e + 1..self.edges.len() {
                if !self.adjacent(e, f) {
                    let (a, b) = self.segment(e);
                    let (c, d) = self.segment(f);
                    best = best.min(segment_segment_distance(a, b, c, d));
                }
            }
        }
        best
    }

    pub fn adjacent(&self, e: usize, f: usize) -> bool {
        let (a, b) = self.edges[e];
        let (c, d) = self.edges[f];
        a == c || a == d || b == c || b == d
    }

    /// Distance from `p` to the tree. A single-vertex tree is that vertex.
    pub fn distance_to(&self, p: &[f64]) -> f64 {
        if self.edges.is_empty() {
            return euclidean(p, &self.vertices[0]);
        }
        (0..self.edges.len())
            .map(|e| {
                let (a, b) = self.segment(e);
                point_segment_distance(p, a, b)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Nearest edge to `p` and the distance to it.
    pub fn nearest_edge(&self, p: &[f64]) -> Option<(usize, f64)> {
        (0..self.edges.len())
            .map(|e| {
                let (a, b) = self.segment(e);
                (e, point_segment_distance(p, a, b))
            })
            .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)))
    }

    /// Sorted degree sequence after suppressing degree-2 vertices. Two
    /// trees are homeomorphic exactly when these agree.
    pub fn smoothed_degrees(&self) -> Vec<usize> {
        smoothed_degree_sequence(&self.degrees())
    }

    /// Axis-aligned bounding box as (min, max) corners.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let dim = self.dim();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for v in &self.vertices {
            for i in 0..dim {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        (lo, hi)
    }
}

/// Degree sequence of a tree with degree-2 vertices removed, sorted.
/// A tree made of a single path of length at least one smooths to `[1, 1]`.
pub fn smoothed_degree_sequence(degrees: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = degrees.iter().copied().filter(|&d| d != 2).collect();
    out.sort_unstable();
    out
}

/// Largest distance from a cloud point to the tree.
pub fn directed_hausdorff(tree: &StraightLineTree, cloud: &[Vec<f64>]) -> Result<f64> {
    if cloud.is_empty() {
        return invalid("cloud is empty");
    }
    if cloud.iter().any(|p| p.len() != tree.dim()) {
        return invalid("cloud and tree dimensions differ");
    }
    Ok(cloud
        .iter()
        .map(|p| tree.distance_to(p))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_distances() {
        assert_eq!(
            point_segment_distance(&[0.5, 1.0], &[0.0, 0.0], &[1.0, 0.0]),
            1.0
        );
        assert_eq!(
            point_segment_distance(&[2.0, 0.0], &[0.0, 0.0], &[1.0, 0.0]),
            1.0
        );
        let crossing =
            segment_segment_distance(&[-1.0, 0.0], &[1.0, 0.0], &[0.0, -1.0], &[0.0, 1.0]);
        assert_eq!(crossing, 0.0);
        let skew = segment_segment_distance(
            &[-1.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0],
            &[0.0, -1.0, 2.0],
            &[0.0, 1.0, 2.0],
        );
        assert!((skew - 2.0).abs() < 1e-15);
        let parallel = segment_segment_distance(&[0.0, 0.0], &[1.0, 0.0], &[0.5, 3.0], &[2.0, 3.0]);
        assert_eq!(parallel, 3.0);
    }

    #[test]
    fn tree_validation() {
        assert!(StraightLineTree::new(vec![vec![0.0], vec![1.0]], vec![]).is_err());
        let cyc = StraightLineTree::new(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![(0, 1), (1, 0)],
        );
        assert!(cyc.is_err());
    }

    #[test]
    fn angles_and_degrees() {
        let t = StraightLineTree::new(
            vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![-1.0, 0.0],
            ],
            vec![(0, 1), (0, 2), (0, 3)],
        )
        .unwrap();
        assert!((t.min_angle() - PI / 2.0).abs() < 1e-15);
        assert_eq!(t.smoothed_degrees(), vec![1, 1, 1, 3]);
        assert_eq!(t.min_nonadjacent_distance(), f64::INFINITY);
        let seg =
            StraightLineTree::new(vec![vec![0.0, 0.0], vec![2.0, 0.0]], vec![(0, 1)]).unwrap();
        assert_eq!(seg.min_angle(), PI);
        assert_eq!(
            directed_hausdorff(&seg, &[vec![1.0, 0.0], vec![0.5, 0.25]]).unwrap(),
            0.25
        );
        assert_eq!(directed_hausdorff(&seg, &[vec![1.0, 0.0]]).unwrap(), 0.0);
    }

    #[test]
    fn path_smoothing() {
        assert_eq!(smoothed_degree_sequence(&[1, 2, 2, 1]), vec![1, 1]);
        assert_eq!(smoothed_degree_sequence(&[0]), vec![0]);
    }
}
