//! Seeded dataset generators.
//!
//! Every generator draws from `ChaCha8Rng::seed_from_u64(seed)` with the
//! stream set to a per-generator constant, so outputs are reproducible
//! bit for bit and independent across generators sharing a seed.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::geometry::{angle_between, segment_segment_distance, StraightLineTree};
use crate::metric::MetricSpace;

/// Stream ids, one per generator.
pub mod stream {
    pub const UNIFORM: u64 = 1;
    pub const SENSIBLE_TREE: u64 = 2;
    pub const EPS_SAMPLE: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const PERTURB: u64 = 5;
    pub const QUERIES: u64 = 6;
}

/// Seeded generator on the given stream.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Cross-block distance of the two separated sets.
pub const TWO_SET_CROSS: f64 = 1024.0;

/// Largest supported `k` for [`gen_two_separated_sets`].
pub const TWO_SET_MAX_K: u32 = 12;

/// Two blocks `A` and `B` of `2^k` points each, stored as one explicit
/// matrix with `A` first. Point `p_i` (`i = 1..=2^k`) sits at index `i - 1`
/// of its block; inside a block `d(p_i, p_j) = 1 + (k + 1 - J) / (k + 1)`
/// where `J` is the first differing bit, most significant first, of the
/// `k`-bit codes `i mod 2^k` and `j mod 2^k`. Cross distances are 1024.
pub fn gen_two_separated_sets(k: u32) -> Result<MetricSpace> {
    if !(1..=TWO_SET_MAX_K).contains(&k) {
        return invalid(format!("k must lie in 1..={TWO_SET_MAX_K}, got {k}"));
    }
    let half = 1usize << k;
    let n = 2 * half;
    let mask = half - 1;
    let mut rows = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            rows[a][b] = if (a < half) != (b < half) {
                TWO_SET_CROSS
            } else {
                let (ca, cb) = ((a % half + 1) & mask, (b % half + 1) & mask);
                // Leading zeros of the k-bit xor give J - 1.
                let j = (ca ^ cb).leading_zeros() - (usize::BITS - k) + 1;
                1.0 + f64::from(k + 1 - j) / f64::from(k + 1)
            };
        }
    }
    MetricSpace::from_matrix(&rows)
}

/// One-dimensional Euclidean space with the given coordinates.
pub fn gen_line_cloud(values: &[f64]) -> Result<MetricSpace> {
    MetricSpace::from_points(&values.iter().map(|&v| vec![v]).collect::<Vec<_>>())
}

/// `n` points uniform in `[0, 1]^dim`.
pub fn gen_uniform_cloud(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed, stream::UNIFORM);
    (0..n)
        .map(|_| (0..dim).map(|_| r.gen::<f64>()).collect())
        .collect()
}

/// Planar star: spoke `j` leaves the center (vertex 0) at angle `j·θ`.
pub fn gen_star(n_edges: usize, min_angle: f64, edge_length: f64) -> Result<StraightLineTree> {
    if n_edges == 0 {
        return invalid("a star needs at least one spoke");
    }
    if !(edge_length > 0.0) || !edge_length.is_finite() {
        return invalid("edge length must be positive");
    }
    if !(min_angle > 0.0) || n_edges as f64 * min_angle > TAU * (1.0 + 1e-12) {
        return invalid(format!(
            "{n_edges} spokes cannot be {min_angle} rad apart in the plane"
        ));
    }
    let mut vertices = vec![vec![0.0, 0.0]];
    let mut edges = Vec::with_capacity(n_edges);
    for j in 0..n_edges {
        let phi = j as f64 * min_angle;
        vertices.push(vec![edge_length * phi.cos(), edge_length * phi.sin()]);
        edges.push((0, j + 1));
    }
    StraightLineTree::new(vertices, edges)
}

/// Straight segment from `a` to `b`.
pub fn gen_segment(a: Vec<f64>, b: Vec<f64>) -> Result<StraightLineTree> {
    StraightLineTree::new(vec![a, b], vec![(0, 1)])
}

/// Parameters of [`gen_sensible_tree`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeParams {
    pub n_vertices: usize,
    pub l_max: f64,
    pub l_min: f64,
    pub theta: f64,
    /// Required clearance between the new edge and every edge it does not
    /// touch.
    pub width: f64,
}

/// Random planar tree grown one leaf at a time. The attachment vertex is
/// drawn with probability proportional to its degree (uniformly while all
/// degrees are zero) and the leaf uniformly by area in the annulus
/// `l_min ≤ r ≤ l_max` around it. Candidates making an angle below `θ` at
/// the attachment vertex, or passing closer than `width` to a non-adjacent
/// edge, are rejected.
pub fn gen_sensible_tree(params: TreeParams, seed: u64) -> Result<StraightLineTree> {
    let TreeParams {
        n_vertices,
        l_max,
        l_min,
        theta,
        width,
    } = params;
    if n_vertices == 0 {
        return invalid("a tree needs at least one vertex");
    }
    if !(0.0 < l_min && l_min < l_max && l_max.is_finite()) {
        return invalid("need 0 < l_min < l_max");
    }
    if !(theta > 0.0 && theta <= PI) || !(width >= 0.0) {
        return invalid("need 0 < theta <= pi and width >= 0");
    }
    let mut r = rng(seed, stream::SENSIBLE_TREE);
    let mut vertices = vec![vec![0.0, 0.0]];
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut degree = vec![0usize];
    let budget = 10_000usize.saturating_mul(n_vertices);
    let mut tries = 0usize;
    while vertices.len() < n_vertices {
        tries += 1;
        if tries > budget {
            return Err(Error::GenerationFailure(format!(
                "placed {} of {n_vertices} vertices in {budget} tries",
                vertices.len()
            )));
        }
        let total: usize = degree.iter().sum();
        let v = if total == 0 {
            r.gen_range(0..vertices.len())
        } else {
            let mut pick = r.gen_range(0..total);
            let mut v = 0;
            while pick >= degree[v] {
                pick -= degree[v];
                v += 1;
            }
            v
        };
        let rad = (l_min * l_min + r.gen::<f64>() * (l_max * l_max - l_min * l_min)).sqrt();
        let phi = r.gen::<f64>() * TAU;
        let u = vec![
            vertices[v][0] + rad * phi.cos(),
            vertices[v][1] + rad * phi.sin(),
        ];
        let dir = [u[0] - vertices[v][0], u[1] - vertices[v][1]];
        let angle_ok = edges.iter().all(|&(a, b)| {
            if a != v && b != v {
                return true;
            }
            let w = if a == v { b } else { a };
            let other = [
                vertices[w][0] - vertices[v][0],
                vertices[w][1] - vertices[v][1],
            ];
            angle_between(&dir, &other) >= theta
        });
        if !angle_ok {
            continue;
        }
        let clear = edges.iter().all(|&(a, b)| {
            a == v
                || b == v
                || segment_segment_distance(&vertices[v], &u, &vertices[a], &vertices[b]) >= width
        });
        if !clear {
            continue;
        }
        let id = vertices.len();
        vertices.push(u);
        degree.push(1);
        degree[v] += 1;
        edges.push((v, id));
    }
    StraightLineTree::new(vertices, edges)
}

/// `n_points` drawn uniformly from the `ε`-offset of `tree` by rejection
/// in its bounding box grown by `ε`.
pub fn gen_eps_sample(
    tree: &StraightLineTree,
    n_points: usize,
    epsilon: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return invalid("epsilon must be positive");
    }
    let (lo, hi) = tree.bounding_box();
    let mut r = rng(seed, stream::EPS_SAMPLE);
    let mut out = Vec::with_capacity(n_points);
    let budget = 10_000usize.saturating_mul(n_points.max(1));
    let mut tries = 0usize;
    while out.len() < n_points {
        tries += 1;
        if tries > budget {
            return Err(Error::GenerationFailure(format!(
                "accepted {} of {n_points} points in {budget} tries",
                out.len()
            )));
        }
        let p: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(&a, &b)| (a - epsilon) + r.gen::<f64>() * (b - a + 2.0 * epsilon))
            .collect();
        if tree.distance_to(&p) <= epsilon {
            out.push(p);
        }
    }
    Ok(out)
}

/// Cloud of `n` points within `ε` of the unit segment along the first axis
/// of `ℝ^3`.
pub fn gen_tube(n: usize, epsilon: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    let seg = gen_segment(vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0])?;
    gen_eps_sample(&seg, n, epsilon, seed)
}

/// Uniform random permutation of `0..n`.
pub fn shuffled_order(n: usize, seed: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(&mut rng(seed, stream::SHUFFLE));
    v
}

/// Moves each coordinate by a uniform amount in `[-η/√m, η/√m]`, so no
/// point moves farther than `η`.
pub fn perturb(points: &[Vec<f64>], eta: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed, stream::PERTURB);
    points
        .iter()
        .map(|p| {
            let s = eta / (p.len() as f64).sqrt();
            p.iter()
                .map(|x| x + s * (2.0 * r.gen::<f64>() - 1.0))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{verify_metric_axioms, DEFAULT_AXIOM_CAP, DEFAULT_TOLERANCE};

    #[test]
    fn two_sets_figure_values() {
        let x = gen_two_separated_sets(2).unwrap();
        assert_eq!(x.len(), 8);
        assert!((x.distance(1, 2) - 4.0 / 3.0).abs() < 1e-15);
        assert!((x.distance(0, 1) - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(x.distance(0, 4), 1024.0);
        assert_eq!(x.distance(5, 6), x.distance(1, 2));
        for k in 1..=4 {
            let x = gen_two_separated_sets(k).unwrap();
            assert!(
                verify_metric_axioms(&x, DEFAULT_AXIOM_CAP, DEFAULT_TOLERANCE)
                    .unwrap()
                    .all_ok()
            );
            let half = 1 << k;
            for a in 0..half {
                for b in 0..half {
                    if a != b {
                        let d = x.distance(a, b);
                        assert!(d > 1.0 && d < 2.0);
                    }
                }
            }
        }
        assert!(gen_two_separated_sets(0).is_err());
        assert!(gen_two_separated_sets(13).is_err());
    }

    #[test]
    fn stars() {
        let s = gen_star(5, TAU / 5.0, 1.0).unwrap();
        assert_eq!(s.vertex_count(), 6);
        assert_eq!(s.degrees()[0], 5);
        assert_eq!(gen_star(1, 1.0, 2.0).unwrap().edges, vec![(0, 1)]);
        assert!(gen_star(5, PI / 2.0, 1.0).is_err());
        let s4 = gen_star(4, PI / 4.0, 1.0).unwrap();
        assert!((s4.min_angle() - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn sensible_trees() {
        let p = TreeParams {
            n_vertices: 1,
            l_max: 1.5,
            l_min: 0.5,
            theta: PI / 4.0,
            width: 0.3,
        };
        assert_eq!(gen_sensible_tree(p, 1).unwrap().vertex_count(), 1);
        let two = gen_sensible_tree(TreeParams { n_vertices: 2, ..p }, 1).unwrap();
        let l = two.edge_length(0);
        assert!((0.5..=1.5).contains(&l));
        let big = gen_sensible_tree(
            TreeParams {
                n_vertices: 100,
                ..p
            },
            7,
        )
        .unwrap();
        assert_eq!(big.vertex_count(), 100);
        assert!(big.min_edge_length() >= 0.5 - 1e-12);
        assert!(big.max_edge_length() <= 1.5 + 1e-12);
        assert!(big.min_angle() >= PI / 4.0 - 1e-12);
        assert!(big.min_nonadjacent_distance() >= 0.3 - 1e-12);
        assert_eq!(
            gen_sensible_tree(
                TreeParams {
                    n_vertices: 100,
                    ..p
                },
                7
            )
            .unwrap(),
            big
        );
    }

    #[test]
    fn eps_samples() {
        let s = gen_star(4, PI / 4.0, 1.0).unwrap();
        let c = gen_eps_sample(&s, 400, 0.05, 3).unwrap();
        assert_eq!(c.len(), 400);
        assert!(c.iter().all(|p| s.distance_to(p) <= 0.05));
        assert_eq!(gen_eps_sample(&s, 400, 0.05, 3).unwrap(), c);
        let seg = gen_segment(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let tiny = gen_eps_sample(&seg, 50, 1e-9, 3).unwrap();
        assert!(tiny.iter().all(|p| seg.distance_to(p) <= 1e-9));
    }
}
