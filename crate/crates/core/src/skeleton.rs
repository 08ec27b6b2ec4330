//! Tree reconstruction from noisy samples of a straight-line tree.
//!
//! The pipeline connects the cloud into a k-nearest-neighbor graph made
//! connected by minimum extra edges, scores points by kernel density,
//! greedily keeps a sparse set of densest points under the graph's path
//! metric, joins them by a minimum spanning tree of the induced quotient
//! graph and finally moves the tree's vertices to fit the cloud.

use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::cover_tree::CoverTree;
use crate::error::{invalid, Error, Result};
use crate::geometry::{directed_hausdorff, project_onto_segment, StraightLineTree};
use crate::graph::{Edge, HeapItem, WeightedGraph};
use crate::kde::{fit_sigmoid, kde_approx, kde_exact};
use crate::knn::knn_exact;
use crate::metric::{euclidean, MetricSpace, Query};
use crate::mst::{boruvka_classic, boruvka_rounds, MstOptions, PartitionForest};

/// Marker for "no nearest dense point yet".
pub const NO_NDP: usize = usize::MAX;

/// k-nearest-neighbor graph completed to connectivity.
#[derive(Clone, Debug)]
pub struct MsgK {
    pub graph: WeightedGraph,
    /// Edges added on top of the neighbor edges.
    pub completion: Vec<Edge>,
}

/// Joins every point to its `k` nearest neighbors, then adds the cheapest
/// edges that connect the resulting components.
pub fn msg_k(space: &MetricSpace, k: usize) -> Result<MsgK> {
    if k < 1 {
        return invalid("k must be at least 1");
    }
    if space.is_empty() {
        return invalid("cloud is empty");
    }
    let tree = CoverTree::build(space)?;
    let n = space.len();
    let mut edges = Vec::new();
    let mut forest = PartitionForest::new(n);
    for p in 0..n {
        let res = knn_exact(&tree, Query::Id(p), (k + 1).min(n))?;
        for nb in res.neighbors.iter().filter(|nb| nb.id != p).take(k) {
            edges.push(Edge::new(p, nb.id, nb.distance));
            forest.union(p, nb.id);
        }
    }
    let (completion, _, _) = boruvka_rounds(&tree, &mut forest, MstOptions::default())?;
    edges.extend_from_slice(&completion);
    Ok(MsgK {
        graph: WeightedGraph::new(n, edges)?,
        completion,
    })
}

/// Truncated Dijkstra from `p`. A vertex `r` reached at path length `t` is
/// updated only when `dist[r] > t` and `t < delta`, recording `p` as its
/// nearest dense point.
pub fn path_metric_neighborhood(
    g: &WeightedGraph,
    p: usize,
    delta: f64,
    dist: &mut [f64],
    ndp: &mut [usize],
) -> Result<()> {
    if !(delta > 0.0) {
        return invalid("delta must be positive");
    }
    if dist.len() != g.vertex_count() || ndp.len() != g.vertex_count() || p >= g.vertex_count() {
        return invalid("maps and graph sizes differ");
    }
    dist[p] = 0.0;
    ndp[p] = p;
    let mut heap = BinaryHeap::new();
    heap.push(HeapItem {
        dist: 0.0,
        vertex: p,
    });
    while let Some(HeapItem { dist: d, vertex: u }) = heap.pop() {
        if d > dist[u] || ndp[u] != p {
            continue;
        }
        for &(r, len) in g.neighbors(u) {
            let t = d + len;
            if dist[r] > t && t < delta {
                dist[r] = t;
                ndp[r] = p;
                heap.push(HeapItem { dist: t, vertex: r });
            }
        }
    }
    Ok(())
}

/// Sparse set of densest points with the maps left by the floods.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparseDense {
    /// Selected vertices in selection order.
    pub selected: Vec<usize>,
    pub dist: Vec<f64>,
    pub ndp: Vec<usize>,
}

/// Visits vertices by decreasing `f` (ties to the lower id) and selects a
/// vertex when no earlier flood reached it, then floods its
/// `delta`-neighborhood.
pub fn sparse_dense_subset(g: &WeightedGraph, f: &[f64], delta: f64) -> Result<SparseDense> {
    sparse_dense_subset_seeded(g, f, delta, &[])
}

/// As [`sparse_dense_subset`], but offers `seeds` first, in order.
pub fn sparse_dense_subset_seeded(
    g: &WeightedGraph,
    f: &[f64],
    delta: f64,
    seeds: &[usize],
) -> Result<SparseDense> {
    let n = g.vertex_count();
    if f.len() != n {
        return invalid("density and graph sizes differ");
    }
    if f.iter().any(|x| x.is_nan()) {
        return invalid("density contains NaN");
    }
    if seeds.iter().any(|&s| s >= n) {
        return invalid("seed outside the graph");
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| f[b].total_cmp(&f[a]).then(a.cmp(&b)));
    let mut dist = vec![f64::INFINITY; n];
    let mut ndp = vec![NO_NDP; n];
    let mut selected = Vec::new();
    for &v in seeds.iter().chain(&order) {
        if dist[v] == f64::INFINITY {
            selected.push(v);
            path_metric_neighborhood(g, v, delta, &mut dist, &mut ndp)?;
        }
    }
    Ok(SparseDense {
        selected,
        dist,
        ndp,
    })
}

/// Dense tree with the selected points it was built on.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DenseTree {
    pub tree: StraightLineTree,
    /// Cloud id of every tree vertex.
    pub points: Vec<usize>,
}

/// Minimum spanning tree of the quotient of `g` by the flood cells. The
/// cells of `u` and `v` are joined at weight `dist[u] + dist[v] + |uv|`,
/// minimized over graph edges `uv` between them.
pub fn dense_tree(g: &WeightedGraph, sd: &SparseDense, cloud: &[Vec<f64>]) -> Result<DenseTree> {
    if sd.selected.is_empty() {
        return invalid("no selected points");
    }
    if cloud.len() != g.vertex_count() {
        return invalid("cloud and graph sizes differ");
    }
    let mut index = vec![usize::MAX; g.vertex_count()];
    for (i, &p) in sd.selected.iter().enumerate() {
        index[p] = i;
    }
    let mut quotient = Vec::new();
    for e in g.edges() {
        let (ca, cb) = (sd.ndp[e.a], sd.ndp[e.b]);
        if ca == NO_NDP || cb == NO_NDP || ca == cb {
            continue;
        }
        quotient.push(Edge::new(
            index[ca],
            index[cb],
            sd.dist[e.a] + sd.dist[e.b] + e.length,
        ));
    }
    let q = WeightedGraph::new(sd.selected.len(), quotient)?;
    let mst = boruvka_classic(&q)?;
    let vertices = sd.selected.iter().map(|&p| cloud[p].clone()).collect();
    let edges = mst.edges.iter().map(|e| (e.a, e.b)).collect();
    Ok(DenseTree {
        tree: StraightLineTree::new(vertices, edges)?,
        points: sd.selected.clone(),
    })
}

/// `2γ(ε + ε / sin(θ/2) + l / sin(min(θ, π/2)))` for minimum angle `θ` and
/// longest graph edge `l`.
pub fn required_delta(theta: f64, l_max_graph: f64, gamma: f64, epsilon: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= PI) {
        return invalid(format!("angle must lie in (0, pi], got {theta}"));
    }
    if !(gamma >= 1.0) || !(epsilon >= 0.0) || !(l_max_graph >= 0.0) {
        return invalid("need gamma >= 1, epsilon >= 0 and l_max >= 0");
    }
    Ok(2.0
        * gamma
        * (epsilon + epsilon / (theta / 2.0).sin() + l_max_graph / theta.min(FRAC_PI_2).sin()))
}

/// Smallest `δ` for which the homeomorphism guarantee applies.
pub fn homeomorphism_delta(
    t: &StraightLineTree,
    g: &WeightedGraph,
    gamma: f64,
    epsilon: f64,
) -> Result<f64> {
    required_delta(t.min_angle(), g.max_edge_length(), gamma, epsilon)
}

/// `Σ_e (|e| + 2ε) / (2 sqrt(δ²/γ² − 4ε²))`.
pub fn vertex_count_bound(
    t: &StraightLineTree,
    epsilon: f64,
    delta: f64,
    gamma: f64,
) -> Result<f64> {
    let inner = (delta / gamma).powi(2) - 4.0 * epsilon * epsilon;
    if !(delta / gamma > 2.0 * epsilon) || !(inner > 0.0) {
        return invalid("vertex bound needs delta / gamma > 2 epsilon");
    }
    let denom = 2.0 * inner.sqrt();
    Ok((0..t.edges.len())
        .map(|e| (t.edge_length(e) + 2.0 * epsilon) / denom)
        .sum())
}

/// Measured distortion of a neighborhood graph.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GammaReport {
    /// Largest `d_G(a, b) / d(a, b)` over pairs sharing an edge set.
    pub gamma: f64,
    /// Smallest distance between non-adjacent edges of the tree.
    pub min_nonadjacent: f64,
    /// Whether `min_nonadjacent > l_max(G) + 2ε`.
    pub separation_ok: bool,
}

/// Measures `γ` over the edge sets `{c ∈ C : dist(c, e) ≤ ε}` and checks
/// that non-adjacent tree edges stay farther apart than `l_max(G) + 2ε`.
pub fn measure_gamma(
    t: &StraightLineTree,
    cloud: &[Vec<f64>],
    g: &WeightedGraph,
    epsilon: f64,
) -> Result<GammaReport> {
    if cloud.len() != g.vertex_count() {
        return invalid("cloud and graph sizes differ");
    }
    let mut gamma: f64 = 1.0;
    for e in 0..t.edges.len() {
        let (a, b) = t.segment(e);
        let set: Vec<usize> = (0..cloud.len())
            .filter(|&c| crate::geometry::point_segment_distance(&cloud[c], a, b) <= epsilon)
            .collect();
        for (i, &x) in set.iter().enumerate() {
            let dg = g.shortest_paths(x);
            for &y in &set[i + 1..] {
                let d = euclidean(&cloud[x], &cloud[y]);
                if d > 0.0 {
                    gamma = gamma.max(dg[y] / d);
                }
            }
        }
    }
    let min_nonadjacent = t.min_nonadjacent_distance();
    Ok(GammaReport {
        gamma,
        min_nonadjacent,
        separation_ok: min_nonadjacent > g.max_edge_length() + 2.0 * epsilon,
    })
}

/// Which tree edges each cloud point may be fitted to.
#[derive(Clone, Debug, PartialEq)]
pub enum Allocation {
    /// Every point uses its nearest edge.
    Mse,
    /// Point `i` uses its nearest edge among `allowed[i]`; an empty list
    /// falls back to every edge.
    Amse(Vec<Vec<usize>>),
}

/// Allocation sending every cloud point to the edges incident to the tree
/// vertex of its nearest dense point.
pub fn amse_allocation(dt: &DenseTree, sd: &SparseDense) -> Allocation {
    let inc = dt.tree.incidence();
    let mut vertex_of = std::collections::HashMap::new();
    for (i, &p) in dt.points.iter().enumerate() {
        vertex_of.insert(p, i);
    }
    Allocation::Amse(
        sd.ndp
            .iter()
            .map(|c| {
                vertex_of
                    .get(c)
                    .map(|&v| inc[v].clone())
                    .unwrap_or_default()
            })
            .collect(),
    )
}

fn assignments(t: &StraightLineTree, cloud: &[Vec<f64>], alloc: &Allocation) -> Vec<(usize, f64)> {
    cloud
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let allowed: Option<&[usize]> = match alloc {
                Allocation::Amse(lists) if !lists[i].is_empty() => Some(&lists[i]),
                _ => None,
            };
            let best = |edges: &mut dyn Iterator<Item = usize>| {
                edges
                    .map(|e| {
                        let (a, b) = t.segment(e);
                        (e, crate::geometry::point_segment_distance(p, a, b))
                    })
                    .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)))
                    .expect("tree has an edge")
            };
            match allowed {
                Some(list) => best(&mut list.iter().copied()),
                None => best(&mut (0..t.edges.len())),
            }
        })
        .collect()
}

/// Mean squared distance from the cloud to its allocated edges.
pub fn skeleton_objective(t: &StraightLineTree, cloud: &[Vec<f64>], alloc: &Allocation) -> f64 {
    if cloud.is_empty() {
        return 0.0;
    }
    if t.edges.is_empty() {
        return cloud
            .iter()
            .map(|p| euclidean(p, &t.vertices[0]).powi(2))
            .sum::<f64>()
            / cloud.len() as f64;
    }
    assignments(t, cloud, alloc)
        .iter()
        .map(|&(_, d)| d * d)
        .sum::<f64>()
        / cloud.len() as f64
}

/// Gradient descent on vertex positions. Each iteration fixes every
/// point's nearest allocated segment and projection, takes one step of
/// size `eta` and halves it (up to 20 times) until the objective does not
/// rise; if no step helps, the vertices stay put.
pub fn optimize_skeleton(
    t: &StraightLineTree,
    cloud: &[Vec<f64>],
    alloc: &Allocation,
    eta: f64,
    iters: usize,
) -> Result<StraightLineTree> {
    if !(eta > 0.0) {
        return invalid("eta must be positive");
    }
    if let Allocation::Amse(lists) = alloc {
        if lists.len() != cloud.len() || lists.iter().flatten().any(|&e| e >= t.edges.len()) {
            return invalid("allocation does not match the cloud and tree");
        }
    }
    if cloud.iter().any(|p| p.len() != t.dim()) {
        return invalid("cloud and tree dimensions differ");
    }
    let mut cur = t.clone();
    if t.edges.is_empty() || cloud.is_empty() {
        return Ok(cur);
    }
    let n = cloud.len() as f64;
    let dim = t.dim();
    for _ in 0..iters {
        let before = skeleton_objective(&cur, cloud, alloc);
        let mut grad = vec![vec![0.0; dim]; cur.vertex_count()];
        for (i, (e, _)) in assignments(&cur, cloud, alloc).into_iter().enumerate() {
            let (va, vb) = cur.edges[e];
            let (a, b) = cur.segment(e);
            let s = project_onto_segment(&cloud[i], a, b);
            for j in 0..dim {
                let c = a[j] + s * (b[j] - a[j]);
                let r = cloud[i][j] - c;
                grad[va][j] -= 2.0 * (1.0 - s) * r / n;
                grad[vb][j] -= 2.0 * s * r / n;
            }
        }
        if grad.iter().flatten().all(|&g| g == 0.0) {
            break;
        }
        let mut step = eta;
        let mut accepted = None;
        for _ in 0..=20 {
            let mut next = cur.clone();
            for (v, g) in next.vertices.iter_mut().zip(&grad) {
                for j in 0..dim {
                    v[j] -= step * g[j];
                }
            }
            if skeleton_objective(&next, cloud, alloc) <= before {
                accepted = Some(next);
                break;
            }
            step /= 2.0;
        }
        match accepted {
            Some(next) => cur = next,
            None => break,
        }
    }
    Ok(cur)
}

/// `1 − Σ_{i=1..k} |q(i, G) − q(i, H)| / |V(G)|` where `q(i, X)` counts
/// degree-`i` vertices and `k` is the largest degree in `G`. Clamped at 0.
pub fn degree_list_recognition(g_degrees: &[usize], h_degrees: &[usize]) -> Result<f64> {
    if g_degrees.is_empty() {
        return invalid("reference graph is empty");
    }
    let k = *g_degrees.iter().max().expect("non-empty");
    let count = |ds: &[usize], i: usize| ds.iter().filter(|&&d| d == i).count() as f64;
    let miss: f64 = (1..=k)
        .map(|i| (count(g_degrees, i) - count(h_degrees, i)).abs())
        .sum();
    Ok((1.0 - miss / g_degrees.len() as f64).max(0.0))
}

/// Pipeline parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PipelineParams {
    pub k: usize,
    pub r: f64,
    pub t: f64,
    pub delta: f64,
    pub eta: f64,
    pub iters: usize,
    /// Use tree-pruned density with this per-point error; exact when None.
    pub kde_epsilon: Option<f64>,
    pub threads: usize,
}

/// Ground truth for quality measurements.
#[derive(Clone, Copy, Debug)]
pub struct Truth<'a> {
    pub tree: &'a StraightLineTree,
    pub epsilon: f64,
}

/// Quality figures of a reconstruction. Entries needing the true tree
/// are None without it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkeletonReport {
    pub dense_points: usize,
    pub completion_edges: usize,
    pub graph_l_max: f64,
    pub directed_hausdorff: f64,
    pub optimized_directed_hausdorff: f64,
    pub gamma: Option<f64>,
    pub separation_ok: Option<bool>,
    pub delta_required: Option<f64>,
    pub vertex_bound: Option<f64>,
    pub degree_recognition: Option<f64>,
    pub homeomorphic: Option<bool>,
}

/// Everything the pipeline produced.
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub msg: MsgK,
    pub density: Vec<f64>,
    pub sparse: SparseDense,
    pub dense: DenseTree,
    pub optimized: StraightLineTree,
    pub report: SkeletonReport,
}

/// Neighbor graph, density, sparse densest points, dense tree and
/// optimized dense tree for a cloud.
pub fn full_pipeline(
    cloud: &[Vec<f64>],
    params: PipelineParams,
    truth: Option<Truth<'_>>,
) -> Result<PipelineOutput> {
    if !(params.delta > 0.0) {
        return invalid("delta must be positive");
    }
    let space = MetricSpace::from_points(cloud)?;
    let msg = msg_k(&space, params.k)?;
    let kernel = fit_sigmoid(params.r, params.t)?;
    let queries: Vec<Query<'_>> = (0..space.len()).map(Query::Id).collect();
    let density = match params.kde_epsilon {
        Some(e) => kde_approx(
            &kernel,
            &CoverTree::build(&space)?,
            &queries,
            e,
            params.threads,
        )?,
        None => kde_exact(&kernel, &space, &queries)?,
    };
    let sparse = sparse_dense_subset(&msg.graph, &density, params.delta)?;
    let dense = dense_tree(&msg.graph, &sparse, cloud)?;
    let alloc = amse_allocation(&dense, &sparse);
    let optimized = optimize_skeleton(&dense.tree, cloud, &alloc, params.eta, params.iters)?;
    let mut report = SkeletonReport {
        dense_points: sparse.selected.len(),
        completion_edges: msg.completion.len(),
        graph_l_max: msg.graph.max_edge_length(),
        directed_hausdorff: directed_hausdorff(&dense.tree, cloud)?,
        optimized_directed_hausdorff: directed_hausdorff(&optimized, cloud)?,
        gamma: None,
        separation_ok: None,
        delta_required: None,
        vertex_bound: None,
        degree_recognition: None,
        homeomorphic: None,
    };
    if let Some(truth) = truth {
        let gm = measure_gamma(truth.tree, cloud, &msg.graph, truth.epsilon)?;
        report.gamma = Some(gm.gamma);
        report.separation_ok = Some(gm.separation_ok);
        report.delta_required =
            homeomorphism_delta(truth.tree, &msg.graph, gm.gamma, truth.epsilon).ok();
        report.vertex_bound =
            vertex_count_bound(truth.tree, truth.epsilon, params.delta, gm.gamma).ok();
        report.degree_recognition = Some(degree_list_recognition(
            &truth.tree.degrees(),
            &dense.tree.degrees(),
        )?);
        report.homeomorphic = Some(truth.tree.smoothed_degrees() == dense.tree.smoothed_degrees());
    }
    Ok(PipelineOutput {
        msg,
        density,
        sparse,
        dense,
        optimized,
        report,
    })
}

/// Conditions under which the reconstruction guarantees apply, with the
/// measured quantities behind each.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GuaranteeCheck {
    pub gamma: f64,
    pub separation_ok: bool,
    pub delta_required: f64,
    pub delta_ok: bool,
    /// Every tree vertex has a selected point within `ε`.
    pub vertices_covered: bool,
    /// Selected points are pairwise at path distance at least `δ`.
    pub sparse_ok: bool,
}

impl GuaranteeCheck {
    pub fn valid(&self) -> bool {
        self.separation_ok && self.delta_ok && self.vertices_covered && self.sparse_ok
    }
}

/// Evaluates the preconditions of the reconstruction guarantees.
pub fn check_guarantees(
    t: &StraightLineTree,
    cloud: &[Vec<f64>],
    g: &WeightedGraph,
    sd: &SparseDense,
    delta: f64,
    epsilon: f64,
) -> Result<GuaranteeCheck> {
    let gm = measure_gamma(t, cloud, g, epsilon)?;
    let delta_required = homeomorphism_delta(t, g, gm.gamma, epsilon)?;
    let vertices_covered = t.vertices.iter().all(|v| {
        sd.selected
            .iter()
            .any(|&p| euclidean(v, &cloud[p]) <= epsilon)
    });
    let sparse_ok = sd.selected.iter().all(|&p| {
        let d = g.shortest_paths(p);
        sd.selected.iter().all(|&q| q == p || d[q] >= delta)
    });
    Ok(GuaranteeCheck {
        gamma: gm.gamma,
        separation_ok: gm.separation_ok,
        delta_required,
        delta_ok: delta >= delta_required,
        vertices_covered,
        sparse_ok,
    })
}

/// Cloud ids nearest to each tree vertex, in vertex order.
pub fn nearest_to_vertices(t: &StraightLineTree, cloud: &[Vec<f64>]) -> Result<Vec<usize>> {
    if cloud.is_empty() {
        return Err(Error::EmptyStructure("cloud is empty".into()));
    }
    Ok(t.vertices
        .iter()
        .map(|v| {
            (0..cloud.len())
                .min_by(|&a, &b| {
                    euclidean(v, &cloud[a])
                        .total_cmp(&euclidean(v, &cloud[b]))
                        .then(a.cmp(&b))
                })
                .expect("non-empty")
        })
        .collect())
}
