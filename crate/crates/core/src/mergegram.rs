//! Single-linkage dendrograms, mergegrams, 0D persistence and the
//! bottleneck distance.

use serde::Serialize;

use crate::cover_tree::CoverTree;
use crate::error::{invalid, Result};
use crate::graph::Edge;
use crate::metric::MetricSpace;
use crate::mst::{mst_singletree_boruvka, PartitionForest, SpanningTree};

/// One cluster of a dendrogram: born at `birth`, absorbed at `death`
/// (infinite for the final cluster).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterRecord {
    pub birth: f64,
    pub death: f64,
    pub members: Vec<usize>,
}

/// Clusters `inputs` merging into `output` at `scale`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MergeEvent {
    pub scale: f64,
    pub inputs: Vec<usize>,
    pub output: usize,
}

/// Single-linkage dendrogram. Records `0..n` are the singletons.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Dendrogram {
    pub n: usize,
    pub clusters: Vec<ClusterRecord>,
    pub merges: Vec<MergeEvent>,
}

impl Dendrogram {
    /// Builds the dendrogram from a spanning tree of `n` points. Edges of
    /// equal length are applied together, so a chain of ties becomes one
    /// multi-way merge.
    pub fn from_spanning_tree(n: usize, tree: &SpanningTree) -> Result<Self> {
        if n == 0 {
            return invalid("dendrogram needs at least one point");
        }
        if !tree.is_spanning_tree(n) {
            return invalid("edges do not form a spanning tree");
        }
        let mut edges: Vec<Edge> = tree.edges.clone();
        edges.sort_by(|x, y| x.length.total_cmp(&y.length).then(x.key().cmp(&y.key())));
        let mut clusters: Vec<ClusterRecord> = (0..n)
            .map(|p| ClusterRecord {
                birth: 0.0,
                death: f64::INFINITY,
                members: vec![p],
            })
            .collect();
        let mut merges = Vec::new();
        // Current cluster record of every point.
        let mut owner: Vec<usize> = (0..n).collect();
        let mut start = 0;
        while start < edges.len() {
            let scale = edges[start].length;
            let mut end = start;
            while end < edges.len() && edges[end].length == scale {
                end += 1;
            }
            // Group the current clusters joined by this batch.
            let mut batch = PartitionForest::new(clusters.len());
            for e in &edges[start..end] {
                batch.union(owner[e.a], owner[e.b]);
            }
            let mut touched: Vec<usize> = edges[start..end]
                .iter()
                .flat_map(|e| [owner[e.a], owner[e.b]])
                .collect();
            touched.sort_unstable();
            touched.dedup();
            let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
            for c in touched {
                let r = batch.find(c);
                match groups.iter_mut().find(|(root, _)| *root == r) {
                    Some((_, g)) => g.push(c),
                    None => groups.push((r, vec![c])),
                }
            }
            for (_, inputs) in groups {
                let output = clusters.len();
                let mut members = Vec::new();
                for &c in &inputs {
                    clusters[c].death = scale;
                    members.extend_from_slice(&clusters[c].members);
                }
                members.sort_unstable();
                for &p in &members {
                    owner[p] = output;
                }
                clusters.push(ClusterRecord {
                    birth: scale,
                    death: f64::INFINITY,
                    members,
                });
                merges.push(MergeEvent {
                    scale,
                    inputs,
                    output,
                });
            }
            start = end;
        }
        Ok(Dendrogram {
            n,
            clusters,
            merges,
        })
    }

    /// Dendrogram of a metric space via its minimum spanning tree.
    pub fn of_space(space: &MetricSpace) -> Result<Self> {
        let tree = CoverTree::build(space)?;
        let mst = mst_singletree_boruvka(&tree)?;
        Self::from_spanning_tree(space.len(), &mst.tree)
    }

    /// Ultrametric: the scale at which two points first share a cluster.
    pub fn ultrametric(&self) -> Result<MetricSpace> {
        let mut u = vec![vec![0.0; self.n]; self.n];
        for m in &self.merges {
            for (i, &a) in m.inputs.iter().enumerate() {
                for &b in &m.inputs[i + 1..] {
                    for &x in &self.clusters[a].members {
                        for &y in &self.clusters[b].members {
                            u[x][y] = m.scale;
                            u[y][x] = m.scale;
                        }
                    }
                }
            }
        }
        MetricSpace::from_matrix(&u)
    }
}

/// Single-linkage dendrogram of a metric space.
pub fn sl_dendrogram(space: &MetricSpace) -> Result<Dendrogram> {
    Dendrogram::of_space(space)
}

/// Multiset of `(birth, death)` pairs kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagram {
    pairs: Vec<(f64, f64)>,
}

impl Diagram {
    /// Rejects NaN, infinite births and deaths before births.
    pub fn new(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        for &(b, d) in &pairs {
            if !b.is_finite() || d.is_nan() || d < b {
                return invalid(format!("invalid pair ({b}, {d})"));
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        Ok(Diagram { pairs })
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Multiplies every coordinate by `factor`.
    pub fn scaled(&self, factor: f64) -> Diagram {
        Diagram {
            pairs: self
                .pairs
                .iter()
                .map(|&(b, d)| (b * factor, d * factor))
                .collect(),
        }
    }

    fn split(&self) -> (Vec<(f64, f64)>, Vec<f64>) {
        let finite = self
            .pairs
            .iter()
            .copied()
            .filter(|p| p.1.is_finite())
            .collect();
        let infinite = self
            .pairs
            .iter()
            .filter(|p| p.1.is_infinite())
            .map(|p| p.0)
            .collect();
        (finite, infinite)
    }
}

/// One `(birth, death)` pair per cluster record of the dendrogram.
pub fn mergegram(dendrogram: &Dendrogram) -> Diagram {
    Diagram::new(
        dendrogram
            .clusters
            .iter()
            .map(|c| (c.birth, c.death))
            .collect(),
    )
    .expect("cluster records die after birth")
}

/// 0D persistence: `(0, l)` for every MST edge length `l` plus `(0, ∞)`.
pub fn pd0(space: &MetricSpace) -> Result<Diagram> {
    if space.is_empty() {
        return invalid("pd0 needs at least one point");
    }
    let tree = CoverTree::build(space)?;
    Ok(pd0_from_spanning_tree(&mst_singletree_boruvka(&tree)?.tree))
}

pub fn pd0_from_spanning_tree(tree: &SpanningTree) -> Diagram {
    let mut pairs: Vec<(f64, f64)> = tree.edges.iter().map(|e| (0.0, e.length)).collect();
    pairs.push((0.0, f64::INFINITY));
    Diagram::new(pairs).expect("edge lengths are positive")
}

/// Recovers 0D persistence from a mergegram: at each positive scale `s`
/// the number of finite deaths is the number of pairs dying at `s` minus
/// the number of pairs born at `s`.
pub fn pd0_from_mergegram(mg: &Diagram) -> Result<Diagram> {
    let mut scales: Vec<f64> = mg
        .pairs
        .iter()
        .map(|p| p.1)
        .filter(|d| d.is_finite())
        .collect();
    scales.sort_by(f64::total_cmp);
    scales.dedup();
    let mut pairs = Vec::new();
    for s in scales {
        let dying = mg.pairs.iter().filter(|p| p.1 == s).count();
        let born = mg.pairs.iter().filter(|p| p.0 == s).count();
        if dying < born {
            return invalid(format!("more clusters born than absorbed at scale {s}"));
        }
        pairs.extend(std::iter::repeat_n((0.0, s), dying - born));
    }
    pairs.push((0.0, f64::INFINITY));
    Diagram::new(pairs)
}

fn linf(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

fn diagonal_gap(a: (f64, f64)) -> f64 {
    (a.1 - a.0) / 2.0
}

/// Bottleneck distance. Points may be matched to the diagonal; pairs with
/// infinite death are matched only among themselves by birth, so unequal
/// counts give infinity.
pub fn bottleneck(d1: &Diagram, d2: &Diagram) -> f64 {
    let (f1, i1) = d1.split();
    let (f2, i2) = d2.split();
    if i1.len() != i2.len() {
        return f64::INFINITY;
    }
    // Sorted births pair up optimally on a line.
    let inf_cost = i1
        .iter()
        .zip(&i2)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut cands: Vec<f64> = vec![0.0];
    for &a in &f1 {
        cands.push(diagonal_gap(a));
        for &b in &f2 {
            cands.push(linf(a, b));
        }
    }
    cands.extend(f2.iter().map(|&b| diagonal_gap(b)));
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    // The largest candidate is always feasible: everything to the diagonal.
    let (mut lo, mut hi) = (0, cands.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if matching_exists(&f1, &f2, cands[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    cands[lo].max(inf_cost)
}

/// Perfect matching on the diagonal-augmented bipartite graph. Left side:
/// `f1` then one diagonal slot per `f2` point; right side: `f2` then one
/// diagonal slot per `f1` point.
fn matching_exists(f1: &[(f64, f64)], f2: &[(f64, f64)], delta: f64) -> bool {
    let (n1, n2) = (f1.len(), f2.len());
    let size = n1 + n2;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); size];
    for i in 0..n1 {
        for j in 0..n2 {
            if linf(f1[i], f2[j]) <= delta {
                adj[i].push(j);
            }
        }
        if diagonal_gap(f1[i]) <= delta {
            adj[i].push(n2 + i);
        }
    }
    for j in 0..n2 {
        if diagonal_gap(f2[j]) <= delta {
            adj[n1 + j].push(j);
        }
        adj[n1 + j].extend(n2..size);
    }
    let mut match_right = vec![usize::MAX; size];
    for left in 0..size {
        let mut seen = vec![false; size];
        if !augment(left, &adj, &mut match_right, &mut seen) {
            return false;
        }
    }
    true
}

fn augment(left: usize, adj: &[Vec<usize>], match_right: &mut [usize], seen: &mut [bool]) -> bool {
    for &r in &adj[left] {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        if match_right[r] == usize::MAX || augment(match_right[r], adj, match_right, seen) {
            match_right[r] = left;
            return true;
        }
    }
    false
}

/// Bottleneck distance by enumerating every partial matching. Exponential;
/// meant as an oracle for diagrams of a handful of points.
pub fn bottleneck_exhaustive(d1: &Diagram, d2: &Diagram) -> Result<f64> {
    if d1.len() > 8 || d2.len() > 8 {
        return invalid("exhaustive bottleneck is limited to 8 points per diagram");
    }
    let (f1, i1) = d1.split();
    let (f2, i2) = d2.split();
    if i1.len() != i2.len() {
        return Ok(f64::INFINITY);
    }
    let mut best_inf = f64::INFINITY;
    permutations(i2.len(), &mut |perm| {
        let c = i1
            .iter()
            .zip(perm)
            .map(|(a, &j)| (a - i2[j]).abs())
            .fold(0.0, f64::max);
        best_inf = best_inf.min(c);
    });
    let mut best = f64::INFINITY;
    let mut used = vec![false; f2.len()];
    partial_matchings(&f1, &f2, 0, &mut used, 0.0, &mut best);
    Ok(best.max(best_inf))
}

fn permutations(n: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(perm: &mut Vec<usize>, used: &mut [bool], visit: &mut impl FnMut(&[usize])) {
        if perm.len() == used.len() {
            visit(perm);
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                perm.push(j);
                rec(perm, used, visit);
                perm.pop();
                used[j] = false;
            }
        }
    }
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], visit);
}

fn partial_matchings(
    f1: &[(f64, f64)],
    f2: &[(f64, f64)],
    i: usize,
    used: &mut [bool],
    cost: f64,
    best: &mut f64,
) {
    if i == f1.len() {
        let rest = f2
            .iter()
            .zip(used.iter())
            .filter(|(_, &u)| !u)
            .map(|(&b, _)| diagonal_gap(b))
            .fold(cost, f64::max);
        *best = best.min(rest);
        return;
    }
    partial_matchings(f1, f2, i + 1, used, cost.max(diagonal_gap(f1[i])), best);
    for j in 0..f2.len() {
        if !used[j] {
            used[j] = true;
            partial_matchings(f1, f2, i + 1, used, cost.max(linf(f1[i], f2[j])), best);
            used[j] = false;
        }
    }
}
