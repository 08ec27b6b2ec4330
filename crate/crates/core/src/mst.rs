//! Minimum spanning trees of finite metric spaces.
//!
//! The main entry point is [`mst_singletree_boruvka`], a Borůvka loop whose
//! nearest-foreign-point queries run over a compressed cover tree. Each
//! round freezes the partition, precomputes the cluster-of-descendants
//! table with [`find_clusters`], runs [`boruvka_step`] for every cluster and
//! only then merges. [`mst_prim`] and [`boruvka_classic`] are plain oracles.

use serde::Serialize;

use crate::cover_tree::{pow2, CoverTree};
use crate::error::{invalid, Error, Result};
use crate::graph::{Edge, WeightedGraph};
use crate::metric::MetricSpace;

const PRUNE_SLACK: f64 = 1e-12;

/// Union-find over point ids with union by rank, path halving and
/// per-component member lists.
#[derive(Clone, Debug)]
pub struct PartitionForest {
    parent: Vec<usize>,
    rank: Vec<u8>,
    /// Circular linked list threading the members of each component.
    next: Vec<usize>,
    count: usize,
}

impl PartitionForest {
    /// `n` singleton components.
    pub fn new(n: usize) -> Self {
        PartitionForest {
            parent: (0..n).collect(),
            rank: vec![0; n],
            next: (0..n).collect(),
            count: n,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the components of `a` and `b`; false if already merged.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (hi, lo) = if self.rank[ra] >= self.rank[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[lo] = hi;
        if self.rank[hi] == self.rank[lo] {
            self.rank[hi] += 1;
        }
        self.next.swap(ra, rb);
        self.count -= 1;
        true
    }

    pub fn component_count(&self) -> usize {
        self.count
    }

    /// Members of the component containing `x`.
    pub fn members(&self, x: usize) -> Vec<usize> {
        let mut out = vec![x];
        let mut y = self.next[x];
        while y != x {
            out.push(y);
            y = self.next[y];
        }
        out
    }

    /// Component representative of every point.
    pub fn labels(&mut self) -> Vec<usize> {
        (0..self.len()).map(|x| self.find(x)).collect()
    }

    /// Components with sorted members, ordered by smallest member.
    pub fn components(&mut self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut done = vec![false; self.len()];
        for x in 0..self.len() {
            let r = self.find(x);
            if !done[r] {
                done[r] = true;
                let mut m = self.members(x);
                m.sort_unstable();
                out.push(m);
            }
        }
        out
    }
}

/// A spanning tree given by its edges.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpanningTree {
    pub edges: Vec<Edge>,
    pub total_weight: f64,
}

impl SpanningTree {
    pub fn from_edges(edges: Vec<Edge>) -> Self {
        let total_weight = edges.iter().map(|e| e.length).sum();
        SpanningTree {
            edges,
            total_weight,
        }
    }

    /// Checks `n - 1` edges, no cycle and full connectivity.
    pub fn is_spanning_tree(&self, n: usize) -> bool {
        if n == 0 {
            return self.edges.is_empty();
        }
        if self.edges.len() != n - 1 {
            return false;
        }
        let mut f = PartitionForest::new(n);
        self.edges
            .iter()
            .all(|e| e.a < n && e.b < n && f.union(e.a, e.b))
    }

    /// Edge lengths in ascending order.
    pub fn sorted_lengths(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.edges.iter().map(|e| e.length).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Edge endpoint pairs, normalized and sorted.
    pub fn sorted_keys(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = self.edges.iter().map(Edge::key).collect();
        v.sort_unstable();
        v
    }
}

/// `τ` entry: either every point of `S_i(p)` shares `p`'s cluster, or a
/// witness point of `S_i(p)` from another cluster.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tau {
    Cluster(usize),
    Witness(usize),
}

/// Cluster-of-descendants table for a frozen partition.
#[derive(Clone, Debug)]
pub struct TauTable {
    /// Per node: `states[0]` covers `{p}`, `states[m]` adds the children in
    /// the first `m` distinct child levels counted from the bottom.
    levels: Vec<Vec<i64>>,
    states: Vec<Vec<Tau>>,
    visits: usize,
}

impl TauTable {
    /// `τ_i(p)` for the distinctive set `S_i(p)`.
    pub fn get(&self, p: usize, i: i64) -> Tau {
        let m = self.levels[p].partition_point(|&l| l < i);
        self.states[p][m]
    }

    /// Number of node visits the traversal made.
    pub fn visits(&self) -> usize {
        self.visits
    }
}

/// One depth-first pass computing `τ_i(p)` for every node and every level
/// at which `S_i(p)` changes. `labels[x]` is the cluster of point `x`.
pub fn find_clusters(tree: &CoverTree<'_>, labels: &[usize]) -> TauTable {
    let n = tree.len();
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![tree.root()];
    while let Some(p) = stack.pop() {
        order.push(p);
        stack.extend_from_slice(tree.children(p));
    }
    let mut levels = vec![Vec::new(); n];
    let mut states = vec![Vec::new(); n];
    for &p in order.iter().rev() {
        let own = labels[p];
        let mut acc = Tau::Cluster(own);
        let mut lv = Vec::new();
        let mut st = vec![acc];
        // Children are stored highest level first; fold from the bottom.
        let ch = tree.children(p);
        let mut j = ch.len();
        while j > 0 {
            let lvl = tree.level(ch[j - 1]);
            while j > 0 && tree.level(ch[j - 1]) == lvl {
                let c = ch[j - 1];
                let full = *states[c].last().expect("children are finished first");
                if let Tau::Cluster(_) = acc {
                    acc = match full {
                        Tau::Cluster(b) if b == own => acc,
                        Tau::Cluster(_) => Tau::Witness(c),
                        Tau::Witness(_) if labels[c] != own => Tau::Witness(c),
                        Tau::Witness(w) => Tau::Witness(w),
                    };
                }
                j -= 1;
            }
            lv.push(lvl);
            st.push(acc);
        }
        levels[p] = lv;
        states[p] = st;
    }
    TauTable {
        levels,
        states,
        visits: order.len(),
    }
}

/// A proposed merge edge for one cluster.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepResult {
    pub q: usize,
    pub p: usize,
    pub distance: f64,
}

/// Finds the closest pair `(q, p)` with `q` in cluster `u` and `p` outside
/// it. `members` lists the points of `u`; `labels` and `tau` describe the
/// frozen partition. Ties go to the lexicographically smallest `(q, p)`.
pub fn boruvka_step(
    tree: &CoverTree<'_>,
    tau: &TauTable,
    labels: &[usize],
    u: usize,
    members: &[usize],
) -> Result<StepResult> {
    if members.len() == tree.len() {
        return Err(Error::InvalidState("only one cluster left".into()));
    }
    if members.is_empty() {
        return invalid("cluster has no members");
    }
    let space = tree.space();
    let to_u = |x: usize| -> f64 {
        members
            .iter()
            .map(|&q| space.distance(q, x))
            .fold(f64::INFINITY, f64::min)
    };
    let root = tree.root();
    let mut frontier = vec![(root, to_u(root))];
    let mut i = tree.level(root);
    let mut next = Vec::new();
    while let Some(c) = frontier
        .iter()
        .filter_map(|&(r, _)| tree.next_level(r, i - 1))
        .max()
    {
        next.clear();
        for &(r, d) in &frontier {
            next.push((r, d));
            for &ch in tree.children(r) {
                if tree.level(ch) == c {
                    next.push((ch, to_u(ch)));
                }
            }
        }
        // Nodes whose distinctive set lies wholly inside u cannot help.
        next.retain(|&(x, _)| tau.get(x, c) != Tau::Cluster(u));
        let rho = pow2(c + 1);
        let mut best = f64::INFINITY;
        for &(x, d) in &next {
            let bound = if labels[x] == u { d + rho } else { d };
            best = best.min(bound);
        }
        let limit = (best + rho) * (1.0 + PRUNE_SLACK);
        frontier.clear();
        frontier.extend(next.iter().copied().filter(|&(_, d)| d <= limit));
        i = c;
    }
    let mut out: Option<StepResult> = None;
    for &(p, _) in &frontier {
        if labels[p] == u {
            continue;
        }
        for &q in members {
            let d = space.distance(q, p);
            let better = match out {
                None => true,
                Some(o) => d < o.distance || (d == o.distance && (q, p) < (o.q, o.p)),
            };
            if better {
                out = Some(StepResult { q, p, distance: d });
            }
        }
    }
    out.ok_or_else(|| Error::Invariant("Boruvka step found no foreign point".into()))
}

/// Options for [`mst_singletree_boruvka_with`].
#[derive(Clone, Copy, Debug, Default)]
pub struct MstOptions {
    /// Brute-force check that every proposed edge is a shortest edge out of
    /// its cluster.
    pub check: bool,
    /// Record the partition after every round.
    pub trace: bool,
}

/// Clusters of a partition, each a list of point ids.
pub type Partition = Vec<Vec<usize>>;

/// Result of a Borůvka run.
#[derive(Clone, Debug)]
pub struct MstOutcome {
    pub tree: SpanningTree,
    pub rounds: usize,
    /// Partitions `F_0, F_1, ...` when tracing was requested.
    pub trace: Vec<Partition>,
}

/// Minimum spanning tree by single-tree Borůvka.
pub fn mst_singletree_boruvka(tree: &CoverTree<'_>) -> Result<MstOutcome> {
    mst_singletree_boruvka_with(tree, MstOptions::default())
}

pub fn mst_singletree_boruvka_with(tree: &CoverTree<'_>, opts: MstOptions) -> Result<MstOutcome> {
    let mut forest = PartitionForest::new(tree.len());
    let (edges, rounds, trace) = boruvka_rounds(tree, &mut forest, opts)?;
    Ok(MstOutcome {
        tree: SpanningTree::from_edges(edges),
        rounds,
        trace,
    })
}

/// Runs Borůvka rounds from an arbitrary starting partition until one
/// component remains. Returns the added edges, which join the starting
/// components with minimum total length.
pub fn boruvka_rounds(
    tree: &CoverTree<'_>,
    forest: &mut PartitionForest,
    opts: MstOptions,
) -> Result<(Vec<Edge>, usize, Vec<Partition>)> {
    if forest.len() != tree.len() {
        return invalid("partition and tree sizes differ");
    }
    let mut edges = Vec::new();
    let mut trace = Vec::new();
    if opts.trace {
        trace.push(forest.components());
    }
    let mut rounds = 0;
    while forest.component_count() > 1 {
        rounds += 1;
        let labels = forest.labels();
        let tau = find_clusters(tree, &labels);
        let comps = forest.components();
        let mut proposals = Vec::with_capacity(comps.len());
        for members in &comps {
            let u = labels[members[0]];
            let s = boruvka_step(tree, &tau, &labels, u, members)?;
            if opts.check {
                check_cut(tree.space(), &labels, u, members, &s)?;
            }
            proposals.push(s);
        }
        let before = forest.component_count();
        for s in proposals {
            if forest.union(s.q, s.p) {
                edges.push(Edge::new(s.q.min(s.p), s.q.max(s.p), s.distance));
            }
        }
        if forest.component_count() > before.div_ceil(2) {
            return Err(Error::Invariant(format!(
                "round {rounds} left {} of {before} components",
                forest.component_count()
            )));
        }
        if opts.trace {
            trace.push(forest.components());
        }
    }
    Ok((edges, rounds, trace))
}

fn check_cut(
    space: &MetricSpace,
    labels: &[usize],
    u: usize,
    members: &[usize],
    s: &StepResult,
) -> Result<()> {
    let mut best = f64::INFINITY;
    for &q in members {
        for p in 0..space.len() {
            if labels[p] != u {
                best = best.min(space.distance(q, p));
            }
        }
    }
    if s.distance != best || labels[s.q] != u || labels[s.p] == u {
        return Err(Error::Invariant(format!(
            "step for cluster {u} returned {} but the shortest cut edge is {best}",
            s.distance
        )));
    }
    Ok(())
}

/// Borůvka clustering `F_0, F_1, ...` of a space, ending with one cluster.
pub fn boruvka_clustering_trace(space: &MetricSpace) -> Result<Vec<Partition>> {
    let tree = CoverTree::build(space)?;
    Ok(mst_singletree_boruvka_with(
        &tree,
        MstOptions {
            check: false,
            trace: true,
        },
    )?
    .trace)
}

/// Quadratic Prim over the complete graph of a space. Ties go to the lower
/// id.
pub fn mst_prim(space: &MetricSpace) -> SpanningTree {
    let n = space.len();
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    if n == 0 {
        return SpanningTree::from_edges(edges);
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut cur = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let d = space.distance(cur, v);
            if d < best[v] {
                best[v] = d;
                from[v] = cur;
            }
            if next == usize::MAX || best[v] < best[next] {
                next = v;
            }
        }
        in_tree[next] = true;
        edges.push(Edge::new(
            from[next].min(next),
            from[next].max(next),
            best[next],
        ));
        cur = next;
    }
    SpanningTree::from_edges(edges)
}

/// Classical Borůvka on an explicit graph. Ties are broken by edge order,
/// so the result is deterministic; a disconnected graph is an error.
pub fn boruvka_classic(graph: &WeightedGraph) -> Result<SpanningTree> {
    let n = graph.vertex_count();
    let edges = graph.edges();
    let mut forest = PartitionForest::new(n);
    let mut out = Vec::new();
    while forest.component_count() > 1 {
        let mut cheapest: Vec<Option<usize>> = vec![None; n];
        for (idx, e) in edges.iter().enumerate() {
            let (ra, rb) = (forest.find(e.a), forest.find(e.b));
            if ra == rb {
                continue;
            }
            for r in [ra, rb] {
                let better = match cheapest[r] {
                    None => true,
                    Some(j) => e.length < edges[j].length,
                };
                if better {
                    cheapest[r] = Some(idx);
                }
            }
        }
        let mut merged = false;
        for idx in cheapest.into_iter().flatten() {
            let e = edges[idx];
            if forest.union(e.a, e.b) {
                out.push(e);
                merged = true;
            }
        }
        if !merged {
            return Err(Error::Disconnected(format!(
                "{} components remain",
                forest.component_count()
            )));
        }
    }
    Ok(SpanningTree::from_edges(out))
}

/// `17 + 8 * max / min` over the edge lengths of a spanning tree.
pub fn rho_of(tree: &SpanningTree) -> Result<f64> {
    if tree.edges.is_empty() {
        return invalid("rho needs at least two points");
    }
    let lens = tree.sorted_lengths();
    Ok(17.0 + 8.0 * lens[lens.len() - 1] / lens[0])
}

/// `ρ` of a space, computed from its minimum spanning tree.
pub fn rho(space: &MetricSpace) -> Result<f64> {
    if space.len() < 2 {
        return invalid("rho needs at least two points");
    }
    let tree = CoverTree::build(space)?;
    rho_of(&mst_singletree_boruvka(&tree)?.tree)
}
