//! Compressed cover trees.
//!
//! Every point of the space is exactly one node. A node `p` carries an
//! integer level `l(p)`; the cover set `C_i` is the set of nodes with level
//! at least `i`. A built tree satisfies
//!
//! * covering: `l(p) < l(parent(p))` and `d(p, parent(p)) <= 2^(l(p)+1)`,
//! * separation: distinct nodes of `C_i` are more than `2^i` apart.
//!
//! Covering implies that every descendant of a child `c` lies strictly
//! within `2^(l(c)+2)` of that child's parent, which is the radius all the
//! search routines prune with.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{MetricSpace, DEFAULT_TOLERANCE};

/// Exact power of two for any level that fits a finite double.
#[inline]
pub fn pow2(i: i64) -> f64 {
    if i > 1023 {
        f64::INFINITY
    } else if i < -1074 {
        0.0
    } else if i >= -1022 {
        f64::from_bits(((i + 1023) as u64) << 52)
    } else {
        f64::from_bits(1u64 << (i + 1074))
    }
}

/// Smallest integer `i` with `d <= 2^i`. `d` must be positive and finite.
pub fn level_of(d: f64) -> i64 {
    debug_assert!(d > 0.0 && d.is_finite());
    let mut i = d.log2().ceil() as i64;
    while pow2(i) < d {
        i += 1;
    }
    while pow2(i - 1) >= d {
        i -= 1;
    }
    i
}

/// A compressed cover tree over a borrowed metric space.
#[derive(Clone, Debug)]
pub struct CoverTree<'a> {
    space: &'a MetricSpace,
    root: usize,
    level: Vec<i64>,
    parent: Vec<Option<usize>>,
    /// Children sorted by level descending, then id ascending.
    children: Vec<Vec<usize>>,
    /// `suffix[p][j]` is `1 + Σ subtree_size(children[p][j..])`.
    suffix: Vec<Vec<usize>>,
    subtree: Vec<usize>,
    l_max: i64,
    l_min: i64,
}

/// Outcome of [`CoverTree::verify`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TreeReport {
    pub covering_ok: bool,
    pub separation_ok: bool,
    pub partition_ok: bool,
}

impl TreeReport {
    pub fn all_ok(&self) -> bool {
        self.covering_ok && self.separation_ok && self.partition_ok
    }
}

/// Serializable form of a tree: one record per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeRecord {
    pub root: usize,
    pub nodes: Vec<NodeRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    pub level: i64,
    pub parent: Option<usize>,
    /// Children grouped by level, highest level first.
    pub children: Vec<(i64, Vec<usize>)>,
}

/// One frame of the insertion descent: candidate nodes with their distance
/// to the new point, standing for every level in `bottom..=top`.
struct Frame {
    top: i64,
    bottom: i64,
    cands: Vec<(usize, f64)>,
}

const UNSET_LEVEL: i64 = i64::MIN / 4;

impl<'a> CoverTree<'a> {
    /// Builds a tree by inserting points in input order.
    pub fn build(space: &'a MetricSpace) -> Result<Self> {
        let order: Vec<usize> = (0..space.len()).collect();
        Self::build_with_order(space, &order)
    }

    /// Builds a tree by inserting points in the given order, which must be
    /// a permutation of `0..n`.
    pub fn build_with_order(space: &'a MetricSpace, order: &[usize]) -> Result<Self> {
        let n = space.len();
        if n == 0 {
            return Err(Error::EmptyStructure(
                "cannot build a cover tree on zero points".into(),
            ));
        }
        check_permutation(order, n)?;
        space.check_symmetric(DEFAULT_TOLERANCE)?;
        let root = order[0];
        let mut tree = CoverTree {
            space,
            root,
            level: vec![UNSET_LEVEL; n],
            parent: vec![None; n],
            children: vec![Vec::new(); n],
            suffix: Vec::new(),
            subtree: Vec::new(),
            l_max: 0,
            l_min: 0,
        };
        for &p in &order[1..] {
            tree.insert(p)?;
        }
        if n == 1 {
            tree.level[root] = 0;
        }
        tree.finish();
        Ok(tree)
    }

    fn children_at(&self, p: usize, lvl: i64) -> &[usize] {
        let ch = &self.children[p];
        let lo = ch.partition_point(|&c| self.level[c] > lvl);
        let hi = ch.partition_point(|&c| self.level[c] >= lvl);
        &ch[lo..hi]
    }

    fn insert(&mut self, p: usize) -> Result<()> {
        let space = self.space;
        let root = self.root;
        let d_root = space.distance(p, root);
        if d_root == 0.0 {
            return Err(Error::DuplicatePoint(root.min(p), root.max(p)));
        }
        let start = self.level[root].max(level_of(d_root)) + 1;
        let mut stack = vec![Frame {
            top: start,
            bottom: start,
            cands: vec![(root, d_root)],
        }];
        loop {
            let frame = stack.last().expect("stack never empties during descent");
            let i = frame.bottom;
            let mut next = frame.cands.clone();
            let mut added = false;
            for &(q, _) in &frame.cands {
                for &c in self.children_at(q, i - 1) {
                    let d = space.distance(p, c);
                    if d == 0.0 {
                        return Err(Error::DuplicatePoint(c.min(p), c.max(p)));
                    }
                    next.push((c, d));
                    added = true;
                }
            }
            let r = pow2(i);
            let before = next.len();
            next.retain(|&(_, d)| d <= r);
            if next.is_empty() {
                break;
            }
            if !added && next.len() == before {
                // The frame below would hold the same candidates. Skip every
                // level until the next child level or the next level where
                // the distance filter bites.
                let d_max = next.iter().map(|&(_, d)| d).fold(0.0, f64::max);
                let child = next
                    .iter()
                    .filter_map(|&(q, _)| self.next_level(q, i - 1))
                    .max();
                let mut j = level_of(d_max) - 1;
                if let Some(c) = child {
                    j = j.max(c + 1);
                }
                let j = j.min(i - 1);
                stack.last_mut().expect("non-empty").bottom = j;
                continue;
            }
            stack.push(Frame {
                top: i - 1,
                bottom: i - 1,
                cands: next,
            });
        }
        // The bottom level of the deepest frame failed; attach below the
        // lowest remaining level that still has a candidate within range.
        let last = stack.last_mut().expect("non-empty");
        if last.top > last.bottom {
            last.bottom += 1;
        } else {
            stack.pop();
        }
        while let Some(frame) = stack.pop() {
            let (q, dq) = frame
                .cands
                .iter()
                .copied()
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .expect("frames are never empty");
            let k = frame.bottom.max(level_of(dq));
            if k <= frame.top {
                let lvl = k - 1;
                self.level[p] = lvl;
                self.parent[p] = Some(q);
                if q == root && lvl >= self.level[root] {
                    self.level[root] = lvl + 1;
                }
                let level = &self.level;
                let ch = &self.children[q];
                let pos = ch.partition_point(|&c| level[c] > lvl || (level[c] == lvl && c < p));
                self.children[q].insert(pos, p);
                return Ok(());
            }
        }
        unreachable!("the top frame always accepts the root")
    }

    fn finish(&mut self) {
        let n = self.level.len();
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![self.root];
        while let Some(p) = stack.pop() {
            order.push(p);
            stack.extend_from_slice(&self.children[p]);
        }
        let mut subtree = vec![1usize; n];
        for &p in order.iter().rev() {
            subtree[p] += self.children[p].iter().map(|&c| subtree[c]).sum::<usize>();
        }
        let suffix = (0..n)
            .map(|p| {
                let ch = &self.children[p];
                let mut s = vec![1usize; ch.len() + 1];
                for j in (0..ch.len()).rev() {
                    s[j] = s[j + 1] + subtree[ch[j]];
                }
                s
            })
            .collect();
        self.subtree = subtree;
        self.suffix = suffix;
        self.l_max = self.level[self.root];
        self.l_min = *self.level.iter().min().expect("non-empty");
    }

    pub fn space(&self) -> &'a MetricSpace {
        self.space
    }

    pub fn len(&self) -> usize {
        self.level.len()
    }

    pub fn is_empty(&self) -> bool {
        self.level.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn level(&self, p: usize) -> i64 {
        self.level[p]
    }

    pub fn parent(&self, p: usize) -> Option<usize> {
        self.parent[p]
    }

    /// Children of `p`, highest level first.
    pub fn children(&self, p: usize) -> &[usize] {
        &self.children[p]
    }

    pub fn l_max(&self) -> i64 {
        self.l_max
    }

    pub fn l_min(&self) -> i64 {
        self.l_min
    }

    /// Number of nodes in the subtree of `p`, including `p`.
    pub fn subtree_size(&self, p: usize) -> usize {
        self.subtree[p]
    }

    /// Largest level `j <= i` at which `p` has a child.
    pub fn next_level(&self, p: usize, i: i64) -> Option<i64> {
        let ch = &self.children[p];
        let idx = ch.partition_point(|&c| self.level[c] > i);
        ch.get(idx).map(|&c| self.level[c])
    }

    /// Index of the first child of `p` whose level is at most `i - 1`.
    fn distinct_start(&self, p: usize, i: i64) -> usize {
        self.children[p].partition_point(|&c| self.level[c] > i - 1)
    }

    /// `|S_i(p)|`: `p` plus the full subtrees of its children at level
    /// `i - 1` or below.
    pub fn distinctive_size(&self, p: usize, i: i64) -> usize {
        self.suffix[p][self.distinct_start(p, i)]
    }

    /// The distinctive descendant set `S_i(p)`.
    pub fn distinctive_descendants(&self, p: usize, i: i64) -> Vec<usize> {
        let mut out = vec![p];
        let start = self.distinct_start(p, i);
        for &c in &self.children[p][start..] {
            self.collect_subtree(c, &mut out);
        }
        out
    }

    /// All nodes of the subtree rooted at `p`, in depth-first order.
    pub fn subtree(&self, p: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.subtree[p]);
        self.collect_subtree(p, &mut out);
        out
    }

    pub(crate) fn collect_subtree(&self, p: usize, out: &mut Vec<usize>) {
        let mut stack = vec![p];
        while let Some(x) = stack.pop() {
            out.push(x);
            stack.extend(self.children[x].iter().rev());
        }
    }

    /// Essential levels of `p`: its own level and every level at which it
    /// has a child, ascending.
    pub fn essential_levels(&self, p: usize) -> Vec<i64> {
        let mut v: Vec<i64> = self.children[p].iter().map(|&c| self.level[c]).collect();
        v.push(self.level[p]);
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Distinct node levels, ascending. These are the only levels at which
    /// a top-down traversal changes its frontier.
    pub fn height_levels(&self) -> Vec<i64> {
        let mut v = self.level.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Exhaustive check of covering, separation and the one-node-per-point
    /// partition.
    pub fn verify(&self) -> TreeReport {
        let n = self.len();
        let space = self.space;
        let covering_ok = (0..n).all(|p| match self.parent[p] {
            None => p == self.root,
            Some(q) => {
                self.level[p] < self.level[q] && space.distance(p, q) <= pow2(self.level[p] + 1)
            }
        });
        // Two nodes share every cover set up to the lower of their levels,
        // where the separation radius is largest.
        let mut separation_ok = true;
        'outer: for p in 0..n {
            for q in p + 1..n {
                let lvl = self.level[p].min(self.level[q]);
                if space.distance(p, q) <= pow2(lvl) {
                    separation_ok = false;
                    break 'outer;
                }
            }
        }
        let mut partition_ok = self.parent[self.root].is_none()
            && (0..n).all(|p| self.level[p] <= self.level[self.root])
            && (0..n).filter(|&p| self.parent[p].is_none()).count() == 1;
        let mut seen = vec![false; n];
        let mut count = 0;
        let mut stack = vec![self.root];
        while let Some(p) = stack.pop() {
            if seen[p] {
                partition_ok = false;
                break;
            }
            seen[p] = true;
            count += 1;
            for &c in &self.children[p] {
                if self.parent[c] != Some(p) {
                    partition_ok = false;
                }
                stack.push(c);
            }
        }
        partition_ok &= count == n && self.subtree[self.root] == n;
        TreeReport {
            covering_ok,
            separation_ok,
            partition_ok,
        }
    }

    /// Overwrites the level of one node without restoring any invariant.
    /// Exists so that tests can build broken trees for the verifier.
    #[doc(hidden)]
    pub fn set_level_unchecked(&mut self, p: usize, level: i64) {
        self.level[p] = level;
    }

    pub fn to_record(&self) -> TreeRecord {
        let nodes = (0..self.len())
            .map(|p| {
                let mut groups: Vec<(i64, Vec<usize>)> = Vec::new();
                for &c in &self.children[p] {
                    match groups.last_mut() {
                        Some((l, v)) if *l == self.level[c] => v.push(c),
                        _ => groups.push((self.level[c], vec![c])),
                    }
                }
                NodeRecord {
                    id: p,
                    level: self.level[p],
                    parent: self.parent[p],
                    children: groups,
                }
            })
            .collect();
        TreeRecord {
            root: self.root,
            nodes,
        }
    }

    /// Rebuilds a tree from its record. The structure is validated with
    /// [`CoverTree::verify`].
    pub fn from_record(space: &'a MetricSpace, record: &TreeRecord) -> Result<Self> {
        let n = space.len();
        if record.nodes.len() != n || record.root >= n {
            return Err(Error::Parse("tree record does not match the space".into()));
        }
        let mut level = vec![0; n];
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut seen = vec![false; n];
        for node in &record.nodes {
            if node.id >= n || seen[node.id] {
                return Err(Error::Parse(format!("bad or repeated node id {}", node.id)));
            }
            seen[node.id] = true;
            level[node.id] = node.level;
            parent[node.id] = node.parent;
            children[node.id] = node
                .children
                .iter()
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
        }
        if children.iter().flatten().any(|&c| c >= n) || parent.iter().flatten().any(|&q| q >= n) {
            return Err(Error::Parse("tree record references unknown nodes".into()));
        }
        for ch in &mut children {
            ch.sort_by(|&a, &b| level[b].cmp(&level[a]).then(a.cmp(&b)));
        }
        let mut tree = CoverTree {
            space,
            root: record.root,
            level,
            parent,
            children,
            suffix: Vec::new(),
            subtree: Vec::new(),
            l_max: 0,
            l_min: 0,
        };
        // Guard the subtree pass against cycles before running it.
        let mut visited = vec![false; n];
        let mut stack = vec![tree.root];
        while let Some(p) = stack.pop() {
            if visited[p] {
                return Err(Error::Parse("tree record contains a cycle".into()));
            }
            visited[p] = true;
            stack.extend_from_slice(&tree.children[p]);
        }
        tree.finish();
        if !tree.verify().all_ok() {
            return Err(Error::Parse(
                "tree record violates the cover tree invariants".into(),
            ));
        }
        Ok(tree)
    }
}

fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(Error::InvalidArgument(format!(
            "insertion order has {} entries, expected {n}",
            order.len()
        )));
    }
    for &p in order {
        if p >= n || seen[p] {
            return Err(Error::InvalidArgument(
                "insertion order is not a permutation".into(),
            ));
        }
        seen[p] = true;
    }
    Ok(())
}
