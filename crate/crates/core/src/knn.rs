//! Exact and approximate k-nearest-neighbor search on a compressed cover tree.
//!
//! The search walks the tree top-down. At every step each frontier node
//! `r` stands for its distinctive descendants, all of which lie strictly
//! within a radius `rho` of `r`. The frontier is sorted by distance, the
//! bound `d_k` is read off [`lambda_k`], and nodes farther than
//! `d_k + 2 * rho` are dropped: none of their descendants can beat the
//! `k` points already known to lie within `d_k + rho`.

use serde::Serialize;

use crate::cover_tree::{pow2, CoverTree};
use crate::error::{invalid, Error, Result};
use crate::metric::{MetricSpace, Query};

/// Relative slack added to every pruning radius so that rounding in the
/// triangle inequality can never drop a true neighbor.
const PRUNE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Neighbor {
    pub id: usize,
    pub distance: f64,
}

/// Neighbors sorted by distance, ties by id.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KnnResult {
    pub neighbors: Vec<Neighbor>,
}

impl KnnResult {
    pub fn distances(&self) -> Vec<f64> {
        self.neighbors.iter().map(|n| n.distance).collect()
    }

    pub fn ids(&self) -> Vec<usize> {
        self.neighbors.iter().map(|n| n.id).collect()
    }
}

/// A frontier node with its distance to the query and the number of points
/// it stands for.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate {
    pub node: usize,
    pub distance: f64,
    pub size: usize,
}

/// Index into `sorted` (ascending by distance) of the node whose distance
/// bounds the `k`-th nearest neighbor: the first position where the running
/// total of sizes reaches `k`, or the last node when the total stays below
/// `k`.
pub fn lambda_k(sorted: &[Candidate], k: usize) -> Result<usize> {
    if sorted.is_empty() {
        return invalid("lambda_k needs at least one candidate");
    }
    let mut total = 0;
    for (i, c) in sorted.iter().enumerate() {
        total += c.size;
        if total >= k {
            return Ok(i);
        }
    }
    Ok(sorted.len() - 1)
}

fn check_args(space: &MetricSpace, q: Query<'_>, k: usize) -> Result<()> {
    if k < 1 {
        return invalid("k must be at least 1");
    }
    if space.is_empty() {
        return Err(Error::EmptyStructure("no reference points".into()));
    }
    space.check_query(q)
}

fn finish(mut v: Vec<Neighbor>, k: usize) -> KnnResult {
    v.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id)));
    v.truncate(k);
    KnnResult { neighbors: v }
}

/// Full scan. Ties are resolved towards lower ids.
pub fn knn_bruteforce(space: &MetricSpace, q: Query<'_>, k: usize) -> Result<KnnResult> {
    check_args(space, q, k)?;
    let all = (0..space.len())
        .map(|id| Neighbor {
            id,
            distance: space.query_distance(q, id),
        })
        .collect();
    Ok(finish(all, k))
}

/// Exact k nearest neighbors. The distance multiset always equals
/// [`knn_bruteforce`], and so do the ids because both break ties by id.
pub fn knn_exact(tree: &CoverTree<'_>, q: Query<'_>, k: usize) -> Result<KnnResult> {
    check_args(tree.space(), q, k)?;
    search(tree, q, k, None, None)
}

/// Exact search that re-checks, at every level, that the true neighbors
/// are still descendants of the frontier. Slow; meant for assertion mode.
pub fn knn_exact_checked(tree: &CoverTree<'_>, q: Query<'_>, k: usize) -> Result<KnnResult> {
    check_args(tree.space(), q, k)?;
    let truth = knn_bruteforce(tree.space(), q, k)?;
    let kth = truth.neighbors.last().map_or(0.0, |n| n.distance);
    let space = tree.space();
    let must: Vec<usize> = (0..space.len())
        .filter(|&p| space.query_distance(q, p) <= kth)
        .collect();
    search(tree, q, k, None, Some(&must))
}

/// Approximate search: every returned distance is at most `(1 + epsilon)`
/// times the true distance of the same rank.
pub fn knn_approx(tree: &CoverTree<'_>, q: Query<'_>, k: usize, epsilon: f64) -> Result<KnnResult> {
    check_args(tree.space(), q, k)?;
    if !(epsilon > 0.0) {
        return invalid("epsilon must be positive");
    }
    search(tree, q, k, Some(epsilon), None)
}

fn search(
    tree: &CoverTree<'_>,
    q: Query<'_>,
    k: usize,
    epsilon: Option<f64>,
    must: Option<&[usize]>,
) -> Result<KnnResult> {
    let space = tree.space();
    let root = tree.root();
    // Frontier nodes with their distances; each stands for S_i(node).
    let mut frontier = vec![(root, space.query_distance(q, root))];
    let mut i = tree.level(root);
    let mut cands: Vec<Candidate> = Vec::new();
    while let Some(c) = frontier
        .iter()
        .filter_map(|&(r, _)| tree.next_level(r, i - 1))
        .max()
    {
        // Step down to the next level that changes anything: frontier nodes
        // now stand for S_c, and children at level c join the frontier.
        cands.clear();
        for &(r, d) in &frontier {
            cands.push(Candidate {
                node: r,
                distance: d,
                size: tree.distinctive_size(r, c),
            });
            for &ch in tree.children(r) {
                if tree.level(ch) == c {
                    cands.push(Candidate {
                        node: ch,
                        distance: space.query_distance(q, ch),
                        size: tree.distinctive_size(ch, c),
                    });
                }
            }
        }
        cands.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.node.cmp(&b.node)));
        let d_k = cands[lambda_k(&cands, k)?].distance;
        // Every member of S_c(x) is strictly within 2^(c+1) of x.
        let rho = pow2(c + 1);
        let bound = (d_k + 2.0 * rho) * (1.0 + PRUNE_SLACK);
        frontier.clear();
        frontier.extend(
            cands
                .iter()
                .filter(|x| x.distance <= bound)
                .map(|x| (x.node, x.distance)),
        );
        i = c;
        if let Some(must) = must {
            check_containment(tree, &frontier, i, must)?;
        }
        if let Some(eps) = epsilon {
            let nearest = frontier
                .iter()
                .map(|&(_, d)| d)
                .fold(f64::INFINITY, f64::min);
            let lower = nearest - rho;
            if lower > 0.0 && 2.0 * rho <= eps * lower {
                return Ok(approx_answer(tree, q, k, &frontier, i));
            }
        }
    }
    let out = frontier
        .into_iter()
        .map(|(id, distance)| Neighbor { id, distance })
        .collect();
    Ok(finish(out, k))
}

/// Pulls points out of the frontier in order of node distance until `k`
/// are collected, then keeps the `k` closest. Any rank-`j` answer is then
/// within `2 * rho` of the true rank-`j` distance.
fn approx_answer(
    tree: &CoverTree<'_>,
    q: Query<'_>,
    k: usize,
    frontier: &[(usize, f64)],
    i: i64,
) -> KnnResult {
    let space = tree.space();
    let mut order = frontier.to_vec();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut out = Vec::new();
    for (r, d) in order {
        if out.len() >= k {
            break;
        }
        out.push(Neighbor { id: r, distance: d });
        for p in tree.distinctive_descendants(r, i).into_iter().skip(1) {
            out.push(Neighbor {
                id: p,
                distance: space.query_distance(q, p),
            });
        }
    }
    finish(out, k)
}

fn check_containment(
    tree: &CoverTree<'_>,
    frontier: &[(usize, f64)],
    i: i64,
    must: &[usize],
) -> Result<()> {
    let mut covered = vec![false; tree.len()];
    for &(r, _) in frontier {
        for p in tree.distinctive_descendants(r, i) {
            covered[p] = true;
        }
    }
    match must.iter().find(|&&p| !covered[p]) {
        Some(p) => Err(Error::Invariant(format!(
            "true neighbor {p} was pruned at level {i}"
        ))),
        None => Ok(()),
    }
}

/// Runs independent queries on up to `threads` workers. Output order
/// follows input order.
pub fn knn_batch(
    tree: &CoverTree<'_>,
    queries: &[Query<'_>],
    k: usize,
    epsilon: Option<f64>,
    threads: usize,
) -> Result<Vec<KnnResult>> {
    let run = |q: Query<'_>| match epsilon {
        Some(e) => knn_approx(tree, q, k, e),
        None => knn_exact(tree, q, k),
    };
    parallel_map(queries, threads, run)
}

/// Maps `f` over `items` on up to `threads` scoped workers, keeping order.
pub(crate) fn parallel_map<T: Sync + Copy, U: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(T) -> Result<U> + Sync,
) -> Result<Vec<U>> {
    let threads = threads.max(1).min(items.len().max(1));
    if threads == 1 {
        return items.iter().map(|&x| f(x)).collect();
    }
    let chunk = items.len().div_ceil(threads);
    let f = &f;
    let parts: Vec<Result<Vec<U>>> = std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|&x| f(x)).collect::<Result<Vec<U>>>()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(items.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(values: &[f64]) -> MetricSpace {
        MetricSpace::from_points(&values.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap()
    }

    fn cand(size: usize, distance: f64) -> Candidate {
        Candidate {
            node: 0,
            distance,
            size,
        }
    }

    #[test]
    fn lambda_examples() {
        let sorted = [cand(1, 0.0), cand(2, 1.0), cand(3, 2.0)];
        assert_eq!(lambda_k(&sorted, 3).unwrap(), 1);
        assert_eq!(lambda_k(&sorted, 10).unwrap(), 2);
        assert_eq!(lambda_k(&[cand(5, 0.0), cand(1, 1.0)], 1).unwrap(), 0);
        assert!(lambda_k(&[], 1).is_err());
    }

    #[test]
    fn line_queries() {
        let x = line(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let t = CoverTree::build(&x).unwrap();
        let r = knn_exact(&t, Query::Point(&[3.5]), 2).unwrap();
        assert_eq!(r.distances(), vec![0.5, 0.5]);
        assert_eq!(r.ids(), vec![2, 3]);
        let b = knn_bruteforce(&x, Query::Point(&[0.0]), 1).unwrap();
        assert_eq!((b.ids(), b.distances()), (vec![0], vec![1.0]));
        let own = knn_exact(&t, Query::Id(3), 1).unwrap();
        assert_eq!((own.ids(), own.distances()), (vec![3], vec![0.0]));
        let all = knn_exact(&t, Query::Point(&[0.0]), 5).unwrap();
        assert_eq!(all.ids(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn argument_errors() {
        let x = line(&[1.0, 2.0]);
        let t = CoverTree::build(&x).unwrap();
        assert!(knn_exact(&t, Query::Id(0), 0).is_err());
        assert!(knn_approx(&t, Query::Id(0), 1, 0.0).is_err());
    }

    #[test]
    fn approx_on_reference_point_is_exact() {
        let x = line(&[0.0, 1.0, 3.0, 7.0, 15.0, 31.0]);
        let t = CoverTree::build(&x).unwrap();
        for eps in [0.1, 1.0, 10.0] {
            let r = knn_approx(&t, Query::Id(4), 1, eps).unwrap();
            assert_eq!(r.distances(), vec![0.0]);
        }
    }

    #[test]
    fn batch_matches_sequential() {
        let pts: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i * 7 % 13) as f64, (i / 3) as f64 * 0.5])
            .collect();
        let x = MetricSpace::from_points(&pts).unwrap();
        let t = CoverTree::build(&x).unwrap();
        let qs: Vec<Query> = (0..40).map(Query::Id).collect();
        let par = knn_batch(&t, &qs, 3, None, 4).unwrap();
        let seq = knn_batch(&t, &qs, 3, None, 1).unwrap();
        assert_eq!(par, seq);
    }
}
