//! Kernel density estimation with a sigmoid kernel.

use serde::Serialize;

use crate::cover_tree::{pow2, CoverTree};
use crate::error::{invalid, Result};
use crate::knn::parallel_map;
use crate::metric::{MetricSpace, Query};

const EXP_CLAMP: f64 = 700.0;

/// `K(x) = 1 / (1 + exp(p·x + q))`, fitted so that `K(r - t/2) = 0.99` and
/// `K(r + t/2) = 0.01`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SigmoidKernel {
    pub r: f64,
    pub t: f64,
    pub p: f64,
    pub q: f64,
}

impl SigmoidKernel {
    pub fn eval(&self, x: f64) -> f64 {
        let z = (self.p * x + self.q).clamp(-EXP_CLAMP, EXP_CLAMP);
        1.0 / (1.0 + z.exp())
    }
}

/// Closed-form fit: `p = 2 ln 99 / t`, `q = -p·r`.
pub fn fit_sigmoid(r: f64, t: f64) -> Result<SigmoidKernel> {
    if !(r > 0.0 && r.is_finite() && t > 0.0 && t.is_finite()) {
        return invalid(format!("need r > 0 and t > 0, got r = {r}, t = {t}"));
    }
    let p = 2.0 * 99f64.ln() / t;
    Ok(SigmoidKernel { r, t, p, q: -p * r })
}

/// Density `f(q) = Σ K(d(q, x))` over every reference point `x`.
pub fn kde_exact(
    kernel: &SigmoidKernel,
    space: &MetricSpace,
    queries: &[Query<'_>],
) -> Result<Vec<f64>> {
    if space.is_empty() {
        return invalid("no reference points");
    }
    queries
        .iter()
        .map(|&q| {
            space.check_query(q)?;
            Ok((0..space.len())
                .map(|x| kernel.eval(space.query_distance(q, x)))
                .sum())
        })
        .collect()
}

/// Tree-pruned density. A subtree rooted at `p` lies within
/// `2^(l(p)+1)` of `p`; when the kernel varies by less than `epsilon` over
/// that shell, the whole subtree is charged at the shell's midpoint. Every
/// reference point is then off by less than `epsilon`, so each estimate is
/// within `epsilon · n` of the exact value.
pub fn kde_approx(
    kernel: &SigmoidKernel,
    tree: &CoverTree<'_>,
    queries: &[Query<'_>],
    epsilon: f64,
    threads: usize,
) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) {
        return invalid("epsilon must be positive");
    }
    if tree.is_empty() {
        return invalid("no reference points");
    }
    for &q in queries {
        tree.space().check_query(q)?;
    }
    parallel_map(queries, threads, |q| Ok(kde_one(kernel, tree, q, epsilon)))
}

fn kde_one(kernel: &SigmoidKernel, tree: &CoverTree<'_>, q: Query<'_>, epsilon: f64) -> f64 {
    let space = tree.space();
    let mut total = 0.0;
    let mut stack = vec![tree.root()];
    while let Some(p) = stack.pop() {
        let d = space.query_distance(q, p);
        let children = tree.children(p);
        if children.is_empty() {
            total += kernel.eval(d);
            continue;
        }
        let rad = pow2(tree.level(p) + 1);
        let (lo, hi) = ((d - rad).max(0.0), d + rad);
        if kernel.eval(lo) - kernel.eval(hi) < epsilon {
            total += tree.subtree_size(p) as f64 * kernel.eval((lo + hi) / 2.0);
        } else {
            total += kernel.eval(d);
            stack.extend_from_slice(children);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_boundaries() {
        let k = fit_sigmoid(0.15, 0.025).unwrap();
        assert!((k.eval(0.15) - 0.5).abs() < 1e-15);
        assert!((k.eval(0.1625) - 0.01).abs() < 1e-12);
        assert!((k.eval(0.1375) - 0.99).abs() < 1e-12);
        assert!(k.eval(1e9) >= 0.0 && k.eval(-1e9) <= 1.0);
        assert!(fit_sigmoid(0.0, 1.0).is_err());
        assert!(fit_sigmoid(1.0, -1.0).is_err());
    }

    #[test]
    fn single_point() {
        let k = fit_sigmoid(0.15, 0.025).unwrap();
        let x = MetricSpace::from_points(&[vec![0.0, 0.0]]).unwrap();
        let f = kde_exact(&k, &x, &[Query::Id(0)]).unwrap();
        assert!((f[0] - k.eval(0.0)).abs() < 1e-10);
        assert!(f[0] > 0.99);
        let far = kde_exact(&k, &x, &[Query::Point(&[5.0, 0.0])]).unwrap();
        assert!(far[0] < 0.01);
        let t = CoverTree::build(&x).unwrap();
        assert_eq!(kde_approx(&k, &t, &[Query::Id(0)], 0.1, 1).unwrap(), f);
    }

    #[test]
    fn approx_bound_on_a_grid() {
        let pts: Vec<Vec<f64>> = (0..400)
            .map(|i| vec![(i % 20) as f64 * 0.05, (i / 20) as f64 * 0.05])
            .collect();
        let x = MetricSpace::from_points(&pts).unwrap();
        let t = CoverTree::build(&x).unwrap();
        let k = fit_sigmoid(0.15, 0.025).unwrap();
        let qs: Vec<Query<'_>> = (0..400).step_by(7).map(Query::Id).collect();
        let exact = kde_exact(&k, &x, &qs).unwrap();
        for eps in [1.0, 0.1, 0.01, 1e-12] {
            let approx = kde_approx(&k, &t, &qs, eps, 2).unwrap();
            for (a, e) in approx.iter().zip(&exact) {
                assert!((a - e).abs() <= eps * 400.0, "eps {eps}: {a} vs {e}");
                if eps == 1e-12 {
                    assert!((a - e).abs() <= 1e-9);
                }
            }
        }
    }
}
