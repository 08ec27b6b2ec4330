mod common;

use common::{dedup, random_graph_metric, same_multiset};
use metric_forest::mergegram::*;
use metric_forest::metric::MetricSpace;
use metric_forest::mst::mst_prim;
use proptest::prelude::*;

fn cloud(max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 2), 1..max_n).prop_map(dedup)
}

fn diagram(max_n: usize) -> impl Strategy<Value = Diagram> {
    (
        prop::collection::vec((0.0..5.0f64, 0.0..5.0f64), 0..max_n),
        prop::collection::vec(0.0..5.0f64, 0..3),
    )
        .prop_map(|(fin, inf)| {
            let mut pairs: Vec<(f64, f64)> = fin.into_iter().map(|(b, l)| (b, b + l)).collect();
            pairs.extend(inf.into_iter().map(|b| (b, f64::INFINITY)));
            Diagram::new(pairs).unwrap()
        })
}

/// Diagram strategy with a fixed number of infinite pairs so distances stay
/// finite.
fn diagram_k(max_n: usize, inf: usize) -> impl Strategy<Value = Diagram> {
    (
        prop::collection::vec((0.0..5.0f64, 0.0..5.0f64), 0..max_n),
        prop::collection::vec(0.0..5.0f64, inf),
    )
        .prop_map(|(fin, inf)| {
            let mut pairs: Vec<(f64, f64)> = fin.into_iter().map(|(b, l)| (b, b + l)).collect();
            pairs.extend(inf.into_iter().map(|b| (b, f64::INFINITY)));
            Diagram::new(pairs).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dendrogram_shape(pts in cloud(80)) {
        let x = MetricSpace::from_points(&pts).unwrap();
        let dg = Dendrogram::of_space(&x).unwrap();
        let n = x.len();
        prop_assert!(dg.clusters.len() >= n && dg.clusters.len() < 2 * n);
        prop_assert_eq!(dg.clusters.iter().filter(|c| c.death.is_infinite()).count(), 1);
        for c in &dg.clusters[..n] {
            prop_assert_eq!(c.birth, 0.0);
        }
        for m in &dg.merges {
            prop_assert!(m.inputs.len() >= 2);
            let out = &dg.clusters[m.output];
            prop_assert_eq!(out.birth, m.scale);
            let mut joined: Vec<usize> = m.inputs.iter().flat_map(|&i| dg.clusters[i].members.clone()).collect();
            joined.sort_unstable();
            prop_assert_eq!(&joined, &out.members);
            for &i in &m.inputs {
                prop_assert_eq!(dg.clusters[i].death, m.scale);
            }
        }
        let mg = mergegram(&dg);
        prop_assert_eq!(mg.len(), dg.clusters.len());
    }

    #[test]
    fn pd0_is_mst_lengths(pts in cloud(120)) {
        let x = MetricSpace::from_points(&pts).unwrap();
        let d = pd0(&x).unwrap();
        let mut want: Vec<f64> = mst_prim(&x).sorted_lengths();
        want.push(f64::INFINITY);
        let got: Vec<f64> = d.pairs().iter().map(|p| p.1).collect();
        prop_assert!(same_multiset(&got, &want));
        prop_assert!(d.pairs().iter().all(|p| p.0 == 0.0));
    }

    #[test]
    fn pd0_recovered_from_mergegram(pts in cloud(120)) {
        let x = MetricSpace::from_points(&pts).unwrap();
        let mg = mergegram(&Dendrogram::of_space(&x).unwrap());
        prop_assert_eq!(pd0_from_mergegram(&mg).unwrap(), pd0(&x).unwrap());
    }

    #[test]
    fn pd0_recovered_on_tied_matrices(n in 1usize..40, seed in any::<u64>()) {
        let x = random_graph_metric(n, seed);
        let mg = mergegram(&Dendrogram::of_space(&x).unwrap());
        prop_assert_eq!(pd0_from_mergegram(&mg).unwrap(), pd0(&x).unwrap());
    }

    #[test]
    fn ultrametric_is_dominated(pts in cloud(40)) {
        let x = MetricSpace::from_points(&pts).unwrap();
        let u = Dendrogram::of_space(&x).unwrap().ultrametric().unwrap();
        let n = x.len();
        for a in 0..n {
            for b in 0..n {
                prop_assert!(u.distance(a, b) <= x.distance(a, b));
                for c in 0..n {
                    prop_assert!(u.distance(a, c) <= u.distance(a, b).max(u.distance(b, c)));
                }
            }
        }
    }

    #[test]
    fn bottleneck_is_a_pseudometric(a in diagram_k(6, 1), b in diagram_k(6, 1), c in diagram_k(6, 1)) {
        prop_assert_eq!(bottleneck(&a, &a), 0.0);
        prop_assert_eq!(bottleneck(&a, &b), bottleneck(&b, &a));
        prop_assert!(bottleneck(&a, &c) <= bottleneck(&a, &b) + bottleneck(&b, &c) + 1e-12);
    }

    #[test]
    fn bottleneck_matches_exhaustive(a in diagram(5), b in diagram(5)) {
        let want = bottleneck_exhaustive(&a, &b).unwrap();
        prop_assert_eq!(bottleneck(&a, &b), want);
    }

    #[test]
    fn mergegram_is_stable_under_perturbation(pts in cloud(30), eta in 0.0..0.05f64, seed in any::<u64>()) {
        use metric_forest::datasets::perturb;
        let moved = perturb(&pts, eta, seed);
        let x = MetricSpace::from_points(&pts).unwrap();
        let y = MetricSpace::from_points(&moved).unwrap();
        let mut dh: f64 = 0.0;
        for i in 0..pts.len() {
            dh = dh.max(metric_forest::metric::euclidean(&pts[i], &moved[i]));
        }
        let a = pd0(&x).unwrap();
        let b = pd0(&y).unwrap();
        prop_assert!(bottleneck(&a, &b) <= 2.0 * dh + 1e-9);
    }
}

#[test]
fn mismatched_infinite_pairs_are_infinitely_far() {
    let a = Diagram::new(vec![(0.0, f64::INFINITY)]).unwrap();
    let b = Diagram::new(vec![(0.0, f64::INFINITY), (1.0, f64::INFINITY)]).unwrap();
    assert_eq!(bottleneck(&a, &b), f64::INFINITY);
}
