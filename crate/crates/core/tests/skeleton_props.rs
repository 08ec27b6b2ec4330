mod common;

use common::dedup;
use metric_forest::graph::WeightedGraph;
use metric_forest::metric::MetricSpace;
use metric_forest::skeleton::*;
use proptest::prelude::*;

fn cloud(max_n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..1.0f64, 2), 2..max_n).prop_map(dedup)
}

fn density(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..10.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn msg_is_connected_and_contains_neighbors(pts in cloud(150), k in 1usize..6) {
        let x = MetricSpace::from_points(&pts).unwrap();
        let m = msg_k(&x, k).unwrap();
        let g = &m.graph;
        prop_assert!(g.is_connected());
        for p in 0..x.len() {
            prop_assert!(g.degree(p) >= k.min(x.len() - 1));
        }
        for e in g.edges() {
            prop_assert_eq!(e.length, x.distance(e.a, e.b));
        }
    }

    #[test]
    fn sparse_dense_covers_and_is_sparse(
        (pts, f) in cloud(120).prop_flat_map(|p| { let n = p.len(); (Just(p), density(n)) }),
        delta in 0.02..0.6f64,
    ) {
        let x = MetricSpace::from_points(&pts).unwrap();
        let g: WeightedGraph = msg_k(&x, 4).unwrap().graph;
        let sd = sparse_dense_subset(&g, &f, delta).unwrap();
        prop_assert!(!sd.selected.is_empty());
        for v in 0..x.len() {
            prop_assert!(sd.dist[v] < delta);
            prop_assert!(sd.selected.contains(&sd.ndp[v]));
        }
        for (i, &p) in sd.selected.iter().enumerate() {
            let paths = g.shortest_paths(p);
            for &q in &sd.selected[i + 1..] {
                prop_assert!(paths[q] >= delta, "{} < {delta}", paths[q]);
            }
        }
        // The densest point is always selected first.
        let top = (0..f.len()).max_by(|&a, &b| f[a].total_cmp(&f[b]).then(b.cmp(&a))).unwrap();
        prop_assert_eq!(sd.selected[0], top);
    }

    #[test]
    fn dense_tree_spans_the_selection(
        (pts, f) in cloud(120).prop_flat_map(|p| { let n = p.len(); (Just(p), density(n)) }),
        delta in 0.02..0.6f64,
    ) {
        let x = MetricSpace::from_points(&pts).unwrap();
        let g = msg_k(&x, 4).unwrap().graph;
        let sd = sparse_dense_subset(&g, &f, delta).unwrap();
        let dt = dense_tree(&g, &sd, &pts).unwrap();
        prop_assert_eq!(dt.tree.vertex_count(), sd.selected.len());
        prop_assert_eq!(dt.tree.edges.len(), sd.selected.len() - 1);
        prop_assert_eq!(&dt.points, &sd.selected);
    }

    #[test]
    fn recognition_is_in_unit_interval(a in prop::collection::vec(1usize..6, 1..20), b in prop::collection::vec(1usize..6, 1..20)) {
        let r = degree_list_recognition(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert_eq!(degree_list_recognition(&a, &a).unwrap(), 1.0);
    }
}
