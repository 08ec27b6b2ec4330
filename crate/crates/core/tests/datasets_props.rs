use metric_forest::datasets::*;
use metric_forest::geometry::directed_hausdorff;
use proptest::prelude::*;

fn params() -> TreeParams {
    TreeParams {
        n_vertices: 30,
        l_max: 1.5,
        l_min: 0.5,
        theta: std::f64::consts::FRAC_PI_4,
        width: 0.3,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn generators_are_deterministic(seed in any::<u64>()) {
        prop_assert_eq!(gen_uniform_cloud(50, 3, seed), gen_uniform_cloud(50, 3, seed));
        prop_assert_eq!(shuffled_order(40, seed), shuffled_order(40, seed));
        let params = params();
        let a = gen_sensible_tree(params, seed).unwrap();
        prop_assert_eq!(&a, &gen_sensible_tree(params, seed).unwrap());
        let s = gen_eps_sample(&a, 200, 0.02, seed).unwrap();
        prop_assert_eq!(&s, &gen_eps_sample(&a, 200, 0.02, seed).unwrap());
    }

    #[test]
    fn eps_samples_stay_in_the_tube(seed in any::<u64>(), eps in 0.005..0.05f64) {
        let t = gen_star(4, std::f64::consts::FRAC_PI_4, 1.0).unwrap();
        let s = gen_eps_sample(&t, 300, eps, seed).unwrap();
        prop_assert_eq!(s.len(), 300);
        for p in &s {
            prop_assert!(t.distance_to(p) <= eps);
        }
        prop_assert!(directed_hausdorff(&t, &s).unwrap().is_finite());
    }

    #[test]
    fn sensible_trees_respect_parameters(seed in any::<u64>()) {
        let params = params();
        let t = gen_sensible_tree(params, seed).unwrap();
        prop_assert_eq!(t.vertex_count(), params.n_vertices);
        prop_assert!(t.max_edge_length() <= params.l_max + 1e-12);
        prop_assert!(t.min_edge_length() >= params.l_min - 1e-12);
        prop_assert!(t.min_angle() >= params.theta - 1e-9);
    }

    #[test]
    fn perturbation_moves_points_by_at_most_eta(seed in any::<u64>(), eta in 0.0..1.0f64) {
        let pts = gen_uniform_cloud(30, 4, 1);
        let moved = perturb(&pts, eta, seed);
        for (a, b) in pts.iter().zip(&moved) {
            prop_assert!(metric_forest::metric::euclidean(a, b) <= eta + 1e-12);
        }
    }
}

#[test]
fn two_set_sizes() {
    for k in 1..=TWO_SET_MAX_K {
        assert_eq!(gen_two_separated_sets(k).unwrap().len(), 1 << (k + 1));
    }
    assert!(gen_two_separated_sets(0).is_err());
    assert!(gen_two_separated_sets(TWO_SET_MAX_K + 1).is_err());
}
