#![allow(dead_code)]

use metric_forest::datasets::rng;
use metric_forest::metric::MetricSpace;
use rand::Rng;

/// Removes exact duplicate points, keeping the first copy.
pub fn dedup(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for p in points {
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// Shortest-path metric of a random complete graph with weights in
/// `[1, 10)`.
pub fn random_graph_metric(n: usize, seed: u64) -> MetricSpace {
    let mut r = rng(seed, 100);
    let mut d = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let w = r.gen_range(1.0..10.0);
            d[a][b] = w;
            d[b][a] = w;
        }
    }
    for k in 0..n {
        for a in 0..n {
            for b in 0..n {
                let via = d[a][k] + d[k][b];
                if via < d[a][b] {
                    d[a][b] = via;
                }
            }
        }
    }
    MetricSpace::from_matrix(&d).unwrap()
}

/// Points with integer coordinates from a small grid, giving many equal
/// distances.
pub fn lattice_cloud(n: usize, dim: usize, side: i64, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed, 101);
    let mut pts = Vec::new();
    let mut tries = 0;
    while pts.len() < n && tries < 100 * n {
        tries += 1;
        let p: Vec<f64> = (0..dim).map(|_| r.gen_range(0..side) as f64).collect();
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    pts
}

pub fn line(values: &[f64]) -> MetricSpace {
    MetricSpace::from_points(&values.iter().map(|&v| vec![v]).collect::<Vec<_>>()).unwrap()
}

/// Multiset equality of two float lists.
pub fn same_multiset(a: &[f64], b: &[f64]) -> bool {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    x == y
}
