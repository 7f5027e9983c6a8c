use proptest::prelude::*;
use rand::Rng;
use steinlab_core::models::{ColoredGraphModel, Graph, GraphSpec};
use steinlab_core::pair::{sample_bound, PairModel};
use steinlab_core::stats::{derive_stream, mean_se};
use steinlab_core::Execution;

fn mono(g: &Graph, xi: &[u32]) -> f64 {
    let mut m = 0;
    for u in 0..g.n() {
        for &v in g.neighbors(u) {
            if (v as usize) > u && xi[u] == xi[v as usize] {
                m += 1;
            }
        }
    }
    m as f64
}

/// Moments of Δ by recoloring each vertex to each color and recounting.
fn brute(model: &ColoredGraphModel, xi: &[u32]) -> [f64; 5] {
    let g = model.graph();
    let c = model.colors();
    let w_of = |x: &[u32]| (mono(g, x) - g.edge_count() as f64 / c as f64) / model.sigma();
    let w = w_of(xi);
    let mut m = [w, 0.0, 0.0, 0.0, 0.0];
    let p = 1.0 / (g.n() as f64 * c as f64);
    let mut y = xi.to_vec();
    for i in 0..g.n() {
        for col in 0..c {
            y[i] = col;
            let d = w - w_of(&y);
            m[1] += p * d;
            m[2] += p * d * d;
            m[3] += p * d * d.abs();
            m[4] += p * d * d * d;
        }
        y[i] = xi[i];
    }
    m
}

fn colorings(n: usize, c: u32) -> impl Iterator<Item = Vec<u32>> {
    let total = (c as usize).pow(n as u32);
    (0..total).map(move |mut k| {
        (0..n)
            .map(|_| {
                let v = (k % c as usize) as u32;
                k /= c as usize;
                v
            })
            .collect()
    })
}

fn assert_close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol * (1.0 + b.abs()), "{a} vs {b}");
}

#[test]
fn kernel_matches_enumeration_on_small_complete_graphs() {
    for n in [3, 4] {
        for c in [2, 3] {
            let model = ColoredGraphModel::new(Graph::complete(n).unwrap(), c).unwrap();
            for xi in colorings(n, c) {
                let cs = model.cond_stats(&xi).unwrap();
                let b = brute(&model, &xi);
                assert_close(cs.w, b[0], 1e-12);
                assert_close(cs.ed, b[1], 1e-12);
                assert_close(cs.ed2, b[2], 1e-12);
                assert_close(cs.edabs, b[3], 1e-12);
                assert_close(cs.ed3, b[4], 1e-12);
            }
        }
    }
}

#[test]
fn kernel_matches_enumeration_on_sparse_graphs() {
    let graphs = [
        Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)]).unwrap(),
        Graph::random_regular(8, 3, 4).unwrap(),
        Graph::erdos_renyi(8, 0.5, 9).unwrap(),
    ];
    for g in graphs {
        let n = g.n();
        let model = ColoredGraphModel::new(g, 3).unwrap();
        let mut rng = derive_stream(1, 0, n as u64);
        for _ in 0..200 {
            let xi = model.sample_config(&mut rng);
            let cs = model.cond_stats(&xi).unwrap();
            let b = brute(&model, &xi);
            for (got, want) in [cs.w, cs.ed, cs.ed2, cs.edabs, cs.ed3].into_iter().zip(b) {
                assert_close(got, want, 1e-12);
            }
        }
    }
}

#[test]
fn complete_fast_path_agrees_with_general_path() {
    // the same K_7 given as an explicit edge list minus nothing is detected
    // as complete, so compare against K_7 plus an isolated vertex instead
    let k7 = ColoredGraphModel::new(Graph::complete(7).unwrap(), 4).unwrap();
    let mut e = Vec::new();
    for u in 0..7 {
        for v in u + 1..7 {
            e.push((u, v));
        }
    }
    let padded = ColoredGraphModel::new(Graph::from_edges(8, &e).unwrap(), 4).unwrap();
    assert!(k7.graph().is_complete() && !padded.graph().is_complete());
    let mut rng = derive_stream(2, 0, 0);
    for _ in 0..500 {
        let xi = k7.sample_config(&mut rng);
        let a = k7.cond_stats(&xi).unwrap();
        let mut x8 = xi.clone();
        x8.push(0);
        let b = padded.cond_stats(&x8).unwrap();
        // the isolated vertex only rescales the average over vertices
        let r = 8.0 / 7.0;
        assert_close(a.w, b.w, 1e-12);
        assert_close(a.ed2, b.ed2 * r, 1e-12);
        assert_close(a.edabs, b.edabs * r, 1e-12);
        assert_close(a.ed3, b.ed3 * r, 1e-12);
    }
}

#[test]
fn k3_two_colors_variance_identity_is_exact() {
    let model = ColoredGraphModel::new(Graph::complete(3).unwrap(), 2).unwrap();
    let vals: Vec<f64> = colorings(3, 2).map(|xi| model.cond_stats(&xi).unwrap().ed2).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    assert!((mean / (2.0 * model.lambda()) - 1.0).abs() < 1e-14);
}

#[test]
fn delta_max_is_the_largest_single_recolor_change() {
    let model = ColoredGraphModel::new(Graph::complete(4).unwrap(), 2).unwrap();
    let mut worst: f64 = 0.0;
    for xi in colorings(4, 2) {
        let w = model.statistic(&xi);
        let mut y = xi.clone();
        for i in 0..4 {
            for col in 0..2 {
                y[i] = col;
                worst = worst.max((w - model.statistic(&y)).abs());
            }
            y[i] = xi[i];
        }
    }
    let d = model.delta_max().unwrap();
    assert!((d - worst).abs() < 1e-12);
    assert!((d - 3.0 / model.sigma()).abs() < 1e-12);
}

#[test]
fn monochromatic_coloring_gives_root_m() {
    let g = Graph::random_regular(10, 4, 1).unwrap();
    let m = g.edge_count() as f64;
    let model = ColoredGraphModel::new(g, 2).unwrap();
    let w = model.statistic(&vec![1; 10]);
    assert!((w - m.sqrt()).abs() < 1e-12);
}

#[test]
fn proper_colorings_of_k4() {
    let model = ColoredGraphModel::new(Graph::complete(4).unwrap(), 4).unwrap();
    let m = 200_000;
    let mut rng = derive_stream(3, 0, 0);
    let hits = (0..m)
        .filter(|_| {
            let xi = model.sample_config(&mut rng);
            model.monochromatic(&xi) == 0
        })
        .count() as f64;
    let p = 24.0 / 256.0;
    let se = (p * (1.0 - p) / m as f64).sqrt();
    assert!((hits / m as f64 - p).abs() < 4.0 * se);
}

#[test]
fn color_frequencies_are_uniform() {
    let model = ColoredGraphModel::new(Graph::complete(2).unwrap(), 2).unwrap();
    let mut rng = derive_stream(4, 0, 0);
    let ones = (0..500_000)
        .map(|_| model.sample_config(&mut rng))
        .flatten()
        .filter(|&c| c == 1)
        .count();
    assert!((ones as f64 / 1e6 - 0.5).abs() < 4e-3);
}

#[test]
fn one_color_is_rejected() {
    assert!(ColoredGraphModel::new(Graph::complete(4).unwrap(), 1).is_err());
    assert!(Graph::from_edges(3, &[(0, 0)]).is_err());
    assert!(Graph::from_edges(3, &[(0, 1), (1, 0)]).is_err());
}

#[test]
fn brackets() {
    for n in [8usize, 32, 100] {
        let model = ColoredGraphModel::new(Graph::complete(n).unwrap(), n as u32).unwrap();
        let nf = n as f64;
        let want = (1.0 / nf).sqrt() + (2.0 / nf).sqrt() + (2.0 / (nf - 1.0)).sqrt();
        assert!((model.theoretical_bound_factor() - want).abs() < 1e-14);
    }
    let (n, d, c) = (40usize, 6usize, 5u32);
    let model = ColoredGraphModel::new(Graph::random_regular(n, d, 2).unwrap(), c).unwrap();
    let want = (1.0 / c as f64).sqrt() + (2.0 / n as f64).sqrt() + (2.0 * c as f64 / (n * d) as f64).sqrt();
    assert!((model.theoretical_bound_factor() - want).abs() < 1e-14);
    let g = Graph::complete(10).unwrap();
    let small = ColoredGraphModel::new(g.clone(), 3).unwrap().theoretical_bound_factor();
    let large = ColoredGraphModel::new(g, 300).unwrap().theoretical_bound_factor();
    assert!(large > small);
}

#[test]
fn standardization() {
    let model = ColoredGraphModel::new(Graph::erdos_renyi(30, 0.3, 5).unwrap(), 3).unwrap();
    let mut rng = derive_stream(6, 0, 0);
    let ws: Vec<f64> = (0..100_000)
        .map(|_| model.statistic(&model.sample_config(&mut rng)))
        .collect();
    let m = mean_se(&ws);
    assert!(m.mean.abs() < 4.0 * m.se);
    let sq: Vec<f64> = ws.iter().map(|w| w * w).collect();
    let v = mean_se(&sq);
    assert!((v.mean - 1.0).abs() < 4.0 * v.se);
}

#[test]
fn edge_list_round_trip() {
    let g = Graph::parse_edge_list("# square\n0 1\n1 2\n2 3\n3 0\n", None).unwrap();
    assert_eq!((g.n(), g.edge_count(), g.max_degree()), (4, 4, 2));
    assert!(Graph::parse_edge_list("0 1 2\n", None).is_err());
    let spec: GraphSpec = serde_json::from_str(r#"{"kind": "random_regular", "n": 12, "d": 3, "seed": 1}"#).unwrap();
    let g = spec.build().unwrap();
    assert!((0..12).all(|v| g.degree(v) == 3));
}

#[test]
fn bound_rhs_covers_three_delta() {
    let model = ColoredGraphModel::new(Graph::complete(16).unwrap(), 16).unwrap();
    let b = sample_bound(&model, 2000, 1, Execution::Parallel).unwrap();
    let bd = b.bounded_difference(Execution::Parallel).unwrap();
    assert!(bd.rhs.value >= 3.0 * model.delta_max().unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn drift_equals_two_over_n_times_w(n in 2usize..40, p in 0.1f64..1.0, c in 2u32..7, seed in any::<u64>()) {
        let g = match Graph::erdos_renyi(n, p, seed) {
            Ok(g) => g,
            Err(_) => return Ok(()),
        };
        let model = ColoredGraphModel::new(g, c).unwrap();
        let mut rng = derive_stream(seed, 1, 0);
        for _ in 0..10 {
            let xi: Vec<u32> = (0..n).map(|_| rng.random_range(0..c)).collect();
            let cs = model.cond_stats(&xi).unwrap();
            prop_assert!((cs.ed - 2.0 / n as f64 * cs.w).abs() <= 1e-12 * (1.0 + cs.w.abs()));
            prop_assert!(cs.check().is_ok());
        }
    }
}
