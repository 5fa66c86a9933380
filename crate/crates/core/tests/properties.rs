use std::collections::BTreeMap;

use nalgebra::DMatrix;
use proptest::prelude::*;
use tempo_core::centrality::{compute_t0, Window};
use tempo_core::io::{parse_str, serialize_temporal_edgelist};
use tempo_core::oracle::{tally_walks, tally_walks_upto, DEFAULT_BRANCH_CAP};
use tempo_core::{
    f_centrality, generate, katz_temporal, nbt_append_frame, nbt_katz_temporal,
    CoefficientFunction, FrameGraph, GeneratorSpec, NbtUpdater, RingMatrix, TemporalNetwork,
};

prop_compose! {
    fn network(max_n: usize, max_frames: usize, integer: bool)
        (n in 1..=max_n, frames in 1..=max_frames)
        (edges in prop::collection::vec((0..frames, 0..n, 0..n, 1u32..=4), 0..3 * n * frames),
         n in Just(n), frames in Just(frames), scale in 0.1f64..1.0)
        -> TemporalNetwork
    {
        let mut per_frame = vec![BTreeMap::new(); frames];
        for (f, i, j, w) in edges {
            let weight = if integer { w as f64 } else { w as f64 * scale };
            per_frame[f].insert((i, j), weight);
        }
        let graphs = per_frame
            .into_iter()
            .map(|m| m.into_iter().map(|((i, j), w)| (i, j, w)).collect::<FrameGraph>())
            .collect();
        TemporalNetwork::new(n, graphs).unwrap()
    }
}

prop_compose! {
    fn ring(n: usize, grid: usize)(values in prop::collection::vec(-1.0f64..1.0, n * n * grid * grid)) -> RingMatrix {
        RingMatrix::from_dense(n, grid, &DMatrix::from_vec(n * grid, n * grid, values)).unwrap()
    }
}

/// `0.5 min(t0, 1/rho)`, or 0.5 when both are unbounded.
fn admissible_t(net: &TemporalNetwork) -> f64 {
    let b = compute_t0(net).min(1.0 / net.spectral_radius());
    if b.is_finite() {
        0.5 * b
    } else {
        0.5
    }
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_product_is_associative_and_distributive(a in ring(2, 3), b in ring(2, 3), c in ring(2, 3)) {
        let ab_c = a.star_multiply(&b).unwrap().star_multiply(&c).unwrap();
        let a_bc = a.star_multiply(&b.star_multiply(&c).unwrap()).unwrap();
        prop_assert!(ab_c.max_abs_diff(&a_bc).unwrap() <= 1e-12);
        let left = a.star_multiply(&b.add(&c).unwrap()).unwrap();
        let right = a.star_multiply(&b).unwrap().add(&a.star_multiply(&c).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right).unwrap() <= 1e-12);
    }

    #[test]
    fn ring_determinant_is_multiplicative(a in ring(2, 3), b in ring(2, 3)) {
        let lhs = a.star_multiply(&b).unwrap().ring_det();
        let rhs = a.ring_det().component_mul(&b.ring_det());
        for (x, y) in lhs.iter().zip(rhs.iter()) {
            prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(y.abs()).max(1.0));
        }
    }

    #[test]
    fn edge_list_round_trips(net in network(6, 4, false)) {
        let text = serialize_temporal_edgelist(&net);
        let back = parse_str(&text).unwrap();
        prop_assert_eq!(back.n(), net.n());
        prop_assert_eq!(back.num_frames(), net.num_frames());
        for (a, b) in back.frames().iter().zip(net.frames()) {
            prop_assert!(a.edges().eq(b.edges()));
        }
        prop_assert_eq!(serialize_temporal_edgelist(&back), text);
    }

    #[test]
    fn nonbacktracking_walks_are_a_subset(net in network(4, 3, true), k in 1usize..6) {
        let nb = tally_walks::<i64>(&net, k, true).unwrap();
        let all = tally_walks::<i64>(&net, k, false).unwrap();
        for t1 in 0..net.num_frames() {
            for t2 in 0..net.num_frames() {
                for i in 0..net.n() {
                    for j in 0..net.n() {
                        prop_assert!(nb.get(t1, t2, i, j) <= all.get(t1, t2, i, j));
                    }
                }
            }
        }
    }

    #[test]
    fn subnetwork_tallies_are_restrictions(net in network(4, 4, true), k in 0usize..5, a in 0usize..4, len in 0usize..4) {
        let frames = net.num_frames();
        let first = a.min(frames - 1);
        let last = (first + len).min(frames - 1);
        let sub = net.subnetwork(first, last).unwrap();
        let full = tally_walks_upto::<i64>(&net, k, false, DEFAULT_BRANCH_CAP).unwrap();
        let part = tally_walks_upto::<i64>(&sub, k, false, DEFAULT_BRANCH_CAP).unwrap();
        for t1 in first..=last {
            for t2 in t1..=last {
                for i in 0..net.n() {
                    for j in 0..net.n() {
                        prop_assert_eq!(full[k].get(t1, t2, i, j), part[k].get(t1 - first, t2 - first, i, j));
                    }
                }
            }
        }
    }

    #[test]
    fn nonbacktracking_katz_is_dominated_by_katz(net in network(6, 3, false)) {
        let t = admissible_t(&net);
        let nbt = nbt_katz_temporal(&net, t, 0).unwrap();
        let katz = katz_temporal(&net, t, 0).unwrap();
        for (x, y) in nbt.scores.iter().zip(&katz.scores) {
            prop_assert!(*x >= 1.0 - 1e-12 && *x <= y * (1.0 + 1e-12));
        }
    }

    #[test]
    fn scaling_weights_and_t_inversely_leaves_scores(net in network(5, 3, false), c in 0.25f64..4.0) {
        let t = admissible_t(&net);
        let frames = net
            .frames()
            .iter()
            .map(|f| f.edges().map(|e| (e.source, e.target, e.weight * c)).collect::<FrameGraph>())
            .collect();
        let scaled = TemporalNetwork::new(net.n(), frames).unwrap();
        let pairs = [
            (katz_temporal(&net, t, 0).unwrap(), katz_temporal(&scaled, t / c, 0).unwrap()),
            (nbt_katz_temporal(&net, t, 0).unwrap(), nbt_katz_temporal(&scaled, t / c, 0).unwrap()),
        ];
        for (a, b) in &pairs {
            prop_assert!(close(&a.scores, &b.scores, 1e-10));
        }
        let exp = CoefficientFunction::exponential();
        let a = f_centrality(&net, &exp, t, Window::full(&net)).unwrap();
        let b = f_centrality(&scaled, &exp, t / c, Window::full(&scaled)).unwrap();
        prop_assert!(close(&a.scores, &b.scores, 1e-10));
    }

    #[test]
    fn window_equals_truncated_network(net in network(5, 4, false), a in 0usize..4, len in 0usize..4) {
        let frames = net.num_frames();
        let first = a.min(frames - 1);
        let last = (first + len).min(frames - 1);
        let sub = net.subnetwork(first, last).unwrap();
        for f in [CoefficientFunction::exponential(), CoefficientFunction::cosh()] {
            let w = f_centrality(&net, &f, 0.3, Window::new(first, last)).unwrap();
            let s = f_centrality(&sub, &f, 0.3, Window::full(&sub)).unwrap();
            prop_assert_eq!(w.scores, s.scores);
        }
        // Katz over a suffix window is the matching block of the full solve.
        if last == frames - 1 {
            let t = admissible_t(&net);
            let full = katz_temporal(&net, t, first).unwrap();
            let cut = katz_temporal(&sub, t, 0).unwrap();
            prop_assert!(close(&full.scores, &cut.scores, 1e-13));
        }
    }

    #[test]
    fn appends_match_recomputation(net in network(6, 5, false)) {
        let t = admissible_t(&net);
        let mut state = NbtUpdater::new(&net.subnetwork(0, 0).unwrap(), t).unwrap();
        for s in 1..net.num_frames() {
            nbt_append_frame(&mut state, net.frames()[s].clone()).unwrap();
        }
        let fresh = NbtUpdater::new(&net, t).unwrap();
        prop_assert!(close(state.psi_ones(), fresh.psi_ones(), 1e-12));
    }

    #[test]
    fn generator_is_reproducible(n in 2usize..40, frames in 1usize..4, seed in any::<u64>(), dense in any::<bool>()) {
        let text = format!("{}:n={n},N={frames},seed={seed}", if dense { "dense" } else { "sparse" });
        let spec: GeneratorSpec = text.parse().unwrap();
        prop_assert_eq!(spec.to_string(), text);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        prop_assert_eq!(serialize_temporal_edgelist(&a), serialize_temporal_edgelist(&b));
    }
}
