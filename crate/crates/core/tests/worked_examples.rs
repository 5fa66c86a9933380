use nalgebra::{DMatrix, DVector};
use tempo_core::centrality::{psi_factors, Window};
use tempo_core::oracle::{enumerate_walks, tally_walks};
use tempo_core::{f_centrality, katz_temporal, CoefficientFunction, FrameGraph, TemporalNetwork};

fn three_frames() -> TemporalNetwork {
    let frames: Vec<FrameGraph> = vec![
        vec![(0, 1, 1.0), (1, 2, 2.0)].into_iter().collect(),
        vec![(2, 0, 1.5), (1, 0, 1.0), (0, 1, 0.5)]
            .into_iter()
            .collect(),
        vec![(0, 2, 1.0), (2, 1, 3.0)].into_iter().collect(),
    ];
    TemporalNetwork::new(3, frames).unwrap()
}

#[test]
fn two_frame_layout() {
    let net = TemporalNetwork::new(
        2,
        vec![
            vec![(0, 1, 1.0)].into_iter().collect(),
            vec![(1, 0, 2.0)].into_iter().collect(),
        ],
    )
    .unwrap();
    let a = net.time_evolving().materialize().unwrap();
    let (a1, a2) = (net.frames()[0].to_dense(), net.frames()[1].to_dense());
    assert_eq!(a.view((0, 0), (2, 2)), a1);
    assert_eq!(a.view((0, 2), (2, 2)), a2);
    assert_eq!(a.view((2, 0), (2, 2)), DMatrix::<f64>::zeros(2, 2));
    assert_eq!(a.view((2, 2), (2, 2)), a2);
}

#[test]
fn three_frame_layout_is_block_upper_triangular() {
    let net = three_frames();
    let a = net.time_evolving().materialize().unwrap();
    for r in 0..3 {
        for s in 0..3 {
            let expect = if r <= s {
                net.frames()[s].to_dense()
            } else {
                DMatrix::zeros(3, 3)
            };
            assert_eq!(a.view((3 * r, 3 * s), (3, 3)), expect, "block ({r},{s})");
        }
    }
}

#[test]
fn resolvent_blocks_sum_to_dynamic_communicability() {
    let net = three_frames();
    let t = 0.2;
    let i = DMatrix::<f64>::identity(3, 3);
    let inv = |s: usize| (&i - net.frames()[s].to_dense() * t).try_inverse().unwrap();
    let x = (DMatrix::identity(9, 9) - net.time_evolving().materialize().unwrap() * t)
        .try_inverse()
        .unwrap();
    let x11 = x.view((0, 0), (3, 3)).into_owned();
    let x12 = x.view((0, 3), (3, 3)).into_owned();
    let x13 = x.view((0, 6), (3, 3)).into_owned();
    let close = |a: &DMatrix<f64>, b: &DMatrix<f64>| (a - b).amax() <= 1e-13;
    assert!(close(&x11, &inv(0)));
    assert!(close(&x12, &(inv(0) * (inv(1) - &i))));
    assert!(close(&x13, &(inv(0) * inv(1) * (inv(2) - &i))));
    let q = inv(0) * inv(1) * inv(2);
    assert!(close(&(x11 + x12 + x13), &q));

    let katz = katz_temporal(&net, t, 0).unwrap();
    let product = q * DVector::from_element(3, 1.0);
    assert!(katz
        .scores
        .iter()
        .zip(product.iter())
        .all(|(a, b)| (a - b).abs() <= 1e-12 * b));
    let res = f_centrality(
        &net,
        &CoefficientFunction::resolvent(),
        t,
        Window::full(&net),
    )
    .unwrap();
    assert_eq!(res.scores, katz.scores);
}

#[test]
fn single_reciprocal_pair_damps_the_edge() {
    let (w12, w21, t) = (2.0, 3.0, 0.25);
    let net = TemporalNetwork::new(
        2,
        vec![vec![(0, 1, w12), (1, 0, w21)].into_iter().collect()],
    )
    .unwrap();
    let z = psi_factors(&net, t).unwrap();
    let expect = t * w12 / (1.0 - t * t * w12 * w21);
    assert!((z.z_entry(0, 1, 0, 0) - expect).abs() <= 1e-15 * expect);
}

#[test]
fn walk_weight_uses_every_edge() {
    // Weighted path 0 -> 1 -> 2 in one frame: the length-2 walk weight is 2 * 5.
    let net = TemporalNetwork::new(
        3,
        vec![vec![(0, 1, 2.0), (1, 2, 5.0)].into_iter().collect()],
    )
    .unwrap();
    let walks = enumerate_walks(&net, 2, false).unwrap();
    assert_eq!(walks.len(), 1);
    assert_eq!(walks[0].weight, 10.0);
    let a = net.time_evolving().materialize().unwrap();
    assert_eq!((&a * &a)[(0, 2)], 10.0);
    // Dropping the last edge from the product would give 2, which A^2 does not.
    assert_ne!((&a * &a)[(0, 2)], 2.0);
    assert_eq!(
        tally_walks::<i64>(&net, 2, false).unwrap().get(0, 0, 0, 2),
        10
    );
}
