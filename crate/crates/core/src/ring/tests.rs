use super::*;
use num_complex::Complex64;

fn lcg(seed: &mut u64) -> f64 {
    *seed = seed
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
}

fn random_ring(n: usize, grid: usize, seed: &mut u64) -> RingMatrix {
    let dense = DMatrix::from_fn(n * grid, n * grid, |_, _| lcg(seed));
    RingMatrix::from_dense(n, grid, &dense).unwrap()
}

/// `(A * B)_rs = sum_k A_rk o B_ks` straight from the definition, on
/// dense block matrices.
fn definitional_product(n: usize, grid: usize, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n * grid, n * grid);
    for r in 0..grid {
        for s in 0..grid {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for k in 0..grid {
                        acc += a[(r * n + i, k * n + j)] * b[(k * n + i, s * n + j)];
                    }
                    out[(r * n + i, s * n + j)] = acc;
                }
            }
        }
    }
    out
}

#[test]
fn packed_index_layout() {
    let grid = 4;
    let mut expected = 0;
    for r in 0..grid {
        for s in r..grid {
            assert_eq!(packed_index(grid, r, s), expected);
            expected += 1;
        }
    }
    assert_eq!(expected, packed_len(grid));
}

#[test]
fn slice_isomorphism_holds() {
    let mut seed = 3;
    let a = random_ring(2, 3, &mut seed);
    for i in 0..2 {
        for j in 0..2 {
            for r in 0..3 {
                for s in 0..3 {
                    assert_eq!(a.slice_dense(i, j)[(r, s)], a.block(r, s)[(i, j)]);
                }
            }
        }
    }
    assert_eq!(RingMatrix::from_dense(2, 3, &a.to_dense()).unwrap(), a);
}

#[test]
fn identity_and_zero_products() {
    let mut seed = 5;
    let a = random_ring(3, 2, &mut seed);
    let e = RingMatrix::identity(3, 2);
    assert_eq!(e.star_multiply(&a).unwrap().to_dense(), a.to_dense());
    assert_eq!(a.star_multiply(&e).unwrap().to_dense(), a.to_dense());
    let z = RingMatrix::zeros(3, 2);
    let prod = z.star_multiply(&a).unwrap();
    assert_eq!(prod.num_slices(), 0);
    assert_eq!(prod.to_dense(), DMatrix::zeros(6, 6));
}

#[test]
fn identity_is_all_ones_diagonal_blocks() {
    let e = RingMatrix::<f64>::identity(2, 3);
    assert_eq!(e.block(1, 1), DMatrix::from_element(2, 2, 1.0));
    assert_eq!(e.block(0, 1), DMatrix::zeros(2, 2));
}

#[test]
fn product_matches_definition_exactly() {
    let mut seed = 17;
    for _ in 0..10 {
        let a = random_ring(2, 2, &mut seed);
        let b = random_ring(2, 2, &mut seed);
        let fast = a.star_multiply(&b).unwrap().to_dense();
        let slow = definitional_product(2, 2, &a.to_dense(), &b.to_dense());
        assert_eq!(fast, slow);
    }
}

#[test]
fn star_product_differs_from_block_product() {
    let mut seed = 23;
    let a = random_ring(2, 2, &mut seed);
    let b = random_ring(2, 2, &mut seed);
    let ring = a.star_multiply(&b).unwrap().to_dense();
    let ordinary = a.to_dense() * b.to_dense();
    assert!((ring - ordinary).amax() > 1e-3);
}

#[test]
fn transpose_keeps_block_positions() {
    let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
    let mut dense = DMatrix::zeros(4, 4);
    dense.view_mut((0, 2), (2, 2)).copy_from(&b);
    let a = RingMatrix::from_dense(2, 2, &dense).unwrap();
    let t = a.star_transpose();
    assert_eq!(t.block(0, 1), b.transpose());
    assert_eq!(t.block(1, 0), DMatrix::zeros(2, 2));
    assert_eq!(t.block(0, 0), DMatrix::zeros(2, 2));
}

#[test]
fn transpose_fixes_symmetric_blocks_and_is_an_involution() {
    let sym =
        RingMatrix::<f64>::from_fn_all(3, 2, false, |i, j, r, s| ((i + j) * 10 + r * 2 + s) as f64);
    assert_eq!(sym.star_transpose(), sym);
    let mut seed = 29;
    let a = random_ring(3, 3, &mut seed);
    assert_eq!(a.star_transpose().star_transpose(), a);
}

#[test]
fn dd_star_extracts_block_diagonals() {
    let mut seed = 31;
    let a = random_ring(3, 2, &mut seed);
    let d = a.dd_star();
    for r in 0..2 {
        for s in 0..2 {
            let (blk, orig) = (d.block(r, s), a.block(r, s));
            for i in 0..3 {
                for j in 0..3 {
                    let expected = if i == j { orig[(i, j)] } else { 0.0 };
                    assert_eq!(blk[(i, j)], expected);
                }
            }
        }
    }
    assert_eq!(d.dd_star(), d);
    let ones = RingMatrix::<f64>::from_fn_all(3, 2, false, |_, _, _, _| 1.0);
    assert_eq!(ones.dd_star().block(0, 1), DMatrix::identity(3, 3));
}

#[test]
fn inverse_of_identity_and_diagonal() {
    let e = RingMatrix::<f64>::identity(2, 3);
    assert_eq!(e.star_inverse().unwrap(), e);

    let diag = RingMatrix::<f64>::from_fn_all(2, 3, true, |i, j, r, s| {
        if r == s {
            [2.0, -4.0, 0.5, 8.0][i * 2 + j] * (r + 1) as f64
        } else {
            0.0
        }
    });
    let inv = diag.star_inverse().unwrap();
    for r in 0..3 {
        let (b, bi) = (diag.block(r, r), inv.block(r, r));
        for k in 0..4 {
            assert_eq!(bi[(k / 2, k % 2)], 1.0 / b[(k / 2, k % 2)]);
        }
    }
}

#[test]
fn inverse_residual_on_random_input() {
    let mut seed = 37;
    let a = random_ring(2, 3, &mut seed);
    let inv = a.star_inverse().unwrap();
    let e = RingMatrix::identity(2, 3);
    assert!(
        a.star_multiply(&inv).unwrap().max_abs_diff(&e).unwrap()
            < 1e-12 * a.max_abs() * inv.max_abs()
    );
    assert!(
        inv.star_multiply(&a).unwrap().max_abs_diff(&e).unwrap()
            < 1e-12 * a.max_abs() * inv.max_abs()
    );
}

#[test]
fn triangular_inverse_uses_packed_path() {
    let u = RingMatrix::<f64>::from_fn_all(2, 4, true, |i, j, r, s| {
        if r == s {
            1.0 + (i + j) as f64
        } else {
            0.25 * (r + s + i) as f64 - 0.5
        }
    });
    let inv = u.star_inverse().unwrap();
    assert!(inv.is_upper());
    let res = u
        .star_multiply(&inv)
        .unwrap()
        .max_abs_diff(&RingMatrix::identity(2, 4))
        .unwrap();
    assert!(res < 1e-13);
}

#[test]
fn singular_slice_is_reported() {
    let mut seed = 41;
    let a = random_ring(2, 2, &mut seed);
    // Zero out slice (1, 0) entirely.
    let mut dense = a.to_dense();
    for r in 0..2 {
        for s in 0..2 {
            dense[(r * 2 + 1, s * 2)] = 0.0;
        }
    }
    let b = RingMatrix::from_dense(2, 2, &dense).unwrap();
    assert!(matches!(
        b.star_inverse(),
        Err(TempoError::NotInvertibleOverR { i: 1, j: 0 })
    ));

    // Rank-deficient but stored slice (0, 1).
    let mut dense = a.to_dense();
    dense[(0, 1)] = 1.0;
    dense[(0, 3)] = 2.0;
    dense[(2, 1)] = 2.0;
    dense[(2, 3)] = 4.0;
    let c = RingMatrix::from_dense(2, 2, &dense).unwrap();
    assert!(matches!(
        c.star_inverse(),
        Err(TempoError::NotInvertibleOverR { i: 0, j: 1 })
    ));
}

#[test]
fn determinant_cases() {
    let e = RingMatrix::<f64>::identity(3, 2);
    assert_eq!(e.ring_det(), DMatrix::from_element(3, 3, 1.0));

    let mut seed = 43;
    let a = random_ring(2, 3, &mut seed);
    let mut dense = a.to_dense();
    for r in 0..3 {
        for s in 0..3 {
            dense[(r * 2, s * 2 + 1)] = 0.0;
        }
    }
    let b = RingMatrix::from_dense(2, 3, &dense).unwrap();
    let det = b.ring_det();
    assert_eq!(det[(0, 1)], 0.0);
    assert!(det[(0, 0)] != 0.0);

    // n = 1 degenerates to the ordinary determinant.
    let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
    let scalar = RingMatrix::from_dense(1, 3, &m).unwrap();
    assert!((scalar.ring_det()[(0, 0)] - m.determinant()).abs() < 1e-12);
}

#[test]
fn determinant_is_multiplicative() {
    let mut seed = 47;
    let a = random_ring(2, 3, &mut seed);
    let b = random_ring(2, 3, &mut seed);
    let lhs = a.star_multiply(&b).unwrap().ring_det();
    let rhs = a.ring_det().component_mul(&b.ring_det());
    for (x, y) in lhs.iter().zip(rhs.iter()) {
        assert!((x - y).abs() <= 1e-10 * x.abs().max(y.abs()).max(1.0));
    }
}

#[test]
fn sparse_patterns_propagate() {
    let a = RingMatrix::from_slices(
        3,
        2,
        vec![
            ((0, 1), DMatrix::identity(2, 2)),
            ((2, 2), DMatrix::identity(2, 2)),
        ],
    )
    .unwrap();
    let b = RingMatrix::from_slices(3, 2, vec![((0, 1), DMatrix::identity(2, 2) * 3.0)]).unwrap();
    assert_eq!(a.star_multiply(&b).unwrap().num_slices(), 1);
    assert_eq!(a.add(&b).unwrap().num_slices(), 2);
    assert_eq!(a.add(&b).unwrap().get(0, 0, 0, 1), 4.0);
    assert_eq!(a.sub(&b).unwrap().get(1, 1, 0, 1), -2.0);
    assert_eq!(a.star_transpose().slice_position(1, 0), Some(0));
}

#[test]
fn dimension_mismatch_is_an_error() {
    let a = RingMatrix::<f64>::identity(2, 2);
    let b = RingMatrix::<f64>::identity(2, 3);
    assert!(matches!(a.star_multiply(&b), Err(TempoError::Dimension(_))));
    assert!(matches!(a.add(&b), Err(TempoError::Dimension(_))));
}

#[test]
fn json_dump_round_trips() {
    let a = RingMatrix::from_slices(
        2,
        2,
        vec![((0, 1), DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0]))],
    )
    .unwrap();
    let json = a.to_json();
    assert_eq!(json["N"], 2);
    assert_eq!(
        json["slices"]["1,2"],
        serde_json::json!([1.0, 2.0, 0.0, 3.0])
    );
    assert!(json["slices"].get("1,1").is_none());
    assert_eq!(RingMatrix::from_json(&json).unwrap(), a);
}

fn to_c(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

#[test]
fn eigendecomposition_reconstructs() {
    let mut seed = 53;
    let m = random_ring(2, 3, &mut seed);
    let eig = m.ring_eigendecompose().unwrap();
    let rebuilt = eig
        .vectors
        .star_multiply(&eig.values)
        .unwrap()
        .star_multiply(&eig.vectors.star_inverse().unwrap())
        .unwrap();
    let err = rebuilt.max_abs_diff(&m.to_complex()).unwrap();
    assert!(err <= 1e-9 * m.max_abs(), "{err}");
    let mv = m.to_complex().star_multiply(&eig.vectors).unwrap();
    let vl = eig.vectors.star_multiply(&eig.values).unwrap();
    assert!(mv.max_abs_diff(&vl).unwrap() <= 1e-9 * m.max_abs());
}

#[test]
fn assembled_eigenvalues_root_the_characteristic() {
    let mut seed = 59;
    let m = random_ring(2, 3, &mut seed);
    let eig = m.ring_eigendecompose().unwrap();
    for k in 0..3 {
        let det = m.characteristic(&eig.eigenvalue(k)).unwrap();
        assert!(det.iter().all(|v| v.norm() <= 1e-9), "{det}");
    }
}

#[test]
fn eigenvalue_count_is_grid_to_the_n_squared() {
    let mut seed = 61;
    for (n, grid) in [(1, 2), (1, 3), (2, 2)] {
        let m = random_ring(n, grid, &mut seed);
        let all = m.ring_eigenvalues(1 << 20).unwrap();
        assert_eq!(all.len(), grid.pow((n * n) as u32));
        for lambda in &all {
            assert!(m
                .characteristic(lambda)
                .unwrap()
                .iter()
                .all(|v| v.norm() <= 1e-9));
        }
    }
}

#[test]
fn eigenvector_relation_does_not_imply_eigenvalue() {
    // Blocks [[A, 0], [0, -A]] with A = [[1, 2], [3, 4]]: every slice is
    // diag(a, -a).
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
    let mut dense = DMatrix::zeros(4, 4);
    dense.view_mut((0, 0), (2, 2)).copy_from(&a);
    dense.view_mut((2, 2), (2, 2)).copy_from(&(-&a));
    let m = RingMatrix::from_dense(2, 2, &dense).unwrap().to_complex();
    // lambda_22 = 5 is not an eigenvalue of slice (2,2).
    let lambda = to_c(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 5.0]));
    // Only slice (1,1) of V is nonzero, holding its eigenvector for 1.
    let v = RingMatrix::from_slices(
        2,
        2,
        vec![(
            (0, 0),
            to_c(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])),
        )],
    )
    .unwrap();
    let lhs = m.star_multiply(&v).unwrap();
    let rhs = v.ring_scale(&lambda).unwrap();
    assert_eq!(lhs.max_abs_diff(&rhs).unwrap(), 0.0);
    assert!(v.max_abs() > 0.0);
    let det = RingMatrix::from_dense(2, 2, &dense)
        .unwrap()
        .characteristic(&lambda)
        .unwrap();
    assert!(det.iter().any(|z| z.norm() > 1.0));
}

#[test]
fn power_series_converges_inside_radius_only() {
    let mut seed = 67;
    let m = random_ring(2, 3, &mut seed);
    let radius = m.series_radius(1.0).unwrap();
    let tail = |z: f64| {
        let step = m.scale(z);
        let mut term = RingMatrix::identity(2, 3);
        for _ in 0..50 {
            term = term.star_multiply(&step).unwrap();
        }
        term.max_abs()
    };
    assert!(tail(0.9 * radius) < 0.1);
    assert!(tail(1.1 * radius) > 10.0);
}
