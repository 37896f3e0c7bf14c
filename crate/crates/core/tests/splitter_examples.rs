use kspr_core::splitter::{group_classes, make_pieces, merge_pieces, ClassPrototypes, PieceResult};
use kspr_core::{DMatrix, Error, OneHotLabels};
use proptest::prelude::*;

fn prototypes_with_gram(gram: DMatrix<f64>) -> ClassPrototypes {
    let c = gram.nrows();
    let l = gram.cholesky().expect("similarities must form a positive definite Gram matrix").l();
    ClassPrototypes { prototypes: l, support_counts: vec![1; c], fallback_classes: Vec::new() }
}

#[test]
fn greedy_grouping_pairs_most_similar_classes() {
    #[rustfmt::skip]
    let gram = DMatrix::from_row_slice(4, 4, &[
        1.0, 0.9, 0.1, 0.2,
        0.9, 1.0, 0.1, 0.1,
        0.1, 0.1, 1.0, 0.8,
        0.2, 0.1, 0.8, 1.0,
    ]);
    let protos = prototypes_with_gram(gram);
    let p = &protos.prototypes;
    assert!((p.row(0).dot(&p.row(1)) - 0.9).abs() < 1e-12);
    assert!((p.row(2).dot(&p.row(3)) - 0.8).abs() < 1e-12);
    assert_eq!(group_classes(&protos, 2).unwrap(), vec![vec![0, 1], vec![2, 3]]);
    assert_eq!(group_classes(&protos, 4).unwrap(), vec![vec![0, 1, 2, 3]]);
    assert_eq!(group_classes(&protos, 3).unwrap(), vec![vec![0, 1, 3], vec![2]]);
}

#[test]
fn one_extra_sample_creates_a_padded_piece() {
    let m = 5;
    // class 1 is empty and never enters a piece
    let labels = OneHotLabels::new(vec![0; m + 1], 2).unwrap();
    let plan = make_pieces(&labels, &[vec![0, 1]], m, 3).unwrap();
    assert_eq!(plan.pieces.len(), 2);
    for piece in &plan.pieces {
        assert_eq!(piece.indices.len(), m);
        let mut distinct = piece.indices.clone();
        distinct.sort_unstable();
        distinct.dedup();
        assert_eq!(distinct.len(), m);
    }
    assert_eq!(plan.multiplicity.iter().filter(|&&k| k == 2).count(), m - 1);
    assert_eq!(plan.multiplicity.iter().filter(|&&k| k == 1).count(), 2);
}

#[test]
fn exact_multiples_use_every_sample_once() {
    let m = 4;
    let labels = OneHotLabels::new((0..2 * m).map(|i| i % 2).chain((0..2 * m).map(|i| i % 2)).collect(), 2).unwrap();
    let plan = make_pieces(&labels, &[vec![0, 1]], m, 8).unwrap();
    assert_eq!(plan.pieces.len(), 2);
    assert!(plan.multiplicity.iter().all(|&k| k == 1));
}

#[test]
fn piece_size_below_two_is_rejected() {
    let labels = OneHotLabels::new(vec![0, 1, 0, 1], 2).unwrap();
    assert!(matches!(make_pieces(&labels, &[vec![0, 1]], 1, 0), Err(Error::InvalidConfig(_))));
}

fn labels_strategy() -> impl Strategy<Value = (Vec<usize>, usize)> {
    (2usize..7).prop_flat_map(|c| (proptest::collection::vec(0..c, c..120), Just(c)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn pieces_cover_every_sample_and_balance_classes(
        (labels, c) in labels_strategy(),
        m in 2usize..12,
        group_size in 1usize..5,
        seed in any::<u64>(),
    ) {
        let onehot = OneHotLabels::new(labels.clone(), c).unwrap();
        let groups: Vec<Vec<usize>> = (0..c).collect::<Vec<_>>().chunks(group_size).map(|g| g.to_vec()).collect();
        let plan = make_pieces(&onehot, &groups, m, seed).unwrap();
        let mut seen = vec![0usize; labels.len()];
        for piece in &plan.pieces {
            let present: Vec<usize> = plan.groups[piece.group].iter().copied().filter(|&k| labels.contains(&k)).collect();
            prop_assert_eq!(piece.indices.len(), m * present.len());
            for &k in &present {
                prop_assert_eq!(piece.indices.iter().filter(|&&i| labels[i] == k).count(), m);
            }
            for &i in &piece.indices {
                seen[i] += 1;
            }
        }
        prop_assert_eq!(&seen, &plan.multiplicity);
        prop_assert!(seen.iter().all(|&k| k >= 1));
        prop_assert_eq!(plan.clone(), make_pieces(&onehot, &groups, m, seed).unwrap());
    }

    #[test]
    fn merge_ignores_piece_order(
        sets in proptest::collection::vec(proptest::collection::btree_set(0usize..50, 0..20), 1..8),
        rotate in 0usize..8,
    ) {
        let results: Vec<_> = sets
            .iter()
            .enumerate()
            .map(|(i, s)| Ok(PieceResult {
                clean: s.iter().copied().collect(),
                fallback_used: i % 3 == 0,
                realized_t: Some(i as f64),
                realized_q: None,
            }))
            .collect();
        let mut shuffled = results.clone();
        let k = rotate % shuffled.len();
        shuffled.rotate_left(k);
        shuffled.reverse();
        let a = merge_pieces(50, &results);
        let b = merge_pieces(50, &shuffled);
        prop_assert_eq!(a, b);
        let union: std::collections::BTreeSet<usize> = sets.iter().flatten().copied().collect();
        prop_assert_eq!(merge_pieces(50, &results).outcome.clean, union.into_iter().collect::<Vec<_>>());
    }
}
