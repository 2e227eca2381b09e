mod common;

use common::{random_matrix, stump_oracle};
use ndarray::Array2;
use nirsc::models::{gbdt_fit, gbdt_fit_with_history, leaf_weight, GbdtConfig, GossConfig, Node};
use nirsc::{Label, RngSeed};
use proptest::prelude::*;

fn stump_config(class_weight: f64, lambda: f64) -> GbdtConfig {
    GbdtConfig {
        n_trees: 1,
        learning_rate: 1.0,
        max_depth: 1,
        max_leaves: 2,
        class_weight,
        l2_lambda: lambda,
        ..Default::default()
    }
}

fn labels_from(bits: &[bool]) -> Vec<Label> {
    bits.iter()
        .map(|&b| if b { Label::Cancer } else { Label::NonCancer })
        .collect()
}

#[test]
fn leaf_weight_hand_cases() {
    assert_eq!(leaf_weight(2.0, 4.0, 1.0, 0.0), -0.4);
    assert_eq!(leaf_weight(-3.0, 1.0, 2.0, 0.0), 1.0);
    assert_eq!(leaf_weight(0.5, 3.0, 1.0, 1.0), 0.0);
    assert_eq!(leaf_weight(5.0, 3.0, 1.0, 1.0), -1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn depth_one_tree_matches_stump_oracle(
        seed in 0u64..1_000_000,
        n in 6usize..40,
        d in 1usize..5,
        class_weight in 1.0f64..5.0,
        lambda in 0.0f64..3.0,
        bits in proptest::collection::vec(any::<bool>(), 40),
    ) {
        let mut x = random_matrix(n, d, seed);
        x.mapv_inplace(|v| (v * 4.0).round() / 4.0);
        let mut b = bits[..n].to_vec();
        b[0] = true;
        b[1] = false;
        let labels = labels_from(&b);
        let y: Vec<f64> = labels.iter().map(|l| l.as_f64()).collect();
        let model = gbdt_fit(x.view(), &labels, &stump_config(class_weight, lambda)).unwrap();
        let tree = &model.trees[0];
        match stump_oracle(x.view(), &y, class_weight, lambda) {
            None => {
                let is_leaf = matches!(tree.nodes[0], Node::Leaf { .. });
                prop_assert!(is_leaf);
            }
            Some(s) => {
                let Node::Split { feature, threshold, left, right } = tree.nodes[0] else {
                    return Err(TestCaseError::fail("expected a split"));
                };
                let (Node::Leaf { weight: wl }, Node::Leaf { weight: wr }) = (&tree.nodes[left], &tree.nodes[right]) else {
                    return Err(TestCaseError::fail("children must be leaves"));
                };
                if (feature, threshold) == (s.feature, s.threshold) {
                    prop_assert!((wl - s.left).abs() < 1e-9 && (wr - s.right).abs() < 1e-9);
                } else {
                    // Only a numerically tied split may differ from the oracle.
                    let other = stump_oracle(x.column(feature).insert_axis(ndarray::Axis(1)).view(), &y, class_weight, lambda).unwrap();
                    prop_assert!((other.gain - s.gain).abs() <= 1e-9 * s.gain.abs().max(1.0));
                }
            }
        }
    }
}

#[test]
fn full_batch_training_loss_never_increases() {
    for seed in 0..10 {
        let x = random_matrix(120, 6, seed);
        let labels: Vec<Label> = x
            .rows()
            .into_iter()
            .map(|r| {
                if r[0] + 0.5 * r[1] * r[2] > 0.1 {
                    Label::Cancer
                } else {
                    Label::NonCancer
                }
            })
            .collect();
        let cfg = GbdtConfig {
            n_trees: 40,
            learning_rate: 0.3,
            max_depth: 4,
            class_weight: 2.0,
            seed: RngSeed(seed),
            ..Default::default()
        };
        let report = gbdt_fit_with_history(x.view(), &labels, &cfg).unwrap();
        assert_eq!(report.train_loss.len(), 41);
        for w in report.train_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "loss rose from {} to {}", w[0], w[1]);
        }
    }
}

#[test]
fn goss_and_subsampling_are_deterministic() {
    let x = random_matrix(200, 5, 3);
    let labels: Vec<Label> = x
        .rows()
        .into_iter()
        .map(|r| if r[1] > 0.0 { Label::Cancer } else { Label::NonCancer })
        .collect();
    for cfg in [
        GbdtConfig {
            goss: Some(GossConfig {
                top_fraction: 0.2,
                random_fraction: 0.1,
            }),
            n_trees: 20,
            ..Default::default()
        },
        GbdtConfig {
            subsample: 0.5,
            colsample_by_tree: 0.6,
            n_trees: 20,
            ..Default::default()
        },
    ] {
        let a = gbdt_fit(x.view(), &labels, &cfg).unwrap();
        let b = gbdt_fit(x.view(), &labels, &cfg).unwrap();
        assert_eq!(a, b);
        let c = gbdt_fit(
            x.view(),
            &labels,
            &GbdtConfig {
                seed: RngSeed(9),
                ..cfg.clone()
            },
        )
        .unwrap();
        assert_ne!(a, c);
        let acc = a
            .predict_proba(x.view())
            .unwrap()
            .iter()
            .zip(&labels)
            .filter(|(p, l)| (**p >= 0.5) == (**l == Label::Cancer))
            .count();
        assert!(acc >= 180, "training accuracy {acc}/200");
    }
}

#[test]
fn ignored_feature_is_never_split() {
    let mut x = random_matrix(150, 3, 8);
    x.column_mut(2).fill(1.0);
    let labels: Vec<Label> = x
        .rows()
        .into_iter()
        .map(|r| if r[0] > 0.3 { Label::Cancer } else { Label::NonCancer })
        .collect();
    let m = gbdt_fit(x.view(), &labels, &GbdtConfig::default()).unwrap();
    assert!(m.trees.iter().all(|t| t.split_features().all(|f| f != 2)));
    let err = gbdt_fit(
        Array2::<f64>::zeros((4, 2)).view(),
        &labels[..3],
        &GbdtConfig::default(),
    );
    assert!(err.is_err());
}
