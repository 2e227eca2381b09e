mod common;

use common::{random_matrix, shapley_by_permutations};
use ndarray::{array, ArrayView2, Axis};
use nirsc::explain::{importance_ranking, shapley_attributions, ShapleyConfig, ShapleyMode};
use nirsc::models::{gbdt_fit, GbdtConfig};
use nirsc::{Label, Result, RngSeed};

fn names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}

fn batch(f: impl Fn(&[f64]) -> f64 + Sync) -> impl Fn(ArrayView2<f64>) -> Result<Vec<f64>> + Sync {
    move |x: ArrayView2<f64>| Ok(x.rows().into_iter().map(|r| f(&r.to_vec())).collect())
}

fn interacting(r: &[f64]) -> f64 {
    r[0] * r[1] + (r[2] - 0.3).max(0.0) * 2.0 - r[0].powi(3)
}

#[test]
fn three_features_match_full_enumeration() {
    let bg = random_matrix(7, 3, 1);
    let xs = random_matrix(4, 3, 2);
    let e = shapley_attributions(
        batch(interacting),
        bg.view(),
        xs.view(),
        &names(3),
        &ShapleyConfig::default(),
    )
    .unwrap();
    assert!(e.exhaustive);
    assert_eq!(e.n_permutations, 6);
    for (i, x) in xs.rows().into_iter().enumerate() {
        let oracle = shapley_by_permutations(interacting, x.as_slice().unwrap(), bg.view());
        for (a, b) in e.attributions.row(i).iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn exhaustive_efficiency_and_dummy_on_a_tree_model() {
    let x = random_matrix(200, 5, 3);
    let labels: Vec<Label> = x
        .rows()
        .into_iter()
        .map(|r| {
            if r[0] + r[1] * r[3] > 0.0 {
                Label::Cancer
            } else {
                Label::NonCancer
            }
        })
        .collect();
    let mut xt = x.clone();
    xt.column_mut(4).fill(0.5);
    let m = gbdt_fit(
        xt.view(),
        &labels,
        &GbdtConfig {
            n_trees: 30,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(m.trees.iter().all(|t| t.split_features().all(|f| f != 4)));
    let bg = xt.select(Axis(0), &(0..20).collect::<Vec<_>>());
    let samples = x.select(Axis(0), &(100..110).collect::<Vec<_>>());
    let e = shapley_attributions(
        |v| m.predict_proba(v),
        bg.view(),
        samples.view(),
        &names(5),
        &ShapleyConfig::default(),
    )
    .unwrap();
    assert!(e.exhaustive);
    for r in e.efficiency_residuals() {
        assert!(r.abs() < 1e-12, "residual {r}");
    }
    assert!(e.attributions.column(4).iter().all(|&v| v == 0.0));
}

#[test]
fn additive_model_recovers_centered_inputs() {
    let coef: Vec<f64> = (0..10).map(|j| j as f64 - 4.5).collect();
    let c2 = coef.clone();
    let f = batch(move |r: &[f64]| r.iter().zip(&c2).map(|(a, b)| a * b).sum());
    let bg = random_matrix(50, 10, 5);
    let xs = random_matrix(3, 10, 6);
    let cfg = ShapleyConfig {
        n_permutations: 256,
        seed: RngSeed(8),
        ..Default::default()
    };
    let e = shapley_attributions(&f, bg.view(), xs.view(), &names(10), &cfg).unwrap();
    assert!(!e.exhaustive);
    let bg_mean = bg.mean_axis(Axis(0)).unwrap();
    for i in 0..3 {
        for j in 0..10 {
            let exact = coef[j] * (xs[[i, j]] - bg_mean[j]);
            let tol = 4.0 * e.std_errors[[i, j]] + 1e-9;
            assert!(
                (e.attributions[[i, j]] - exact).abs() <= tol,
                "({i},{j}) {} vs {exact}",
                e.attributions[[i, j]]
            );
        }
    }
    for (r, se) in e.efficiency_residuals().iter().zip(&e.efficiency_std_errors) {
        assert!(r.abs() <= 3.0 * se + 1e-12);
    }
    let again = shapley_attributions(&f, bg.view(), xs.view(), &names(10), &cfg).unwrap();
    assert_eq!(e, again);
}

#[test]
fn symmetric_features_share_credit() {
    let f = batch(|r: &[f64]| (r[0] + r[1]).tanh() + 0.2 * r[2]);
    let bg = array![[0.0, 0.0, 0.0], [1.0, 1.0, -1.0], [-0.5, -0.5, 2.0]];
    let xs = array![[0.7, 0.7, 0.1]];
    let e = shapley_attributions(&f, bg.view(), xs.view(), &names(3), &ShapleyConfig::default()).unwrap();
    assert!((e.attributions[[0, 0]] - e.attributions[[0, 1]]).abs() < 1e-12);
}

#[test]
fn informative_feature_ranks_first() {
    let x = random_matrix(300, 8, 11);
    let labels: Vec<Label> = x
        .rows()
        .into_iter()
        .map(|r| if r[5] > 0.2 { Label::Cancer } else { Label::NonCancer })
        .collect();
    let m = gbdt_fit(
        x.view(),
        &labels,
        &GbdtConfig {
            n_trees: 30,
            ..Default::default()
        },
    )
    .unwrap();
    let bg = x.select(Axis(0), &(0..30).collect::<Vec<_>>());
    let xs = x.select(Axis(0), &(200..230).collect::<Vec<_>>());
    let cfg = ShapleyConfig {
        mode: ShapleyMode::MonteCarlo,
        n_permutations: 32,
        ..Default::default()
    };
    let e = shapley_attributions(|v| m.predict_proba(v), bg.view(), xs.view(), &names(8), &cfg).unwrap();
    let ranking = importance_ranking(&e);
    assert_eq!(ranking.len(), 8);
    assert_eq!(ranking[0].name, "x5");
    assert!(ranking.windows(2).all(|w| w[0].mean_abs >= w[1].mean_abs));
}
