use nirsc::augment::GanConfig;
use nirsc::eval::{
    evaluate_test, fit_pipeline, leakage_count, prepare_folds, render_csv, render_markdown, render_text, run_cv,
    run_prepared, Augmentation, EvalReport, ModelSpec, PipelineSpec, Preprocessing, TrainedPipeline,
};
use nirsc::ingest::{make_folds, stratified_split, SplitSpec};
use nirsc::models::{GbdtConfig, PlsdaConfig};
use nirsc::synth::{generate, SynthSpec};
use nirsc::tune::{tune_pipeline, Dimension, SearchSpace, TunerConfig};
use nirsc::{Dataset, Error, RngSeed};

fn reference_split() -> (Dataset, Dataset) {
    let d = generate(&SynthSpec::default()).unwrap();
    stratified_split(&d, &SplitSpec::default()).unwrap()
}

fn quick_gbdt() -> ModelSpec {
    ModelSpec::Gbdt(GbdtConfig {
        n_trees: 20,
        max_depth: 3,
        ..Default::default()
    })
}

fn quick_gan() -> GanConfig {
    GanConfig {
        epochs: 60,
        ..Default::default()
    }
}

#[test]
fn five_folds_give_five_metric_sets() {
    let (train, _) = reference_split();
    let plan = make_folds(&train, 5, RngSeed(1)).unwrap();
    let spec = PipelineSpec::new(Preprocessing::Snv, Augmentation::None, quick_gbdt());
    let r = run_cv(&train, &plan, &spec).unwrap();
    assert_eq!(r.folds.len(), 5);
    assert_eq!(r.folds.iter().map(|f| f.n_validation).sum::<usize>(), train.len());
    assert_eq!(r.statistic, "cv_validation");
    assert_eq!(r.experiment.label, "gbdt I-b");
    assert!(r.mean.bacc > 0.6);
}

#[test]
fn majority_classifier_scores_half_bacc() {
    let (train, _) = reference_split();
    let plan = make_folds(&train, 5, RngSeed(1)).unwrap();
    let spec = PipelineSpec::new(
        Preprocessing::Raw,
        Augmentation::None,
        ModelSpec::Plsda(PlsdaConfig::with_components(0)),
    );
    let r = run_cv(&train, &plan, &spec).unwrap();
    assert!(r.folds.iter().all(|f| f.metrics.bacc == 0.5 && f.metrics.recall == 0.0));
    assert!(!r.warnings.is_empty());
}

#[test]
fn augmentation_never_sees_validation_records() {
    let (train, _) = reference_split();
    let plan = make_folds(&train, 5, RngSeed(2)).unwrap();
    for aug in [Augmentation::None, Augmentation::Smote, Augmentation::Gan] {
        let mut spec = PipelineSpec::new(Preprocessing::SnvFeatures, aug, quick_gbdt());
        spec.gan = quick_gan();
        let folds = prepare_folds(&train, &plan, &spec).unwrap();
        assert!(folds.iter().all(|f| leakage_count(f) == 0));
        let r = run_prepared(&folds, &spec).unwrap();
        assert_eq!(r.leakage_violations, 0);
        if aug != Augmentation::None {
            assert!(r.folds.iter().all(|f| f.n_synthetic > 0));
        }
    }
}

#[test]
fn prepared_folds_reject_other_augmentation() {
    let (train, _) = reference_split();
    let plan = make_folds(&train, 3, RngSeed(2)).unwrap();
    let spec = PipelineSpec::new(Preprocessing::Snv, Augmentation::None, quick_gbdt());
    let folds = prepare_folds(&train, &plan, &spec).unwrap();
    let other = PipelineSpec {
        augmentation: Augmentation::Gan,
        ..spec
    };
    assert!(matches!(run_prepared(&folds, &other), Err(Error::InvalidConfig(_))));
}

#[test]
fn test_evaluation_requires_disjoint_sets() {
    let (train, test) = reference_split();
    let spec = PipelineSpec::new(Preprocessing::Snv, Augmentation::Smote, quick_gbdt());
    assert!(matches!(
        evaluate_test(&train, &train, &spec),
        Err(Error::InvalidConfig(_))
    ));
    let (eval, pipeline) = evaluate_test(&train, &test, &spec).unwrap();
    assert_eq!(eval.counts.total(), 195);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    pipeline.save(&path).unwrap();
    let loaded = TrainedPipeline::load(&path).unwrap();
    assert_eq!(loaded.predict(&test).unwrap(), pipeline.predict(&test).unwrap());
}

#[test]
fn gan_pipeline_is_reproducible() {
    let (train, test) = reference_split();
    let mut spec = PipelineSpec::new(Preprocessing::SnvFeatures, Augmentation::Gan, quick_gbdt());
    spec.gan = quick_gan();
    let a = fit_pipeline(&train, &spec).unwrap();
    let b = fit_pipeline(&train, &spec).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.predict(&test).unwrap(), b.predict(&test).unwrap());
}

#[test]
fn tables_have_one_row_per_experiment() {
    let (train, _) = reference_split();
    let plan = make_folds(&train, 5, RngSeed(3)).unwrap();
    let reports: Vec<EvalReport> = [Preprocessing::Raw, Preprocessing::Snv]
        .into_iter()
        .map(|p| run_cv(&train, &plan, &PipelineSpec::new(p, Augmentation::None, quick_gbdt())).unwrap())
        .collect();
    let text = render_text(&reports);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("Algorithm"));
    assert!(lines[2].starts_with("gbdt I-a"));
    assert!(lines[3].contains(" ± "));
    assert_eq!(render_csv(&reports).lines().count(), 3);
    assert_eq!(render_markdown(&reports).lines().count(), 4);
}

#[test]
fn tuning_reuses_prepared_folds() {
    let (train, _) = reference_split();
    let plan = make_folds(&train, 3, RngSeed(4)).unwrap();
    let base = PipelineSpec::new(Preprocessing::SnvFeatures, Augmentation::None, quick_gbdt());
    let space = SearchSpace::new()
        .with(
            "window_count",
            Dimension::Int {
                low: 5,
                high: 10,
                step: 5,
            },
        )
        .with(
            "max_depth",
            Dimension::Int {
                low: 1,
                high: 3,
                step: 1,
            },
        );
    let cfg = TunerConfig {
        budget: 4,
        seed: RngSeed(5),
        ..Default::default()
    };
    let t = tune_pipeline(&train, &plan, &base, &space, &cfg, nirsc::eval::Metric::Bacc).unwrap();
    assert_eq!(t.result.history.len(), 4);
    assert_eq!(t.best_report.mean.bacc, t.result.best.objective);
    assert_eq!(run_cv(&train, &plan, &t.best_spec).unwrap(), t.best_report);
}
