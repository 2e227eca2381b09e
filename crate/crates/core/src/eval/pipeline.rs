//! Experiment pipelines: preprocessing arm × augmentation arm × classifier,
//! cross-validated or evaluated on a held-out test set.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{confusion, metrics_with_warnings, ConfusionCounts, MetricSet};
use crate::augment::{
    balance_matrix_with_smote, balance_with_gan, EllipseConfig, GanConfig, GanFillStats, SmoteConfig,
};
use crate::error::{Error, Result};
use crate::features::{extract_matrix, plan_windows, WindowSpec};
use crate::ingest::FoldPlan;
use crate::models::{gbdt_fit, plsda_fit, BoostedEnsemble, GbdtConfig, PlsdaConfig, PlsdaModel};
use crate::preprocess::{snv_values, SnvConfig};
use crate::types::{Dataset, Label, WavelengthGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocessing {
    Raw,
    Snv,
    SnvFeatures,
}

impl Preprocessing {
    pub const ALL: [Preprocessing; 3] = [Preprocessing::Raw, Preprocessing::Snv, Preprocessing::SnvFeatures];

    /// Arm letter: a, b or c.
    pub fn code(self) -> char {
        match self {
            Preprocessing::Raw => 'a',
            Preprocessing::Snv => 'b',
            Preprocessing::SnvFeatures => 'c',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preprocessing::Raw => "raw",
            Preprocessing::Snv => "snv",
            Preprocessing::SnvFeatures => "snv_features",
        }
    }
}

impl FromStr for Preprocessing {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preprocessing::ALL
            .into_iter()
            .find(|p| p.name() == s.replace('-', "_") || s.len() == 1 && p.code() == s.chars().next().unwrap())
            .ok_or_else(|| Error::invalid(format!("unknown preprocessing arm `{s}` (raw, snv, snv_features)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Augmentation {
    None,
    Smote,
    Gan,
}

impl Augmentation {
    pub const ALL: [Augmentation; 3] = [Augmentation::None, Augmentation::Smote, Augmentation::Gan];

    /// Arm numeral: I, II or III.
    pub fn code(self) -> &'static str {
        match self {
            Augmentation::None => "I",
            Augmentation::Smote => "II",
            Augmentation::Gan => "III",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Augmentation::None => "none",
            Augmentation::Smote => "smote",
            Augmentation::Gan => "gan",
        }
    }
}

impl FromStr for Augmentation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Augmentation::ALL
            .into_iter()
            .find(|a| a.name() == s || a.code() == s)
            .ok_or_else(|| Error::invalid(format!("unknown augmentation arm `{s}` (none, smote, gan)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Gbdt(GbdtConfig),
    Plsda(PlsdaConfig),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Gbdt(_) => "gbdt",
            ModelSpec::Plsda(_) => "plsda",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub preprocessing: Preprocessing,
    pub augmentation: Augmentation,
    pub model: ModelSpec,
    /// Used by the `snv_features` arm only.
    pub windows: WindowSpec,
    #[serde(default)]
    pub snv: SnvConfig,
    #[serde(default)]
    pub smote: SmoteConfig,
    #[serde(default)]
    pub gan: GanConfig,
    #[serde(default)]
    pub ellipse: EllipseConfig,
}

impl PipelineSpec {
    pub fn new(preprocessing: Preprocessing, augmentation: Augmentation, model: ModelSpec) -> Self {
        PipelineSpec {
            preprocessing,
            augmentation,
            model,
            windows: WindowSpec::new(5),
            snv: SnvConfig::default(),
            smote: SmoteConfig::default(),
            gan: GanConfig::default(),
            ellipse: EllipseConfig::default(),
        }
    }

    /// Arm label such as `III-c`.
    pub fn arm(&self) -> String {
        format!("{}-{}", self.augmentation.code(), self.preprocessing.code())
    }

    /// Row label used in result tables, e.g. `gbdt III-c`.
    pub fn label(&self) -> String {
        format!("{} {}", self.model.name(), self.arm())
    }

    /// Classifier input for every record of `dataset`.
    pub fn design_matrix(&self, dataset: &Dataset) -> Result<Array2<f64>> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let raw = dataset.spectra_matrix();
        if self.preprocessing == Preprocessing::Raw {
            return Ok(raw);
        }
        let mut normalized = raw;
        for (mut row, rec) in normalized.rows_mut().into_iter().zip(dataset.records()) {
            let v = snv_values(row.as_slice().expect("standard layout"), &self.snv).map_err(|e| match e {
                Error::ZeroVariance { .. } => Error::ZeroVariance {
                    id: Some(rec.id.clone()),
                },
                other => other,
            })?;
            row.iter_mut().zip(v).for_each(|(d, s)| *d = s);
        }
        if self.preprocessing == Preprocessing::Snv {
            return Ok(normalized);
        }
        Ok(extract_matrix(normalized.view(), dataset.grid(), &self.windows)?.values)
    }

    pub fn feature_names(&self, grid: &WavelengthGrid) -> Result<Vec<String>> {
        match self.preprocessing {
            Preprocessing::Raw | Preprocessing::Snv => Ok((0..grid.count).map(|i| grid.column_name(i)).collect()),
            Preprocessing::SnvFeatures => {
                plan_windows(grid.count, &self.windows)?;
                let probe = Array2::from_shape_fn((1, grid.count), |(_, j)| j as f64);
                Ok(extract_matrix(probe.view(), grid, &self.windows)?.column_names())
            }
        }
    }

    fn augmentation_key(&self) -> AugmentationKey {
        AugmentationKey {
            augmentation: self.augmentation,
            gan: (self.augmentation == Augmentation::Gan).then(|| (self.gan.clone(), self.ellipse)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct AugmentationKey {
    augmentation: Augmentation,
    gan: Option<(GanConfig, EllipseConfig)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedModel {
    Gbdt(BoostedEnsemble),
    Plsda(PlsdaModel),
}

impl FittedModel {
    pub fn fit(x: ArrayView2<f64>, labels: &[Label], spec: &ModelSpec) -> Result<FittedModel> {
        Ok(match spec {
            ModelSpec::Gbdt(cfg) => FittedModel::Gbdt(gbdt_fit(x, labels, cfg)?),
            ModelSpec::Plsda(cfg) => FittedModel::Plsda(plsda_fit(x, labels, cfg)?),
        })
    }

    /// Cancer probability (boosted trees) or regression output (PLS-DA).
    pub fn scores(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        match self {
            FittedModel::Gbdt(m) => m.predict_proba(x),
            FittedModel::Plsda(m) => m.scores(x),
        }
    }

    pub fn threshold(&self) -> f64 {
        match self {
            FittedModel::Gbdt(_) => 0.5,
            FittedModel::Plsda(m) => m.threshold,
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<Label>> {
        let t = self.threshold();
        Ok(self
            .scores(x)?
            .into_iter()
            .map(|s| if s >= t { Label::Cancer } else { Label::NonCancer })
            .collect())
    }
}

/// Training data after dataset-level augmentation.
#[derive(Debug, Clone)]
pub struct AugmentedTrain {
    pub dataset: Dataset,
    /// Ids of every record the augmentation step could see.
    pub visible_ids: BTreeSet<String>,
    pub gan_stats: Option<GanFillStats>,
}

/// Applies dataset-level augmentation. GAN synthetics are generated from raw
/// minority spectra and later pass through the arm's preprocessing like any
/// other record; SMOTE runs on the design matrix in [`fit_augmented`].
pub fn augment_train(train: &Dataset, spec: &PipelineSpec, gan_seed: crate::types::RngSeed) -> Result<AugmentedTrain> {
    let visible_ids = match spec.augmentation {
        Augmentation::None => BTreeSet::new(),
        _ => train.ids().map(str::to_string).collect(),
    };
    match spec.augmentation {
        Augmentation::Gan => {
            let gan = GanConfig {
                seed: gan_seed,
                ..spec.gan.clone()
            };
            let out = balance_with_gan(train, &gan, &spec.ellipse)?;
            Ok(AugmentedTrain {
                dataset: out.dataset,
                visible_ids,
                gan_stats: Some(out.stats),
            })
        }
        _ => Ok(AugmentedTrain {
            dataset: train.clone(),
            visible_ids,
            gan_stats: None,
        }),
    }
}

/// Builds the design matrix, applies SMOTE if requested and fits the model.
/// Returns the model and the number of SMOTE rows.
pub fn fit_augmented(
    train: &AugmentedTrain,
    spec: &PipelineSpec,
    smote_seed: crate::types::RngSeed,
) -> Result<(FittedModel, usize)> {
    let x = spec.design_matrix(&train.dataset)?;
    let y = train.dataset.labels();
    let (x, y, n_smote) = if spec.augmentation == Augmentation::Smote {
        let cfg = SmoteConfig {
            seed: smote_seed,
            ..spec.smote
        };
        balance_matrix_with_smote(x.view(), &y, &cfg)?
    } else {
        (x, y, 0)
    };
    Ok((FittedModel::fit(x.view(), &y, &spec.model)?, n_smote))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub spec: PipelineSpec,
    pub grid: WavelengthGrid,
    pub feature_names: Vec<String>,
    pub model: FittedModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    pub ids: Vec<String>,
    pub scores: Vec<f64>,
    pub labels: Vec<Label>,
}

impl TrainedPipeline {
    pub fn predict(&self, dataset: &Dataset) -> Result<Predictions> {
        if dataset.grid() != &self.grid {
            return Err(Error::GridMismatch {
                expected: self.grid.count,
                found: dataset.grid().count,
            });
        }
        let x = self.spec.design_matrix(dataset)?;
        let scores = self.model.scores(x.view())?;
        let t = self.model.threshold();
        Ok(Predictions {
            ids: dataset.ids().map(str::to_string).collect(),
            labels: scores
                .iter()
                .map(|&s| if s >= t { Label::Cancer } else { Label::NonCancer })
                .collect(),
            scores,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pipeline serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

/// Fits the whole pipeline on `train`, augmenting with the spec's own seeds.
pub fn fit_pipeline(train: &Dataset, spec: &PipelineSpec) -> Result<TrainedPipeline> {
    let aug = augment_train(train, spec, spec.gan.seed)?;
    let (model, _) = fit_augmented(&aug, spec, spec.smote.seed)?;
    Ok(TrainedPipeline {
        spec: spec.clone(),
        grid: *train.grid(),
        feature_names: spec.feature_names(train.grid())?,
        model,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_validation: usize,
    /// Synthetic rows added to this fold's training portion.
    pub n_synthetic: usize,
    pub counts: ConfusionCounts,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDescriptor {
    pub label: String,
    pub arm: String,
    pub preprocessing: Preprocessing,
    pub augmentation: Augmentation,
    pub model: String,
    pub spec: PipelineSpec,
}

impl ExperimentDescriptor {
    pub fn of(spec: &PipelineSpec) -> Self {
        ExperimentDescriptor {
            label: spec.label(),
            arm: spec.arm(),
            preprocessing: spec.preprocessing,
            augmentation: spec.augmentation,
            model: spec.model.name().to_string(),
            spec: spec.clone(),
        }
    }
}

/// Cross-validation result. Mean and standard deviation are taken over the
/// validation folds (std with n − 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub experiment: ExperimentDescriptor,
    /// Always `cv_validation`: the statistics describe validation folds.
    pub statistic: String,
    pub folds: Vec<FoldResult>,
    pub mean: MetricSet,
    pub std: MetricSet,
    pub warnings: Vec<String>,
    pub leakage_violations: usize,
}

impl EvalReport {
    pub fn summary(&self, metric: super::Metric) -> super::Summary {
        let values: Vec<f64> = self.folds.iter().map(|f| metric.of(&f.metrics)).collect();
        super::Summary::of(&values)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// One fold's augmented training portion and untouched validation fold.
#[derive(Debug, Clone)]
pub struct PreparedFold {
    pub fold: usize,
    pub train: AugmentedTrain,
    pub validation: Dataset,
    key: AugmentationKey,
}

/// Splits `train` by `plan` and runs dataset-level augmentation on each
/// training portion. The result can be reused by every pipeline that shares
/// the same augmentation settings (only model and feature settings vary).
pub fn prepare_folds(train: &Dataset, plan: &FoldPlan, spec: &PipelineSpec) -> Result<Vec<PreparedFold>> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let wrap = |e: Error| Error::Fold {
                fold,
                source: Box::new(e),
            };
            let (tr, va) = plan.fold_indices(train, fold).map_err(wrap)?;
            let validation = train.select(&va);
            if validation.records().iter().any(|r| r.synthetic) {
                return Err(wrap(Error::invalid("validation fold contains synthetic records")));
            }
            let portion = train.select(&tr);
            let aug = augment_train(&portion, spec, spec.gan.seed.derive(fold as u64 + 1)).map_err(wrap)?;
            Ok(PreparedFold {
                fold,
                train: aug,
                validation,
                key: spec.augmentation_key(),
            })
        })
        .collect()
}

/// Number of validation ids the augmentation step saw.
pub fn leakage_count(fold: &PreparedFold) -> usize {
    fold.validation
        .ids()
        .filter(|id| fold.train.visible_ids.contains(*id))
        .count()
}

/// Fits and scores `spec` on already prepared folds.
pub fn run_prepared(folds: &[PreparedFold], spec: &PipelineSpec) -> Result<EvalReport> {
    let key = spec.augmentation_key();
    if folds.iter().any(|f| f.key != key) {
        return Err(Error::invalid(
            "prepared folds were built with different augmentation settings",
        ));
    }
    let violations: usize = folds.iter().map(leakage_count).sum();
    if violations > 0 {
        return Err(Error::invalid(format!(
            "augmentation saw {violations} validation records"
        )));
    }
    let results: Vec<(FoldResult, Vec<String>)> = folds
        .par_iter()
        .map(|f| {
            let wrap = |e: Error| Error::Fold {
                fold: f.fold,
                source: Box::new(e),
            };
            let (model, n_smote) =
                fit_augmented(&f.train, spec, spec.smote.seed.derive(f.fold as u64 + 1)).map_err(wrap)?;
            let x = spec.design_matrix(&f.validation).map_err(wrap)?;
            let pred = model.predict(x.view()).map_err(wrap)?;
            let counts = confusion(&f.validation.labels(), &pred).map_err(wrap)?;
            let (m, warnings) = metrics_with_warnings(&counts);
            let n_gan = f.train.dataset.records().iter().filter(|r| r.synthetic).count();
            Ok((
                FoldResult {
                    fold: f.fold,
                    n_train: f.train.dataset.len() - n_gan,
                    n_validation: f.validation.len(),
                    n_synthetic: n_gan + n_smote,
                    counts,
                    metrics: m,
                },
                warnings.into_iter().map(|w| format!("fold {}: {w}", f.fold)).collect(),
            ))
        })
        .collect::<Result<_>>()?;
    let (folds, warnings): (Vec<FoldResult>, Vec<Vec<String>>) = results.into_iter().unzip();
    let agg = |pick: fn(&MetricSet) -> f64| {
        let v: Vec<f64> = folds.iter().map(|f| pick(&f.metrics)).collect();
        super::Summary::of(&v)
    };
    let s = [
        agg(|m| m.acc),
        agg(|m| m.bacc),
        agg(|m| m.recall),
        agg(|m| m.precision),
        agg(|m| m.f_score),
        agg(|m| m.specificity),
    ];
    let mean = MetricSet {
        acc: s[0].mean,
        bacc: s[1].mean,
        recall: s[2].mean,
        precision: s[3].mean,
        f_score: s[4].mean,
        specificity: s[5].mean,
    };
    let std = MetricSet {
        acc: s[0].std,
        bacc: s[1].std,
        recall: s[2].std,
        precision: s[3].std,
        f_score: s[4].std,
        specificity: s[5].std,
    };
    Ok(EvalReport {
        experiment: ExperimentDescriptor::of(spec),
        statistic: "cv_validation".into(),
        folds,
        mean,
        std,
        warnings: warnings.concat(),
        leakage_violations: violations,
    })
}

pub fn run_cv(train: &Dataset, plan: &FoldPlan, spec: &PipelineSpec) -> Result<EvalReport> {
    let prepared = prepare_folds(train, plan, spec)?;
    run_prepared(&prepared, spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestEvaluation {
    pub experiment: ExperimentDescriptor,
    pub counts: ConfusionCounts,
    pub metrics: MetricSet,
    pub warnings: Vec<String>,
}

/// Trains on all of `train` (augmented) and scores `test` once.
pub fn evaluate_test(
    train: &Dataset,
    test: &Dataset,
    spec: &PipelineSpec,
) -> Result<(TestEvaluation, TrainedPipeline)> {
    let train_ids: BTreeSet<&str> = train.ids().collect();
    let shared = test.ids().filter(|id| train_ids.contains(id)).count();
    if shared > 0 {
        return Err(Error::invalid(format!(
            "{shared} test ids also appear in the training set"
        )));
    }
    if test.records().iter().any(|r| r.synthetic) {
        return Err(Error::invalid("test set contains synthetic records"));
    }
    let pipeline = fit_pipeline(train, spec)?;
    let pred = pipeline.predict(test)?;
    let counts = confusion(&test.labels(), &pred.labels)?;
    let (m, warnings) = metrics_with_warnings(&counts);
    Ok((
        TestEvaluation {
            experiment: ExperimentDescriptor::of(spec),
            counts,
            metrics: m,
            warnings,
        },
        pipeline,
    ))
}

impl fmt::Display for Preprocessing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Augmentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
