//! Experiment configuration: a JSON file merged over defaults, then command
//! line overrides.

use std::path::{Path, PathBuf};

use nirsc::augment::{EllipseConfig, GanConfig, SmoteConfig};
use nirsc::eval::{Augmentation, ModelSpec, PipelineSpec, Preprocessing};
use nirsc::features::WindowSpec;
use nirsc::models::{GbdtConfig, PlsdaConfig};
use nirsc::preprocess::SnvConfig;
use nirsc::tune::Sampler;
use nirsc::{Error, Result, RngSeed};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Gbdt,
    Plsda,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TunerSettings {
    pub budget: usize,
    pub sampler: Sampler,
}

impl Default for TunerSettings {
    fn default() -> Self {
        TunerSettings {
            budget: 200,
            sampler: Sampler::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    pub preprocessing: Preprocessing,
    pub augmentation: Augmentation,
    pub model: ModelKind,
    /// `None` follows the preprocessing arm; `false` is rejected for the SNV arms.
    pub apply_snv: Option<bool>,
    pub gbdt: GbdtConfig,
    pub plsda: PlsdaConfig,
    pub windows: WindowSpec,
    pub snv: SnvConfig,
    pub smote: SmoteConfig,
    pub gan: GanConfig,
    pub ellipse: EllipseConfig,
    pub tuner: TunerSettings,
    pub folds: usize,
    /// Master seed; every stage seed left unset is derived from it.
    pub seed: u64,
    pub fold_seed: Option<u64>,
    pub smote_seed: Option<u64>,
    pub gan_seed: Option<u64>,
    pub model_seed: Option<u64>,
    pub tuner_seed: Option<u64>,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: None,
            preprocessing: Preprocessing::SnvFeatures,
            augmentation: Augmentation::None,
            model: ModelKind::Gbdt,
            apply_snv: None,
            gbdt: GbdtConfig::default(),
            plsda: PlsdaConfig::default(),
            windows: WindowSpec::new(5),
            snv: SnvConfig::default(),
            smote: SmoteConfig::default(),
            gan: GanConfig::default(),
            ellipse: EllipseConfig::default(),
            tuner: TunerSettings::default(),
            folds: 5,
            seed: 0,
            fold_seed: None,
            smote_seed: None,
            gan_seed: None,
            model_seed: None,
            tuner_seed: None,
            output: None,
        }
    }
}

/// Recursively overlays `patch` onto `base`; objects merge key by key.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

impl ExperimentConfig {
    /// Defaults, overlaid with the JSON file at `path` when given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let patch: Value = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        let mut value = serde_json::to_value(Self::default()).expect("config serializes");
        merge(&mut value, patch);
        serde_json::from_value(value).map_err(|e| Error::json(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        match (self.preprocessing, self.apply_snv) {
            (Preprocessing::Snv | Preprocessing::SnvFeatures, Some(false)) => Err(Error::invalid(format!(
                "the {} arm requires SNV; remove apply_snv=false",
                self.preprocessing.name()
            ))),
            (Preprocessing::Raw, Some(true)) => Err(Error::invalid("the raw arm does not apply SNV; pick the snv arm")),
            _ if self.folds < 2 => Err(Error::invalid("folds must be at least 2")),
            _ => Ok(()),
        }
    }

    fn stage_seed(&self, explicit: Option<u64>, stream: u64) -> RngSeed {
        explicit
            .map(RngSeed)
            .unwrap_or_else(|| RngSeed(self.seed).derive(stream))
    }

    pub fn fold_seed(&self) -> RngSeed {
        self.stage_seed(self.fold_seed, 0)
    }

    pub fn tuner_seed(&self) -> RngSeed {
        self.stage_seed(self.tuner_seed, 4)
    }

    /// Pipeline specification with every stage seed resolved.
    pub fn pipeline_spec(&self) -> Result<PipelineSpec> {
        self.validate()?;
        let model = match self.model {
            ModelKind::Gbdt => ModelSpec::Gbdt(GbdtConfig {
                seed: self.stage_seed(self.model_seed, 3),
                ..self.gbdt.clone()
            }),
            ModelKind::Plsda => ModelSpec::Plsda(self.plsda),
        };
        let mut spec = PipelineSpec::new(self.preprocessing, self.augmentation, model);
        spec.windows = self.windows.clone();
        spec.snv = self.snv;
        spec.smote = SmoteConfig {
            seed: self.stage_seed(self.smote_seed, 1),
            ..self.smote
        };
        spec.gan = GanConfig {
            seed: self.stage_seed(self.gan_seed, 2),
            ..self.gan.clone()
        };
        spec.ellipse = self.ellipse;
        Ok(spec)
    }

    pub fn dataset_path(&self) -> Result<&Path> {
        existing(self.dataset.as_deref(), "dataset")
    }

    pub fn output_dir(&self) -> Result<&Path> {
        self.output
            .as_deref()
            .ok_or_else(|| Error::invalid("no output directory given (--output or \"output\" in the config)"))
    }
}

/// The path, provided it was given and exists.
pub fn existing<'a>(path: Option<&'a Path>, what: &str) -> Result<&'a Path> {
    let path = path.ok_or_else(|| Error::invalid(format!("no {what} path given")))?;
    if !path.exists() {
        return Err(Error::invalid(format!("{what} `{}` does not exist", path.display())));
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"augmentation":"gan","gbdt":{"n_trees":7},"seed":3}"#).unwrap();
        let c = ExperimentConfig::load(Some(&path)).unwrap();
        assert_eq!(c.augmentation, Augmentation::Gan);
        assert_eq!(c.gbdt.n_trees, 7);
        assert_eq!(c.gbdt.max_depth, GbdtConfig::default().max_depth);
        assert_eq!(c.seed, 3);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"modle":"gbdt"}"#).unwrap();
        let err = ExperimentConfig::load(Some(&path)).unwrap_err();
        assert_eq!(err.kind_name(), "InvalidConfig");
    }

    #[test]
    fn feature_arm_cannot_skip_snv() {
        let c = ExperimentConfig {
            apply_snv: Some(false),
            ..Default::default()
        };
        assert!(matches!(c.pipeline_spec(), Err(Error::InvalidConfig(_))));
        let raw = ExperimentConfig {
            preprocessing: Preprocessing::Raw,
            apply_snv: Some(false),
            ..Default::default()
        };
        assert!(raw.pipeline_spec().is_ok());
    }

    #[test]
    fn explicit_seeds_win_over_derived_ones() {
        let c = ExperimentConfig {
            seed: 9,
            gan_seed: Some(42),
            ..Default::default()
        };
        let spec = c.pipeline_spec().unwrap();
        assert_eq!(spec.gan.seed, RngSeed(42));
        assert_eq!(spec.smote.seed, RngSeed(9).derive(1));
    }
}
