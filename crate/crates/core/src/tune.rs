//! Hyperparameter search with a fixed trial budget.
//!
//! The first `max(10, ⌈0.2·budget⌉)` trials sample uniformly. Later trials
//! split the history at the top-γ quantile of the objective, draw 24
//! candidates from kernels around the good trials and keep the candidate
//! with the largest good/bad density ratio.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{prepare_folds, run_prepared, EvalReport, Metric, ModelSpec, PipelineSpec};
use crate::features::FeatureMask;
use crate::ingest::FoldPlan;
use crate::types::{Dataset, RngSeed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dimension {
    /// Values `low, low + step, …` up to `high`.
    Int {
        low: i64,
        high: i64,
        step: i64,
    },
    Real {
        low: f64,
        high: f64,
    },
    /// Uniform in log space; bounds must be positive.
    LogReal {
        low: f64,
        high: f64,
    },
    Categorical {
        options: Vec<String>,
    },
}

impl Dimension {
    fn validate(&self, name: &str) -> Result<()> {
        let ok = match self {
            Dimension::Int { low, high, step } => low <= high && *step >= 1,
            Dimension::Real { low, high } => low.is_finite() && high.is_finite() && low <= high,
            Dimension::LogReal { low, high } => *low > 0.0 && high.is_finite() && low <= high,
            Dimension::Categorical { options } => !options.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("dimension `{name}` has invalid bounds")))
        }
    }

    fn int_grid_max(low: i64, high: i64, step: i64) -> i64 {
        low + (high - low) / step * step
    }

    /// Maps a unit-interval coordinate to a value.
    fn value_at(&self, u: f64) -> ParamValue {
        let u = u.clamp(0.0, 1.0);
        match self {
            Dimension::Int { low, high, step } => {
                let top = Self::int_grid_max(*low, *high, *step);
                let slots = (top - low) / step;
                let k = ((u * (slots + 1) as f64).floor() as i64).min(slots);
                ParamValue::Int(low + k * step)
            }
            Dimension::Real { low, high } => ParamValue::Real(low + u * (high - low)),
            Dimension::LogReal { low, high } => ParamValue::Real((low.ln() + u * (high.ln() - low.ln())).exp()),
            Dimension::Categorical { options } => {
                let k = ((u * options.len() as f64).floor() as usize).min(options.len() - 1);
                ParamValue::Cat(options[k].clone())
            }
        }
    }

    /// Position of a value on the unit interval (slot centers for integers).
    fn unit_of(&self, v: &ParamValue) -> f64 {
        match (self, v) {
            (Dimension::Int { low, high, step }, ParamValue::Int(x)) => {
                let slots = (Self::int_grid_max(*low, *high, *step) - low) / step;
                ((x - low) / step) as f64 / (slots + 1) as f64 + 0.5 / (slots + 1) as f64
            }
            (Dimension::Real { low, high }, ParamValue::Real(x)) => {
                if high > low {
                    (x - low) / (high - low)
                } else {
                    0.5
                }
            }
            (Dimension::LogReal { low, high }, ParamValue::Real(x)) if high > low => {
                (x.ln() - low.ln()) / (high.ln() - low.ln())
            }
            _ => 0.5,
        }
    }

    pub fn contains(&self, v: &ParamValue) -> bool {
        match (self, v) {
            (Dimension::Int { low, high, step }, ParamValue::Int(x)) => x >= low && x <= high && (x - low) % step == 0,
            (Dimension::Real { low, high }, ParamValue::Real(x))
            | (Dimension::LogReal { low, high }, ParamValue::Real(x)) => x >= low && x <= high,
            (Dimension::Categorical { options }, ParamValue::Cat(c)) => options.contains(c),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Cat(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(v) => Some(*v as f64),
            ParamValue::Real(v) => Some(*v),
            ParamValue::Cat(_) => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v}"),
            ParamValue::Cat(v) => f.write_str(v),
        }
    }
}

pub type Point = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dimensions: Vec<(String, Dimension)>,
}

impl SearchSpace {
    pub fn new() -> Self {
        SearchSpace::default()
    }

    pub fn with(mut self, name: &str, dim: Dimension) -> Self {
        self.dimensions.push((name.to_string(), dim));
        self
    }

    pub fn merged(mut self, other: SearchSpace) -> Self {
        self.dimensions.extend(other.dimensions);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimensions.is_empty() {
            return Err(Error::invalid("search space has no dimensions"));
        }
        for (i, (name, dim)) in self.dimensions.iter().enumerate() {
            if self.dimensions[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::invalid(format!("dimension `{name}` appears twice")));
            }
            dim.validate(name)?;
        }
        Ok(())
    }

    pub fn contains(&self, point: &Point) -> bool {
        point.len() == self.dimensions.len()
            && self
                .dimensions
                .iter()
                .all(|(n, d)| point.get(n).is_some_and(|v| d.contains(v)))
    }

    /// Boosted-tree hyperparameters.
    pub fn gbdt() -> Self {
        SearchSpace::new()
            .with(
                "n_trees",
                Dimension::Int {
                    low: 10,
                    high: 100,
                    step: 1,
                },
            )
            .with("learning_rate", Dimension::LogReal { low: 0.01, high: 1.0 })
            .with(
                "max_depth",
                Dimension::Int {
                    low: 1,
                    high: 15,
                    step: 1,
                },
            )
            .with(
                "max_leaves",
                Dimension::Int {
                    low: 20,
                    high: 5000,
                    step: 20,
                },
            )
            .with("class_weight", Dimension::Real { low: 1.0, high: 25.0 })
            .with("subsample", Dimension::Real { low: 0.1, high: 1.0 })
            .with("colsample_by_tree", Dimension::Real { low: 0.5, high: 1.0 })
            .with("l1_alpha", Dimension::Real { low: 0.0, high: 20.0 })
            .with("l2_lambda", Dimension::Real { low: 0.0, high: 20.0 })
    }

    /// Window-feature settings for the `snv_features` arm.
    pub fn windows() -> Self {
        SearchSpace::new()
            .with(
                "window_count",
                Dimension::Int {
                    low: 5,
                    high: 50,
                    step: 1,
                },
            )
            .with("overlap_fraction", Dimension::Real { low: 0.0, high: 0.5 })
            .with(
                "feature_mask",
                Dimension::Categorical {
                    options: FeatureMask::PRESETS.iter().map(|s| s.to_string()).collect(),
                },
            )
    }

    pub fn plsda() -> Self {
        SearchSpace::new().with(
            "n_components",
            Dimension::Int {
                low: 1,
                high: 20,
                step: 1,
            },
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampler {
    Random,
    DensityRatio { gamma: f64, candidates: usize },
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler::DensityRatio {
            gamma: 0.25,
            candidates: 24,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunerConfig {
    pub budget: usize,
    pub seed: RngSeed,
    #[serde(default)]
    pub sampler: Sampler,
}

impl Default for TunerConfig {
    fn default() -> Self {
        TunerConfig {
            budget: 200,
            seed: RngSeed(0),
            sampler: Sampler::default(),
        }
    }
}

impl TunerConfig {
    /// Number of leading uniform trials.
    pub fn startup_trials(&self) -> usize {
        10.max((self.budget as f64 * 0.2).ceil() as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub point: Point,
    pub objective: f64,
    pub seed: RngSeed,
}

fn uniform_point(space: &SearchSpace, rng: &mut impl Rng) -> Point {
    space
        .dimensions
        .iter()
        .map(|(n, d)| (n.clone(), d.value_at(rng.random::<f64>())))
        .collect()
}

/// Good/bad kernel model of one numeric dimension on the unit interval: one
/// Gaussian per observation plus a broad prior component centered at 0.5.
struct Kernel {
    centers: Vec<f64>,
    widths: Vec<f64>,
}

impl Kernel {
    fn new(observed: Vec<f64>) -> Self {
        let n = observed.len();
        let floor = 1.0 / (n as f64 + 1.0).min(100.0);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| observed[a].total_cmp(&observed[b]).then(a.cmp(&b)));
        let mut widths = vec![0.0; n];
        for (k, &i) in order.iter().enumerate() {
            let lo = if k == 0 { 0.0 } else { observed[order[k - 1]] };
            let hi = if k + 1 == n { 1.0 } else { observed[order[k + 1]] };
            widths[i] = (observed[i] - lo).max(hi - observed[i]).clamp(floor, 1.0);
        }
        let mut centers = observed;
        centers.push(0.5);
        widths.push(1.0);
        Kernel { centers, widths }
    }

    fn density(&self, u: f64) -> f64 {
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        self.centers
            .iter()
            .zip(&self.widths)
            .map(|(c, h)| (-0.5 * ((u - c) / h).powi(2)).exp() / (h * norm))
            .sum::<f64>()
            / self.centers.len() as f64
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        let k = rng.random_range(0..self.centers.len());
        let z: f64 = rng.sample(StandardNormal);
        let mut u = (self.centers[k] + self.widths[k] * z).abs();
        while u > 1.0 {
            u = (2.0 - u).abs();
        }
        u
    }
}

fn categorical_probs(options: &[String], values: &[&ParamValue]) -> Vec<f64> {
    let mut counts = vec![1.0; options.len()];
    for v in values {
        if let ParamValue::Cat(c) = v {
            if let Some(i) = options.iter().position(|o| o == c) {
                counts[i] += 1.0;
            }
        }
    }
    let total: f64 = counts.iter().sum();
    counts.into_iter().map(|c| c / total).collect()
}

fn ratio_point(
    space: &SearchSpace,
    history: &[TrialRecord],
    gamma: f64,
    candidates: usize,
    rng: &mut impl Rng,
) -> Point {
    let mut order: Vec<&TrialRecord> = history.iter().collect();
    order.sort_by(|a, b| b.objective.total_cmp(&a.objective).then(a.trial.cmp(&b.trial)));
    let n_good = ((gamma * order.len() as f64).ceil() as usize).clamp(1, order.len().saturating_sub(1).max(1));
    let (good, bad) = order.split_at(n_good);
    let bad: &[&TrialRecord] = if bad.is_empty() { good } else { bad };

    let mut best: Option<(f64, Point)> = None;
    for _ in 0..candidates.max(1) {
        let mut point = Point::new();
        let mut log_ratio = 0.0;
        for (name, dim) in &space.dimensions {
            let gv: Vec<&ParamValue> = good.iter().filter_map(|t| t.point.get(name)).collect();
            let bv: Vec<&ParamValue> = bad.iter().filter_map(|t| t.point.get(name)).collect();
            let value = match dim {
                Dimension::Categorical { options } => {
                    let pg = categorical_probs(options, &gv);
                    let pb = categorical_probs(options, &bv);
                    let r: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut k = options.len() - 1;
                    for (i, p) in pg.iter().enumerate() {
                        acc += p;
                        if r < acc {
                            k = i;
                            break;
                        }
                    }
                    log_ratio += (pg[k] / pb[k]).ln();
                    ParamValue::Cat(options[k].clone())
                }
                _ => {
                    let good_u: Vec<f64> = gv.iter().map(|v| dim.unit_of(v)).collect();
                    let bad_u: Vec<f64> = bv.iter().map(|v| dim.unit_of(v)).collect();
                    let lk = Kernel::new(good_u);
                    let bk = Kernel::new(bad_u);
                    let v = dim.value_at(lk.sample(rng));
                    let uu = dim.unit_of(&v);
                    log_ratio += (lk.density(uu) / bk.density(uu)).ln();
                    v
                }
            };
            point.insert(name.clone(), value);
        }
        if best.as_ref().is_none_or(|(r, _)| log_ratio > *r) {
            best = Some((log_ratio, point));
        }
    }
    best.expect("at least one candidate").1
}

/// Next point to evaluate given the trials so far. Trial `t` uses its own
/// sub-stream of `config.seed`.
pub fn sample_point(space: &SearchSpace, config: &TunerConfig, history: &[TrialRecord]) -> Result<Point> {
    space.validate()?;
    let trial = history.len();
    let mut rng = config.seed.derive(trial as u64).rng();
    Ok(match config.sampler {
        Sampler::DensityRatio { gamma, candidates } if trial >= config.startup_trials() && history.len() >= 2 => {
            if !(gamma > 0.0 && gamma < 1.0) {
                return Err(Error::invalid("gamma must lie in (0, 1)"));
            }
            ratio_point(space, history, gamma, candidates, &mut rng)
        }
        _ => uniform_point(space, &mut rng),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best: TrialRecord,
    pub history: Vec<TrialRecord>,
}

impl TuneResult {
    /// CSV with columns trial, params (JSON), objective.
    pub fn history_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["trial", "params", "objective"])
            .expect("in-memory write");
        for t in &self.history {
            let params = serde_json::to_string(&t.point).expect("point serializes");
            w.write_record([t.trial.to_string(), params, format!("{}", t.objective)])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn best_json(&self) -> String {
        serde_json::to_string_pretty(&self.best).expect("trial serializes")
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let hist = dir.join("history.csv");
        std::fs::write(&hist, self.history_csv()).map_err(|e| Error::io(&hist, e))?;
        let best = dir.join("best.json");
        std::fs::write(&best, self.best_json()).map_err(|e| Error::io(&best, e))
    }
}

/// Runs exactly `budget` trials, maximizing `objective(point, trial_seed)`.
/// The best trial is the earliest one with the largest objective.
pub fn optimize(
    space: &SearchSpace,
    config: &TunerConfig,
    mut objective: impl FnMut(&Point, RngSeed) -> Result<f64>,
) -> Result<TuneResult> {
    space.validate()?;
    if config.budget == 0 {
        return Err(Error::invalid("budget must be at least 1"));
    }
    let mut history: Vec<TrialRecord> = Vec::with_capacity(config.budget);
    for trial in 0..config.budget {
        let point = sample_point(space, config, &history)?;
        let seed = config.seed.derive(trial as u64);
        let wrap = |e: Error| Error::Trial {
            trial,
            source: Box::new(e),
        };
        let value = objective(&point, seed).map_err(wrap)?;
        if !value.is_finite() {
            return Err(wrap(Error::invalid("objective is not finite")));
        }
        history.push(TrialRecord {
            trial,
            point,
            objective: value,
            seed,
        });
    }
    let best = history
        .iter()
        .fold(None::<&TrialRecord>, |b, t| match b {
            Some(b) if b.objective >= t.objective => Some(b),
            _ => Some(t),
        })
        .expect("budget >= 1")
        .clone();
    Ok(TuneResult { best, history })
}

fn real(point: &Point, name: &str) -> Option<f64> {
    point.get(name).and_then(ParamValue::as_f64)
}

fn count(point: &Point, name: &str) -> Result<Option<usize>> {
    match real(point, name) {
        None => Ok(None),
        Some(v) if v >= 0.0 && v.fract() == 0.0 => Ok(Some(v as usize)),
        Some(v) => Err(Error::invalid(format!(
            "`{name}` must be a non-negative integer, got {v}"
        ))),
    }
}

/// Copies the point's values into a pipeline spec. Unknown names are rejected.
pub fn configure_pipeline(base: &PipelineSpec, point: &Point) -> Result<PipelineSpec> {
    let mut spec = base.clone();
    for (name, value) in point {
        match (name.as_str(), &mut spec.model) {
            ("window_count", _) => spec.windows.window_count = count(point, name)?.expect("numeric"),
            ("overlap_fraction", _) => spec.windows.overlap_fraction = real(point, name).expect("numeric"),
            ("feature_mask", _) => match value {
                ParamValue::Cat(p) => spec.windows.feature_mask = FeatureMask::preset(p)?,
                _ => return Err(Error::invalid("feature_mask must be a preset name")),
            },
            ("n_trees", ModelSpec::Gbdt(c)) => c.n_trees = count(point, name)?.expect("numeric"),
            ("learning_rate", ModelSpec::Gbdt(c)) => c.learning_rate = real(point, name).expect("numeric"),
            ("max_depth", ModelSpec::Gbdt(c)) => c.max_depth = count(point, name)?.expect("numeric"),
            ("max_leaves", ModelSpec::Gbdt(c)) => c.max_leaves = count(point, name)?.expect("numeric"),
            ("class_weight", ModelSpec::Gbdt(c)) => c.class_weight = real(point, name).expect("numeric"),
            ("subsample", ModelSpec::Gbdt(c)) => c.subsample = real(point, name).expect("numeric"),
            ("colsample_by_tree", ModelSpec::Gbdt(c)) => c.colsample_by_tree = real(point, name).expect("numeric"),
            ("l1_alpha", ModelSpec::Gbdt(c)) => c.l1_alpha = real(point, name).expect("numeric"),
            ("l2_lambda", ModelSpec::Gbdt(c)) => c.l2_lambda = real(point, name).expect("numeric"),
            ("n_components", ModelSpec::Plsda(c)) => c.n_components = count(point, name)?.expect("numeric"),
            _ => {
                return Err(Error::invalid(format!(
                    "parameter `{name}` does not apply to this pipeline"
                )))
            }
        }
    }
    Ok(spec)
}

/// Default search space for a pipeline: model hyperparameters plus window
/// settings for the `snv_features` arm.
pub fn default_space(spec: &PipelineSpec) -> SearchSpace {
    let model = match spec.model {
        ModelSpec::Gbdt(_) => SearchSpace::gbdt(),
        ModelSpec::Plsda(_) => SearchSpace::plsda(),
    };
    if spec.preprocessing == crate::eval::Preprocessing::SnvFeatures {
        model.merged(SearchSpace::windows())
    } else {
        model
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineTuning {
    pub result: TuneResult,
    pub best_spec: PipelineSpec,
    pub best_report: EvalReport,
}

/// Tunes `base` by cross-validation on `train`, maximizing the mean of
/// `metric` over folds. Augmentation runs once per fold and is shared by all
/// trials.
pub fn tune_pipeline(
    train: &Dataset,
    plan: &FoldPlan,
    base: &PipelineSpec,
    space: &SearchSpace,
    config: &TunerConfig,
    metric: Metric,
) -> Result<PipelineTuning> {
    let prepared = prepare_folds(train, plan, base)?;
    let mut best: Option<(f64, PipelineSpec, EvalReport)> = None;
    let result = optimize(space, config, |point, _| {
        let spec = configure_pipeline(base, point)?;
        let report = run_prepared(&prepared, &spec)?;
        let value = metric.of(&report.mean);
        if best.as_ref().is_none_or(|(b, _, _)| value > *b) {
            best = Some((value, spec, report));
        }
        Ok(value)
    })?;
    let (_, best_spec, best_report) = best.expect("budget >= 1");
    Ok(PipelineTuning {
        result,
        best_spec,
        best_report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> SearchSpace {
        SearchSpace::new().with("x", Dimension::Real { low: 0.0, high: 1.0 })
    }

    fn x(p: &Point) -> f64 {
        p["x"].as_f64().unwrap()
    }

    #[test]
    fn empty_space_rejected() {
        let r = sample_point(&SearchSpace::new(), &TunerConfig::default(), &[]);
        assert!(matches!(r, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn single_option_category() {
        let space = SearchSpace::new().with(
            "c",
            Dimension::Categorical {
                options: vec!["only".into()],
            },
        );
        let r = optimize(
            &space,
            &TunerConfig {
                budget: 30,
                ..Default::default()
            },
            |_, _| Ok(1.0),
        )
        .unwrap();
        assert!(r.history.iter().all(|t| t.point["c"] == ParamValue::Cat("only".into())));
    }

    #[test]
    fn budget_one() {
        let r = optimize(
            &unit(),
            &TunerConfig {
                budget: 1,
                ..Default::default()
            },
            |p, _| Ok(x(p)),
        )
        .unwrap();
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.best, r.history[0]);
    }

    #[test]
    fn constant_objective_picks_first_trial() {
        let r = optimize(
            &unit(),
            &TunerConfig {
                budget: 25,
                ..Default::default()
            },
            |_, _| Ok(0.5),
        )
        .unwrap();
        assert_eq!(r.best.trial, 0);
    }

    #[test]
    fn leaf_number_grid() {
        let space = SearchSpace::gbdt();
        let r = optimize(
            &space,
            &TunerConfig {
                budget: 60,
                ..Default::default()
            },
            |p, _| Ok(-(p["max_leaves"].as_f64().unwrap() - 900.0).abs()),
        )
        .unwrap();
        for t in &r.history {
            assert!(space.contains(&t.point));
            let ParamValue::Int(l) = t.point["max_leaves"] else {
                panic!()
            };
            assert_eq!(l % 20, 0);
        }
    }

    #[test]
    fn objective_errors_carry_trial() {
        let r = optimize(
            &unit(),
            &TunerConfig {
                budget: 5,
                ..Default::default()
            },
            |_, s| {
                if s == TunerConfig::default().seed.derive(3) {
                    Err(Error::invalid("boom"))
                } else {
                    Ok(0.0)
                }
            },
        );
        assert!(matches!(r, Err(Error::Trial { trial: 3, .. })));
    }

    #[test]
    fn configure_rejects_unknown() {
        let base = PipelineSpec::new(
            crate::eval::Preprocessing::Raw,
            crate::eval::Augmentation::None,
            ModelSpec::Plsda(Default::default()),
        );
        let mut p = Point::new();
        p.insert("n_trees".into(), ParamValue::Int(5));
        assert!(configure_pipeline(&base, &p).is_err());
    }
}
