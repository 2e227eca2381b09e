//! Permutation Shapley attributions for any batch predictor.
//!
//! The value of a coalition `S` for sample `x` is the expected model output
//! when features in `S` take the values of `x` and the rest come from a
//! background row. Exhaustive mode averages over every background row and
//! evaluates every coalition; Monte-Carlo mode pairs each random permutation
//! with one random background row.

use std::path::Path;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::TrainedPipeline;
use crate::types::{Dataset, RngSeed};

/// Largest width handled by exhaustive enumeration.
pub const MAX_EXHAUSTIVE_FEATURES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapleyMode {
    /// Exhaustive for at most 6 features, Monte-Carlo otherwise.
    Auto,
    Exhaustive,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapleyConfig {
    pub n_permutations: usize,
    pub background_size: usize,
    pub mode: ShapleyMode,
    pub seed: RngSeed,
}

impl Default for ShapleyConfig {
    fn default() -> Self {
        ShapleyConfig {
            n_permutations: 128,
            background_size: 100,
            mode: ShapleyMode::Auto,
            seed: RngSeed(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyEstimate {
    pub feature_names: Vec<String>,
    /// Samples × features.
    pub attributions: Array2<f64>,
    /// Monte-Carlo standard error of each attribution (zero when exhaustive).
    pub std_errors: Array2<f64>,
    /// Mean model output over the background set.
    pub baseline: f64,
    pub outputs: Vec<f64>,
    /// Standard error of each sample's attribution sum.
    pub efficiency_std_errors: Vec<f64>,
    pub n_permutations: usize,
    pub exhaustive: bool,
    pub seed: RngSeed,
}

impl ShapleyEstimate {
    /// `output − baseline − Σ attributions` per sample.
    pub fn efficiency_residuals(&self) -> Vec<f64> {
        self.attributions
            .axis_iter(Axis(0))
            .zip(&self.outputs)
            .map(|(row, out)| out - self.baseline - row.sum())
            .collect()
    }

    pub fn attributions_csv(&self, sample_ids: &[String]) -> Result<String> {
        if sample_ids.len() != self.attributions.nrows() {
            return Err(Error::invalid(format!(
                "{} sample ids for {} explained samples",
                sample_ids.len(),
                self.attributions.nrows()
            )));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["id".to_string()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (id, row) in sample_ids.iter().zip(self.attributions.axis_iter(Axis(0))) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| format!("{v}")));
            w.write_record(&rec).expect("in-memory write");
        }
        Ok(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub index: usize,
    pub name: String,
    pub mean_abs: f64,
}

/// Features by descending mean |attribution|, ties by index.
pub fn importance_ranking(estimate: &ShapleyEstimate) -> Vec<RankedFeature> {
    let n = estimate.attributions.nrows().max(1) as f64;
    let mut ranked: Vec<RankedFeature> = estimate
        .attributions
        .axis_iter(Axis(1))
        .enumerate()
        .map(|(j, col)| RankedFeature {
            index: j,
            name: estimate.feature_names[j].clone(),
            mean_abs: col.iter().map(|v| v.abs()).sum::<f64>() / n,
        })
        .collect();
    ranked.sort_by(|a, b| b.mean_abs.total_cmp(&a.mean_abs).then(a.index.cmp(&b.index)));
    ranked
}

pub fn ranking_csv(ranking: &[RankedFeature]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rank", "feature", "mean_abs_attribution"])
        .expect("in-memory write");
    for (k, r) in ranking.iter().enumerate() {
        w.write_record([(k + 1).to_string(), r.name.clone(), format!("{}", r.mean_abs)])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

/// Draws up to `size` rows without replacement, keeping their original order.
pub fn background_sample(x: ArrayView2<f64>, size: usize, seed: RngSeed) -> Array2<f64> {
    if size >= x.nrows() {
        return x.to_owned();
    }
    let mut idx = index::sample(&mut seed.rng(), x.nrows(), size).into_vec();
    idx.sort_unstable();
    x.select(Axis(0), &idx)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Exact attributions from the value of every coalition.
fn exhaustive_row<F>(predict: &F, x: ArrayView1<f64>, background: ArrayView2<f64>) -> Result<Vec<f64>>
where
    F: Fn(ArrayView2<f64>) -> Result<Vec<f64>>,
{
    let d = x.len();
    let nb = background.nrows();
    let n_sets = 1usize << d;
    let mut rows = Array2::<f64>::zeros((n_sets * nb, d));
    for s in 0..n_sets {
        for b in 0..nb {
            let mut row = rows.row_mut(s * nb + b);
            for j in 0..d {
                row[j] = if s >> j & 1 == 1 { x[j] } else { background[[b, j]] };
            }
        }
    }
    let out = predict(rows.view())?;
    let value: Vec<f64> = out.chunks(nb).map(|c| c.iter().sum::<f64>() / nb as f64).collect();
    let weights: Vec<f64> = (0..d)
        .map(|k| factorial(k) * factorial(d - k - 1) / factorial(d))
        .collect();
    Ok((0..d)
        .map(|j| {
            (0..n_sets)
                .filter(|s| s >> j & 1 == 0)
                .map(|s| weights[s.count_ones() as usize] * (value[s | 1 << j] - value[s]))
                .sum()
        })
        .collect())
}

struct McRow {
    phi: Vec<f64>,
    se: Vec<f64>,
    total_se: f64,
}

fn monte_carlo_row<F>(
    predict: &F,
    x: ArrayView1<f64>,
    background: ArrayView2<f64>,
    n_permutations: usize,
    seed: RngSeed,
) -> Result<McRow>
where
    F: Fn(ArrayView2<f64>) -> Result<Vec<f64>>,
{
    let d = x.len();
    let mut rng = seed.rng();
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    let mut totals = Vec::with_capacity(n_permutations);
    let mut order: Vec<usize> = (0..d).collect();
    const CHUNK: usize = 16;
    let mut done = 0;
    while done < n_permutations {
        let m = CHUNK.min(n_permutations - done);
        let mut rows = Array2::<f64>::zeros((m * (d + 1), d));
        let mut orders = Vec::with_capacity(m);
        for p in 0..m {
            order.shuffle(&mut rng);
            let b = rng.random_range(0..background.nrows());
            let base = p * (d + 1);
            rows.row_mut(base).assign(&background.row(b));
            for (k, &j) in order.iter().enumerate() {
                let (prev, mut next) = rows.multi_slice_mut((ndarray::s![base + k, ..], ndarray::s![base + k + 1, ..]));
                next.assign(&prev);
                next[j] = x[j];
            }
            orders.push(order.clone());
        }
        let out = predict(rows.view())?;
        for (p, ord) in orders.iter().enumerate() {
            let base = p * (d + 1);
            for (k, &j) in ord.iter().enumerate() {
                let delta = out[base + k + 1] - out[base + k];
                sum[j] += delta;
                sum_sq[j] += delta * delta;
            }
            totals.push(out[base + d] - out[base]);
        }
        done += m;
    }
    let n = n_permutations as f64;
    let se_of = |s: f64, sq: f64| {
        if n_permutations < 2 {
            0.0
        } else {
            ((sq - s * s / n).max(0.0) / (n - 1.0) / n).sqrt()
        }
    };
    let t_sum: f64 = totals.iter().sum();
    let t_sq: f64 = totals.iter().map(|t| t * t).sum();
    Ok(McRow {
        phi: sum.iter().map(|s| s / n).collect(),
        se: sum.iter().zip(&sum_sq).map(|(&s, &q)| se_of(s, q)).collect(),
        total_se: se_of(t_sum, t_sq),
    })
}

/// Attributions of `predict` for every row of `samples`. Sample `i` uses the
/// sub-stream `config.seed.derive(i)`; `config.background_size` is ignored
/// here since the background is passed explicitly.
pub fn shapley_attributions<F>(
    predict: F,
    background: ArrayView2<f64>,
    samples: ArrayView2<f64>,
    feature_names: &[String],
    config: &ShapleyConfig,
) -> Result<ShapleyEstimate>
where
    F: Fn(ArrayView2<f64>) -> Result<Vec<f64>> + Sync,
{
    let d = samples.ncols();
    if background.nrows() == 0 {
        return Err(Error::invalid("background set is empty"));
    }
    if background.ncols() != d || feature_names.len() != d {
        return Err(Error::invalid(format!(
            "width mismatch: samples have {d} features, background {}, names {}",
            background.ncols(),
            feature_names.len()
        )));
    }
    if d == 0 {
        return Err(Error::invalid("no features to explain"));
    }
    let exhaustive = match config.mode {
        ShapleyMode::Auto => d <= 6,
        ShapleyMode::Exhaustive => true,
        ShapleyMode::MonteCarlo => false,
    };
    if exhaustive && d > MAX_EXHAUSTIVE_FEATURES {
        return Err(Error::invalid(format!(
            "exhaustive enumeration supports at most {MAX_EXHAUSTIVE_FEATURES} features, got {d}"
        )));
    }
    if !exhaustive && config.n_permutations == 0 {
        return Err(Error::invalid("n_permutations must be positive"));
    }

    let outputs = predict(samples)?;
    let bg_out = predict(background)?;
    if outputs.len() != samples.nrows() || bg_out.len() != background.nrows() {
        return Err(Error::invalid("predictor returned the wrong number of outputs"));
    }
    let baseline = bg_out.iter().sum::<f64>() / bg_out.len() as f64;

    let rows: Vec<McRow> = (0..samples.nrows())
        .into_par_iter()
        .map(|i| {
            let x = samples.row(i);
            if exhaustive {
                Ok(McRow {
                    phi: exhaustive_row(&predict, x, background)?,
                    se: vec![0.0; d],
                    total_se: 0.0,
                })
            } else {
                monte_carlo_row(
                    &predict,
                    x,
                    background,
                    config.n_permutations,
                    config.seed.derive(i as u64),
                )
            }
        })
        .collect::<Result<_>>()?;

    let n = samples.nrows();
    let mut attributions = Array2::zeros((n, d));
    let mut std_errors = Array2::zeros((n, d));
    for (i, r) in rows.iter().enumerate() {
        attributions.row_mut(i).assign(&ArrayView1::from(&r.phi));
        std_errors.row_mut(i).assign(&ArrayView1::from(&r.se));
    }
    if attributions.iter().any(|v: &f64| !v.is_finite()) {
        return Err(Error::invalid("predictor produced non-finite attributions"));
    }
    Ok(ShapleyEstimate {
        feature_names: feature_names.to_vec(),
        attributions,
        std_errors,
        baseline,
        outputs,
        efficiency_std_errors: rows.iter().map(|r| r.total_se).collect(),
        n_permutations: if exhaustive {
            factorial(d) as usize
        } else {
            config.n_permutations
        },
        exhaustive,
        seed: config.seed,
    })
}

/// Explains a trained pipeline's scores on `samples`, with a background of
/// `config.background_size` rows drawn from `train`.
pub fn explain_pipeline(
    pipeline: &TrainedPipeline,
    train: &Dataset,
    samples: &Dataset,
    config: &ShapleyConfig,
) -> Result<ShapleyEstimate> {
    for d in [train, samples] {
        if d.grid() != &pipeline.grid {
            return Err(Error::GridMismatch {
                expected: pipeline.grid.count,
                found: d.grid().count,
            });
        }
    }
    let xb = pipeline.spec.design_matrix(train)?;
    let xs = pipeline.spec.design_matrix(samples)?;
    let background = background_sample(xb.view(), config.background_size, config.seed.derive(u64::MAX));
    shapley_attributions(
        |x| pipeline.model.scores(x),
        background.view(),
        xs.view(),
        &pipeline.feature_names,
        config,
    )
}

pub fn save_outputs(estimate: &ShapleyEstimate, sample_ids: &[String], dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    let attr = dir.join("attributions.csv");
    std::fs::write(&attr, estimate.attributions_csv(sample_ids)?).map_err(|e| Error::io(&attr, e))?;
    let rank = dir.join("ranking.csv");
    std::fs::write(&rank, ranking_csv(&importance_ranking(estimate))).map_err(|e| Error::io(&rank, e))
}
