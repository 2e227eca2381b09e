//! Class balancing: SMOTE interpolation and GAN generation filtered by a PCA
//! confidence ellipse.

pub mod ellipse;
pub mod gan;
pub mod smote;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

pub use ellipse::{chi2_2dof_cdf, chi2_2dof_quantile, filter_generated, fit_ellipse, EllipseConfig, EllipseFilter};
pub use gan::{train_gan, EpochLoss, GanConfig, Generator, GeneratorParams, TrainedGan};
pub use smote::{
    balance_matrix_with_smote, balance_with_smote, class_deficit, smote, SmoteConfig, SmoteDraw, SmoteOutput,
    SmoteSpace,
};

use crate::error::{Error, Result};
use crate::preprocess::{snv_values, SnvConfig};
use crate::types::{Dataset, Label, LesionRecord, RngSeed, Spectrum};

/// Generate-filter rounds before giving up.
pub const GAN_MAX_ROUNDS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GanFillStats {
    pub rounds: usize,
    pub generated: usize,
    pub retained: usize,
}

#[derive(Debug, Clone)]
pub struct GanBalance {
    pub dataset: Dataset,
    pub gan: Option<TrainedGan>,
    pub stats: GanFillStats,
}

/// SNV-normalizes every row; rows that cannot be normalized come back as `None`.
fn snv_rows(m: &Array2<f64>) -> Vec<Option<Vec<f64>>> {
    m.rows()
        .into_iter()
        .map(|r| snv_values(&r.to_vec(), &SnvConfig::default()).ok())
        .collect()
}

/// Draws from `generator` until `needed` samples pass the ellipse filter
/// fitted on the SNV-normalized `real` spectra. Returns the retained raw
/// spectra.
pub fn fill_with_generator(
    generator: &Generator,
    real: &Array2<f64>,
    needed: usize,
    ellipse: &EllipseConfig,
    seed: RngSeed,
) -> Result<(Array2<f64>, GanFillStats)> {
    let width = real.ncols();
    let mut stats = GanFillStats {
        rounds: 0,
        generated: 0,
        retained: 0,
    };
    if needed == 0 {
        return Ok((Array2::zeros((0, width)), stats));
    }
    let real_snv: Vec<Vec<f64>> = snv_rows(real)
        .into_iter()
        .collect::<Option<_>>()
        .ok_or(Error::ZeroVariance { id: None })?;
    let real_snv = Array2::from_shape_vec((real.nrows(), width), real_snv.concat()).expect("rectangular");
    let filter = fit_ellipse(real_snv.view(), ellipse)?;

    let mut rng = seed.rng();
    let mut kept: Vec<Vec<f64>> = Vec::with_capacity(needed);
    while kept.len() < needed {
        if stats.rounds == GAN_MAX_ROUNDS {
            return Err(Error::ConvergenceFailure(format!(
                "ellipse filter kept {} of {needed} required samples after {GAN_MAX_ROUNDS} rounds",
                kept.len()
            )));
        }
        stats.rounds += 1;
        let batch = (2 * (needed - kept.len())).max(32);
        let raw = generator.sample(batch, &mut rng);
        stats.generated += batch;
        for (row, normalized) in raw.rows().into_iter().zip(snv_rows(&raw)) {
            let Some(normalized) = normalized else {
                continue;
            };
            if kept.len() < needed && filter.contains(ndarray::ArrayView1::from(&normalized)) {
                kept.push(row.to_vec());
            }
        }
    }
    stats.retained = kept.len();
    let out = Array2::from_shape_vec((kept.len(), width), kept.concat()).expect("rectangular");
    Ok((out, stats))
}

/// Balances `train` by training a GAN on the raw minority spectra and adding
/// ellipse-filtered generated spectra (ids `gan-<n>`).
pub fn balance_with_gan(train: &Dataset, gan: &GanConfig, ellipse: &EllipseConfig) -> Result<GanBalance> {
    let (minority, deficit) = class_deficit(&train.labels())?;
    if deficit == 0 {
        return Ok(GanBalance {
            dataset: train.clone(),
            gan: None,
            stats: GanFillStats {
                rounds: 0,
                generated: 0,
                retained: 0,
            },
        });
    }
    let real = minority_spectra(train, minority);
    let trained = train_gan(real.view(), gan)?;
    let (synthetic, stats) = fill_with_generator(&trained.generator, &real, deficit, ellipse, gan.seed.derive(1))?;
    let dataset = append_synthetic(train, &synthetic, minority, "gan")?;
    Ok(GanBalance {
        dataset,
        gan: Some(trained),
        stats,
    })
}

pub fn minority_spectra(train: &Dataset, minority: Label) -> Array2<f64> {
    let idx: Vec<usize> = (0..train.len())
        .filter(|&i| train.records()[i].label == minority)
        .collect();
    train.spectra_matrix().select(Axis(0), &idx)
}

pub fn append_synthetic(train: &Dataset, rows: &Array2<f64>, label: Label, prefix: &str) -> Result<Dataset> {
    let extra = rows
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(LesionRecord::synthetic(
                format!("{prefix}-{i}"),
                label,
                Spectrum::new(r.to_vec())?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    train.extended(extra)
}
