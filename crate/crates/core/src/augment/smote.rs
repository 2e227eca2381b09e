use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{snv_values, SnvConfig};
use crate::types::{Dataset, Label, LesionRecord, RngSeed, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub seed: RngSeed,
    /// Use this interpolation gap instead of drawing one from U[0, 1].
    #[serde(default)]
    pub fixed_gap: Option<f64>,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            seed: RngSeed(0),
            fixed_gap: None,
        }
    }
}

/// How one synthetic row was built: `base + gap·(neighbor − base)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoteDraw {
    pub base: usize,
    pub neighbor: usize,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct SmoteOutput {
    pub synthetic: Array2<f64>,
    pub draws: Vec<SmoteDraw>,
}

/// Indices of the `k` nearest rows to each row (Euclidean, self excluded,
/// ties by lower index).
pub fn nearest_neighbors(rows: ArrayView2<f64>, k: usize) -> Vec<Vec<usize>> {
    let n = rows.nrows();
    (0..n)
        .map(|i| {
            let a = rows.row(i);
            let mut d: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let dist = a
                        .iter()
                        .zip(rows.row(j).iter())
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>();
                    (dist, j)
                })
                .collect();
            d.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Generates `n_to_generate` synthetic rows from `minority`.
///
/// Bases are drawn uniformly with replacement; each picks one of its
/// `k_neighbors` nearest minority rows and a gap in [0, 1].
pub fn smote(minority: ArrayView2<f64>, n_to_generate: usize, config: &SmoteConfig) -> Result<SmoteOutput> {
    smote_in_space(minority, minority, n_to_generate, config)
}

/// SMOTE where neighbors are searched in `distance_space` while the
/// interpolation happens on the matching rows of `values`.
pub fn smote_in_space(
    values: ArrayView2<f64>,
    distance_space: ArrayView2<f64>,
    n_to_generate: usize,
    config: &SmoteConfig,
) -> Result<SmoteOutput> {
    let n = values.nrows();
    if distance_space.nrows() != n {
        return Err(Error::invalid("distance space and value rows differ in count"));
    }
    if config.k_neighbors == 0 {
        return Err(Error::invalid("k_neighbors must be at least 1"));
    }
    if config.k_neighbors >= n {
        return Err(Error::invalid(format!(
            "k_neighbors = {} requires more than {} minority samples",
            config.k_neighbors, n
        )));
    }
    if let Some(g) = config.fixed_gap {
        if !(0.0..=1.0).contains(&g) {
            return Err(Error::invalid(format!("fixed gap {g} outside [0, 1]")));
        }
    }
    let mut synthetic = Array2::zeros((n_to_generate, values.ncols()));
    let mut draws = Vec::with_capacity(n_to_generate);
    if n_to_generate == 0 {
        return Ok(SmoteOutput { synthetic, draws });
    }
    let neighbors = nearest_neighbors(distance_space, config.k_neighbors);
    let mut rng = config.seed.rng();
    for mut out in synthetic.rows_mut() {
        let base = rng.random_range(0..n);
        let neighbor = neighbors[base][rng.random_range(0..config.k_neighbors)];
        let gap = match config.fixed_gap {
            Some(g) => g,
            None => rng.random::<f64>(),
        };
        let b = values.row(base);
        let nb = values.row(neighbor);
        for ((o, x), y) in out.iter_mut().zip(b.iter()).zip(nb.iter()) {
            *o = x + gap * (y - x);
        }
        draws.push(SmoteDraw { base, neighbor, gap });
    }
    Ok(SmoteOutput { synthetic, draws })
}

/// Space in which SMOTE measures neighbor distances for spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoteSpace {
    Raw,
    Snv,
}

/// Minority label and the number of samples it needs to match the majority.
pub fn class_deficit(labels: &[Label]) -> Result<(Label, usize)> {
    let pos = labels.iter().filter(|l| l.is_positive()).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::degenerate(format!(
            "both classes are required ({pos} cancer, {neg} non-cancer)"
        )));
    }
    Ok(if pos <= neg {
        (Label::Cancer, neg - pos)
    } else {
        (Label::NonCancer, pos - neg)
    })
}

/// Oversamples the minority class until both classes have equal counts.
///
/// Neighbors are found in `space`; synthetic spectra interpolate the stored
/// spectra. Synthetic records are appended after the originals with ids
/// `smote-<n>`.
pub fn balance_with_smote(train: &Dataset, space: SmoteSpace, config: &SmoteConfig) -> Result<Dataset> {
    let (minority, deficit) = class_deficit(&train.labels())?;
    if deficit == 0 {
        return Ok(train.clone());
    }
    let idx: Vec<usize> = (0..train.len())
        .filter(|&i| train.records()[i].label == minority)
        .collect();
    let subset = train.select(&idx);
    let values = subset.spectra_matrix();
    let distance = match space {
        SmoteSpace::Raw => values.clone(),
        SmoteSpace::Snv => {
            let mut m = values.clone();
            for mut row in m.rows_mut() {
                let v = snv_values(row.as_slice().expect("standard layout"), &SnvConfig::default())?;
                row.iter_mut().zip(v).for_each(|(d, s)| *d = s);
            }
            m
        }
    };
    let out = smote_in_space(values.view(), distance.view(), deficit, config)?;
    let extra = out
        .synthetic
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            Ok(LesionRecord::synthetic(
                format!("smote-{i}"),
                minority,
                Spectrum::new(row.to_vec())?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    train.extended(extra)
}

/// Matrix-level balancing used when the classifier consumes derived
/// features. Returns the augmented matrix, labels and the synthetic count.
pub fn balance_matrix_with_smote(
    x: ArrayView2<f64>,
    labels: &[Label],
    config: &SmoteConfig,
) -> Result<(Array2<f64>, Vec<Label>, usize)> {
    let (minority, deficit) = class_deficit(labels)?;
    if deficit == 0 {
        return Ok((x.to_owned(), labels.to_vec(), 0));
    }
    let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == minority).collect();
    let sub = x.select(ndarray::Axis(0), &idx);
    let out = smote(sub.view(), deficit, config)?;
    let stacked = ndarray::concatenate(ndarray::Axis(0), &[x, out.synthetic.view()]).expect("column counts match");
    let mut y = labels.to_vec();
    y.extend(std::iter::repeat_n(minority, deficit));
    Ok((stacked, y, deficit))
}
