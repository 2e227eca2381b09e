//! PCA confidence-ellipse filter.
//!
//! Real samples are projected onto their first two principal components; a
//! generated sample is kept when its squared Mahalanobis distance to the
//! center of the real scores is within the χ² quantile (2 dof) of the chosen
//! confidence.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CDF of the χ² distribution with two degrees of freedom.
pub fn chi2_2dof_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        1.0 - (-x / 2.0).exp()
    }
}

/// Quantile of χ²₂: `−2·ln(1 − p)`.
pub fn chi2_2dof_quantile(p: f64) -> f64 {
    -2.0 * (1.0 - p).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseConfig {
    pub n_components: usize,
    pub confidence: f64,
}

impl Default for EllipseConfig {
    fn default() -> Self {
        EllipseConfig {
            n_components: 2,
            confidence: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipseFilter {
    pub confidence: f64,
    /// Per-column mean of the fitted data.
    pub mean: Array1<f64>,
    /// Principal axes as rows (2 × d).
    pub components: Array2<f64>,
    pub center: [f64; 2],
    pub covariance: [[f64; 2]; 2],
    /// Squared Mahalanobis radius.
    pub threshold: f64,
}

impl EllipseFilter {
    pub fn scores(&self, row: ArrayView1<f64>) -> [f64; 2] {
        let centered = &row - &self.mean;
        [
            self.components.row(0).dot(&centered),
            self.components.row(1).dot(&centered),
        ]
    }

    pub fn mahalanobis2(&self, row: ArrayView1<f64>) -> f64 {
        let s = self.scores(row);
        let du = [s[0] - self.center[0], s[1] - self.center[1]];
        let [[a, b], [_, d]] = self.covariance;
        let det = a * d - b * b;
        (d * du[0] * du[0] - 2.0 * b * du[0] * du[1] + a * du[1] * du[1]) / det
    }

    pub fn contains(&self, row: ArrayView1<f64>) -> bool {
        self.mahalanobis2(row) <= self.threshold
    }
}

pub fn fit_ellipse(data: ArrayView2<f64>, config: &EllipseConfig) -> Result<EllipseFilter> {
    if config.n_components != 2 {
        return Err(Error::invalid("the confidence ellipse is defined for 2 components"));
    }
    if !(config.confidence > 0.0 && config.confidence < 1.0) {
        return Err(Error::invalid(format!(
            "confidence {} outside (0, 1)",
            config.confidence
        )));
    }
    let (n, d) = data.dim();
    if n < 3 {
        return Err(Error::invalid(format!("ellipse fit needs at least 3 samples, got {n}")));
    }
    if d < 2 {
        return Err(Error::invalid("ellipse fit needs at least 2 columns"));
    }
    let mean = data.mean_axis(Axis(0)).expect("n >= 3");
    let centered = &data - &mean;
    let cov = centered.t().dot(&centered) / (n as f64 - 1.0);
    let cov = DMatrix::from_fn(d, d, |i, j| cov[[i, j]]);
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut components = Array2::zeros((2, d));
    for (r, &k) in order.iter().take(2).enumerate() {
        let v = eig.eigenvectors.column(k);
        // Sign convention: largest-magnitude loading is positive.
        let pivot = (0..d).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap();
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for c in 0..d {
            components[[r, c]] = sign * v[c];
        }
    }
    let scores = centered.dot(&components.t());
    let center_v = scores.mean_axis(Axis(0)).unwrap();
    let sc = &scores - &center_v;
    let c = sc.t().dot(&sc) / (n as f64 - 1.0);
    let covariance = [[c[[0, 0]], c[[0, 1]]], [c[[1, 0]], c[[1, 1]]]];
    let det = c[[0, 0]] * c[[1, 1]] - c[[0, 1]] * c[[1, 0]];
    let total_var: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    if !(det > 1e-12 * total_var * total_var) || c[[1, 1]] <= 1e-12 * total_var {
        return Err(Error::ZeroVariance { id: None });
    }
    Ok(EllipseFilter {
        confidence: config.confidence,
        mean,
        components,
        center: [center_v[0], center_v[1]],
        covariance,
        threshold: chi2_2dof_quantile(config.confidence),
    })
}

/// Indices of the rows inside the ellipse.
pub fn filter_generated(generated: ArrayView2<f64>, filter: &EllipseFilter) -> Vec<usize> {
    generated
        .rows()
        .into_iter()
        .enumerate()
        .filter(|(_, r)| filter.contains(r.view()))
        .map(|(i, _)| i)
        .collect()
}
