//! PLS discriminant analysis: single-response NIPALS regression on the
//! {0, 1} class coding, thresholded at 0.5.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlsdaConfig {
    pub n_components: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub threshold: f64,
}

impl Default for PlsdaConfig {
    fn default() -> Self {
        PlsdaConfig {
            n_components: 10,
            max_iterations: 100,
            tolerance: 1e-9,
            threshold: 0.5,
        }
    }
}

impl PlsdaConfig {
    pub fn with_components(n_components: usize) -> Self {
        PlsdaConfig {
            n_components,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsdaModel {
    pub x_mean: Array1<f64>,
    pub y_mean: f64,
    /// Regression coefficients on centered inputs.
    pub coefficients: Array1<f64>,
    pub n_components: usize,
    pub threshold: f64,
}

/// Fit-time quantities kept for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PlsdaFit {
    pub model: PlsdaModel,
    /// X scores, one column per component.
    pub x_scores: Array2<f64>,
    /// Fitted regression output for each training row.
    pub fitted: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlsdaPrediction {
    pub scores: Vec<f64>,
    pub labels: Vec<Label>,
}

pub fn plsda_fit(x: ArrayView2<f64>, labels: &[Label], config: &PlsdaConfig) -> Result<PlsdaModel> {
    Ok(plsda_fit_detailed(x, labels, config)?.model)
}

/// NIPALS with a single response. The inner loop alternates X and y weights
/// until the score vector changes by less than `tolerance` (relative).
pub fn plsda_fit_detailed(x: ArrayView2<f64>, labels: &[Label], config: &PlsdaConfig) -> Result<PlsdaFit> {
    let (n, d) = x.dim();
    if labels.len() != n {
        return Err(Error::invalid(format!("{n} rows but {} labels", labels.len())));
    }
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let a = config.n_components;
    if a > d || (a > 0 && a >= n) {
        return Err(Error::invalid(format!(
            "{a} components requested for {n} samples and {d} variables"
        )));
    }
    let y: Array1<f64> = labels.iter().map(|l| l.as_f64()).collect();
    let x_mean = x.mean_axis(Axis(0)).expect("n > 0");
    let y_mean = y.mean().expect("n > 0");
    let mut e = &x - &x_mean;
    let mut f = &y - y_mean;
    let scale = e.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);

    let mut w_cols = Vec::with_capacity(a);
    let mut p_cols = Vec::with_capacity(a);
    let mut q = Vec::with_capacity(a);
    let mut t_cols = Vec::with_capacity(a);
    for k in 0..a {
        let mut u = f.clone();
        let mut t_prev: Option<Array1<f64>> = None;
        let mut converged = None;
        for _ in 0..config.max_iterations {
            let w = e.t().dot(&u);
            let norm = w.dot(&w).sqrt();
            if !(norm > 1e-12 * scale * u.dot(&u).sqrt().max(1e-300)) {
                return Err(Error::ConvergenceFailure(format!(
                    "no covariance left with the response at component {}",
                    k + 1
                )));
            }
            let w = w / norm;
            let t = e.dot(&w);
            let tt = t.dot(&t);
            let qk = f.dot(&t) / tt;
            if !(tt > 1e-24 * scale * scale) || qk.abs() < 1e-300 {
                return Err(Error::ConvergenceFailure(format!(
                    "null score vector at component {}",
                    k + 1
                )));
            }
            u = &f / qk;
            if let Some(prev) = &t_prev {
                let diff: f64 = (&t - prev).iter().map(|v| v * v).sum::<f64>().sqrt();
                if diff <= config.tolerance * tt.sqrt() {
                    converged = Some((w, t, tt));
                    break;
                }
            }
            t_prev = Some(t);
        }
        let Some((w, t, tt)) = converged else {
            return Err(Error::ConvergenceFailure(format!(
                "component {} did not converge in {} iterations",
                k + 1,
                config.max_iterations
            )));
        };
        let p = e.t().dot(&t) / tt;
        let qk = f.dot(&t) / tt;
        let t2 = t.view().insert_axis(Axis(1));
        let p2 = p.view().insert_axis(Axis(0));
        e = e - t2.dot(&p2);
        f -= &(&t * qk);
        w_cols.push(w);
        t_cols.push(t);
        p_cols.push(p);
        q.push(qk);
    }

    let coefficients = if a == 0 {
        Array1::zeros(d)
    } else {
        let w = DMatrix::from_fn(d, a, |i, j| w_cols[j][i]);
        let p = DMatrix::from_fn(d, a, |i, j| p_cols[j][i]);
        let ptw = p.transpose() * &w;
        let inv = ptw
            .try_inverse()
            .ok_or_else(|| Error::ConvergenceFailure("singular loading matrix".into()))?;
        let b = w * inv * nalgebra::DVector::from_vec(q);
        Array1::from_iter(b.iter().copied())
    };
    if coefficients.iter().any(|v| !v.is_finite()) {
        return Err(Error::ConvergenceFailure("non-finite regression coefficients".into()));
    }
    let x_scores = Array2::from_shape_fn((n, a), |(i, j)| t_cols[j][i]);
    let fitted: Vec<f64> = (&x - &x_mean).dot(&coefficients).iter().map(|v| v + y_mean).collect();
    Ok(PlsdaFit {
        model: PlsdaModel {
            x_mean,
            y_mean,
            coefficients,
            n_components: a,
            threshold: config.threshold,
        },
        x_scores,
        fitted,
    })
}

impl PlsdaModel {
    pub fn scores(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.x_mean.len() {
            return Err(Error::GridMismatch {
                expected: self.x_mean.len(),
                found: x.ncols(),
            });
        }
        let centered: Array2<f64> = &x - &self.x_mean;
        Ok(centered
            .dot(&self.coefficients)
            .iter()
            .map(|v| v + self.y_mean)
            .collect())
    }
}

pub fn plsda_predict(model: &PlsdaModel, x: ArrayView2<f64>) -> Result<PlsdaPrediction> {
    let scores = model.scores(x)?;
    let labels = scores
        .iter()
        .map(|&s| {
            if s >= model.threshold {
                Label::Cancer
            } else {
                Label::NonCancer
            }
        })
        .collect();
    Ok(PlsdaPrediction { scores, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn labels(v: &[u8]) -> Vec<Label> {
        v.iter().map(|&b| Label::from_u8(b).unwrap()).collect()
    }

    #[test]
    fn zero_components_predicts_majority() {
        let x = array![[1.0, 2.0], [2.0, 1.0], [3.0, 0.0], [0.0, 0.0]];
        let y = labels(&[0, 0, 0, 1]);
        let m = plsda_fit(x.view(), &y, &PlsdaConfig::with_components(0)).unwrap();
        let p = plsda_predict(&m, x.view()).unwrap();
        assert!(p.labels.iter().all(|l| *l == Label::NonCancer));
        assert!(p.scores.iter().all(|&s| (s - 0.25).abs() < 1e-15));
    }

    #[test]
    fn full_rank_matches_least_squares() {
        // With as many components as variables PLS equals ordinary least squares.
        let x = array![[1.0, 0.5], [2.0, -1.0], [3.0, 0.2], [4.0, 1.5], [0.5, 0.1], [2.5, 2.0]];
        let y = labels(&[0, 0, 1, 1, 0, 1]);
        let m = plsda_fit(x.view(), &y, &PlsdaConfig::with_components(2)).unwrap();
        let xm = x.mean_axis(Axis(0)).unwrap();
        let xc = &x - &xm;
        let yv: Array1<f64> = y.iter().map(|l| l.as_f64()).collect();
        let yc = &yv - yv.mean().unwrap();
        let xtx = xc.t().dot(&xc);
        let xty = xc.t().dot(&yc);
        let det = xtx[[0, 0]] * xtx[[1, 1]] - xtx[[0, 1]] * xtx[[1, 0]];
        let b0 = (xtx[[1, 1]] * xty[0] - xtx[[0, 1]] * xty[1]) / det;
        let b1 = (xtx[[0, 0]] * xty[1] - xtx[[1, 0]] * xty[0]) / det;
        assert!((m.coefficients[0] - b0).abs() < 1e-10);
        assert!((m.coefficients[1] - b1).abs() < 1e-10);
    }

    #[test]
    fn separable_data() {
        let x = array![[0.0, 1.0], [0.2, 0.9], [0.1, 1.1], [1.0, 0.0], [0.9, 0.2], [1.1, 0.1]];
        let y = labels(&[0, 0, 0, 1, 1, 1]);
        let m = plsda_fit(x.view(), &y, &PlsdaConfig::with_components(1)).unwrap();
        assert_eq!(plsda_predict(&m, x.view()).unwrap().labels, y);
    }

    #[test]
    fn too_many_components() {
        let x = array![[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]];
        let y = labels(&[0, 1, 1]);
        let r = plsda_fit(x.view(), &y, &PlsdaConfig::with_components(3));
        assert!(matches!(r, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn exhausted_response_fails() {
        // Second component has nothing left to explain.
        let x = array![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]];
        let y = labels(&[0, 0, 1, 1]);
        let r = plsda_fit(x.view(), &y, &PlsdaConfig::with_components(2));
        assert!(matches!(r, Err(Error::ConvergenceFailure(_))));
    }

    #[test]
    fn scores_are_orthogonal_and_reproduced() {
        let x = Array2::from_shape_fn((30, 6), |(i, j)| {
            (((i * 7 + j * 13) % 19) as f64 - 9.0) * 0.1 + (i % 2) as f64
        });
        let y: Vec<Label> = (0..30).map(|i| Label::from_u8((i % 2) as u8).unwrap()).collect();
        let fit = plsda_fit_detailed(x.view(), &y, &PlsdaConfig::with_components(4)).unwrap();
        for i in 0..4 {
            for j in 0..i {
                assert!(fit.x_scores.column(i).dot(&fit.x_scores.column(j)).abs() < 1e-8);
            }
        }
        let p = plsda_predict(&fit.model, x.view()).unwrap();
        for (a, b) in p.scores.iter().zip(&fit.fitted) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicated_columns_do_not_change_predictions() {
        let x = array![[0.3], [1.2], [2.0], [2.9], [0.7], [3.3]];
        let y = labels(&[0, 0, 1, 1, 0, 1]);
        let single = plsda_fit(x.view(), &y, &PlsdaConfig::with_components(1)).unwrap();
        let x2 = ndarray::concatenate(Axis(1), &[x.view(), x.view()]).unwrap();
        let double = plsda_fit(x2.view(), &y, &PlsdaConfig::with_components(1)).unwrap();
        let a = single.scores(x.view()).unwrap();
        let b = double.scores(x2.view()).unwrap();
        for (a, b) in a.iter().zip(&b) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn threshold_one_rejects_everything() {
        let x = array![[0.0], [0.1], [0.2], [0.3]];
        let y = labels(&[0, 1, 0, 1]);
        let cfg = PlsdaConfig {
            threshold: 1.0,
            ..PlsdaConfig::with_components(1)
        };
        let m = plsda_fit(x.view(), &y, &cfg).unwrap();
        let p = plsda_predict(&m, x.view()).unwrap();
        assert!(p.scores.iter().all(|&s| s < 1.0));
        assert!(p.labels.iter().all(|l| *l == Label::NonCancer));
    }

    #[test]
    fn zero_iterations_fail() {
        let x = array![[0.0], [1.0], [2.0]];
        let y = labels(&[0, 1, 1]);
        let cfg = PlsdaConfig {
            max_iterations: 0,
            ..PlsdaConfig::with_components(1)
        };
        assert!(matches!(
            plsda_fit(x.view(), &y, &cfg),
            Err(Error::ConvergenceFailure(_))
        ));
    }
}
