//! Standard Normal Variate normalization.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Dataset, LesionRecord, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnvConfig {
    /// Spectra whose sample standard deviation does not exceed this value are
    /// rejected as zero-variance.
    pub variance_epsilon: f64,
}

impl Default for SnvConfig {
    fn default() -> Self {
        SnvConfig {
            variance_epsilon: 1e-12,
        }
    }
}

/// `(y_i − ȳ) / sqrt(Σ(y_i − ȳ)² / (n − 1))`.
pub fn snv_values(values: &[f64], config: &SnvConfig) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 2 {
        return Err(Error::ZeroVariance { id: None });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let std = (ss / (n - 1) as f64).sqrt();
    if !(std > config.variance_epsilon) {
        return Err(Error::ZeroVariance { id: None });
    }
    Ok(values.iter().map(|v| (v - mean) / std).collect())
}

pub fn snv(spectrum: &Spectrum, config: &SnvConfig) -> Result<Spectrum> {
    Spectrum::new(snv_values(spectrum.values(), config)?)
}

/// Applies [`snv`] to every record; ids, labels and order are preserved.
pub fn snv_dataset(dataset: &Dataset, config: &SnvConfig) -> Result<Dataset> {
    let records = dataset
        .records()
        .par_iter()
        .map(|r| {
            let spectrum = snv(&r.spectrum, config).map_err(|e| match e {
                Error::ZeroVariance { .. } => Error::ZeroVariance { id: Some(r.id.clone()) },
                other => other,
            })?;
            Ok(LesionRecord { spectrum, ..r.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(*dataset.grid(), records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{LesionType, WavelengthGrid};
    use proptest::prelude::*;

    fn mean_std(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let s = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        (m, s)
    }

    #[test]
    fn hand_example() {
        let out = snv_values(&[1.0, 2.0, 3.0], &SnvConfig::default()).unwrap();
        assert_eq!(out, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn constant_spectrum_rejected() {
        let r = snv_values(&[5.0; 125], &SnvConfig::default());
        assert!(matches!(r, Err(Error::ZeroVariance { .. })));
    }

    #[test]
    fn dataset_error_names_record() {
        let grid = WavelengthGrid::standard();
        let good: Vec<f64> = (0..125).map(|i| (i as f64).sin()).collect();
        let d = Dataset::new(
            grid,
            vec![
                LesionRecord::real("ok", LesionType::Ack, Spectrum::new(good).unwrap()),
                LesionRecord::real("flat", LesionType::Mel, Spectrum::new(vec![2.0; 125]).unwrap()),
            ],
        )
        .unwrap();
        match snv_dataset(&d, &SnvConfig::default()) {
            Err(Error::ZeroVariance { id }) => assert_eq!(id.as_deref(), Some("flat")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dataset_fixed_point() {
        let grid = WavelengthGrid::standard();
        let a: Vec<f64> = (0..125).map(|i| (i as f64 * 0.1).sin() + 2.0).collect();
        let b: Vec<f64> = (0..125).map(|i| (i as f64 * 0.05).cos() * 3.0).collect();
        let d = Dataset::new(
            grid,
            vec![
                LesionRecord::real("a", LesionType::Ack, Spectrum::new(a.clone()).unwrap()),
                LesionRecord::real("b", LesionType::Bcc, Spectrum::new(b.clone()).unwrap()),
            ],
        )
        .unwrap();
        let once = snv_dataset(&d, &SnvConfig::default()).unwrap();
        assert_eq!(
            once.records()[0].spectrum.values(),
            snv_values(&a, &SnvConfig::default()).unwrap().as_slice()
        );
        let twice = snv_dataset(&once, &SnvConfig::default()).unwrap();
        for (x, y) in once.records().iter().zip(twice.records()) {
            assert_eq!(x.id, y.id);
            for (p, q) in x.spectrum.values().iter().zip(y.spectrum.values()) {
                assert!((p - q).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn output_is_standardized(v in proptest::collection::vec(-100.0f64..100.0, 3..200)) {
            prop_assume!(mean_std(&v).1 > 1e-6);
            let out = snv_values(&v, &SnvConfig::default()).unwrap();
            let (m, s) = mean_std(&out);
            prop_assert!(m.abs() < 1e-9);
            prop_assert!((s - 1.0).abs() < 1e-9);
        }

        #[test]
        fn affine_invariant(
            v in proptest::collection::vec(-10.0f64..10.0, 3..150),
            a in 0.1f64..10.0,
            b in -100.0f64..100.0,
        ) {
            prop_assume!(mean_std(&v).1 > 0.5);
            let x = snv_values(&v, &SnvConfig::default()).unwrap();
            let shifted: Vec<f64> = v.iter().map(|y| a * y + b).collect();
            let y = snv_values(&shifted, &SnvConfig::default()).unwrap();
            for (p, q) in x.iter().zip(&y) {
                prop_assert!((p - q).abs() < 1e-9);
            }
        }
    }
}
