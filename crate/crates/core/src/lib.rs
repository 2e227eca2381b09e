//! Spectral classification toolkit for near-infrared skin-lesion spectra.
//!
//! Pipeline stages live in their own modules: [`ingest`] (CSV, splits,
//! folds), [`preprocess`] (SNV), [`features`] (windowed statistics),
//! [`augment`] (SMOTE, GAN + PCA ellipse filter), [`models`] (boosted trees,
//! PLS-DA), [`eval`] (metrics and cross-validation), [`tune`], [`explain`]
//! and [`synth`] (synthetic reference spectra).

// `!(x > y)` rejects NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod error;
pub mod eval;
pub mod explain;
pub mod features;
pub mod ingest;
pub mod models;
pub mod preprocess;
pub mod synth;
pub mod tune;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    binary_label, class_counts, ClassCounts, Dataset, Label, LesionRecord, LesionType, RngSeed, Spectrum,
    WavelengthGrid,
};
