//! Classifiers: gradient-boosted trees and PLS-DA.

pub mod gbdt;
pub mod goss;
pub mod plsda;

pub use gbdt::{
    gbdt_fit, gbdt_fit_with_history, gbdt_predict_proba, leaf_weight, sigmoid, split_gain, weighted_logloss,
    BoostedEnsemble, FitReport, GbdtConfig, Node, Tree,
};
pub use goss::{goss_sample, GossConfig, GossSample};
pub use plsda::{plsda_fit, plsda_fit_detailed, plsda_predict, PlsdaConfig, PlsdaFit, PlsdaModel, PlsdaPrediction};
