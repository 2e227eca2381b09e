//! Gradient-based one-side sampling.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GossConfig {
    /// Fraction of largest-|gradient| samples always kept.
    pub top_fraction: f64,
    /// Fraction of all samples drawn at random from the remainder.
    pub random_fraction: f64,
}

impl GossConfig {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = (self.top_fraction, self.random_fraction);
        if !(a > 0.0 && a <= 1.0) || !(b >= 0.0) || a + b > 1.0 + 1e-12 {
            return Err(Error::invalid(format!(
                "GOSS needs 0 < a <= 1, b >= 0 and a + b <= 1 (a = {a}, b = {b})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GossSample {
    /// Selected sample indices, ascending.
    pub indices: Vec<usize>,
    /// Multiplier applied to g and h of the matching index.
    pub multipliers: Vec<f64>,
}

/// Keeps the top `⌈a·n⌉` samples by |gradient| (ties: lower index first)
/// with multiplier 1, plus `⌈b·n⌉` uniform draws from the rest with
/// multiplier `(1 − a)/b`.
pub fn goss_sample(gradients: &[f64], config: &GossConfig, seed: RngSeed) -> Result<GossSample> {
    config.validate()?;
    let n = gradients.len();
    let top_n = ((config.top_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let top_n = top_n.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| gradients[j].abs().total_cmp(&gradients[i].abs()).then(i.cmp(&j)));
    let (top, rest) = order.split_at(top_n);

    let rand_n = (((config.random_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize).min(rest.len());
    let mut picked: Vec<(usize, f64)> = top.iter().map(|&i| (i, 1.0)).collect();
    if rand_n > 0 {
        let amplify = (1.0 - config.top_fraction) / config.random_fraction;
        let mut rng = seed.rng();
        picked.extend(
            index::sample(&mut rng, rest.len(), rand_n)
                .into_iter()
                .map(|k| (rest[k], amplify)),
        );
    }
    picked.sort_by_key(|p| p.0);
    Ok(GossSample {
        indices: picked.iter().map(|p| p.0).collect(),
        multipliers: picked.iter().map(|p| p.1).collect(),
    })
}
