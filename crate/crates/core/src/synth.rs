//! Synthetic reference spectra with the shape of the skin-lesion dataset:
//! six lesion strata, the standard 125-point grid and configurable class
//! separation.
//!
//! Each record is
//! `gain · (template(λ; jittered amplitudes) + baseline(λ)) + offset + noise`
//! with `gain = 1 + N(0, gain_sigma)`, `offset ~ N(0, offset_sigma)`, each
//! peak amplitude scaled by `1 + N(0, peak_sigma)` and i.i.d. channel noise
//! `N(0, noise_sigma)`. All perturbations have zero mean, so the expected
//! spectrum is the template plus the baseline.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Dataset, LesionRecord, LesionType, RngSeed, Spectrum, WavelengthGrid};

/// Gaussian absorbance band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub center_nm: f64,
    /// Standard deviation of the band.
    pub width_nm: f64,
    pub amplitude: f64,
}

impl Peak {
    pub fn at(&self, nm: f64) -> f64 {
        let z = (nm - self.center_nm) / self.width_nm;
        self.amplitude * (-0.5 * z * z).exp()
    }
}

/// Change applied to one template peak of the cancer lesions, multiplied by
/// the separation scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakShift {
    pub center_nm: f64,
    /// Relative amplitude change.
    pub amplitude: f64,
}

/// Per-record scatter. Gain and offset are removed exactly by SNV; peak
/// jitter is not.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatter {
    pub gain_sigma: f64,
    pub offset_sigma: f64,
    pub peak_sigma: f64,
}

impl Scatter {
    pub const NONE: Scatter = Scatter {
        gain_sigma: 0.0,
        offset_sigma: 0.0,
        peak_sigma: 0.0,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub counts: BTreeMap<LesionType, usize>,
    pub templates: BTreeMap<LesionType, Vec<Peak>>,
    pub baseline_offset: f64,
    /// Baseline increase per nm above the first grid point.
    pub baseline_slope: f64,
    pub noise_sigma: f64,
    pub separation_scale: f64,
    /// One entry per template peak (missing entries mean no shift).
    pub cancer_shift: Vec<PeakShift>,
    pub scatter: Scatter,
    pub seed: RngSeed,
}

/// Default lesion counts: ACK 336, SEK 188, NEV 62, BCC 302, SCC 72, MEL 11.
pub const REFERENCE_COUNTS: [(LesionType, usize); 6] = [
    (LesionType::Ack, 336),
    (LesionType::Sek, 188),
    (LesionType::Nev, 62),
    (LesionType::Bcc, 302),
    (LesionType::Scc, 72),
    (LesionType::Mel, 11),
];

pub const DEFAULT_SEPARATION: f64 = 0.4;

fn base_template() -> Vec<Peak> {
    vec![
        Peak {
            center_nm: 970.0,
            width_nm: 30.0,
            amplitude: 0.25,
        },
        Peak {
            center_nm: 1200.0,
            width_nm: 45.0,
            amplitude: 0.35,
        },
        Peak {
            center_nm: 1450.0,
            width_nm: 60.0,
            amplitude: 0.9,
        },
    ]
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            counts: REFERENCE_COUNTS.into_iter().collect(),
            templates: LesionType::ALL.into_iter().map(|l| (l, base_template())).collect(),
            baseline_offset: 0.3,
            baseline_slope: 2e-4,
            noise_sigma: 0.004,
            separation_scale: DEFAULT_SEPARATION,
            cancer_shift: vec![
                PeakShift {
                    center_nm: 4.0,
                    amplitude: -0.06,
                },
                PeakShift {
                    center_nm: -3.0,
                    amplitude: 0.05,
                },
                PeakShift {
                    center_nm: 0.0,
                    amplitude: 0.0,
                },
            ],
            scatter: Scatter {
                gain_sigma: 0.15,
                offset_sigma: 0.1,
                peak_sigma: 0.05,
            },
            seed: RngSeed(2024),
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.counts.values().all(|&c| c == 0) {
            return Err(Error::invalid("at least one lesion count must be positive"));
        }
        let s = self.scatter;
        for (name, v) in [
            ("noise_sigma", self.noise_sigma),
            ("gain_sigma", s.gain_sigma),
            ("offset_sigma", s.offset_sigma),
            ("peak_sigma", s.peak_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be a finite non-negative number")));
            }
        }
        if !self.separation_scale.is_finite() || !self.baseline_slope.is_finite() || !self.baseline_offset.is_finite() {
            return Err(Error::invalid("baseline and separation parameters must be finite"));
        }
        for (lesion, &count) in &self.counts {
            if count == 0 {
                continue;
            }
            let peaks = self
                .templates
                .get(lesion)
                .ok_or_else(|| Error::invalid(format!("no template for lesion {lesion}")))?;
            if peaks
                .iter()
                .any(|p| !(p.width_nm > 0.0) || !p.center_nm.is_finite() || !p.amplitude.is_finite())
            {
                return Err(Error::invalid(format!("template for {lesion} has an invalid peak")));
            }
        }
        Ok(())
    }

    /// Template peaks for `lesion` after the cancer shift.
    pub fn peaks(&self, lesion: LesionType) -> Vec<Peak> {
        let mut peaks = self.templates.get(&lesion).cloned().unwrap_or_default();
        if lesion.label().is_positive() {
            for (p, shift) in peaks.iter_mut().zip(&self.cancer_shift) {
                p.center_nm += self.separation_scale * shift.center_nm;
                p.amplitude *= 1.0 + self.separation_scale * shift.amplitude;
            }
        }
        peaks
    }

    /// Expected spectrum of `lesion` on the standard grid.
    pub fn template(&self, lesion: LesionType) -> Vec<f64> {
        let grid = WavelengthGrid::standard();
        let peaks = self.peaks(lesion);
        (0..grid.count)
            .map(|i| {
                let nm = grid.start_nm + grid.step_nm * i as f64;
                self.baseline(nm, &grid) + peaks.iter().map(|p| p.at(nm)).sum::<f64>()
            })
            .collect()
    }

    fn baseline(&self, nm: f64, grid: &WavelengthGrid) -> f64 {
        self.baseline_offset + self.baseline_slope * (nm - grid.start_nm)
    }

    fn sample(&self, peaks: &[Peak], seed: RngSeed) -> Vec<f64> {
        let grid = WavelengthGrid::standard();
        let mut rng = seed.rng();
        let mut normal = |s: f64| -> f64 {
            let z: f64 = rng.sample(StandardNormal);
            s * z
        };
        let gain = 1.0 + normal(self.scatter.gain_sigma);
        let offset = normal(self.scatter.offset_sigma);
        let jittered: Vec<Peak> = peaks
            .iter()
            .map(|p| Peak {
                amplitude: p.amplitude * (1.0 + normal(self.scatter.peak_sigma)),
                ..*p
            })
            .collect();
        (0..grid.count)
            .map(|i| {
                let nm = grid.start_nm + grid.step_nm * i as f64;
                let clean = self.baseline(nm, &grid) + jittered.iter().map(|p| p.at(nm)).sum::<f64>();
                gain * clean + offset + normal(self.noise_sigma)
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

/// Generates the dataset described by `spec`. Records are ordered by lesion
/// (ACK, SEK, NEV, BCC, SCC, MEL) with ids `<LESION>-<n>`; record `k` draws
/// from its own sub-stream of the seed.
pub fn generate(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let plan: Vec<(LesionType, usize)> = LesionType::ALL
        .into_iter()
        .flat_map(|l| (0..spec.counts.get(&l).copied().unwrap_or(0)).map(move |i| (l, i)))
        .collect();
    let peaks: BTreeMap<LesionType, Vec<Peak>> = LesionType::ALL.into_iter().map(|l| (l, spec.peaks(l))).collect();
    let records = plan
        .par_iter()
        .enumerate()
        .map(|(k, &(lesion, i))| {
            let values = spec.sample(&peaks[&lesion], spec.seed.derive(k as u64));
            Ok(LesionRecord::real(
                format!("{}-{:04}", lesion.code(), i + 1),
                lesion,
                Spectrum::new(values)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(WavelengthGrid::standard(), records)
}
