//! Domain types shared by every stage of the pipeline.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Wavelength axis shared by all spectra of a dataset.
///
/// Wavelengths are metadata labels only; no computation reads them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavelengthGrid {
    pub start_nm: f64,
    pub step_nm: f64,
    pub count: usize,
}

impl WavelengthGrid {
    pub const STANDARD_COUNT: usize = 125;

    /// 900.0 + 6.4·i nm for i in 0..125 (last point 1693.6 nm).
    pub const fn standard() -> Self {
        WavelengthGrid {
            start_nm: 900.0,
            step_nm: 6.4,
            count: Self::STANDARD_COUNT,
        }
    }

    pub fn wavelength(&self, i: usize) -> f64 {
        // Rounded to 0.1 nm so labels read 906.4 rather than 906.4000000000001.
        ((self.start_nm + i as f64 * self.step_nm) * 10.0).round() / 10.0
    }

    pub fn wavelengths(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.wavelength(i)).collect()
    }

    /// Spectral column header for channel `i`, e.g. `nm_0906.4`.
    pub fn column_name(&self, i: usize) -> String {
        format!("nm_{:06.1}", self.wavelength(i))
    }
}

impl Default for WavelengthGrid {
    fn default() -> Self {
        Self::standard()
    }
}

/// Absorbance values on a [`WavelengthGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite absorbance at channel {i}")));
        }
        Ok(Spectrum(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LesionType {
    #[serde(rename = "ACK")]
    Ack,
    #[serde(rename = "SEK")]
    Sek,
    #[serde(rename = "NEV")]
    Nev,
    #[serde(rename = "BCC")]
    Bcc,
    #[serde(rename = "SCC")]
    Scc,
    #[serde(rename = "MEL")]
    Mel,
}

impl LesionType {
    pub const ALL: [LesionType; 6] = [
        LesionType::Ack,
        LesionType::Sek,
        LesionType::Nev,
        LesionType::Bcc,
        LesionType::Scc,
        LesionType::Mel,
    ];

    pub fn code(self) -> &'static str {
        match self {
            LesionType::Ack => "ACK",
            LesionType::Sek => "SEK",
            LesionType::Nev => "NEV",
            LesionType::Bcc => "BCC",
            LesionType::Scc => "SCC",
            LesionType::Mel => "MEL",
        }
    }

    pub fn label(self) -> Label {
        binary_label(self)
    }
}

impl fmt::Display for LesionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for LesionType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LesionType::ALL
            .into_iter()
            .find(|l| l.code() == s)
            .ok_or_else(|| Error::invalid(format!("unknown lesion type `{s}`")))
    }
}

/// Binary diagnosis; cancer is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    NonCancer = 0,
    Cancer = 1,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn as_f64(self) -> f64 {
        self as u8 as f64
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Label::NonCancer),
            1 => Ok(Label::Cancer),
            _ => Err(Error::invalid(format!("label must be 0 or 1, got {v}"))),
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Cancer
    }
}

/// BCC, SCC and MEL are cancer; ACK, SEK and NEV are not.
pub fn binary_label(lesion: LesionType) -> Label {
    match lesion {
        LesionType::Bcc | LesionType::Scc | LesionType::Mel => Label::Cancer,
        LesionType::Ack | LesionType::Sek | LesionType::Nev => Label::NonCancer,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LesionRecord {
    pub id: String,
    /// `None` only for synthetic records.
    pub lesion: Option<LesionType>,
    pub label: Label,
    pub spectrum: Spectrum,
    pub synthetic: bool,
}

impl LesionRecord {
    pub fn real(id: impl Into<String>, lesion: LesionType, spectrum: Spectrum) -> Self {
        LesionRecord {
            id: id.into(),
            lesion: Some(lesion),
            label: binary_label(lesion),
            spectrum,
            synthetic: false,
        }
    }

    pub fn synthetic(id: impl Into<String>, label: Label, spectrum: Spectrum) -> Self {
        LesionRecord {
            id: id.into(),
            lesion: None,
            label,
            spectrum,
            synthetic: true,
        }
    }

    /// Stratification key; synthetic records form their own stratum.
    pub fn stratum(&self) -> Option<LesionType> {
        self.lesion
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    grid: WavelengthGrid,
    records: Vec<LesionRecord>,
}

impl Dataset {
    /// Validates unique ids, spectrum lengths and the lesion/label mapping.
    pub fn new(grid: WavelengthGrid, records: Vec<LesionRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if r.spectrum.len() != grid.count {
                return Err(Error::GridMismatch {
                    expected: grid.count,
                    found: r.spectrum.len(),
                });
            }
            if !seen.insert(r.id.as_str()) {
                return Err(Error::invalid(format!("duplicate record id `{}`", r.id)));
            }
            match (r.lesion, r.synthetic) {
                (Some(l), _) if binary_label(l) != r.label => {
                    return Err(Error::invalid(format!(
                        "record `{}`: label {} contradicts lesion {l}",
                        r.id,
                        r.label.as_u8()
                    )))
                }
                (None, false) => {
                    return Err(Error::invalid(format!(
                        "record `{}`: only synthetic records may omit the lesion type",
                        r.id
                    )))
                }
                _ => {}
            }
        }
        Ok(Dataset { grid, records })
    }

    pub fn empty(grid: WavelengthGrid) -> Self {
        Dataset {
            grid,
            records: Vec::new(),
        }
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn records(&self) -> &[LesionRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<LesionRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.id.as_str())
    }

    /// Spectra as a samples × channels matrix.
    pub fn spectra_matrix(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.records.len(), self.grid.count));
        for (mut row, r) in m.rows_mut().into_iter().zip(&self.records) {
            row.iter_mut().zip(r.spectrum.values()).for_each(|(d, s)| *d = *s);
        }
        m
    }

    /// New dataset holding the records at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            grid: self.grid,
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    pub fn filter(&self, mut keep: impl FnMut(&LesionRecord) -> bool) -> Dataset {
        Dataset {
            grid: self.grid,
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    /// Appends records after re-running the dataset invariants.
    pub fn extended(&self, extra: Vec<LesionRecord>) -> Result<Dataset> {
        let mut records = self.records.clone();
        records.extend(extra);
        Dataset::new(self.grid, records)
    }

    pub fn map_spectra(&self, mut f: impl FnMut(&LesionRecord) -> Result<Spectrum>) -> Result<Dataset> {
        let records = self
            .records
            .iter()
            .map(|r| {
                Ok(LesionRecord {
                    spectrum: f(r)?,
                    ..r.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(self.grid, records)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ClassCounts {
    pub by_lesion: BTreeMap<LesionType, usize>,
    pub synthetic: usize,
    pub cancer: usize,
    pub non_cancer: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.cancer + self.non_cancer
    }

    pub fn lesion(&self, l: LesionType) -> usize {
        self.by_lesion.get(&l).copied().unwrap_or(0)
    }
}

pub fn class_counts(dataset: &Dataset) -> Result<ClassCounts> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut counts = ClassCounts::default();
    for r in dataset.records() {
        match r.lesion {
            Some(l) => *counts.by_lesion.entry(l).or_default() += 1,
            None => counts.synthetic += 1,
        }
        match r.label {
            Label::Cancer => counts.cancer += 1,
            Label::NonCancer => counts.non_cancer += 1,
        }
    }
    Ok(counts)
}

/// Explicit seed carried by every stochastic operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent child seed for a numbered sub-stream (splitmix64 mix).
    pub fn derive(self, stream: u64) -> RngSeed {
        let mut z = self
            .0
            .wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngSeed(z ^ (z >> 31))
    }
}

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}
