//! Windowed statistical features over spectral subsequences.
//!
//! A spectrum is cut into `window_count` (optionally overlapping) windows and
//! each enabled statistic is computed per window. Columns are ordered
//! window-major, then by [`FeatureKind::ALL`].

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::path::Path;

use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Dataset, WavelengthGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Mean,
    Median,
    Std,
    Kurtosis,
    Skewness,
    Max,
    Min,
    Peak,
    PeakToPeak,
    Rms,
    Variance,
    CrestFactor,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 12] = [
        FeatureKind::Mean,
        FeatureKind::Median,
        FeatureKind::Std,
        FeatureKind::Kurtosis,
        FeatureKind::Skewness,
        FeatureKind::Max,
        FeatureKind::Min,
        FeatureKind::Peak,
        FeatureKind::PeakToPeak,
        FeatureKind::Rms,
        FeatureKind::Variance,
        FeatureKind::CrestFactor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Mean => "mean",
            FeatureKind::Median => "median",
            FeatureKind::Std => "std",
            FeatureKind::Kurtosis => "kurtosis",
            FeatureKind::Skewness => "skewness",
            FeatureKind::Max => "max",
            FeatureKind::Min => "min",
            FeatureKind::Peak => "peak",
            FeatureKind::PeakToPeak => "peak_to_peak",
            FeatureKind::Rms => "rms",
            FeatureKind::Variance => "variance",
            FeatureKind::CrestFactor => "crest_factor",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown feature kind `{s}`")))
    }
}

/// Set of enabled feature kinds, iterated in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureMask(BTreeSet<FeatureKind>);

impl FeatureMask {
    pub fn all() -> Self {
        FeatureMask(FeatureKind::ALL.into_iter().collect())
    }

    pub fn only(kinds: &[FeatureKind]) -> Self {
        FeatureMask(kinds.iter().copied().collect())
    }

    pub fn contains(&self, kind: FeatureKind) -> bool {
        self.0.contains(&kind)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = FeatureKind> + '_ {
        self.0.iter().copied()
    }

    /// Named subsets exposed to the tuner.
    pub fn preset(name: &str) -> Result<Self> {
        use FeatureKind::*;
        Ok(match name {
            "all" => Self::all(),
            "moments" => Self::only(&[Mean, Std, Variance, Skewness, Kurtosis]),
            "location" => Self::only(&[Mean, Median, Max, Min]),
            "amplitude" => Self::only(&[Peak, PeakToPeak, Rms, CrestFactor]),
            "mean_std" => Self::only(&[Mean, Std]),
            other => return Err(Error::invalid(format!("unknown feature preset `{other}`"))),
        })
    }

    pub const PRESETS: [&'static str; 5] = ["all", "moments", "location", "amplitude", "mean_std"];
}

impl Default for FeatureMask {
    fn default() -> Self {
        Self::all()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub window_count: usize,
    #[serde(default)]
    pub overlap_fraction: f64,
    #[serde(default)]
    pub feature_mask: FeatureMask,
}

impl WindowSpec {
    pub fn new(window_count: usize) -> Self {
        WindowSpec {
            window_count,
            overlap_fraction: 0.0,
            feature_mask: FeatureMask::all(),
        }
    }
}

/// A contiguous window `[start, start + len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: usize,
    pub len: usize,
}

impl Window {
    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

/// Window layout for a signal of `signal_length` points.
///
/// The nominal length is the largest `m` with `m + (count − 1)·m·(1 − overlap)
/// ≤ length`; stride is `max(1, ⌊m·(1 − overlap)⌋)` and the last window is
/// stretched to the end of the signal.
pub fn plan_windows(signal_length: usize, spec: &WindowSpec) -> Result<Vec<Window>> {
    let count = spec.window_count;
    let overlap = spec.overlap_fraction;
    if count == 0 {
        return Err(Error::invalid("window count must be at least 1"));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::invalid(format!(
            "overlap fraction must lie in [0, 1), got {overlap}"
        )));
    }
    let span = 1.0 + (count - 1) as f64 * (1.0 - overlap);
    let len = ((signal_length as f64 / span) + 1e-9).floor() as usize;
    if len < 2 {
        return Err(Error::invalid(format!(
            "{count} windows over {signal_length} points leave windows shorter than 2"
        )));
    }
    let stride = (((len as f64) * (1.0 - overlap)) + 1e-9).floor().max(1.0) as usize;
    let mut windows: Vec<Window> = (0..count)
        .map(|i| Window {
            start: (i * stride).min(signal_length - len),
            len,
        })
        .collect();
    let last = windows.last_mut().expect("count >= 1");
    last.len = signal_length - last.start;
    Ok(windows)
}

/// Moments of a window, shared by several features.
struct Moments {
    mean: f64,
    std: f64,
    m3: f64,
    m4: f64,
    max: f64,
    min: f64,
    peak: f64,
    rms: f64,
    ss: f64,
}

fn moments(w: &[f64]) -> Moments {
    let m = w.len() as f64;
    let mean = w.iter().sum::<f64>() / m;
    let (mut ss, mut m3, mut m4, mut sq) = (0.0, 0.0, 0.0, 0.0);
    let (mut max, mut min, mut peak) = (f64::NEG_INFINITY, f64::INFINITY, 0.0f64);
    for &x in w {
        let d = x - mean;
        let d2 = d * d;
        ss += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        sq += x * x;
        max = max.max(x);
        min = min.min(x);
        peak = peak.max(x.abs());
    }
    Moments {
        mean,
        std: (ss / m).sqrt(),
        m3: m3 / m,
        m4: m4 / m,
        max,
        min,
        peak,
        rms: (sq / m).sqrt(),
        ss,
    }
}

/// A window whose population std is within rounding noise of zero.
pub fn is_degenerate(std: f64, peak: f64) -> bool {
    std <= 16.0 * f64::EPSILON * peak
}

pub fn median(w: &[f64]) -> f64 {
    let mut s = w.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Features of one window, in mask order.
///
/// Std uses the population form; variance keeps the `m − 1` denominator.
/// Skewness, kurtosis (non-excess) and crest factor are 0 for degenerate
/// windows.
pub fn window_features(w: &[f64], mask: &FeatureMask) -> Vec<(FeatureKind, f64)> {
    let mo = moments(w);
    let flat = is_degenerate(mo.std, mo.peak);
    mask.iter()
        .map(|kind| {
            let v = match kind {
                FeatureKind::Mean => mo.mean,
                FeatureKind::Median => median(w),
                FeatureKind::Std => mo.std,
                FeatureKind::Kurtosis if flat => 0.0,
                FeatureKind::Kurtosis => mo.m4 / mo.std.powi(4),
                FeatureKind::Skewness if flat => 0.0,
                FeatureKind::Skewness => mo.m3 / mo.std.powi(3),
                FeatureKind::Max => mo.max,
                FeatureKind::Min => mo.min,
                FeatureKind::Peak => mo.peak,
                FeatureKind::PeakToPeak => mo.max - mo.min,
                FeatureKind::Rms => mo.rms,
                FeatureKind::Variance => mo.ss / (w.len() as f64 - 1.0),
                FeatureKind::CrestFactor if mo.rms == 0.0 => 0.0,
                FeatureKind::CrestFactor => mo.peak / mo.rms,
            };
            (kind, v)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub kind: FeatureKind,
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    pub start_nm: f64,
    /// Wavelength of the last channel in the window.
    pub end_nm: f64,
}

impl FeatureColumn {
    pub fn name(&self) -> String {
        format!(
            "{}[{}..{}]@{:.1}-{:.1}nm",
            self.kind, self.start, self.end, self.start_nm, self.end_nm
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub columns: Vec<FeatureColumn>,
    pub values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(FeatureColumn::name).collect()
    }

    /// CSV with `id,label` followed by one column per feature.
    pub fn write_csv(&self, ids: &[String], labels: &[u8], path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        let io = |e: csv::Error| Error::io(path, std::io::Error::other(e));
        let mut header = vec!["id".to_string(), "label".to_string()];
        header.extend(self.column_names());
        w.write_record(&header).map_err(io)?;
        for ((row, id), label) in self.values.rows().into_iter().zip(ids).zip(labels) {
            let mut rec = vec![id.clone(), label.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        w.into_inner()
            .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?
            .flush()
            .map_err(|e| Error::io(path, e))
    }
}

/// Features for each row of a samples × channels matrix.
pub fn extract_matrix(spectra: ArrayView2<f64>, grid: &WavelengthGrid, spec: &WindowSpec) -> Result<FeatureMatrix> {
    if spec.feature_mask.is_empty() {
        return Err(Error::invalid("feature mask is empty"));
    }
    let windows = plan_windows(spectra.ncols(), spec)?;
    let columns: Vec<FeatureColumn> = windows
        .iter()
        .flat_map(|w| {
            spec.feature_mask.iter().map(move |kind| FeatureColumn {
                kind,
                start: w.start,
                end: w.end(),
                start_nm: grid.wavelength(w.start),
                end_nm: grid.wavelength(w.end() - 1),
            })
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..spectra.nrows())
        .into_par_iter()
        .map(|i| {
            let row = spectra.row(i).to_vec();
            windows
                .iter()
                .flat_map(|w| window_features(&row[w.start..w.end()], &spec.feature_mask))
                .map(|(_, v)| v)
                .collect()
        })
        .collect();
    let mut values = Array2::zeros((spectra.nrows(), columns.len()));
    for (mut dst, src) in values.rows_mut().into_iter().zip(rows) {
        dst.iter_mut().zip(src).for_each(|(d, s)| *d = s);
    }
    Ok(FeatureMatrix { columns, values })
}

pub fn extract_features(dataset: &Dataset, spec: &WindowSpec) -> Result<FeatureMatrix> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    extract_matrix(dataset.spectra_matrix().view(), dataset.grid(), spec)
}
