//! Dataset CSV I/O, the stratified train/test split and stratified k-fold plans.
//!
//! CSV layout: `id,lesion,label,synthetic,nm_0900.0,…,nm_1693.6`. Synthetic
//! records carry lesion `SYN`. Floats are written with Rust's shortest
//! round-trip formatting, so a write/read cycle is bit-exact.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Dataset, Label, LesionRecord, LesionType, RngSeed, Spectrum, WavelengthGrid};

const META_COLUMNS: [&str; 4] = ["id", "lesion", "label", "synthetic"];
const SYNTHETIC_LESION: &str = "SYN";

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(file).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Parses the dataset CSV format from any reader.
pub fn parse_dataset(reader: impl Read) -> Result<Dataset> {
    let grid = WavelengthGrid::standard();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers().map_err(csv_error)?.clone();
    let expected = META_COLUMNS.len() + grid.count;
    if header.len() != expected {
        return Err(Error::GridMismatch {
            expected: grid.count,
            found: header.len().saturating_sub(META_COLUMNS.len()),
        });
    }
    for (i, name) in header.iter().enumerate() {
        let want = match i {
            0..=3 => META_COLUMNS[i].to_string(),
            _ => grid.column_name(i - META_COLUMNS.len()),
        };
        if name != want {
            return Err(Error::invalid(format!(
                "header column {} is `{name}`, expected `{want}`",
                i + 1
            )));
        }
    }

    let mut records = Vec::new();
    for (row_idx, row) in rdr.records().enumerate() {
        // 1-based line number including the header.
        let line = row_idx + 2;
        let row = row.map_err(csv_error)?;
        if row.len() != expected {
            return Err(Error::GridMismatch {
                expected: grid.count,
                found: row.len().saturating_sub(META_COLUMNS.len()),
            });
        }
        let bad = |what: &str| Error::invalid(format!("row {line}: {what}"));
        let id = row[0].to_string();
        if id.is_empty() {
            return Err(bad("empty id"));
        }
        let label = match &row[2] {
            "0" => Label::NonCancer,
            "1" => Label::Cancer,
            other => return Err(bad(&format!("label `{other}` is not 0/1"))),
        };
        let synthetic = match &row[3] {
            "0" => false,
            "1" => true,
            other => return Err(bad(&format!("synthetic flag `{other}` is not 0/1"))),
        };
        let lesion = match &row[1] {
            SYNTHETIC_LESION => None,
            code => Some(
                code.parse::<LesionType>()
                    .map_err(|_| bad(&format!("unknown lesion `{code}`")))?,
            ),
        };
        let values = row
            .iter()
            .skip(META_COLUMNS.len())
            .enumerate()
            .map(|(c, v)| {
                v.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| {
                    bad(&format!(
                        "column {} value `{v}` is not a finite number",
                        grid.column_name(c)
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let spectrum = Spectrum::new(values)?;
        records.push(LesionRecord {
            id,
            lesion,
            label,
            spectrum,
            synthetic,
        });
    }
    Dataset::new(grid, records)
}

pub fn write_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    render_dataset(dataset, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn render_dataset(dataset: &Dataset, out: &mut impl Write) -> std::io::Result<()> {
    let grid = dataset.grid();
    let mut wtr = csv::WriterBuilder::new().from_writer(out);
    let mut header: Vec<String> = META_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..grid.count).map(|i| grid.column_name(i)));
    wtr.write_record(&header)?;
    for r in dataset.records() {
        let mut row = Vec::with_capacity(header.len());
        row.push(r.id.clone());
        row.push(r.lesion.map_or(SYNTHETIC_LESION, LesionType::code).to_string());
        row.push(r.label.as_u8().to_string());
        row.push(if r.synthetic { "1" } else { "0" }.to_string());
        row.extend(r.spectrum.values().iter().map(|v| v.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<csv>", io),
        other => Error::invalid(format!("malformed CSV: {other:?}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: RngSeed,
    /// Fail with `DegenerateClass` when any lesion stratum ends up with an
    /// empty train or test side.
    pub require_nonempty_strata: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.2,
            seed: RngSeed(0),
            require_nonempty_strata: false,
        }
    }
}

/// Number of test samples per stratum.
///
/// The test total is `ceil(fraction·N)`; each stratum first receives
/// `floor(fraction·n_s)` and the leftover slots go to the largest fractional
/// remainders (ties: larger stratum, then stratum order).
pub fn allocate_test_counts(stratum_sizes: &[usize], fraction: f64) -> Vec<usize> {
    let n: usize = stratum_sizes.iter().sum();
    // Guard against 0.2·971 = 194.20000000000002-style drift.
    let total = ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let exact: Vec<f64> = stratum_sizes.iter().map(|&s| fraction * s as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| (e + 1e-9).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..stratum_sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - counts[a] as f64;
        let rb = exact[b] - counts[b] as f64;
        rb.partial_cmp(&ra)
            .unwrap()
            .then(stratum_sizes[b].cmp(&stratum_sizes[a]))
            .then(a.cmp(&b))
    });
    let mut remaining = total.saturating_sub(assigned);
    for &s in order.iter().cycle().take(order.len() * 2) {
        if remaining == 0 {
            break;
        }
        if counts[s] < stratum_sizes[s] {
            counts[s] += 1;
            remaining -= 1;
        }
    }
    counts
}

/// Group record indices by stratum (lesion type, synthetic last), keeping
/// dataset order inside each group.
fn strata(dataset: &Dataset) -> Vec<(Option<LesionType>, Vec<usize>)> {
    let mut groups: BTreeMap<(bool, Option<LesionType>), Vec<usize>> = BTreeMap::new();
    for (i, r) in dataset.records().iter().enumerate() {
        groups.entry((r.lesion.is_none(), r.lesion)).or_default().push(i);
    }
    groups.into_iter().map(|((_, l), v)| (l, v)).collect()
}

/// Stratified by lesion type. Synthetic records, if any, always go to train.
pub fn stratified_split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    if !(0.0..1.0).contains(&spec.test_fraction) {
        return Err(Error::invalid(format!(
            "test fraction must lie in [0, 1), got {}",
            spec.test_fraction
        )));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let groups: Vec<_> = strata(dataset).into_iter().filter(|(l, _)| l.is_some()).collect();
    let sizes: Vec<usize> = groups.iter().map(|(_, v)| v.len()).collect();
    let test_counts = allocate_test_counts(&sizes, spec.test_fraction);

    let mut rng = spec.seed.rng();
    let mut in_test = vec![false; dataset.len()];
    for ((lesion, members), &t) in groups.iter().zip(&test_counts) {
        if spec.require_nonempty_strata && (t == 0 || t == members.len()) {
            return Err(Error::degenerate(format!(
                "stratum {} of size {} leaves an empty side ({} test)",
                lesion.map_or("SYN", LesionType::code),
                members.len(),
                t
            )));
        }
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        for &i in &shuffled[..t] {
            in_test[i] = true;
        }
    }
    let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..dataset.len()).partition(|&i| in_test[i]);
    Ok((dataset.select(&train_idx), dataset.select(&test_idx)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: RngSeed,
    pub assignment: BTreeMap<String, usize>,
}

impl FoldPlan {
    /// Indices into `dataset` for (training portion, validation fold).
    pub fn fold_indices(&self, dataset: &Dataset, fold: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        if fold >= self.k {
            return Err(Error::invalid(format!("fold {fold} out of range for k = {}", self.k)));
        }
        let mut train = Vec::new();
        let mut val = Vec::new();
        for (i, r) in dataset.records().iter().enumerate() {
            match self.assignment.get(&r.id) {
                Some(&f) if f == fold => val.push(i),
                Some(_) => train.push(i),
                None => {
                    return Err(Error::invalid(format!(
                        "record `{}` is not covered by the fold plan",
                        r.id
                    )))
                }
            }
        }
        Ok((train, val))
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.assignment.values() {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fold plan serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let plan: FoldPlan = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        if plan.assignment.values().any(|&f| f >= plan.k) {
            return Err(Error::invalid("fold index out of range in fold plan"));
        }
        Ok(plan)
    }
}

/// Stratified k-fold assignment.
///
/// Each lesion stratum is shuffled, strata are concatenated, and position p
/// goes to fold `p mod k`. Fold sizes then differ by at most one, and so do
/// the per-stratum counts across folds.
pub fn make_folds(train: &Dataset, k: usize, seed: RngSeed) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::invalid(format!("k must be at least 2, got {k}")));
    }
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if train.records().iter().any(|r| r.synthetic) {
        return Err(Error::invalid(
            "fold plans are built on real records only; synthetic records present",
        ));
    }
    let groups = strata(train);
    if let Some((l, members)) = groups.iter().find(|(_, m)| m.len() < k) {
        return Err(Error::degenerate(format!(
            "stratum {} has {} samples, fewer than k = {k}",
            l.map_or("SYN", LesionType::code),
            members.len()
        )));
    }
    let mut rng = seed.rng();
    let mut assignment = BTreeMap::new();
    let mut position = 0usize;
    for (_, members) in groups {
        let mut shuffled = members;
        shuffled.shuffle(&mut rng);
        for i in shuffled {
            assignment.insert(train.records()[i].id.clone(), position % k);
            position += 1;
        }
    }
    Ok(FoldPlan { k, seed, assignment })
}

/// True when no id appears in more than one of the given id sets.
pub fn pairwise_disjoint<'a>(sets: impl IntoIterator<Item = Vec<&'a str>>) -> bool {
    let mut seen = HashSet::new();
    sets.into_iter().flatten().all(|id| seen.insert(id))
}
