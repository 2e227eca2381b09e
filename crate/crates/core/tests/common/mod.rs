//! Independent reference implementations used by the integration tests and
//! the acceptance suite.
#![allow(dead_code)]

use ndarray::{Array1, Array2, ArrayView2};
use nirsc::features::FeatureKind;

/// Window bounds `(start, end)` by direct search over the nominal length.
pub fn oracle_windows(n: usize, count: usize, overlap: f64) -> Vec<(usize, usize)> {
    let span = 1.0 + (count - 1) as f64 * (1.0 - overlap);
    let mut m = n;
    while m > 0 && m as f64 * span > n as f64 + 1e-9 {
        m -= 1;
    }
    let stride = ((m as f64 * (1.0 - overlap) + 1e-9).floor() as usize).max(1);
    let mut out: Vec<(usize, usize)> = (0..count)
        .map(|i| {
            let s = (i * stride).min(n - m);
            (s, s + m)
        })
        .collect();
    out.last_mut().unwrap().1 = n;
    out
}

/// One statistic of a window, written straight from its textbook formula.
pub fn oracle_feature(w: &[f64], kind: FeatureKind) -> f64 {
    let m = w.len() as f64;
    let mean = w.iter().sum::<f64>() / m;
    let central = |p: i32| w.iter().map(|x| (x - mean).powi(p)).sum::<f64>() / m;
    let sd = central(2).sqrt();
    let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
    let peak = w.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let rms = (w.iter().map(|x| x * x).sum::<f64>() / m).sqrt();
    let flat = sd <= 16.0 * f64::EPSILON * peak;
    match kind {
        FeatureKind::Mean => mean,
        FeatureKind::Median => {
            let mut s = w.to_vec();
            s.sort_by(f64::total_cmp);
            let k = s.len();
            if k % 2 == 1 {
                s[k / 2]
            } else {
                (s[k / 2 - 1] + s[k / 2]) / 2.0
            }
        }
        FeatureKind::Std => sd,
        FeatureKind::Kurtosis => {
            if flat {
                0.0
            } else {
                central(4) / sd.powi(4)
            }
        }
        FeatureKind::Skewness => {
            if flat {
                0.0
            } else {
                central(3) / sd.powi(3)
            }
        }
        FeatureKind::Max => max,
        FeatureKind::Min => min,
        FeatureKind::Peak => peak,
        FeatureKind::PeakToPeak => max - min,
        FeatureKind::Rms => rms,
        FeatureKind::Variance => central(2) * m / (m - 1.0),
        FeatureKind::CrestFactor => {
            if rms == 0.0 {
                0.0
            } else {
                peak / rms
            }
        }
    }
}

/// Feature row for one spectrum: window-major, then canonical kind order.
pub fn oracle_feature_row(row: &[f64], count: usize, overlap: f64, kinds: &[FeatureKind]) -> Vec<f64> {
    oracle_windows(row.len(), count, overlap)
        .into_iter()
        .flat_map(|(s, e)| kinds.iter().map(move |&k| oracle_feature(&row[s..e], k)))
        .collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
    pub left: f64,
    pub right: f64,
}

/// Best depth-1 split of the first boosting round by scanning every feature
/// and every midpoint between distinct sorted values.
pub fn stump_oracle(x: ArrayView2<f64>, y: &[f64], class_weight: f64, lambda: f64) -> Option<Stump> {
    let w: Vec<f64> = y.iter().map(|&t| if t == 1.0 { class_weight } else { 1.0 }).collect();
    let wp: f64 = w.iter().zip(y).filter(|(_, &t)| t == 1.0).map(|(w, _)| w).sum();
    let wn: f64 = w.iter().zip(y).filter(|(_, &t)| t == 0.0).map(|(w, _)| w).sum();
    let p = 1.0 / (1.0 + (-(wp / wn).ln()).exp());
    let g: Vec<f64> = w.iter().zip(y).map(|(w, t)| w * (p - t)).collect();
    let h: Vec<f64> = w.iter().map(|w| w * p * (1.0 - p)).collect();
    let obj = |g: f64, h: f64| g * g / (h + lambda);
    let (gt, ht): (f64, f64) = (g.iter().sum(), h.iter().sum());
    let mut best: Option<Stump> = None;
    for j in 0..x.ncols() {
        let mut vals: Vec<f64> = x.column(j).to_vec();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for pair in vals.windows(2) {
            let mut t = pair[0] + (pair[1] - pair[0]) / 2.0;
            if t >= pair[1] {
                t = pair[0];
            }
            let (mut gl, mut hl) = (0.0, 0.0);
            for i in 0..x.nrows() {
                if x[[i, j]] <= t {
                    gl += g[i];
                    hl += h[i];
                }
            }
            let (gr, hr) = (gt - gl, ht - hl);
            let gain = 0.5 * (obj(gl, hl) + obj(gr, hr) - obj(gt, ht));
            if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                best = Some(Stump {
                    feature: j,
                    threshold: t,
                    gain,
                    left: -gl / (hl + lambda),
                    right: -gr / (hr + lambda),
                });
            }
        }
    }
    best
}

/// Shapley values by walking every feature permutation against every
/// background row.
pub fn shapley_by_permutations<F>(f: F, x: &[f64], background: ArrayView2<f64>) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let d = x.len();
    let mut perms = Vec::new();
    permute(&mut (0..d).collect(), 0, &mut perms);
    let mut phi = vec![0.0; d];
    for perm in &perms {
        for b in background.rows() {
            let mut z: Vec<f64> = b.to_vec();
            let mut prev = f(&z);
            for &j in perm {
                z[j] = x[j];
                let cur = f(&z);
                phi[j] += cur - prev;
                prev = cur;
            }
        }
    }
    let n = (perms.len() * background.nrows()) as f64;
    phi.iter().map(|v| v / n).collect()
}

fn permute(v: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
    if k == v.len() {
        out.push(v.clone());
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, out);
        v.swap(k, i);
    }
}

/// Two Gaussian bumps on a constant floor, 125 channels.
pub fn two_peak_template() -> Array1<f64> {
    Array1::from_shape_fn(125, |j| {
        let x = j as f64;
        0.8 * (-((x - 35.0) / 8.0).powi(2) / 2.0).exp() + 0.5 * (-((x - 85.0) / 12.0).powi(2) / 2.0).exp() + 0.2
    })
}

/// Largest deviation of `s` from the segment point `a + gap·(b − a)`.
pub fn segment_residual(s: &[f64], a: &[f64], b: &[f64], gap: f64) -> f64 {
    s.iter()
        .zip(a.iter().zip(b))
        .map(|(s, (a, b))| (s - (a + gap * (b - a))).abs())
        .fold(0.0, f64::max)
}

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    use rand::Rng;
    let mut rng = nirsc::RngSeed(seed).rng();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-2.0..2.0))
}
