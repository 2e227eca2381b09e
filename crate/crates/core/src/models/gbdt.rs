//! Newton-boosted regression trees for binary logistic loss.
//!
//! Each tree is fitted to the first and second derivatives of the weighted
//! logloss. Splits maximize
//! `½[T(G_L)²/(H_L+λ) + T(G_R)²/(H_R+λ) − T(G)²/(H+λ)]` over exact
//! midpoint thresholds, where `T` soft-thresholds by `α`; leaves get
//! `−T(G)/(H+λ)`. Trees grow best-first (leaf-wise) until `max_leaves` or
//! `max_depth` binds. Row sampling is either uniform (`subsample`) or GOSS.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::ArrayView2;
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::goss::{goss_sample, GossConfig};
use crate::error::{Error, Result};
use crate::types::{Label, RngSeed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtConfig {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub max_leaves: usize,
    /// Multiplier on the sample weight of the positive (cancer) class.
    pub class_weight: f64,
    pub subsample: f64,
    pub colsample_by_tree: f64,
    pub l1_alpha: f64,
    pub l2_lambda: f64,
    #[serde(default)]
    pub goss: Option<GossConfig>,
    pub min_samples_leaf: usize,
    pub seed: RngSeed,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            n_trees: 100,
            learning_rate: 0.1,
            max_depth: 6,
            max_leaves: 40,
            class_weight: 1.0,
            subsample: 1.0,
            colsample_by_tree: 1.0,
            l1_alpha: 0.0,
            l2_lambda: 1.0,
            goss: None,
            min_samples_leaf: 1,
            seed: RngSeed(0),
        }
    }
}

impl GbdtConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1");
        }
        if self.max_leaves < 2 {
            return bad("max_leaves must be at least 2");
        }
        if !(self.class_weight > 0.0) {
            return bad("class_weight must be positive");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample must lie in (0, 1]");
        }
        if !(self.colsample_by_tree > 0.0 && self.colsample_by_tree <= 1.0) {
            return bad("colsample_by_tree must lie in (0, 1]");
        }
        if !(self.l1_alpha >= 0.0 && self.l2_lambda >= 0.0) {
            return bad("regularization strengths must be non-negative");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be at least 1");
        }
        if let Some(g) = &self.goss {
            g.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        weight: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Root is node 0.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { weight } => return weight,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn split_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    /// Prior log-odds of the weighted class ratio.
    pub base_score: f64,
    pub learning_rate: f64,
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl BoostedEnsemble {
    pub fn raw_row(&self, row: &[f64]) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }

    fn check_width(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.n_features {
            return Err(Error::GridMismatch {
                expected: self.n_features,
                found: x.ncols(),
            });
        }
        Ok(())
    }

    pub fn predict_raw(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        self.check_width(&x)?;
        Ok(x.rows()
            .into_iter()
            .map(|r| match r.as_slice() {
                Some(s) => self.raw_row(s),
                None => self.raw_row(&r.to_vec()),
            })
            .collect())
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        Ok(self.predict_raw(x)?.into_iter().map(sigmoid).collect())
    }
}

pub fn gbdt_predict_proba(ensemble: &BoostedEnsemble, features: ArrayView2<f64>) -> Result<Vec<f64>> {
    ensemble.predict_proba(features)
}

fn soft_threshold(g: f64, alpha: f64) -> f64 {
    if g > alpha {
        g - alpha
    } else if g < -alpha {
        g + alpha
    } else {
        0.0
    }
}

/// `−T(G)/(H+λ)`.
pub fn leaf_weight(g: f64, h: f64, lambda: f64, alpha: f64) -> f64 {
    let denom = h + lambda;
    if denom <= 1e-300 {
        return 0.0;
    }
    -soft_threshold(g, alpha) / denom
}

fn score(g: f64, h: f64, lambda: f64, alpha: f64) -> f64 {
    let denom = h + lambda;
    if denom <= 1e-300 {
        return 0.0;
    }
    let t = soft_threshold(g, alpha);
    t * t / denom
}

/// Split gain for children (G_L, H_L) and (G_R, H_R).
pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64, alpha: f64) -> f64 {
    0.5 * (score(gl, hl, lambda, alpha) + score(gr, hr, lambda, alpha) - score(gl + gr, hl + hr, lambda, alpha))
}

/// Threshold strictly separating `a < b` under the `x <= t` rule.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

/// Weighted logloss `Σ w·(softplus(F) − y·F) / Σ w`.
pub fn weighted_logloss(raw: &[f64], y: &[f64], w: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&f, &t), &wi) in raw.iter().zip(y).zip(w) {
        let sp = if f > 0.0 {
            f + (-f).exp().ln_1p()
        } else {
            f.exp().ln_1p()
        };
        num += wi * (sp - t * f);
        den += wi;
    }
    num / den
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SplitCandidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// One feature's in-bag rows at a node, sorted by value.
struct Column {
    v: Vec<f64>,
    /// In-bag position of each row.
    p: Vec<u32>,
}

impl Column {
    fn with_capacity(n: usize) -> Self {
        Column {
            v: Vec::with_capacity(n),
            p: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, v: f64, p: u32) {
        self.v.push(v);
        self.p.push(p);
    }

    fn len(&self) -> usize {
        self.v.len()
    }

    /// Stable split into rows flagged by `go_left` and the rest.
    fn partition(self, go_left: &[bool], n_left: usize) -> (Column, Column) {
        let n = self.len();
        let mut v = vec![0.0; n];
        let mut p = vec![0u32; n];
        let (mut cl, mut cr) = (0, n_left);
        for i in 0..n {
            let left = go_left[self.p[i] as usize];
            let at = if left { cl } else { cr };
            v[at] = self.v[i];
            p[at] = self.p[i];
            cl += left as usize;
            cr += !left as usize;
        }
        let right = Column {
            v: v.split_off(n_left),
            p: p.split_off(n_left),
        };
        (Column { v, p }, right)
    }
}

struct Frontier {
    node: usize,
    depth: usize,
    /// One column per active feature.
    columns: Vec<Column>,
    g: f64,
    h: f64,
    best: Option<SplitCandidate>,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Frontier {}
impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Frontier {
    /// Max-heap order: larger gain first, then lower node id.
    fn cmp(&self, other: &Self) -> Ordering {
        let a = self.best.map_or(f64::NEG_INFINITY, |b| b.gain);
        let b = other.best.map_or(f64::NEG_INFINITY, |b| b.gain);
        a.total_cmp(&b).then(other.node.cmp(&self.node))
    }
}

/// Best cut of one sorted column: returns the last index of the left child
/// and the best child score as `num / den`. Divisions are avoided by
/// comparing cross products.
#[allow(clippy::too_many_arguments)]
#[inline]
fn scan<const L1: bool>(
    v: &[f64],
    p: &[u32],
    g: &[f64],
    h: &[f64],
    min_leaf: usize,
    g_tot: f64,
    h_tot: f64,
    lambda: f64,
    alpha: f64,
) -> Option<(usize, f64, f64)> {
    let n = v.len();
    let m = n - min_leaf;
    let (mut gl, mut hl) = (0.0, 0.0);
    let (mut top_num, mut top_den) = (f64::NEG_INFINITY, 1.0);
    let mut at = usize::MAX;
    let pairs = v[..m].iter().zip(&v[1..=m]);
    for (i, (&pi, (&vi, &vn))) in p[..m].iter().zip(pairs).enumerate() {
        gl += g[pi as usize];
        hl += h[pi as usize];
        // Children sizes are i + 1 and n − i − 1.
        if vi == vn || i + 1 < min_leaf {
            continue;
        }
        let dl = hl + lambda;
        let dr = h_tot - hl + lambda;
        if dl <= 1e-300 || dr <= 1e-300 {
            continue;
        }
        let (tl, tr) = if L1 {
            (soft_threshold(gl, alpha), soft_threshold(g_tot - gl, alpha))
        } else {
            (gl, g_tot - gl)
        };
        let num = tl * tl * dr + tr * tr * dl;
        let den = dl * dr;
        if num * top_den > top_num * den {
            top_num = num;
            top_den = den;
            at = i;
        }
    }
    (at != usize::MAX).then_some((at, top_num, top_den))
}

/// Per-tree growing context.
struct Grower<'a> {
    /// Gradient and hessian of each in-bag row.
    g: &'a [f64],
    h: &'a [f64],
    features: &'a [usize],
    cfg: &'a GbdtConfig,
}

impl Grower<'_> {
    fn best_split(&self, columns: &[Column], g_tot: f64, h_tot: f64) -> Option<SplitCandidate> {
        let n = columns.first().map_or(0, Column::len);
        let min_leaf = self.cfg.min_samples_leaf;
        if n < 2 * min_leaf {
            return None;
        }
        let (lambda, alpha) = (self.cfg.l2_lambda, self.cfg.l1_alpha);
        let parent = score(g_tot, h_tot, lambda, alpha);
        let mut best: Option<SplitCandidate> = None;
        for (k, col) in columns.iter().enumerate() {
            let (v, p) = (&col.v[..n], &col.p[..n]);
            if v[0] == v[n - 1] {
                continue;
            }
            let found = if alpha == 0.0 {
                scan::<false>(v, p, self.g, self.h, min_leaf, g_tot, h_tot, lambda, alpha)
            } else {
                scan::<true>(v, p, self.g, self.h, min_leaf, g_tot, h_tot, lambda, alpha)
            };
            let Some((at, top_num, top_den)) = found else {
                continue;
            };
            let top = top_num / top_den;
            let gain = 0.5 * (top - parent);
            if best.is_none_or(|b| gain > b.gain) {
                best = Some(SplitCandidate {
                    gain,
                    feature: self.features[k],
                    threshold: midpoint(v[at], v[at + 1]),
                });
            }
        }
        best.filter(|b| b.gain > 0.0)
    }

    fn sums(&self, col: &Column) -> (f64, f64) {
        col.p.iter().fold((0.0, 0.0), |(g, h), &p| {
            (g + self.g[p as usize], h + self.h[p as usize])
        })
    }

    fn grow(&self, root: Vec<Column>) -> Tree {
        let cfg = self.cfg;
        let (g, h) = self.sums(&root[0]);
        let mut nodes = vec![Node::Leaf {
            weight: leaf_weight(g, h, cfg.l2_lambda, cfg.l1_alpha),
        }];
        let best = if cfg.max_depth > 0 {
            self.best_split(&root, g, h)
        } else {
            None
        };
        let mut heap = BinaryHeap::new();
        heap.push(Frontier {
            node: 0,
            depth: 0,
            columns: root,
            g,
            h,
            best,
        });
        let mut leaves = 1;
        let mut go_left = vec![false; self.g.len()];
        while leaves < cfg.max_leaves {
            let Some(item) = heap.pop() else { break };
            let Some(split) = item.best else { break };
            let k = self.features.binary_search(&split.feature).expect("active feature");
            let col = &item.columns[k];
            let mut n_left = 0;
            for (&v, &p) in col.v.iter().zip(&col.p) {
                let left = v <= split.threshold;
                go_left[p as usize] = left;
                n_left += left as usize;
            }
            let (left_cols, right_cols): (Vec<Column>, Vec<Column>) =
                item.columns.into_iter().map(|c| c.partition(&go_left, n_left)).unzip();
            let (gl, hl) = self.sums(&left_cols[0]);
            let (gr, hr) = (item.g - gl, item.h - hl);
            let left = nodes.len();
            let right = left + 1;
            nodes.push(Node::Leaf {
                weight: leaf_weight(gl, hl, cfg.l2_lambda, cfg.l1_alpha),
            });
            nodes.push(Node::Leaf {
                weight: leaf_weight(gr, hr, cfg.l2_lambda, cfg.l1_alpha),
            });
            nodes[item.node] = Node::Split {
                feature: split.feature,
                threshold: split.threshold,
                left,
                right,
            };
            leaves += 1;
            let depth = item.depth + 1;
            for (node, columns, g, h) in [(left, left_cols, gl, hl), (right, right_cols, gr, hr)] {
                if depth < cfg.max_depth {
                    let best = self.best_split(&columns, g, h);
                    if best.is_some() {
                        heap.push(Frontier {
                            node,
                            depth,
                            columns,
                            g,
                            h,
                            best,
                        });
                    }
                }
            }
        }
        Tree { nodes }
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub ensemble: BoostedEnsemble,
    /// Weighted training logloss before the first tree and after each tree.
    pub train_loss: Vec<f64>,
}

pub fn gbdt_fit(features: ArrayView2<f64>, labels: &[Label], config: &GbdtConfig) -> Result<BoostedEnsemble> {
    Ok(gbdt_fit_with_history(features, labels, config)?.ensemble)
}

pub fn gbdt_fit_with_history(features: ArrayView2<f64>, labels: &[Label], config: &GbdtConfig) -> Result<FitReport> {
    config.validate()?;
    let (n, d) = features.dim();
    if labels.len() != n {
        return Err(Error::invalid(format!("{n} feature rows but {} labels", labels.len())));
    }
    if n < 2 {
        return Err(Error::degenerate("boosting needs at least 2 samples"));
    }
    let pos = labels.iter().filter(|l| l.is_positive()).count();
    if pos == 0 || pos == n {
        return Err(Error::degenerate("both classes must be present"));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("feature matrix contains non-finite values"));
    }

    let y: Vec<f64> = labels.iter().map(|l| l.as_f64()).collect();
    let w: Vec<f64> = labels
        .iter()
        .map(|l| if l.is_positive() { config.class_weight } else { 1.0 })
        .collect();
    let w_pos: f64 = w.iter().zip(&y).map(|(w, y)| w * y).sum();
    let w_neg: f64 = w.iter().zip(&y).map(|(w, y)| w * (1.0 - y)).sum();
    let base_score = (w_pos / w_neg).ln();

    let cols: Vec<Vec<f64>> = (0..d).map(|f| features.column(f).to_vec()).collect();
    let sorted: Vec<Vec<u32>> = cols
        .par_iter()
        .map(|c| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]).then(a.cmp(&b)));
            idx
        })
        .collect();

    let mut raw = vec![base_score; n];
    let mut train_loss = vec![weighted_logloss(&raw, &y, &w)];
    let mut trees = Vec::with_capacity(config.n_trees);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    for t in 0..config.n_trees {
        let tree_seed = config.seed.derive(t as u64);
        for i in 0..n {
            let p = sigmoid(raw[i]);
            grad[i] = w[i] * (p - y[i]);
            hess[i] = w[i] * p * (1.0 - p);
        }

        let (rows, mult): (Vec<usize>, Vec<f64>) = match &config.goss {
            Some(goss) => {
                let s = goss_sample(&grad, goss, tree_seed.derive(0))?;
                (s.indices, s.multipliers)
            }
            None if config.subsample < 1.0 => {
                let k = ((config.subsample * n as f64).round() as usize).clamp(1, n);
                let mut rows = index::sample(&mut tree_seed.derive(0).rng(), n, k).into_vec();
                rows.sort_unstable();
                (rows, vec![1.0; k])
            }
            None => ((0..n).collect(), vec![1.0; n]),
        };
        let active: Vec<usize> = if config.colsample_by_tree < 1.0 {
            let k = ((config.colsample_by_tree * d as f64).ceil() as usize).clamp(1, d);
            let mut f = index::sample(&mut tree_seed.derive(1).rng(), d, k).into_vec();
            f.sort_unstable();
            f
        } else {
            (0..d).collect()
        };

        let mut pos_of = vec![u32::MAX; n];
        for (p, &r) in rows.iter().enumerate() {
            pos_of[r] = p as u32;
        }
        let g_in: Vec<f64> = rows.iter().zip(&mult).map(|(&r, m)| grad[r] * m).collect();
        let h_in: Vec<f64> = rows.iter().zip(&mult).map(|(&r, m)| hess[r] * m).collect();
        let root: Vec<Column> = active
            .iter()
            .map(|&f| {
                let mut c = Column::with_capacity(rows.len());
                for &s in &sorted[f] {
                    let p = pos_of[s as usize];
                    if p != u32::MAX {
                        c.push(cols[f][s as usize], p);
                    }
                }
                c
            })
            .collect();
        let grower = Grower {
            g: &g_in,
            h: &h_in,
            features: &active,
            cfg: config,
        };
        let tree = grower.grow(root);
        for (i, r) in raw.iter_mut().enumerate() {
            *r += config.learning_rate * tree_predict_cols(&tree, &cols, i);
        }
        train_loss.push(weighted_logloss(&raw, &y, &w));
        trees.push(tree);
    }

    Ok(FitReport {
        ensemble: BoostedEnsemble {
            base_score,
            learning_rate: config.learning_rate,
            n_features: d,
            trees,
        },
        train_loss,
    })
}

fn tree_predict_cols(tree: &Tree, cols: &[Vec<f64>], sample: usize) -> f64 {
    let mut i = 0;
    loop {
        match tree.nodes[i] {
            Node::Leaf { weight } => return weight,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                i = if cols[feature][sample] <= threshold {
                    left
                } else {
                    right
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn labels(v: &[u8]) -> Vec<Label> {
        v.iter().map(|&b| Label::from_u8(b).unwrap()).collect()
    }

    #[test]
    fn leaf_weight_hand_case() {
        assert!((leaf_weight(2.0, 4.0, 1.0, 0.0) + 0.4).abs() < 1e-15);
        assert_eq!(leaf_weight(0.5, 4.0, 1.0, 1.0), 0.0);
        assert!((leaf_weight(3.0, 4.0, 1.0, 1.0) + 0.4).abs() < 1e-15);
    }

    #[test]
    fn separable_stump() {
        let x = array![[0.1], [0.4], [0.35], [0.8], [0.9], [0.7]];
        let y = labels(&[0, 0, 0, 1, 1, 1]);
        let cfg = GbdtConfig {
            n_trees: 1,
            max_depth: 1,
            learning_rate: 1.0,
            ..Default::default()
        };
        let m = gbdt_fit(x.view(), &y, &cfg).unwrap();
        match m.trees[0].nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert!((threshold - 0.55).abs() < 1e-12);
            }
            _ => panic!("expected a split"),
        }
        let p = m.predict_proba(x.view()).unwrap();
        let acc = p
            .iter()
            .zip(&y)
            .filter(|(p, y)| (**p >= 0.5) == y.is_positive())
            .count();
        assert_eq!(acc, 6);
    }

    #[test]
    fn no_trees_gives_prior() {
        let x = Array2::from_shape_fn((6, 2), |(i, j)| (i + j) as f64);
        let y = labels(&[1, 0, 0, 0, 1, 0]);
        let cfg = GbdtConfig {
            n_trees: 0,
            class_weight: 2.0,
            ..Default::default()
        };
        let m = gbdt_fit(x.view(), &y, &cfg).unwrap();
        // weighted ratio 4 : 4
        assert!(m.base_score.abs() < 1e-15);
        assert!(m
            .predict_proba(x.view())
            .unwrap()
            .iter()
            .all(|&p| (p - 0.5).abs() < 1e-15));
    }

    #[test]
    fn single_stump_two_probabilities() {
        let x = array![[1.0], [2.0], [3.0], [4.0]];
        let y = labels(&[0, 0, 1, 1]);
        let cfg = GbdtConfig {
            n_trees: 1,
            max_depth: 1,
            learning_rate: 1.0,
            ..Default::default()
        };
        let m = gbdt_fit(x.view(), &y, &cfg).unwrap();
        let probe = array![[0.0], [1.5], [2.6], [10.0]];
        let mut p = m.predict_proba(probe.view()).unwrap();
        p.dedup();
        assert_eq!(p.len(), 2);
        // Leaves: G = ±1, H = 0.5, λ = 1 → ±2/3.
        assert!((p[0] - sigmoid(-2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn width_mismatch() {
        let x = array![[1.0, 0.0], [2.0, 1.0]];
        let y = labels(&[0, 1]);
        let m = gbdt_fit(x.view(), &y, &GbdtConfig::default()).unwrap();
        assert!(matches!(
            m.predict_proba(array![[1.0]].view()),
            Err(Error::GridMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn single_class_rejected() {
        let x = array![[1.0], [2.0]];
        assert!(matches!(
            gbdt_fit(x.view(), &labels(&[1, 1]), &GbdtConfig::default()),
            Err(Error::DegenerateClass(_))
        ));
    }

    #[test]
    fn huge_lambda_zeroes_leaves() {
        let x = Array2::from_shape_fn((40, 3), |(i, j)| ((i * 7 + j * 3) % 11) as f64);
        let y: Vec<Label> = (0..40).map(|i| Label::from_u8((i % 3 == 0) as u8).unwrap()).collect();
        let cfg = GbdtConfig {
            l2_lambda: 1e9,
            n_trees: 5,
            ..Default::default()
        };
        let m = gbdt_fit(x.view(), &y, &cfg).unwrap();
        for t in &m.trees {
            for n in &t.nodes {
                if let Node::Leaf { weight } = n {
                    assert!(weight.abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn limits_respected() {
        let x = Array2::from_shape_fn((200, 4), |(i, j)| (((i * 31 + j * 17) % 97) as f64).sin());
        let y: Vec<Label> = (0..200)
            .map(|i| Label::from_u8(((i * 13) % 5 < 2) as u8).unwrap())
            .collect();
        let cfg = GbdtConfig {
            n_trees: 3,
            max_depth: 3,
            max_leaves: 5,
            ..Default::default()
        };
        let m = gbdt_fit(x.view(), &y, &cfg).unwrap();
        for t in &m.trees {
            assert!(t.leaf_count() <= 5);
            assert!(t.depth() <= 3);
        }
    }

    #[test]
    fn goss_full_equals_plain() {
        let x = Array2::from_shape_fn((60, 3), |(i, j)| (((i * 13 + j * 5) % 23) as f64) * 0.1);
        let y: Vec<Label> = (0..60).map(|i| Label::from_u8((i % 4 == 1) as u8).unwrap()).collect();
        let plain = gbdt_fit(x.view(), &y, &GbdtConfig::default()).unwrap();
        let goss = gbdt_fit(
            x.view(),
            &y,
            &GbdtConfig {
                goss: Some(GossConfig {
                    top_fraction: 1.0,
                    random_fraction: 0.0,
                }),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(plain, goss);
    }
}
