//! Soft-margin linear SVM trained with Sequential Minimal Optimization.
//!
//! The solver follows Platt's two-loop scheme: the outer loop alternates full
//! scans with scans over non-bound examples (0 < α < C), and for every KKT
//! violator the partner maximizing |E₁ − E₂| is tried first, then every
//! non-bound example, then every example, all in ascending index order. There
//! is no randomness, so identical inputs give bit-identical classifiers.
//!
//! Decision values are `w·x + bias`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textpipe::FeatureVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmoError {
    #[error("no training examples")]
    Empty,
    #[error("{vectors} vectors but {labels} labels")]
    LengthMismatch { vectors: usize, labels: usize },
    #[error("feature index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("classifier line {line}: {detail}")]
    Parse { line: usize, detail: String },
}

/// Sparse real-valued vector, entries sorted by index with no duplicates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds from arbitrary `(index, value)` pairs; duplicates are summed and zeros dropped.
    pub fn new(mut entries: Vec<(usize, f64)>) -> Self {
        entries.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        Self { entries: merged }
    }

    pub(crate) fn from_sorted(entries: Vec<(usize, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        Self { entries }
    }

    /// Dense coordinates become indices `0..values.len()`.
    pub fn from_dense(values: &[f64]) -> Self {
        Self::new(values.iter().copied().enumerate().collect())
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(i, _)| i)
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut sum = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    sum += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        sum
    }

    fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| dense[i] * v).sum()
    }
}

/// Anything that can present its nonzero coordinates to a linear model.
pub trait SparseFeatures {
    fn for_each_nonzero(&self, f: &mut dyn FnMut(usize, f64));
}

impl SparseFeatures for SparseVector {
    fn for_each_nonzero(&self, f: &mut dyn FnMut(usize, f64)) {
        for &(i, v) in &self.entries {
            f(i, v);
        }
    }
}

impl SparseFeatures for FeatureVector {
    fn for_each_nonzero(&self, f: &mut dyn FnMut(usize, f64)) {
        for &(i, c) in self.entries() {
            f(i as usize, f64::from(c));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoParams {
    /// Soft-margin penalty.
    pub c: f64,
    pub kkt_tolerance: f64,
    /// Smallest relative change in a dual variable that counts as progress.
    pub alpha_epsilon: f64,
    /// Outer-loop passes (full or non-bound) before giving up.
    pub max_epochs: usize,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self { c: 1.0, kkt_tolerance: 1e-3, alpha_epsilon: 1e-12, max_epochs: 1000 }
    }
}

impl SmoParams {
    pub fn validate(&self) -> Result<(), SmoError> {
        let bad = |m: &str| Err(SmoError::InvalidParams(m.to_string()));
        if !(self.c.is_finite() && self.c > 0.0) {
            return bad("c must be positive and finite");
        }
        if !(self.kkt_tolerance > 0.0 && self.kkt_tolerance < 1.0) {
            return bad("kkt_tolerance must lie in (0, 1)");
        }
        if !(self.alpha_epsilon > 0.0 && self.alpha_epsilon < self.kkt_tolerance) {
            return bad("alpha_epsilon must be positive and below kkt_tolerance");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive");
        }
        Ok(())
    }
}

/// A trained linear decision function.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryClassifier {
    weights: Vec<f64>,
    bias: f64,
    alphas: Vec<f64>,
    c: f64,
    converged: bool,
    training_size: usize,
}

impl BinaryClassifier {
    /// A classifier that ignores its input: zero weights and a ±1 bias.
    pub fn constant(dim: usize, positive: bool, c: f64, training_size: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: if positive { 1.0 } else { -1.0 },
            alphas: vec![0.0; training_size],
            c,
            converged: true,
            training_size,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Dual variables of the training run. Empty for a deserialized classifier.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn training_size(&self) -> usize {
        self.training_size
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn decision_value<V: SparseFeatures + ?Sized>(&self, v: &V) -> Result<f64, SmoError> {
        let mut sum = 0.0;
        let mut bad = None;
        v.for_each_nonzero(&mut |i, x| match self.weights.get(i) {
            Some(w) => sum += w * x,
            None => bad = Some(i),
        });
        if let Some(index) = bad {
            return Err(SmoError::IndexOutOfRange { index, dim: self.weights.len() });
        }
        Ok(sum + self.bias)
    }

    /// True ("present") iff the decision value is strictly positive.
    pub fn predict<V: SparseFeatures + ?Sized>(&self, v: &V) -> Result<bool, SmoError> {
        Ok(self.decision_value(v)? > 0.0)
    }

    /// Header line plus one `index<TAB>weight` line per nonzero weight, reals at 17 significant digits.
    pub fn to_text(&self) -> String {
        let nonzero = self.weights.iter().filter(|&&w| w != 0.0).count();
        let mut out = format!(
            "#classifier\tdim={}\tbias={:.16e}\tc={:.16e}\tconverged={}\ttraining_size={}\tnonzero={}\n",
            self.weights.len(),
            self.bias,
            self.c,
            u8::from(self.converged),
            self.training_size,
            nonzero
        );
        for (i, &w) in self.weights.iter().enumerate().filter(|(_, &w)| w != 0.0) {
            writeln!(out, "{i}\t{w:.16e}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SmoError> {
        let err = |line: usize, detail: String| SmoError::Parse { line, detail };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err(1, "empty input".into()))?;
        let mut fields = header.split('\t');
        if fields.next() != Some("#classifier") {
            return Err(err(1, "missing #classifier header".into()));
        }
        let mut value = |key: &str| -> Result<String, SmoError> {
            let f = fields.next().ok_or_else(|| err(1, format!("missing {key}")))?;
            f.strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .map(str::to_string)
                .ok_or_else(|| err(1, format!("expected {key}=..., got {f:?}")))
        };
        let num = |s: String, key: &str| s.parse::<f64>().map_err(|e| err(1, format!("{key}: {e}")));
        let int = |s: String, key: &str| s.parse::<usize>().map_err(|e| err(1, format!("{key}: {e}")));
        let dim = int(value("dim")?, "dim")?;
        let bias = num(value("bias")?, "bias")?;
        let c = num(value("c")?, "c")?;
        let converged = match value("converged")?.as_str() {
            "0" => false,
            "1" => true,
            other => return Err(err(1, format!("converged must be 0 or 1, got {other:?}"))),
        };
        let training_size = int(value("training_size")?, "training_size")?;
        let nonzero = int(value("nonzero")?, "nonzero")?;

        let mut weights = vec![0.0; dim];
        let mut count = 0;
        let mut last: Option<usize> = None;
        for (n, line) in lines.enumerate() {
            let line_no = n + 2;
            let (idx, w) = line
                .split_once('\t')
                .ok_or_else(|| err(line_no, "expected index<TAB>value".into()))?;
            let idx: usize = idx.parse().map_err(|e| err(line_no, format!("index: {e}")))?;
            if idx >= dim || last.is_some_and(|l| idx <= l) {
                return Err(err(line_no, format!("index {idx} out of order or range")));
            }
            weights[idx] = w.parse().map_err(|e| err(line_no, format!("weight: {e}")))?;
            last = Some(idx);
            count += 1;
        }
        if count != nonzero {
            return Err(err(1, format!("header promised {nonzero} weights, found {count}")));
        }
        Ok(Self { weights, bias, alphas: Vec::new(), c, converged, training_size })
    }
}

/// Dual objective Σα − ½‖Σ αᵢyᵢxᵢ‖².
pub fn dual_objective(alphas: &[f64], vectors: &[SparseVector], labels: &[bool]) -> f64 {
    let dim = vectors.iter().filter_map(SparseVector::max_index).max().map_or(0, |m| m + 1);
    let w = reconstruct_weights(alphas, vectors, labels, dim);
    alphas.iter().sum::<f64>() - 0.5 * w.iter().map(|x| x * x).sum::<f64>()
}

fn sign(label: bool) -> f64 {
    if label {
        1.0
    } else {
        -1.0
    }
}

fn reconstruct_weights(alphas: &[f64], vectors: &[SparseVector], labels: &[bool], dim: usize) -> Vec<f64> {
    let mut w = vec![0.0; dim];
    for ((a, x), &y) in alphas.iter().zip(vectors).zip(labels) {
        if *a != 0.0 {
            let ay = a * sign(y);
            for &(i, v) in x.entries() {
                w[i] += ay * v;
            }
        }
    }
    w
}

struct Solver<'a> {
    x: &'a [SparseVector],
    y: Vec<f64>,
    sq_norm: Vec<f64>,
    alpha: Vec<f64>,
    errors: Vec<f64>,
    w: Vec<f64>,
    /// Platt's threshold: u = w·x − b.
    b: f64,
    c: f64,
    tol: f64,
    eps: f64,
}

impl Solver<'_> {
    fn is_non_bound(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    fn examine(&mut self, i2: usize) -> bool {
        let (y2, a2, e2) = (self.y[i2], self.alpha[i2], self.errors[i2]);
        let r2 = e2 * y2;
        if !((r2 < -self.tol && a2 < self.c) || (r2 > self.tol && a2 > 0.0)) {
            return false;
        }
        let n = self.alpha.len();
        let non_bound: Vec<usize> = (0..n).filter(|&i| self.is_non_bound(i)).collect();
        if non_bound.len() > 1 {
            let mut best: Option<(usize, f64)> = None;
            for &i in &non_bound {
                if i == i2 {
                    continue;
                }
                let gap = (self.errors[i] - e2).abs();
                if best.is_none_or(|(_, g)| gap > g) {
                    best = Some((i, gap));
                }
            }
            if let Some((i1, _)) = best {
                if self.take_step(i1, i2) {
                    return true;
                }
            }
        }
        for &i1 in &non_bound {
            if self.take_step(i1, i2) {
                return true;
            }
        }
        (0..n).any(|i1| self.take_step(i1, i2))
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.errors[i1], self.errors[i2]);
        let s = y1 * y2;
        let c = self.c;
        let (lo, hi) = if y1 != y2 {
            ((a2 - a1).max(0.0), (c + a2 - a1).min(c))
        } else {
            ((a1 + a2 - c).max(0.0), (a1 + a2).min(c))
        };
        if lo >= hi {
            return false;
        }
        let k11 = self.sq_norm[i1];
        let k22 = self.sq_norm[i2];
        let k12 = self.x[i1].dot(&self.x[i2]);
        let eta = k11 + k22 - 2.0 * k12;

        let mut a2_new = if eta > 0.0 {
            (a2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Objective at both ends of the segment (minimization form).
            let f1 = y1 * (e1 + self.b) - a1 * k11 - s * a2 * k12;
            let f2 = y2 * (e2 + self.b) - s * a1 * k12 - a2 * k22;
            let l1 = a1 + s * (a2 - lo);
            let h1 = a1 + s * (a2 - hi);
            let obj = |a1v: f64, a2v: f64| {
                a1v * f1 + a2v * f2 + 0.5 * a1v * a1v * k11 + 0.5 * a2v * a2v * k22 + s * a1v * a2v * k12
            };
            let (l_obj, h_obj) = (obj(l1, lo), obj(h1, hi));
            if l_obj < h_obj - self.eps {
                lo
            } else if l_obj > h_obj + self.eps {
                hi
            } else {
                a2
            }
        };
        // Snap values within rounding distance of the box edges.
        let snap = 1e-12 * c;
        if a2_new < snap {
            a2_new = 0.0;
        } else if a2_new > c - snap {
            a2_new = c;
        }
        if (a2_new - a2).abs() < self.eps * (a2_new + a2 + self.eps) {
            return false;
        }
        let mut a1_new = a1 + s * (a2 - a2_new);
        if a1_new < snap {
            a1_new = 0.0;
            a2_new = (a2 + s * a1).clamp(0.0, c);
        } else if a1_new > c - snap {
            a1_new = c;
            a2_new = (a2 + s * (a1 - c)).clamp(0.0, c);
        }
        if a2_new < snap {
            a2_new = 0.0;
        } else if a2_new > c - snap {
            a2_new = c;
        }

        let (d1, d2) = (y1 * (a1_new - a1), y2 * (a2_new - a2));
        let b1 = e1 + d1 * k11 + d2 * k12 + self.b;
        let b2 = e2 + d1 * k12 + d2 * k22 + self.b;
        self.b = if a1_new > 0.0 && a1_new < c {
            b1
        } else if a2_new > 0.0 && a2_new < c {
            b2
        } else {
            0.5 * (b1 + b2)
        };
        for &(i, v) in self.x[i1].entries() {
            self.w[i] += d1 * v;
        }
        for &(i, v) in self.x[i2].entries() {
            self.w[i] += d2 * v;
        }
        self.alpha[i1] = a1_new;
        self.alpha[i2] = a2_new;
        self.refresh_errors();
        true
    }

    fn refresh_errors(&mut self) {
        for (k, x) in self.x.iter().enumerate() {
            self.errors[k] = x.dot_dense(&self.w) - self.b - self.y[k];
        }
    }
}

/// Range of biases under which every example meets its KKT condition within `tol`.
fn feasible_bias_interval(margins: &[f64], y: &[f64], alpha: &[f64], c: f64, tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for ((&g, &yi), &a) in margins.iter().zip(y).zip(alpha) {
        // y(g + β) ≥ 1 − tol unless at the upper bound; ≤ 1 + tol unless at zero.
        let lower_ok = a < c;
        let upper_ok = a > 0.0;
        if yi > 0.0 {
            if lower_ok {
                lo = lo.max(1.0 - tol - g);
            }
            if upper_ok {
                hi = hi.min(1.0 + tol - g);
            }
        } else {
            if lower_ok {
                hi = hi.min(-1.0 + tol - g);
            }
            if upper_ok {
                lo = lo.max(-1.0 - tol - g);
            }
        }
    }
    (lo, hi)
}

/// True when every example satisfies the KKT condition implied by its dual variable.
pub fn kkt_satisfied(
    clf: &BinaryClassifier,
    vectors: &[SparseVector],
    labels: &[bool],
    tol: f64,
) -> bool {
    let slack = tol + 1e-9;
    vectors.iter().zip(labels).zip(clf.alphas()).all(|((x, &y), &a)| {
        let m = sign(y) * clf.decision_value(x).unwrap_or(f64::NAN);
        if a <= 0.0 {
            m >= 1.0 - slack
        } else if a >= clf.c {
            m <= 1.0 + slack
        } else {
            (m - 1.0).abs() <= slack
        }
    })
}

/// Trains a linear soft-margin SVM on `vectors` (labels: true = positive class)
/// over a feature space of dimension `dim`.
///
/// Single-class input yields [`BinaryClassifier::constant`] for that class.
pub fn train_smo(
    vectors: &[SparseVector],
    labels: &[bool],
    dim: usize,
    params: &SmoParams,
) -> Result<BinaryClassifier, SmoError> {
    params.validate()?;
    if vectors.len() != labels.len() {
        return Err(SmoError::LengthMismatch { vectors: vectors.len(), labels: labels.len() });
    }
    if vectors.is_empty() {
        return Err(SmoError::Empty);
    }
    if let Some(index) = vectors.iter().filter_map(SparseVector::max_index).find(|&i| i >= dim) {
        return Err(SmoError::IndexOutOfRange { index, dim });
    }
    let n = vectors.len();
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == n {
        return Ok(BinaryClassifier::constant(dim, positives == n, params.c, n));
    }

    let y: Vec<f64> = labels.iter().map(|&l| sign(l)).collect();
    let mut solver = Solver {
        x: vectors,
        sq_norm: vectors.iter().map(|v| v.dot(v)).collect(),
        errors: y.iter().map(|&yi| -yi).collect(),
        y,
        alpha: vec![0.0; n],
        w: vec![0.0; dim],
        b: 0.0,
        c: params.c,
        tol: params.kkt_tolerance,
        eps: params.alpha_epsilon,
    };

    let mut examine_all = true;
    let mut clean_exit = false;
    for _ in 0..params.max_epochs {
        let changed = if examine_all {
            (0..n).filter(|&i| solver.examine(i)).count()
        } else {
            (0..n).filter(|&i| solver.is_non_bound(i) && solver.examine(i)).count()
        };
        if examine_all {
            if changed == 0 {
                clean_exit = true;
                break;
            }
            examine_all = false;
        } else if changed == 0 {
            examine_all = true;
        }
    }

    let alphas = solver.alpha;
    let y = solver.y;
    let weights = reconstruct_weights(&alphas, vectors, labels, dim);
    let margins: Vec<f64> = vectors.iter().map(|x| x.dot_dense(&weights)).collect();
    let c = params.c;
    let free: Vec<usize> = (0..n).filter(|&i| alphas[i] > 0.0 && alphas[i] < c).collect();
    let (lo, hi) = feasible_bias_interval(&margins, &y, &alphas, c, params.kkt_tolerance);
    let bias = if !free.is_empty() {
        let avg = free.iter().map(|&i| y[i] - margins[i]).sum::<f64>() / free.len() as f64;
        if lo <= hi {
            avg.clamp(lo, hi)
        } else {
            avg
        }
    } else if lo <= hi && lo.is_finite() && hi.is_finite() {
        0.5 * (lo + hi)
    } else {
        -solver.b
    };

    let mut clf = BinaryClassifier {
        weights,
        bias,
        alphas,
        c,
        converged: false,
        training_size: n,
    };
    clf.converged = clean_exit && kkt_satisfied(&clf, vectors, labels, params.kkt_tolerance);
    Ok(clf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(coords: &[&[f64]]) -> Vec<SparseVector> {
        coords.iter().map(|c| SparseVector::from_dense(c)).collect()
    }

    #[test]
    fn separable_pair() {
        let x = pts(&[&[-1.0], &[1.0]]);
        let clf = train_smo(&x, &[false, true], 1, &SmoParams::default()).unwrap();
        assert!(clf.decision_value(&x[0]).unwrap() < 0.0);
        assert!(clf.decision_value(&x[1]).unwrap() > 0.0);
        assert!(clf.converged());
        // Hard-margin solution w = 1, b = 0, α = (0.5, 0.5).
        assert!((clf.weights()[0] - 1.0).abs() < 1e-9);
        assert!(clf.bias().abs() < 1e-9);
    }

    #[test]
    fn single_class_is_constant() {
        let x = pts(&[&[1.0, 0.0], &[0.0, 2.0]]);
        let clf = train_smo(&x, &[true, true], 2, &SmoParams::default()).unwrap();
        assert_eq!(clf.weights(), &[0.0, 0.0]);
        assert_eq!(clf.bias(), 1.0);
        assert!(clf.converged());
        assert!(clf.predict(&SparseVector::from_dense(&[5.0, -3.0])).unwrap());

        let neg = train_smo(&x, &[false, false], 2, &SmoParams::default()).unwrap();
        assert_eq!(neg.bias(), -1.0);
    }

    #[test]
    fn input_errors() {
        let x = pts(&[&[1.0]]);
        let p = SmoParams::default();
        assert_eq!(train_smo(&[], &[], 1, &p), Err(SmoError::Empty));
        assert_eq!(
            train_smo(&x, &[true, false], 1, &p),
            Err(SmoError::LengthMismatch { vectors: 1, labels: 2 })
        );
        let wide = pts(&[&[0.0, 0.0, 1.0]]);
        assert_eq!(train_smo(&wide, &[true], 2, &p), Err(SmoError::IndexOutOfRange { index: 2, dim: 2 }));
        let bad = SmoParams { c: 0.0, ..p };
        assert!(matches!(train_smo(&x, &[true], 1, &bad), Err(SmoError::InvalidParams(_))));
        let bad = SmoParams { alpha_epsilon: 0.1, kkt_tolerance: 0.01, ..p };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn decision_value_examples() {
        let mut clf = BinaryClassifier::constant(3, false, 1.0, 0);
        assert_eq!(clf.decision_value(&SparseVector::default()).unwrap(), -1.0);
        clf.weights[0] = 2.0;
        let v = SparseVector::new(vec![(0, 3.0)]);
        assert_eq!(clf.decision_value(&v).unwrap(), 5.0);
        assert!(clf.predict(&v).unwrap());
        assert_eq!(
            clf.decision_value(&SparseVector::new(vec![(3, 1.0)])),
            Err(SmoError::IndexOutOfRange { index: 3, dim: 3 })
        );
        let k = BinaryClassifier::constant(2, true, 1.0, 0);
        assert_eq!(k.decision_value(&SparseVector::new(vec![(1, 7.0)])).unwrap(), 1.0);
    }

    #[test]
    fn predict_tie_is_absent() {
        let mut clf = BinaryClassifier::constant(1, true, 1.0, 0);
        clf.bias = 0.0;
        assert!(!clf.predict(&SparseVector::default()).unwrap());
        clf.bias = -0.2;
        assert!(!clf.predict(&SparseVector::default()).unwrap());
    }

    #[test]
    fn duplicate_points_with_opposite_labels() {
        // eta = 0 for every pair drawn from the same location.
        let x = pts(&[&[1.0], &[1.0], &[-1.0], &[-1.0]]);
        let clf = train_smo(&x, &[true, false, false, true], 1, &SmoParams::default()).unwrap();
        for &a in clf.alphas() {
            assert!((0.0..=1.0).contains(&a));
        }
        let s: f64 = clf.alphas().iter().zip([1.0, -1.0, -1.0, 1.0]).map(|(a, y)| a * y).sum();
        assert!(s.abs() <= 1e-9);
    }

    #[test]
    fn text_round_trip_preserves_predictions() {
        let x = pts(&[&[0.3, 1.7, 0.0], &[2.2, 0.1, 1.0], &[0.0, 2.5, 0.4], &[1.9, 0.0, 0.7]]);
        let clf = train_smo(&x, &[false, true, false, true], 3, &SmoParams::default()).unwrap();
        let text = clf.to_text();
        let back = BinaryClassifier::from_text(&text).unwrap();
        assert_eq!(back.weights(), clf.weights());
        assert_eq!(back.bias().to_bits(), clf.bias().to_bits());
        assert_eq!(back.to_text(), text);
        for v in &x {
            assert_eq!(back.decision_value(v).unwrap().to_bits(), clf.decision_value(v).unwrap().to_bits());
        }
        assert!(BinaryClassifier::from_text(&text.replace("nonzero=", "nonzero=9")).is_err());
    }
}
