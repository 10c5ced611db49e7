//! Human-vs-machine agreement statistics, k-fold cross-validation,
//! misclassified-instance removal and the publication threshold gate.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ConceptId, TrainingCorpus};
use crate::smo::{train_smo, BinaryClassifier, SmoError, SmoParams, SparseVector};
use crate::textpipe::{build_dictionary, vectorize, FeatureConfig, FeatureDictionary, TextError};

/// Minimum raw agreement (percent) for a model to pass.
pub const AGREEMENT_THRESHOLD_PCT: f64 = 90.0;
/// Minimum Cohen's kappa for a model to pass.
pub const KAPPA_THRESHOLD: f64 = 0.8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("empty input")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two values")]
    TooShort,
    #[error("constant list: correlation undefined")]
    ConstantList,
    #[error("k must be at least 2, got {0}")]
    TooFewFolds(usize),
    #[error("corpus of {n} responses is smaller than k = {k}")]
    CorpusSmallerThanK { n: usize, k: usize },
    #[error("zero-variance concept: {0}")]
    ZeroVariance(ConceptId),
    #[error("unknown response id {0:?}")]
    UnknownId(String),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Smo(#[from] SmoError),
}

/// Counts with "concept present" as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn n(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Swaps the roles of prediction and gold.
    pub fn transpose(&self) -> Self {
        Self { tp: self.tp, fp: self.fn_, fn_: self.fp, tn: self.tn }
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
            tn: self.tn + other.tn,
        }
    }
}

pub fn confusion(predictions: &[bool], gold: &[bool]) -> Result<ConfusionMatrix, EvalError> {
    if predictions.len() != gold.len() {
        return Err(EvalError::LengthMismatch(predictions.len(), gold.len()));
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &g) in predictions.iter().zip(gold) {
        match (p, g) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// Cohen's kappa. When chance agreement is 1 (both raters constant) the
/// result is 1 for perfect agreement and 0 otherwise.
pub fn kappa(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    let n = cm.n();
    if n == 0 {
        return Err(EvalError::Empty);
    }
    let n = n as f64;
    let (tp, fp, fn_, tn) = (cm.tp as f64, cm.fp as f64, cm.fn_ as f64, cm.tn as f64);
    let p0 = (tp + tn) / n;
    let pe = ((tp + fn_) * (tp + fp) + (fp + tn) * (fn_ + tn)) / (n * n);
    if pe == 1.0 {
        return Ok(if p0 == 1.0 { 1.0 } else { 0.0 });
    }
    Ok((p0 - pe) / (1.0 - pe))
}

pub fn agreement_pct(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    match cm.n() {
        0 => Err(EvalError::Empty),
        n => Ok(100.0 * (cm.tp + cm.tn) as f64 / n as f64),
    }
}

/// Precision, recall and F1; `None` marks a value whose denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecallF1 {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

pub fn f1_score(precision: Option<f64>, recall: Option<f64>) -> Option<f64> {
    match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    }
}

pub fn precision_recall_f1(cm: &ConfusionMatrix) -> Result<PrecisionRecallF1, EvalError> {
    if cm.n() == 0 {
        return Err(EvalError::Empty);
    }
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    Ok(PrecisionRecallF1 { precision, recall, f1: f1_score(precision, recall) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub kappa: f64,
    pub agreement_pct: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub n: u64,
    pub confusion: ConfusionMatrix,
}

impl AgreementReport {
    pub fn from_confusion(cm: ConfusionMatrix) -> Result<Self, EvalError> {
        let prf = precision_recall_f1(&cm)?;
        Ok(Self {
            kappa: kappa(&cm)?,
            agreement_pct: agreement_pct(&cm)?,
            precision: prf.precision,
            recall: prf.recall,
            f1: prf.f1,
            n: cm.n(),
            confusion: cm,
        })
    }

    pub fn from_predictions(predictions: &[bool], gold: &[bool]) -> Result<Self, EvalError> {
        Self::from_confusion(confusion(predictions, gold)?)
    }
}

/// Pass iff agreement ≥ 90% and kappa ≥ 0.8, both inclusive.
pub fn meets_thresholds(report: &AgreementReport) -> bool {
    report.agreement_pct >= AGREEMENT_THRESHOLD_PCT && report.kappa >= KAPPA_THRESHOLD
}

/// 1-based ranks; tied values share the mean of the positions they occupy.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::ConstantList);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(EvalError::TooShort);
    }
    pearson(&average_ranks(xs), &average_ranks(ys))
}

/// Shuffles `0..n` with a seeded ChaCha8 generator, then deals indices
/// round-robin into `k` folds. Each fold is returned in ascending order.
pub fn assign_folds(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 {
        return Err(EvalError::TooFewFolds(k));
    }
    if n < k {
        return Err(EvalError::CorpusSmallerThanK { n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, idx) in order.into_iter().enumerate() {
        folds[pos % k].push(idx);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub held_out_ids: Vec<String>,
    pub dictionary_size: usize,
    pub converged: bool,
    pub report: AgreementReport,
}

/// Unweighted means of the per-fold statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldAverages {
    pub kappa: f64,
    pub agreement_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub concept: ConceptId,
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<FoldOutcome>,
    /// Metrics over all held-out predictions together.
    pub pooled: AgreementReport,
    pub fold_averages: FoldAverages,
    /// Responses whose held-out prediction disagreed with the label, in corpus order.
    pub misclassified_ids: Vec<String>,
}

/// The model trained for one fold, for inspection.
#[derive(Debug, Clone)]
pub struct FoldModel {
    pub held_out: Vec<usize>,
    pub dictionary: FeatureDictionary,
    pub classifier: BinaryClassifier,
}

/// Builds a dictionary over `texts` and fits a classifier on them.
pub fn fit(
    texts: &[&str],
    labels: &[bool],
    config: &FeatureConfig,
    params: &SmoParams,
) -> Result<(FeatureDictionary, BinaryClassifier), EvalError> {
    let dictionary = build_dictionary(texts.iter().copied(), config)?;
    let vectors: Vec<SparseVector> = texts.iter().map(|t| vectorize(t, &dictionary).to_sparse()).collect();
    let classifier = train_smo(&vectors, labels, dictionary.len(), params)?;
    Ok((dictionary, classifier))
}

fn check_variance(corpus: &TrainingCorpus, concept: ConceptId) -> Result<(), EvalError> {
    let positives = corpus.responses.iter().filter(|r| r.labels.get(concept)).count();
    if positives == 0 || positives == corpus.len() {
        return Err(EvalError::ZeroVariance(concept));
    }
    Ok(())
}

/// k-fold cross-validation that also returns each fold's dictionary and classifier.
pub fn cross_validate_detailed(
    corpus: &TrainingCorpus,
    concept: ConceptId,
    config: &FeatureConfig,
    params: &SmoParams,
    k: usize,
    seed: u64,
) -> Result<(CvOutcome, Vec<FoldModel>), EvalError> {
    let folds = assign_folds(corpus.len(), k, seed)?;
    check_variance(corpus, concept)?;
    config.validate()?;
    params.validate()?;
    let labels = corpus.labels(concept);

    let results: Vec<Result<(FoldModel, Vec<bool>), EvalError>> = folds
        .par_iter()
        .map(|held_out| {
            let held: HashSet<usize> = held_out.iter().copied().collect();
            let (texts, train_labels): (Vec<&str>, Vec<bool>) = corpus
                .responses
                .iter()
                .enumerate()
                .filter(|(i, _)| !held.contains(i))
                .map(|(i, r)| (r.text.as_str(), labels[i]))
                .unzip();
            let (dictionary, classifier) = fit(&texts, &train_labels, config, params)?;
            let predictions = held_out
                .iter()
                .map(|&i| classifier.predict(&vectorize(&corpus.responses[i].text, &dictionary)))
                .collect::<Result<Vec<bool>, SmoError>>()?;
            Ok((FoldModel { held_out: held_out.clone(), dictionary, classifier }, predictions))
        })
        .collect();

    let mut models = Vec::with_capacity(k);
    let mut fold_outcomes = Vec::with_capacity(k);
    let mut predicted = vec![false; corpus.len()];
    let mut pooled = ConfusionMatrix::default();
    for (fold, result) in results.into_iter().enumerate() {
        let (model, predictions) = result?;
        let gold: Vec<bool> = model.held_out.iter().map(|&i| labels[i]).collect();
        let cm = confusion(&predictions, &gold)?;
        pooled = pooled.merge(&cm);
        for (&i, &p) in model.held_out.iter().zip(&predictions) {
            predicted[i] = p;
        }
        fold_outcomes.push(FoldOutcome {
            fold,
            held_out_ids: model.held_out.iter().map(|&i| corpus.responses[i].response_id.clone()).collect(),
            dictionary_size: model.dictionary.len(),
            converged: model.classifier.converged(),
            report: AgreementReport::from_confusion(cm)?,
        });
        models.push(model);
    }
    let misclassified_ids = corpus
        .responses
        .iter()
        .enumerate()
        .filter(|&(i, _)| predicted[i] != labels[i])
        .map(|(_, r)| r.response_id.clone())
        .collect();
    let fold_averages = FoldAverages {
        kappa: fold_outcomes.iter().map(|f| f.report.kappa).sum::<f64>() / k as f64,
        agreement_pct: fold_outcomes.iter().map(|f| f.report.agreement_pct).sum::<f64>() / k as f64,
    };
    let outcome = CvOutcome {
        concept,
        k,
        seed,
        folds: fold_outcomes,
        pooled: AgreementReport::from_confusion(pooled)?,
        fold_averages,
        misclassified_ids,
    };
    Ok((outcome, models))
}

pub fn cross_validate(
    corpus: &TrainingCorpus,
    concept: ConceptId,
    config: &FeatureConfig,
    params: &SmoParams,
    k: usize,
    seed: u64,
) -> Result<CvOutcome, EvalError> {
    cross_validate_detailed(corpus, concept, config, params, k, seed).map(|(o, _)| o)
}

/// Copy of `corpus` without the listed responses, order preserved.
pub fn remove_misclassified(corpus: &TrainingCorpus, ids: &[String]) -> Result<TrainingCorpus, EvalError> {
    let present: HashSet<&str> = corpus.responses.iter().map(|r| r.response_id.as_str()).collect();
    if let Some(unknown) = ids.iter().find(|id| !present.contains(id.as_str())) {
        return Err(EvalError::UnknownId(unknown.clone()));
    }
    let drop: HashSet<&str> = ids.iter().map(String::as_str).collect();
    Ok(TrainingCorpus::new(
        corpus.responses.iter().filter(|r| !drop.contains(r.response_id.as_str())).cloned().collect(),
    ))
}

/// Everything produced while training one concept's scoring model.
#[derive(Debug, Clone)]
pub struct ConceptModel {
    pub concept: ConceptId,
    pub config: FeatureConfig,
    pub dictionary: FeatureDictionary,
    pub classifier: BinaryClassifier,
    pub initial_cv: CvOutcome,
    /// Cross-validation on the reduced corpus, when removal is enabled.
    pub reduced_cv: Option<CvOutcome>,
    pub removed_ids: Vec<String>,
    pub training_size: usize,
    pub passed: bool,
}

impl ConceptModel {
    /// The outcome the pass flag was judged on.
    pub fn final_cv(&self) -> &CvOutcome {
        self.reduced_cv.as_ref().unwrap_or(&self.initial_cv)
    }
}

/// Cross-validates, optionally drops misclassified responses and re-validates
/// once, then fits the final model on the (possibly reduced) corpus.
pub fn train_concept_model(
    corpus: &TrainingCorpus,
    concept: ConceptId,
    config: &FeatureConfig,
    params: &SmoParams,
    k: usize,
    seed: u64,
) -> Result<ConceptModel, EvalError> {
    let initial_cv = cross_validate(corpus, concept, config, params, k, seed)?;
    let (final_corpus, reduced_cv, removed_ids) = if config.remove_misclassified {
        let reduced = remove_misclassified(corpus, &initial_cv.misclassified_ids)?;
        let cv = cross_validate(&reduced, concept, config, params, k, seed)?;
        (reduced, Some(cv), initial_cv.misclassified_ids.clone())
    } else {
        (corpus.clone(), None, Vec::new())
    };
    let texts: Vec<&str> = final_corpus.texts().collect();
    let (dictionary, classifier) = fit(&texts, &final_corpus.labels(concept), config, params)?;
    let passed = meets_thresholds(&reduced_cv.as_ref().unwrap_or(&initial_cv).pooled);
    Ok(ConceptModel {
        concept,
        config: *config,
        dictionary,
        classifier,
        initial_cv,
        reduced_cv,
        removed_ids,
        training_size: final_corpus.len(),
        passed,
    })
}

/// Per-concept section of a validation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptValidation {
    pub concept: ConceptId,
    pub config: FeatureConfig,
    pub initial_cv: CvOutcome,
    pub reduced_cv: Option<CvOutcome>,
    pub removed_ids: Vec<String>,
    pub training_size: usize,
    pub passed: bool,
}

impl From<&ConceptModel> for ConceptValidation {
    fn from(m: &ConceptModel) -> Self {
        Self {
            concept: m.concept,
            config: m.config,
            initial_cv: m.initial_cv.clone(),
            reduced_cv: m.reduced_cv.clone(),
            removed_ids: m.removed_ids.clone(),
            training_size: m.training_size,
            passed: m.passed,
        }
    }
}

/// JSON document describing a validation run well enough to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub k: usize,
    pub params: SmoParams,
    pub corpus_fingerprint: String,
    pub corpus_size: usize,
    pub thresholds: Thresholds,
    pub concepts: Vec<ConceptValidation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub agreement_pct: f64,
    pub kappa: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { agreement_pct: AGREEMENT_THRESHOLD_PCT, kappa: KAPPA_THRESHOLD }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(tp: u64, fp: u64, fn_: u64, tn: u64) -> ConfusionMatrix {
        ConfusionMatrix { tp, fp, fn_, tn }
    }

    #[test]
    fn confusion_examples() {
        assert_eq!(confusion(&[true, false, true], &[true, false, true]).unwrap(), cm(2, 0, 0, 1));
        assert_eq!(confusion(&[true, true], &[false, false]).unwrap(), cm(0, 2, 0, 0));
        assert_eq!(
            confusion(&[true, false, false, true], &[true, true, false, false]).unwrap(),
            cm(1, 1, 1, 1)
        );
        assert_eq!(confusion(&[true], &[]), Err(EvalError::LengthMismatch(1, 0)));
        assert_eq!(confusion(&[], &[]), Err(EvalError::Empty));
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa(&cm(3, 0, 0, 3)).unwrap(), 1.0);
        assert!((kappa(&cm(40, 10, 10, 40)).unwrap() - 0.6).abs() < 1e-12);
        assert!(kappa(&cm(25, 25, 25, 25)).unwrap().abs() < 1e-12);
        assert_eq!(kappa(&cm(0, 0, 0, 0)), Err(EvalError::Empty));
        // both raters constant
        assert_eq!(kappa(&cm(5, 0, 0, 0)).unwrap(), 1.0);
    }

    #[test]
    fn precision_recall_examples() {
        assert!((f1_score(Some(1.0), Some(0.875)).unwrap() - 0.933).abs() <= 1e-3);
        assert!((f1_score(Some(1.0), Some(0.944)).unwrap() - 0.971).abs() <= 1e-3);
        let prf = precision_recall_f1(&cm(0, 0, 5, 0)).unwrap();
        assert_eq!(prf.precision, None);
        assert_eq!(prf.recall, Some(0.0));
        assert_eq!(prf.f1, None);
        assert_eq!(f1_score(Some(0.0), Some(0.0)), None);
    }

    #[test]
    fn spearman_examples() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        let r = spearman(&[0.0, 1.0, 1.0, 2.0], &[0.0, 1.0, 2.0, 2.0]).unwrap();
        assert!((r - 0.8333).abs() < 1e-4);
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), Err(EvalError::ConstantList));
        assert_eq!(spearman(&[1.0], &[1.0]), Err(EvalError::TooShort));
        assert_eq!(spearman(&[1.0, 2.0], &[1.0]), Err(EvalError::LengthMismatch(2, 1)));
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(average_ranks(&[0.0, 1.0, 1.0, 2.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn threshold_examples() {
        let report = |kappa: f64, agreement_pct: f64| AgreementReport {
            kappa,
            agreement_pct,
            precision: None,
            recall: None,
            f1: None,
            n: 1,
            confusion: ConfusionMatrix::default(),
        };
        assert!(meets_thresholds(&report(0.903, 95.6)));
        assert!(!meets_thresholds(&report(0.651, 95.1)));
        assert!(meets_thresholds(&report(0.8, 90.0)));
        assert!(!meets_thresholds(&report(0.95, 89.99)));
    }

    #[test]
    fn folds_of_ten() {
        let folds = assign_folds(100, 10, 7).unwrap();
        assert_eq!(folds.len(), 10);
        assert!(folds.iter().all(|f| f.len() == 10));
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(assign_folds(100, 10, 7).unwrap(), folds);
        assert_ne!(assign_folds(100, 10, 8).unwrap(), folds);
        assert_eq!(assign_folds(3, 4, 0), Err(EvalError::CorpusSmallerThanK { n: 3, k: 4 }));
        assert_eq!(assign_folds(3, 1, 0), Err(EvalError::TooFewFolds(1)));
    }
}
