use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ServiceError;
use crate::corpus::{ConceptId, TrainingCorpus};
use crate::evalmetrics::{
    train_concept_model, AgreementReport, ConceptModel, ConceptValidation, EvalError, Thresholds,
    ValidationReport,
};
use crate::smo::{BinaryClassifier, SmoParams};
use crate::textpipe::{FeatureConfig, FeatureDictionary};

/// One feature configuration per concept, in canonical concept order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptConfigs([FeatureConfig; ConceptId::COUNT]);

impl Default for ConceptConfigs {
    fn default() -> Self {
        Self(ConceptId::ALL.map(FeatureConfig::for_concept))
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigOverride {
    use_bigrams: Option<bool>,
    use_stemming: Option<bool>,
    remove_stopwords: Option<bool>,
    min_corpus_frequency: Option<u32>,
    remove_misclassified: Option<bool>,
}

impl ConceptConfigs {
    pub fn get(&self, concept: ConceptId) -> &FeatureConfig {
        &self.0[concept.index()]
    }

    pub fn set(&mut self, concept: ConceptId, config: FeatureConfig) {
        self.0[concept.index()] = config;
    }

    /// Applies per-concept overrides from TOML, e.g.
    ///
    /// ```toml
    /// [needs_goals]
    /// min_corpus_frequency = 3
    /// use_bigrams = false
    /// ```
    pub fn with_overrides(mut self, toml_text: &str) -> Result<Self, ServiceError> {
        let table: BTreeMap<String, ConfigOverride> =
            toml::from_str(toml_text).map_err(|e| ServiceError::Config(e.to_string()))?;
        for (name, o) in table {
            let concept: ConceptId = name.parse().map_err(ServiceError::Config)?;
            let cfg = &mut self.0[concept.index()];
            cfg.use_bigrams = o.use_bigrams.unwrap_or(cfg.use_bigrams);
            cfg.use_stemming = o.use_stemming.unwrap_or(cfg.use_stemming);
            cfg.remove_stopwords = o.remove_stopwords.unwrap_or(cfg.remove_stopwords);
            cfg.min_corpus_frequency = o.min_corpus_frequency.unwrap_or(cfg.min_corpus_frequency);
            cfg.remove_misclassified = o.remove_misclassified.unwrap_or(cfg.remove_misclassified);
            cfg.validate().map_err(|e| ServiceError::Config(format!("{concept}: {e}")))?;
        }
        Ok(self)
    }
}

/// Where a model set came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub corpus_fingerprint: String,
    pub corpus_size: usize,
    pub seed: u64,
    pub k: usize,
    pub params: SmoParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptSummary {
    pub passed: bool,
    /// Pooled cross-validation metrics the pass flag was judged on.
    pub pooled: AgreementReport,
    pub initial_pooled: AgreementReport,
    pub removed: usize,
    pub training_size: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct ConceptBundle {
    pub concept: ConceptId,
    pub dictionary: FeatureDictionary,
    pub classifier: BinaryClassifier,
    pub summary: ConceptSummary,
}

impl ConceptBundle {
    pub fn config(&self) -> &FeatureConfig {
        self.dictionary.config()
    }
}

impl From<ConceptModel> for ConceptBundle {
    fn from(m: ConceptModel) -> Self {
        let summary = ConceptSummary {
            passed: m.passed,
            pooled: m.final_cv().pooled,
            initial_pooled: m.initial_cv.pooled,
            removed: m.removed_ids.len(),
            training_size: m.training_size,
            converged: m.classifier.converged(),
        };
        Self { concept: m.concept, dictionary: m.dictionary, classifier: m.classifier, summary }
    }
}

/// Nine trained concept models plus provenance. Version 0 means unpublished.
#[derive(Debug, Clone)]
pub struct ModelSet {
    version: u64,
    created_at: String,
    provenance: Provenance,
    bundles: Vec<ConceptBundle>,
}

impl ModelSet {
    /// Checks there is exactly one bundle per concept, in canonical order,
    /// and that each classifier matches its dictionary.
    pub fn new(
        version: u64,
        created_at: String,
        provenance: Provenance,
        bundles: Vec<ConceptBundle>,
    ) -> Result<Self, ServiceError> {
        if bundles.len() != ConceptId::COUNT {
            return Err(ServiceError::InvalidModelSet(format!("expected 9 concept bundles, got {}", bundles.len())));
        }
        for (b, c) in bundles.iter().zip(ConceptId::ALL) {
            if b.concept != c {
                return Err(ServiceError::InvalidModelSet(format!("expected {c} bundle, got {}", b.concept)));
            }
            if b.classifier.dim() != b.dictionary.len() {
                return Err(ServiceError::InvalidModelSet(format!(
                    "{c}: classifier has {} weights for {} dictionary terms",
                    b.classifier.dim(),
                    b.dictionary.len()
                )));
            }
        }
        Ok(Self { version, created_at, provenance, bundles })
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub(crate) fn set_version(&mut self, version: u64) {
        self.version = version;
    }

    pub fn created_at(&self) -> &str {
        &self.created_at
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn bundles(&self) -> &[ConceptBundle] {
        &self.bundles
    }

    pub fn bundle(&self, concept: ConceptId) -> &ConceptBundle {
        &self.bundles[concept.index()]
    }

    pub fn below_threshold(&self) -> Vec<ConceptId> {
        self.bundles.iter().filter(|b| !b.summary.passed).map(|b| b.concept).collect()
    }
}

/// Trains and validates all nine concept models. Concepts failing the
/// thresholds are flagged in their summaries, not dropped.
pub fn build_model_set(
    corpus: &TrainingCorpus,
    configs: &ConceptConfigs,
    params: &SmoParams,
    k: usize,
    seed: u64,
) -> Result<(ModelSet, ValidationReport), ServiceError> {
    for concept in ConceptId::ALL {
        let positives = corpus.responses.iter().filter(|r| r.labels.get(concept)).count();
        if positives == 0 || positives == corpus.len() {
            return Err(EvalError::ZeroVariance(concept).into());
        }
    }
    let models = ConceptId::ALL
        .par_iter()
        .map(|&concept| {
            train_concept_model(corpus, concept, configs.get(concept), params, k, seed)
                .map_err(|source| ServiceError::Concept { concept, source })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let fingerprint = corpus.fingerprint();
    let report = ValidationReport {
        seed,
        k,
        params: *params,
        corpus_fingerprint: fingerprint.clone(),
        corpus_size: corpus.len(),
        thresholds: Thresholds::default(),
        concepts: models.iter().map(ConceptValidation::from).collect(),
    };
    let provenance = Provenance { corpus_fingerprint: fingerprint, corpus_size: corpus.len(), seed, k, params: *params };
    let created_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let set = ModelSet::new(0, created_at, provenance, models.into_iter().map(ConceptBundle::from).collect())?;
    Ok((set, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_apply_to_named_concepts_only() {
        let cfgs = ConceptConfigs::default()
            .with_overrides("[needs_goals]\nmin_corpus_frequency = 4\nuse_bigrams = false\n")
            .unwrap();
        let ng = cfgs.get(ConceptId::NeedsGoals);
        assert_eq!(ng.min_corpus_frequency, 4);
        assert!(!ng.use_bigrams);
        assert!(!ng.remove_stopwords);
        assert_eq!(*cfgs.get(ConceptId::Variation), FeatureConfig::for_concept(ConceptId::Variation));
    }

    #[test]
    fn bad_overrides_rejected() {
        let base = ConceptConfigs::default();
        assert!(base.with_overrides("[nope]\nuse_bigrams = true\n").is_err());
        assert!(base.with_overrides("[variation]\nbogus = 1\n").is_err());
        assert!(base.with_overrides("[variation]\nmin_corpus_frequency = 0\n").is_err());
    }
}
