//! Concept-level scoring of written explanations of evolutionary change.
//!
//! A response is scored for nine concepts (six key concepts, three naive
//! ideas) by nine independent linear classifiers over bag-of-words features.
//! The concept scores are then combined into a holistic reasoning model.
//!
//! ```
//! use evoscore_core::{classify_model, ConceptId, ConceptScores, ReasoningModel};
//!
//! let s = ConceptScores::with_present(&[ConceptId::Variation, ConceptId::NeedsGoals]);
//! assert_eq!(classify_model(&s), ReasoningModel::Mixed);
//! ```

pub mod corpus;
pub mod evalmetrics;
pub mod reasoning;
pub mod service;
pub mod smo;
pub mod synthetic;
pub mod textpipe;

pub use corpus::{
    parse_response_batch, parse_training_corpus, split_by_item, BatchRow, ConceptId, ConceptKind, ConceptScores,
    CorpusError, LabeledResponse, ResponseBatch, TrainingCorpus, MAX_BATCH_ITEMS,
};
pub use evalmetrics::{
    cross_validate, meets_thresholds, train_concept_model, AgreementReport, ConfusionMatrix, CvOutcome, EvalError,
    ValidationReport,
};
pub use reasoning::{classify_model, key_concept_total, naive_total, ReasoningModel};
pub use service::{
    build_model_set, execute_run, generate_report, score_batch, write_result_csv, ConceptConfigs, ModelSet, Registry,
    Report, ResultRow, RunStatus, ScoringRun, ServiceError,
};
pub use smo::{train_smo, BinaryClassifier, SmoError, SmoParams, SparseVector};
pub use textpipe::{build_dictionary, vectorize, FeatureConfig, FeatureDictionary, FeatureVector, TextError};
