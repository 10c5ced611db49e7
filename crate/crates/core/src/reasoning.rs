//! Holistic reasoning-model classification from concept scores.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{ConceptKind, ConceptScores};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReasoningModel {
    #[serde(rename = "scientific")]
    PureScientific,
    #[serde(rename = "mixed")]
    Mixed,
    #[serde(rename = "naive")]
    PureNaive,
    #[serde(rename = "no_model")]
    NoModel,
}

impl ReasoningModel {
    pub const ALL: [ReasoningModel; 4] =
        [ReasoningModel::PureScientific, ReasoningModel::Mixed, ReasoningModel::PureNaive, ReasoningModel::NoModel];

    pub fn as_str(self) -> &'static str {
        match self {
            ReasoningModel::PureScientific => "scientific",
            ReasoningModel::Mixed => "mixed",
            ReasoningModel::PureNaive => "naive",
            ReasoningModel::NoModel => "no_model",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

impl fmt::Display for ReasoningModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn count_kind(s: &ConceptScores, kind: ConceptKind) -> u8 {
    s.iter().filter(|&(c, present)| present && c.kind() == kind).count() as u8
}

/// Number of key scientific concepts present, 0..=6.
pub fn key_concept_total(s: &ConceptScores) -> u8 {
    count_kind(s, ConceptKind::KeyConcept)
}

/// Number of naive ideas present, 0..=3.
pub fn naive_total(s: &ConceptScores) -> u8 {
    count_kind(s, ConceptKind::NaiveIdea)
}

/// Only whether each total is positive matters. An all-absent vector is `NoModel`.
pub fn classify_model(s: &ConceptScores) -> ReasoningModel {
    match (key_concept_total(s) > 0, naive_total(s) > 0) {
        (true, false) => ReasoningModel::PureScientific,
        (true, true) => ReasoningModel::Mixed,
        (false, true) => ReasoningModel::PureNaive,
        (false, false) => ReasoningModel::NoModel,
    }
}
