use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::scoring::ResultRow;
use super::ServiceError;
use crate::corpus::ConceptId;
use crate::reasoning::ReasoningModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptPresence {
    pub concept: ConceptId,
    pub count: usize,
    pub pct: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDistribution {
    pub scientific: usize,
    pub mixed: usize,
    pub naive: usize,
    pub no_model: usize,
}

impl ModelDistribution {
    pub fn get(&self, model: ReasoningModel) -> usize {
        match model {
            ReasoningModel::PureScientific => self.scientific,
            ReasoningModel::Mixed => self.mixed,
            ReasoningModel::PureNaive => self.naive,
            ReasoningModel::NoModel => self.no_model,
        }
    }

    fn bump(&mut self, model: ReasoningModel) {
        match model {
            ReasoningModel::PureScientific => self.scientific += 1,
            ReasoningModel::Mixed => self.mixed += 1,
            ReasoningModel::PureNaive => self.naive += 1,
            ReasoningModel::NoModel => self.no_model += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.scientific + self.mixed + self.naive + self.no_model
    }
}

/// Number of responses with a given (key total, naive total) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bubble {
    pub key_total: u8,
    pub naive_total: u8,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_responses: usize,
    pub concept_presence: Vec<ConceptPresence>,
    pub model_distribution: ModelDistribution,
    /// Non-empty cells only, ordered by (key_total, naive_total).
    pub bubbles: Vec<Bubble>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemReport {
    pub item_id: String,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub version: u64,
    /// Concepts whose model did not meet the agreement/kappa thresholds.
    pub below_threshold: Vec<ConceptId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    #[serde(flatten)]
    pub summary: Summary,
    /// One entry per item, in order of first appearance.
    pub per_item: Vec<ItemReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelInfo>,
}

fn summarize<'a>(rows: impl Iterator<Item = &'a ResultRow>) -> Summary {
    let mut n = 0;
    let mut counts = [0usize; ConceptId::COUNT];
    let mut dist = ModelDistribution::default();
    let mut cells: BTreeMap<(u8, u8), usize> = BTreeMap::new();
    for r in rows {
        n += 1;
        for (c, present) in r.scores.iter() {
            counts[c.index()] += usize::from(present);
        }
        dist.bump(r.model);
        *cells.entry((r.key_total, r.naive_total)).or_default() += 1;
    }
    Summary {
        n_responses: n,
        concept_presence: ConceptId::ALL
            .into_iter()
            .map(|c| ConceptPresence {
                concept: c,
                count: counts[c.index()],
                pct: if n == 0 { 0.0 } else { 100.0 * counts[c.index()] as f64 / n as f64 },
            })
            .collect(),
        model_distribution: dist,
        bubbles: cells
            .into_iter()
            .map(|((key_total, naive_total), count)| Bubble { key_total, naive_total, count })
            .collect(),
    }
}

pub fn generate_report(rows: &[ResultRow]) -> Result<Report, ServiceError> {
    if rows.is_empty() {
        return Err(ServiceError::EmptyRows);
    }
    let mut item_order: Vec<&str> = Vec::new();
    for r in rows {
        if !item_order.contains(&r.item_id.as_str()) {
            item_order.push(&r.item_id);
        }
    }
    let per_item = item_order
        .into_iter()
        .map(|id| ItemReport {
            item_id: id.to_string(),
            summary: summarize(rows.iter().filter(|r| r.item_id == id)),
        })
        .collect();
    Ok(Report { summary: summarize(rows.iter()), per_item, model: None })
}
