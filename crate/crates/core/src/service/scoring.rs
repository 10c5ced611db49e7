use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::modelset::ModelSet;
use super::report::{generate_report, ModelInfo, Report};
use super::ServiceError;
use crate::corpus::{split_by_item, ConceptId, ConceptScores, ResponseBatch};
use crate::reasoning::{classify_model, key_concept_total, naive_total, ReasoningModel};
use crate::textpipe::vectorize;

pub const RESULT_HEADER: &str = "student_id,item_id,variation,heritability,competition,limited_resources,differential_survival,non_adaptive,needs_goals,use_disuse,adapt_acclimation,key_total,naive_total,model_type";

/// Machine scores for one (student, item) answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRow {
    pub student_id: String,
    pub item_id: String,
    pub scores: ConceptScores,
    pub key_total: u8,
    pub naive_total: u8,
    pub model: ReasoningModel,
}

impl ResultRow {
    pub fn from_scores(student_id: String, item_id: String, scores: ConceptScores) -> Self {
        Self {
            student_id,
            item_id,
            key_total: key_concept_total(&scores),
            naive_total: naive_total(&scores),
            model: classify_model(&scores),
            scores,
        }
    }

    /// Whether the totals and model agree with the nine scores.
    pub fn is_consistent(&self) -> bool {
        self.key_total == key_concept_total(&self.scores)
            && self.naive_total == naive_total(&self.scores)
            && self.model == classify_model(&self.scores)
    }
}

/// Scores every non-empty answer with all nine classifiers. Items are scored
/// independently, then merged in (row, item) order.
pub fn score_batch(batch: &ResponseBatch, set: &ModelSet) -> Vec<ResultRow> {
    let items = split_by_item(batch);
    let mut scored: Vec<(usize, usize, ResultRow)> = items
        .par_iter()
        .flat_map_iter(|item| {
            item.entries.iter().map(move |entry| {
                let mut scores = ConceptScores::default();
                for concept in ConceptId::ALL {
                    let bundle = set.bundle(concept);
                    let v = vectorize(&entry.text, &bundle.dictionary);
                    let present = bundle
                        .classifier
                        .predict(&v)
                        .expect("model set invariant: classifier dimension equals dictionary size");
                    scores.set(concept, present);
                }
                let row = ResultRow::from_scores(entry.student_id.clone(), item.item_id.clone(), scores);
                (entry.row, item.item_index, row)
            })
        })
        .collect();
    scored.sort_by_key(|&(row, item, _)| (row, item));
    scored.into_iter().map(|(_, _, r)| r).collect()
}

/// Scores a batch and builds its report, tagged with the model-set version.
pub fn score_and_report(batch: &ResponseBatch, set: &ModelSet) -> Result<(Vec<ResultRow>, Report), ServiceError> {
    let rows = score_batch(batch, set);
    let mut report = generate_report(&rows)?;
    report.model = Some(ModelInfo { version: set.version(), below_threshold: set.below_threshold() });
    Ok((rows, report))
}

pub fn write_result_csv(rows: &[ResultRow]) -> Result<Vec<u8>, ServiceError> {
    if rows.is_empty() {
        return Err(ServiceError::EmptyRows);
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| ServiceError::ResultFile(e.to_string());
    w.write_record(RESULT_HEADER.split(',')).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.student_id.clone(), r.item_id.clone()];
        rec.extend(r.scores.flags().iter().map(|&b| u8::from(b).to_string()));
        rec.push(r.key_total.to_string());
        rec.push(r.naive_total.to_string());
        rec.push(r.model.as_str().to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| ServiceError::ResultFile(e.to_string()))
}

/// Parses a result CSV, rejecting rows whose redundant columns disagree.
pub fn parse_result_csv(bytes: &[u8]) -> Result<Vec<ResultRow>, ServiceError> {
    let bad = |row: usize, msg: String| ServiceError::ResultFile(format!("row {row}: {msg}"));
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let header = reader.headers().map_err(|e| bad(0, e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != RESULT_HEADER {
        return Err(ServiceError::ResultFile("unexpected header".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| bad(row, e.to_string()))?;
        let mut scores = ConceptScores::default();
        for (j, c) in ConceptId::ALL.into_iter().enumerate() {
            match &rec[2 + j] {
                "0" => {}
                "1" => scores.set(c, true),
                v => return Err(bad(row, format!("{c} must be 0 or 1, got {v:?}"))),
            }
        }
        let num = |s: &str| s.parse::<u8>().map_err(|e| bad(row, e.to_string()));
        let parsed = ResultRow {
            student_id: rec[0].to_string(),
            item_id: rec[1].to_string(),
            scores,
            key_total: num(&rec[11])?,
            naive_total: num(&rec[12])?,
            model: ReasoningModel::parse(&rec[13]).ok_or_else(|| bad(row, format!("unknown model {:?}", &rec[13])))?,
        };
        if !parsed.is_consistent() {
            return Err(bad(row, "totals or model disagree with concept scores".into()));
        }
        rows.push(parsed);
    }
    Ok(rows)
}
