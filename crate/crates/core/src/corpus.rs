//! Concept taxonomy, labeled training records and uploaded response batches.
//!
//! Both CSV layouts are RFC 4180 (comma delimiter, double-quote quoting) and
//! UTF-8 only. A leading byte-order mark is stripped. Row numbers in errors
//! count data rows from 1, not counting the header.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Maximum number of item columns accepted in one response batch.
pub const MAX_BATCH_ITEMS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorpusError {
    #[error("input is not valid UTF-8")]
    NotUtf8,
    #[error("malformed CSV at row {row}: {detail}")]
    Malformed { row: usize, detail: String },
    #[error("bad header: {0}")]
    Header(String),
    #[error("row {row}, column {column}: label must be 0 or 1, got {value:?}")]
    NonBinaryLabel { row: usize, column: String, value: String },
    #[error("row {row}: duplicate response_id {id:?}")]
    DuplicateResponseId { row: usize, id: String },
    #[error("row {row}: empty text")]
    EmptyText { row: usize },
    #[error("row {row}: empty response_id")]
    EmptyResponseId { row: usize },
    #[error("item count exceeds {MAX_BATCH_ITEMS} (got {0})")]
    TooManyItems(usize),
    #[error("batch has no item columns")]
    NoItems,
    #[error("row {row}: empty student_id")]
    EmptyStudentId { row: usize },
    #[error("row {row}: all answers empty for {student_id}")]
    AllAnswersEmpty { row: usize, student_id: String },
}

/// Whether a concept is a normative scientific idea or a naive misconception.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptKind {
    KeyConcept,
    NaiveIdea,
}

/// The nine scored concepts, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptId {
    Variation,
    Heritability,
    Competition,
    LimitedResources,
    DifferentialSurvival,
    NonAdaptive,
    NeedsGoals,
    UseDisuse,
    AdaptAcclimation,
}

impl ConceptId {
    pub const COUNT: usize = 9;

    pub const ALL: [ConceptId; 9] = [
        ConceptId::Variation,
        ConceptId::Heritability,
        ConceptId::Competition,
        ConceptId::LimitedResources,
        ConceptId::DifferentialSurvival,
        ConceptId::NonAdaptive,
        ConceptId::NeedsGoals,
        ConceptId::UseDisuse,
        ConceptId::AdaptAcclimation,
    ];

    pub fn kind(self) -> ConceptKind {
        match self {
            ConceptId::NeedsGoals | ConceptId::UseDisuse | ConceptId::AdaptAcclimation => {
                ConceptKind::NaiveIdea
            }
            _ => ConceptKind::KeyConcept,
        }
    }

    /// Position in [`ConceptId::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    /// Column / file name used in CSV headers and the registry layout.
    pub fn as_str(self) -> &'static str {
        match self {
            ConceptId::Variation => "variation",
            ConceptId::Heritability => "heritability",
            ConceptId::Competition => "competition",
            ConceptId::LimitedResources => "limited_resources",
            ConceptId::DifferentialSurvival => "differential_survival",
            ConceptId::NonAdaptive => "non_adaptive",
            ConceptId::NeedsGoals => "needs_goals",
            ConceptId::UseDisuse => "use_disuse",
            ConceptId::AdaptAcclimation => "adapt_acclimation",
        }
    }

    /// Short scoring symbol (V, H, C, R, D, NA, N, U, A).
    pub fn symbol(self) -> &'static str {
        match self {
            ConceptId::Variation => "V",
            ConceptId::Heritability => "H",
            ConceptId::Competition => "C",
            ConceptId::LimitedResources => "R",
            ConceptId::DifferentialSurvival => "D",
            ConceptId::NonAdaptive => "NA",
            ConceptId::NeedsGoals => "N",
            ConceptId::UseDisuse => "U",
            ConceptId::AdaptAcclimation => "A",
        }
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConceptId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConceptId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown concept {s:?}"))
    }
}

/// Presence (true) or absence (false) of each of the nine concepts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ConceptScores([bool; ConceptId::COUNT]);

impl ConceptScores {
    pub fn new(flags: [bool; ConceptId::COUNT]) -> Self {
        Self(flags)
    }

    /// Scores with exactly the listed concepts present.
    pub fn with_present(present: &[ConceptId]) -> Self {
        let mut s = Self::default();
        for &c in present {
            s.set(c, true);
        }
        s
    }

    /// Decodes bit `i` of `bits` as concept `ALL[i]`; used to enumerate all 512 vectors.
    pub fn from_bits(bits: u16) -> Self {
        let mut flags = [false; ConceptId::COUNT];
        for (i, f) in flags.iter_mut().enumerate() {
            *f = bits >> i & 1 == 1;
        }
        Self(flags)
    }

    pub fn get(&self, concept: ConceptId) -> bool {
        self.0[concept.index()]
    }

    pub fn set(&mut self, concept: ConceptId, present: bool) {
        self.0[concept.index()] = present;
    }

    pub fn flags(&self) -> &[bool; ConceptId::COUNT] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = (ConceptId, bool)> + '_ {
        ConceptId::ALL.into_iter().map(|c| (c, self.get(c)))
    }
}

impl Serialize for ConceptScores {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(ConceptId::COUNT))?;
        for (c, v) in self.iter() {
            map.serialize_entry(c.as_str(), &u8::from(v))?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for ConceptScores {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let map = std::collections::BTreeMap::<ConceptId, u8>::deserialize(deserializer)?;
        if map.len() != ConceptId::COUNT {
            return Err(D::Error::custom("concept scores need all nine concepts"));
        }
        let mut s = ConceptScores::default();
        for (c, v) in map {
            match v {
                0 => {}
                1 => s.set(c, true),
                _ => return Err(D::Error::custom(format!("{c}: score must be 0 or 1"))),
            }
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledResponse {
    pub response_id: String,
    pub item_id: String,
    pub text: String,
    pub labels: ConceptScores,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingCorpus {
    pub responses: Vec<LabeledResponse>,
}

impl TrainingCorpus {
    pub fn new(responses: Vec<LabeledResponse>) -> Self {
        Self { responses }
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.responses.iter().map(|r| r.text.as_str())
    }

    pub fn labels(&self, concept: ConceptId) -> Vec<bool> {
        self.responses.iter().map(|r| r.labels.get(concept)).collect()
    }

    /// Writes the corpus in the training CSV layout accepted by [`parse_training_corpus`].
    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["response_id", "item_id", "text"];
        header.extend(ConceptId::ALL.iter().map(|c| c.as_str()));
        w.write_record(&header).expect("write to memory");
        for r in &self.responses {
            let mut rec = vec![r.response_id.clone(), r.item_id.clone(), r.text.clone()];
            rec.extend(r.labels.flags().iter().map(|&b| u8::from(b).to_string()));
            w.write_record(&rec).expect("write to memory");
        }
        w.into_inner().expect("flush to memory")
    }

    /// SHA-256 over the canonical CSV serialization, hex encoded.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_csv());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One uploaded student row: the identifier plus one optional answer per item column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchRow {
    pub student_id: String,
    pub answers: Vec<Option<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseBatch {
    pub item_ids: Vec<String>,
    pub rows: Vec<BatchRow>,
}

impl ResponseBatch {
    /// Number of non-empty answer cells.
    pub fn answer_count(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.answers.iter().filter(|a| a.is_some()).count())
            .sum()
    }
}

/// One item's answers, extracted from a batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemResponses {
    pub item_index: usize,
    pub item_id: String,
    pub entries: Vec<ItemEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItemEntry {
    /// Index of the source row in the batch.
    pub row: usize,
    pub student_id: String,
    pub text: String,
}

fn strip_bom(bytes: &[u8]) -> &[u8] {
    bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes)
}

fn read_records(bytes: &[u8]) -> Result<(Vec<String>, Vec<csv::StringRecord>), CorpusError> {
    let bytes = strip_bom(bytes);
    std::str::from_utf8(bytes).map_err(|_| CorpusError::NotUtf8)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| CorpusError::Malformed { row: 0, detail: e.to_string() })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect::<Vec<_>>();
    if header.iter().all(|h| h.is_empty()) {
        return Err(CorpusError::Header("missing header row".into()));
    }
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CorpusError::Malformed { row: i + 1, detail: e.to_string() })?;
        records.push(rec);
    }
    Ok((header, records))
}

/// Parses a training corpus: `response_id,item_id,text` followed by the nine
/// concept columns in canonical order, with 0/1 label cells.
pub fn parse_training_corpus(bytes: &[u8]) -> Result<TrainingCorpus, CorpusError> {
    let (header, records) = read_records(bytes)?;
    let mut expected = vec!["response_id", "item_id", "text"];
    expected.extend(ConceptId::ALL.iter().map(|c| c.as_str()));
    if header != expected {
        return Err(CorpusError::Header(format!(
            "expected columns {}, got {}",
            expected.join(","),
            header.join(",")
        )));
    }

    let mut seen = HashSet::new();
    let mut responses = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let row = i + 1;
        let response_id = rec[0].trim().to_string();
        if response_id.is_empty() {
            return Err(CorpusError::EmptyResponseId { row });
        }
        let text = rec[2].trim().to_string();
        if text.is_empty() {
            return Err(CorpusError::EmptyText { row });
        }
        let mut labels = ConceptScores::default();
        for (j, concept) in ConceptId::ALL.into_iter().enumerate() {
            match rec[3 + j].trim() {
                "0" => {}
                "1" => labels.set(concept, true),
                other => {
                    return Err(CorpusError::NonBinaryLabel {
                        row,
                        column: concept.as_str().to_string(),
                        value: other.to_string(),
                    })
                }
            }
        }
        if !seen.insert(response_id.clone()) {
            return Err(CorpusError::DuplicateResponseId { row, id: response_id });
        }
        responses.push(LabeledResponse {
            response_id,
            item_id: rec[1].trim().to_string(),
            text,
            labels,
        });
    }
    Ok(TrainingCorpus { responses })
}

/// Parses an uploaded batch: `student_id` followed by 1..=8 item columns whose
/// headers are the item identifiers.
pub fn parse_response_batch(bytes: &[u8]) -> Result<ResponseBatch, CorpusError> {
    let (header, records) = read_records(bytes)?;
    if header[0] != "student_id" {
        return Err(CorpusError::Header(format!(
            "first column must be student_id, got {:?}",
            header[0]
        )));
    }
    let item_ids = header[1..].to_vec();
    if item_ids.is_empty() {
        return Err(CorpusError::NoItems);
    }
    if item_ids.len() > MAX_BATCH_ITEMS {
        return Err(CorpusError::TooManyItems(item_ids.len()));
    }
    if let Some(blank) = item_ids.iter().position(|id| id.is_empty()) {
        return Err(CorpusError::Header(format!("item column {} has an empty name", blank + 1)));
    }

    let mut rows = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let row = i + 1;
        let student_id = rec[0].trim().to_string();
        if student_id.is_empty() {
            return Err(CorpusError::EmptyStudentId { row });
        }
        let answers: Vec<Option<String>> = rec
            .iter()
            .skip(1)
            .map(|cell| {
                let t = cell.trim();
                (!t.is_empty()).then(|| t.to_string())
            })
            .collect();
        if answers.iter().all(Option::is_none) {
            return Err(CorpusError::AllAnswersEmpty { row, student_id });
        }
        rows.push(BatchRow { student_id, answers });
    }
    Ok(ResponseBatch { item_ids, rows })
}

/// Splits a batch into one answer list per item, preserving row order and
/// omitting empty cells.
pub fn split_by_item(batch: &ResponseBatch) -> Vec<ItemResponses> {
    batch
        .item_ids
        .iter()
        .enumerate()
        .map(|(item_index, item_id)| ItemResponses {
            item_index,
            item_id: item_id.clone(),
            entries: batch
                .rows
                .iter()
                .enumerate()
                .filter_map(|(row, r)| {
                    r.answers[item_index].as_ref().map(|text| ItemEntry {
                        row,
                        student_id: r.student_id.clone(),
                        text: text.clone(),
                    })
                })
                .collect(),
        })
        .collect()
}
