//! Training track (build and publish model sets) and scoring track (score
//! uploaded batches, merge results, build reports and charts).

mod charts;
mod modelset;
mod registry;
mod report;
mod runs;
mod scoring;

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::{ConceptId, CorpusError};
use crate::evalmetrics::EvalError;
use crate::smo::SmoError;
use crate::textpipe::TextError;

pub use charts::{render_bar_chart, render_bubble_chart, render_charts, render_pie_chart, Charts};
pub use modelset::{build_model_set, ConceptBundle, ConceptConfigs, ConceptSummary, ModelSet, Provenance};
pub use registry::{Registry, ACTIVE_FILE};
pub use report::{generate_report, Bubble, ConceptPresence, ItemReport, ModelDistribution, ModelInfo, Report, Summary};
pub use runs::{execute_run, RunArtifacts, RunStatus, ScoringRun};
pub use scoring::{parse_result_csv, score_and_report, score_batch, write_result_csv, ResultRow, RESULT_HEADER};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Smo(#[from] SmoError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("result file: {0}")]
    ResultFile(String),
    #[error("nothing to report: no result rows")]
    EmptyRows,
    #[error("concept {concept}: {source}")]
    Concept { concept: ConceptId, source: EvalError },
    #[error("registry has no active model set")]
    NoActiveVersion,
    #[error("model set version {0} not found")]
    UnknownVersion(u64),
    #[error("model set version {0} already exists")]
    VersionCollision(u64),
    #[error("invalid model set: {0}")]
    InvalidModelSet(String),
    #[error("illegal run status transition {from} -> {to}")]
    InvalidTransition { from: RunStatus, to: RunStatus },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ServiceError + '_ {
    move |source| ServiceError::Io { path: path.to_path_buf(), source }
}

/// Writes `bytes` to a sibling temp file, syncs it and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ServiceError> {
    use std::io::Write;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("file"),
        uuid::Uuid::new_v4().simple()
    ));
    let mut f = std::fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(io_err(path))
}
