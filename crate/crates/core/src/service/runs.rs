use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::charts::render_charts;
use super::modelset::ModelSet;
use super::report::Report;
use super::scoring::{score_and_report, write_result_csv, ResultRow};
use super::{write_atomic, ServiceError};
use crate::corpus::ResponseBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Pending,
    Scoring,
    Reporting,
    Done,
    Failed,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Pending => "pending",
            RunStatus::Scoring => "scoring",
            RunStatus::Reporting => "reporting",
            RunStatus::Done => "done",
            RunStatus::Failed => "failed",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, RunStatus::Done | RunStatus::Failed)
    }

    /// Forward along pending, scoring, reporting, done; any live state may fail.
    pub fn can_advance_to(self, next: RunStatus) -> bool {
        use RunStatus::*;
        matches!(
            (self, next),
            (Pending, Scoring) | (Scoring, Reporting) | (Reporting, Done) | (Pending | Scoring | Reporting, Failed)
        )
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One batch-scoring job.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoringRun {
    pub run_id: String,
    pub status: RunStatus,
    pub model_version: u64,
    pub batch: ResponseBatch,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub results: Vec<ResultRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<Report>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ScoringRun {
    pub fn new(batch: ResponseBatch, model_version: u64) -> Self {
        Self {
            run_id: uuid::Uuid::new_v4().simple().to_string(),
            status: RunStatus::Pending,
            model_version,
            batch,
            results: Vec::new(),
            report: None,
            error: None,
        }
    }

    pub fn advance(&mut self, next: RunStatus) -> Result<(), ServiceError> {
        if !self.status.can_advance_to(next) {
            return Err(ServiceError::InvalidTransition { from: self.status, to: next });
        }
        self.status = next;
        Ok(())
    }

    pub fn fail(&mut self, error: impl fmt::Display) {
        if !self.status.is_terminal() {
            self.status = RunStatus::Failed;
            self.error = Some(error.to_string());
        }
    }
}

/// Files written for a completed run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunArtifacts {
    pub results_csv: PathBuf,
    pub report_json: PathBuf,
    pub bar_svg: PathBuf,
    pub pie_svg: PathBuf,
    pub bubble_svg: PathBuf,
}

impl RunArtifacts {
    pub fn in_dir(dir: &Path) -> Self {
        let charts = dir.join("charts");
        Self {
            results_csv: dir.join("results.csv"),
            report_json: dir.join("report.json"),
            bar_svg: charts.join("bar.svg"),
            pie_svg: charts.join("pie.svg"),
            bubble_svg: charts.join("bubble.svg"),
        }
    }

    /// Path of a chart by name (`bar`, `pie` or `bubble`).
    pub fn chart(&self, kind: &str) -> Option<&Path> {
        match kind {
            "bar" => Some(&self.bar_svg),
            "pie" => Some(&self.pie_svg),
            "bubble" => Some(&self.bubble_svg),
            _ => None,
        }
    }
}

/// Drives `run` from pending to done, writing the result CSV, report and
/// charts under `out_dir`. The result file and the report are produced on
/// separate threads; `on_status` sees every status the run passes through.
/// On error the run is marked failed and the error returned.
pub fn execute_run(
    run: &mut ScoringRun,
    set: &ModelSet,
    out_dir: &Path,
    mut on_status: impl FnMut(&ScoringRun),
) -> Result<RunArtifacts, ServiceError> {
    let result = (|| {
        run.advance(RunStatus::Scoring)?;
        on_status(run);
        let (rows, report) = score_and_report(&run.batch, set)?;
        run.results = rows;
        run.advance(RunStatus::Reporting)?;
        on_status(run);

        let artifacts = RunArtifacts::in_dir(out_dir);
        let rows = &run.results;
        let (csv_done, report_done) = std::thread::scope(|s| {
            let csv = s.spawn(|| -> Result<(), ServiceError> {
                write_atomic(&artifacts.results_csv, &write_result_csv(rows)?)
            });
            let rep = s.spawn(|| -> Result<(), ServiceError> {
                write_atomic(&artifacts.report_json, &serde_json::to_vec_pretty(&report)?)?;
                let charts = render_charts(&report)?;
                write_atomic(&artifacts.bar_svg, charts.bar.as_bytes())?;
                write_atomic(&artifacts.pie_svg, charts.pie.as_bytes())?;
                write_atomic(&artifacts.bubble_svg, charts.bubble.as_bytes())
            });
            (csv.join(), rep.join())
        });
        csv_done.unwrap_or_else(|p| std::panic::resume_unwind(p))?;
        report_done.unwrap_or_else(|p| std::panic::resume_unwind(p))?;
        run.report = Some(report);
        run.advance(RunStatus::Done)?;
        on_status(run);
        Ok(artifacts)
    })();
    if let Err(e) = &result {
        run.fail(e);
        on_status(run);
    }
    result
}
