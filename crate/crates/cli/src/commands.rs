use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use evoscore_core::corpus::{parse_response_batch, parse_training_corpus, ConceptId, TrainingCorpus};
use evoscore_core::evalmetrics::{train_concept_model, ConceptValidation, Thresholds, ValidationReport};
use evoscore_core::service::{
    build_model_set, execute_run, generate_report, parse_result_csv, render_charts, write_atomic, ConceptConfigs,
    ModelSet, Registry, RunArtifacts, ScoringRun, ServiceError,
};
use evoscore_core::smo::SmoParams;
use evoscore_core::synthetic::{batch_to_csv, synthetic_batch, synthetic_corpus};

use crate::server::{self, ServerConfig};

#[derive(Debug, Parser)]
#[command(name = "evoscore", version, about = "Score written explanations of evolutionary change for nine concepts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build all nine concept models from a labelled corpus and publish them.
    Train {
        /// Training corpus CSV.
        corpus: PathBuf,
        #[arg(long, env = "EVOSCORE_REGISTRY", default_value = "registry")]
        registry: PathBuf,
        #[command(flatten)]
        training: TrainingArgs,
    },
    /// Cross-validate every concept and write the validation report, without publishing.
    Validate {
        corpus: PathBuf,
        #[command(flatten)]
        training: TrainingArgs,
        /// Directory for validation.json; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a response batch with a published model set.
    Score {
        /// Batch CSV: student_id followed by one column per item.
        batch: PathBuf,
        #[arg(long, env = "EVOSCORE_REGISTRY", default_value = "registry")]
        registry: PathBuf,
        /// Model-set version; the active version when omitted.
        #[arg(long)]
        model_version: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Rebuild report.json and charts from a result CSV.
    Report {
        results: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "EVOSCORE_REGISTRY", default_value = "registry")]
        registry: PathBuf,
        /// Where runs and their artifacts are kept.
        #[arg(long, default_value = "data")]
        data: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Scoring runs processed at once.
        #[arg(long, default_value_t = 4)]
        workers: usize,
        /// Bearer token for the admin endpoints; admin access is refused when unset.
        #[arg(long, env = "ADMIN_TOKEN", hide_env_values = true)]
        admin_token: Option<String>,
    },
    /// Write a synthetic corpus or batch with keyword-implanted concepts.
    Synth {
        #[arg(value_enum)]
        kind: SynthKind,
        /// Responses (corpus) or students (batch).
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        items: usize,
        /// Label flip probability (corpus only).
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Corpus,
    Batch,
}

#[derive(Debug, Clone, Args)]
pub struct TrainingArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Soft-margin penalty.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// KKT tolerance.
    #[arg(long, default_value_t = 1e-3)]
    pub tolerance: f64,
    /// TOML file with per-concept feature-setting overrides.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl TrainingArgs {
    pub fn params(&self) -> SmoParams {
        SmoParams { c: self.c, kkt_tolerance: self.tolerance, ..SmoParams::default() }
    }

    pub fn configs(&self) -> Result<ConceptConfigs> {
        let base = ConceptConfigs::default();
        match &self.config {
            None => Ok(base),
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                Ok(base.with_overrides(&text)?)
            }
        }
    }
}

fn read_corpus(path: &Path) -> Result<TrainingCorpus> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_training_corpus(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn load_set(registry: &Registry, version: Option<u64>) -> Result<ModelSet, ServiceError> {
    match version {
        Some(v) => registry.load(v),
        None => registry.load_active(),
    }
}

/// Cross-validates every concept without fitting a publishable set.
pub fn validate_corpus(corpus: &TrainingCorpus, args: &TrainingArgs) -> Result<ValidationReport> {
    let configs = args.configs()?;
    let params = args.params();
    let concepts = ConceptId::ALL
        .into_iter()
        .map(|c| {
            train_concept_model(corpus, c, configs.get(c), &params, args.folds, args.seed)
                .map(|m| ConceptValidation::from(&m))
                .map_err(|source| ServiceError::Concept { concept: c, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ValidationReport {
        seed: args.seed,
        k: args.folds,
        params,
        corpus_fingerprint: corpus.fingerprint(),
        corpus_size: corpus.len(),
        thresholds: Thresholds::default(),
        concepts,
    })
}

fn write_report_files(out: &Path, report: &evoscore_core::service::Report) -> Result<RunArtifacts> {
    let artifacts = RunArtifacts::in_dir(out);
    write_atomic(&artifacts.report_json, &serde_json::to_vec_pretty(report)?)?;
    let charts = render_charts(report)?;
    write_atomic(&artifacts.bar_svg, charts.bar.as_bytes())?;
    write_atomic(&artifacts.pie_svg, charts.pie.as_bytes())?;
    write_atomic(&artifacts.bubble_svg, charts.bubble.as_bytes())?;
    Ok(artifacts)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { corpus, registry, training } => {
            let corpus = read_corpus(&corpus)?;
            let (set, report) =
                build_model_set(&corpus, &training.configs()?, &training.params(), training.folds, training.seed)?;
            let registry = Registry::open(registry)?;
            let version = registry.publish(&set, Some(&report))?;
            for b in set.bundles() {
                let s = &b.summary;
                println!(
                    "{:<22} kappa {:.3}  agreement {:5.1}%  {}",
                    b.concept.as_str(),
                    s.pooled.kappa,
                    s.pooled.agreement_pct,
                    if s.passed { "pass" } else { "below threshold" }
                );
            }
            println!("published model set v{version}");
        }
        Command::Validate { corpus, training, out } => {
            let report = validate_corpus(&read_corpus(&corpus)?, &training)?;
            let json = serde_json::to_vec_pretty(&report)?;
            match out {
                Some(dir) => write_atomic(&dir.join("validation.json"), &json)?,
                None => println!("{}", String::from_utf8(json)?),
            }
        }
        Command::Score { batch, registry, model_version, out } => {
            let bytes = fs::read(&batch).with_context(|| format!("reading {}", batch.display()))?;
            let batch = parse_response_batch(&bytes).with_context(|| format!("parsing {}", batch.display()))?;
            if !registry.is_dir() {
                return Err(ServiceError::NoActiveVersion.into());
            }
            let registry = Registry::open(registry)?;
            let set = load_set(&registry, model_version)?;
            let mut scoring = ScoringRun::new(batch, set.version());
            let artifacts = execute_run(&mut scoring, &set, &out, |_| {})?;
            println!(
                "scored {} answers with model set v{} -> {}",
                scoring.results.len(),
                set.version(),
                artifacts.results_csv.display()
            );
        }
        Command::Report { results, out } => {
            let bytes = fs::read(&results).with_context(|| format!("reading {}", results.display()))?;
            let rows = parse_result_csv(&bytes)?;
            let artifacts = write_report_files(&out, &generate_report(&rows)?)?;
            println!("wrote {}", artifacts.report_json.display());
        }
        Command::Serve { registry, data, addr, workers, admin_token } => {
            if workers == 0 {
                bail!("--workers must be at least 1");
            }
            let config = ServerConfig { registry, data_dir: data, workers, admin_token };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                println!("listening on http://{}", listener.local_addr()?);
                server::serve(listener, config, server::shutdown_signal()).await
            })?;
        }
        Command::Synth { kind, n, items, noise, seed, out } => {
            let bytes = match kind {
                SynthKind::Corpus => synthetic_corpus(n, items, noise, seed).to_csv(),
                SynthKind::Batch => batch_to_csv(&synthetic_batch(n, items, 0.1, seed).0),
            };
            write_atomic(&out, &bytes)?;
        }
    }
    Ok(())
}
