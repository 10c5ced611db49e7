//! Versioned on-disk store of published model sets.
//!
//! ```text
//! <root>/
//!   ACTIVE                  active version number
//!   v000001/
//!     manifest.json         version, timestamp, provenance, per-concept summaries
//!     validation.json       full cross-validation report (optional)
//!     <concept>.dict        dictionary text form
//!     <concept>.clf         classifier text form
//! ```
//!
//! A version directory is staged under a hidden name and renamed into place
//! once complete; `ACTIVE` is replaced by rename. Readers therefore see either
//! the previous active set or the new one, never a partial directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::modelset::{ConceptBundle, ConceptSummary, ModelSet, Provenance};
use super::{io_err, write_atomic, ServiceError};
use crate::corpus::ConceptId;
use crate::evalmetrics::ValidationReport;
use crate::smo::BinaryClassifier;
use crate::textpipe::{FeatureConfig, FeatureDictionary};

pub const ACTIVE_FILE: &str = "ACTIVE";
const MANIFEST_FILE: &str = "manifest.json";
const VALIDATION_FILE: &str = "validation.json";
const FORMAT: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: u32,
    version: u64,
    created_at: String,
    provenance: Provenance,
    concepts: Vec<ManifestConcept>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestConcept {
    concept: ConceptId,
    config: FeatureConfig,
    dictionary: String,
    classifier: String,
    summary: ConceptSummary,
}

fn dict_file(c: ConceptId) -> String {
    format!("{c}.dict")
}

fn clf_file(c: ConceptId) -> String {
    format!("{c}.clf")
}

impl ModelSet {
    /// File name and contents of every file making up this set's version directory.
    pub fn serialize_files(&self) -> Result<Vec<(String, Vec<u8>)>, ServiceError> {
        let manifest = Manifest {
            format: FORMAT,
            version: self.version(),
            created_at: self.created_at().to_string(),
            provenance: self.provenance().clone(),
            concepts: self
                .bundles()
                .iter()
                .map(|b| ManifestConcept {
                    concept: b.concept,
                    config: *b.config(),
                    dictionary: dict_file(b.concept),
                    classifier: clf_file(b.concept),
                    summary: b.summary.clone(),
                })
                .collect(),
        };
        let mut files = vec![(MANIFEST_FILE.to_string(), serde_json::to_vec_pretty(&manifest)?)];
        for b in self.bundles() {
            files.push((dict_file(b.concept), b.dictionary.to_text().into_bytes()));
            files.push((clf_file(b.concept), b.classifier.to_text().into_bytes()));
        }
        Ok(files)
    }
}

pub struct Registry {
    root: PathBuf,
    publish_lock: Mutex<()>,
}

impl Registry {
    /// Opens (creating if needed) a registry rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        Ok(Self { root, publish_lock: Mutex::new(()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn version_dir(&self, version: u64) -> PathBuf {
        self.root.join(format!("v{version:06}"))
    }

    /// Published versions, ascending.
    pub fn versions(&self) -> Result<Vec<u64>, ServiceError> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(io_err(&self.root))? {
            let entry = entry.map_err(io_err(&self.root))?;
            let name = entry.file_name();
            let Some(name) = name.to_str() else { continue };
            if let Some(v) = name.strip_prefix('v').and_then(|d| d.parse::<u64>().ok()) {
                if entry.path().join(MANIFEST_FILE).is_file() {
                    out.push(v);
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn active_version(&self) -> Result<Option<u64>, ServiceError> {
        let path = self.root.join(ACTIVE_FILE);
        match fs::read_to_string(&path) {
            Ok(s) => s
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| ServiceError::InvalidModelSet(format!("{}: not a version number", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(&path)(e)),
        }
    }

    /// Persists `set` as the next version and makes it active. Returns the new version.
    pub fn publish(&self, set: &ModelSet, validation: Option<&ValidationReport>) -> Result<u64, ServiceError> {
        let _guard = self.publish_lock.lock().unwrap_or_else(|p| p.into_inner());
        let version = self.versions()?.last().copied().unwrap_or(0) + 1;
        let target = self.version_dir(version);
        if target.exists() {
            return Err(ServiceError::VersionCollision(version));
        }

        let mut set = set.clone();
        set.set_version(version);
        let staging = self.root.join(format!(".staging-{}", uuid::Uuid::new_v4().simple()));
        fs::create_dir(&staging).map_err(io_err(&staging))?;
        let result = (|| {
            for (name, bytes) in set.serialize_files()? {
                write_atomic(&staging.join(name), &bytes)?;
            }
            if let Some(v) = validation {
                write_atomic(&staging.join(VALIDATION_FILE), &serde_json::to_vec_pretty(v)?)?;
            }
            if target.exists() {
                return Err(ServiceError::VersionCollision(version));
            }
            fs::rename(&staging, &target).map_err(|e| match e.kind() {
                std::io::ErrorKind::AlreadyExists | std::io::ErrorKind::DirectoryNotEmpty => {
                    ServiceError::VersionCollision(version)
                }
                _ => io_err(&target)(e),
            })
        })();
        if let Err(e) = result {
            let _ = fs::remove_dir_all(&staging);
            return Err(e);
        }
        write_atomic(&self.root.join(ACTIVE_FILE), format!("{version}\n").as_bytes())?;
        if let Ok(dir) = fs::File::open(&self.root) {
            let _ = dir.sync_all();
        }
        Ok(version)
    }

    pub fn load(&self, version: u64) -> Result<ModelSet, ServiceError> {
        let dir = self.version_dir(version);
        let manifest_path = dir.join(MANIFEST_FILE);
        if !manifest_path.is_file() {
            return Err(ServiceError::UnknownVersion(version));
        }
        let read = |p: &Path| fs::read_to_string(p).map_err(io_err(p));
        let manifest: Manifest = serde_json::from_str(&read(&manifest_path)?)?;
        if manifest.format != FORMAT {
            return Err(ServiceError::InvalidModelSet(format!("unsupported format {}", manifest.format)));
        }
        if manifest.version != version {
            return Err(ServiceError::InvalidModelSet(format!(
                "directory v{version} holds manifest for version {}",
                manifest.version
            )));
        }
        let mut bundles = Vec::with_capacity(manifest.concepts.len());
        for mc in manifest.concepts {
            let dictionary = FeatureDictionary::from_text(&read(&dir.join(&mc.dictionary))?)?;
            let classifier = BinaryClassifier::from_text(&read(&dir.join(&mc.classifier))?)?;
            if *dictionary.config() != mc.config {
                return Err(ServiceError::InvalidModelSet(format!(
                    "{}: dictionary config differs from manifest",
                    mc.concept
                )));
            }
            bundles.push(ConceptBundle { concept: mc.concept, dictionary, classifier, summary: mc.summary });
        }
        ModelSet::new(version, manifest.created_at, manifest.provenance, bundles)
    }

    pub fn load_active(&self) -> Result<ModelSet, ServiceError> {
        let v = self.active_version()?.ok_or(ServiceError::NoActiveVersion)?;
        self.load(v)
    }

    pub fn load_validation(&self, version: u64) -> Result<Option<ValidationReport>, ServiceError> {
        let path = self.version_dir(version).join(VALIDATION_FILE);
        match fs::read(&path) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}
