//! Command-line front end and HTTP service for evoscore.

pub mod commands;
pub mod server;

use evoscore_core::corpus::CorpusError;
use evoscore_core::evalmetrics::EvalError;
use evoscore_core::service::ServiceError;
use evoscore_core::smo::SmoError;
use evoscore_core::textpipe::TextError;

/// Process exit codes, one per failure class.
pub mod exit {
    pub const OK: u8 = 0;
    pub const OTHER: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const BAD_INPUT: u8 = 3;
    pub const TRAINING: u8 = 4;
    pub const REGISTRY: u8 = 5;
    pub const IO: u8 = 6;
}

fn service_code(e: &ServiceError) -> u8 {
    match e {
        ServiceError::Corpus(_) | ServiceError::Config(_) | ServiceError::ResultFile(_) | ServiceError::EmptyRows => {
            exit::BAD_INPUT
        }
        ServiceError::Eval(_) | ServiceError::Text(_) | ServiceError::Smo(_) | ServiceError::Concept { .. } => {
            exit::TRAINING
        }
        ServiceError::NoActiveVersion
        | ServiceError::UnknownVersion(_)
        | ServiceError::VersionCollision(_)
        | ServiceError::InvalidModelSet(_) => exit::REGISTRY,
        ServiceError::Io { .. } => exit::IO,
        ServiceError::Json(_) | ServiceError::InvalidTransition { .. } => exit::OTHER,
    }
}

/// Maps an error chain to the exit code of its first recognised cause.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ServiceError>() {
            return service_code(e);
        }
        if cause.is::<CorpusError>() {
            return exit::BAD_INPUT;
        }
        if cause.is::<EvalError>() || cause.is::<SmoError>() || cause.is::<TextError>() {
            return exit::TRAINING;
        }
        if cause.is::<std::io::Error>() {
            return exit::IO;
        }
    }
    exit::OTHER
}
