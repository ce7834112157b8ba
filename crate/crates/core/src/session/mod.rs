//! Interactive assessment sessions with file-backed persistence.

mod service;
mod store;

use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::AssessmentCase;
use crate::classification::{ClassificationProfile, RiskClass};
use crate::intention::IntentionResolution;
use crate::qualification::{EvalError, NextStep, Verdict};
use crate::rulepack::{NodeId, RulebookRef, ValidationIssue};

pub use service::SessionService;
pub use store::SessionStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Open,
    Finalized,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Session {
    /// 128 random bits as lowercase hex; also the case id.
    pub id: String,
    pub rulebook: RulebookRef,
    pub case: AssessmentCase,
    /// Derived nodes whose computed value the assessor accepted as is.
    #[serde(default)]
    pub confirmed: BTreeSet<NodeId>,
    pub status: SessionStatus,
    pub created: DateTime<Utc>,
    pub updated: DateTime<Utc>,
    #[serde(default)]
    pub verdict: Option<Verdict>,
}

/// Optional case details supplied when a session is opened.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseHeader {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub classification_profile: Option<ClassificationProfile>,
    #[serde(default)]
    pub linked_device_class: Option<RiskClass>,
}

/// Session state together with the current question or verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub session: Session,
    pub next: NextStep,
    pub intention: IntentionResolution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceUpdate {
    pub intention: IntentionResolution,
    /// Answers cleared because a computed value they depended on changed.
    pub invalidated: Vec<NodeId>,
    pub next: NextStep,
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("unknown rulebook `{0}`")]
    UnknownRulebook(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("session `{0}` is finalized")]
    Finalized(String),
    #[error("session `{0}` is not finalized")]
    NotFinalized(String),
    #[error("unknown question node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` is neither the current question nor answered on the current path")]
    NotOnPath(String),
    #[error("invalid evidence: {}", .0.first().map(|i| i.message.as_str()).unwrap_or_default())]
    InvalidEvidence(Vec<ValidationIssue>),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("session storage: {0}")]
    Storage(String),
}

impl SessionError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::UnknownRulebook(_) => "unknown-rulebook",
            SessionError::UnknownSession(_) => "unknown-session",
            SessionError::Finalized(_) => "session-finalized",
            SessionError::NotFinalized(_) => "session-not-finalized",
            SessionError::UnknownNode(_) => "unknown-node",
            SessionError::NotOnPath(_) => "node-not-on-path",
            SessionError::InvalidEvidence(_) => "invalid-evidence",
            SessionError::InvalidRequest(_) => "invalid-request",
            SessionError::Eval(EvalError::MissingAnswer { .. }) => "missing-answer",
            SessionError::Eval(_) => "evaluation-error",
            SessionError::Storage(_) => "storage-error",
        }
    }
}

impl From<std::io::Error> for SessionError {
    fn from(e: std::io::Error) -> Self {
        SessionError::Storage(e.to_string())
    }
}
