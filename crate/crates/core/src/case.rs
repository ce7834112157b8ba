//! Assessment cases and the `mdsw-case/1` JSON file format.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classification::{ClassificationProfile, RiskClass};
use crate::evidence::{validate_evidence_set, EvidenceItem};
use crate::rulepack::{NodeId, ValidationIssue};

pub const CASE_SCHEMA: &str = "mdsw-case/1";

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("cannot read case file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed case file: {0}")]
    Json(#[from] serde_json::Error),
}

/// A software product under assessment.
///
/// `answers` holds explicit answers to question nodes. On derived nodes an
/// explicit answer overrides the computed value and is marked as such in the
/// trace. Keys need not cover every node; interactive sessions fill them in
/// as they go.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CaseDoc", into = "CaseDoc")]
pub struct AssessmentCase {
    pub id: String,
    pub name: String,
    pub description: String,
    pub evidence: Vec<EvidenceItem>,
    pub answers: BTreeMap<NodeId, bool>,
    pub classification_profile: Option<ClassificationProfile>,
    pub linked_device_class: Option<RiskClass>,
}

impl AssessmentCase {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        AssessmentCase {
            id: id.into(),
            name: name.into(),
            ..AssessmentCase::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CaseError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, CaseError> {
        let text = std::fs::read_to_string(path).map_err(|source| CaseError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("case serializes")
    }

    pub fn answer(&self, node: &str) -> Option<bool> {
        self.answers.get(node).copied()
    }

    pub fn validate(&self) -> Vec<ValidationIssue> {
        validate_evidence_set(&self.evidence)
    }
}

/// On-disk shape of a case. Unknown fields are rejected.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseDoc {
    schema: String,
    id: String,
    #[serde(default)]
    name: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    evidence: Vec<EvidenceItem>,
    #[serde(default)]
    answers: BTreeMap<NodeId, bool>,
    #[serde(default)]
    classification_profile: Option<ClassificationProfile>,
    #[serde(default)]
    linked_device_class: Option<RiskClass>,
}

impl TryFrom<CaseDoc> for AssessmentCase {
    type Error = String;

    fn try_from(doc: CaseDoc) -> Result<Self, String> {
        if doc.schema != CASE_SCHEMA {
            return Err(format!(
                "unsupported schema `{}`, expected `{CASE_SCHEMA}`",
                doc.schema
            ));
        }
        let case = AssessmentCase {
            id: doc.id,
            name: doc.name,
            description: doc.description,
            evidence: doc.evidence,
            answers: doc.answers,
            classification_profile: doc.classification_profile,
            linked_device_class: doc.linked_device_class,
        };
        let issues = case.validate();
        if let Some(first) = issues.first() {
            return Err(format!("invalid evidence: {}", first.message));
        }
        Ok(case)
    }
}

impl From<AssessmentCase> for CaseDoc {
    fn from(c: AssessmentCase) -> Self {
        CaseDoc {
            schema: CASE_SCHEMA.to_owned(),
            id: c.id,
            name: c.name,
            description: c.description,
            evidence: c.evidence,
            answers: c.answers,
            classification_profile: c.classification_profile,
            linked_device_class: c.linked_device_class,
        }
    }
}
