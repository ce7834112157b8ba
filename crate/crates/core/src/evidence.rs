//! Purpose taxonomy and intention evidence.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rulepack::{IssueCode, ValidationIssue};

/// Medical purposes of art. 2(1) MDR, as dotted lowercase tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PurposeTag {
    #[serde(rename = "disease.diagnosis")]
    DiseaseDiagnosis,
    #[serde(rename = "disease.prevention")]
    DiseasePrevention,
    #[serde(rename = "disease.monitoring")]
    DiseaseMonitoring,
    #[serde(rename = "disease.prediction")]
    DiseasePrediction,
    #[serde(rename = "disease.prognosis")]
    DiseasePrognosis,
    #[serde(rename = "disease.treatment")]
    DiseaseTreatment,
    #[serde(rename = "disease.alleviation")]
    DiseaseAlleviation,
    #[serde(rename = "injury.diagnosis")]
    InjuryDiagnosis,
    #[serde(rename = "injury.monitoring")]
    InjuryMonitoring,
    #[serde(rename = "injury.treatment")]
    InjuryTreatment,
    #[serde(rename = "injury.alleviation")]
    InjuryAlleviation,
    #[serde(rename = "injury.compensation")]
    InjuryCompensation,
    #[serde(rename = "anatomy.investigation")]
    AnatomyInvestigation,
    #[serde(rename = "anatomy.replacement")]
    AnatomyReplacement,
    #[serde(rename = "anatomy.modification")]
    AnatomyModification,
    #[serde(rename = "invitro.information")]
    InvitroInformation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PurposeGroup {
    Disease,
    Injury,
    Anatomy,
    Invitro,
}

impl PurposeTag {
    pub const ALL: [PurposeTag; 16] = [
        PurposeTag::DiseaseDiagnosis,
        PurposeTag::DiseasePrevention,
        PurposeTag::DiseaseMonitoring,
        PurposeTag::DiseasePrediction,
        PurposeTag::DiseasePrognosis,
        PurposeTag::DiseaseTreatment,
        PurposeTag::DiseaseAlleviation,
        PurposeTag::InjuryDiagnosis,
        PurposeTag::InjuryMonitoring,
        PurposeTag::InjuryTreatment,
        PurposeTag::InjuryAlleviation,
        PurposeTag::InjuryCompensation,
        PurposeTag::AnatomyInvestigation,
        PurposeTag::AnatomyReplacement,
        PurposeTag::AnatomyModification,
        PurposeTag::InvitroInformation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PurposeTag::DiseaseDiagnosis => "disease.diagnosis",
            PurposeTag::DiseasePrevention => "disease.prevention",
            PurposeTag::DiseaseMonitoring => "disease.monitoring",
            PurposeTag::DiseasePrediction => "disease.prediction",
            PurposeTag::DiseasePrognosis => "disease.prognosis",
            PurposeTag::DiseaseTreatment => "disease.treatment",
            PurposeTag::DiseaseAlleviation => "disease.alleviation",
            PurposeTag::InjuryDiagnosis => "injury.diagnosis",
            PurposeTag::InjuryMonitoring => "injury.monitoring",
            PurposeTag::InjuryTreatment => "injury.treatment",
            PurposeTag::InjuryAlleviation => "injury.alleviation",
            PurposeTag::InjuryCompensation => "injury.compensation",
            PurposeTag::AnatomyInvestigation => "anatomy.investigation",
            PurposeTag::AnatomyReplacement => "anatomy.replacement",
            PurposeTag::AnatomyModification => "anatomy.modification",
            PurposeTag::InvitroInformation => "invitro.information",
        }
    }

    pub fn parse(s: &str) -> Option<PurposeTag> {
        PurposeTag::ALL.into_iter().find(|t| t.as_str() == s)
    }

    pub fn group(self) -> PurposeGroup {
        match self.as_str().split('.').next() {
            Some("disease") => PurposeGroup::Disease,
            Some("injury") => PurposeGroup::Injury,
            Some("anatomy") => PurposeGroup::Anatomy,
            _ => PurposeGroup::Invitro,
        }
    }

    /// Purposes that the directive-era list (93/42/EEC) already covered.
    /// Prediction, prognosis and in vitro information are MDR additions.
    pub fn in_directive_list(self) -> bool {
        !matches!(
            self,
            PurposeTag::DiseasePrediction
                | PurposeTag::DiseasePrognosis
                | PurposeTag::InvitroInformation
        )
    }
}

impl fmt::Display for PurposeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvidenceChannel {
    /// What the manufacturer says: marketing, documentation, statements.
    Direct,
    /// What the software does: data it gathers, how it is built, what it
    /// analyses.
    Indirect,
}

impl EvidenceChannel {
    pub fn as_str(self) -> &'static str {
        match self {
            EvidenceChannel::Direct => "direct",
            EvidenceChannel::Indirect => "indirect",
        }
    }
}

impl fmt::Display for EvidenceChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Marketing,
    InternalDocumentation,
    InformalStatement,
    DataGathering,
    SoftwareSpecification,
    DataAnalysis,
}

impl SourceKind {
    pub const ALL: [SourceKind; 6] = [
        SourceKind::Marketing,
        SourceKind::InternalDocumentation,
        SourceKind::InformalStatement,
        SourceKind::DataGathering,
        SourceKind::SoftwareSpecification,
        SourceKind::DataAnalysis,
    ];

    pub fn channel(self) -> EvidenceChannel {
        match self {
            SourceKind::Marketing
            | SourceKind::InternalDocumentation
            | SourceKind::InformalStatement => EvidenceChannel::Direct,
            SourceKind::DataGathering
            | SourceKind::SoftwareSpecification
            | SourceKind::DataAnalysis => EvidenceChannel::Indirect,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Marketing => "marketing",
            SourceKind::InternalDocumentation => "internal_documentation",
            SourceKind::InformalStatement => "informal_statement",
            SourceKind::DataGathering => "data_gathering",
            SourceKind::SoftwareSpecification => "software_specification",
            SourceKind::DataAnalysis => "data_analysis",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Affirms,
    Denies,
    /// Inspected, but probative of nothing.
    Neutral,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Affirms => "affirms",
            Polarity::Denies => "denies",
            Polarity::Neutral => "neutral",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceItem {
    pub id: String,
    pub channel: EvidenceChannel,
    pub source: SourceKind,
    pub polarity: Polarity,
    #[serde(default)]
    pub purposes: BTreeSet<PurposeTag>,
    #[serde(default)]
    pub note: String,
    /// Free-text locator: URL, document reference, court filing.
    #[serde(default)]
    pub provenance: String,
}

impl EvidenceItem {
    /// Item with the channel implied by `source`.
    pub fn new(
        id: impl Into<String>,
        source: SourceKind,
        polarity: Polarity,
        purposes: impl IntoIterator<Item = PurposeTag>,
    ) -> Self {
        EvidenceItem {
            id: id.into(),
            channel: source.channel(),
            source,
            polarity,
            purposes: purposes.into_iter().collect(),
            note: String::new(),
            provenance: String::new(),
        }
    }

    pub fn affirms(&self) -> bool {
        self.polarity == Polarity::Affirms
    }
}

pub fn validate_evidence(item: &EvidenceItem) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    if item.id.trim().is_empty() {
        issues.push(ValidationIssue::error(
            IssueCode::EmptyEvidenceId,
            "evidence item has an empty id",
        ));
    }
    if item.source.channel() != item.channel {
        issues.push(ValidationIssue::error(
            IssueCode::ChannelSourceMismatch,
            format!(
                "evidence `{}`: source `{}` belongs to the {} channel, not {}",
                item.id,
                item.source,
                item.source.channel(),
                item.channel
            ),
        ));
    }
    if item.affirms() && item.purposes.is_empty() {
        issues.push(ValidationIssue::error(
            IssueCode::MissingPurpose,
            format!(
                "evidence `{}` affirms intention but names no purpose",
                item.id
            ),
        ));
    }
    issues
}

/// Validate every item and check that ids are unique across the set.
pub fn validate_evidence_set<'a>(
    items: impl IntoIterator<Item = &'a EvidenceItem>,
) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    let mut ids = HashSet::new();
    for item in items {
        issues.extend(validate_evidence(item));
        if !ids.insert(item.id.as_str()) {
            issues.push(ValidationIssue::error(
                IssueCode::DuplicateEvidenceId,
                format!("evidence id `{}` is used more than once", item.id),
            ));
        }
    }
    issues
}

/// Union of the purposes named by affirming items. Denying and neutral items
/// contribute nothing, and cannot retract an affirmed purpose.
pub fn purposes_affirmed<'a>(
    evidence: impl IntoIterator<Item = &'a EvidenceItem>,
) -> BTreeSet<PurposeTag> {
    evidence
        .into_iter()
        .filter(|e| e.affirms())
        .flat_map(|e| e.purposes.iter().copied())
        .collect()
}
