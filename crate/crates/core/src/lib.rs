//! Qualification and risk classification of software under EU medical
//! device law.
//!
//! Regulatory decision trees are data: rulepacks written in a small text
//! format are parsed into a [`Rulebook`], validated, and evaluated against an
//! [`AssessmentCase`]. Manufacturer intention is computed from structured
//! evidence and feeds the tree through derived question nodes. Every
//! [`Verdict`] carries a cited root-to-leaf [`Trace`].

pub mod case;
pub mod classification;
pub mod evidence;
pub mod intention;
pub mod qualification;
pub mod report;
pub mod rulepack;
pub mod session;
pub mod shipped;

pub use case::{AssessmentCase, CaseError, CASE_SCHEMA};
pub use classification::{classify, max_class, ClassTrace, ClassificationProfile, RiskClass};
pub use evidence::{
    purposes_affirmed, validate_evidence, EvidenceChannel, EvidenceItem, Polarity, PurposeGroup,
    PurposeTag, SourceKind,
};
pub use intention::{
    assess_channel, derived_intention, resolve_intention, IntentionFinding, IntentionResolution,
    PrevailingChannel,
};
pub use qualification::{
    evaluate, next_question, AnsweredBy, DerivedRegistry, EvalError, NextStep, Prompt, Trace,
    TraceStep, Verdict,
};
pub use report::{render_report, Report, ReportFormat};
pub use rulepack::{
    compile_to_decision_table, parse_rulebook, serialize_rulebook, validate_rulebook, Answer,
    DecisionTable, Location, Node, NodeBody, NodeId, Outcome, ParseError, QuestionKind, Rulebook,
    RulebookRef, Severity, ValidationIssue,
};
