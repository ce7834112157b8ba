//! Rendering of verdicts as JSON or Markdown reports.
//!
//! Markdown is always rendered from a [`Report`] value, so a JSON report read
//! back in renders to the same Markdown.

use std::fmt::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::case::AssessmentCase;
use crate::classification::{ClassTrace, RiskClass};
use crate::evidence::{purposes_affirmed, EvidenceItem, PurposeTag};
use crate::intention::{resolve_case, IntentionFinding, IntentionResolution};
use crate::qualification::{AnsweredBy, TraceStep, Verdict};
use crate::rulepack::{NodeId, Outcome, RulebookRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    #[serde(rename = "md")]
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(format!(
                "unknown report format `{other}` (expected json or md)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub case_id: String,
    pub case_name: String,
    pub description: String,
    pub rulebook: RulebookRef,
    pub qualification: Outcome,
    pub exit_node: NodeId,
    pub leaf: NodeId,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub risk_class: Option<RiskClass>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub class_trace: Option<ClassTrace>,
    pub trace: Vec<TraceStep>,
    pub intention: IntentionResolution,
    pub purposes_affirmed: Vec<PurposeTag>,
    /// Sorted by id.
    pub evidence: Vec<EvidenceItem>,
}

impl Report {
    pub fn new(case: &AssessmentCase, verdict: &Verdict) -> Self {
        let mut evidence = case.evidence.clone();
        evidence.sort_by(|a, b| a.id.cmp(&b.id));
        Report {
            case_id: case.id.clone(),
            case_name: case.name.clone(),
            description: case.description.clone(),
            rulebook: verdict.rulebook.clone(),
            qualification: verdict.qualification,
            exit_node: verdict.exit_node.clone(),
            leaf: verdict.leaf.clone(),
            risk_class: verdict.risk_class,
            class_trace: verdict.class_trace.clone(),
            trace: verdict.trace.steps.clone(),
            intention: resolve_case(case),
            purposes_affirmed: purposes_affirmed(&case.evidence).into_iter().collect(),
            evidence,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let title = if self.case_name.is_empty() {
            self.case_id.clone()
        } else {
            format!("{} ({})", self.case_name, self.case_id)
        };
        let _ = writeln!(out, "# Assessment report: {}", cell(&title));
        out.push('\n');
        let _ = writeln!(
            out,
            "Rulebook: `{}` version {}",
            self.rulebook.id, self.rulebook.version
        );
        if !self.description.is_empty() {
            out.push('\n');
            let _ = writeln!(out, "{}", self.description.trim_end());
        }

        out.push_str("\n## Verdict\n\n");
        let _ = writeln!(out, "- Qualification: **{}**", self.qualification);
        let _ = writeln!(out, "- Exit: `{}` -> `{}`", self.exit_node, self.leaf);
        if let Some(leaf) = self.trace.last() {
            let _ = writeln!(out, "- Reason: {}", cell(&leaf.prompt));
            let _ = writeln!(out, "- Citation: {}", cell(&leaf.citation));
        }
        let overrides: Vec<String> = self
            .trace
            .iter()
            .filter(|s| s.answered_by == Some(AnsweredBy::Override))
            .map(|s| format!("`{}`", s.node))
            .collect();
        if !overrides.is_empty() {
            let _ = writeln!(out, "- Manual overrides: {}", overrides.join(", "));
        }

        if let (Some(class), Some(ct)) = (self.risk_class, &self.class_trace) {
            out.push_str("\n## Risk class\n\n");
            let _ = writeln!(out, "- Class: **{class}** (intrinsic {})", ct.intrinsic);
            out.push('\n');
            out.push_str("| Rule | Class | Applied | Citation | Note |\n");
            out.push_str("|---|---|---|---|---|\n");
            for s in &ct.steps {
                let rule = serde_json::to_value(s.rule)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default();
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    rule,
                    s.class,
                    if s.applied { "yes" } else { "no" },
                    cell(&s.citation),
                    cell(&s.note)
                );
            }
        }

        out.push_str("\n## Trace\n\n");
        out.push_str("| # | Node | Question | Answer | By | Citation |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        for (i, s) in self.trace.iter().enumerate() {
            let (question, answer, by) = match s.outcome {
                Some(o) => (format!("verdict {o}: {}", s.prompt), "-".to_owned(), "-"),
                None => (
                    s.prompt.clone(),
                    match s.answer {
                        Some(true) => "yes".to_owned(),
                        Some(false) => "no".to_owned(),
                        None => "-".to_owned(),
                    },
                    match s.answered_by {
                        Some(AnsweredBy::Explicit) => "explicit",
                        Some(AnsweredBy::Derived) => "derived",
                        Some(AnsweredBy::Override) => "override",
                        None => "-",
                    },
                ),
            };
            let _ = writeln!(
                out,
                "| {} | `{}` | {} | {} | {} | {} |",
                i + 1,
                s.node,
                cell(&question),
                answer,
                by,
                cell(&s.citation)
            );
        }

        out.push_str("\n## Intention\n\n");
        let _ = writeln!(out, "- {}", self.intention.summary());
        for f in [&self.intention.direct, &self.intention.indirect] {
            let _ = writeln!(out, "- {}", finding_line(f));
        }
        let purposes: Vec<&str> = self.purposes_affirmed.iter().map(|p| p.as_str()).collect();
        let _ = writeln!(
            out,
            "- Purposes affirmed: {}",
            if purposes.is_empty() {
                "none".to_owned()
            } else {
                purposes.join(", ")
            }
        );

        out.push_str("\n## Evidence\n\n");
        if self.evidence.is_empty() {
            out.push_str("No evidence recorded.\n");
        } else {
            out.push_str("| Id | Channel | Source | Polarity | Purposes | Provenance | Note |\n");
            out.push_str("|---|---|---|---|---|---|---|\n");
            for e in &self.evidence {
                let purposes: Vec<&str> = e.purposes.iter().map(|p| p.as_str()).collect();
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | {} | {} |",
                    cell(&e.id),
                    e.channel,
                    e.source,
                    e.polarity.as_str(),
                    purposes.join(", "),
                    cell(&e.provenance),
                    cell(&e.note)
                );
            }
        }
        out
    }
}

fn finding_line(f: &IntentionFinding) -> String {
    let list = |ids: &[String]| {
        if ids.is_empty() {
            "none".to_owned()
        } else {
            ids.join(", ")
        }
    };
    format!(
        "{} channel: {}; supporting: {}; contradicting: {}",
        f.channel,
        if f.established {
            "established"
        } else {
            "not established"
        },
        list(&f.supporting),
        list(&f.contradicting)
    )
}

// Keep table cells on one line and pipes literal.
fn cell(s: &str) -> String {
    s.replace('|', "\\|").replace(['\n', '\r'], " ")
}

pub fn render_report(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Markdown => report.to_markdown(),
    }
}
