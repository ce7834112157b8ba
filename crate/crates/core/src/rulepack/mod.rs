//! Rulepack DSL: regulatory decision trees as data.
//!
//! A rulepack is a list of question nodes and verdict leaves. The first node
//! in the file is the root. See [`parse_rulebook`] for the grammar.

mod lexer;
mod parser;
mod serialize;
mod table;
mod validate;

use std::borrow::Borrow;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use parser::{parse_rulebook, ParseError};
pub use serialize::serialize_rulebook;
pub use table::{compile_to_decision_table, DecisionTable, TableError, TableRow};
pub use validate::{is_identifier, validate_rulebook, IssueCode, Severity, ValidationIssue};

/// Identifier of a node inside a rulebook (`[a-z][a-z0-9_]*`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

/// 1-based line and column (in characters) within a rulepack source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Qualification outcome carried by a verdict leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "MD")]
    Md,
    #[serde(rename = "ACCESSORY")]
    Accessory,
    #[serde(rename = "NOT_MD")]
    NotMd,
    #[serde(rename = "NOT_SOFTWARE")]
    NotSoftware,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [
        Outcome::Md,
        Outcome::Accessory,
        Outcome::NotMd,
        Outcome::NotSoftware,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Md => "MD",
            Outcome::Accessory => "ACCESSORY",
            Outcome::NotMd => "NOT_MD",
            Outcome::NotSoftware => "NOT_SOFTWARE",
        }
    }

    pub fn parse(s: &str) -> Option<Outcome> {
        Outcome::ALL.into_iter().find(|o| o.as_str() == s)
    }

    /// Whether this outcome brings the software under the device rules
    /// (and therefore under classification).
    pub fn is_regulated(self) -> bool {
        matches!(self, Outcome::Md | Outcome::Accessory)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A yes/no answer label on a question branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
}

impl Answer {
    pub fn as_str(self) -> &'static str {
        match self {
            Answer::Yes => "yes",
            Answer::No => "no",
        }
    }
}

impl From<bool> for Answer {
    fn from(b: bool) -> Self {
        if b {
            Answer::Yes
        } else {
            Answer::No
        }
    }
}

impl From<Answer> for bool {
    fn from(a: Answer) -> Self {
        a == Answer::Yes
    }
}

/// How a question node gets its answer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "function", rename_all = "lowercase")]
pub enum QuestionKind {
    /// Answered explicitly by the assessor.
    Boolean,
    /// Answered by a registered computation over the case, overridable by
    /// an explicit answer.
    Derived(String),
}

impl QuestionKind {
    pub fn derived_function(&self) -> Option<&str> {
        match self {
            QuestionKind::Boolean => None,
            QuestionKind::Derived(f) => Some(f),
        }
    }
}

/// Branch targets of a question node. A validated rulebook has both.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Branches {
    pub yes: Option<NodeId>,
    pub no: Option<NodeId>,
}

impl Branches {
    pub fn new(yes: impl Into<NodeId>, no: impl Into<NodeId>) -> Self {
        Branches {
            yes: Some(yes.into()),
            no: Some(no.into()),
        }
    }

    pub fn get(&self, answer: Answer) -> Option<&NodeId> {
        match answer {
            Answer::Yes => self.yes.as_ref(),
            Answer::No => self.no.as_ref(),
        }
    }

    pub fn slot_mut(&mut self, answer: Answer) -> &mut Option<NodeId> {
        match answer {
            Answer::Yes => &mut self.yes,
            Answer::No => &mut self.no,
        }
    }

    /// Declared targets in canonical (yes, no) order.
    pub fn iter(&self) -> impl Iterator<Item = (Answer, &NodeId)> {
        [
            (Answer::Yes, self.yes.as_ref()),
            (Answer::No, self.no.as_ref()),
        ]
        .into_iter()
        .filter_map(|(a, t)| t.map(|t| (a, t)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum NodeBody {
    Question {
        prompt: String,
        kind: QuestionKind,
        branches: Branches,
    },
    Verdict {
        outcome: Outcome,
        reason: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub citation: String,
    pub body: NodeBody,
    /// Where the node was declared, when parsed from source. Not part of
    /// structural equality.
    #[serde(skip)]
    pub location: Option<Location>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.citation == other.citation && self.body == other.body
    }
}

impl Eq for Node {}

impl Node {
    pub fn question(
        id: impl Into<NodeId>,
        prompt: impl Into<String>,
        kind: QuestionKind,
        citation: impl Into<String>,
        branches: Branches,
    ) -> Self {
        Node {
            id: id.into(),
            citation: citation.into(),
            body: NodeBody::Question {
                prompt: prompt.into(),
                kind,
                branches,
            },
            location: None,
        }
    }

    pub fn verdict(
        id: impl Into<NodeId>,
        outcome: Outcome,
        reason: impl Into<String>,
        citation: impl Into<String>,
    ) -> Self {
        Node {
            id: id.into(),
            citation: citation.into(),
            body: NodeBody::Verdict {
                outcome,
                reason: reason.into(),
            },
            location: None,
        }
    }

    pub fn is_question(&self) -> bool {
        matches!(self.body, NodeBody::Question { .. })
    }

    /// Question prompt, or the verdict reason for leaves.
    pub fn text(&self) -> &str {
        match &self.body {
            NodeBody::Question { prompt, .. } => prompt,
            NodeBody::Verdict { reason, .. } => reason,
        }
    }

    pub fn kind(&self) -> Option<&QuestionKind> {
        match &self.body {
            NodeBody::Question { kind, .. } => Some(kind),
            NodeBody::Verdict { .. } => None,
        }
    }

    pub fn branches(&self) -> Option<&Branches> {
        match &self.body {
            NodeBody::Question { branches, .. } => Some(branches),
            NodeBody::Verdict { .. } => None,
        }
    }

    pub fn outcome(&self) -> Option<Outcome> {
        match &self.body {
            NodeBody::Question { .. } => None,
            NodeBody::Verdict { outcome, .. } => Some(*outcome),
        }
    }
}

/// A parsed regulatory decision tree. The first node is the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rulebook {
    pub id: String,
    pub version: String,
    pub nodes: Vec<Node>,
}

/// Identifies a rulebook revision in verdicts and sessions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RulebookRef {
    pub id: String,
    pub version: String,
}

impl fmt::Display for RulebookRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.id, self.version)
    }
}

impl Rulebook {
    pub fn root(&self) -> Option<&Node> {
        self.nodes.first()
    }

    /// First node declared with `id`.
    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id.as_str() == id)
    }

    pub fn questions(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.is_question())
    }

    pub fn reference(&self) -> RulebookRef {
        RulebookRef {
            id: self.id.clone(),
            version: self.version.clone(),
        }
    }

    /// Distinct outcomes reachable as leaves, in declaration order.
    pub fn outcomes(&self) -> Vec<Outcome> {
        let mut out = Vec::new();
        for o in self.nodes.iter().filter_map(Node::outcome) {
            if !out.contains(&o) {
                out.push(o);
            }
        }
        out
    }
}
