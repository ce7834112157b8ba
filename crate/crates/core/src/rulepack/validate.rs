use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Answer, Location, NodeBody, NodeId, QuestionKind, Rulebook};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IssueCode {
    EmptyRulebook,
    DuplicateId,
    InvalidIdentifier,
    DanglingTarget,
    Cycle,
    NonExhaustive,
    UnnamedDerived,
    UnreachableNode,
    // Evidence items.
    ChannelSourceMismatch,
    MissingPurpose,
    EmptyEvidenceId,
    DuplicateEvidenceId,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::EmptyRulebook => "empty-rulebook",
            IssueCode::DuplicateId => "duplicate-id",
            IssueCode::InvalidIdentifier => "invalid-identifier",
            IssueCode::DanglingTarget => "dangling-target",
            IssueCode::Cycle => "cycle",
            IssueCode::NonExhaustive => "non-exhaustive",
            IssueCode::UnnamedDerived => "unnamed-derived",
            IssueCode::UnreachableNode => "unreachable-node",
            IssueCode::ChannelSourceMismatch => "channel-source-mismatch",
            IssueCode::MissingPurpose => "missing-purpose",
            IssueCode::EmptyEvidenceId => "empty-evidence-id",
            IssueCode::DuplicateEvidenceId => "duplicate-evidence-id",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A problem found by a validator. Errors block evaluation; warnings do not.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub code: IssueCode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeId>,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<Location>,
}

impl ValidationIssue {
    pub fn error(code: IssueCode, message: impl Into<String>) -> Self {
        ValidationIssue {
            severity: Severity::Error,
            code,
            node: None,
            message: message.into(),
            location: None,
        }
    }

    pub fn warning(code: IssueCode, message: impl Into<String>) -> Self {
        ValidationIssue {
            severity: Severity::Warning,
            ..ValidationIssue::error(code, message)
        }
    }

    fn at(mut self, node: &NodeId, location: Option<Location>) -> Self {
        self.node = Some(node.clone());
        self.location = location;
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        if let Some(loc) = self.location {
            write!(f, "{loc}: ")?;
        }
        write!(f, "{sev}[{}]: {}", self.code, self.message)
    }
}

/// `[a-z][a-z0-9_]*`
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some('a'..='z'))
        && chars.all(|c| matches!(c, 'a'..='z' | '0'..='9' | '_'))
}

/// Check that a rulebook is evaluable: unique ids, no dangling targets, no
/// cycles, exhaustive yes/no branches, well-formed derived function names.
/// Nodes unreachable from the root are reported as warnings.
///
/// Issues come out grouped by check, each group in declaration order.
pub fn validate_rulebook(rb: &Rulebook) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    if rb.nodes.is_empty() {
        issues.push(ValidationIssue::error(
            IssueCode::EmptyRulebook,
            "rulebook declares no nodes",
        ));
        return issues;
    }

    // First declaration of each id wins for graph checks.
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, node) in rb.nodes.iter().enumerate() {
        if !is_identifier(node.id.as_str()) {
            issues.push(
                ValidationIssue::error(
                    IssueCode::InvalidIdentifier,
                    format!("`{}` is not a valid node identifier", node.id),
                )
                .at(&node.id, node.location),
            );
        }
        if let Entry::Vacant(slot) = index.entry(node.id.as_str()) {
            slot.insert(i);
        } else {
            issues.push(
                ValidationIssue::error(
                    IssueCode::DuplicateId,
                    format!("node `{}` is declared more than once", node.id),
                )
                .at(&node.id, node.location),
            );
        }
    }

    for node in &rb.nodes {
        let NodeBody::Question { kind, branches, .. } = &node.body else {
            continue;
        };
        for label in [Answer::Yes, Answer::No] {
            match branches.get(label) {
                None => issues.push(
                    ValidationIssue::error(
                        IssueCode::NonExhaustive,
                        format!("node `{}` has no `{}` branch", node.id, label.as_str()),
                    )
                    .at(&node.id, node.location),
                ),
                Some(t) if !index.contains_key(t.as_str()) => issues.push(
                    ValidationIssue::error(
                        IssueCode::DanglingTarget,
                        format!(
                            "`{}` branch of node `{}` targets undeclared node `{t}`",
                            label.as_str(),
                            node.id
                        ),
                    )
                    .at(&node.id, node.location),
                ),
                Some(_) => {}
            }
        }
        if let QuestionKind::Derived(f) = kind {
            if !is_identifier(f) {
                issues.push(
                    ValidationIssue::error(
                        IssueCode::UnnamedDerived,
                        format!(
                            "derived node `{}` must name its function with an identifier, got `{f}`",
                            node.id
                        ),
                    )
                    .at(&node.id, node.location),
                );
            }
        }
    }

    let successors = |i: usize| -> Vec<usize> {
        rb.nodes[i]
            .branches()
            .map(|b| {
                b.iter()
                    .filter_map(|(_, t)| index.get(t.as_str()).copied())
                    .collect()
            })
            .unwrap_or_default()
    };

    for cycle in find_cycles(rb.nodes.len(), &successors) {
        let names: Vec<&str> = cycle.iter().map(|&i| rb.nodes[i].id.as_str()).collect();
        let first = &rb.nodes[cycle[0]];
        issues.push(
            ValidationIssue::error(
                IssueCode::Cycle,
                format!("cycle: {} -> {}", names.join(" -> "), names[0]),
            )
            .at(&first.id, first.location),
        );
    }

    let mut reached = vec![false; rb.nodes.len()];
    let mut stack = vec![0usize];
    reached[0] = true;
    while let Some(i) = stack.pop() {
        for j in successors(i) {
            if !reached[j] {
                reached[j] = true;
                stack.push(j);
            }
        }
    }
    for (i, node) in rb.nodes.iter().enumerate() {
        // Duplicates are already errors; do not report them twice.
        if !reached[i] && index.get(node.id.as_str()) == Some(&i) {
            issues.push(
                ValidationIssue::warning(
                    IssueCode::UnreachableNode,
                    format!("node `{}` is not reachable from the root", node.id),
                )
                .at(&node.id, node.location),
            );
        }
    }

    issues
}

/// Elementary cycles found by depth-first search, one per back edge,
/// deduplicated and rotated to start at their lowest index.
fn find_cycles(n: usize, successors: &dyn Fn(usize) -> Vec<usize>) -> Vec<Vec<usize>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }

    let mut mark = vec![Mark::New; n];
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut cycles = Vec::new();

    for start in 0..n {
        if mark[start] != Mark::New {
            continue;
        }
        // (node, successors, next successor position)
        let mut path: Vec<usize> = vec![start];
        let mut frames: Vec<(Vec<usize>, usize)> = vec![(successors(start), 0)];
        mark[start] = Mark::Active;

        while let Some((succ, pos)) = frames.last_mut() {
            if *pos == succ.len() {
                let done = path.pop().unwrap();
                mark[done] = Mark::Done;
                frames.pop();
                continue;
            }
            let next = succ[*pos];
            *pos += 1;
            match mark[next] {
                Mark::New => {
                    mark[next] = Mark::Active;
                    path.push(next);
                    frames.push((successors(next), 0));
                }
                Mark::Active => {
                    let from = path.iter().position(|&p| p == next).unwrap();
                    let mut cycle = path[from..].to_vec();
                    let min = cycle
                        .iter()
                        .enumerate()
                        .min_by_key(|(_, &v)| v)
                        .map(|(k, _)| k)
                        .unwrap();
                    cycle.rotate_left(min);
                    if seen.insert(cycle.clone()) {
                        cycles.push(cycle);
                    }
                }
                Mark::Done => {}
            }
        }
    }
    cycles
}

/// Issue codes present, for concise assertions.
#[cfg(test)]
pub(crate) fn codes(issues: &[ValidationIssue]) -> std::collections::BTreeSet<IssueCode> {
    issues.iter().map(|i| i.code).collect()
}
