use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    validate_rulebook, Answer, NodeBody, NodeId, Outcome, Rulebook, RulebookRef, ValidationIssue,
};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("rulebook has {} validation error(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<ValidationIssue>),
}

/// One root-to-leaf path. `cells` is aligned with [`DecisionTable::questions`];
/// `None` marks a question the path never visits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub cells: Vec<Option<bool>>,
    pub leaf: NodeId,
    pub outcome: Outcome,
}

/// Exhaustive path enumeration of a rulebook.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionTable {
    pub rulebook: RulebookRef,
    /// Question node ids in rulebook order.
    pub questions: Vec<NodeId>,
    pub rows: Vec<TableRow>,
}

impl DecisionTable {
    fn row_matches(&self, row: &TableRow, answers: &BTreeMap<NodeId, bool>) -> bool {
        row.cells
            .iter()
            .zip(&self.questions)
            .all(|(cell, q)| match cell {
                None => true,
                Some(want) => answers.get(q) == Some(want),
            })
    }

    /// The row selected by a full answer assignment. For a table compiled
    /// from a valid rulebook exactly one row matches any full assignment.
    pub fn lookup(&self, answers: &BTreeMap<NodeId, bool>) -> Option<&TableRow> {
        self.rows.iter().find(|r| self.row_matches(r, answers))
    }

    /// Number of rows matching `answers`; 1 for every full assignment.
    pub fn matching_rows(&self, answers: &BTreeMap<NodeId, bool>) -> usize {
        self.rows
            .iter()
            .filter(|r| self.row_matches(r, answers))
            .count()
    }

    /// CSV with a header of question ids followed by `outcome,leaf`.
    /// Cells are `yes`, `no`, or `-` for questions off the path.
    pub fn to_csv(&self) -> String {
        // Every field is an identifier, an outcome name or a cell marker, so
        // no quoting is ever needed.
        let mut out = String::new();
        let header: Vec<&str> = self
            .questions
            .iter()
            .map(NodeId::as_str)
            .chain(["outcome", "leaf"])
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut fields: Vec<&str> = row
                .cells
                .iter()
                .map(|c| match c {
                    Some(true) => "yes",
                    Some(false) => "no",
                    None => "-",
                })
                .collect();
            fields.push(row.outcome.as_str());
            fields.push(row.leaf.as_str());
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// Enumerate every root-to-leaf path depth first, `yes` before `no`.
/// Questions not visited on a path are left unconstrained.
pub fn compile_to_decision_table(rb: &Rulebook) -> Result<DecisionTable, TableError> {
    let errors: Vec<ValidationIssue> = validate_rulebook(rb)
        .into_iter()
        .filter(ValidationIssue::is_error)
        .collect();
    if !errors.is_empty() {
        return Err(TableError::Invalid(errors));
    }

    let questions: Vec<NodeId> = rb.questions().map(|n| n.id.clone()).collect();
    let column: HashMap<&str, usize> = questions
        .iter()
        .enumerate()
        .map(|(i, q)| (q.as_str(), i))
        .collect();

    let mut rows = Vec::new();
    let mut cells = vec![None; questions.len()];
    let root = rb.root().expect("validated rulebook has a root");
    walk(rb, &column, &root.id, &mut cells, &mut rows);

    Ok(DecisionTable {
        rulebook: rb.reference(),
        questions,
        rows,
    })
}

fn walk(
    rb: &Rulebook,
    column: &HashMap<&str, usize>,
    at: &NodeId,
    cells: &mut Vec<Option<bool>>,
    rows: &mut Vec<TableRow>,
) {
    let node = rb.node(at.as_str()).expect("validated target");
    match &node.body {
        NodeBody::Verdict { outcome, .. } => rows.push(TableRow {
            cells: cells.clone(),
            leaf: node.id.clone(),
            outcome: *outcome,
        }),
        NodeBody::Question { branches, .. } => {
            let col = column[node.id.as_str()];
            for label in [Answer::Yes, Answer::No] {
                let target = branches.get(label).expect("validated branches");
                cells[col] = Some(label.into());
                walk(rb, column, target, cells, rows);
            }
            cells[col] = None;
        }
    }
}
