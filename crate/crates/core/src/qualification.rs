//! Evaluation of an assessment case against a rulebook.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::AssessmentCase;
use crate::classification::{classify, ClassTrace, ClassifyError, RiskClass};
use crate::evidence::purposes_affirmed;
use crate::intention::derived_intention;
use crate::rulepack::{
    validate_rulebook, Answer, Node, NodeBody, NodeId, Outcome, QuestionKind, Rulebook,
    RulebookRef, ValidationIssue,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("rulebook is not evaluable: {}", .0.first().map(ToString::to_string).unwrap_or_default())]
    InvalidRulebook(Vec<ValidationIssue>),
    #[error("case has invalid evidence: {}", .0.first().map(|i| i.message.as_str()).unwrap_or_default())]
    InvalidEvidence(Vec<ValidationIssue>),
    #[error("no answer for question `{node}`")]
    MissingAnswer { node: NodeId },
    #[error("node `{node}` uses unregistered derived function `{function}`")]
    UnknownDerivedFunction { node: NodeId, function: String },
    #[error("classification failed: {0}")]
    Classification(#[from] ClassifyError),
}

/// A derived-node computation. `None` means the case does not determine the
/// answer and the assessor has to give one.
pub type DerivedFn = Arc<dyn Fn(&AssessmentCase) -> Option<bool> + Send + Sync>;

/// Named computations that answer `derived(name)` nodes.
#[derive(Clone)]
pub struct DerivedRegistry {
    fns: BTreeMap<String, DerivedFn>,
}

impl fmt::Debug for DerivedRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.fns.keys()).finish()
    }
}

impl Default for DerivedRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl DerivedRegistry {
    pub fn empty() -> Self {
        DerivedRegistry {
            fns: BTreeMap::new(),
        }
    }

    /// `intention`: intention established from evidence (always determined).
    /// `purpose_affirmed`: yes when evidence affirms any purpose, otherwise
    /// undetermined. `purpose_affirmed_mdd`: the same over the purposes the
    /// directive already listed.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("intention", |case| Some(derived_intention(case)));
        r.register("purpose_affirmed", |case| {
            (!purposes_affirmed(&case.evidence).is_empty()).then_some(true)
        });
        r.register("purpose_affirmed_mdd", |case| {
            purposes_affirmed(&case.evidence)
                .iter()
                .any(|t| t.in_directive_list())
                .then_some(true)
        });
        r
    }

    pub fn register(
        &mut self,
        name: impl Into<String>,
        f: impl Fn(&AssessmentCase) -> Option<bool> + Send + Sync + 'static,
    ) {
        self.fns.insert(name.into(), Arc::new(f));
    }

    pub fn get(&self, name: &str) -> Option<&DerivedFn> {
        self.fns.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.fns.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnsweredBy {
    Explicit,
    Derived,
    /// Explicit answer on a derived node, replacing the computed value.
    Override,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub node: NodeId,
    /// Question prompt, or the verdict reason on the final step.
    pub prompt: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub answer: Option<bool>,
    pub citation: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub answered_by: Option<AnsweredBy>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub outcome: Option<Outcome>,
}

/// Root-to-leaf reasoning path. The last step is the verdict leaf.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trace {
    pub steps: Vec<TraceStep>,
}

impl Trace {
    pub fn leaf(&self) -> Option<&TraceStep> {
        self.steps.last().filter(|s| s.outcome.is_some())
    }

    /// The last question on the path, i.e. the gate the case exited at.
    pub fn exit_question(&self) -> Option<&TraceStep> {
        self.steps.iter().rev().find(|s| s.outcome.is_none())
    }

    pub fn overrides(&self) -> impl Iterator<Item = &TraceStep> {
        self.steps
            .iter()
            .filter(|s| s.answered_by == Some(AnsweredBy::Override))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub qualification: Outcome,
    /// Last question on the path; the leaf itself for a leaf-only rulebook.
    pub exit_node: NodeId,
    pub leaf: NodeId,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub risk_class: Option<RiskClass>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub class_trace: Option<ClassTrace>,
    pub rulebook: RulebookRef,
    pub trace: Trace,
}

/// A question waiting for an answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub node: NodeId,
    pub prompt: String,
    pub citation: String,
    pub kind: QuestionKind,
    /// For derived nodes, the value computed from the case, if determined.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub computed: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NextStep {
    Question(Prompt),
    Verdict(Box<Verdict>),
}

/// Realized path so far plus what comes next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Progress {
    /// Answered question steps on the realized path, root first.
    pub path: Vec<TraceStep>,
    pub next: NextStep,
}

impl Progress {
    pub fn path_nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.path.iter().map(|s| &s.node)
    }
}

fn check_rulebook(rb: &Rulebook, registry: &DerivedRegistry) -> Result<(), EvalError> {
    let errors: Vec<_> = validate_rulebook(rb)
        .into_iter()
        .filter(ValidationIssue::is_error)
        .collect();
    if !errors.is_empty() {
        return Err(EvalError::InvalidRulebook(errors));
    }
    for node in rb.questions() {
        if let Some(f) = node.kind().and_then(QuestionKind::derived_function) {
            if registry.get(f).is_none() {
                return Err(EvalError::UnknownDerivedFunction {
                    node: node.id.clone(),
                    function: f.to_owned(),
                });
            }
        }
    }
    Ok(())
}

fn check_case(case: &AssessmentCase) -> Result<(), EvalError> {
    let issues: Vec<_> = case
        .validate()
        .into_iter()
        .filter(ValidationIssue::is_error)
        .collect();
    if issues.is_empty() {
        Ok(())
    } else {
        Err(EvalError::InvalidEvidence(issues))
    }
}

struct Resolved {
    answer: Option<(bool, AnsweredBy)>,
    computed: Option<bool>,
}

fn resolve(node: &Node, case: &AssessmentCase, registry: &DerivedRegistry) -> Resolved {
    let explicit = case.answer(node.id.as_str());
    match node.kind() {
        Some(QuestionKind::Derived(f)) => {
            // Registered: checked before walking.
            let computed = registry.get(f).and_then(|f| f(case));
            let answer = match (explicit, computed) {
                (Some(e), Some(_)) => Some((e, AnsweredBy::Override)),
                (Some(e), None) => Some((e, AnsweredBy::Explicit)),
                (None, Some(c)) => Some((c, AnsweredBy::Derived)),
                (None, None) => None,
            };
            Resolved { answer, computed }
        }
        _ => Resolved {
            answer: explicit.map(|e| (e, AnsweredBy::Explicit)),
            computed: None,
        },
    }
}

enum Stop<'r> {
    Leaf(&'r Node),
    Ask(&'r Node, Option<bool>),
}

/// Follow answers from the root. `hold` may stop at a derived node that has
/// no explicit answer even though its value is computable.
fn walk<'r>(
    case: &AssessmentCase,
    rb: &'r Rulebook,
    registry: &DerivedRegistry,
    hold: &dyn Fn(&Node) -> bool,
) -> (Vec<TraceStep>, Stop<'r>) {
    let mut steps = Vec::new();
    let mut node = rb.root().expect("checked rulebook has a root");
    loop {
        match &node.body {
            NodeBody::Verdict { .. } => return (steps, Stop::Leaf(node)),
            NodeBody::Question {
                prompt, branches, ..
            } => {
                let r = resolve(node, case, registry);
                let held = matches!(r.answer, Some((_, AnsweredBy::Derived))) && hold(node);
                let Some((answer, by)) = r.answer.filter(|_| !held) else {
                    return (steps, Stop::Ask(node, r.computed));
                };
                steps.push(TraceStep {
                    node: node.id.clone(),
                    prompt: prompt.clone(),
                    answer: Some(answer),
                    citation: node.citation.clone(),
                    answered_by: Some(by),
                    outcome: None,
                });
                let target = branches
                    .get(Answer::from(answer))
                    .expect("checked rulebook is exhaustive");
                node = rb
                    .node(target.as_str())
                    .expect("checked rulebook has no dangling targets");
            }
        }
    }
}

fn finish(
    case: &AssessmentCase,
    rb: &Rulebook,
    mut steps: Vec<TraceStep>,
    leaf: &Node,
) -> Result<Verdict, EvalError> {
    let NodeBody::Verdict { outcome, reason } = &leaf.body else {
        unreachable!("walk stops at verdict leaves")
    };
    let exit_node = steps
        .last()
        .map(|s| s.node.clone())
        .unwrap_or_else(|| leaf.id.clone());
    steps.push(TraceStep {
        node: leaf.id.clone(),
        prompt: reason.clone(),
        answer: None,
        citation: leaf.citation.clone(),
        answered_by: None,
        outcome: Some(*outcome),
    });

    let (risk_class, class_trace) = match (&case.classification_profile, outcome.is_regulated()) {
        (Some(profile), true) => {
            let (class, trace) = classify(profile, case.linked_device_class)?;
            (Some(class), Some(trace))
        }
        _ => (None, None),
    };

    Ok(Verdict {
        qualification: *outcome,
        exit_node,
        leaf: leaf.id.clone(),
        risk_class,
        class_trace,
        rulebook: rb.reference(),
        trace: Trace { steps },
    })
}

fn prompt_for(node: &Node, computed: Option<bool>) -> Prompt {
    Prompt {
        node: node.id.clone(),
        prompt: node.text().to_owned(),
        citation: node.citation.clone(),
        kind: node.kind().cloned().unwrap_or(QuestionKind::Boolean),
        computed,
    }
}

/// Walk the rulebook from its root, answering each question from the case,
/// and return the verdict with its trace.
///
/// Derived nodes take the registered computation unless the case answers
/// them explicitly. A question on the path with no answer is an error
/// naming that node; nothing is defaulted.
pub fn evaluate(
    case: &AssessmentCase,
    rb: &Rulebook,
    registry: &DerivedRegistry,
) -> Result<Verdict, EvalError> {
    check_rulebook(rb, registry)?;
    check_case(case)?;
    match walk(case, rb, registry, &|_| false) {
        (steps, Stop::Leaf(leaf)) => finish(case, rb, steps, leaf),
        (_, Stop::Ask(node, _)) => Err(EvalError::MissingAnswer {
            node: node.id.clone(),
        }),
    }
}

/// The first question on the realized path that still needs an answer, or
/// the verdict once the path reaches a leaf. Derived nodes whose value the
/// case determines are passed through.
pub fn next_question(
    case: &AssessmentCase,
    rb: &Rulebook,
    registry: &DerivedRegistry,
) -> Result<NextStep, EvalError> {
    Ok(progress(case, rb, registry, &BTreeSet::new(), false)?.next)
}

/// Interactive variant of [`next_question`] that also stops at derived nodes
/// not yet confirmed by the assessor, so a computed value is never acted on
/// unseen. `confirmed` lists derived nodes whose computed value was accepted.
pub fn progress(
    case: &AssessmentCase,
    rb: &Rulebook,
    registry: &DerivedRegistry,
    confirmed: &BTreeSet<NodeId>,
    confirm_derived: bool,
) -> Result<Progress, EvalError> {
    check_rulebook(rb, registry)?;
    check_case(case)?;
    let hold = |n: &Node| confirm_derived && !confirmed.contains(&n.id);
    let (path, stop) = walk(case, rb, registry, &hold);
    let next = match stop {
        Stop::Ask(node, computed) => NextStep::Question(prompt_for(node, computed)),
        Stop::Leaf(leaf) => NextStep::Verdict(Box::new(finish(case, rb, path.clone(), leaf)?)),
    };
    Ok(Progress { path, next })
}

/// Value a derived node would take from the case alone.
pub fn computed_value(
    node: &Node,
    case: &AssessmentCase,
    registry: &DerivedRegistry,
) -> Option<bool> {
    node.kind()
        .and_then(QuestionKind::derived_function)
        .and_then(|f| registry.get(f))
        .and_then(|f| f(case))
}
