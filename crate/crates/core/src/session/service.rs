use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::{Arc, Mutex, PoisonError};

use chrono::Utc;

use super::store::SessionStore;
use super::{CaseHeader, EvidenceUpdate, Session, SessionError, SessionStatus, SessionView};
use crate::case::AssessmentCase;
use crate::evidence::{validate_evidence_set, EvidenceItem};
use crate::intention::{resolve_case, IntentionResolution};
use crate::qualification::{
    computed_value, evaluate, progress, DerivedRegistry, NextStep, Progress, Verdict,
};
use crate::report::{render_report, Report, ReportFormat};
use crate::rulepack::{NodeId, Rulebook, RulebookRef};
use crate::shipped::Catalog;

/// Session operations over a [`SessionStore`].
///
/// Mutations of one session are serialized by a per-session lock; different
/// sessions proceed in parallel. Every mutation is persisted before it
/// returns, and nothing is cached, so a restarted service sees every session.
pub struct SessionService {
    store: SessionStore,
    catalog: Catalog,
    registry: DerivedRegistry,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl SessionService {
    pub fn new(store: SessionStore, catalog: Catalog, registry: DerivedRegistry) -> Self {
        SessionService {
            store,
            catalog,
            registry,
            locks: Mutex::new(HashMap::new()),
        }
    }

    /// Shipped rulebooks plus any in `<data-dir>/rulepacks/`, built-in
    /// derived functions.
    pub fn open(data_dir: &Path) -> Result<Self, SessionError> {
        let store = SessionStore::open(data_dir)?;
        let (catalog, errors) = Catalog::shipped_with_dir(&data_dir.join("rulepacks"));
        if let Some(e) = errors.first() {
            return Err(SessionError::Storage(format!("cannot load rulepack {e}")));
        }
        Ok(Self::new(store, catalog, DerivedRegistry::builtin()))
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    pub fn rulebooks(&self) -> Vec<RulebookRef> {
        self.catalog.list()
    }

    fn lock(&self, id: &str) -> Arc<Mutex<()>> {
        self.locks
            .lock()
            .unwrap_or_else(PoisonError::into_inner)
            .entry(id.to_owned())
            .or_default()
            .clone()
    }

    fn rulebook(&self, session: &Session) -> Result<&Rulebook, SessionError> {
        self.catalog
            .get(&session.rulebook.id)
            .ok_or_else(|| SessionError::UnknownRulebook(session.rulebook.id.clone()))
    }

    fn progress(&self, session: &Session, rb: &Rulebook) -> Result<Progress, SessionError> {
        Ok(progress(
            &session.case,
            rb,
            &self.registry,
            &session.confirmed,
            true,
        )?)
    }

    fn view(&self, session: Session) -> Result<SessionView, SessionError> {
        let next = match &session.verdict {
            Some(v) => NextStep::Verdict(Box::new(v.clone())),
            None => self.progress(&session, self.rulebook(&session)?)?.next,
        };
        let intention = resolve_case(&session.case);
        Ok(SessionView {
            session,
            next,
            intention,
        })
    }

    pub fn create_session(
        &self,
        rulebook_id: &str,
        header: CaseHeader,
    ) -> Result<SessionView, SessionError> {
        let rb = self
            .catalog
            .get(rulebook_id)
            .ok_or_else(|| SessionError::UnknownRulebook(rulebook_id.to_owned()))?;
        if header
            .classification_profile
            .is_some_and(|p| p.drives_or_influences_device)
            && header.linked_device_class.is_none()
        {
            return Err(SessionError::InvalidRequest(
                "drives_or_influences_device requires linked_device_class".to_owned(),
            ));
        }

        let id = format!("{:032x}", rand::random::<u128>());
        let now = Utc::now();
        let case = AssessmentCase {
            id: id.clone(),
            name: header.name,
            description: header.description,
            classification_profile: header.classification_profile,
            linked_device_class: header.linked_device_class,
            ..AssessmentCase::default()
        };
        let session = Session {
            id,
            rulebook: rb.reference(),
            case,
            confirmed: BTreeSet::new(),
            status: SessionStatus::Open,
            created: now,
            updated: now,
            verdict: None,
        };
        self.store.save(&session)?;
        self.view(session)
    }

    pub fn get_session(&self, id: &str) -> Result<SessionView, SessionError> {
        self.view(self.store.load(id)?)
    }

    /// Record an answer to the current question, or re-answer a question
    /// already answered on the current path. Re-answering discards every
    /// answer after that question. Reaching a verdict finalizes the session.
    pub fn submit_answer(
        &self,
        id: &str,
        node_id: &str,
        answer: bool,
    ) -> Result<SessionView, SessionError> {
        let lock = self.lock(id);
        let _guard = lock.lock().unwrap_or_else(PoisonError::into_inner);

        let mut session = self.store.load(id)?;
        if session.status == SessionStatus::Finalized {
            return Err(SessionError::Finalized(id.to_owned()));
        }
        let rb = self.rulebook(&session)?;
        let node = rb
            .node(node_id)
            .filter(|n| n.is_question())
            .ok_or_else(|| SessionError::UnknownNode(node_id.to_owned()))?;

        let before = self.progress(&session, rb)?;
        let on_path: Vec<&NodeId> = before.path_nodes().collect();
        let position = match &before.next {
            NextStep::Question(p) if p.node == node.id => on_path.len(),
            _ => on_path
                .iter()
                .position(|n| **n == node.id)
                .ok_or_else(|| SessionError::NotOnPath(node_id.to_owned()))?,
        };

        let keep: BTreeSet<NodeId> = on_path[..position].iter().map(|n| (*n).clone()).collect();
        session.case.answers.retain(|k, _| keep.contains(k));
        session.confirmed.retain(|k| keep.contains(k));

        // Accepting a computed value is a confirmation; contradicting it is
        // an override.
        if computed_value(node, &session.case, &self.registry) == Some(answer) {
            session.confirmed.insert(node.id.clone());
        } else {
            session.case.answers.insert(node.id.clone(), answer);
        }

        let after = self.progress(&session, rb)?;
        if let NextStep::Verdict(_) = after.next {
            let verdict = evaluate(&session.case, rb, &self.registry)?;
            session.verdict = Some(verdict);
            session.status = SessionStatus::Finalized;
        }
        session.updated = Utc::now();
        self.store.save(&session)?;
        self.view(session)
    }

    /// Add an evidence item and recompute intention. If a computed answer
    /// the assessor had confirmed changes, that confirmation and everything
    /// after it on the path is discarded.
    pub fn attach_evidence(
        &self,
        id: &str,
        item: EvidenceItem,
    ) -> Result<EvidenceUpdate, SessionError> {
        let lock = self.lock(id);
        let _guard = lock.lock().unwrap_or_else(PoisonError::into_inner);

        let mut session = self.store.load(id)?;
        if session.status == SessionStatus::Finalized {
            return Err(SessionError::Finalized(id.to_owned()));
        }
        let issues = validate_evidence_set(session.case.evidence.iter().chain([&item]));
        if !issues.is_empty() {
            return Err(SessionError::InvalidEvidence(issues));
        }
        let rb = self.rulebook(&session)?;
        let before = self.progress(&session, rb)?;
        let old_case = session.case.clone();
        session.case.evidence.push(item);

        let mut invalidated = Vec::new();
        let path: Vec<&NodeId> = before.path_nodes().collect();
        let changed = path.iter().position(|n| {
            session.confirmed.contains(*n)
                && rb.node(n.as_str()).is_some_and(|node| {
                    computed_value(node, &old_case, &self.registry)
                        != computed_value(node, &session.case, &self.registry)
                })
        });
        if let Some(k) = changed {
            let keep: BTreeSet<NodeId> = path[..k].iter().map(|n| (*n).clone()).collect();
            for n in &path[k..] {
                if session.case.answers.contains_key(*n) || session.confirmed.contains(*n) {
                    invalidated.push((*n).clone());
                }
            }
            session.case.answers.retain(|k, _| keep.contains(k));
            session.confirmed.retain(|k| keep.contains(k));
        }

        session.updated = Utc::now();
        self.store.save(&session)?;
        let next = self.progress(&session, rb)?.next;
        Ok(EvidenceUpdate {
            intention: resolve_case(&session.case),
            invalidated,
            next,
        })
    }

    pub fn intention(&self, id: &str) -> Result<IntentionResolution, SessionError> {
        Ok(resolve_case(&self.store.load(id)?.case))
    }

    pub fn get_verdict(&self, id: &str) -> Result<Verdict, SessionError> {
        self.store
            .load(id)?
            .verdict
            .ok_or_else(|| SessionError::NotFinalized(id.to_owned()))
    }

    pub fn report(&self, id: &str) -> Result<Report, SessionError> {
        let session = self.store.load(id)?;
        let verdict = session
            .verdict
            .as_ref()
            .ok_or_else(|| SessionError::NotFinalized(id.to_owned()))?;
        Ok(Report::new(&session.case, verdict))
    }

    pub fn render_report(&self, id: &str, format: ReportFormat) -> Result<String, SessionError> {
        Ok(render_report(&self.report(id)?, format))
    }

    /// Re-evaluate a finalized session's stored case. Returns the stored and
    /// the recomputed verdict.
    pub fn replay(&self, id: &str) -> Result<(Verdict, Verdict), SessionError> {
        let session = self.store.load(id)?;
        let stored = session
            .verdict
            .clone()
            .ok_or_else(|| SessionError::NotFinalized(id.to_owned()))?;
        let again = evaluate(&session.case, self.rulebook(&session)?, &self.registry)?;
        Ok((stored, again))
    }
}
