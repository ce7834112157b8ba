//! Checks shared by the acceptance suite and the focused integration tests.
//! Each check returns a one-line summary on success and a reason on failure.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use mdsw_core::rulepack::{is_identifier, Branches, IssueCode};
use mdsw_core::session::{CaseHeader, SessionService, SessionStatus};
use mdsw_core::shipped;
use mdsw_core::{
    assess_channel, classify, compile_to_decision_table, evaluate, parse_rulebook,
    resolve_intention, serialize_rulebook, validate_rulebook, AssessmentCase,
    ClassificationProfile, DerivedRegistry, EvidenceChannel, EvidenceItem, NextStep, Node, NodeId,
    Outcome, Polarity, PurposeTag, QuestionKind, RiskClass, Rulebook, SourceKind,
};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

pub type Check = Result<String, String>;

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    pub rulebook: String,
    pub qualification: Outcome,
    pub exit_node: NodeId,
    #[serde(default)]
    pub risk_class: Option<RiskClass>,
}

pub struct CorpusCase {
    pub name: String,
    pub case: AssessmentCase,
    pub expected: Expected,
}

pub fn corpus() -> Vec<CorpusCase> {
    let dir = workspace_root().join("corpus");
    let mut names: Vec<String> = std::fs::read_dir(&dir)
        .expect("corpus directory")
        .filter_map(|e| {
            let name = e.ok()?.file_name().into_string().ok()?;
            name.strip_suffix(".case.json").map(str::to_owned)
        })
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|name| {
            let case = AssessmentCase::load(&dir.join(format!("{name}.case.json")))
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            let text = std::fs::read_to_string(dir.join(format!("{name}.expected.json")))
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            let expected = serde_json::from_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
            CorpusCase {
                name,
                case,
                expected,
            }
        })
        .collect()
}

pub fn rulebook(id: &str) -> Rulebook {
    match id {
        shipped::MDR_ID => shipped::mdr(),
        shipped::MEDDEV_ID => shipped::meddev(),
        other => panic!("no shipped rulebook `{other}`"),
    }
}

pub fn check_corpus() -> Check {
    let cases = corpus();
    if cases.len() < 6 {
        return Err(format!(
            "expected at least 6 corpus cases, found {}",
            cases.len()
        ));
    }
    let reg = DerivedRegistry::builtin();
    for c in &cases {
        let v = evaluate(&c.case, &rulebook(&c.expected.rulebook), &reg)
            .map_err(|e| format!("{}: {e}", c.name))?;
        let got = (v.qualification, &v.exit_node, v.risk_class);
        let want = (
            c.expected.qualification,
            &c.expected.exit_node,
            c.expected.risk_class,
        );
        if got != want {
            return Err(format!("{}: got {got:?}, expected {want:?}", c.name));
        }
    }
    Ok(format!(
        "{} corpus cases match their golden verdicts",
        cases.len()
    ))
}

// ---- classification ----

pub fn rule11_golden() -> Vec<(ClassificationProfile, String)> {
    let text = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/rule11.csv"),
    )
    .expect("rule11.csv");
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().expect("header").split(',').collect();
    assert_eq!(&header[..6], ClassificationProfile::FLAGS);
    assert_eq!(header[6], "class");
    lines
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            let bits = (0..6).fold(0u8, |acc, i| acc | (u8::from(cols[i] == "1") << i));
            (ClassificationProfile::from_bits(bits), cols[6].to_owned())
        })
        .collect()
}

fn class_or_error(p: &ClassificationProfile, linked: Option<RiskClass>) -> String {
    match classify(p, linked) {
        Ok((c, _)) => c.to_string(),
        Err(_) => "error".to_owned(),
    }
}

pub fn reference_classify_examples() -> Vec<(
    &'static str,
    ClassificationProfile,
    Option<RiskClass>,
    RiskClass,
)> {
    let p = |bits: &[usize]| {
        ClassificationProfile::from_bits(bits.iter().fold(0, |acc, b| acc | (1 << b)))
    };
    // bit order: informs, death, serious, monitors, immediate, drives
    vec![
        ("all flags false", p(&[]), None, RiskClass::I),
        ("informs only", p(&[0]), None, RiskClass::IIa),
        (
            "informs + serious deterioration",
            p(&[0, 2]),
            None,
            RiskClass::IIb,
        ),
        (
            "informs + death or irreversible",
            p(&[0, 1]),
            None,
            RiskClass::III,
        ),
        (
            "monitors + immediate harm",
            p(&[3, 4]),
            None,
            RiskClass::IIb,
        ),
        (
            "drives, linked IIb, intrinsic I",
            p(&[5]),
            Some(RiskClass::IIb),
            RiskClass::IIb,
        ),
    ]
}

pub fn check_rule11() -> Check {
    let golden = rule11_golden();
    if golden.len() != 64 {
        return Err(format!(
            "golden table has {} rows, expected 64",
            golden.len()
        ));
    }
    for (p, want) in &golden {
        let got = class_or_error(p, None);
        if &got != want {
            return Err(format!(
                "profile {:06b}: got {got}, golden {want}",
                p.bits()
            ));
        }
    }
    let examples = reference_classify_examples();
    for (name, p, linked, want) in &examples {
        match classify(p, *linked) {
            Ok((c, _)) if c == *want => {}
            other => return Err(format!("{name}: got {other:?}, expected {want}")),
        }
    }
    // monitoring-only is part of the fifth example
    if classify(&ClassificationProfile::from_bits(1 << 3), None).map(|r| r.0) != Ok(RiskClass::IIa)
    {
        return Err("monitors only: expected IIa".into());
    }
    let evaluations = check_monotonicity()?;
    Ok(format!(
        "64/64 golden profiles, {} documented examples, monotone over {evaluations} evaluations",
        examples.len()
    ))
}

/// Flipping any flag on never lowers the class; driving software is never
/// below its linked device. Returns the number of classifications run.
pub fn check_monotonicity() -> Result<usize, String> {
    let linked_options = [
        None,
        Some(RiskClass::I),
        Some(RiskClass::IIa),
        Some(RiskClass::IIb),
        Some(RiskClass::III),
    ];
    let mut results = BTreeMap::new();
    for bits in 0..64u8 {
        for linked in linked_options {
            let r = classify(&ClassificationProfile::from_bits(bits), linked)
                .ok()
                .map(|r| r.0);
            results.insert((bits, linked), r);
        }
    }
    for (&(bits, linked), &r) in &results {
        let p = ClassificationProfile::from_bits(bits);
        match (r, p.drives_or_influences_device, linked) {
            (None, true, None) => {}
            (None, ..) => return Err(format!("{bits:06b}/{linked:?}: unexpected error")),
            (Some(_), true, None) => {
                return Err(format!("{bits:06b}: drives without linked class accepted"))
            }
            (Some(c), true, Some(l)) if c < l => {
                return Err(format!("{bits:06b}: class {c} below linked {l}"))
            }
            _ => {}
        }
        for flag in 0..6 {
            if bits & (1 << flag) != 0 {
                continue;
            }
            if let (Some(lo), Some(Some(hi))) = (r, results.get(&(bits | (1 << flag), linked))) {
                if hi < &lo {
                    return Err(format!(
                        "setting {} on {bits:06b} lowers {lo} to {hi}",
                        ClassificationProfile::FLAGS[flag]
                    ));
                }
            }
        }
    }
    Ok(results.len())
}

// ---- oracle equivalence ----

/// Every full answer assignment, evaluated by walking the tree and by table
/// lookup. Returns (assignments, rows).
pub fn oracle_equivalence(rb: &Rulebook) -> Result<(usize, usize), String> {
    let table = compile_to_decision_table(rb).map_err(|e| e.to_string())?;
    let questions: Vec<NodeId> = rb.questions().map(|n| n.id.clone()).collect();
    if table.questions != questions {
        return Err("table columns differ from rulebook question order".into());
    }
    let reg = DerivedRegistry::builtin();
    let mut hit = BTreeSet::new();
    let n = questions.len();
    for mask in 0u64..(1 << n) {
        let mut case = AssessmentCase::new("oracle", "");
        for (i, q) in questions.iter().enumerate() {
            case.answers.insert(q.clone(), mask & (1 << i) != 0);
        }
        let v = evaluate(&case, rb, &reg).map_err(|e| format!("{}: {e}", rb.id))?;
        if table.matching_rows(&case.answers) != 1 {
            return Err(format!(
                "{}: assignment {mask:b} matches {} rows",
                rb.id,
                table.matching_rows(&case.answers)
            ));
        }
        let row = table.lookup(&case.answers).expect("one row");
        if (row.outcome, &row.leaf) != (v.qualification, &v.leaf) {
            return Err(format!(
                "{}: assignment {mask:b}: tree {} at {}, table {} at {}",
                rb.id, v.qualification, v.leaf, row.outcome, row.leaf
            ));
        }
        // The row's defined cells are exactly the questions the tree asked.
        let asked: BTreeSet<&NodeId> = v
            .trace
            .steps
            .iter()
            .filter(|s| s.outcome.is_none())
            .map(|s| &s.node)
            .collect();
        let defined: BTreeSet<&NodeId> = table
            .questions
            .iter()
            .zip(&row.cells)
            .filter(|(_, c)| c.is_some())
            .map(|(q, _)| q)
            .collect();
        if asked != defined {
            return Err(format!(
                "{}: assignment {mask:b}: path and row disagree",
                rb.id
            ));
        }
        hit.insert(row.leaf.clone().to_string() + &format!("{:?}", row.cells));
    }
    if hit.len() != table.rows.len() {
        return Err(format!(
            "{}: {} of {} rows reached",
            rb.id,
            hit.len(),
            table.rows.len()
        ));
    }
    Ok((1 << n, table.rows.len()))
}

pub fn check_oracle() -> Check {
    let mut parts = Vec::new();
    for rb in shipped::all() {
        let (assignments, rows) = oracle_equivalence(&rb)?;
        parts.push(format!(
            "{}: {assignments} assignments, {rows}/{rows} paths",
            rb.id
        ));
    }
    Ok(parts.join("; "))
}

// ---- intention ----

pub fn random_evidence(rng: &mut impl Rng) -> Vec<EvidenceItem> {
    let n = rng.random_range(0..8);
    (0..n)
        .map(|i| {
            let source = *SourceKind::ALL.choose(rng).unwrap();
            let polarity = *[Polarity::Affirms, Polarity::Denies, Polarity::Neutral]
                .choose(rng)
                .unwrap();
            let purposes: Vec<PurposeTag> = if polarity == Polarity::Affirms {
                let k = rng.random_range(1..4);
                PurposeTag::ALL.choose_multiple(rng, k).copied().collect()
            } else {
                Vec::new()
            };
            EvidenceItem::new(format!("e{i}"), source, polarity, purposes)
        })
        .collect()
}

fn resolve(evidence: &[EvidenceItem]) -> mdsw_core::IntentionResolution {
    resolve_intention(
        assess_channel(EvidenceChannel::Direct, evidence),
        assess_channel(EvidenceChannel::Indirect, evidence),
    )
}

pub fn check_intention_properties(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut established = 0;
    for n in 0..cases {
        let mut evidence = random_evidence(&mut rng);
        let r = resolve(&evidence);
        let any_affirms = evidence.iter().any(|e| e.polarity == Polarity::Affirms);
        if r.established != any_affirms {
            return Err(format!(
                "case {n}: established={} but affirming={any_affirms}",
                r.established
            ));
        }
        established += usize::from(r.established);

        // Partition: each non-neutral item lands in exactly one list, the
        // one for its own channel and polarity.
        for e in &evidence {
            let lists = [
                (
                    EvidenceChannel::Direct,
                    Polarity::Affirms,
                    &r.direct.supporting,
                ),
                (
                    EvidenceChannel::Direct,
                    Polarity::Denies,
                    &r.direct.contradicting,
                ),
                (
                    EvidenceChannel::Indirect,
                    Polarity::Affirms,
                    &r.indirect.supporting,
                ),
                (
                    EvidenceChannel::Indirect,
                    Polarity::Denies,
                    &r.indirect.contradicting,
                ),
            ];
            for (channel, polarity, list) in lists {
                let should = e.channel == channel && e.polarity == polarity;
                if list.contains(&e.id) != should {
                    return Err(format!("case {n}: item {} misplaced", e.id));
                }
            }
        }
        let listed = r.direct.supporting.len()
            + r.direct.contradicting.len()
            + r.indirect.supporting.len()
            + r.indirect.contradicting.len();
        let non_neutral = evidence
            .iter()
            .filter(|e| e.polarity != Polarity::Neutral)
            .count();
        if listed != non_neutral {
            return Err(format!(
                "case {n}: {listed} listed, {non_neutral} non-neutral"
            ));
        }

        evidence.shuffle(&mut rng);
        if resolve(&evidence) != r {
            return Err(format!("case {n}: result depends on evidence order"));
        }
    }
    Ok(format!(
        "{cases} random evidence sets ({established} established)"
    ))
}

// ---- DSL ----

const TEXT_CHARS: &[char] = &[
    'a', 'b', 'Z', '0', ' ', ' ', '"', '\\', '\n', '\t', '\r', '#', '{', '}', '(', '-', '>', 'é',
    '§', '\u{7}', '\u{1b}', '✓',
];
const WORDS: &[&str] = &[
    "node",
    "verdict",
    "yes",
    "no",
    "ask",
    "kind",
    "cite",
    "boolean",
    "derived",
    "outcome",
    "reason",
    "rulebook",
    "version",
    "q",
    "v_x",
    "a1",
    "intention",
];

fn random_text(rng: &mut impl Rng) -> String {
    let n = rng.random_range(0..12);
    (0..n).map(|_| *TEXT_CHARS.choose(rng).unwrap()).collect()
}

fn random_ident(rng: &mut impl Rng, used: &mut BTreeSet<String>) -> String {
    loop {
        let base = *WORDS.choose(rng).unwrap();
        let id = if rng.random_bool(0.3) {
            base.to_owned()
        } else {
            format!("{base}_{}", rng.random_range(0..100))
        };
        debug_assert!(is_identifier(&id));
        if used.insert(id.clone()) {
            return id;
        }
    }
}

/// A random, not necessarily valid, rulebook: targets may dangle or loop and
/// branches may be missing. Only structure matters for round-tripping.
pub fn random_rulebook(rng: &mut impl Rng) -> Rulebook {
    let mut used = BTreeSet::new();
    let n_q = rng.random_range(0..6);
    let n_v = rng.random_range(1..5);
    let ids: Vec<String> = (0..n_q + n_v)
        .map(|_| random_ident(rng, &mut used))
        .collect();
    let target = |rng: &mut ChaCha8Rng| -> Option<NodeId> {
        rng.random_bool(0.9).then(|| {
            if rng.random_bool(0.1) {
                NodeId::new("dangling_target")
            } else {
                NodeId::new(ids.choose(rng).unwrap().clone())
            }
        })
    };
    let mut child = ChaCha8Rng::seed_from_u64(rng.random());
    let mut nodes = Vec::new();
    for id in &ids[..n_q] {
        let kind = if child.random_bool(0.3) {
            QuestionKind::Derived(random_ident(&mut child, &mut BTreeSet::new()))
        } else {
            QuestionKind::Boolean
        };
        let branches = Branches {
            yes: target(&mut child),
            no: target(&mut child),
        };
        nodes.push(Node::question(
            id.as_str(),
            random_text(&mut child),
            kind,
            random_text(&mut child),
            branches,
        ));
    }
    for id in &ids[n_q..] {
        nodes.push(Node::verdict(
            id.as_str(),
            *Outcome::ALL.choose(&mut child).unwrap(),
            random_text(&mut child),
            random_text(&mut child),
        ));
    }
    nodes.shuffle(&mut child);
    Rulebook {
        id: random_text(&mut child),
        version: random_text(&mut child),
        nodes,
    }
}

pub fn round_trips(rb: &Rulebook) -> Result<(), String> {
    let text = serialize_rulebook(rb);
    let back = parse_rulebook(&text).map_err(|e| format!("{e} in\n{text}"))?;
    if &back != rb {
        return Err(format!("structure changed through\n{text}"));
    }
    if serialize_rulebook(&back) != text {
        return Err("serialization is not a fixed point".into());
    }
    Ok(())
}

pub fn validator_fixtures() -> Vec<(&'static str, IssueCode)> {
    vec![
        ("cycle.rp", IssueCode::Cycle),
        ("dangling.rp", IssueCode::DanglingTarget),
        ("unreachable.rp", IssueCode::UnreachableNode),
        ("non_exhaustive.rp", IssueCode::NonExhaustive),
        ("duplicate_id.rp", IssueCode::DuplicateId),
    ]
}

pub fn check_dsl(random: usize, seed: u64) -> Check {
    for rb in shipped::all() {
        round_trips(&rb).map_err(|e| format!("{}: {e}", rb.id))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 0..random {
        round_trips(&random_rulebook(&mut rng)).map_err(|e| format!("random rulebook {n}: {e}"))?;
    }
    let fixtures = validator_fixtures();
    for (file, code) in &fixtures {
        let src = std::fs::read_to_string(fixture(file)).map_err(|e| format!("{file}: {e}"))?;
        let rb = parse_rulebook(&src).map_err(|e| format!("{file}: {e}"))?;
        let codes: BTreeSet<IssueCode> = validate_rulebook(&rb).iter().map(|i| i.code).collect();
        if codes != BTreeSet::from([*code]) {
            return Err(format!("{file}: expected only {code}, got {codes:?}"));
        }
    }
    Ok(format!(
        "2 shipped + {random} random rulebooks round-trip; {} validator fixtures",
        fixtures.len()
    ))
}

// ---- sessions ----

/// Drive a corpus case through the session service the way an assessor
/// would: attach all evidence, then answer each prompt from the case file,
/// accepting computed values where the file is silent.
pub fn drive_session(svc: &SessionService, c: &CorpusCase) -> Result<String, String> {
    let header = CaseHeader {
        name: c.case.name.clone(),
        description: c.case.description.clone(),
        classification_profile: c.case.classification_profile,
        linked_device_class: c.case.linked_device_class,
    };
    let err = |e: mdsw_core::session::SessionError| format!("{}: {e}", c.name);
    let view = svc
        .create_session(&c.expected.rulebook, header)
        .map_err(err)?;
    let id = view.session.id;
    for item in &c.case.evidence {
        svc.attach_evidence(&id, item.clone()).map_err(err)?;
    }
    for _ in 0..64 {
        let view = svc.get_session(&id).map_err(err)?;
        match view.next {
            NextStep::Verdict(_) => {
                if view.session.status != SessionStatus::Finalized {
                    return Err(format!("{}: verdict reached but session open", c.name));
                }
                return Ok(id);
            }
            NextStep::Question(p) => {
                let answer = c
                    .case
                    .answer(p.node.as_str())
                    .or(p.computed)
                    .ok_or_else(|| format!("{}: no answer for {}", c.name, p.node))?;
                svc.submit_answer(&id, p.node.as_str(), answer)
                    .map_err(err)?;
            }
        }
    }
    Err(format!("{}: session did not finish", c.name))
}

pub fn check_session_replay() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let svc = SessionService::open(dir.path()).map_err(|e| e.to_string())?;
    let reg = DerivedRegistry::builtin();
    let cases = corpus();
    for c in &cases {
        let id = drive_session(&svc, c)?;
        let (stored, again) = svc.replay(&id).map_err(|e| e.to_string())?;
        let a = serde_json::to_string(&stored).unwrap();
        let b = serde_json::to_string(&again).unwrap();
        if a != b {
            return Err(format!("{}: replayed verdict differs", c.name));
        }
        let batch =
            evaluate(&c.case, &rulebook(&c.expected.rulebook), &reg).map_err(|e| e.to_string())?;
        if stored != batch {
            return Err(format!(
                "{}: session verdict differs from batch evaluation",
                c.name
            ));
        }
    }
    // The store alone is enough: a second service sees the same verdicts.
    let svc2 = SessionService::open(dir.path()).map_err(|e| e.to_string())?;
    let ids = svc2.store().ids().map_err(|e| e.to_string())?;
    if ids.len() != cases.len() {
        return Err(format!(
            "{} sessions stored, expected {}",
            ids.len(),
            cases.len()
        ));
    }
    for id in &ids {
        svc2.get_verdict(id).map_err(|e| e.to_string())?;
    }
    check_reanswer_invalidation(&svc)?;
    Ok(format!(
        "{} corpus cases replay byte-identically; re-answer invalidates downstream",
        cases.len()
    ))
}

/// Re-answering a node on the path leaves no stored answer after it.
pub fn check_reanswer_invalidation(svc: &SessionService) -> Result<(), String> {
    let c = corpus()
        .into_iter()
        .find(|c| c.name.starts_with("c329"))
        .ok_or("C-329/16 corpus case missing")?;
    let e = |e: mdsw_core::session::SessionError| e.to_string();
    let id = svc
        .create_session(shipped::MDR_ID, CaseHeader::default())
        .map_err(e)?
        .session
        .id;
    for item in &c.case.evidence {
        svc.attach_evidence(&id, item.clone()).map_err(e)?;
    }
    let script = [
        ("q_is_software", true),
        ("q_intention", true),
        ("q_generic_unmodified", false),
        ("q_storage_only", false),
        ("q_accessory_intent", false),
    ];
    for (node, answer) in script {
        svc.submit_answer(&id, node, answer).map_err(e)?;
    }
    let view = svc
        .submit_answer(&id, "q_generic_unmodified", false)
        .map_err(e)?;
    let after = [
        "q_storage_only",
        "q_accessory_intent",
        "q_human_use",
        "q_purpose_fulfilled",
    ];
    for n in after {
        if view.session.case.answers.contains_key(n) || view.session.confirmed.contains(n) {
            return Err(format!(
                "answer for {n} survived re-answer of q_generic_unmodified"
            ));
        }
    }
    match &view.next {
        NextStep::Question(p) if p.node.as_str() == "q_storage_only" => {}
        other => {
            return Err(format!(
                "after re-answer expected q_storage_only, got {other:?}"
            ))
        }
    }
    // What-if: the other reading of the same node flips the verdict.
    let view = svc
        .submit_answer(&id, "q_generic_unmodified", true)
        .map_err(e)?;
    match view.session.verdict {
        Some(v)
            if v.qualification == Outcome::NotMd
                && v.exit_node.as_str() == "q_generic_unmodified" =>
        {
            Ok(())
        }
        other => Err(format!("what-if re-answer gave {other:?}")),
    }
}
