//! Terminal version of the assessment wizard. Runs the same question loop as
//! the session service, entirely in memory.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use anyhow::{bail, Result};
use mdsw_core::evidence::validate_evidence_set;
use mdsw_core::intention::resolve_case;
use mdsw_core::qualification::{computed_value, progress};
use mdsw_core::{
    evaluate, AssessmentCase, ClassificationProfile, DerivedRegistry, EvidenceItem, NextStep,
    NodeId, Report, RiskClass, Rulebook,
};

use crate::read_line;

const HELP: &str = "\
answers:   yes | y | no | n   (an empty line accepts a computed value)
evidence:  evidence {\"id\": ..., \"channel\": ..., \"source\": ..., \"polarity\": ..., \"purposes\": [...]}
re-answer: back <node>   (forgets every answer from that node on)
           help | quit";

enum Input {
    Answer(bool),
    Accept,
    Evidence(String),
    Back(String),
    Help,
    Quit,
    Unknown,
}

fn parse_input(line: &str) -> Input {
    let (word, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
    match word.to_ascii_lowercase().as_str() {
        "y" | "yes" => Input::Answer(true),
        "n" | "no" => Input::Answer(false),
        "" => Input::Accept,
        "evidence" => Input::Evidence(rest.trim().to_owned()),
        "back" => Input::Back(rest.trim().to_owned()),
        "help" | "?" => Input::Help,
        "quit" | "exit" => Input::Quit,
        _ => Input::Unknown,
    }
}

struct Wizard<'a> {
    rb: &'a Rulebook,
    registry: DerivedRegistry,
    case: AssessmentCase,
    confirmed: BTreeSet<NodeId>,
}

impl Wizard<'_> {
    fn path(&self) -> Result<Vec<NodeId>> {
        let p = progress(&self.case, self.rb, &self.registry, &self.confirmed, true)?;
        Ok(p.path_nodes().cloned().collect())
    }

    // Forget answers and confirmations from path position `k` on.
    fn truncate(&mut self, path: &[NodeId], k: usize) {
        let keep: BTreeSet<&NodeId> = path[..k].iter().collect();
        self.case.answers.retain(|n, _| keep.contains(n));
        self.confirmed.retain(|n| keep.contains(n));
    }

    fn add_evidence(&mut self, item: EvidenceItem) -> Result<()> {
        let issues = validate_evidence_set(self.case.evidence.iter().chain([&item]));
        if let Some(i) = issues.first() {
            bail!("{}", i.message);
        }
        let path = self.path()?;
        let before = self.case.clone();
        self.case.evidence.push(item);
        let changed = path.iter().position(|n| {
            self.confirmed.contains(n)
                && self.rb.node(n.as_str()).is_some_and(|node| {
                    computed_value(node, &before, &self.registry)
                        != computed_value(node, &self.case, &self.registry)
                })
        });
        if let Some(k) = changed {
            self.truncate(&path, k);
        }
        Ok(())
    }
}

fn ask_bool(input: &mut dyn BufRead, out: &mut dyn Write, question: &str) -> Result<bool> {
    loop {
        write!(out, "{question} [y/n] ")?;
        out.flush()?;
        let Some(line) = read_line(input)? else {
            bail!("wizard interrupted; nothing was written");
        };
        match parse_input(&line) {
            Input::Answer(a) => return Ok(a),
            Input::Quit => bail!("wizard stopped; nothing was written"),
            _ => writeln!(out, "please answer yes or no")?,
        }
    }
}

fn ask_profile(
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> Result<(ClassificationProfile, Option<RiskClass>)> {
    let questions = [
        "Does it provide information used to take diagnostic or therapeutic decisions?",
        "Could such decisions cause death or an irreversible deterioration of health?",
        "Could such decisions cause a serious deterioration of health or a surgical intervention?",
        "Does it monitor physiological processes?",
        "Could variations in the monitored parameters result in immediate danger to the patient?",
        "Does it drive or influence the use of a (hardware) medical device?",
    ];
    let mut bits = 0u8;
    for (i, q) in questions.iter().enumerate() {
        if ask_bool(input, out, q)? {
            bits |= 1 << i;
        }
    }
    let profile = ClassificationProfile::from_bits(bits);
    let mut linked = None;
    while profile.drives_or_influences_device && linked.is_none() {
        write!(out, "Class of the driven device [I/IIa/IIb/III] ")?;
        out.flush()?;
        let Some(line) = read_line(input)? else {
            bail!("wizard interrupted; nothing was written");
        };
        match line.parse::<RiskClass>() {
            Ok(c) => linked = Some(c),
            Err(_) => writeln!(out, "please enter I, IIa, IIb or III")?,
        }
    }
    Ok((profile, linked))
}

/// Ask questions from `input` until a verdict is reached, then print the
/// Markdown report. End of input before the verdict is an error.
pub fn run(rb: &Rulebook, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<()> {
    let mut w = Wizard {
        rb,
        registry: DerivedRegistry::builtin(),
        case: AssessmentCase::new("wizard", ""),
        confirmed: BTreeSet::new(),
    };
    let mut class_asked = false;
    writeln!(out, "{} {}  (type `help` for commands)", rb.id, rb.version)?;

    loop {
        let p = progress(&w.case, rb, &w.registry, &w.confirmed, true)?;
        let prompt = match p.next {
            NextStep::Question(prompt) => prompt,
            NextStep::Verdict(v) => {
                if v.qualification.is_regulated() && !class_asked {
                    class_asked = true;
                    if ask_bool(input, out, "Determine the Rule 11 risk class?")? {
                        let (profile, linked) = ask_profile(input, out)?;
                        w.case.classification_profile = Some(profile);
                        w.case.linked_device_class = linked;
                        continue;
                    }
                }
                let verdict = evaluate(&w.case, rb, &w.registry)?;
                writeln!(out)?;
                write!(out, "{}", Report::new(&w.case, &verdict).to_markdown())?;
                return Ok(());
            }
        };

        writeln!(out)?;
        writeln!(out, "[{}] {}", prompt.node, prompt.prompt)?;
        writeln!(out, "  cite: {}", prompt.citation)?;
        if prompt.kind.derived_function().is_some() {
            let computed = match prompt.computed {
                Some(true) => "yes (press enter to accept)",
                Some(false) => "no (press enter to accept)",
                None => "undetermined",
            };
            writeln!(out, "  computed from evidence: {computed}")?;
            writeln!(out, "  {}", resolve_case(&w.case).summary())?;
        }
        write!(out, "> ")?;
        out.flush()?;

        let Some(line) = read_line(input)? else {
            bail!("wizard interrupted; nothing was written");
        };
        let answer = match parse_input(&line) {
            Input::Answer(a) => a,
            Input::Accept => match prompt.computed {
                Some(a) => a,
                None => {
                    writeln!(out, "please answer yes or no")?;
                    continue;
                }
            },
            Input::Evidence(json) => {
                match serde_json::from_str::<EvidenceItem>(&json)
                    .map_err(anyhow::Error::from)
                    .and_then(|item| w.add_evidence(item))
                {
                    Ok(()) => writeln!(out, "evidence added; {}", resolve_case(&w.case).summary())?,
                    Err(e) => writeln!(out, "evidence rejected: {e}")?,
                }
                continue;
            }
            Input::Back(node) => {
                let path = w.path()?;
                match path.iter().position(|n| n.as_str() == node) {
                    Some(k) => w.truncate(&path, k),
                    None => writeln!(out, "`{node}` has not been answered on this path")?,
                }
                continue;
            }
            Input::Help => {
                writeln!(out, "{HELP}")?;
                continue;
            }
            Input::Quit => bail!("wizard stopped; nothing was written"),
            Input::Unknown => {
                writeln!(out, "unrecognised input; type `help`")?;
                continue;
            }
        };

        let node = rb.node(prompt.node.as_str()).expect("prompted node exists");
        if computed_value(node, &w.case, &w.registry) == Some(answer) {
            w.confirmed.insert(node.id.clone());
        } else {
            w.case.answers.insert(node.id.clone(), answer);
        }
    }
}
