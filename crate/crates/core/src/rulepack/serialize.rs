use std::fmt::Write;

use super::{NodeBody, QuestionKind, Rulebook};

/// Render a rulebook as canonical rulepack text.
///
/// Comments are not preserved. Serializing the result of parsing this text
/// yields the same bytes.
pub fn serialize_rulebook(rb: &Rulebook) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "rulebook {} version {}",
        quote(&rb.id),
        quote(&rb.version)
    );

    for node in &rb.nodes {
        out.push('\n');
        match &node.body {
            NodeBody::Question {
                prompt,
                kind,
                branches,
            } => {
                let _ = writeln!(out, "node {} {{", node.id);
                let _ = writeln!(out, "  ask {}", quote(prompt));
                match kind {
                    QuestionKind::Boolean => out.push_str("  kind boolean\n"),
                    QuestionKind::Derived(f) => {
                        let _ = writeln!(out, "  kind derived({f})");
                    }
                }
                let _ = writeln!(out, "  cite {}", quote(&node.citation));
                for (label, target) in branches.iter() {
                    let _ = writeln!(out, "  {} -> {}", label.as_str(), target);
                }
            }
            NodeBody::Verdict { outcome, reason } => {
                let _ = writeln!(out, "verdict {} {{", node.id);
                let _ = writeln!(out, "  outcome {outcome}");
                let _ = writeln!(out, "  reason {}", quote(reason));
                let _ = writeln!(out, "  cite {}", quote(&node.citation));
            }
        }
        out.push_str("}\n");
    }
    out
}

fn quote(s: &str) -> String {
    let mut q = String::with_capacity(s.len() + 2);
    q.push('"');
    for c in s.chars() {
        match c {
            '"' => q.push_str("\\\""),
            '\\' => q.push_str("\\\\"),
            '\n' => q.push_str("\\n"),
            '\t' => q.push_str("\\t"),
            '\r' => q.push_str("\\r"),
            c if c.is_control() => {
                let _ = write!(q, "\\u{{{:x}}}", c as u32);
            }
            c => q.push(c),
        }
    }
    q.push('"');
    q
}
