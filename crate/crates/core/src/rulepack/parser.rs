use thiserror::Error;

use super::lexer::{tokenize, Tok, Token};
use super::validate::is_identifier;
use super::{Answer, Branches, Location, Node, NodeBody, Outcome, QuestionKind, Rulebook};

/// Syntax error in a rulepack source.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn location(&self) -> Location {
        Location {
            line: self.line,
            column: self.column,
        }
    }
}

/// Parse a rulepack.
///
/// ```text
/// rulebook  = "rulebook" STRING "version" STRING node+
/// node      = qnode | vnode
/// qnode     = "node" IDENT "{" "ask" STRING "kind" kind "cite" STRING branch* "}"
/// kind      = "boolean" | "derived" "(" IDENT ")"
/// branch    = ("yes" | "no") "->" IDENT
/// vnode     = "verdict" IDENT "{" "outcome" OUTCOME "reason" STRING "cite" STRING "}"
/// OUTCOME   = "MD" | "ACCESSORY" | "NOT_MD" | "NOT_SOFTWARE"
/// ```
///
/// `#` starts a comment running to end of line. A label repeated on one node
/// is a syntax error; a missing label is left for [`validate_rulebook`] to
/// report, as are dangling targets and duplicate node ids.
///
/// [`validate_rulebook`]: super::validate_rulebook
pub fn parse_rulebook(source: &str) -> Result<Rulebook, ParseError> {
    let toks = tokenize(source)?;
    let mut p = Parser {
        tokens: toks.tokens,
        pos: 0,
        end: toks.end,
    };
    p.rulebook()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: Location,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self, expected: &str) -> Result<Token, ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => Err(ParseError {
                line: self.end.line,
                column: self.end.column,
                message: format!("expected {expected}, found end of input"),
            }),
        }
    }

    fn unexpected(t: &Token, expected: &str) -> ParseError {
        ParseError {
            line: t.at.line,
            column: t.at.column,
            message: format!("expected {expected}, found {}", t.tok.describe()),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Location, ParseError> {
        let expected = format!("`{kw}`");
        let t = self.next(&expected)?;
        match &t.tok {
            Tok::Word(w) if w == kw => Ok(t.at),
            _ => Err(Self::unexpected(&t, &expected)),
        }
    }

    fn punct(&mut self, want: Tok) -> Result<(), ParseError> {
        let expected = want.describe();
        let t = self.next(&expected)?;
        if t.tok == want {
            Ok(())
        } else {
            Err(Self::unexpected(&t, &expected))
        }
    }

    fn string(&mut self) -> Result<String, ParseError> {
        let t = self.next("string")?;
        match t.tok {
            Tok::Str(s) => Ok(s),
            _ => Err(Self::unexpected(&t, "string")),
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        let t = self.next("identifier")?;
        match &t.tok {
            Tok::Word(w) if is_identifier(w) => Ok(w.clone()),
            _ => Err(Self::unexpected(&t, "identifier")),
        }
    }

    fn rulebook(&mut self) -> Result<Rulebook, ParseError> {
        self.keyword("rulebook")?;
        let id = self.string()?;
        self.keyword("version")?;
        let version = self.string()?;

        let mut nodes = Vec::new();
        loop {
            match self.peek() {
                None if nodes.is_empty() => {
                    self.next("`node` or `verdict`")?;
                }
                None => break,
                Some(t) => match &t.tok {
                    Tok::Word(w) if w == "node" => nodes.push(self.question()?),
                    Tok::Word(w) if w == "verdict" => nodes.push(self.verdict()?),
                    _ => return Err(Self::unexpected(t, "`node` or `verdict`")),
                },
            }
        }
        Ok(Rulebook { id, version, nodes })
    }

    fn question(&mut self) -> Result<Node, ParseError> {
        let at = self.keyword("node")?;
        let id = self.ident()?;
        self.punct(Tok::LBrace)?;
        self.keyword("ask")?;
        let prompt = self.string()?;
        self.keyword("kind")?;
        let kind = self.kind()?;
        self.keyword("cite")?;
        let citation = self.string()?;

        let mut branches = Branches::default();
        loop {
            let t = self.next("`yes`, `no` or `}`")?;
            let label = match &t.tok {
                Tok::RBrace => break,
                Tok::Word(w) if w == "yes" => Answer::Yes,
                Tok::Word(w) if w == "no" => Answer::No,
                _ => return Err(Self::unexpected(&t, "`yes`, `no` or `}`")),
            };
            self.punct(Tok::Arrow)?;
            let target = self.ident()?;
            let slot = branches.slot_mut(label);
            if slot.is_some() {
                return Err(ParseError {
                    line: t.at.line,
                    column: t.at.column,
                    message: format!("duplicate `{}` branch on node `{id}`", label.as_str()),
                });
            }
            *slot = Some(target.into());
        }

        Ok(Node {
            id: id.into(),
            citation,
            body: NodeBody::Question {
                prompt,
                kind,
                branches,
            },
            location: Some(at),
        })
    }

    fn kind(&mut self) -> Result<QuestionKind, ParseError> {
        let t = self.next("`boolean` or `derived`")?;
        match &t.tok {
            Tok::Word(w) if w == "boolean" => Ok(QuestionKind::Boolean),
            Tok::Word(w) if w == "derived" => {
                self.punct(Tok::LParen)?;
                let f = self.ident()?;
                self.punct(Tok::RParen)?;
                Ok(QuestionKind::Derived(f))
            }
            _ => Err(Self::unexpected(&t, "`boolean` or `derived`")),
        }
    }

    fn verdict(&mut self) -> Result<Node, ParseError> {
        let at = self.keyword("verdict")?;
        let id = self.ident()?;
        self.punct(Tok::LBrace)?;
        self.keyword("outcome")?;
        let t = self.next("outcome")?;
        let outcome = match &t.tok {
            Tok::Word(w) => Outcome::parse(w),
            _ => None,
        }
        .ok_or_else(|| Self::unexpected(&t, "one of MD, ACCESSORY, NOT_MD, NOT_SOFTWARE"))?;
        self.keyword("reason")?;
        let reason = self.string()?;
        self.keyword("cite")?;
        let citation = self.string()?;
        self.punct(Tok::RBrace)?;

        Ok(Node {
            id: id.into(),
            citation,
            body: NodeBody::Verdict { outcome, reason },
            location: Some(at),
        })
    }
}
