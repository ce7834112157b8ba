use super::parser::ParseError;
use super::Location;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    /// Bare word: identifiers, keywords and outcome names.
    Word(String),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Arrow,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Str(_) => "string".to_owned(),
            Tok::LBrace => "`{`".to_owned(),
            Tok::RBrace => "`}`".to_owned(),
            Tok::LParen => "`(`".to_owned(),
            Tok::RParen => "`)`".to_owned(),
            Tok::Arrow => "`->`".to_owned(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub at: Location,
}

#[derive(Debug)]
pub(crate) struct Tokens {
    pub tokens: Vec<Token>,
    /// Position just past the last non-whitespace character; used for
    /// end-of-input errors.
    pub end: Location,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn here(&self) -> Location {
        Location {
            line: self.line,
            column: self.column,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }
}

fn err(at: Location, message: impl Into<String>) -> ParseError {
    ParseError {
        line: at.line,
        column: at.column,
        message: message.into(),
    }
}

pub(crate) fn tokenize(source: &str) -> Result<Tokens, ParseError> {
    let mut cur = Cursor {
        chars: source.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    let mut end = cur.here();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
            continue;
        }

        let at = cur.here();
        let tok = match c {
            '{' => {
                cur.bump();
                Tok::LBrace
            }
            '}' => {
                cur.bump();
                Tok::RBrace
            }
            '(' => {
                cur.bump();
                Tok::LParen
            }
            ')' => {
                cur.bump();
                Tok::RParen
            }
            '-' => {
                cur.bump();
                if cur.peek() != Some('>') {
                    return Err(err(at, "expected `->`"));
                }
                cur.bump();
                Tok::Arrow
            }
            '"' => {
                cur.bump();
                Tok::Str(string_body(&mut cur, at)?)
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let mut word = String::new();
                while let Some(c) = cur.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                Tok::Word(word)
            }
            other => return Err(err(at, format!("unexpected character `{other}`"))),
        };
        tokens.push(Token { tok, at });
        end = cur.here();
    }

    Ok(Tokens { tokens, end })
}

fn string_body(cur: &mut Cursor<'_>, open: Location) -> Result<String, ParseError> {
    let mut out = String::new();
    loop {
        let at = cur.here();
        match cur.bump() {
            None | Some('\n') => return Err(err(open, "unterminated string")),
            Some('"') => return Ok(out),
            Some('\\') => match cur.bump() {
                Some('"') => out.push('"'),
                Some('\\') => out.push('\\'),
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some('r') => out.push('\r'),
                Some('u') => out.push(unicode_escape(cur, at)?),
                Some(other) => {
                    return Err(err(at, format!("unknown escape `\\{other}`")));
                }
                None => return Err(err(open, "unterminated string")),
            },
            Some(c) => out.push(c),
        }
    }
}

// \u{1F600}
fn unicode_escape(cur: &mut Cursor<'_>, at: Location) -> Result<char, ParseError> {
    if cur.bump() != Some('{') {
        return Err(err(at, "expected `{` after `\\u`"));
    }
    let mut hex = String::new();
    loop {
        match cur.bump() {
            Some('}') => break,
            Some(c) if c.is_ascii_hexdigit() && hex.len() < 6 => hex.push(c),
            _ => return Err(err(at, "malformed unicode escape")),
        }
    }
    u32::from_str_radix(&hex, 16)
        .ok()
        .and_then(char::from_u32)
        .ok_or_else(|| err(at, "invalid unicode scalar in escape"))
}
