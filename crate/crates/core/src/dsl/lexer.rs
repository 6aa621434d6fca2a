use crate::semilogic::is_word_char;

use super::{ParseDiagnostic, Severity};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    /// Unquoted run of word characters; keyword, identifier, integer or value.
    Word(String),
    Var(String),
    Str(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Arrow,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Var(v) => format!("`?{v}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Arrow => "`=>`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Spanned>, ParseDiagnostic> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);

    let err = |line, column, message: String| ParseDiagnostic {
        line,
        column,
        message,
        severity: Severity::Error,
    };

    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, column);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                column = 1;
            } else if c.is_some() {
                column += 1;
            }
            c
        };
        let tok = match c {
            c if c.is_whitespace() => {
                bump(&mut chars);
                continue;
            }
            '#' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump(&mut chars);
                }
                continue;
            }
            '(' => {
                bump(&mut chars);
                Tok::LParen
            }
            ')' => {
                bump(&mut chars);
                Tok::RParen
            }
            '{' => {
                bump(&mut chars);
                Tok::LBrace
            }
            '}' => {
                bump(&mut chars);
                Tok::RBrace
            }
            ',' => {
                bump(&mut chars);
                Tok::Comma
            }
            ':' => {
                bump(&mut chars);
                Tok::Colon
            }
            '=' => {
                bump(&mut chars);
                if chars.peek() == Some(&'>') {
                    bump(&mut chars);
                    Tok::Arrow
                } else {
                    return Err(err(tl, tc, "expected `=>`".into()));
                }
            }
            '?' => {
                bump(&mut chars);
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        name.push(c);
                        bump(&mut chars);
                    } else {
                        break;
                    }
                }
                if !crate::semilogic::is_identifier(&name) {
                    return Err(err(tl, tc, format!("invalid variable name `?{name}`")));
                }
                Tok::Var(name)
            }
            '"' => {
                bump(&mut chars);
                let mut text = String::new();
                loop {
                    match bump(&mut chars) {
                        None => return Err(err(tl, tc, "unterminated string".into())),
                        Some('"') => break,
                        Some('\\') => match bump(&mut chars) {
                            Some('"') => text.push('"'),
                            Some('\\') => text.push('\\'),
                            Some('n') => text.push('\n'),
                            Some('t') => text.push('\t'),
                            Some(other) => {
                                return Err(err(
                                    tl,
                                    tc,
                                    format!("unknown escape `\\{other}` in string"),
                                ))
                            }
                            None => return Err(err(tl, tc, "unterminated string".into())),
                        },
                        Some(c) => text.push(c),
                    }
                }
                Tok::Str(text)
            }
            c if is_word_char(c) => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if is_word_char(c) {
                        word.push(c);
                        bump(&mut chars);
                    } else {
                        break;
                    }
                }
                Tok::Word(word)
            }
            other => return Err(err(tl, tc, format!("unexpected character {other:?}"))),
        };
        out.push(Spanned {
            tok,
            line: tl,
            column: tc,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}
