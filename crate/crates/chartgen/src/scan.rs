//! Shared tokenizer for the grammar, semantics, AVM and table text formats.
//! `#` starts a comment to end of line; whitespace is insignificant.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    LBrack,
    RBrack,
    LParen,
    RParen,
    Comma,
    Dot,
    Eq,
    Colon,
    Arrow,
    Semi,
    Tilde,
    Pipe,
    Ident(String),
    Var(String),
    Str(String),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LBrack => write!(f, "["),
            Tok::RBrack => write!(f, "]"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::Comma => write!(f, ","),
            Tok::Dot => write!(f, "."),
            Tok::Eq => write!(f, "="),
            Tok::Colon => write!(f, ":"),
            Tok::Arrow => write!(f, "->"),
            Tok::Semi => write!(f, ";"),
            Tok::Tilde => write!(f, "~"),
            Tok::Pipe => write!(f, "|"),
            Tok::Ident(s) => write!(f, "{}", s),
            Tok::Var(s) => write!(f, "${}", s),
            Tok::Str(s) => write!(f, "\"{}\"", s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("{pos}: {msg}")]
pub struct ScanError {
    pub pos: Pos,
    pub msg: String,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

pub fn scan(text: &str) -> Result<Vec<Token>, ScanError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        let bump = |chars: &mut std::iter::Peekable<std::str::Chars>,
                        line: &mut usize,
                        col: &mut usize| {
            let c = chars.next().unwrap();
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars, &mut line, &mut col);
            continue;
        }
        if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                bump(&mut chars, &mut line, &mut col);
            }
            continue;
        }
        let tok = match c {
            '[' => {
                bump(&mut chars, &mut line, &mut col);
                Tok::LBrack
            }
            ']' => {
                bump(&mut chars, &mut line, &mut col);
                Tok::RBrack
            }
            '(' => {
                bump(&mut chars, &mut line, &mut col);
                Tok::LParen
            }
            ')' => {
                bump(&mut chars, &mut line, &mut col);
                Tok::RParen
            }
            ',' => {
                bump(&mut chars, &mut line, &mut col);
                Tok::Comma
            }
            '.' => {
                bump(&mut chars, &mut line, &mut col);
                Tok::Dot
            }
            '=' => {
                bump(&mut chars, &mut line, &mut col);
                Tok::Eq
            }
            ':' => {
                bump(&mut chars, &mut line, &mut col);
                Tok::Colon
            }
            ';' => {
                bump(&mut chars, &mut line, &mut col);
                Tok::Semi
            }
            '~' => {
                bump(&mut chars, &mut line, &mut col);
                Tok::Tilde
            }
            '|' => {
                bump(&mut chars, &mut line, &mut col);
                Tok::Pipe
            }
            '-' => {
                bump(&mut chars, &mut line, &mut col);
                match chars.peek() {
                    Some('>') => {
                        bump(&mut chars, &mut line, &mut col);
                        Tok::Arrow
                    }
                    _ => {
                        return Err(ScanError {
                            pos,
                            msg: "expected '>' after '-'".to_string(),
                        })
                    }
                }
            }
            '$' => {
                bump(&mut chars, &mut line, &mut col);
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if is_ident_char(c) {
                        name.push(bump(&mut chars, &mut line, &mut col));
                    } else {
                        break;
                    }
                }
                if name.is_empty() {
                    return Err(ScanError {
                        pos,
                        msg: "expected variable name after '$'".to_string(),
                    });
                }
                Tok::Var(name)
            }
            '"' => {
                bump(&mut chars, &mut line, &mut col);
                let mut s = String::new();
                loop {
                    match chars.peek() {
                        Some('"') => {
                            bump(&mut chars, &mut line, &mut col);
                            break;
                        }
                        Some(_) => s.push(bump(&mut chars, &mut line, &mut col)),
                        None => {
                            return Err(ScanError {
                                pos,
                                msg: "unterminated string".to_string(),
                            })
                        }
                    }
                }
                Tok::Str(s)
            }
            c if is_ident_char(c) => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if is_ident_char(c) {
                        s.push(bump(&mut chars, &mut line, &mut col));
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            other => {
                return Err(ScanError {
                    pos,
                    msg: format!("unexpected character '{}'", other),
                })
            }
        };
        out.push(Token { tok, pos });
    }
    Ok(out)
}

/// Cursor over a token stream with positioned errors.
pub struct Cursor {
    toks: Vec<Token>,
    pub at: usize,
}

impl Cursor {
    pub fn new(toks: Vec<Token>) -> Cursor {
        Cursor { toks, at: 0 }
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.tok)
    }

    pub fn pos(&self) -> Pos {
        self.toks
            .get(self.at)
            .or_else(|| self.toks.last())
            .map(|t| t.pos)
            .unwrap_or(Pos { line: 1, col: 1 })
    }

    pub fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|t| t.tok.clone());
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok) -> Result<(), ScanError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(&format!(
                "expected '{}', found {}",
                tok,
                self.peek()
                    .map(|t| format!("'{}'", t))
                    .unwrap_or_else(|| "end of input".to_string())
            )))
        }
    }

    pub fn expect_ident(&mut self) -> Result<String, ScanError> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) => {
                self.at += 1;
                Ok(s)
            }
            other => Err(self.err(&format!(
                "expected identifier, found {}",
                other
                    .map(|t| format!("'{}'", t))
                    .unwrap_or_else(|| "end of input".to_string())
            ))),
        }
    }

    pub fn at_end(&self) -> bool {
        self.at >= self.toks.len()
    }

    pub fn err(&self, msg: &str) -> ScanError {
        ScanError {
            pos: self.pos(),
            msg: msg.to_string(),
        }
    }
}
