//! S-expression reader for PDDL text.
//!
//! Symbols are lower-cased on read; `;` starts a comment that runs to the end
//! of the line.

use std::fmt;

/// Line/column location inside the source text (both 1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SExpr {
    Symbol(String, Position),
    List(Vec<SExpr>, Position),
}

impl SExpr {
    pub fn position(&self) -> Position {
        match self {
            SExpr::Symbol(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            SExpr::Symbol(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            SExpr::Symbol(..) => None,
        }
    }

    /// Head symbol of a list, if the list is non-empty and starts with a symbol.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|l| l.first()).and_then(SExpr::as_symbol)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LexProblem {
    UnexpectedClose,
    UnclosedList,
    TrailingInput,
    Empty,
}

impl fmt::Display for LexProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LexProblem::UnexpectedClose => "unexpected ')'",
            LexProblem::UnclosedList => "unclosed '('",
            LexProblem::TrailingInput => "trailing input after top-level expression",
            LexProblem::Empty => "no expression found",
        };
        f.write_str(s)
    }
}

/// Reads exactly one top-level expression from `text`.
pub fn read(text: &str) -> Result<SExpr, (LexProblem, Position)> {
    let mut reader = Reader { chars: text.char_indices().peekable(), line: 1, column: 1 };
    let first = match reader.next_token() {
        None => return Err((LexProblem::Empty, reader.here())),
        Some(t) => t,
    };
    let expr = reader.parse_from(first)?;
    if let Some((_, pos)) = reader.next_token() {
        return Err((LexProblem::TrailingInput, pos));
    }
    Ok(expr)
}

enum Token {
    Open,
    Close,
    Symbol(String),
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    column: usize,
}

impl Reader<'_> {
    fn here(&self) -> Position {
        Position { line: self.line, column: self.column }
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn next_token(&mut self) -> Option<(Token, Position)> {
        loop {
            let &(_, c) = self.chars.peek()?;
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(&(_, c)) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
        let pos = self.here();
        let c = self.bump()?;
        let tok = match c {
            '(' => Token::Open,
            ')' => Token::Close,
            _ => {
                let mut sym = String::new();
                sym.extend(c.to_lowercase());
                while let Some(&(_, c)) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    sym.extend(c.to_lowercase());
                    self.bump();
                }
                Token::Symbol(sym)
            }
        };
        Some((tok, pos))
    }

    fn parse_from(&mut self, first: (Token, Position)) -> Result<SExpr, (LexProblem, Position)> {
        match first {
            (Token::Symbol(s), pos) => Ok(SExpr::Symbol(s, pos)),
            (Token::Close, pos) => Err((LexProblem::UnexpectedClose, pos)),
            (Token::Open, pos) => {
                let mut items = Vec::new();
                loop {
                    match self.next_token() {
                        None => return Err((LexProblem::UnclosedList, pos)),
                        Some((Token::Close, _)) => return Ok(SExpr::List(items, pos)),
                        Some(tok) => items.push(self.parse_from(tok)?),
                    }
                }
            }
        }
    }
}
