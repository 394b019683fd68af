use std::iter::Peekable;
use std::str::Chars;

use super::{Constant, Fact, FactBase};
use crate::error::{Error, Result};

/// Parses a facts file: `ident(ident).` and `ident(ident,ident).` statements
/// separated by whitespace, with `%` line comments. Duplicates collapse.
pub fn parse_facts(text: &str) -> Result<FactBase> {
    let mut lexer = Lexer::new(text);
    let mut fb = FactBase::new();
    while let Some(fact) = lexer.statement()? {
        fb.insert(fact);
    }
    Ok(fb)
}

struct Lexer<'a> {
    chars: Peekable<Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
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

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == '%' {
                while matches!(self.chars.peek(), Some(&c) if c != '\n') {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: char) -> Result<()> {
        self.skip_trivia();
        match self.chars.peek() {
            Some(&c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(&c) => Err(self.error(format!("expected `{want}`, found `{c}`"))),
            None => Err(self.error(format!("expected `{want}`, found end of input"))),
        }
    }

    /// Reads a word of identifier characters. Returns the word and its position.
    fn word(&mut self) -> Result<(String, usize, usize)> {
        self.skip_trivia();
        let (line, column) = (self.line, self.column);
        let mut word = String::new();
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                word.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if word.is_empty() {
            return Err(match self.chars.peek() {
                Some(&c) => self.error(format!("expected identifier, found `{c}`")),
                None => self.error("expected identifier, found end of input"),
            });
        }
        Ok((word, line, column))
    }

    fn predicate(&mut self) -> Result<(Constant, usize, usize)> {
        let (word, line, column) = self.word()?;
        let c = Constant::new(word.clone()).map_err(|_| Error::Syntax {
            line,
            column,
            message: format!("invalid predicate name `{word}`"),
        })?;
        Ok((c, line, column))
    }

    fn argument(&mut self) -> Result<Constant> {
        let (word, line, column) = self.word()?;
        let first = word.chars().next().unwrap_or_default();
        if first.is_ascii_uppercase() || first == '_' {
            return Err(Error::VariableNotAllowed {
                name: word,
                line,
                column,
            });
        }
        Constant::new(word.clone()).map_err(|_| Error::Syntax {
            line,
            column,
            message: format!("invalid constant `{word}`"),
        })
    }

    fn statement(&mut self) -> Result<Option<Fact>> {
        self.skip_trivia();
        if self.chars.peek().is_none() {
            return Ok(None);
        }
        let (predicate, line, column) = self.predicate()?;
        self.expect('(')?;
        let mut args = vec![self.argument()?];
        loop {
            self.skip_trivia();
            match self.chars.peek() {
                Some(',') => {
                    self.bump();
                    args.push(self.argument()?);
                }
                Some(')') => {
                    self.bump();
                    break;
                }
                Some(&c) => return Err(self.error(format!("expected `,` or `)`, found `{c}`"))),
                None => return Err(self.error("unterminated argument list")),
            }
        }
        self.expect('.')?;
        let mut args = args.into_iter();
        match (args.next(), args.next(), args.len()) {
            (Some(arg), None, _) => Ok(Some(Fact::Unary { predicate, arg })),
            (Some(left), Some(right), 0) => Ok(Some(Fact::Binary {
                predicate,
                left,
                right,
            })),
            (_, _, rest) => Err(Error::UnsupportedArity {
                predicate: predicate.to_string(),
                arity: rest + 2,
                line,
                column,
            }),
        }
    }
}
