//! Ground dyadic facts, the constant universe, and the fact ↔ matrix codec.

mod codec;
mod format;
mod parse;
mod symbols;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexSet;

use crate::error::{Error, Result};

pub use codec::{compile, select, to_facts, vector_constants};
pub use format::{load_matrix, read_matrix, save_matrix, write_matrix, MATRIX_MAGIC};
pub use parse::parse_facts;
pub use symbols::{build_symbols, SymbolTable};

/// True for strings matching `[a-z][A-Za-z0-9_]*`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A ground constant (or predicate) name.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constant(String);

impl Constant {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if is_identifier(&text) {
            Ok(Constant(text))
        } else {
            Err(Error::InvalidIdentifier(text))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::borrow::Borrow<str> for Constant {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for Constant {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// A unary or binary ground fact.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fact {
    Unary {
        predicate: Constant,
        arg: Constant,
    },
    Binary {
        predicate: Constant,
        left: Constant,
        right: Constant,
    },
}

impl Fact {
    pub fn unary(predicate: &str, arg: &str) -> Result<Self> {
        Ok(Fact::Unary {
            predicate: Constant::new(predicate)?,
            arg: Constant::new(arg)?,
        })
    }

    pub fn binary(predicate: &str, left: &str, right: &str) -> Result<Self> {
        Ok(Fact::Binary {
            predicate: Constant::new(predicate)?,
            left: Constant::new(left)?,
            right: Constant::new(right)?,
        })
    }

    pub fn predicate(&self) -> &Constant {
        match self {
            Fact::Unary { predicate, .. } | Fact::Binary { predicate, .. } => predicate,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Fact::Unary { .. } => 1,
            Fact::Binary { .. } => 2,
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fact::Unary { predicate, arg } => write!(f, "{predicate}({arg})"),
            Fact::Binary {
                predicate,
                left,
                right,
            } => write!(f, "{predicate}({left},{right})"),
        }
    }
}

impl fmt::Debug for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A set of ground facts that remembers insertion order.
#[derive(Clone, Debug, Default)]
pub struct FactBase {
    facts: IndexSet<Fact>,
    source: Option<PathBuf>,
}

impl FactBase {
    pub fn new() -> Self {
        FactBase::default()
    }

    /// Reads and parses a facts file.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let mut fb = parse_facts(&text)?;
        fb.source = Some(path.to_path_buf());
        Ok(fb)
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    /// Returns false if the fact was already present.
    pub fn insert(&mut self, fact: Fact) -> bool {
        self.facts.insert(fact)
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter()
    }

    /// Arguments of the unary facts of `predicate`, in insertion order.
    pub fn unary<'a>(&'a self, predicate: &'a str) -> impl Iterator<Item = &'a Constant> + 'a {
        self.facts.iter().filter_map(move |f| match f {
            Fact::Unary { predicate: p, arg } if p.as_str() == predicate => Some(arg),
            _ => None,
        })
    }

    /// Argument pairs of the binary facts of `predicate`, in insertion order.
    pub fn binary<'a>(
        &'a self,
        predicate: &'a str,
    ) -> impl Iterator<Item = (&'a Constant, &'a Constant)> + 'a {
        self.facts.iter().filter_map(move |f| match f {
            Fact::Binary {
                predicate: p,
                left,
                right,
            } if p.as_str() == predicate => Some((left, right)),
            _ => None,
        })
    }

    /// Distinct predicates of binary facts.
    pub fn binary_predicates(&self) -> IndexSet<&Constant> {
        self.facts
            .iter()
            .filter(|f| f.arity() == 2)
            .map(Fact::predicate)
            .collect()
    }

    /// Renders the facts as a parseable facts file, one statement per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for fact in &self.facts {
            out.push_str(&fact.to_string());
            out.push_str(".\n");
        }
        out
    }

    /// The facts as an ordered set, for comparisons that ignore order.
    pub fn to_set(&self) -> std::collections::BTreeSet<Fact> {
        self.facts.iter().cloned().collect()
    }
}

impl PartialEq for FactBase {
    /// Set equality; order and source are ignored.
    fn eq(&self, other: &Self) -> bool {
        self.len() == other.len() && self.facts.iter().all(|f| other.contains(f))
    }
}

impl Eq for FactBase {}

impl FromIterator<Fact> for FactBase {
    fn from_iter<I: IntoIterator<Item = Fact>>(iter: I) -> Self {
        FactBase {
            facts: iter.into_iter().collect(),
            source: None,
        }
    }
}

impl Extend<Fact> for FactBase {
    fn extend<I: IntoIterator<Item = Fact>>(&mut self, iter: I) {
        self.facts.extend(iter);
    }
}

impl<'a> IntoIterator for &'a FactBase {
    type Item = &'a Fact;
    type IntoIter = indexmap::set::Iter<'a, Fact>;

    fn into_iter(self) -> Self::IntoIter {
        self.facts.iter()
    }
}
