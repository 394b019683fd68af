use std::collections::HashMap;

use super::{Constant, Fact, FactBase};
use crate::error::{Error, Result};

/// Bijection between the constants of one type and `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolTable {
    type_name: String,
    universe: Vec<Constant>,
    index: HashMap<Constant, usize>,
}

impl SymbolTable {
    /// Builds a table from an explicit universe; index order is list order.
    pub fn from_universe(type_name: impl Into<String>, universe: Vec<Constant>) -> Result<Self> {
        let mut index = HashMap::with_capacity(universe.len());
        for (i, c) in universe.iter().enumerate() {
            if index.insert(c.clone(), i).is_some() {
                return Err(Error::DuplicateConstant(c.to_string()));
            }
        }
        Ok(SymbolTable {
            type_name: type_name.into(),
            universe,
            index,
        })
    }

    pub fn type_name(&self) -> &str {
        &self.type_name
    }

    pub fn len(&self) -> usize {
        self.universe.len()
    }

    pub fn is_empty(&self) -> bool {
        self.universe.is_empty()
    }

    pub fn universe(&self) -> &[Constant] {
        &self.universe
    }

    pub fn index_of(&self, c: &str) -> Option<usize> {
        self.index.get(c).copied()
    }

    pub(crate) fn require(&self, c: &str) -> Result<usize> {
        self.index_of(c)
            .ok_or_else(|| Error::UnknownConstant(c.to_string()))
    }

    pub fn constant(&self, i: usize) -> Option<&Constant> {
        self.universe.get(i)
    }
}

/// Builds the universe from the unary `type_name` facts, in order of first
/// appearance. Every constant used by a binary fact must be in it.
pub fn build_symbols(fb: &FactBase, type_name: &str) -> Result<SymbolTable> {
    let mut universe = Vec::new();
    let mut index = HashMap::new();
    for c in fb.unary(type_name) {
        if !index.contains_key(c) {
            index.insert(c.clone(), universe.len());
            universe.push(c.clone());
        }
    }
    if universe.is_empty() {
        return Err(Error::EmptyUniverse {
            type_name: type_name.to_string(),
        });
    }
    for fact in fb {
        if let Fact::Binary { left, right, .. } = fact {
            for c in [left, right] {
                if !index.contains_key(c) {
                    return Err(Error::UnknownConstant(c.to_string()));
                }
            }
        }
    }
    Ok(SymbolTable {
        type_name: type_name.to_string(),
        universe,
        index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::parse_facts;

    fn names(st: &SymbolTable) -> Vec<&str> {
        st.universe().iter().map(Constant::as_str).collect()
    }

    #[test]
    fn chain_abc_universe() {
        let fb = parse_facts("node(a). node(b). node(c). edge(a,b). edge(b,c).").unwrap();
        let st = build_symbols(&fb, "node").unwrap();
        assert_eq!(names(&st), ["a", "b", "c"]);
        assert_eq!(st.index_of("a"), Some(0));
        assert_eq!(st.index_of("b"), Some(1));
        assert_eq!(st.index_of("c"), Some(2));
    }

    #[test]
    fn first_appearance_order() {
        let fb = parse_facts(
            "location(g1). location(g2).\nlocation(g3). location(g4).\nlocation(t1). location(t2).\nlocation(t3).\n\
             contains(t1,g2). contains(g3,t1).\nadjoins(g3,g4).",
        )
        .unwrap();
        let st = build_symbols(&fb, "location").unwrap();
        assert_eq!(names(&st), ["g1", "g2", "g3", "g4", "t1", "t2", "t3"]);

        let fb = parse_facts("node(z). node(a). node(z).").unwrap();
        assert_eq!(names(&build_symbols(&fb, "node").unwrap()), ["z", "a"]);
    }

    #[test]
    fn single_constant() {
        let st = build_symbols(&parse_facts("node(x).").unwrap(), "node").unwrap();
        assert_eq!(st.len(), 1);
    }

    #[test]
    fn errors() {
        let fb = parse_facts("edge(a,b).").unwrap();
        assert!(matches!(
            build_symbols(&fb, "node"),
            Err(Error::EmptyUniverse { .. })
        ));
        let fb = parse_facts("node(a). edge(a,b).").unwrap();
        assert!(matches!(build_symbols(&fb, "node"), Err(Error::UnknownConstant(c)) if c == "b"));
        let dup = vec![Constant::new("a").unwrap(), Constant::new("a").unwrap()];
        assert!(SymbolTable::from_universe("node", dup).is_err());
    }
}
