use super::{Constant, Fact, FactBase, SymbolTable};
use crate::bitmat::{BitMatrix, BitVector};
use crate::error::{Error, Result};

/// Encodes the binary facts of `predicate` as an `n x n` matrix named after it.
pub fn compile(fb: &FactBase, predicate: &str, st: &SymbolTable) -> Result<BitMatrix> {
    let n = st.len();
    let mut entries = Vec::new();
    for (left, right) in fb.binary(predicate) {
        entries.push((st.require(left.as_str())?, st.require(right.as_str())?));
    }
    Ok(BitMatrix::from_entries(n, n, entries).with_name(predicate))
}

/// Decodes a square matrix into `predicate(c_i, c_j)` facts, row-major.
pub fn to_facts(m: &BitMatrix, predicate: &str, st: &SymbolTable) -> Result<FactBase> {
    let n = st.len();
    if m.dims() != (n, n) {
        return Err(Error::shape("to_facts", (n, n), m.dims()));
    }
    let predicate = Constant::new(predicate)?;
    Ok(m.iter_ones()
        .map(|(i, j)| Fact::Binary {
            predicate: predicate.clone(),
            left: st.universe()[i].clone(),
            right: st.universe()[j].clone(),
        })
        .collect())
}

/// A `1 x n` vector with the bits of the listed constants set.
pub fn select<S: AsRef<str>>(constants: &[S], st: &SymbolTable) -> Result<BitVector> {
    let indices = constants
        .iter()
        .map(|c| st.require(c.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Ok(BitVector::from_indices(st.len(), indices))
}

/// The constants whose bits are set in `v`, in index order.
pub fn vector_constants<'a>(v: &BitVector, st: &'a SymbolTable) -> Result<Vec<&'a Constant>> {
    if v.len() != st.len() {
        return Err(Error::shape(
            "vector_constants",
            (1, st.len()),
            (1, v.len()),
        ));
    }
    Ok(v.ones().map(|j| &st.universe()[j]).collect())
}
