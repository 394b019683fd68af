use std::time::Instant;

use crate::bitmat::{BitMatrix, BitVector};
use crate::error::{Error, Result};

/// Output of repeated matrix squaring.
#[derive(Clone, Debug)]
pub struct RmsResult {
    /// Entry `(i, j)` is set iff `j` is reachable from `i` by a path of length >= 1.
    pub closure: BitMatrix,
    /// Number of squaring passes, including the one that detected the fixpoint.
    pub iterations: usize,
}

/// Output of the selective matrix product.
#[derive(Clone, Debug)]
pub struct SmpResult {
    /// Bit `j` is set iff `j` is reachable by a path of length >= 1 from a selected source.
    pub reachable: BitVector,
    pub iterations: usize,
}

/// Transitive closure `R1 + R1^2 + ...` by repeated squaring of `I + R1`.
///
/// The reflexive part is only present where `r1` has cycles; use
/// [`BitMatrix::add_identity`] on the result for the reflexive closure.
pub fn rms(r1: &BitMatrix) -> Result<RmsResult> {
    Ok(rms_until(r1, None)?.expect("no deadline"))
}

/// [`rms`] with a deadline checked between squaring passes; `None` on timeout.
pub(crate) fn rms_until(r1: &BitMatrix, deadline: Option<Instant>) -> Result<Option<RmsResult>> {
    if !r1.is_square() {
        return Err(Error::NotSquare {
            op: "rms",
            rows: r1.rows(),
            cols: r1.cols(),
        });
    }
    let mut r = r1.add_identity()?;
    let mut iterations = 0;
    let squared = loop {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok(None);
        }
        iterations += 1;
        let squared = r.mul(&r)?;
        if squared.equals(&r) {
            break squared;
        }
        r = squared;
    };
    let closure = squared.mul(r1)?;
    Ok(Some(RmsResult {
        closure,
        iterations,
    }))
}

/// Rows of the transitive closure of `r1` selected by `v`, computed by
/// accumulating `v + vR1 + vR1^2 + ...` without forming the closure.
pub fn smp(v: &BitVector, r1: &BitMatrix) -> Result<SmpResult> {
    Ok(smp_until(v, r1, None)?.expect("no deadline"))
}

pub(crate) fn smp_until(
    v: &BitVector,
    r1: &BitMatrix,
    deadline: Option<Instant>,
) -> Result<Option<SmpResult>> {
    if !r1.is_square() {
        return Err(Error::NotSquare {
            op: "smp",
            rows: r1.rows(),
            cols: r1.cols(),
        });
    }
    if v.len() != r1.rows() {
        return Err(Error::shape("smp", v.as_matrix().dims(), r1.dims()));
    }
    let mut current = v.as_matrix().clone();
    let mut iterations = 0;
    let settled = loop {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok(None);
        }
        iterations += 1;
        let next = current.add(&current.mul(r1)?)?;
        if next.equals(&current) {
            break next;
        }
        current = next;
    };
    let reachable = BitVector::try_from(settled.mul(r1)?)?;
    Ok(Some(SmpResult {
        reachable,
        iterations,
    }))
}
