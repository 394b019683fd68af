//! Dense bit-packed boolean matrices and row vectors.
//!
//! Row `i` is stored as `words_per_row` little-endian `u64` words: bit `j % 64`
//! of word `j / 64` is entry `(i, j)`. Bits at column indices `>= cols` are
//! always zero, so equality is a plain word compare.
//!
//! All operations return new values; nothing is mutated after construction.

use std::fmt;

use crate::error::{Error, Result};

const WORD_BITS: usize = u64::BITS as usize;

#[inline]
fn words_for(cols: usize) -> usize {
    cols.div_ceil(WORD_BITS)
}

#[inline]
fn tail_mask(cols: usize) -> u64 {
    match cols % WORD_BITS {
        0 => !0,
        rem => (1u64 << rem) - 1,
    }
}

/// A dense `rows x cols` boolean matrix.
#[derive(Clone)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    data: Vec<u64>,
    name: Option<String>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = words_for(cols);
        BitMatrix {
            rows,
            cols,
            words_per_row,
            data: vec![0; rows * words_per_row],
            name: None,
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        BitMatrix::zeros(rows, cols).negate()
    }

    pub fn identity(n: usize) -> Self {
        BitMatrix::from_entries(n, n, (0..n).map(|i| (i, i)))
    }

    /// Builds a matrix with exactly the listed entries set.
    ///
    /// Panics if an entry lies outside `rows x cols`.
    pub fn from_entries<I>(rows: usize, cols: usize, entries: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut m = BitMatrix::zeros(rows, cols);
        for (i, j) in entries {
            m.set(i, j);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = BitMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                if f(i, j) {
                    m.set(i, j);
                }
            }
        }
        m
    }

    /// Builds a matrix from nested 0/1 rows; all rows must have the same length.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = BitMatrix::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            assert_eq!(row.len(), cols, "ragged rows");
            for (j, &bit) in row.iter().enumerate() {
                if bit != 0 {
                    m.set(i, j);
                }
            }
        }
        m
    }

    /// Builds a matrix from raw row words. Fails if a padding bit is set.
    pub(crate) fn from_row_words(rows: usize, cols: usize, data: Vec<u64>) -> Option<Self> {
        let words_per_row = words_for(cols);
        if data.len() != rows * words_per_row {
            return None;
        }
        let m = BitMatrix {
            rows,
            cols,
            words_per_row,
            data,
            name: None,
        };
        m.padding_clear().then_some(m)
    }

    pub(crate) fn set(&mut self, i: usize, j: usize) {
        assert!(
            i < self.rows && j < self.cols,
            "entry ({i},{j}) outside {}x{}",
            self.rows,
            self.cols
        );
        self.data[i * self.words_per_row + j / WORD_BITS] |= 1 << (j % WORD_BITS);
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        assert!(
            i < self.rows && j < self.cols,
            "entry ({i},{j}) outside {}x{}",
            self.rows,
            self.cols
        );
        self.data[i * self.words_per_row + j / WORD_BITS] >> (j % WORD_BITS) & 1 == 1
    }

    /// Packed words of row `i`.
    pub fn row_words(&self, i: usize) -> &[u64] {
        let start = i * self.words_per_row;
        &self.data[start..start + self.words_per_row]
    }

    /// Column indices of the set bits in row `i`, ascending.
    pub fn row_ones(&self, i: usize) -> Ones<'_> {
        Ones::new(self.row_words(i))
    }

    /// All set entries in row-major order.
    pub fn iter_ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.rows).flat_map(move |i| self.row_ones(i).map(move |j| (i, j)))
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    fn padding_clear(&self) -> bool {
        if self.cols.is_multiple_of(WORD_BITS) {
            return true;
        }
        let mask = tail_mask(self.cols);
        self.data
            .chunks_exact(self.words_per_row)
            .all(|row| row[self.words_per_row - 1] & !mask == 0)
    }

    fn checked(self) -> Self {
        debug_assert!(
            self.padding_clear(),
            "stray bits beyond column {}",
            self.cols
        );
        self
    }

    /// Element-wise OR.
    pub fn add(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.dims() != other.dims() {
            return Err(Error::shape("add", self.dims(), other.dims()));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a | b)
            .collect();
        Ok(self.with_data(data).checked())
    }

    /// Boolean product: row `i` of the result is the OR of the rows `k` of
    /// `other` for every set bit `k` in row `i` of `self`.
    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        if self.cols != other.rows {
            return Err(Error::shape("mul", self.dims(), other.dims()));
        }
        let mut out = BitMatrix::zeros(self.rows, other.cols);
        let w = out.words_per_row;
        if w == 0 {
            return Ok(out);
        }
        for (i, dst) in out.data.chunks_exact_mut(w).enumerate() {
            for k in self.row_ones(i) {
                for (d, s) in dst.iter_mut().zip(other.row_words(k)) {
                    *d |= *s;
                }
            }
        }
        Ok(out.checked())
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut out = BitMatrix::zeros(self.cols, self.rows);
        for (i, j) in self.iter_ones() {
            out.set(j, i);
        }
        out.checked()
    }

    /// Flips every bit inside `rows x cols`; padding stays zero.
    pub fn negate(&self) -> BitMatrix {
        let mask = tail_mask(self.cols);
        let mut data: Vec<u64> = self.data.iter().map(|w| !w).collect();
        if self.words_per_row > 0 {
            for row in data.chunks_exact_mut(self.words_per_row) {
                row[self.words_per_row - 1] &= mask;
            }
        }
        self.with_data(data).checked()
    }

    /// `self + I`.
    pub fn add_identity(&self) -> Result<BitMatrix> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                op: "add_identity",
                rows: self.rows,
                cols: self.cols,
            });
        }
        let mut out = self.with_data(self.data.clone());
        for i in 0..self.rows {
            out.set(i, i);
        }
        Ok(out.checked())
    }

    /// Dimension-aware equality: matrices of different shapes are unequal.
    pub fn equals(&self, other: &BitMatrix) -> bool {
        self.dims() == other.dims() && self.data == other.data
    }

    pub fn row(&self, i: usize) -> Result<BitVector> {
        if i >= self.rows {
            return Err(Error::Index {
                index: i,
                len: self.rows,
            });
        }
        let m = BitMatrix {
            rows: 1,
            cols: self.cols,
            words_per_row: self.words_per_row,
            data: self.row_words(i).to_vec(),
            name: None,
        };
        Ok(BitVector(m))
    }

    fn with_data(&self, data: Vec<u64>) -> BitMatrix {
        debug_assert_eq!(data.len(), self.data.len());
        BitMatrix {
            rows: self.rows,
            cols: self.cols,
            words_per_row: self.words_per_row,
            data,
            name: None,
        }
    }
}

impl PartialEq for BitMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.equals(other)
    }
}

impl Eq for BitMatrix {}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitMatrix<{}x{}", self.rows, self.cols)?;
        if let Some(name) = &self.name {
            write!(f, " {name}")?;
        }
        writeln!(f, ">")?;
        fmt::Display::fmt(self, f)
    }
}

/// One line per row, entries as `0`/`1` separated by spaces.
impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let line: Vec<&str> = (0..self.cols)
                .map(|j| if self.get(i, j) { "1" } else { "0" })
                .collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Iterator over set-bit positions of a packed word slice.
pub struct Ones<'a> {
    words: &'a [u64],
    current: u64,
    base: usize,
}

impl<'a> Ones<'a> {
    fn new(words: &'a [u64]) -> Self {
        match words.split_first() {
            Some((&first, rest)) => Ones {
                words: rest,
                current: first,
                base: 0,
            },
            None => Ones {
                words,
                current: 0,
                base: 0,
            },
        }
    }
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        while self.current == 0 {
            let (&next, rest) = self.words.split_first()?;
            self.words = rest;
            self.current = next;
            self.base += WORD_BITS;
        }
        let bit = self.current.trailing_zeros() as usize;
        self.current &= self.current - 1;
        Some(self.base + bit)
    }
}

/// A `1 x n` boolean row vector.
///
/// Thin wrapper over a single-row [`BitMatrix`]; every matrix operation
/// applies to it through [`BitVector::as_matrix`].
#[derive(Clone, PartialEq, Eq)]
pub struct BitVector(BitMatrix);

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector(BitMatrix::zeros(1, len))
    }

    /// Unit vector with only bit `i` set.
    pub fn unit(len: usize, i: usize) -> Self {
        BitVector::from_indices(len, [i])
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        BitVector(BitMatrix::from_entries(
            1,
            len,
            indices.into_iter().map(|j| (0, j)),
        ))
    }

    pub fn len(&self) -> usize {
        self.0.cols
    }

    pub fn is_empty(&self) -> bool {
        self.0.cols == 0
    }

    pub fn get(&self, j: usize) -> bool {
        self.0.get(0, j)
    }

    pub fn count_ones(&self) -> usize {
        self.0.count_ones()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn ones(&self) -> Ones<'_> {
        self.0.row_ones(0)
    }

    pub fn words(&self) -> &[u64] {
        self.0.row_words(0)
    }

    pub fn with_name(self, name: impl Into<String>) -> Self {
        BitVector(self.0.with_name(name))
    }

    pub fn as_matrix(&self) -> &BitMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> BitMatrix {
        self.0
    }
}

impl TryFrom<BitMatrix> for BitVector {
    type Error = Error;

    fn try_from(m: BitMatrix) -> Result<Self> {
        if m.rows != 1 {
            return Err(Error::shape("vector", (1, m.cols), m.dims()));
        }
        Ok(BitVector(m))
    }
}

impl From<BitVector> for BitMatrix {
    fn from(v: BitVector) -> Self {
        v.0
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits: String = (0..self.len())
            .map(|j| if self.get(j) { '1' } else { '0' })
            .collect();
        write!(f, "BitVector[{bits}]")
    }
}
